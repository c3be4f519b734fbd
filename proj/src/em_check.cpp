#include "em4lab/em_check.hpp"

#include "em4lab/error.hpp"
#include "em4lab/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace em4lab {

std::vector<Vector> sample_grid(const Chart& chart, int points_per_axis, const DiffConfig& cfg) {
  if (points_per_axis < 1) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one point per axis");
  const int n = chart.dim();
  const Vector h = chart.steps(cfg);
  std::vector<std::vector<double>> axes(n);
  for (int k = 0; k < n; ++k) {
    const Interval& d = chart.spec().domain[k];
    const double inset = std::max(cfg.reach() * h[k], d.extent() / (2.0 * points_per_axis));
    const double lo = d.lo + inset, hi = d.hi - inset;
    for (int i = 0; i < points_per_axis; ++i)
      axes[k].push_back(points_per_axis == 1 ? d.mid() : lo + (hi - lo) * i / (points_per_axis - 1));
  }
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(points_per_axis);
  std::vector<Vector> out;
  out.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t t = 0; t < total; ++t) {
    Vector x(n);
    for (int k = 0; k < n; ++k) x[k] = axes[k][idx[k]];
    out.push_back(x);
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] < points_per_axis) break;
      idx[k] = 0;
    }
  }
  return out;
}

double EMReport::max_residual() const { return std::max({closed.max, coclosed.max, trace_free.max}); }

PointSample em_point(const Chart& chart, const TwoFormSource& source, const Vector& x, const DiffConfig& cfg) {
  const int n = chart.dim();
  const GeometryPoint geo = geometry_at(chart, x, cfg);
  const FormJet fj = source.at(x, cfg);
  const MetricPoint& g = geo.g;
  const TwoFormPoint F = TwoFormPoint::antisymmetrized(fj.value);

  PointSample s;
  s.x = x;
  s.closed = std::sqrt(std::max(0.0, three_form_norm2(g, ext_d(fj))));
  s.coclosed = std::sqrt(std::max(0.0, one_form_norm2(g, codiff(geo, fj))));

  const SymTensorPoint eta = stress(g, F);
  const double f2 = two_form_norm2(g, F);
  const double r = geo.scalar;
  const double f = (r - f2) / n;
  const Matrix t1 = trace_free(g, geo.ricci).components() - trace_free(g, eta).components();
  const Matrix t2 = geo.ricci.components() - eta.components() - f * g.components();
  s.trace_free = std::sqrt(std::max(0.0, tensor_norm2(g, t1)));
  s.f_form = std::sqrt(std::max(0.0, tensor_norm2(g, t2)));
  const double scale = 1.0 + geo.ricci.components().cwiseAbs().maxCoeff() + eta.components().cwiseAbs().maxCoeff();
  s.gap = (t1 - t2).cwiseAbs().maxCoeff() / scale;
  s.trace_gap = std::abs(trace(g, eta.components()) - f2);
  s.scalar = r;
  s.field_norm2 = f2;
  s.f = f;
  s.combination = (4.0 - 2.0 * n) * r + (n - 4.0) * f2;
  if (n == 2) {
    const TwoFormPoint unit = volume_form_2d(g, chart.orientation()) * (1.0 / std::sqrt(2.0));
    const double mag = std::sqrt(std::max(0.0, f2));
    s.plus_branch = std::sqrt(std::max(0.0, two_form_norm2(g, F - unit * mag)));
    s.minus_branch = std::sqrt(std::max(0.0, two_form_norm2(g, F + unit * mag)));
  }
  return s;
}

namespace {

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  s.max = *std::max_element(v.begin(), v.end());
  s.mean = pairwise_sum(v) / static_cast<double>(v.size());
  return s;
}

Constancy constancy_of(const std::vector<double>& v) {
  Constancy c;
  c.mean = pairwise_sum(v) / static_cast<double>(v.size());
  for (double x : v) c.max_deviation = std::max(c.max_deviation, std::abs(x - c.mean));
  return c;
}

template <class Get>
std::vector<double> column(const std::vector<PointSample>& samples, Get get) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const PointSample& s : samples) out.push_back(get(s));
  return out;
}

std::vector<PointSample> sample_all(const Chart& chart, const TwoFormSource& F, int points_per_axis,
                                    const DiffConfig& cfg) {
  const std::vector<Vector> grid = sample_grid(chart, points_per_axis, cfg);
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  std::vector<PointSample> samples(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { samples[i] = em_point(chart, F, grid[i], cfg); });
  return samples;
}

}  // namespace

void apply_verdicts(EMReport& r, double tol) {
  r.tolerance = tol;
  r.closed_ok = r.closed.max <= tol;
  r.coclosed_ok = r.coclosed.max <= tol;
  r.einstein_ok = r.trace_free.max <= tol;
  r.combination_ok = r.combination.holds(tol);
}

EMReport summarize(const std::vector<PointSample>& samples, int dim, int points_per_axis, double tol) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  EMReport r;
  r.dim = dim;
  r.points_per_axis = points_per_axis;
  r.grid_points = samples.size();
  r.closed = stat_of(column(samples, [](const PointSample& s) { return s.closed; }));
  r.coclosed = stat_of(column(samples, [](const PointSample& s) { return s.coclosed; }));
  r.trace_free = stat_of(column(samples, [](const PointSample& s) { return s.trace_free; }));
  r.f_form = stat_of(column(samples, [](const PointSample& s) { return s.f_form; }));
  r.formulation_gap = stat_of(column(samples, [](const PointSample& s) { return s.gap; })).max;
  r.trace_identity_gap = stat_of(column(samples, [](const PointSample& s) { return s.trace_gap; })).max;
  const std::vector<double> f = column(samples, [](const PointSample& s) { return s.f; });
  r.f.min = *std::min_element(f.begin(), f.end());
  r.f.max = *std::max_element(f.begin(), f.end());
  r.f.mean = pairwise_sum(f) / static_cast<double>(f.size());
  r.combination = constancy_of(column(samples, [](const PointSample& s) { return s.combination; }));
  r.scalar = constancy_of(column(samples, [](const PointSample& s) { return s.scalar; }));
  r.field_norm2 = constancy_of(column(samples, [](const PointSample& s) { return s.field_norm2; }));
  apply_verdicts(r, tol);
  return r;
}

EMReport em_residuals(const Chart& chart, const TwoFormSource& F, int points_per_axis, const DiffConfig& cfg,
                      double tol) {
  return summarize(sample_all(chart, F, points_per_axis, cfg), chart.dim(), points_per_axis, tol);
}

EMReport em_residuals(const Chart& chart, const FormField& F, int points_per_axis, const DiffConfig& cfg,
                      double tol) {
  if (F.degree() != 2 || F.dim() != chart.dim())
    throw Error(ErrorCode::kDimensionMismatch, "F must be a 2-form on the chart");
  const ExpressionFormSource src(chart, F);
  return em_residuals(chart, src, points_per_axis, cfg, tol);
}

ConservedScan conserved_scan(const std::vector<PointSample>& samples, int dim) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  ConservedScan c;
  c.dim = dim;
  c.combination = constancy_of(column(samples, [](const PointSample& s) { return s.combination; }));
  c.scalar = constancy_of(column(samples, [](const PointSample& s) { return s.scalar; }));
  c.field_norm =
      constancy_of(column(samples, [](const PointSample& s) { return std::sqrt(std::max(0.0, s.field_norm2)); }));
  for (const PointSample& s : samples) {
    c.plus_branch = std::max(c.plus_branch, s.plus_branch);
    c.minus_branch = std::max(c.minus_branch, s.minus_branch);
  }
  return c;
}

ConservedScan conserved_scan(const Chart& chart, const TwoFormSource& F, int points_per_axis,
                             const DiffConfig& cfg) {
  return conserved_scan(sample_all(chart, F, points_per_axis, cfg), chart.dim());
}

EinsteinReduction einstein_reduction_check(const std::vector<FieldPoint>& points, Orientation orientation,
                                           double tol) {
  EinsteinReduction out;
  out.points = points.size();
  for (const FieldPoint& p : points) {
    if (p.g.dim() != 4) throw Error(ErrorCode::kDimensionMismatch, "einstein reduction needs dimension 4");
    const FormSplit split = sd_split(p.g, orientation, p.F);
    const double plus = std::sqrt(std::max(0.0, two_form_norm2(p.g, split.plus)));
    const double minus = std::sqrt(std::max(0.0, two_form_norm2(p.g, split.minus)));
    if (std::min(plus, minus) > tol) continue;
    ++out.one_sided;
    const double eta0 = std::sqrt(std::max(0.0, tensor_norm2(p.g, trace_free(p.g, stress(p.g, p.F)).components())));
    const double full = std::sqrt(plus * plus + minus * minus);
    const double bound = tol * full + 1e-12 * (1.0 + full * full);
    out.max_eta0 = std::max(out.max_eta0, eta0);
    out.max_ratio = std::max(out.max_ratio, eta0 / bound);
    if (eta0 > bound) out.pass = false;
  }
  return out;
}

}  // namespace em4lab
