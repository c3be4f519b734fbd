#include "em4lab/quadrature.hpp"

#include "em4lab/error.hpp"
#include "em4lab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace em4lab {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "Gauss-Legendre rule needs at least one node");
  GaussLegendre r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = w;
    r.nodes[i] = -x;
    r.weights[i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

namespace {

struct Axis {
  std::vector<double> u;
  std::vector<double> w;
};

Axis make_axis(const Interval& iv, const GaussLegendre& gl, int panels) {
  Axis a;
  const double width = iv.extent() / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = iv.lo + p * width;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      a.u.push_back(lo + 0.5 * width * (gl.nodes[k] + 1.0));
      a.w.push_back(0.5 * width * gl.weights[k]);
    }
  }
  return a;
}

/// f(u, out, raw): out is accumulated with the product weight, raw feeds the
/// running max of |integrand|.
template <class F>
void run_rule(const std::vector<Interval>& box, int nodes, int panels, int m, F&& f, std::vector<double>& value,
              std::vector<double>* max_abs) {
  if (box.empty()) throw Error(ErrorCode::kInvalidArgument, "empty integration box");
  if (panels < 1) throw Error(ErrorCode::kInvalidArgument, "panels must be >= 1");
  const int d = static_cast<int>(box.size());
  const GaussLegendre gl = gauss_legendre(nodes);
  std::vector<Axis> axes;
  for (const Interval& iv : box) axes.push_back(make_axis(iv, gl, panels));
  const std::size_t slabs = axes[0].u.size();
  std::vector<std::vector<double>> slab_sum(slabs, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> slab_max(slabs, std::vector<double>(m, 0.0));

  parallel_for(slabs, [&](std::size_t i0) {
    Vector u(d);
    u[0] = axes[0].u[i0];
    std::vector<std::vector<double>> acc(d, std::vector<double>(m, 0.0));
    std::vector<double> out(m), raw(m);
    std::vector<double>& mx = slab_max[i0];
    // Odometer over axes 1..d-1; acc[level] collects the partial sum of that level.
    std::vector<std::size_t> idx(d, 0);
    if (d == 1) {
      f(u, out.data(), raw.data());
      for (int c = 0; c < m; ++c) {
        acc[0][c] = out[c];
        mx[c] = std::max(mx[c], std::abs(raw[c]));
      }
    } else {
      for (int k = 1; k < d; ++k) u[k] = axes[k].u[0];
      while (true) {
        f(u, out.data(), raw.data());
        for (int c = 0; c < m; ++c) {
          acc[d - 1][c] += axes[d - 1].w[idx[d - 1]] * out[c];
          mx[c] = std::max(mx[c], std::abs(raw[c]));
        }
        int level = d - 1;
        while (level >= 1) {
          if (++idx[level] < axes[level].u.size()) {
            u[level] = axes[level].u[idx[level]];
            break;
          }
          // Level finished: fold into the parent with the parent's weight.
          idx[level] = 0;
          u[level] = axes[level].u[0];
          const double w = level - 1 >= 1 ? axes[level - 1].w[idx[level - 1]] : 1.0;
          for (int c = 0; c < m; ++c) {
            acc[level - 1][c] += w * acc[level][c];
            acc[level][c] = 0.0;
          }
          --level;
        }
        if (level == 0) break;
      }
    }
    for (int c = 0; c < m; ++c) slab_sum[i0][c] = axes[0].w[i0] * acc[0][c];
  });

  value.assign(m, 0.0);
  if (max_abs) max_abs->assign(m, 0.0);
  for (int c = 0; c < m; ++c) {
    std::vector<double> col(slabs);
    for (std::size_t i = 0; i < slabs; ++i) col[i] = slab_sum[i][c];
    value[c] = pairwise_sum(col);
    if (max_abs)
      for (std::size_t i = 0; i < slabs; ++i) (*max_abs)[c] = std::max((*max_abs)[c], slab_max[i][c]);
  }
}

void check_finite(const double* v, int m, const Vector& u) {
  for (int c = 0; c < m; ++c)
    if (!std::isfinite(v[c])) {
      std::ostringstream os;
      os << "non-finite integrand component " << c << " at node (";
      for (int k = 0; k < u.size(); ++k) os << (k ? ", " : "") << u[k];
      os << ")";
      throw Error(ErrorCode::kQuadrature, os.str());
    }
}

}  // namespace

std::vector<double> product_rule(const std::vector<Interval>& box, int nodes, int panels, int m,
                                 const std::function<void(const Vector& u, double* out)>& f) {
  std::vector<double> value;
  run_rule(
      box, nodes, panels, m,
      [&](const Vector& u, double* out, double* raw) {
        f(u, out);
        check_finite(out, m, u);
        std::copy(out, out + m, raw);
      },
      value, nullptr);
  return value;
}

IntegrationDomain::IntegrationDomain(ChartSpec chart, IntegrationSpec spec)
    : chart_(std::make_unique<Chart>(std::move(chart))), spec_(std::move(spec)) {
  if (static_cast<int>(spec_.map.size()) != chart_->dim())
    throw Error(ErrorCode::kDimensionMismatch, "integration map needs one expression per chart coordinate");
  if (spec_.box.size() != spec_.vars.size())
    throw Error(ErrorCode::kDimensionMismatch, "integration box needs one interval per variable");
  for (const Interval& iv : spec_.box)
    if (!(iv.hi > iv.lo) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw Error(ErrorCode::kInvalidArgument, "integration box intervals must be finite with lo < hi");
  std::vector<Expression> outs = spec_.map;
  outs.push_back(spec_.jacobian);
  map_prog_ = Program(outs, spec_.vars, chart_->spec().params);
}

IntegrationDomain::IntegrationDomain(const ExampleManifold& m)
    : IntegrationDomain(m.chart, m.integration ? *m.integration : throw Error(ErrorCode::kInvalidArgument,
                                                                             m.name + " has no integration domain")) {}

void IntegrationDomain::map(const Vector& u, Vector& x, double& jacobian) const {
  const int n = chart_->dim();
  std::vector<double> in(u.data(), u.data() + u.size());
  const std::vector<double> v = map_prog_(in);
  x.resize(n);
  for (int k = 0; k < n; ++k) x[k] = v[k];
  jacobian = std::abs(v[n]);
}

double QuadratureResult::error(int k) const {
  return std::abs(value[k] - coarse[k]) + excised_volume * max_abs[k];
}

std::pair<double, double> QuadratureResult::combine(const std::vector<double>& c) const {
  double v = 0.0, vc = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    v += c[k] * value[k];
    vc += c[k] * coarse[k];
    mx += std::abs(c[k]) * max_abs[k];
  }
  return {v, std::abs(v - vc) + excised_volume * mx};
}

namespace {

template <class PointFn>
QuadratureResult integrate_impl(const IntegrationDomain& domain, int m, PointFn&& point, int nodes, int panels) {
  if (nodes < 2) throw Error(ErrorCode::kInvalidArgument, "quadrature needs at least 2 nodes per axis");
  QuadratureResult r;
  r.nodes = nodes;
  r.panels = panels;
  r.excised_volume = domain.spec().excised_volume;
  auto body = [&](const Vector& u, double* out, double* raw) {
    Vector x;
    double jac = 0.0;
    domain.map(u, x, jac);
    const double density = point(x, raw) * jac;
    check_finite(raw, m, u);
    for (int c = 0; c < m; ++c) out[c] = raw[c] * density;
  };
  run_rule(domain.spec().box, nodes, panels, m, body, r.value, &r.max_abs);
  run_rule(domain.spec().box, (nodes + 1) / 2, panels, m, body, r.coarse, nullptr);
  return r;
}

}  // namespace

QuadratureResult integrate(const IntegrationDomain& domain, int m, const MetricIntegrand& f, int nodes, int panels) {
  const Chart& chart = domain.chart();
  return integrate_impl(
      domain, m,
      [&](const Vector& x, double* raw) {
        const MetricPoint g = chart.metric(x);
        f(x, g, raw);
        return g.sqrt_det();
      },
      nodes, panels);
}

QuadratureResult integrate(const IntegrationDomain& domain, int m, const GeometryIntegrand& f, int nodes,
                           int panels) {
  const Chart& chart = domain.chart();
  return integrate_impl(
      domain, m,
      [&](const Vector& x, double* raw) {
        const GeometryPoint geo = geometry_at(chart, x, DiffConfig::jets(), false);
        f(geo, raw);
        return geo.g.sqrt_det();
      },
      nodes, panels);
}

QuadratureResult integrate_density(const IntegrationDomain& domain, int m, const DensityIntegrand& f, int nodes,
                                   int panels) {
  return integrate_impl(domain, m, [&](const Vector& x, double* raw) { return f(x, raw); }, nodes, panels);
}

}  // namespace em4lab
