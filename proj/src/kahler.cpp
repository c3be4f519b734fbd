#include "em4lab/kahler.hpp"

#include "em4lab/error.hpp"
#include "em4lab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace em4lab {

namespace {

std::vector<Expression> flatten(const ExpressionMatrix& m) {
  std::vector<Expression> out;
  for (const auto& row : m)
    for (const auto& e : row) out.push_back(e);
  return out;
}

Matrix unflatten(const Vector& v, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = v[i * n + j];
  return m;
}

double spectral(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()[0]; }

/// Operator norm of a (1,1) tensor in a g-orthonormal frame.
double mixed_norm(const Matrix& g, const Matrix& a) {
  const Eigen::LLT<Matrix> llt(g);
  const Matrix l = llt.matrixL();
  const Matrix lt_inv = l.transpose().inverse();
  return spectral(l.transpose() * a * lt_inv);
}

/// Operator norm of a bilinear form in a g-orthonormal frame.
double bilinear_norm(const Matrix& g, const Matrix& b) {
  const Eigen::LLT<Matrix> llt(g);
  const Matrix l_inv = Matrix(llt.matrixL()).inverse();
  return spectral(l_inv * b * l_inv.transpose());
}

double norm(const MetricPoint& g, const TwoFormPoint& f) { return std::sqrt(std::max(0.0, two_form_norm2(g, f))); }

void require_dim4(const ChartSpec& chart, const ExpressionMatrix& j) {
  if (chart.dim() != 4) throw Error(ErrorCode::kDimensionMismatch, "Kahler checks need dimension 4");
  if (j.size() != 4) throw Error(ErrorCode::kDimensionMismatch, "J must be 4 x 4");
  for (const auto& row : j)
    if (row.size() != 4) throw Error(ErrorCode::kDimensionMismatch, "J must be 4 x 4");
}

struct KahlerSample {
  double j_squared = 0.0;
  double compatibility = 0.0;
  double parallel = 0.0;
  double closed = 0.0;
  double scalar = 0.0;
  double duality = 0.0;  // <*omega, omega> / |omega|^2 for the positive orientation
};

}  // namespace

KahlerData kahler_data(const ExampleManifold& m) {
  if (!m.J) throw Error(ErrorCode::kInvalidArgument, m.name + " has no complex structure");
  return KahlerData{m.chart, *m.J};
}

KahlerField::KahlerField(const Chart& chart, const ExpressionMatrix& J)
    : chart_(chart), j_prog_(chart.compile(flatten(J))), omega_(chart.dim(), 2) {
  require_dim4(chart.spec(), J);
  const ExpressionMatrix w = kahler_form_expressions(chart.spec().metric, J);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (!w[i][j].is_zero_literal()) omega_.set({i, j}, w[i][j]);
}

Matrix KahlerField::J(const Vector& x) const {
  std::vector<double> in(x.data(), x.data() + x.size());
  const std::vector<double> v = j_prog_(in);
  return unflatten(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())), 4);
}

KahlerPoint KahlerField::at(const Vector& x, bool check_domain) const {
  GeometryPoint geo = geometry_at(chart_, x, DiffConfig::jets(), check_domain);
  const Matrix j = J(x);
  const TwoFormPoint omega = TwoFormPoint::antisymmetrized(j.transpose() * geo.g.components());
  const TwoFormPoint rho = TwoFormPoint::antisymmetrized(j.transpose() * geo.ricci.components());
  const TwoFormPoint rho0 = rho - omega * (geo.scalar / 4.0);
  return KahlerPoint{std::move(geo), j, omega, rho, rho0};
}

Matrix lebrun_value(const GeometryPoint& geo, const Matrix& J, double a) {
  const Matrix jt = J.transpose();
  const TwoFormPoint omega = TwoFormPoint::antisymmetrized(jt * geo.g.components());
  const TwoFormPoint rho = TwoFormPoint::antisymmetrized(jt * geo.ricci.components());
  const TwoFormPoint rho0 = rho - omega * (geo.scalar / 4.0);
  return (omega * a + rho0 * (0.5 / a)).components();
}

KahlerReport kahler_verify(const KahlerData& data, int points_per_axis, const DiffConfig& cfg, double tol) {
  require_dim4(data.chart, data.J);
  const Chart chart(data.chart);
  const KahlerField field(chart, data.J);
  const ExpressionFormSource omega_src(chart, field.omega_field());
  const Program jp = chart.compile(flatten(data.J));
  const std::vector<Vector> grid = sample_grid(chart, points_per_axis, cfg);
  std::vector<KahlerSample> samples(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const Vector& x = grid[i];
    KahlerSample& s = samples[i];
    const GeometryPoint geo = geometry_at(chart, x, cfg);
    const Matrix& g = geo.g.components();
    const FieldDerivatives fd = chart.differentiate(jp, x, cfg, false);
    const Matrix j = unflatten(fd.value, 4);
    std::vector<Matrix> dj(4, Matrix(4, 4));
    for (int k = 0; k < 4; ++k)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) dj[k](a, b) = fd.d(a * 4 + b, k);
    s.j_squared = mixed_norm(g, j * j + Matrix::Identity(4, 4));
    s.compatibility = bilinear_norm(g, j.transpose() * g * j - g);
    s.parallel = std::sqrt(std::max(0.0, mixed_rank3_norm2(geo.g, cov_deriv_mixed(geo, j, dj))));
    const FormJet w = omega_src.at(x, cfg);
    s.closed = std::sqrt(std::max(0.0, three_form_norm2(geo.g, ext_d(w))));
    s.scalar = geo.scalar;
    const TwoFormPoint omega = TwoFormPoint::antisymmetrized(w.value);
    const double w2 = two_form_norm2(geo.g, omega);
    s.duality = w2 > 0.0 ? contract2(geo.g, hodge_star(geo.g, Orientation::kPositive, omega).components(),
                                     omega.components()) / w2
                         : 0.0;
  });

  KahlerReport r;
  r.grid_points = grid.size();
  r.tolerance = tol;
  std::vector<double> scalars, duality;
  for (const KahlerSample& s : samples) {
    r.j_squared = std::max(r.j_squared, s.j_squared);
    r.compatibility = std::max(r.compatibility, s.compatibility);
    r.parallel = std::max(r.parallel, s.parallel);
    r.closed = std::max(r.closed, s.closed);
    scalars.push_back(s.scalar);
    duality.push_back(s.duality);
  }
  r.scalar.mean = pairwise_sum(scalars) / static_cast<double>(scalars.size());
  for (double v : scalars) r.scalar.max_deviation = std::max(r.scalar.max_deviation, std::abs(v - r.scalar.mean));
  const double mean_duality = pairwise_sum(duality) / static_cast<double>(duality.size());
  r.orientation = mean_duality >= 0.0 ? Orientation::kPositive : Orientation::kNegative;
  r.pass = r.j_squared <= tol && r.compatibility <= tol && r.parallel <= tol && r.closed <= tol &&
           r.scalar.holds(tol);
  return r;
}

LebrunSource::LebrunSource(const Chart& chart, const ExpressionMatrix& J, double a)
    : field_(chart, J), fd_(chart, [this](const Vector& y) { return value(y); }), a_(a) {
  if (!(a > 0.0)) throw Error(ErrorCode::kInvalidArgument, "LeBrun parameter a must be > 0");
}

Matrix LebrunSource::value(const Vector& x) const {
  const KahlerPoint p = field_.at(x);
  return (p.omega * a_ + p.rho0 * (0.5 / a_)).components();
}

FormJet LebrunSource::at(const Vector& x, const DiffConfig& cfg) const { return fd_.at(x, cfg); }

LebrunReport lebrun_field(const KahlerData& data, double a, int points_per_axis, const DiffConfig& cfg, double tol) {
  if (!(a > 0.0)) throw Error(ErrorCode::kInvalidArgument, "LeBrun parameter a must be > 0");
  LebrunReport r;
  r.a = a;
  r.kahler = kahler_verify(data, points_per_axis, cfg, tol);
  if (!r.kahler.pass) {
    std::ostringstream os;
    os << "Kahler verification failed: |J^2+I| = " << r.kahler.j_squared << ", |g(J.,J.)-g| = "
       << r.kahler.compatibility << ", |nabla J| = " << r.kahler.parallel << ", |d omega| = " << r.kahler.closed
       << ", R deviation = " << r.kahler.scalar.max_deviation;
    throw Error(ErrorCode::kValidation, os.str());
  }
  const Orientation o = r.kahler.orientation;
  const Chart chart(data.chart);
  const LebrunSource src(chart, data.J, a);
  r.em = em_residuals(chart, src, points_per_axis, cfg, tol);

  const KahlerField field(chart, data.J);
  const std::vector<Vector> grid = sample_grid(chart, points_per_axis, cfg);
  r.grid_points = grid.size();
  struct Defects {
    double plus, minus, norm, stress, f2, rho0;
  };
  std::vector<Defects> d(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const KahlerPoint p = field.at(grid[i]);
    const MetricPoint& g = p.geo.g;
    const TwoFormPoint F = p.omega * a + p.rho0 * (0.5 / a);
    const FormSplit split = sd_split(g, o, F);
    const TwoFormPoint want_plus = p.omega * a;
    const TwoFormPoint want_minus = p.rho0 * (0.5 / a);
    const double rho0_norm = norm(g, p.rho0);
    const double f2 = two_form_norm2(g, F);
    const Matrix eta0 = trace_free(g, stress(g, F)).components();
    const Matrix ric0 = trace_free(g, p.geo.ricci).components();
    d[i].plus = norm(g, split.plus - want_plus) / (1.0 + norm(g, want_plus));
    d[i].minus = norm(g, split.minus - want_minus) / (1.0 + norm(g, want_minus));
    d[i].norm = std::abs(f2 - (4 * a * a + rho0_norm * rho0_norm / (4 * a * a)));
    d[i].stress = std::sqrt(std::max(0.0, tensor_norm2(g, eta0 - ric0)));
    d[i].f2 = f2;
    d[i].rho0 = rho0_norm;
  });
  std::vector<double> f2s, rhos;
  for (const Defects& x : d) {
    r.plus_defect = std::max(r.plus_defect, x.plus);
    r.minus_defect = std::max(r.minus_defect, x.minus);
    r.norm_defect = std::max(r.norm_defect, x.norm);
    r.stress_defect = std::max(r.stress_defect, x.stress);
    f2s.push_back(x.f2);
    rhos.push_back(x.rho0);
  }
  auto range = [](const std::vector<double>& v) {
    Range out;
    out.min = *std::min_element(v.begin(), v.end());
    out.max = *std::max_element(v.begin(), v.end());
    out.mean = pairwise_sum(v) / static_cast<double>(v.size());
    return out;
  };
  r.field_norm2 = range(f2s);
  r.rho0_norm = range(rhos);
  r.pass = r.em.solution() && r.plus_defect <= tol && r.minus_defect <= tol &&
           r.norm_defect <= tol * (1.0 + r.field_norm2.max) && r.stress_defect <= tol;
  return r;
}

namespace {

struct WeylDefects {
  double norm = 0.0;
  double eig = 0.0;
};

WeylDefects weyl_defects(const CurvatureBlocks& b) {
  const double r = b.scalar;
  WeylDefects w;
  w.norm = std::abs(b.wplus_norm2() - r * r / 24.0) / (1.0 + r * r);
  const Eigen::Vector3d ev = b.wplus_eigenvalues();
  const Eigen::Vector3d want(r / 6.0, -r / 12.0, -r / 12.0);
  w.eig = (ev - want).cwiseAbs().maxCoeff() / (1.0 + std::abs(r));
  return w;
}

}  // namespace

KahlerWeylReport kahler_weyl_certify(const KahlerData& data, int points_per_axis, const DiffConfig& cfg, double tol,
                                     std::optional<Orientation> orientation) {
  require_dim4(data.chart, data.J);
  const Chart chart(data.chart);
  const Orientation o = orientation.value_or(chart.orientation());
  const std::vector<Vector> grid = sample_grid(chart, points_per_axis, cfg);
  std::vector<WeylDefects> here(grid.size()), there(grid.size());
  std::vector<CurvatureBlocks> blocks(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const GeometryPoint geo = geometry_at(chart, grid[i], cfg);
    blocks[i] = curvature_blocks(geo.g, o, geo.riemann);
    here[i] = weyl_defects(blocks[i]);
    there[i] = weyl_defects(curvature_blocks(geo.g, flipped(o), geo.riemann));
  });
  KahlerWeylReport r;
  r.grid_points = grid.size();
  r.orientation = o;
  r.tolerance = tol;
  double flipped_norm = 0.0, flipped_eig = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    r.norm_defect = std::max(r.norm_defect, here[i].norm);
    r.eigenvalue_defect = std::max(r.eigenvalue_defect, here[i].eig);
    flipped_norm = std::max(flipped_norm, there[i].norm);
    flipped_eig = std::max(flipped_eig, there[i].eig);
  }
  if (!grid.empty()) {
    r.eigenvalues = blocks[0].wplus_eigenvalues();
    r.wplus_norm2 = blocks[0].wplus_norm2();
    r.scalar = blocks[0].scalar;
  }
  r.pass = r.norm_defect <= tol && r.eigenvalue_defect <= tol;
  if (!r.pass && flipped_norm <= tol && flipped_eig <= tol)
    throw Error(ErrorCode::kOrientation,
                "Kahler curvature pattern appears in W- rather than W+: the orientation is not the complex one");
  return r;
}

}  // namespace em4lab
