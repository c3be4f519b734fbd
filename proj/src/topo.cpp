#include "em4lab/topo.hpp"

#include "em4lab/error.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

namespace em4lab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void atomic_min(std::atomic<double>& a, double v) {
  double cur = a.load(std::memory_order_relaxed);
  while (v < cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

void atomic_max(std::atomic<double>& a, double v) {
  double cur = a.load(std::memory_order_relaxed);
  while (v > cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

Estimate estimate(const std::pair<double, double>& p) { return Estimate{p.first, p.second}; }

constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

int pair_index(int i, int j) {
  static constexpr int table[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  return table[i][j];
}

/// Columns: unit self-dual then anti-self-dual bivectors for the positive orientation.
Eigen::Matrix<double, 6, 6> duality_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix<double, 6, 6> b = Eigen::Matrix<double, 6, 6>::Zero();
  b(0, 0) = r, b(5, 0) = r;
  b(1, 1) = r, b(4, 1) = -r;
  b(2, 2) = r, b(3, 2) = r;
  b(0, 3) = r, b(5, 3) = -r;
  b(1, 4) = r, b(4, 4) = r;
  b(2, 5) = r, b(3, 5) = -r;
  return b;
}

const Eigen::Matrix<double, 6, 6>& basis() {
  static const Eigen::Matrix<double, 6, 6> b = duality_basis();
  return b;
}

Eigen::Matrix<double, 6, 3> half(Orientation o, bool plus) {
  const bool first = (o == Orientation::kPositive) == plus;
  return basis().middleCols<3>(first ? 0 : 3);
}

}  // namespace

Eigen::Matrix4d Curvature4::frame() const {
  const Eigen::Matrix4d l = g.llt().matrixL();
  return l.transpose().triangularView<Eigen::Upper>().solve(Eigen::Matrix4d::Identity());
}

Eigen::Matrix3d Curvature4::block(Orientation o, bool plus) const {
  const Eigen::Matrix<double, 6, 3> s = half(o, plus);
  return s.transpose() * op * s;
}

double Curvature4::weyl_norm2(Orientation o, bool plus) const {
  const Eigen::Matrix3d w = block(o, plus) - (scalar / 12.0) * Eigen::Matrix3d::Identity();
  return w.squaredNorm();
}

double Curvature4::ricci0_norm2() const {
  const Eigen::Matrix4d r0 = ricci - 0.25 * scalar * g;
  const Eigen::Matrix4d m = ginv * r0;
  return (m * m).trace();
}

Curvature4Evaluator::Curvature4Evaluator(const Chart& chart) : chart_(&chart) {
  if (chart.dim() != 4) throw Error(ErrorCode::kDimensionMismatch, "fixed-size curvature needs dimension 4");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) slot_[4 * i + j] = chart.metric_slot(i, j);
}

Curvature4 Curvature4Evaluator::at(const Vector& x) const {
  using J4 = Jet<4>;
  thread_local std::vector<J4> scratch;
  thread_local std::vector<J4> out;
  const Program& prog = chart_->metric_program();
  out.resize(prog.num_outputs());
  std::array<J4, 4> in;
  for (int k = 0; k < 4; ++k) in[k] = J4::variable(x[k], k);
  prog.run(in.data(), out.data(), scratch);

  Curvature4 c;
  std::array<Eigen::Matrix4d, 4> dg;
  std::array<Eigen::Matrix4d, 10> ddg;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const J4& e = out[slot_[4 * i + j]];
      c.g(i, j) = e.v;
      for (int k = 0; k < 4; ++k) dg[k](i, j) = e.d[k];
      for (int h = 0; h < 10; ++h) ddg[h](i, j) = e.h[h];
    }
  if (!c.g.allFinite()) throw Error(ErrorCode::kNotPositiveDefinite, "metric has non-finite components");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(c.g);
  const Eigen::Vector4d ev = es.eigenvalues();
  if (!(ev[3] > 0.0) || !(ev[0] > kSpdRelativeTolerance * ev[3]))
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "metric is not positive definite (eigenvalue range [%.3g, %.3g])", ev[0], ev[3]);
    throw Error(ErrorCode::kNotPositiveDefinite, buf);
  }
  c.condition = ev[3] / ev[0];
  c.ginv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  c.sqrt_det = std::sqrt(ev.prod());
  auto dd = [&](int a, int b) -> const Eigen::Matrix4d& { return ddg[J4::hidx(a, b)]; };

  // Christoffel symbols of the first (lowered index l) and second kind.
  std::array<Eigen::Matrix4d, 4> g1, g2;
  for (int l = 0; l < 4; ++l)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g1[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  for (int k = 0; k < 4; ++k) {
    g2[k].setZero();
    for (int l = 0; l < 4; ++l) g2[k] += c.ginv(k, l) * g1[l];
  }

  // R_ijkl on pairs, all indices lowered.
  Eigen::Matrix<double, 6, 6> p;
  for (int a = 0; a < 6; ++a)
    for (int b = a; b < 6; ++b) {
      const int i = kPairs[a][0], j = kPairs[a][1], k = kPairs[b][0], l = kPairs[b][1];
      double r = 0.5 * (dd(j, k)(i, l) + dd(i, l)(j, k) - dd(j, l)(i, k) - dd(i, k)(j, l));
      for (int q = 0; q < 4; ++q) r += g1[q](j, k) * g2[q](i, l) - g1[q](j, l) * g2[q](i, k);
      p(a, b) = r;
      p(b, a) = r;
    }

  auto riem = [&](int i, int j, int k, int l) {
    if (i == j || k == l) return 0.0;
    const double s = ((i < j) == (k < l)) ? 1.0 : -1.0;
    return s * p(pair_index(i, j), pair_index(k, l));
  };
  for (int j = 0; j < 4; ++j)
    for (int l = j; l < 4; ++l) {
      double r = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) r += c.ginv(i, k) * riem(i, j, k, l);
      c.ricci(j, l) = r;
      c.ricci(l, j) = r;
    }
  c.scalar = (c.ginv.cwiseProduct(c.ricci)).sum();

  const Eigen::Matrix4d e = c.frame();
  Eigen::Matrix<double, 6, 6> bv;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const int i = kPairs[a][0], j = kPairs[a][1], u = kPairs[b][0], v = kPairs[b][1];
      bv(a, b) = e(i, u) * e(j, v) - e(j, u) * e(i, v);
    }
  c.op = bv.transpose() * p * bv;
  return c;
}

QuadratureResult integrate(const IntegrationDomain& domain, int m, const CurvatureIntegrand& f, int nodes,
                           int panels) {
  const Curvature4Evaluator eval(domain.chart());
  return integrate_density(
      domain, m,
      [&](const Vector& x, double* out) {
        const Curvature4 c = eval.at(x);
        f(x, c, out);
        return c.sqrt_det;
      },
      nodes, panels);
}

CharNumbers characteristic_numbers(const IntegrationDomain& domain, int nodes, std::optional<Orientation> orientation,
                                   int panels) {
  if (domain.chart().dim() != 4) throw Error(ErrorCode::kDimensionMismatch, "characteristic numbers need dimension 4");
  const Orientation o = orientation.value_or(domain.chart().orientation());
  const CurvatureIntegrand f = [o](const Vector&, const Curvature4& c, double* out) {
    out[0] = 1.0;
    out[1] = c.weyl_norm2(o, true);
    out[2] = c.weyl_norm2(o, false);
    out[3] = c.scalar * c.scalar;
    out[4] = c.ricci0_norm2();
  };
  const QuadratureResult q = integrate(domain, 5, f, nodes, panels);
  CharNumbers c;
  c.nodes = nodes;
  c.orientation = o;
  c.volume = Estimate{q.value[0], q.error(0)};
  const double k8 = 1.0 / (8 * kPi * kPi), k12 = 1.0 / (12 * kPi * kPi), k4 = 1.0 / (4 * kPi * kPi);
  c.chi = estimate(q.combine({0.0, k8, k8, k8 / 24, -k8 / 2}));
  c.tau = estimate(q.combine({0.0, k12, -k12, 0.0, 0.0}));
  c.combo = estimate(q.combine({0.0, 2 * k4, 0.0, k4 / 24, -k4 / 2}));
  c.tau_kahler = estimate(q.combine({0.0, 0.0, -k12, k12 / 24, 0.0}));
  return c;
}

CorollaryReport corollary_report(const IntegrationDomain& domain, const FieldAtNode& F, int nodes,
                                 std::optional<Orientation> orientation, const CharNumbers* reference, int panels,
                                 double max_condition) {
  if (domain.chart().dim() != 4) throw Error(ErrorCode::kDimensionMismatch, "corollary report needs dimension 4");
  const Orientation o = orientation.value_or(domain.chart().orientation());
  std::atomic<double> min_i{INFINITY}, min_f{INFINITY}, max_f{-INFINITY}, max_defect{0.0};
  std::atomic<long> f_zero{0}, count{0}, skipped{0};
  const Eigen::Matrix<double, 6, 3> sp = half(o, true), sm = half(o, false);
  const CurvatureIntegrand f = [&](const Vector& x, const Curvature4& c, double* out) {
    const Matrix fc = F(x, c);
    if (fc.rows() != 4 || fc.cols() != 4) throw Error(ErrorCode::kDimensionMismatch, "field must be 4x4");
    const Eigen::Matrix4d e = c.frame();
    const Eigen::Matrix4d a = e.transpose() * (0.5 * (fc - fc.transpose())) * e;
    Eigen::Matrix<double, 6, 1> fp;
    for (int k = 0; k < 6; ++k) fp[k] = a(kPairs[k][0], kPairs[k][1]);
    const double p2 = 2.0 * (sp.transpose() * fp).squaredNorm();
    const double m2 = 2.0 * (sm.transpose() * fp).squaredNorm();
    const double f2 = p2 + m2;
    const double fv = (c.scalar - f2) / 4.0;
    const double integrand = (f2 + 4 * fv) * (f2 + 4 * fv) - 4 * p2 * m2;
    const double cert = integrand - 8 * fv * f2 - 16 * fv * fv - (p2 - m2) * (p2 - m2);
    out[0] = integrand;
    if (c.condition > max_condition) {
      skipped.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    atomic_min(min_i, integrand);
    atomic_min(min_f, fv);
    atomic_max(max_f, fv);
    atomic_max(max_defect, std::abs(cert) / (1.0 + std::abs(integrand)));
    if (std::abs(fv) <= 1e-9) f_zero.fetch_add(1, std::memory_order_relaxed);
    count.fetch_add(1, std::memory_order_relaxed);
  };
  const QuadratureResult q = integrate(domain, 1, f, nodes, panels);
  CorollaryReport r;
  r.nodes = nodes;
  const double k = 1.0 / (32 * kPi * kPi);
  r.integral = estimate(q.combine({k}));
  // Counters include the coarse pass; both passes see the same pointwise bounds.
  r.min_integrand = min_i.load();
  r.min_f = min_f.load();
  r.max_f = max_f.load();
  r.pointwise_nodes = count.load();
  r.skipped_nodes = skipped.load();
  r.f_nonnegative = r.min_f >= -1e-9;
  r.certificate_defect = max_defect.load();
  r.f_zero_fraction = count.load() > 0 ? static_cast<double>(f_zero.load()) / static_cast<double>(count.load()) : 0.0;
  CharNumbers own;
  if (!reference) {
    own = characteristic_numbers(domain, nodes, o, panels);
    reference = &own;
  }
  r.two_chi_plus_three_tau = Estimate{2 * reference->chi.value + 3 * reference->tau.value,
                                      2 * reference->chi.error + 3 * reference->tau.error};
  r.discrepancy = std::abs(r.integral.value - r.two_chi_plus_three_tau.value);
  r.combined_error = r.integral.error + r.two_chi_plus_three_tau.error;
  r.agrees = r.discrepancy <= std::max(r.combined_error, 1e-10 * (1.0 + std::abs(r.integral.value)));
  r.pass = r.agrees && r.f_nonnegative && r.min_integrand >= -1e-9 && r.certificate_defect <= 1e-9;
  return r;
}

}  // namespace em4lab
