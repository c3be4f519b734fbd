#include "em4lab/tensor.hpp"

#include "em4lab/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

namespace em4lab {

namespace {

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

void require_dim4(int n, const char* what) {
  if (n != 4) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " is only defined in dimension 4 (got " + std::to_string(n) + ")");
  }
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

constexpr std::array<std::array<int, 2>, 6> kPairs = {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// Sign of the permutation (i j k l) of (0 1 2 3); 0 if any index repeats.
int levi_civita4(int i, int j, int k, int l) {
  std::array<int, 4> p = {i, j, k, l};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (p[a] == p[b]) return 0;
  int s = 1;
  for (int a = 0; a < 4; ++a) {
    while (p[a] != a) {
      std::swap(p[a], p[p[a]]);
      s = -s;
    }
  }
  return s;
}

using Mat6 = Eigen::Matrix<double, 6, 6>;

// Induced inner product of the coordinate 2-forms dx^i^dx^j (i<j), normalized
// so that an orthonormal coframe gives orthonormal e^i^e^j.
Mat6 pair_gram(const MetricPoint& g) {
  const Matrix& gi = g.inverse();
  Mat6 out;
  for (int a = 0; a < 6; ++a) {
    const auto [i, j] = kPairs[a];
    for (int b = 0; b < 6; ++b) {
      const auto [k, l] = kPairs[b];
      out(a, b) = gi(i, k) * gi(j, l) - gi(i, l) * gi(j, k);
    }
  }
  return out;
}

// Gram-Schmidt of the lexicographic coordinate 2-forms against `gram`.
// Columns of the result are lowered pair components of orthonormal forms.
Mat6 orthonormal_pair_basis(const Mat6& gram) {
  Mat6 e = Mat6::Identity();
  for (int a = 0; a < 6; ++a) {
    Eigen::Matrix<double, 6, 1> v = e.col(a);
    for (int b = 0; b < a; ++b) {
      v -= (e.col(b).transpose() * gram * v)(0, 0) * e.col(b);
    }
    const double nrm2 = (v.transpose() * gram * v)(0, 0);
    e.col(a) = v / std::sqrt(nrm2);
  }
  return e;
}

// Orthonormal basis of the range of a rank-3 projector, by Gram-Schmidt with
// column pivoting (largest remaining residual first, lowest index on ties).
Eigen::Matrix<double, 6, 3> projector_basis(const Mat6& proj) {
  Eigen::Matrix<double, 6, 3> out;
  Mat6 residual = proj;
  for (int c = 0; c < 3; ++c) {
    int best = 0;
    double best_norm = -1.0;
    for (int a = 0; a < 6; ++a) {
      const double nrm = residual.col(a).norm();
      if (nrm > best_norm * (1.0 + 1e-12)) {
        best = a;
        best_norm = nrm;
      }
    }
    Eigen::Matrix<double, 6, 1> v = residual.col(best) / best_norm;
    out.col(c) = v;
    for (int a = 0; a < 6; ++a) residual.col(a) -= v.dot(residual.col(a)) * v;
  }
  return out;
}

Eigen::Vector3d sorted_descending(const Eigen::Matrix3d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  Eigen::Vector3d ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + 3, [](double a, double b) { return a > b; });
  return ev;
}

}  // namespace

Orientation orientation_from_sign(int s) {
  if (s == 1) return Orientation::kPositive;
  if (s == -1) return Orientation::kNegative;
  throw Error(ErrorCode::kInvalidArgument, "orientation must be +1 or -1, got " + std::to_string(s));
}

// ---------------------------------------------------------------------------
// MetricPoint

MetricPoint::MetricPoint(Matrix components) : g_(std::move(components)) {
  if (g_.rows() != g_.cols() || g_.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "metric must be a square matrix");
  }
  if (!g_.allFinite()) {
    throw Error(ErrorCode::kNotPositiveDefinite, "metric has non-finite components");
  }
  const double scale = max_abs(g_);
  if (max_abs(g_ - g_.transpose()) > 1e-12 * scale) {
    throw Error(ErrorCode::kNotPositiveDefinite, "metric is not symmetric");
  }
  g_ = 0.5 * (g_ + g_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g_);
  const Vector& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(hi > 0.0) || !(lo > kSpdRelativeTolerance * hi)) {
    std::ostringstream os;
    os << "metric is not positive definite (eigenvalue range [" << lo << ", " << hi << "])";
    throw Error(ErrorCode::kNotPositiveDefinite, os.str());
  }
  const Matrix& q = es.eigenvectors();
  inv_ = q * ev.cwiseInverse().asDiagonal() * q.transpose();
  inv_ = 0.5 * (inv_ + inv_.transpose());
  double log_det = 0.0;
  for (int i = 0; i < ev.size(); ++i) log_det += std::log(ev[i]);
  sqrt_det_ = std::exp(0.5 * log_det);
}

MetricPoint MetricPoint::identity(int dim) { return MetricPoint(Matrix::Identity(dim, dim)); }

// ---------------------------------------------------------------------------
// TwoFormPoint / SymTensorPoint

TwoFormPoint::TwoFormPoint(Matrix components) : f_(std::move(components)) {
  if (f_.rows() != f_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "2-form must be a square matrix");
  }
  if (max_abs(f_ + f_.transpose()) > 1e-13 * (1.0 + max_abs(f_))) {
    throw Error(ErrorCode::kNotAntisymmetric, "2-form components are not antisymmetric");
  }
  f_ = 0.5 * (f_ - f_.transpose());
}

TwoFormPoint TwoFormPoint::antisymmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "2-form must be a square matrix");
  }
  return TwoFormPoint(0.5 * (m - m.transpose()), Trusted{});
}

TwoFormPoint TwoFormPoint::zero(int dim) { return TwoFormPoint(Matrix::Zero(dim, dim), Trusted{}); }

TwoFormPoint TwoFormPoint::basis(int dim, int i, int j) {
  if (i < 0 || j < 0 || i >= dim || j >= dim || i == j) {
    throw Error(ErrorCode::kInvalidArgument, "invalid basis 2-form indices");
  }
  Matrix m = Matrix::Zero(dim, dim);
  m(i, j) = 1.0;
  m(j, i) = -1.0;
  return TwoFormPoint(std::move(m), Trusted{});
}

TwoFormPoint TwoFormPoint::operator+(const TwoFormPoint& o) const {
  require_same_dim(dim(), o.dim(), "2-form sum");
  return TwoFormPoint(f_ + o.f_, Trusted{});
}

TwoFormPoint TwoFormPoint::operator-(const TwoFormPoint& o) const {
  require_same_dim(dim(), o.dim(), "2-form difference");
  return TwoFormPoint(f_ - o.f_, Trusted{});
}

TwoFormPoint TwoFormPoint::operator*(double s) const { return TwoFormPoint(f_ * s, Trusted{}); }

SymTensorPoint::SymTensorPoint(Matrix components) : t_(std::move(components)) {
  if (t_.rows() != t_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "symmetric tensor must be a square matrix");
  }
  if (max_abs(t_ - t_.transpose()) > 1e-12 * (1.0 + max_abs(t_))) {
    throw Error(ErrorCode::kSymmetryViolation, "tensor components are not symmetric");
  }
  t_ = 0.5 * (t_ + t_.transpose());
}

SymTensorPoint SymTensorPoint::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "symmetric tensor must be a square matrix");
  }
  return SymTensorPoint(Matrix(0.5 * (m + m.transpose())));
}

// ---------------------------------------------------------------------------
// RiemannPoint

RiemannPoint::RiemannPoint(int dim) : n_(dim), r_(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0) {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "Riemann tensor dimension must be positive");
}

RiemannPoint RiemannPoint::constant_curvature(const MetricPoint& g, double k) {
  const int n = g.dim();
  RiemannPoint rm(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) rm(i, j, a, b) = k * (g(i, a) * g(j, b) - g(i, b) * g(j, a));
  return rm;
}

double RiemannPoint::symmetry_defect() const {
  double scale = 0.0;
  for (double v : r_) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  const RiemannPoint& r = *this;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) {
          const double v = r(i, j, k, l);
          worst = std::max(worst, std::abs(v + r(j, i, k, l)));
          worst = std::max(worst, std::abs(v + r(i, j, l, k)));
          worst = std::max(worst, std::abs(v - r(k, l, i, j)));
          worst = std::max(worst, std::abs(v + r(i, k, l, j) + r(i, l, j, k)));
        }
  return worst / (1.0 + scale);
}

// ---------------------------------------------------------------------------
// Contractions

double contract2(const MetricPoint& g, const Matrix& a, const Matrix& b) {
  require_same_dim(g.dim(), static_cast<int>(a.rows()), "contraction");
  require_same_dim(g.dim(), static_cast<int>(b.rows()), "contraction");
  const Matrix& gi = g.inverse();
  return (gi * a * gi).cwiseProduct(b).sum();
}

double tensor_norm2(const MetricPoint& g, const Matrix& t) { return contract2(g, t, t); }

double trace(const MetricPoint& g, const Matrix& t) {
  require_same_dim(g.dim(), static_cast<int>(t.rows()), "trace");
  return g.inverse().cwiseProduct(t).sum();
}

Matrix compose(const MetricPoint& g, const Matrix& a, const Matrix& b) {
  require_same_dim(g.dim(), static_cast<int>(a.rows()), "composition");
  require_same_dim(g.dim(), static_cast<int>(b.rows()), "composition");
  return a * g.inverse() * b;
}

SymTensorPoint trace_free(const MetricPoint& g, const SymTensorPoint& t) {
  const double tr = trace(g, t.components());
  return SymTensorPoint::symmetrized(t.components() - (tr / g.dim()) * g.components());
}

double two_form_norm2(const MetricPoint& g, const TwoFormPoint& f) {
  require_same_dim(g.dim(), f.dim(), "two_form_norm2");
  return std::max(0.0, tensor_norm2(g, f.components()));
}

SymTensorPoint stress(const MetricPoint& g, const TwoFormPoint& f) {
  require_same_dim(g.dim(), f.dim(), "stress");
  return SymTensorPoint::symmetrized(-compose(g, f.components(), f.components()));
}

TwoFormPoint volume_form_2d(const MetricPoint& g, Orientation orientation) {
  if (g.dim() != 2) {
    throw Error(ErrorCode::kDimensionMismatch, "volume_form_2d requires dimension 2");
  }
  return TwoFormPoint::basis(2, 0, 1) * (sign(orientation) * g.sqrt_det());
}

// ---------------------------------------------------------------------------
// Dimension 4

TwoFormPoint hodge_star(const MetricPoint& g, Orientation orientation, const TwoFormPoint& f) {
  require_dim4(g.dim(), "hodge_star");
  require_same_dim(g.dim(), f.dim(), "hodge_star");
  const Matrix& gi = g.inverse();
  const Matrix raised = gi * f.components() * gi;
  const double s = sign(orientation) * g.sqrt_det();
  Matrix out = Matrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) {
      if (k == l) continue;
      double acc = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) acc += levi_civita4(i, j, k, l) * raised(i, j);
      out(k, l) = 0.5 * s * acc;
    }
  return TwoFormPoint::antisymmetrized(out);
}

FormSplit sd_split(const MetricPoint& g, Orientation orientation, const TwoFormPoint& f) {
  const TwoFormPoint star = hodge_star(g, orientation, f);
  return FormSplit{(f + star) * 0.5, (f - star) * 0.5};
}

StressSplitResiduals stress_split_residuals(const MetricPoint& g, Orientation orientation,
                                   const TwoFormPoint& f) {
  require_dim4(g.dim(), "stress_split_residuals");
  const SymTensorPoint eta0 = trace_free(g, stress(g, f));
  const FormSplit split = sd_split(g, orientation, f);
  const Matrix prod = compose(g, split.plus.components(), split.minus.components());
  StressSplitResiduals out;
  out.eta0_norm2 = tensor_norm2(g, eta0.components());
  out.plus_norm2 = two_form_norm2(g, split.plus);
  out.minus_norm2 = two_form_norm2(g, split.minus);
  out.composition = std::sqrt(std::max(0.0, tensor_norm2(g, eta0.components() + 2.0 * prod)));
  out.norm = std::abs(out.eta0_norm2 - out.plus_norm2 * out.minus_norm2);
  return out;
}

SymTensorPoint ricci(const MetricPoint& g, const RiemannPoint& rm) {
  const int n = g.dim();
  require_same_dim(n, rm.dim(), "ricci");
  const Matrix& gi = g.inverse();
  Matrix ric = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) acc += gi(i, k) * rm(i, j, k, l);
      ric(j, l) = acc;
    }
  return SymTensorPoint::symmetrized(ric);
}

double scalar_curvature(const MetricPoint& g, const SymTensorPoint& ric) { return trace(g, ric.components()); }

double riemann_norm2(const MetricPoint& g, const RiemannPoint& rm) {
  const int n = g.dim();
  require_same_dim(n, rm.dim(), "riemann_norm2");
  const Matrix& gi = g.inverse();
  // Raise one index at a time: R^{a}_{jkl}, R^{ab}_{kl}, ...
  std::vector<double> cur(rm.data());
  std::vector<double> next(cur.size());
  const std::size_t n1 = n, n2 = n1 * n, n3 = n2 * n;
  const std::array<std::size_t, 4> stride = {n3, n2, n1, 1};
  for (int slot = 0; slot < 4; ++slot) {
    const std::size_t s = stride[slot];
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
      const std::size_t a = (idx / s) % n1;
      const std::size_t base = idx - a * s;
      double acc = 0.0;
      for (std::size_t p = 0; p < n1; ++p) acc += gi(a, p) * cur[base + p * s];
      next[idx] = acc;
    }
    cur.swap(next);
  }
  double out = 0.0;
  for (std::size_t idx = 0; idx < cur.size(); ++idx) out += cur[idx] * rm.data()[idx];
  return out;
}

CurvatureBlocks curvature_blocks(const MetricPoint& g, Orientation orientation, const RiemannPoint& rm,
                                 double symmetry_tolerance) {
  require_dim4(g.dim(), "curvature_blocks");
  require_same_dim(g.dim(), rm.dim(), "curvature_blocks");
  const double defect = rm.symmetry_defect();
  if (defect > symmetry_tolerance) {
    std::ostringstream os;
    os << "Riemann tensor violates its symmetries (relative defect " << defect << ")";
    throw Error(ErrorCode::kSymmetryViolation, os.str());
  }

  const Mat6 gram = pair_gram(g);
  const Mat6 e = orthonormal_pair_basis(gram);

  // Hodge star on lowered pair components, then in the orthonormal frame.
  Mat6 eps;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      eps(a, b) = levi_civita4(kPairs[b][0], kPairs[b][1], kPairs[a][0], kPairs[a][1]);
  const Mat6 star = (sign(orientation) * g.sqrt_det()) * eps * gram;
  Mat6 s = e.transpose() * gram * star * e;
  s = 0.5 * (s + s.transpose());

  Mat6 b;
  b.leftCols<3>() = projector_basis(0.5 * (Mat6::Identity() + s));
  b.rightCols<3>() = projector_basis(0.5 * (Mat6::Identity() - s));

  Mat6 rpair;
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 6; ++c) rpair(a, c) = rm(kPairs[a][0], kPairs[a][1], kPairs[c][0], kPairs[c][1]);
  const Mat6 raised = gram * e;
  Mat6 op = raised.transpose() * rpair * raised;
  op = b.transpose() * op * b;
  op = 0.5 * (op + op.transpose());

  const double r = scalar_curvature(g, ricci(g, rm));
  CurvatureBlocks out;
  out.scalar = r;
  out.wplus = op.topLeftCorner<3, 3>() - (r / 12.0) * Eigen::Matrix3d::Identity();
  out.wminus = op.bottomRightCorner<3, 3>() - (r / 12.0) * Eigen::Matrix3d::Identity();
  out.mixed = op.topRightCorner<3, 3>();
  out.basis = e * b;
  return out;
}

Eigen::Vector3d CurvatureBlocks::wplus_eigenvalues() const { return sorted_descending(wplus); }
Eigen::Vector3d CurvatureBlocks::wminus_eigenvalues() const { return sorted_descending(wminus); }

NormDecomposition norm_decomposition(const MetricPoint& g, Orientation orientation, const RiemannPoint& rm) {
  require_dim4(g.dim(), "norm_decomposition");
  const CurvatureBlocks blocks = curvature_blocks(g, orientation, rm);
  const SymTensorPoint ric0 = trace_free(g, ricci(g, rm));
  NormDecomposition out;
  out.rm_norm2 = riemann_norm2(g, rm);
  out.scalar = blocks.scalar;
  out.ricci0_norm2 = tensor_norm2(g, ric0.components());
  out.wplus_norm2 = blocks.wplus_norm2();
  out.wminus_norm2 = blocks.wminus_norm2();
  const double rhs = out.scalar * out.scalar / 6.0 + 2.0 * out.ricci0_norm2 +
                     4.0 * (out.wplus_norm2 + out.wminus_norm2);
  out.residual = std::abs(out.rm_norm2 - rhs);
  return out;
}

double norm_decomposition_residual(const MetricPoint& g, Orientation orientation, const RiemannPoint& rm) {
  return norm_decomposition(g, orientation, rm).residual;
}

OddKernel odd_kernel(const MetricPoint& g, const TwoFormPoint& f, double tolerance) {
  const int n = g.dim();
  require_same_dim(n, f.dim(), "odd_kernel");
  if (n % 2 == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "odd_kernel requires odd dimension (got " + std::to_string(n) + ")");
  }
  const Matrix eta = stress(g, f).components();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(eta, g.components());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "odd_kernel: eigen-decomposition failed");
  }
  OddKernel out;
  out.min_eigenvalue = es.eigenvalues()[0];
  out.v = es.eigenvectors().col(0);
  out.v /= std::sqrt(out.v.dot(g.components() * out.v));
  out.eta_vv = out.v.dot(eta * out.v);
  const double scale = std::max(1.0, max_abs(eta));
  if (out.min_eigenvalue < -tolerance * scale || out.eta_vv > tolerance * scale) {
    std::ostringstream os;
    os << "odd_kernel: stress has no kernel within tolerance (min eigenvalue " << out.min_eigenvalue
       << ", eta(v,v) " << out.eta_vv << ")";
    throw Error(ErrorCode::kValidation, os.str());
  }
  return out;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNotPositiveDefinite: return "not_positive_definite";
    case ErrorCode::kNotAntisymmetric: return "not_antisymmetric";
    case ErrorCode::kSymmetryViolation: return "symmetry_violation";
    case ErrorCode::kSyntax: return "syntax";
    case ErrorCode::kUnknownFunction: return "unknown_function";
    case ErrorCode::kUnboundVariable: return "unbound_variable";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kStencilOutsideDomain: return "stencil_outside_domain";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kQuadrature: return "quadrature";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kBoundaryHit: return "boundary_hit";
    case ErrorCode::kOrientation: return "orientation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace em4lab
