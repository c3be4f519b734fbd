#pragma once

// Pointwise multilinear algebra on metrics, 2-forms and curvature tensors.
//
// Conventions used throughout the library:
//   |F|^2      = F_ij F^ij             (full contraction, no 1/2)
//   (A o B)_ij = A_i^p B_pj            (so eta = -F o F is positive semidefinite)
//   eta_ij     = g^pq F_ip F_jq
//   |T|^2      = T_ij T^ij and |Rm|^2 = R_ijkl R^ijkl (full contractions)
//   |W+-|^2    = squared Frobenius norm of the 3x3 curvature-operator blocks
//   R_ijkl     = k (g_ik g_jl - g_il g_jk) for constant sectional curvature k
//
// With these choices |F+|^2 + |F-|^2 = |F|^2, trace_g(eta) = |F|^2, and on a
// Kahler surface |W+|^2 = R^2/24.

#include <Eigen/Dense>

#include <vector>

namespace em4lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Orientation : int { kPositive = 1, kNegative = -1 };

inline int sign(Orientation o) { return static_cast<int>(o); }
inline Orientation flipped(Orientation o) {
  return o == Orientation::kPositive ? Orientation::kNegative : Orientation::kPositive;
}
Orientation orientation_from_sign(int s);

/// Metric is accepted when its smallest eigenvalue exceeds this fraction of
/// the largest.
inline constexpr double kSpdRelativeTolerance = 1e-10;

/// Symmetric positive-definite bilinear form at a point. Construction
/// validates symmetry and definiteness and caches the inverse.
class MetricPoint {
 public:
  explicit MetricPoint(Matrix components);

  static MetricPoint identity(int dim);

  int dim() const { return static_cast<int>(g_.rows()); }
  const Matrix& components() const { return g_; }
  const Matrix& inverse() const { return inv_; }
  double sqrt_det() const { return sqrt_det_; }
  double operator()(int i, int j) const { return g_(i, j); }

 private:
  Matrix g_;
  Matrix inv_;
  double sqrt_det_ = 0.0;
};

/// Antisymmetric bilinear form at a point (F, omega, rho, ...).
class TwoFormPoint {
 public:
  /// Validates antisymmetry to machine precision.
  explicit TwoFormPoint(Matrix components);

  /// (M - M^T)/2; for forms assembled from numerically differentiated data.
  static TwoFormPoint antisymmetrized(const Matrix& m);
  static TwoFormPoint zero(int dim);
  /// Coordinate form dx^i ^ dx^j (0-based indices).
  static TwoFormPoint basis(int dim, int i, int j);

  int dim() const { return static_cast<int>(f_.rows()); }
  const Matrix& components() const { return f_; }
  double operator()(int i, int j) const { return f_(i, j); }

  TwoFormPoint operator+(const TwoFormPoint& o) const;
  TwoFormPoint operator-(const TwoFormPoint& o) const;
  TwoFormPoint operator*(double s) const;
  friend TwoFormPoint operator*(double s, const TwoFormPoint& f) { return f * s; }

 private:
  struct Trusted {};
  TwoFormPoint(Matrix components, Trusted) : f_(std::move(components)) {}
  Matrix f_;
};

/// Symmetric 2-tensor at a point (Ric, trace-free Ric, eta, f g).
class SymTensorPoint {
 public:
  explicit SymTensorPoint(Matrix components);
  static SymTensorPoint symmetrized(const Matrix& m);

  int dim() const { return static_cast<int>(t_.rows()); }
  const Matrix& components() const { return t_; }
  double operator()(int i, int j) const { return t_(i, j); }

 private:
  Matrix t_;
};

/// Riemann tensor with all indices lowered, stored densely (n^4 entries).
class RiemannPoint {
 public:
  explicit RiemannPoint(int dim);

  /// R_ijkl = k (g_ik g_jl - g_il g_jk).
  static RiemannPoint constant_curvature(const MetricPoint& g, double k);

  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return r_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return r_[index(i, j, k, l)]; }
  const std::vector<double>& data() const { return r_; }

  /// Largest violation of antisymmetry, pair symmetry and the first Bianchi
  /// identity, divided by (1 + largest component magnitude).
  double symmetry_defect() const;

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_;
  std::vector<double> r_;
};

/// 4D curvature operator split along Lambda^+ (+) Lambda^-.
struct CurvatureBlocks {
  Eigen::Matrix3d wplus;
  Eigen::Matrix3d wminus;
  Eigen::Matrix3d mixed;
  double scalar = 0.0;
  /// Columns are the orthonormal basis 2-forms (three self-dual, then three
  /// anti-self-dual), as lowered components on the pairs 12,13,14,23,24,34.
  Eigen::Matrix<double, 6, 6> basis;

  /// Sorted descending.
  Eigen::Vector3d wplus_eigenvalues() const;
  Eigen::Vector3d wminus_eigenvalues() const;
  double wplus_norm2() const { return wplus.squaredNorm(); }
  double wminus_norm2() const { return wminus.squaredNorm(); }
};

struct FormSplit {
  TwoFormPoint plus;
  TwoFormPoint minus;
};

struct StressSplitResiduals {
  double composition = 0.0;  // |eta0 + 2 F+ o F-|
  double norm = 0.0;         // | |eta0|^2 - |F+|^2 |F-|^2 |
  double eta0_norm2 = 0.0;
  double plus_norm2 = 0.0;
  double minus_norm2 = 0.0;
};

struct NormDecomposition {
  double rm_norm2 = 0.0;
  double scalar = 0.0;
  double ricci0_norm2 = 0.0;
  double wplus_norm2 = 0.0;
  double wminus_norm2 = 0.0;
  double residual = 0.0;  // | |Rm|^2 - (R^2/6 + 2|Ric0|^2 + 4(|W+|^2+|W-|^2)) |
};

struct OddKernel {
  Vector v;                    // g-unit
  double eta_vv = 0.0;         // eta(v, v)
  double min_eigenvalue = 0.0; // of eta relative to g
};

/// g^ik g^jl A_ij B_kl for arbitrary 2-tensors.
double contract2(const MetricPoint& g, const Matrix& a, const Matrix& b);
/// T_ij T^ij.
double tensor_norm2(const MetricPoint& g, const Matrix& t);
/// g^ij T_ij.
double trace(const MetricPoint& g, const Matrix& t);
/// (A o B)_ij = A_i^p B_pj = A_iq g^qp B_pj.
Matrix compose(const MetricPoint& g, const Matrix& a, const Matrix& b);
/// T - (trace_g T / n) g.
SymTensorPoint trace_free(const MetricPoint& g, const SymTensorPoint& t);

double two_form_norm2(const MetricPoint& g, const TwoFormPoint& f);
/// eta = -F o F.
SymTensorPoint stress(const MetricPoint& g, const TwoFormPoint& f);

/// Levi-Civita volume form with the given orientation: sqrt(det g) eps_ij.
/// Only meaningful for dim 2.
TwoFormPoint volume_form_2d(const MetricPoint& g, Orientation orientation);

TwoFormPoint hodge_star(const MetricPoint& g, Orientation orientation, const TwoFormPoint& f);
FormSplit sd_split(const MetricPoint& g, Orientation orientation, const TwoFormPoint& f);
StressSplitResiduals stress_split_residuals(const MetricPoint& g, Orientation orientation,
                                   const TwoFormPoint& f);

SymTensorPoint ricci(const MetricPoint& g, const RiemannPoint& rm);
double scalar_curvature(const MetricPoint& g, const SymTensorPoint& ric);
/// R_ijkl R^ijkl by direct index contraction.
double riemann_norm2(const MetricPoint& g, const RiemannPoint& rm);

inline constexpr double kRiemannSymmetryTolerance = 1e-8;

CurvatureBlocks curvature_blocks(const MetricPoint& g, Orientation orientation,
                                 const RiemannPoint& rm,
                                 double symmetry_tolerance = kRiemannSymmetryTolerance);
NormDecomposition norm_decomposition(const MetricPoint& g, Orientation orientation,
                                     const RiemannPoint& rm);
double norm_decomposition_residual(const MetricPoint& g, Orientation orientation,
                                   const RiemannPoint& rm);

/// Unit vector in the kernel of eta for odd dimension.
OddKernel odd_kernel(const MetricPoint& g, const TwoFormPoint& f, double tolerance = 1e-10);

}  // namespace em4lab
