#pragma once

// Curvature integrals over closed 4-manifolds:
//   chi   = 1/(8 pi^2)  int (|W+|^2 + |W-|^2 + R^2/24 - |Ric0|^2/2) dmu
//   tau   = 1/(12 pi^2) int (|W+|^2 - |W-|^2) dmu
//   combo = 1/(4 pi^2)  int (R^2/24 + 2|W+|^2 - |Ric0|^2/2) dmu  (= 2 chi + 3 tau)
// in the norm conventions of tensor.hpp.

#include "em4lab/jet.hpp"
#include "em4lab/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>

namespace em4lab {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Pointwise curvature of a 4-dimensional metric with fixed-size storage.
/// op is the curvature operator on unit bivectors of the frame L^{-T}
/// (g = L L^T), pairs ordered 12, 13, 14, 23, 24, 34.
struct Curvature4 {
  Eigen::Matrix4d g;
  Eigen::Matrix4d ginv;
  Eigen::Matrix4d ricci;
  Eigen::Matrix<double, 6, 6> op;
  double sqrt_det = 0.0;
  double scalar = 0.0;
  /// Largest over smallest eigenvalue of g.
  double condition = 1.0;

  /// Frame of the curvature operator: columns are g-orthonormal vectors.
  Eigen::Matrix4d frame() const;
  /// Self-dual (plus) or anti-self-dual 3x3 block of op.
  Eigen::Matrix3d block(Orientation o, bool plus) const;
  double weyl_norm2(Orientation o, bool plus) const;
  double ricci0_norm2() const;
};

/// Evaluates Curvature4 from one jet pass of the chart's metric program.
class Curvature4Evaluator {
 public:
  explicit Curvature4Evaluator(const Chart& chart);
  Curvature4 at(const Vector& x) const;

 private:
  const Chart* chart_;
  std::array<int, 16> slot_{};
};

/// Integrand sees the point and its curvature.
using CurvatureIntegrand = std::function<void(const Vector& x, const Curvature4& c, double* out)>;
QuadratureResult integrate(const IntegrationDomain& domain, int m, const CurvatureIntegrand& f, int nodes,
                           int panels = 1);

struct CharNumbers {
  int nodes = 0;
  Orientation orientation = Orientation::kPositive;
  Estimate volume;
  Estimate chi;
  Estimate tau;
  Estimate combo;
  /// 1/(12 pi^2) int (R^2/24 - |W-|^2) dmu, equal to tau on Kahler surfaces.
  Estimate tau_kahler;
};

/// Uses the chart orientation unless one is given.
CharNumbers characteristic_numbers(const IntegrationDomain& domain, int nodes,
                                   std::optional<Orientation> orientation = std::nullopt, int panels = 1);

/// Coordinate components of F at a quadrature node, given the curvature there.
using FieldAtNode = std::function<Matrix(const Vector& x, const Curvature4& c)>;

struct CorollaryReport {
  int nodes = 0;
  /// 1/(32 pi^2) int ((|F|^2 + 4f)^2 - 4 |F+|^2 |F-|^2) dmu with f = (R - |F|^2)/4.
  Estimate integral;
  Estimate two_chi_plus_three_tau;  // from characteristic_numbers
  double discrepancy = 0.0;         // |integral - (2 chi + 3 tau)|
  double combined_error = 0.0;
  bool agrees = false;
  double min_integrand = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  bool f_nonnegative = false;
  /// max | integrand - 8 f |F|^2 - 16 f^2 - (|F+|^2 - |F-|^2)^2 | / (1 + integrand)
  double certificate_defect = 0.0;
  /// Fraction of nodes where f vanishes (to 1e-9), so the integrand reduces to
  /// the square (|F+|^2 - |F-|^2)^2.
  double f_zero_fraction = 0.0;
  /// Nodes entering the pointwise statistics above, and nodes left out of
  /// them because g is too badly conditioned for trustworthy curvature.
  /// Every node enters the integral.
  long pointwise_nodes = 0;
  long skipped_nodes = 0;
  bool pass = false;
};

/// Jet curvature of a chart keeps about eight digits up to this condition
/// number of g (the affine Fubini-Study chart loses all of them near 1e6).
inline constexpr double kPointwiseConditionLimit = 1e3;

CorollaryReport corollary_report(const IntegrationDomain& domain, const FieldAtNode& F, int nodes,
                                 std::optional<Orientation> orientation = std::nullopt,
                                 const CharNumbers* reference = nullptr, int panels = 1,
                                 double max_condition = kPointwiseConditionLimit);

}  // namespace em4lab
