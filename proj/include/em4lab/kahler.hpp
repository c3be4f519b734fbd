#pragma once

// Kahler surfaces: omega = g(J., .), rho = Ric(J., .), rho0 = rho - (R/4) omega,
// and LeBrun's field F_a = a omega + rho0 / (2a).
// With J^i_j stored as a matrix, omega = J^T g and rho = J^T Ric.

#include "em4lab/atlas.hpp"
#include "em4lab/em_check.hpp"

#include <optional>

namespace em4lab {

struct KahlerData {
  ChartSpec chart;
  ExpressionMatrix J;  // J^i_j, row i
};

KahlerData kahler_data(const ExampleManifold& m);

struct KahlerPoint {
  GeometryPoint geo;
  Matrix J;
  TwoFormPoint omega = TwoFormPoint::zero(4);
  TwoFormPoint rho = TwoFormPoint::zero(4);
  TwoFormPoint rho0 = TwoFormPoint::zero(4);
};

/// Evaluates the Kahler quantities at x; the geometry uses jets.
class KahlerField {
 public:
  KahlerField(const Chart& chart, const ExpressionMatrix& J);
  KahlerPoint at(const Vector& x, bool check_domain = true) const;
  Matrix J(const Vector& x) const;
  const FormField& omega_field() const { return omega_; }

 private:
  const Chart& chart_;
  Program j_prog_;
  FormField omega_;
};

struct KahlerReport {
  std::size_t grid_points = 0;
  double j_squared = 0.0;      // max |J^2 + I|, operator norm in a g-orthonormal frame
  double compatibility = 0.0;  // max |g(J., J.) - g|, same norm
  double parallel = 0.0;       // max |nabla J|
  double closed = 0.0;         // max |d omega|
  Constancy scalar;
  /// Orientation that makes omega self-dual.
  Orientation orientation = Orientation::kPositive;
  double tolerance = 0.0;
  bool pass = false;
};

/// a omega + rho0/(2a) from geometry and J at one point.
Matrix lebrun_value(const GeometryPoint& geo, const Matrix& J, double a);

/// Requires dimension 4.
KahlerReport kahler_verify(const KahlerData& data, int points_per_axis, const DiffConfig& cfg, double tol = 1e-6);

/// F_a with values from jets and derivatives by finite differences of the
/// values, since rho0 already involves second derivatives of g.
class LebrunSource : public TwoFormSource {
 public:
  LebrunSource(const Chart& chart, const ExpressionMatrix& J, double a);
  LebrunSource(const LebrunSource&) = delete;
  LebrunSource& operator=(const LebrunSource&) = delete;
  FormJet at(const Vector& x, const DiffConfig& cfg) const override;
  Matrix value(const Vector& x) const;
  double a() const { return a_; }

 private:
  KahlerField field_;
  FunctionFormSource fd_;
  double a_;
};

struct LebrunReport {
  double a = 0.0;
  KahlerReport kahler;
  std::size_t grid_points = 0;
  double plus_defect = 0.0;   // max |F+ - a omega| / (1 + |a omega|)
  double minus_defect = 0.0;  // max |F- - rho0/(2a)| / (1 + |rho0/(2a)|)
  double norm_defect = 0.0;   // max | |F|^2 - 4a^2 - |rho0|^2/(4a^2) |
  double stress_defect = 0.0; // max |eta0 - Ric0|
  Range field_norm2;
  Range rho0_norm;
  EMReport em;
  bool pass = false;
};

/// Throws kInvalidArgument for a <= 0 and kValidation when kahler_verify fails.
LebrunReport lebrun_field(const KahlerData& data, double a, int points_per_axis, const DiffConfig& cfg,
                          double tol = 1e-6);

struct KahlerWeylReport {
  std::size_t grid_points = 0;
  Orientation orientation = Orientation::kPositive;
  double norm_defect = 0.0;        // max | |W+|^2 - R^2/24 | / (1 + R^2)
  double eigenvalue_defect = 0.0;  // max |sorted eig(W+) - (R/6, -R/12, -R/12)| / (1 + |R|)
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // at the first grid point
  double wplus_norm2 = 0.0;                               // at the first grid point
  double scalar = 0.0;                                    // at the first grid point
  double tolerance = 0.0;
  bool pass = false;
};

/// Uses the given orientation, or the chart's. Throws kOrientation when the
/// Kahler pattern fails on W+ but holds on W-.
KahlerWeylReport kahler_weyl_certify(const KahlerData& data, int points_per_axis, const DiffConfig& cfg,
                                     double tol = 1e-6, std::optional<Orientation> orientation = std::nullopt);

}  // namespace em4lab
