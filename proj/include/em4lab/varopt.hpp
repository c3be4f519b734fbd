#pragma once

// Critical points of A(g, F) = int (R + kappa |F|^2) dmu over finite
// parametric families with fixed volume and fixed periods of F.

#include "em4lab/em_check.hpp"
#include "em4lab/topo.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace em4lab {

/// Coefficient of |F|^2 whose Euler-Lagrange equations are the Einstein-Maxwell
/// system in the full-contraction norm.
inline constexpr double kEinsteinMaxwellCoupling = -0.5;

struct ParamFamily {
  std::string name;
  std::vector<std::string> params;
  std::vector<Interval> box;
  double volume = 0.0;
  std::vector<double> periods;
  /// Constraints hold identically in the output.
  std::function<ExampleManifold(const Vector& theta)> build;
  /// Image of theta under the family's symmetry, if it has one.
  std::function<Vector(const Vector& theta)> symmetry;
  /// Pointwise Einstein-Maxwell balance for the ansatz, if known in closed form.
  std::function<double(const Vector& theta)> balance;

  int dim() const { return static_cast<int>(params.size()); }
  bool contains(const Vector& theta) const;
};

/// s2xs2-periods: settings V, P1, P2, lo, hi (box for a, default a0/2 .. 2 a0
/// with 16 pi^2 a0^4 = V).
/// flat-t4: settings V, lo, hi; parameters l1, l2 with l3 = l4 fixed by V; F = 0.
ParamFamily make_family(const std::string& name, const Bindings& settings = {});
std::vector<std::string> family_names();

struct FunctionalConfig {
  double kappa = 1.0;
  int nodes = 12;
};

/// Throws kInvalidArgument outside the box.
double functional_eval(const ParamFamily& family, const Vector& theta, const FunctionalConfig& cfg = {});

enum class CriticalKind { kMinimum, kMaximum };
std::string to_string(CriticalKind k);

struct ScanCandidate {
  Vector grid_theta;
  Vector theta;  // after quadratic refinement
  double value = 0.0;
  CriticalKind kind = CriticalKind::kMinimum;
};

struct ScanResult {
  int resolution = 0;
  std::vector<Vector> points;  // row-major over the parameter grid
  std::vector<double> values;
  /// Points whose grid neighbours all agree with them to 1e-12 relative.
  std::vector<bool> degenerate;
  std::vector<ScanCandidate> candidates;
  bool all_degenerate() const;
};

/// 1- or 2-parameter boxes; resolution >= 3 points per axis.
ScanResult scan_function(const std::vector<Interval>& box, const std::function<double(const Vector&)>& f,
                         int resolution);
ScanResult grid_scan(const ParamFamily& family, int resolution, const FunctionalConfig& cfg = {});

struct DescentConfig {
  FunctionalConfig functional{kEinsteinMaxwellCoupling, 12};
  double fd_step = 1e-4;  // in parameters normalized to the box
  int max_iterations = 500;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double gradient_tolerance = 1e-6;  // relative to 1 + |A|
  int em_points_per_axis = 5;
  DiffConfig em_diff;
  double em_tolerance = 1e-5;
  int scan_resolution = 21;
  double agreement = 1e-4;
};

struct DescentStep {
  int iteration = 0;
  Vector theta;
  double value = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct CriticalReport {
  std::string family;
  std::vector<std::string> params;
  Vector theta;
  double value = 0.0;
  Vector gradient;
  double gradient_norm = 0.0;
  double gradient_tolerance = 0.0;
  int iterations = 0;
  std::vector<DescentStep> trace;
  EMReport em;
  std::optional<double> balance;
  std::optional<ScanCandidate> scan;
  bool scan_degenerate = false;
  double scan_distance = 0.0;
  bool oracle_agreement = false;
  bool pass = false;
};

/// Central-difference gradient in the raw parameters, step fd_step * extent.
Vector functional_gradient(const ParamFamily& family, const Vector& theta, const FunctionalConfig& cfg,
                           double fd_step);

/// Newton-type descent on |grad A|^2 / 2 with Armijo backtracking. Throws
/// kConvergence (with the last iterates) or kBoundaryHit. A precomputed scan
/// of the family replaces the one descend would run.
CriticalReport descend(const ParamFamily& family, const Vector& theta0, const DescentConfig& cfg = {},
                       const ScanResult* scan = nullptr);

}  // namespace em4lab
