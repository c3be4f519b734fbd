#pragma once

// Pointwise Einstein-Maxwell residuals of (g, F) sampled on a grid:
//   dF = 0,  d*F = 0,  Ric0 + (F o F)0 = 0
// with the equivalent form Ric - eta = f g, f = (R - |F|^2)/n.

#include "em4lab/chart.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace em4lab {

/// Uniform grid with points_per_axis points per coordinate, inset from the
/// domain boundary so every differentiation stencil stays inside.
std::vector<Vector> sample_grid(const Chart& chart, int points_per_axis, const DiffConfig& cfg);

struct Stat {
  double max = 0.0;
  double mean = 0.0;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Max absolute deviation from the grid mean.
struct Constancy {
  double mean = 0.0;
  double max_deviation = 0.0;
  bool holds(double tol) const { return max_deviation <= tol * (1.0 + std::abs(mean)); }
};

struct PointSample {
  Vector x;
  double closed = 0.0;      // |dF|
  double coclosed = 0.0;    // |d*F|
  double trace_free = 0.0;  // |Ric0 - eta0|
  double f_form = 0.0;      // |Ric - eta - f g|
  double gap = 0.0;         // difference of the two forms, relative
  double trace_gap = 0.0;   // |tr eta - |F|^2|
  double scalar = 0.0;
  double field_norm2 = 0.0;
  double f = 0.0;
  double combination = 0.0;  // (4 - 2n) R + (n - 4) |F|^2
  // Dimension 2 only: |F -+ |F| dmu| with dmu of unit length.
  double plus_branch = 0.0;
  double minus_branch = 0.0;
};

PointSample em_point(const Chart& chart, const TwoFormSource& F, const Vector& x, const DiffConfig& cfg);

struct EMReport {
  int dim = 0;
  int points_per_axis = 0;
  std::size_t grid_points = 0;
  Stat closed;
  Stat coclosed;
  Stat trace_free;
  Stat f_form;
  double formulation_gap = 0.0;
  double trace_identity_gap = 0.0;
  Range f;
  Constancy combination;
  Constancy scalar;
  Constancy field_norm2;

  double tolerance = 0.0;
  bool closed_ok = false;
  bool coclosed_ok = false;
  bool einstein_ok = false;
  bool combination_ok = false;

  bool solution() const { return closed_ok && coclosed_ok && einstein_ok; }
  double max_residual() const;
};

/// Sets the verdict flags from the statistics.
void apply_verdicts(EMReport& report, double tol);

EMReport summarize(const std::vector<PointSample>& samples, int dim, int points_per_axis, double tol);

/// Throws kInvalidArgument for an empty grid.
EMReport em_residuals(const Chart& chart, const TwoFormSource& F, int points_per_axis, const DiffConfig& cfg,
                      double tol = 1e-6);
EMReport em_residuals(const Chart& chart, const FormField& F, int points_per_axis, const DiffConfig& cfg,
                      double tol = 1e-6);

/// Bound on (combination deviation) / (max residual) for unit-size charts;
/// a warped product of spheres gives about 3.2.
inline constexpr double kCombinationResidualRatio = 10.0;

struct ConservedScan {
  int dim = 0;
  Constancy combination;
  /// Dimension 4: R itself.
  Constancy scalar;
  /// Dimension 2: |F|.
  Constancy field_norm;
  double plus_branch = 0.0;
  double minus_branch = 0.0;
};

ConservedScan conserved_scan(const std::vector<PointSample>& samples, int dim);
ConservedScan conserved_scan(const Chart& chart, const TwoFormSource& F, int points_per_axis,
                             const DiffConfig& cfg);

struct FieldPoint {
  MetricPoint g;
  TwoFormPoint F;
};

struct EinsteinReduction {
  std::size_t points = 0;
  std::size_t one_sided = 0;  // points with |F+| or |F-| at most tol
  double max_eta0 = 0.0;      // over one-sided points
  double max_ratio = 0.0;     // |eta0| / bound over one-sided points
  bool pass = true;
};

/// Where one half of F vanishes to tol, |eta0| = |F+||F-| <= tol |F|.
EinsteinReduction einstein_reduction_check(const std::vector<FieldPoint>& points, Orientation orientation,
                                           double tol = 1e-9);

}  // namespace em4lab
