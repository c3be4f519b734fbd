#pragma once

#include "em4lab/chart.hpp"

#include <optional>
#include <string>
#include <vector>

namespace em4lab {

/// Finite box in integration variables mapped onto chart coordinates.
struct IntegrationSpec {
  std::vector<std::string> vars;
  std::vector<Interval> box;
  std::vector<Expression> map;  // one per chart coordinate
  Expression jacobian;          // |d(chart coords)/d(vars)|
  /// Upper bound for the g-volume left out of the box.
  double excised_volume = 0.0;
};

struct Expected {
  std::optional<double> scalar;
  std::optional<double> einstein_constant;
  std::optional<double> volume;
  std::optional<double> chi;
  std::optional<double> tau;
};

struct ExampleManifold {
  std::string name;
  ChartSpec chart;
  std::optional<FormField> F;
  /// J^i_j, row i.
  std::optional<ExpressionMatrix> J;
  std::optional<IntegrationSpec> integration;
  Expected expected;
};

/// Names: flat-torus-4, flat-rn, round-s2, round-s4, s2xs2, cp2-fubini-study.
/// Parameters: flat-rn n (2..8); round-s2 r, c (F = c dmu); round-s4 r;
/// s2xs2 a, b, alpha, beta (F = alpha vol1 + beta vol2); cp2-fubini-study c.
ExampleManifold builtin(const std::string& name, const Bindings& params = {});
std::vector<std::string> builtin_names();

/// omega_ij = g_pj J^p_i as expressions.
ExpressionMatrix kahler_form_expressions(const ExpressionMatrix& metric, const ExpressionMatrix& j);

inline constexpr double kPolarExcision = 1e-6;

}  // namespace em4lab
