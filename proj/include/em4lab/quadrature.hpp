#pragma once

// Gauss-Legendre product quadrature over a box of integration variables that
// are mapped onto chart coordinates.

#include "em4lab/atlas.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace em4lab {

struct GaussLegendre {
  std::vector<double> nodes;  // on [-1, 1], ascending
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(int n);

/// Sum over the tensor-product rule of f(u) * weight, m components at once.
/// Parallel over slabs of the first axis; the summation order is fixed, so
/// the result does not depend on the worker count.
std::vector<double> product_rule(const std::vector<Interval>& box, int nodes, int panels, int m,
                                 const std::function<void(const Vector& u, double* out)>& f);

class IntegrationDomain {
 public:
  IntegrationDomain(ChartSpec chart, IntegrationSpec spec);
  explicit IntegrationDomain(const ExampleManifold& m);

  const Chart& chart() const { return *chart_; }
  const IntegrationSpec& spec() const { return spec_; }
  int dim() const { return static_cast<int>(spec_.vars.size()); }
  /// Chart point and |Jacobian| for integration variables u.
  void map(const Vector& u, Vector& x, double& jacobian) const;

 private:
  std::unique_ptr<Chart> chart_;
  IntegrationSpec spec_;
  Program map_prog_;
};

struct QuadratureResult {
  int nodes = 0;
  int panels = 1;
  std::vector<double> value;   // rule with `nodes` points per axis and panel
  std::vector<double> coarse;  // same with ceil(nodes / 2)
  std::vector<double> max_abs; // largest |integrand| (without dmu) at the fine nodes
  double excised_volume = 0.0;

  double error(int k) const;
  /// Linear combination sum c_k I_k with its error estimate.
  std::pair<double, double> combine(const std::vector<double>& c) const;
};

/// Integrand sees the chart point and metric; dmu is applied by the rule.
using MetricIntegrand = std::function<void(const Vector& x, const MetricPoint& g, double* out)>;
/// Integrand sees full pointwise geometry computed with jets.
using GeometryIntegrand = std::function<void(const GeometryPoint& geo, double* out)>;

/// Integrand fills out and returns sqrt(det g) at the chart point.
using DensityIntegrand = std::function<double(const Vector& x, double* out)>;

QuadratureResult integrate(const IntegrationDomain& domain, int m, const MetricIntegrand& f, int nodes,
                           int panels = 1);
QuadratureResult integrate(const IntegrationDomain& domain, int m, const GeometryIntegrand& f, int nodes,
                           int panels = 1);
QuadratureResult integrate_density(const IntegrationDomain& domain, int m, const DensityIntegrand& f, int nodes,
                                   int panels = 1);

}  // namespace em4lab
