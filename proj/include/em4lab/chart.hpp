#pragma once

// Coordinate charts with expression-valued fields, and the differential
// geometry computed from them by numerical differentiation.
//
// Sign conventions:
//   Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
//   R_ijkl     = 1/2 (d_j d_k g_il + d_i d_l g_jk - d_j d_l g_ik - d_i d_k g_jl)
//                + g_np (Gamma^n_jk Gamma^p_il - Gamma^n_jl Gamma^p_ik)
//   Ric_jl     = g^ik R_ijkl,  R = g^jl Ric_jl
// so the unit round sphere has R_1212 = sin^2(theta) and R = 2.
//   (dF)_ijk   = d_i F_jk + d_j F_ki + d_k F_ij
//   (d*F)_j    = -g^ip (nabla_p F)_ij

#include "em4lab/expr.hpp"
#include "em4lab/program.hpp"
#include "em4lab/tensor.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace em4lab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double extent() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

using ExpressionMatrix = std::vector<std::vector<Expression>>;

struct ChartSpec {
  std::string name;
  std::vector<std::string> coords;
  /// Full n x n; (i,j) and (j,i) hold the same expression.
  ExpressionMatrix metric;
  std::vector<Interval> domain;
  Orientation orientation = Orientation::kPositive;
  Bindings params;

  int dim() const { return static_cast<int>(coords.size()); }
  /// Throws kValidation with a message naming the offending item.
  void validate() const;
};

/// Differential form given by expressions; only components with strictly
/// increasing indices are stored.
class FormField {
 public:
  FormField(int dim, int degree);

  /// 0-based indices in any order; reorders with the permutation sign.
  void set(std::vector<int> indices, const Expression& e);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  const std::map<std::vector<int>, Expression>& components() const { return components_; }

  /// One expression per canonical index tuple (zero where unset).
  std::vector<Expression> canonical_components() const;
  static std::vector<std::vector<int>> canonical_indices(int dim, int degree);

 private:
  int dim_;
  int degree_;
  std::map<std::vector<int>, Expression> components_;
};

struct DiffConfig {
  enum class Scheme { kFiniteDifference, kJet };

  Scheme scheme = Scheme::kFiniteDifference;
  int order = 4;
  /// Step per coordinate, as a fraction of that coordinate's domain extent.
  double relative_step = 1e-3;

  static DiffConfig jets() {
    DiffConfig c;
    c.scheme = Scheme::kJet;
    return c;
  }
  int reach() const { return scheme == Scheme::kJet ? 0 : order / 2; }
  void validate() const;
};

/// Values of m compiled outputs and their coordinate derivatives.
struct FieldDerivatives {
  Vector value;             // m
  Matrix d;                 // m x n, d(o, k) = d_k out_o
  std::vector<Matrix> dd;   // per output, n x n Hessian (empty unless requested)
};

class Chart {
 public:
  explicit Chart(ChartSpec spec);

  const ChartSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim(); }
  Orientation orientation() const { return spec_.orientation; }

  /// Differentiation step per coordinate.
  Vector steps(const DiffConfig& cfg) const;
  bool inside(const Vector& x) const;
  /// Throws kStencilOutsideDomain when the stencil around x leaves the box.
  void check_stencil(const Vector& x, const DiffConfig& cfg) const;

  /// Inputs are the chart coordinates; parameters are folded in.
  Program compile(const std::vector<Expression>& exprs) const;

  /// Metric components without any validation.
  Matrix metric_components(const Vector& x) const;
  MetricPoint metric(const Vector& x) const;
  const Program& metric_program() const { return metric_prog_; }
  /// Upper-triangle slot of g_ij in metric_program() outputs.
  int metric_slot(int i, int j) const;

  /// check_domain = false skips the box test (used for integration nodes,
  /// which may lie outside the pointwise-check box).
  FieldDerivatives differentiate(const Program& p, const Vector& x, const DiffConfig& cfg,
                                 bool second, const std::function<void(const double*)>& validate = {},
                                 bool check_domain = true) const;

  /// Builds a metric from metric_program() outputs.
  Matrix assemble_metric(const double* values) const;

 private:
  ChartSpec spec_;
  Program metric_prog_;
};

struct GeometryPoint {
  Vector x;
  MetricPoint g;
  std::vector<Matrix> dg;           // dg[k](i,j) = d_k g_ij
  std::vector<Matrix> christoffel;  // christoffel[k](i,j) = Gamma^k_ij
  RiemannPoint riemann;
  SymTensorPoint ricci;
  double scalar = 0.0;
};

/// Pointwise geometry from g and its first two derivatives;
/// ddg[k * n + l](i,j) = d_k d_l g_ij.
GeometryPoint geometry_from_jet(const Vector& x, const Matrix& g, const std::vector<Matrix>& dg,
                                const std::vector<Matrix>& ddg,
                                double symmetry_tolerance = kRiemannSymmetryTolerance);

/// check_domain = false allows points outside the chart box (metric must
/// still be positive definite there).
GeometryPoint geometry_at(const Chart& chart, const Vector& x, const DiffConfig& cfg, bool check_domain = true);

/// A 2-form and its coordinate derivatives at a point.
struct FormJet {
  Matrix value;
  std::vector<Matrix> d;  // d[k](i,j) = d_k F_ij
};

/// Dense totally antisymmetric 3-tensor.
struct ThreeForm {
  int n = 0;
  std::vector<double> c;
  explicit ThreeForm(int dim) : n(dim), c(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}
  double& operator()(int i, int j, int k) { return c[(static_cast<std::size_t>(i) * n + j) * n + k]; }
  double operator()(int i, int j, int k) const { return c[(static_cast<std::size_t>(i) * n + j) * n + k]; }
};

class TwoFormSource {
 public:
  virtual ~TwoFormSource() = default;
  virtual FormJet at(const Vector& x, const DiffConfig& cfg) const = 0;
};

class ExpressionFormSource : public TwoFormSource {
 public:
  ExpressionFormSource(const Chart& chart, const FormField& field);
  FormJet at(const Vector& x, const DiffConfig& cfg) const override;
  /// Value only, no domain test.
  Matrix value(const Vector& x) const;

 private:
  const Chart& chart_;
  Program prog_;
  std::vector<std::vector<int>> slots_;
};

/// Values from a callback, derivatives by central differences of it.
class FunctionFormSource : public TwoFormSource {
 public:
  FunctionFormSource(const Chart& chart, std::function<Matrix(const Vector&)> fn);
  FormJet at(const Vector& x, const DiffConfig& cfg) const override;

 private:
  const Chart& chart_;
  std::function<Matrix(const Vector&)> fn_;
};

/// Central-difference derivative of a matrix-valued function (any cfg
/// scheme is treated as finite differences of the given order).
std::vector<Matrix> fd_gradient(const std::function<Matrix(const Vector&)>& fn, const Vector& x,
                                const Vector& steps, int order);

ThreeForm ext_d(const FormJet& f);
double three_form_norm2(const MetricPoint& g, const ThreeForm& t);
Vector codiff(const GeometryPoint& geo, const FormJet& f);
double one_form_norm2(const MetricPoint& g, const Vector& v);
/// (nabla_k T)_ij for a covariant 2-tensor.
std::vector<Matrix> cov_deriv_covariant(const GeometryPoint& geo, const Matrix& t, const std::vector<Matrix>& dt);
/// (nabla_k T)^i_j for a (1,1) tensor.
std::vector<Matrix> cov_deriv_mixed(const GeometryPoint& geo, const Matrix& t, const std::vector<Matrix>& dt);
/// Full contraction of a rank-3 covariant tensor stored as t[k](i,j).
double rank3_norm2(const MetricPoint& g, const std::vector<Matrix>& t);
/// Same for t[k](i,j) = T^i_{kj} with one upper index.
double mixed_rank3_norm2(const MetricPoint& g, const std::vector<Matrix>& t);

ThreeForm ext_d_at(const Chart& chart, const FormField& two_form, const Vector& x, const DiffConfig& cfg);
/// d of a 1-form, as a dense 2-form.
Matrix ext_d_one_form_at(const Chart& chart, const FormField& one_form, const Vector& x, const DiffConfig& cfg);
Vector codiff_at(const Chart& chart, const FormField& two_form, const Vector& x, const DiffConfig& cfg);
std::vector<Matrix> cov_deriv_at(const Chart& chart, const FormField& two_form, const Vector& x,
                                 const DiffConfig& cfg);
/// T^i_j given as expressions (row i, column j).
std::vector<Matrix> cov_deriv_at(const Chart& chart, const ExpressionMatrix& mixed, const Vector& x,
                                 const DiffConfig& cfg);
/// nabla g, which vanishes up to discretization error.
std::vector<Matrix> metric_cov_deriv_at(const Chart& chart, const Vector& x, const DiffConfig& cfg);

}  // namespace em4lab
