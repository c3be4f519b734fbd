#include "em4lab/chart.hpp"

#include "em4lab/error.hpp"
#include "em4lab/jet.hpp"
#include "em4lab/numeric.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace em4lab {

namespace {

int permutation_sign_sort(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j) {
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
    }
  }
  return sign;
}

Expression negate(const Expression& e) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kNeg;
  n->lhs = e.root_ptr();
  return Expression(n);
}

void check_spd(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > kSpdRelativeTolerance * hi)) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "metric not positive definite at a stencil point (eigenvalues " + std::to_string(lo) + ", " +
                    std::to_string(hi) + ")");
  }
}

template <int N>
FieldDerivatives jet_derivatives(const Program& p, const Vector& x, bool second,
                                 const std::function<void(const double*)>& validate) {
  std::array<Jet<N>, N> in;
  for (int k = 0; k < N; ++k) in[k] = Jet<N>::variable(x[k], k);
  std::vector<Jet<N>> out(p.num_outputs());
  std::vector<Jet<N>> scratch;
  p.run(in.data(), out.data(), scratch);
  const int m = static_cast<int>(out.size());
  FieldDerivatives r;
  r.value.resize(m);
  r.d.resize(m, N);
  for (int o = 0; o < m; ++o) {
    r.value[o] = out[o].v;
    for (int k = 0; k < N; ++k) r.d(o, k) = out[o].d[k];
  }
  if (validate) {
    std::vector<double> v(r.value.data(), r.value.data() + m);
    validate(v.data());
  }
  if (second) {
    r.dd.assign(m, Matrix(N, N));
    for (int o = 0; o < m; ++o)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) r.dd[o](k, l) = out[o].hess(k, l);
  }
  return r;
}

}  // namespace

void ChartSpec::validate() const {
  const int n = dim();
  if (n < 1) throw Error(ErrorCode::kValidation, "chart has no coordinates");
  std::set<std::string> seen;
  for (const auto& c : coords) {
    if (c.empty() || is_builtin_name(c)) throw Error(ErrorCode::kValidation, "invalid coordinate name '" + c + "'");
    if (!seen.insert(c).second) throw Error(ErrorCode::kValidation, "duplicate coordinate '" + c + "'");
    if (params.count(c)) throw Error(ErrorCode::kValidation, "coordinate '" + c + "' is also a parameter");
  }
  if (static_cast<int>(metric.size()) != n)
    throw Error(ErrorCode::kValidation, "metric must have " + std::to_string(n) + " rows");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(metric[i].size()) != n)
      throw Error(ErrorCode::kValidation, "metric row " + std::to_string(i + 1) + " has wrong length");
    for (int j = 0; j < i; ++j) {
      if (!(metric[i][j] == metric[j][i]))
        throw Error(ErrorCode::kValidation, "metric entries g_" + std::to_string(j + 1) + "_" + std::to_string(i + 1) +
                                                " and g_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) +
                                                " differ");
    }
  }
  if (static_cast<int>(domain.size()) != n)
    throw Error(ErrorCode::kValidation, "domain must give an interval for every coordinate");
  for (int i = 0; i < n; ++i) {
    if (!(domain[i].hi > domain[i].lo) || !std::isfinite(domain[i].lo) || !std::isfinite(domain[i].hi))
      throw Error(ErrorCode::kValidation, "degenerate domain interval for '" + coords[i] + "'");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (const auto& v : metric[i][j].variables()) {
        if (!seen.count(v) && !params.count(v))
          throw Error(ErrorCode::kValidation, "metric entry g_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) +
                                                  " uses undeclared name '" + v + "'");
      }
    }
  }
}

FormField::FormField(int dim, int degree) : dim_(dim), degree_(degree) {
  if (degree < 1 || degree > 3 || degree > dim)
    throw Error(ErrorCode::kInvalidArgument, "form degree must be 1, 2 or 3 and at most the dimension");
}

void FormField::set(std::vector<int> indices, const Expression& e) {
  if (static_cast<int>(indices.size()) != degree_)
    throw Error(ErrorCode::kInvalidArgument, "form component needs " + std::to_string(degree_) + " indices");
  for (int i : indices)
    if (i < 0 || i >= dim_) throw Error(ErrorCode::kInvalidArgument, "form index out of range");
  const int sign = permutation_sign_sort(indices);
  for (std::size_t i = 1; i < indices.size(); ++i)
    if (indices[i] == indices[i - 1]) throw Error(ErrorCode::kInvalidArgument, "repeated form index");
  components_[indices] = sign > 0 ? e : negate(e);
}

std::vector<std::vector<int>> FormField::canonical_indices(int dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(degree);
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == degree) {
      out.push_back(idx);
      return;
    }
    for (int i = start; i < dim; ++i) {
      idx[pos] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
  return out;
}

std::vector<Expression> FormField::canonical_components() const {
  std::vector<Expression> out;
  for (const auto& idx : canonical_indices(dim_, degree_)) {
    const auto it = components_.find(idx);
    out.push_back(it == components_.end() ? Expression::number(0.0) : it->second);
  }
  return out;
}

void DiffConfig::validate() const {
  if (order != 2 && order != 4 && order != 6)
    throw Error(ErrorCode::kInvalidArgument, "finite-difference order must be 2, 4 or 6");
  if (!(relative_step > 0.0) || relative_step > 0.05)
    throw Error(ErrorCode::kInvalidArgument, "relative step must lie in (0, 0.05]");
}

Chart::Chart(ChartSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int n = dim();
  std::vector<Expression> upper;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) upper.push_back(spec_.metric[i][j]);
  metric_prog_ = compile(upper);
}

int Chart::metric_slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  const int n = dim();
  return i * n - i * (i - 1) / 2 + (j - i);
}

Matrix Chart::assemble_metric(const double* v) const {
  const int n = dim();
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) g(i, j) = g(j, i) = v[metric_slot(i, j)];
  return g;
}

Vector Chart::steps(const DiffConfig& cfg) const {
  Vector h(dim());
  for (int k = 0; k < dim(); ++k) h[k] = cfg.relative_step * spec_.domain[k].extent();
  return h;
}

bool Chart::inside(const Vector& x) const {
  for (int k = 0; k < dim(); ++k)
    if (x[k] < spec_.domain[k].lo || x[k] > spec_.domain[k].hi) return false;
  return true;
}

void Chart::check_stencil(const Vector& x, const DiffConfig& cfg) const {
  if (x.size() != dim()) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  const Vector h = steps(cfg);
  const int reach = cfg.reach();
  for (int k = 0; k < dim(); ++k) {
    const double slack = 1e-12 * spec_.domain[k].extent();
    if (x[k] - reach * h[k] < spec_.domain[k].lo - slack || x[k] + reach * h[k] > spec_.domain[k].hi + slack) {
      throw Error(ErrorCode::kStencilOutsideDomain,
                  "stencil around " + spec_.coords[k] + " = " + std::to_string(x[k]) + " leaves the chart domain");
    }
  }
}

Program Chart::compile(const std::vector<Expression>& exprs) const { return Program(exprs, spec_.coords, spec_.params); }

Matrix Chart::metric_components(const Vector& x) const {
  std::vector<double> in(x.data(), x.data() + x.size());
  return assemble_metric(metric_prog_(in).data());
}

MetricPoint Chart::metric(const Vector& x) const { return MetricPoint(metric_components(x)); }

FieldDerivatives Chart::differentiate(const Program& p, const Vector& x, const DiffConfig& cfg, bool second,
                                      const std::function<void(const double*)>& validate, bool check_domain) const {
  const int n = dim();
  if (x.size() != n) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  if (check_domain) check_stencil(x, cfg);

  if (cfg.scheme == DiffConfig::Scheme::kJet) {
    switch (n) {
      case 1: return jet_derivatives<1>(p, x, second, validate);
      case 2: return jet_derivatives<2>(p, x, second, validate);
      case 3: return jet_derivatives<3>(p, x, second, validate);
      case 4: return jet_derivatives<4>(p, x, second, validate);
      case 5: return jet_derivatives<5>(p, x, second, validate);
      case 6: return jet_derivatives<6>(p, x, second, validate);
      case 7: return jet_derivatives<7>(p, x, second, validate);
      case 8: return jet_derivatives<8>(p, x, second, validate);
      default: throw Error(ErrorCode::kInvalidArgument, "jet differentiation supports dimensions 1 to 8");
    }
  }

  cfg.validate();
  const Stencil& s1 = first_derivative_stencil(cfg.order);
  const Stencil& s2 = second_derivative_stencil(cfg.order);
  const int reach = cfg.order / 2;
  const Vector h = steps(cfg);
  const int m = static_cast<int>(p.num_outputs());

  std::vector<double> scratch;
  std::vector<double> in(n);
  auto eval_at = [&](const Vector& y, double* out) {
    for (int k = 0; k < n; ++k) in[k] = y[k];
    p.run(in.data(), out, scratch);
    if (validate) validate(out);
  };

  FieldDerivatives r;
  r.value.resize(m);
  eval_at(x, r.value.data());

  // axis[k][reach + s] holds the outputs at x + s h_k e_k.
  std::vector<std::vector<Vector>> axis(n, std::vector<Vector>(2 * reach + 1));
  for (int k = 0; k < n; ++k) {
    for (int s = -reach; s <= reach; ++s) {
      Vector& v = axis[k][reach + s];
      v.resize(m);
      if (s == 0) {
        v = r.value;
        continue;
      }
      Vector y = x;
      y[k] += s * h[k];
      eval_at(y, v.data());
    }
  }

  // Weights for +s are stored at index reach + s; sum smallest terms first.
  r.d.resize(m, n);
  for (int k = 0; k < n; ++k) {
    Vector acc = Vector::Zero(m);
    for (int s = reach; s >= 1; --s)
      acc += s1.weights[reach + s] * (axis[k][reach + s] - axis[k][reach - s]);
    r.d.col(k) = acc / h[k];
  }
  if (!second) return r;

  r.dd.assign(m, Matrix::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    Vector acc = Vector::Zero(m);
    for (int s = reach; s >= 1; --s) acc += s2.weights[reach + s] * (axis[k][reach + s] + axis[k][reach - s]);
    acc += s2.weights[reach] * r.value;
    acc /= h[k] * h[k];
    for (int o = 0; o < m; ++o) r.dd[o](k, k) = acc[o];
  }
  Vector corner(m);
  for (int k = 0; k < n; ++k) {
    for (int l = k + 1; l < n; ++l) {
      Vector acc = Vector::Zero(m);
      for (int a = reach; a >= 1; --a) {
        for (int b = reach; b >= 1; --b) {
          Vector part = Vector::Zero(m);
          for (int sa : {1, -1}) {
            for (int sb : {1, -1}) {
              Vector y = x;
              y[k] += sa * a * h[k];
              y[l] += sb * b * h[l];
              eval_at(y, corner.data());
              part += (sa * sb) * corner;
            }
          }
          acc += (s1.weights[reach + a] * s1.weights[reach + b]) * part;
        }
      }
      acc /= h[k] * h[l];
      for (int o = 0; o < m; ++o) r.dd[o](k, l) = r.dd[o](l, k) = acc[o];
    }
  }
  return r;
}

GeometryPoint geometry_from_jet(const Vector& x, const Matrix& gm, const std::vector<Matrix>& dg,
                                const std::vector<Matrix>& ddg, double symmetry_tolerance) {
  const int n = static_cast<int>(gm.rows());
  MetricPoint g(gm);
  const Matrix& gi = g.inverse();

  // lowered[l](i,j) = Gamma_{l,ij}
  std::vector<Matrix> lowered(n, Matrix(n, n));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lowered[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  std::vector<Matrix> gamma(n, Matrix::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const double c = gi(k, l);
      if (c != 0.0) gamma[k] += c * lowered[l];
    }

  auto dd = [&](int a, int b, int i, int j) { return ddg[a * n + b](i, j); };
  RiemannPoint rm(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = k + 1; l < n; ++l) {
          double v = 0.5 * (dd(j, k, i, l) + dd(i, l, j, k) - dd(j, l, i, k) - dd(i, k, j, l));
          for (int p = 0; p < n; ++p) v += lowered[p](j, k) * gamma[p](i, l) - lowered[p](j, l) * gamma[p](i, k);
          rm(i, j, k, l) = v;
          rm(j, i, k, l) = -v;
          rm(i, j, l, k) = -v;
          rm(j, i, l, k) = v;
        }
      }
    }
  }
  const double defect = rm.symmetry_defect();
  if (defect > symmetry_tolerance)
    throw Error(ErrorCode::kSymmetryViolation, "Riemann tensor symmetry defect " + std::to_string(defect));
  SymTensorPoint ric = ricci(g, rm);
  const double r = scalar_curvature(g, ric);
  return GeometryPoint{x, std::move(g), dg, std::move(gamma), std::move(rm), std::move(ric), r};
}

GeometryPoint geometry_at(const Chart& chart, const Vector& x, const DiffConfig& cfg, bool check_domain) {
  const int n = chart.dim();
  const FieldDerivatives fd = chart.differentiate(
      chart.metric_program(), x, cfg, true, [&](const double* v) { check_spd(chart.assemble_metric(v)); },
      check_domain);
  const Matrix g = chart.assemble_metric(fd.value.data());
  std::vector<Matrix> dg(n, Matrix(n, n));
  std::vector<Matrix> ddg(static_cast<std::size_t>(n) * n, Matrix(n, n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int s = chart.metric_slot(i, j);
      for (int k = 0; k < n; ++k) {
        dg[k](i, j) = fd.d(s, k);
        for (int l = 0; l < n; ++l) ddg[k * n + l](i, j) = fd.dd[s](k, l);
      }
    }
  }
  return geometry_from_jet(x, g, dg, ddg);
}

ExpressionFormSource::ExpressionFormSource(const Chart& chart, const FormField& field) : chart_(chart) {
  if (field.degree() != 2) throw Error(ErrorCode::kInvalidArgument, "expected a 2-form field");
  if (field.dim() != chart.dim()) throw Error(ErrorCode::kDimensionMismatch, "form and chart dimensions differ");
  slots_ = FormField::canonical_indices(field.dim(), 2);
  prog_ = chart.compile(field.canonical_components());
}

Matrix ExpressionFormSource::value(const Vector& x) const {
  const int n = chart_.dim();
  std::vector<double> in(x.data(), x.data() + n);
  const std::vector<double> v = prog_(in);
  Matrix f = Matrix::Zero(n, n);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    f(slots_[s][0], slots_[s][1]) = v[s];
    f(slots_[s][1], slots_[s][0]) = -v[s];
  }
  return f;
}

FormJet ExpressionFormSource::at(const Vector& x, const DiffConfig& cfg) const {
  const int n = chart_.dim();
  const FieldDerivatives fd = chart_.differentiate(prog_, x, cfg, false);
  FormJet j{Matrix::Zero(n, n), std::vector<Matrix>(n, Matrix::Zero(n, n))};
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    const int a = slots_[s][0], b = slots_[s][1];
    j.value(a, b) = fd.value[s];
    j.value(b, a) = -fd.value[s];
    for (int k = 0; k < n; ++k) {
      j.d[k](a, b) = fd.d(s, k);
      j.d[k](b, a) = -fd.d(s, k);
    }
  }
  return j;
}

std::vector<Matrix> fd_gradient(const std::function<Matrix(const Vector&)>& fn, const Vector& x, const Vector& h,
                                int order) {
  const Stencil& s1 = first_derivative_stencil(order);
  const int reach = order / 2;
  std::vector<Matrix> d;
  for (int k = 0; k < x.size(); ++k) {
    Matrix acc;
    for (int s = reach; s >= 1; --s) {
      Vector yp = x, ym = x;
      yp[k] += s * h[k];
      ym[k] -= s * h[k];
      const Matrix term = s1.weights[reach + s] * (fn(yp) - fn(ym));
      if (acc.size() == 0) {
        acc = term;
      } else {
        acc += term;
      }
    }
    d.push_back(acc / h[k]);
  }
  return d;
}

FunctionFormSource::FunctionFormSource(const Chart& chart, std::function<Matrix(const Vector&)> fn)
    : chart_(chart), fn_(std::move(fn)) {}

FormJet FunctionFormSource::at(const Vector& x, const DiffConfig& cfg) const {
  DiffConfig fdc = cfg;
  fdc.scheme = DiffConfig::Scheme::kFiniteDifference;
  chart_.check_stencil(x, fdc);
  return FormJet{fn_(x), fd_gradient(fn_, x, chart_.steps(fdc), fdc.order)};
}

ThreeForm ext_d(const FormJet& f) {
  const int n = static_cast<int>(f.value.rows());
  ThreeForm t(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) t(i, j, k) = f.d[i](j, k) + f.d[j](k, i) + f.d[k](i, j);
  return t;
}

double three_form_norm2(const MetricPoint& g, const ThreeForm& t) {
  const int n = t.n;
  const Matrix& gi = g.inverse();
  // Raise one slot at a time.
  std::vector<double> a(t.c.size(), 0.0), b(t.c.size(), 0.0);
  auto at = [n](std::vector<double>& v, int i, int j, int k) -> double& {
    return v[(static_cast<std::size_t>(i) * n + j) * n + k];
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += gi(i, p) * t(p, j, k);
        at(a, i, j, k) = s;
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += gi(j, p) * at(a, i, p, k);
        at(b, i, j, k) = s;
      }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += gi(k, p) * at(b, i, j, p);
        total += s * t(i, j, k);
      }
  return total;
}

std::vector<Matrix> cov_deriv_covariant(const GeometryPoint& geo, const Matrix& t, const std::vector<Matrix>& dt) {
  const int n = static_cast<int>(t.rows());
  std::vector<Matrix> out(n, Matrix(n, n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = dt[k](i, j);
        for (int p = 0; p < n; ++p) v -= geo.christoffel[p](k, i) * t(p, j) + geo.christoffel[p](k, j) * t(i, p);
        out[k](i, j) = v;
      }
    }
  }
  return out;
}

std::vector<Matrix> cov_deriv_mixed(const GeometryPoint& geo, const Matrix& t, const std::vector<Matrix>& dt) {
  const int n = static_cast<int>(t.rows());
  std::vector<Matrix> out(n, Matrix(n, n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double v = dt[k](i, j);
        for (int p = 0; p < n; ++p) v += geo.christoffel[i](k, p) * t(p, j) - geo.christoffel[p](k, j) * t(i, p);
        out[k](i, j) = v;
      }
    }
  }
  return out;
}

double rank3_norm2(const MetricPoint& g, const std::vector<Matrix>& t) {
  const int n = g.dim();
  const Matrix& gi = g.inverse();
  double total = 0.0;
  for (int k = 0; k < n; ++k)
    for (int kk = 0; kk < n; ++kk) {
      if (gi(k, kk) == 0.0) continue;
      total += gi(k, kk) * (gi * t[k] * gi).cwiseProduct(t[kk]).sum();
    }
  return total;
}

double mixed_rank3_norm2(const MetricPoint& g, const std::vector<Matrix>& t) {
  std::vector<Matrix> lowered;
  for (const Matrix& m : t) lowered.push_back(g.components() * m);
  return rank3_norm2(g, lowered);
}

Vector codiff(const GeometryPoint& geo, const FormJet& f) {
  const int n = static_cast<int>(f.value.rows());
  const std::vector<Matrix> nab = cov_deriv_covariant(geo, f.value, f.d);
  const Matrix& gi = geo.g.inverse();
  Vector out = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int p = 0; p < n; ++p) s += gi(i, p) * nab[p](i, j);
    out[j] = -s;
  }
  return out;
}

double one_form_norm2(const MetricPoint& g, const Vector& v) { return v.dot(g.inverse() * v); }

ThreeForm ext_d_at(const Chart& chart, const FormField& two_form, const Vector& x, const DiffConfig& cfg) {
  ExpressionFormSource src(chart, two_form);
  return ext_d(src.at(x, cfg));
}

Matrix ext_d_one_form_at(const Chart& chart, const FormField& one_form, const Vector& x, const DiffConfig& cfg) {
  if (one_form.degree() != 1) throw Error(ErrorCode::kInvalidArgument, "expected a 1-form field");
  const int n = chart.dim();
  const Program p = chart.compile(one_form.canonical_components());
  const FieldDerivatives fd = chart.differentiate(p, x, cfg, false);
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = fd.d(j, i) - fd.d(i, j);
  return out;
}

Vector codiff_at(const Chart& chart, const FormField& two_form, const Vector& x, const DiffConfig& cfg) {
  ExpressionFormSource src(chart, two_form);
  const GeometryPoint geo = geometry_at(chart, x, cfg);
  return codiff(geo, src.at(x, cfg));
}

std::vector<Matrix> cov_deriv_at(const Chart& chart, const FormField& two_form, const Vector& x,
                                 const DiffConfig& cfg) {
  ExpressionFormSource src(chart, two_form);
  const GeometryPoint geo = geometry_at(chart, x, cfg);
  const FormJet j = src.at(x, cfg);
  return cov_deriv_covariant(geo, j.value, j.d);
}

std::vector<Matrix> cov_deriv_at(const Chart& chart, const ExpressionMatrix& mixed, const Vector& x,
                                 const DiffConfig& cfg) {
  const int n = chart.dim();
  std::vector<Expression> flat;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) flat.push_back(mixed.at(i).at(j));
  const Program p = chart.compile(flat);
  const FieldDerivatives fd = chart.differentiate(p, x, cfg, false);
  Matrix t(n, n);
  std::vector<Matrix> dt(n, Matrix(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      t(i, j) = fd.value[i * n + j];
      for (int k = 0; k < n; ++k) dt[k](i, j) = fd.d(i * n + j, k);
    }
  const GeometryPoint geo = geometry_at(chart, x, cfg);
  return cov_deriv_mixed(geo, t, dt);
}

std::vector<Matrix> metric_cov_deriv_at(const Chart& chart, const Vector& x, const DiffConfig& cfg) {
  const GeometryPoint geo = geometry_at(chart, x, cfg);
  return cov_deriv_covariant(geo, geo.g.components(), geo.dg);
}

}  // namespace em4lab
