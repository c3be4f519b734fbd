#include "em4lab/varopt.hpp"

#include "em4lab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace em4lab {

namespace {

constexpr double kPi = 3.14159265358979323846;

Bindings merge_settings(const std::string& name, const Bindings& defaults, const Bindings& given) {
  Bindings out = defaults;
  for (const auto& [k, v] : given) {
    if (!defaults.count(k)) throw Error(ErrorCode::kInvalidArgument, name + ": unknown setting '" + k + "'");
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, name + ": setting '" + k + "' is not finite");
    out[k] = v;
  }
  return out;
}

void infeasible(const std::string& name, const std::string& why) {
  throw Error(ErrorCode::kInvalidArgument, name + ": constraint infeasible (" + why + ")");
}

ParamFamily s2xs2_periods(const Bindings& given) {
  const double v0 = 16 * kPi * kPi;
  Bindings s = merge_settings("s2xs2-periods", {{"V", v0}, {"P1", 4 * kPi}, {"P2", 4 * kPi}, {"lo", 0.0}, {"hi", 0.0}},
                              given);
  const double V = s["V"], P1 = s["P1"], P2 = s["P2"];
  if (!(V > 0.0)) infeasible("s2xs2-periods", "volume must be > 0");
  const double a0 = std::pow(V / v0, 0.25);
  const double lo = s["lo"] != 0.0 ? s["lo"] : 0.5 * a0;
  const double hi = s["hi"] != 0.0 ? s["hi"] : 2.0 * a0;
  if (!(lo > 0.0) || !(hi > lo)) infeasible("s2xs2-periods", "box for a must satisfy 0 < lo < hi");
  ParamFamily f;
  f.name = "s2xs2-periods";
  f.params = {"a"};
  f.box = {{lo, hi}};
  f.volume = V;
  f.periods = {P1, P2};
  const double sv = std::sqrt(V);
  auto other = [sv](double a) { return sv / (4 * kPi * a); };
  f.build = [=](const Vector& t) {
    const double a = t[0], b = other(a);
    if (!(a > 0.0)) infeasible("s2xs2-periods", "a must be > 0");
    ExampleManifold m = builtin("s2xs2", {{"a", a},
                                          {"b", b},
                                          {"alpha", P1 / (4 * kPi * a * a)},
                                          {"beta", P2 / (4 * kPi * b * b)}});
    m.name = "s2xs2-periods";
    return m;
  };
  if (P1 == P2) f.symmetry = [=](const Vector& t) { return Vector::Constant(1, other(t[0])); };
  f.balance = [=](const Vector& t) {
    const double a = t[0], b = other(a);
    const double al = P1 / (4 * kPi * a * a), be = P2 / (4 * kPi * b * b);
    return (1 / (a * a) - al * al) - (1 / (b * b) - be * be);
  };
  return f;
}

ParamFamily flat_t4(const Bindings& given) {
  const double v0 = std::pow(2 * kPi, 4);
  Bindings s = merge_settings("flat-t4", {{"V", v0}, {"lo", 0.0}, {"hi", 0.0}}, given);
  const double V = s["V"];
  if (!(V > 0.0)) infeasible("flat-t4", "volume must be > 0");
  const double l0 = std::pow(V, 0.25);
  const double lo = s["lo"] != 0.0 ? s["lo"] : 0.5 * l0;
  const double hi = s["hi"] != 0.0 ? s["hi"] : 2.0 * l0;
  if (!(lo > 0.0) || !(hi > lo)) infeasible("flat-t4", "box must satisfy 0 < lo < hi");
  ParamFamily f;
  f.name = "flat-t4";
  f.params = {"l1", "l2"};
  f.box = {{lo, hi}, {lo, hi}};
  f.volume = V;
  f.periods = {};
  f.build = [=](const Vector& t) {
    if (!(t[0] > 0.0) || !(t[1] > 0.0)) infeasible("flat-t4", "lengths must be > 0");
    const double l3 = std::sqrt(V / (t[0] * t[1]));
    const double len[4] = {t[0], t[1], l3, l3};
    ExampleManifold m = builtin("flat-torus-4");
    m.name = "flat-t4";
    for (int i = 0; i < 4; ++i) {
      const double sc = len[i] / (2 * kPi);
      m.chart.metric[i][i] = Expression::number(sc * sc);
    }
    m.J.reset();
    m.expected = Expected{};
    m.expected.volume = V;
    return m;
  };
  f.symmetry = [](const Vector& t) {
    Vector r(2);
    r << t[1], t[0];
    return r;
  };
  return f;
}

double evaluate(const ParamFamily& family, const Vector& theta, const FunctionalConfig& cfg) {
  const ExampleManifold m = family.build(theta);
  const IntegrationDomain d(m);
  const bool has_f = m.F && !m.F->components().empty();
  Program prog;
  std::vector<std::vector<int>> idx;
  if (has_f) {
    prog = d.chart().compile(m.F->canonical_components());
    idx = FormField::canonical_indices(4, 2);
  }
  const double kappa = cfg.kappa;
  const CurvatureIntegrand f = [&](const Vector& x, const Curvature4& c, double* out) {
    double f2 = 0.0;
    if (has_f) {
      const std::vector<double> v = prog(std::vector<double>(x.data(), x.data() + 4));
      Eigen::Matrix4d F = Eigen::Matrix4d::Zero();
      for (std::size_t k = 0; k < idx.size(); ++k) {
        F(idx[k][0], idx[k][1]) = v[k];
        F(idx[k][1], idx[k][0]) = -v[k];
      }
      f2 = (c.ginv * F * c.ginv).cwiseProduct(F).sum();
    }
    out[0] = c.scalar + kappa * f2;
  };
  return integrate(d, 1, f, cfg.nodes).value[0];
}

Vector clamp_to(const std::vector<Interval>& box, const Vector& t, bool& clamped) {
  Vector r = t;
  clamped = false;
  for (int k = 0; k < r.size(); ++k) {
    const double c = std::clamp(r[k], box[k].lo, box[k].hi);
    if (c != r[k]) clamped = true;
    r[k] = c;
  }
  return r;
}

std::string format_theta(const Vector& t) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (int k = 0; k < t.size(); ++k) os << (k ? ", " : "") << t[k];
  os << ")";
  return os.str();
}

std::string trace_tail(const std::vector<DescentStep>& trace) {
  std::ostringstream os;
  os.precision(6);
  const std::size_t from = trace.size() > 5 ? trace.size() - 5 : 0;
  for (std::size_t i = from; i < trace.size(); ++i)
    os << "\n  iter " << trace[i].iteration << " theta " << format_theta(trace[i].theta) << " A " << trace[i].value
       << " |grad| " << trace[i].gradient_norm;
  return os.str();
}

/// Central-difference gradient and Hessian of f on the 3^d stencil at c.
void stencil_fit(const std::function<double(const Vector&)>& f, const Vector& c, const Vector& h, double f0,
                 Vector& grad, Matrix& hess) {
  const int d = static_cast<int>(c.size());
  grad = Vector::Zero(d);
  hess = Matrix::Zero(d, d);
  auto at = [&](int i, int si, int j, int sj) {
    Vector x = c;
    x[i] += si * h[i];
    if (j >= 0) x[j] += sj * h[j];
    return f(x);
  };
  for (int i = 0; i < d; ++i) {
    const double p = at(i, 1, -1, 0), m = at(i, -1, -1, 0);
    grad[i] = (p - m) / (2 * h[i]);
    hess(i, i) = (p - 2 * f0 + m) / (h[i] * h[i]);
    for (int j = 0; j < i; ++j) {
      const double v = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4 * h[i] * h[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
}

}  // namespace

bool ParamFamily::contains(const Vector& theta) const {
  if (theta.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k)
    if (!(theta[k] >= box[k].lo && theta[k] <= box[k].hi)) return false;
  return true;
}

ParamFamily make_family(const std::string& name, const Bindings& settings) {
  if (name == "s2xs2-periods") return s2xs2_periods(settings);
  if (name == "flat-t4") return flat_t4(settings);
  throw Error(ErrorCode::kInvalidArgument, "unknown family '" + name + "'");
}

std::vector<std::string> family_names() { return {"s2xs2-periods", "flat-t4"}; }

double functional_eval(const ParamFamily& family, const Vector& theta, const FunctionalConfig& cfg) {
  if (!family.contains(theta))
    throw Error(ErrorCode::kInvalidArgument, family.name + ": parameters " + format_theta(theta) + " outside the box");
  return evaluate(family, theta, cfg);
}

std::string to_string(CriticalKind k) { return k == CriticalKind::kMinimum ? "minimum" : "maximum"; }

bool ScanResult::all_degenerate() const {
  return !degenerate.empty() && std::all_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; });
}

ScanResult scan_function(const std::vector<Interval>& box, const std::function<double(const Vector&)>& f,
                         int resolution) {
  const int d = static_cast<int>(box.size());
  if (d < 1 || d > 2) throw Error(ErrorCode::kInvalidArgument, "grid scan supports 1 or 2 parameters");
  if (resolution < 3) throw Error(ErrorCode::kInvalidArgument, "grid scan resolution must be >= 3");
  const int r = resolution;
  Vector h(d);
  for (int k = 0; k < d; ++k) h[k] = box[k].extent() / (r - 1);
  ScanResult s;
  s.resolution = r;
  const int total = d == 1 ? r : r * r;
  auto coord = [&](int flat) {
    std::array<int, 2> ij{flat, 0};
    if (d == 2) ij = {flat / r, flat % r};
    return ij;
  };
  for (int p = 0; p < total; ++p) {
    const auto ij = coord(p);
    Vector t(d);
    for (int k = 0; k < d; ++k) t[k] = box[k].lo + ij[k] * h[k];
    s.points.push_back(t);
    s.values.push_back(f(t));
  }
  auto index = [&](int i, int j) { return d == 1 ? i : i * r + j; };
  s.degenerate.assign(total, false);
  for (int p = 0; p < total; ++p) {
    const auto ij = coord(p);
    const double v = s.values[p];
    bool all_equal = true, lower = true, higher = true, interior = true;
    for (int di = -1; di <= 1; ++di)
      for (int dj = (d == 2 ? -1 : 0); dj <= (d == 2 ? 1 : 0); ++dj) {
        if (di == 0 && dj == 0) continue;
        const int i = ij[0] + di, j = ij[1] + dj;
        if (i < 0 || i >= r || (d == 2 && (j < 0 || j >= r))) {
          interior = false;
          continue;
        }
        const double w = s.values[index(i, j)];
        if (std::abs(w - v) > 1e-12 * (1.0 + std::abs(v))) all_equal = false;
        if (!(v < w)) lower = false;
        if (!(v > w)) higher = false;
      }
    s.degenerate[p] = all_equal;
    if (!interior || all_equal || !(lower || higher)) continue;

    ScanCandidate c;
    c.grid_theta = s.points[p];
    c.kind = lower ? CriticalKind::kMinimum : CriticalKind::kMaximum;
    Vector centre = c.grid_theta, step = h;
    double fc = v;
    const double floor = 1e-6 * box[0].extent();
    for (int it = 0; it < 100 && step.maxCoeff() > floor; ++it) {
      Vector grad;
      Matrix hess;
      stencil_fit(f, centre, step, fc, grad, hess);
      Vector delta = -hess.fullPivLu().solve(grad);
      if (!delta.allFinite()) break;
      for (int k = 0; k < d; ++k) delta[k] = std::clamp(delta[k], -step[k], step[k]);
      for (int k = 0; k < d; ++k) centre[k] = std::clamp(centre[k] + delta[k], box[k].lo, box[k].hi);
      fc = f(centre);
      // Shrink only once the vertex lies well inside the stencil.
      if ((delta.array().abs() <= 0.5 * step.array()).all()) step /= 8.0;
    }
    c.theta = centre;
    c.value = fc;
    s.candidates.push_back(c);
  }
  return s;
}

ScanResult grid_scan(const ParamFamily& family, int resolution, const FunctionalConfig& cfg) {
  return scan_function(family.box, [&](const Vector& t) { return evaluate(family, t, cfg); }, resolution);
}

Vector functional_gradient(const ParamFamily& family, const Vector& theta, const FunctionalConfig& cfg,
                           double fd_step) {
  const int d = family.dim();
  Vector g(d);
  for (int k = 0; k < d; ++k) {
    const double h = fd_step * family.box[k].extent();
    Vector p = theta, m = theta;
    p[k] += h;
    m[k] -= h;
    g[k] = (evaluate(family, p, cfg) - evaluate(family, m, cfg)) / (2 * h);
  }
  return g;
}

CriticalReport descend(const ParamFamily& family, const Vector& theta0, const DescentConfig& cfg,
                       const ScanResult* scan) {
  if (!family.contains(theta0))
    throw Error(ErrorCode::kInvalidArgument,
                family.name + ": starting point " + format_theta(theta0) + " outside the box");
  const int d = family.dim();
  auto grad = [&](const Vector& t) { return functional_gradient(family, t, cfg.functional, cfg.fd_step); };

  CriticalReport r;
  r.family = family.name;
  r.params = family.params;
  Vector theta = theta0;
  double value = evaluate(family, theta, cfg.functional);
  Vector g = grad(theta);
  r.trace.push_back({0, theta, value, g.norm(), 0.0});
  int iter = 0, boundary_hits = 0;
  while (g.norm() > cfg.gradient_tolerance * (1.0 + std::abs(value))) {
    if (iter >= cfg.max_iterations)
      throw Error(ErrorCode::kConvergence, family.name + ": no critical point after " +
                                               std::to_string(iter) + " iterations" + trace_tail(r.trace));
    Matrix hess(d, d);
    for (int k = 0; k < d; ++k) {
      const double h = cfg.fd_step * family.box[k].extent();
      Vector p = theta, m = theta;
      p[k] += h;
      m[k] -= h;
      hess.col(k) = (grad(p) - grad(m)) / (2 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Vector merit_grad = hess * g;
    Vector dir = -hess.fullPivLu().solve(g);
    if (!dir.allFinite() || merit_grad.dot(dir) >= 0.0) dir = -merit_grad;
    const double merit = 0.5 * g.squaredNorm();
    const double slope = merit_grad.dot(dir);
    double t = 1.0;
    Vector trial, gt;
    bool clamped = false;
    while (true) {
      trial = clamp_to(family.box, theta + t * dir, clamped);
      gt = grad(trial);
      if (0.5 * gt.squaredNorm() <= merit + cfg.armijo * t * slope) break;
      t *= cfg.backtrack;
      if (clamped && (trial - theta).norm() == 0.0)
        throw Error(ErrorCode::kBoundaryHit, family.name + ": descent pinned to the parameter box at " +
                                                 format_theta(theta) + trace_tail(r.trace));
      if (t < 1e-12)
        throw Error(ErrorCode::kConvergence,
                    family.name + ": line search stalled at " + format_theta(theta) + trace_tail(r.trace));
    }
    boundary_hits = clamped ? boundary_hits + 1 : 0;
    if (boundary_hits >= 2)
      throw Error(ErrorCode::kBoundaryHit,
                  family.name + ": descent pinned to the parameter box at " + format_theta(trial) + trace_tail(r.trace));
    theta = trial;
    g = gt;
    value = evaluate(family, theta, cfg.functional);
    ++iter;
    r.trace.push_back({iter, theta, value, g.norm(), t});
  }

  r.theta = theta;
  r.value = value;
  r.gradient = g;
  r.gradient_norm = g.norm();
  r.gradient_tolerance = cfg.gradient_tolerance * (1.0 + std::abs(value));
  r.iterations = iter;

  const ExampleManifold m = family.build(theta);
  const Chart chart(m.chart);
  const FormField F = m.F ? *m.F : FormField(chart.dim(), 2);
  r.em = em_residuals(chart, F, cfg.em_points_per_axis, cfg.em_diff, cfg.em_tolerance);
  if (family.balance) r.balance = family.balance(theta);

  if (d <= 2) {
    const ScanResult s = scan ? *scan : grid_scan(family, cfg.scan_resolution, cfg.functional);
    r.scan_degenerate = s.all_degenerate();
    double best = INFINITY;
    for (const ScanCandidate& c : s.candidates) {
      const double dist = (c.theta - theta).norm();
      if (dist < best) {
        best = dist;
        r.scan = c;
      }
    }
    r.scan_distance = r.scan ? best : 0.0;
    r.oracle_agreement = r.scan_degenerate || (r.scan && best <= cfg.agreement);
  }
  const bool balanced = !r.balance || std::abs(*r.balance) <= cfg.em_tolerance;
  r.pass = r.gradient_norm <= r.gradient_tolerance && r.em.solution() && r.oracle_agreement && balanced;
  return r;
}

}  // namespace em4lab
