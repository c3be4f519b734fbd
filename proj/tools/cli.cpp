#include "cli.hpp"

#include "CLI11.hpp"

#include "em4lab/error.hpp"
#include "em4lab/expr.hpp"
#include "em4lab/kahler.hpp"
#include "em4lab/numeric.hpp"
#include "em4lab/report.hpp"
#include "em4lab/spec_file.hpp"
#include "em4lab/topo.hpp"
#include "em4lab/varopt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace em4lab::cli {

namespace {

using Json = Report::Json;

struct Options {
  std::string spec;
  std::vector<std::string> params;
  int grid = 9;
  int nodes = 48;
  int fd_order = 4;
  double step = 1e-3;
  double tol = 1e-6;
  std::string format = "table";
  std::string out;
  std::uint64_t seed = 1;

  std::vector<double> point;
  int random = 0;
  int algebra = 0;
  int dim = 4;
  bool convergence = false;
  bool jets = false;

  std::vector<double> a{0.5, 1.0, 2.0};
  double split_tol = 1e-8;

  double int_tol = 1e-3;
  bool corollary = false;
  double lebrun_a = 0.0;

  double kappa = kEinsteinMaxwellCoupling;
  std::vector<double> start;
  int scan = 21;
  double em_tol = 1e-5;
  int functional_nodes = 12;

  std::string export_dir;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string orientation_name(Orientation o) { return o == Orientation::kPositive ? "positive" : "negative"; }

Json vec_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Json point_json(const Vector& x) { return vec_json(x); }

Json stat_json(const Stat& s) { return Json{{"max", s.max}, {"mean", s.mean}}; }
Json range_json(const Range& r) { return Json{{"min", r.min}, {"max", r.max}, {"mean", r.mean}}; }
Json constancy_json(const Constancy& c) { return Json{{"mean", c.mean}, {"max_deviation", c.max_deviation}}; }
Json estimate_json(const Estimate& e) { return Json{{"value", e.value}, {"error", e.error}}; }

double constancy_threshold(const Constancy& c, double tol) { return tol * (1.0 + std::abs(c.mean)); }

Bindings parse_params(const std::vector<std::string>& items) {
  Bindings b;
  for (const std::string& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorCode::kInvalidArgument, "--param expects name=value, got '" + s + "'");
    const std::string name = s.substr(0, eq), value = s.substr(eq + 1);
    double v = 0.0;
    try {
      v = eval(parse(value), {});
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidArgument, "--param " + name + ": " + e.what());
    }
    b[name] = v;
  }
  return b;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, path + ": cannot read file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExampleManifold load_input(const Options& o, Report& r) {
  if (o.spec.empty()) throw Error(ErrorCode::kInvalidArgument, "a manifold spec is required");
  const Bindings overrides = parse_params(o.params);
  ExampleManifold m;
  if (o.spec.rfind("builtin:", 0) == 0) {
    m = builtin(o.spec.substr(8), overrides);
    r.set_input_name(o.spec);
  } else {
    const std::string text = read_file(o.spec);
    m = parse_spec(text, o.spec);
    for (const auto& [k, v] : overrides) {
      if (!m.chart.params.count(k)) throw Error(ErrorCode::kValidation, o.spec + ": no parameter '" + k + "'");
      m.chart.params[k] = v;
    }
    m.chart.validate();
    r.set_input(o.spec, text);
  }
  if (!overrides.empty()) {
    Json p = Json::object();
    for (const auto& [k, v] : overrides) p[k] = v;
    r.config()["params"] = p;
  }
  return m;
}

DiffConfig diff_config(const Options& o) {
  DiffConfig c;
  c.order = o.fd_order;
  c.relative_step = o.step;
  c.validate();
  return c;
}

void diff_json(const DiffConfig& c, Report& r) {
  r.config()["fd_order"] = c.order;
  r.config()["step"] = c.relative_step;
}

Matrix form_matrix(const std::vector<double>& v, int n) {
  Matrix f = Matrix::Zero(n, n);
  const auto idx = FormField::canonical_indices(n, 2);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    f(idx[k][0], idx[k][1]) = v[k];
    f(idx[k][1], idx[k][0]) = -v[k];
  }
  return f;
}

// check-em

void cmd_check_em(const Options& o, Report& r) {
  const ExampleManifold m = load_input(o, r);
  const Chart chart(m.chart);
  const DiffConfig cfg = diff_config(o);
  r.config()["grid"] = o.grid;
  diff_json(cfg, r);
  r.config()["tol"] = o.tol;
  const FormField F = m.F ? *m.F : FormField(chart.dim(), 2);
  if (!m.F) r.note("no [form_F]: checking the vacuum equations");
  const ExpressionFormSource src(chart, F);

  const std::vector<Vector> pts = sample_grid(chart, o.grid, cfg);
  std::vector<PointSample> samples(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { samples[i] = em_point(chart, src, pts[i], cfg); });
  const EMReport em = summarize(samples, chart.dim(), o.grid, o.tol);
  const ConservedScan cs = conserved_scan(samples, chart.dim());

  Json& res = r.results();
  res["dim"] = chart.dim();
  res["grid_points"] = em.grid_points;
  res["closed"] = stat_json(em.closed);
  res["coclosed"] = stat_json(em.coclosed);
  res["trace_free"] = stat_json(em.trace_free);
  res["f_form"] = stat_json(em.f_form);
  res["formulation_gap"] = em.formulation_gap;
  res["trace_identity_gap"] = em.trace_identity_gap;
  res["f"] = range_json(em.f);
  res["scalar"] = constancy_json(em.scalar);
  res["field_norm2"] = constancy_json(em.field_norm2);
  res["combination"] = constancy_json(em.combination);
  if (chart.dim() == 2) {
    res["field_norm"] = constancy_json(cs.field_norm);
    res["plus_branch"] = cs.plus_branch;
    res["minus_branch"] = cs.minus_branch;
    res["branch"] = cs.plus_branch <= cs.minus_branch ? "F = |F| dmu" : "F = -|F| dmu";
  }

  struct Residual {
    const char* name;
    const char* label;
    double PointSample::*field;
    double max;
  };
  const Residual residuals[] = {
      {"closed: max |dF|", "closed", &PointSample::closed, em.closed.max},
      {"coclosed: max |d*F|", "coclosed", &PointSample::coclosed, em.coclosed.max},
      {"trace-free: max |Ric0 - eta0|", "trace-free", &PointSample::trace_free, em.trace_free.max},
      {"f-form: max |Ric - eta - f g|", "f-form", &PointSample::f_form, em.f_form.max},
  };
  for (const Residual& c : residuals) {
    r.check_le(c.name, c.max, o.tol);
    if (c.max <= o.tol) continue;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].*c.field > samples[worst].*c.field) worst = i;
    std::ostringstream os;
    os << c.label << " residual " << fmt(c.max) << " exceeds " << fmt(o.tol) << " (worst at x = (";
    for (Eigen::Index k = 0; k < pts[worst].size(); ++k) os << (k ? ", " : "") << fmt(pts[worst][k]);
    os << "))";
    r.note(os.str());
  }
  if (chart.dim() == 2) {
    r.check_le("|F| constancy", cs.field_norm.max_deviation, constancy_threshold(cs.field_norm, o.tol));
    r.check_le("matching branch: min over signs of max |F -+ |F| dmu|", std::min(cs.plus_branch, cs.minus_branch),
               o.tol);
  } else {
    r.check_le("(4 - 2n) R + (n - 4) |F|^2 constancy", cs.combination.max_deviation,
               constancy_threshold(cs.combination, o.tol));
  }
}

// curvature

struct CurvatureSample {
  double scalar = 0.0;
  double ricci0_norm2 = 0.0;
  double rm_norm2 = 0.0;
  double symmetry = 0.0;
  double wplus_norm2 = 0.0;
  double wminus_norm2 = 0.0;
  double decomposition = 0.0;  // relative
  double einstein = 0.0;       // max |Ric - k g|
};

Range range_of(const std::vector<CurvatureSample>& s, double CurvatureSample::*field) {
  Range r{INFINITY, -INFINITY, 0.0};
  std::vector<double> v;
  v.reserve(s.size());
  for (const CurvatureSample& c : s) {
    r.min = std::min(r.min, c.*field);
    r.max = std::max(r.max, c.*field);
    v.push_back(c.*field);
  }
  r.mean = pairwise_sum(v) / static_cast<double>(v.size());
  return r;
}

Matrix random_matrix(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

MetricPoint random_metric(std::mt19937_64& rng, int n) {
  const Matrix a = random_matrix(rng, n, 1.0);
  return MetricPoint(a.transpose() * a + 0.3 * Matrix::Identity(n, n));
}

TwoFormPoint random_form(std::mt19937_64& rng, int n) {
  const double scale = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
  const Matrix a = random_matrix(rng, n, scale);
  return TwoFormPoint(a - a.transpose());
}

// Sum of Kulkarni-Nomizu squares h o h with random weights.
RiemannPoint random_curvature(std::mt19937_64& rng, int n) {
  RiemannPoint rm(n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 4; ++t) {
    const Matrix a = random_matrix(rng, n, 1.0);
    const Matrix h = 0.5 * (a + a.transpose());
    const double c = u(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            rm(i, j, k, l) += c * 2.0 * (h(i, k) * h(j, l) - h(i, l) * h(j, k));
  }
  return rm;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t i) {
  std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                  static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
  return std::mt19937_64(s);
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

void cmd_algebra(const Options& o, Report& r) {
  const int n = o.dim;
  const std::size_t count = static_cast<std::size_t>(o.algebra);
  r.set_input_name("random");
  r.config()["samples"] = o.algebra;
  r.config()["dim"] = n;
  r.config()["seed"] = o.seed;
  if (n == 4) {
    std::vector<double> comp(count), norm(count), decomp(count);
    parallel_for(count, [&](std::size_t i) {
      std::mt19937_64 rng = sample_rng(o.seed, i);
      const MetricPoint g = random_metric(rng, 4);
      const TwoFormPoint f = random_form(rng, 4);
      const RiemannPoint rm = random_curvature(rng, 4);
      const double nf = two_form_norm2(g, f);
      double c = 0.0, q = 0.0;
      for (Orientation s : {Orientation::kPositive, Orientation::kNegative}) {
        const StressSplitResiduals res = stress_split_residuals(g, s, f);
        c = std::max(c, res.composition / (1.0 + nf));
        q = std::max(q, res.norm / (1.0 + nf * nf));
      }
      comp[i] = c;
      norm[i] = q;
      const NormDecomposition d = norm_decomposition(g, Orientation::kPositive, rm);
      decomp[i] = d.residual / (1.0 + d.rm_norm2);
    });
    r.results()["max_composition_residual"] = max_of(comp);
    r.results()["max_norm_residual"] = max_of(norm);
    r.results()["max_decomposition_residual"] = max_of(decomp);
    r.check_le("eta0 = -2 F+ o F- (relative)", max_of(comp), 1e-10);
    r.check_le("|eta0|^2 = |F+|^2 |F-|^2 (relative)", max_of(norm), 1e-10);
    r.check_le("Riemann norm decomposition (relative)", max_of(decomp), 1e-9);
  } else if (n % 2 == 1 && n >= 3 && n <= 9) {
    std::vector<double> neg(count), evv(count), unit(count);
    parallel_for(count, [&](std::size_t i) {
      std::mt19937_64 rng = sample_rng(o.seed, i);
      const MetricPoint g = random_metric(rng, n);
      const TwoFormPoint f = random_form(rng, n);
      const OddKernel k = odd_kernel(g, f);
      neg[i] = std::max(0.0, -k.min_eigenvalue);
      evv[i] = k.eta_vv;
      unit[i] = std::abs(k.v.dot(g.components() * k.v) - 1.0);
    });
    r.results()["max_negative_eigenvalue"] = max_of(neg);
    r.results()["max_eta_vv"] = max_of(evv);
    r.check_le("eta is positive semidefinite: max negative eigenvalue", max_of(neg), 1e-10);
    r.check_le("kernel vector: max eta(v, v)", max_of(evv), 1e-10);
    r.check_le("kernel vector: max ||v|^2 - 1|", max_of(unit), 1e-10);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--algebra needs --dim 4 or an odd dimension from 3 to 9");
  }
}

void cmd_convergence(const Options& o, const ExampleManifold& m, const Chart& chart, Report& r) {
  if (!m.expected.scalar) throw Error(ErrorCode::kInvalidArgument, "--convergence needs an expected scalar curvature");
  const double exact = *m.expected.scalar;
  Vector x(chart.dim());
  for (int k = 0; k < chart.dim(); ++k) x[k] = chart.spec().domain[k].mid();
  if (!o.point.empty()) x = Eigen::Map<const Vector>(o.point.data(), static_cast<Eigen::Index>(o.point.size()));
  DiffConfig cfg = diff_config(o);
  r.config()["fd_order"] = cfg.order;
  r.config()["point"] = point_json(x);

  std::vector<double> steps, errors;
  for (int k = 0; k < 16; ++k) {
    cfg.relative_step = 0.04 / std::ldexp(1.0, k);
    steps.push_back(cfg.relative_step);
    errors.push_back(std::abs(geometry_at(chart, x, cfg).scalar - exact));
  }
  const auto best = std::min_element(errors.begin(), errors.end());
  const double floor = *best;
  const std::size_t last = static_cast<std::size_t>(best - errors.begin());
  // Rates count only while the finer error is still well above the floor.
  std::vector<double> rates, asymptotic;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    const double rate = std::log2(errors[k] / errors[k + 1]);
    rates.push_back(rate);
    if (k + 1 <= last && errors[k + 1] >= 100.0 * floor) asymptotic.push_back(rate);
  }
  double observed = NAN;
  if (!asymptotic.empty()) {
    std::vector<double> s = asymptotic;
    std::sort(s.begin(), s.end());
    observed = s[s.size() / 2];
  }
  Json& res = r.results();
  res["exact_scalar"] = exact;
  res["steps"] = steps;
  res["errors"] = errors;
  res["rates"] = rates;
  res["observed_order"] = observed;
  res["floor"] = floor;
  r.check("observed order", observed, cfg.order,
          std::isfinite(observed) && std::abs(observed - cfg.order) <= 0.15 * cfg.order);
  r.check_le("error floor", floor, 1e-9);
}

void cmd_curvature(const Options& o, Report& r) {
  if (o.algebra > 0) return cmd_algebra(o, r);
  const ExampleManifold m = load_input(o, r);
  const Chart chart(m.chart);
  const int n = chart.dim();
  if (o.convergence) return cmd_convergence(o, m, chart, r);
  const DiffConfig cfg = o.jets ? DiffConfig::jets() : diff_config(o);
  if (o.jets)
    r.config()["derivatives"] = "jets";
  else
    diff_json(cfg, r);
  r.config()["tol"] = o.tol;

  std::vector<Vector> pts;
  if (!o.point.empty()) {
    if (static_cast<int>(o.point.size()) != n)
      throw Error(ErrorCode::kInvalidArgument, "--point needs " + std::to_string(n) + " coordinates");
    pts.push_back(Eigen::Map<const Vector>(o.point.data(), n));
    r.config()["point"] = point_json(pts[0]);
  } else if (o.random > 0) {
    // Uniform in the central 90% of each coordinate interval.
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int t = 0; t < o.random; ++t) {
      Vector x(n);
      for (int k = 0; k < n; ++k) x[k] = chart.spec().domain[k].lo + u(rng) * chart.spec().domain[k].extent();
      pts.push_back(x);
    }
    r.config()["random_points"] = o.random;
    r.config()["seed"] = o.seed;
  } else {
    pts = sample_grid(chart, o.grid, cfg);
    r.config()["grid"] = o.grid;
  }

  const std::optional<double> k = m.expected.einstein_constant;
  std::vector<CurvatureSample> samples(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const GeometryPoint geo = geometry_at(chart, pts[i], cfg);
    CurvatureSample& s = samples[i];
    s.scalar = geo.scalar;
    s.ricci0_norm2 = tensor_norm2(geo.g, trace_free(geo.g, geo.ricci).components());
    s.rm_norm2 = riemann_norm2(geo.g, geo.riemann);
    s.symmetry = geo.riemann.symmetry_defect();
    if (n == 4) {
      const NormDecomposition d = norm_decomposition(geo.g, chart.orientation(), geo.riemann);
      s.wplus_norm2 = d.wplus_norm2;
      s.wminus_norm2 = d.wminus_norm2;
      s.decomposition = d.residual / (1.0 + d.rm_norm2);
    }
    if (k) s.einstein = (geo.ricci.components() - *k * geo.g.components()).cwiseAbs().maxCoeff();
  });

  Json& res = r.results();
  res["points"] = pts.size();
  res["scalar"] = range_json(range_of(samples, &CurvatureSample::scalar));
  res["ricci0_norm2"] = range_json(range_of(samples, &CurvatureSample::ricci0_norm2));
  res["rm_norm2"] = range_json(range_of(samples, &CurvatureSample::rm_norm2));
  if (n == 4) {
    res["wplus_norm2"] = range_json(range_of(samples, &CurvatureSample::wplus_norm2));
    res["wminus_norm2"] = range_json(range_of(samples, &CurvatureSample::wminus_norm2));
  }
  if (pts.size() == 1 && n == 4) {
    const GeometryPoint geo = geometry_at(chart, pts[0], cfg);
    const CurvatureBlocks b = curvature_blocks(geo.g, chart.orientation(), geo.riemann);
    res["wplus_eigenvalues"] = vec_json(b.wplus_eigenvalues());
    res["wminus_eigenvalues"] = vec_json(b.wminus_eigenvalues());
  }

  r.check_le("Riemann symmetry defect", range_of(samples, &CurvatureSample::symmetry).max, kRiemannSymmetryTolerance);
  if (n == 4)
    r.check_le("|Rm|^2 = R^2/6 + 2|Ric0|^2 + 4(|W+|^2 + |W-|^2) (relative)",
               range_of(samples, &CurvatureSample::decomposition).max, 1e-8);
  if (m.expected.scalar) {
    const Range s = range_of(samples, &CurvatureSample::scalar);
    const double dev = std::max(std::abs(s.max - *m.expected.scalar), std::abs(s.min - *m.expected.scalar));
    r.check_le("scalar curvature vs expected", dev, o.tol * (1.0 + std::abs(*m.expected.scalar)));
  }
  if (k) r.check_le("max |Ric - k g|", range_of(samples, &CurvatureSample::einstein).max, o.tol * (1.0 + std::abs(*k)));
}

// lebrun

void cmd_lebrun(const Options& o, Report& r) {
  const ExampleManifold m = load_input(o, r);
  const KahlerData data = kahler_data(m);
  const DiffConfig cfg = diff_config(o);
  r.config()["grid"] = o.grid;
  diff_json(cfg, r);
  r.config()["tol"] = o.tol;
  r.config()["split_tol"] = o.split_tol;
  r.config()["a"] = o.a;

  const KahlerReport kv = kahler_verify(data, o.grid, cfg, o.tol);
  Json& res = r.results();
  res["kahler"] = Json{{"orientation", orientation_name(kv.orientation)},
                       {"j_squared", kv.j_squared},
                       {"compatibility", kv.compatibility},
                       {"parallel", kv.parallel},
                       {"closed", kv.closed},
                       {"scalar", constancy_json(kv.scalar)}};
  r.check_le("J^2 = -1", kv.j_squared, o.tol);
  r.check_le("g(J., J.) = g", kv.compatibility, o.tol);
  r.check_le("nabla J = 0", kv.parallel, o.tol);
  r.check_le("d omega = 0", kv.closed, o.tol);
  if (!kv.pass) {
    r.note("not Kahler to the tolerance; LeBrun fields skipped");
    return;
  }

  Json fields = Json::array();
  for (double a : o.a) {
    const LebrunReport lr = lebrun_field(data, a, o.grid, cfg, o.tol);
    const std::string p = "a=" + fmt(a) + ": ";
    fields.push_back(Json{{"a", a},
                          {"em_max_residual", lr.em.max_residual()},
                          {"plus_defect", lr.plus_defect},
                          {"minus_defect", lr.minus_defect},
                          {"norm_defect", lr.norm_defect},
                          {"stress_defect", lr.stress_defect},
                          {"field_norm2", range_json(lr.field_norm2)},
                          {"rho0_norm", range_json(lr.rho0_norm)},
                          {"f", range_json(lr.em.f)},
                          {"scalar", constancy_json(lr.em.scalar)},
                          {"combination", constancy_json(lr.em.combination)}});
    r.check_le(p + "Einstein-Maxwell max residual", lr.em.max_residual(), o.tol);
    r.check_le(p + "F+ = a omega", lr.plus_defect, o.split_tol);
    r.check_le(p + "F- = rho0/(2a)", lr.minus_defect, o.split_tol);
    r.check_le(p + "R constancy", lr.em.scalar.max_deviation, o.tol);
    r.check_le(p + "(4 - 2n) R + (n - 4) |F|^2 constancy", lr.em.combination.max_deviation, o.tol);
  }
  res["fields"] = fields;

  const KahlerWeylReport w = kahler_weyl_certify(data, o.grid, cfg, o.tol, kv.orientation);
  res["weyl"] = Json{{"orientation", orientation_name(w.orientation)},
                     {"scalar", w.scalar},
                     {"wplus_norm2", w.wplus_norm2},
                     {"wplus_eigenvalues", vec_json(w.eigenvalues)},
                     {"norm_defect", w.norm_defect},
                     {"eigenvalue_defect", w.eigenvalue_defect}};
  r.check_le("|W+|^2 = R^2/24 (relative)", w.norm_defect, o.tol);
  r.check_le("W+ eigenvalues = (R/6, -R/12, -R/12) (relative)", w.eigenvalue_defect, o.tol);
}

// chern

void cmd_chern(const Options& o, Report& r) {
  const ExampleManifold m = load_input(o, r);
  const IntegrationDomain d(m);
  r.config()["nodes"] = o.nodes;
  r.config()["int_tol"] = o.int_tol;
  const CharNumbers cn = characteristic_numbers(d, o.nodes);
  Json& res = r.results();
  res["orientation"] = orientation_name(cn.orientation);
  res["volume"] = estimate_json(cn.volume);
  res["chi"] = estimate_json(cn.chi);
  res["tau"] = estimate_json(cn.tau);
  res["combo"] = estimate_json(cn.combo);
  res["tau_kahler"] = estimate_json(cn.tau_kahler);

  r.check_le("chi integrality", std::abs(cn.chi.value - std::round(cn.chi.value)), o.int_tol);
  r.check_le("tau integrality", std::abs(cn.tau.value - std::round(cn.tau.value)), o.int_tol);
  r.check_le("chi error estimate", cn.chi.error, o.int_tol);
  r.check_le("tau error estimate", cn.tau.error, o.int_tol);
  r.check_le("combo = 2 chi + 3 tau", std::abs(cn.combo.value - 2 * cn.chi.value - 3 * cn.tau.value),
             cn.combo.error + 2 * cn.chi.error + 3 * cn.tau.error + 1e-9);
  const int half = (o.nodes + 1) / 2;
  if (half >= 2) {
    const CharNumbers hn = characteristic_numbers(d, half);
    res["halved"] = Json{{"nodes", half}, {"chi", estimate_json(hn.chi)}, {"tau", estimate_json(hn.tau)}};
    r.check_le("halving: chi change within the coarse estimate", std::abs(cn.chi.value - hn.chi.value),
               hn.chi.error + 1e-9);
    r.check_le("halving: tau change within the coarse estimate", std::abs(cn.tau.value - hn.tau.value),
               hn.tau.error + 1e-9);
  }
  if (m.expected.chi) r.check_le("chi vs expected", std::abs(cn.chi.value - *m.expected.chi), o.int_tol);
  if (m.expected.tau) r.check_le("tau vs expected", std::abs(cn.tau.value - *m.expected.tau), o.int_tol);
  if (m.expected.volume)
    r.check_le("volume vs expected (relative)", std::abs(cn.volume.value - *m.expected.volume) / *m.expected.volume,
               o.int_tol);
  if (m.J) r.check_le("tau = Kahler form of tau", std::abs(cn.tau.value - cn.tau_kahler.value), o.int_tol);

  if (!o.corollary) return;
  FieldAtNode F;
  std::optional<Program> prog;
  std::optional<KahlerField> kf;
  if (o.lebrun_a > 0.0) {
    if (!m.J) throw Error(ErrorCode::kInvalidArgument, "--lebrun-a needs a complex structure");
    kf.emplace(d.chart(), *m.J);
    const double a = o.lebrun_a;
    F = [&kf, a](const Vector& x, const Curvature4& c) {
      const Eigen::Matrix4d j = kf->J(x);
      const Eigen::Matrix4d omega = j.transpose() * c.g;
      const Eigen::Matrix4d rho0 = j.transpose() * c.ricci - 0.25 * c.scalar * omega;
      return Matrix(a * omega + rho0 / (2.0 * a));
    };
    r.config()["lebrun_a"] = a;
  } else if (m.F) {
    prog.emplace(d.chart().compile(m.F->canonical_components()));
    F = [&prog](const Vector& x, const Curvature4&) {
      return form_matrix((*prog)(std::vector<double>(x.data(), x.data() + 4)), 4);
    };
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--corollary needs [form_F] or --lebrun-a");
  }
  const CorollaryReport cr = corollary_report(d, F, o.nodes, std::nullopt, &cn);
  res["corollary"] = Json{{"integral", estimate_json(cr.integral)},
                          {"two_chi_plus_three_tau", estimate_json(cr.two_chi_plus_three_tau)},
                          {"discrepancy", cr.discrepancy},
                          {"combined_error", cr.combined_error},
                          {"min_integrand", cr.min_integrand},
                          {"min_f", cr.min_f},
                          {"max_f", cr.max_f},
                          {"f_zero_fraction", cr.f_zero_fraction},
                          {"certificate_defect", cr.certificate_defect},
                          {"pointwise_nodes", cr.pointwise_nodes},
                          {"skipped_nodes", cr.skipped_nodes}};
  if (cr.skipped_nodes > 0)
    r.note(std::to_string(cr.skipped_nodes) + " nodes with metric condition number above " +
           fmt(kPointwiseConditionLimit) + " enter the integral but not the pointwise bounds");
  r.check("corollary integral = 2 chi + 3 tau", cr.discrepancy, cr.combined_error, cr.agrees);
  r.check_le("corollary integrand: negative part", std::max(0.0, -cr.min_integrand), 1e-9);
  r.check("f >= 0: negative part", std::max(0.0, -cr.min_f), 1e-9, cr.f_nonnegative);
  r.check_le("nonnegativity certificate defect", cr.certificate_defect, 1e-9);
}

// optimize

Json theta_json(const ParamFamily& f, const Vector& theta) {
  Json j = Json::object();
  for (int k = 0; k < f.dim(); ++k) j[f.params[k]] = theta[k];
  return j;
}

void cmd_optimize(const Options& o, Report& r) {
  const Bindings settings = parse_params(o.params);
  const ParamFamily fam = make_family(o.spec, settings);
  r.set_input_name("family:" + fam.name);
  Json s = Json::object();
  for (const auto& [k, v] : settings) s[k] = v;
  r.config()["settings"] = s;
  r.config()["volume"] = fam.volume;
  r.config()["periods"] = fam.periods;
  Json box = Json::array();
  for (const Interval& b : fam.box) box.push_back(Json::array({b.lo, b.hi}));
  r.config()["box"] = box;
  r.config()["kappa"] = o.kappa;
  r.config()["nodes"] = o.functional_nodes;
  r.config()["scan_resolution"] = o.scan;
  r.config()["grid"] = o.grid;
  r.config()["fd_order"] = o.fd_order;
  r.config()["tol"] = o.tol;
  r.config()["em_tol"] = o.em_tol;

  DescentConfig dc;
  dc.functional = FunctionalConfig{o.kappa, o.functional_nodes};
  dc.gradient_tolerance = o.tol;
  dc.em_points_per_axis = o.grid;
  dc.em_diff = diff_config(o);
  dc.em_tolerance = o.em_tol;
  dc.scan_resolution = o.scan;

  Vector theta0(fam.dim());
  if (o.start.empty()) {
    for (int k = 0; k < fam.dim(); ++k) theta0[k] = fam.box[k].mid();
  } else {
    if (static_cast<int>(o.start.size()) != fam.dim())
      throw Error(ErrorCode::kInvalidArgument, "--start needs " + std::to_string(fam.dim()) + " values");
    theta0 = Eigen::Map<const Vector>(o.start.data(), fam.dim());
  }
  r.config()["start"] = theta_json(fam, theta0);

  Json& res = r.results();
  std::optional<ScanResult> scan;
  if (fam.dim() <= 2) {
    scan = grid_scan(fam, o.scan, dc.functional);
    Json cands = Json::array();
    for (const ScanCandidate& c : scan->candidates)
      cands.push_back(Json{{"theta", theta_json(fam, c.theta)},
                           {"grid_theta", theta_json(fam, c.grid_theta)},
                           {"value", c.value},
                           {"kind", to_string(c.kind)}});
    res["scan"] = Json{{"resolution", scan->resolution}, {"all_degenerate", scan->all_degenerate()},
                       {"candidates", cands}};
  }

  CriticalReport cr;
  try {
    cr = descend(fam, theta0, dc, scan ? &*scan : nullptr);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kConvergence && e.code() != ErrorCode::kBoundaryHit) throw;
    r.check("descent reached a critical point", NAN, o.tol, false);
    r.note(std::string(to_string(e.code())) + ": " + e.what());
    return;
  }

  Json trace = Json::array();
  for (const DescentStep& st : cr.trace)
    trace.push_back(Json{{"iteration", st.iteration},
                         {"theta", theta_json(fam, st.theta)},
                         {"value", st.value},
                         {"gradient_norm", st.gradient_norm},
                         {"step", st.step}});
  const ExampleManifold built = fam.build(cr.theta);
  Json built_params = Json::object();
  for (const auto& [k, v] : built.chart.params) built_params[k] = v;
  res["theta"] = theta_json(fam, cr.theta);
  res["manifold_params"] = built_params;
  res["value"] = cr.value;
  res["gradient"] = vec_json(cr.gradient);
  res["gradient_norm"] = cr.gradient_norm;
  res["iterations"] = cr.iterations;
  res["trace"] = trace;
  res["em"] = Json{{"grid_points", cr.em.grid_points},
                   {"closed", stat_json(cr.em.closed)},
                   {"coclosed", stat_json(cr.em.coclosed)},
                   {"trace_free", stat_json(cr.em.trace_free)},
                   {"f", range_json(cr.em.f)}};
  if (cr.balance) res["balance"] = *cr.balance;
  if (cr.scan) res["matched_candidate"] = theta_json(fam, cr.scan->theta);

  r.check_le("gradient norm at the critical point", cr.gradient_norm, cr.gradient_tolerance);
  r.check_le("Einstein-Maxwell max residual at the critical point", cr.em.max_residual(), o.em_tol);
  if (scan) {
    if (cr.scan_degenerate) r.note("scan is degenerate: every parameter is critical");
    r.check("distance to the nearest scan candidate", cr.scan ? cr.scan_distance : NAN, dc.agreement,
            cr.oracle_agreement);
  }
  if (cr.balance) r.check_le("balance (1/a^2 - alpha^2) - (1/b^2 - beta^2)", std::abs(*cr.balance), o.em_tol);
}

// examples

void cmd_examples(const Options& o, Report& r) {
  r.set_input_name("builtin");
  Json list = Json::array();
  for (const std::string& name : builtin_names()) {
    const ExampleManifold m = builtin(name);
    Json params = Json::object();
    for (const auto& [k, v] : m.chart.params) params[k] = v;
    Json e = Json::object();
    if (m.expected.scalar) e["scalar"] = *m.expected.scalar;
    if (m.expected.einstein_constant) e["einstein_constant"] = *m.expected.einstein_constant;
    if (m.expected.volume) e["volume"] = *m.expected.volume;
    if (m.expected.chi) e["chi"] = *m.expected.chi;
    if (m.expected.tau) e["tau"] = *m.expected.tau;
    list.push_back(Json{{"name", name},
                        {"dim", m.chart.dim()},
                        {"coords", m.chart.coords},
                        {"orientation", orientation_name(m.chart.orientation)},
                        {"params", params},
                        {"form_F", m.F.has_value()},
                        {"complex_structure", m.J.has_value()},
                        {"integration", m.integration.has_value()},
                        {"expected", e}});
  }
  r.results()["builtins"] = list;
  Json fams = Json::array();
  for (const std::string& name : family_names()) {
    const ParamFamily f = make_family(name);
    fams.push_back(Json{{"name", name}, {"params", f.params}});
  }
  r.results()["families"] = fams;

  if (o.export_dir.empty()) return;
  r.config()["export"] = o.export_dir;
  std::error_code ec;
  std::filesystem::create_directories(o.export_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, o.export_dir + ": " + ec.message());
  Json written = Json::array();
  for (const std::string& name : builtin_names()) {
    const std::string text = export_spec(builtin(name));
    const std::string path = (std::filesystem::path(o.export_dir) / (name + ".toml")).string();
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, path + ": cannot write file");
    written.push_back(Json{{"path", path}, {"sha256", sha256_hex(text)}});
    const bool same = export_spec(parse_spec(text, path)) == text;
    r.check("round trip: " + name, same ? 0.0 : 1.0, 0.0, same);
  }
  r.results()["exported"] = written;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"table", "json"}));
  sub->add_option("--out", o.out, "Write the report to this file");
}

void add_diff(CLI::App* sub, Options& o) {
  sub->add_option("--fd-order", o.fd_order, "Finite-difference order")->check(CLI::IsMember({2, 4, 6}));
  sub->add_option("--step", o.step, "Finite-difference step as a fraction of each coordinate extent");
  sub->add_option("--tol", o.tol, "Residual tolerance");
}

void add_spec(CLI::App* sub, Options& o) {
  sub->add_option("spec", o.spec, "TOML spec file or builtin:NAME")->required();
  sub->add_option("--param", o.params, "Override a parameter, name=value (repeatable)");
}

}  // namespace

Outcome run(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"Einstein-Maxwell verification laboratory", "em4lab"};
  app.require_subcommand(1);

  CLI::App* check_em = app.add_subcommand("check-em", "Pointwise Einstein-Maxwell residuals on a grid");
  add_spec(check_em, o);
  check_em->add_option("--grid", o.grid, "Grid points per axis");
  add_diff(check_em, o);
  add_common(check_em, o);

  CLI::App* curvature = app.add_subcommand("curvature", "Curvature at points, on a grid, or random algebra");
  curvature->add_option("spec", o.spec, "TOML spec file or builtin:NAME");
  curvature->add_option("--param", o.params, "Override a parameter, name=value (repeatable)");
  curvature->add_option("--grid", o.grid, "Grid points per axis");
  curvature->add_option("--point", o.point, "Single point, comma separated")->delimiter(',');
  curvature->add_option("--random", o.random, "Number of random interior points");
  curvature->add_option("--algebra", o.algebra, "Check pointwise identities on this many random tensors");
  curvature->add_option("--dim", o.dim, "Dimension for --algebra");
  curvature->add_option("--seed", o.seed, "Seed for --random and --algebra");
  curvature->add_flag("--convergence", o.convergence, "Finite-difference convergence of the scalar curvature");
  curvature->add_flag("--jets", o.jets, "Exact derivatives instead of finite differences");
  add_diff(curvature, o);
  add_common(curvature, o);

  CLI::App* lebrun = app.add_subcommand("lebrun", "Kahler checks and LeBrun fields a omega + rho0/(2a)");
  add_spec(lebrun, o);
  lebrun->add_option("--grid", o.grid, "Grid points per axis");
  lebrun->add_option("--a", o.a, "Values of a, comma separated")->delimiter(',');
  lebrun->add_option("--split-tol", o.split_tol, "Tolerance for the self-dual split");
  add_diff(lebrun, o);
  add_common(lebrun, o);

  CLI::App* chern = app.add_subcommand("chern", "Euler characteristic and signature by quadrature");
  add_spec(chern, o);
  chern->add_option("--nodes", o.nodes, "Gauss-Legendre nodes per axis")->check(CLI::Range(2, 512));
  chern->add_option("--int-tol", o.int_tol, "Tolerance for integrality and expected values");
  chern->add_flag("--corollary", o.corollary, "Also integrate (|F|^2 + 4f)^2 - 4|F+|^2|F-|^2");
  chern->add_option("--lebrun-a", o.lebrun_a, "Use the LeBrun field with this a for --corollary");
  add_common(chern, o);

  CLI::App* optimize = app.add_subcommand("optimize", "Critical points of int (R + kappa |F|^2) over a family");
  optimize->add_option("family", o.spec, "Family name")->required();
  optimize->add_option("--param", o.params, "Family setting, name=value (repeatable)");
  optimize->add_option("--kappa", o.kappa, "Coefficient of |F|^2");
  optimize->add_option("--start", o.start, "Starting parameters, comma separated")->delimiter(',');
  optimize->add_option("--nodes", o.functional_nodes, "Quadrature nodes for the functional")
      ->check(CLI::Range(2, 512));
  optimize->add_option("--scan", o.scan, "Scan points per axis")->check(CLI::Range(3, 1001));
  optimize->add_option("--grid", o.grid, "Grid points per axis for the residual check");
  optimize->add_option("--em-tol", o.em_tol, "Residual tolerance at the critical point");
  add_diff(optimize, o);
  add_common(optimize, o);

  CLI::App* examples = app.add_subcommand("examples", "List built-in manifolds and families");
  examples->add_option("--export", o.export_dir, "Write every built-in as a TOML spec into this directory");
  add_common(examples, o);

  Outcome out;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream so, se;
    const int code = app.exit(e, so, se);
    out.output = so.str();
    out.error = se.str();
    out.exit_code = code == 0 ? 0 : 2;
    return out;
  }

  CLI::App* cmd = app.get_subcommands().front();
  Report report(cmd->get_name());
  try {
    if (o.grid < 1) throw Error(ErrorCode::kInvalidArgument, "--grid must be positive");
    if (cmd == check_em)
      cmd_check_em(o, report);
    else if (cmd == curvature)
      cmd_curvature(o, report);
    else if (cmd == lebrun)
      cmd_lebrun(o, report);
    else if (cmd == chern)
      cmd_chern(o, report);
    else if (cmd == optimize)
      cmd_optimize(o, report);
    else
      cmd_examples(o, report);
  } catch (const Error& e) {
    out.error = std::string("error: ") + to_string(e.code()) + ": " + e.what() + "\n";
    out.exit_code = 2;
    return out;
  }

  const std::string text = o.format == "json" ? report.json_text() : report.table_text();
  if (o.out.empty()) {
    out.output = text;
  } else {
    std::ofstream f(o.out, std::ios::binary);
    f << text;
    if (!f) {
      out.error = "error: io: " + o.out + ": cannot write file\n";
      out.exit_code = 2;
      return out;
    }
  }
  out.exit_code = report.pass() ? 0 : 1;
  return out;
}

}  // namespace em4lab::cli
