#include "em4lab/atlas.hpp"

#include "em4lab/error.hpp"

#include <cmath>

namespace em4lab {

namespace {

constexpr double kPi = 3.14159265358979323846;

Bindings merge_params(const std::string& name, const Bindings& defaults, const Bindings& given) {
  Bindings out = defaults;
  for (const auto& [k, v] : given) {
    if (!defaults.count(k)) throw Error(ErrorCode::kInvalidArgument, name + ": unknown parameter '" + k + "'");
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, name + ": parameter '" + k + "' is not finite");
    out[k] = v;
  }
  return out;
}

void require_positive(const std::string& name, const Bindings& p, const std::string& key) {
  if (!(p.at(key) > 0.0))
    throw Error(ErrorCode::kInvalidArgument, name + ": parameter '" + key + "' must be > 0");
}

ChartSpec diagonal(const std::string& name, std::vector<std::string> coords, const std::vector<std::string>& diag,
                   std::vector<Interval> box, Bindings params) {
  ChartSpec s;
  s.name = name;
  s.coords = std::move(coords);
  const int n = s.dim();
  s.metric.assign(n, std::vector<Expression>(n, Expression::number(0.0)));
  for (int i = 0; i < n; ++i) s.metric[i][i] = parse(diag[i]);
  s.domain = std::move(box);
  s.params = std::move(params);
  return s;
}

std::vector<Expression> parse_all(const std::vector<std::string>& v) {
  std::vector<Expression> out;
  for (const auto& s : v) out.push_back(parse(s));
  return out;
}

ExpressionMatrix constant_matrix(int n, const std::vector<std::tuple<int, int, double>>& entries) {
  ExpressionMatrix m(n, std::vector<Expression>(n, Expression::number(0.0)));
  for (const auto& [i, j, v] : entries) m[i][j] = Expression::number(v);
  return m;
}

ExampleManifold flat_torus() {
  ExampleManifold m;
  m.name = "flat-torus-4";
  std::vector<Interval> box(4, {0.0, 2 * kPi});
  m.chart = diagonal(m.name, {"x1", "x2", "x3", "x4"}, {"1", "1", "1", "1"}, box, {});
  m.F = FormField(4, 2);
  m.J = constant_matrix(4, {{1, 0, 1.0}, {0, 1, -1.0}, {3, 2, 1.0}, {2, 3, -1.0}});
  IntegrationSpec in;
  in.vars = {"x1", "x2", "x3", "x4"};
  in.box = box;
  in.map = parse_all({"x1", "x2", "x3", "x4"});
  in.jacobian = Expression::number(1.0);
  m.integration = in;
  m.expected.scalar = 0.0;
  m.expected.einstein_constant = 0.0;
  m.expected.volume = std::pow(2 * kPi, 4);
  m.expected.chi = 0.0;
  m.expected.tau = 0.0;
  return m;
}

ExampleManifold flat_rn(const Bindings& given) {
  const Bindings p = merge_params("flat-rn", {{"n", 4.0}}, given);
  const double nv = p.at("n");
  if (nv != std::floor(nv) || nv < 2 || nv > 8)
    throw Error(ErrorCode::kInvalidArgument, "flat-rn: parameter 'n' must be an integer in [2, 8]");
  const int n = static_cast<int>(nv);
  ExampleManifold m;
  m.name = "flat-rn";
  std::vector<std::string> coords, ones;
  for (int i = 0; i < n; ++i) {
    coords.push_back("x" + std::to_string(i + 1));
    ones.push_back("1");
  }
  std::vector<Interval> box(n, {0.0, 1.0});
  m.chart = diagonal(m.name, coords, ones, box, {});
  m.F = FormField(n, 2);
  IntegrationSpec in;
  in.vars = coords;
  in.box = box;
  in.map = parse_all(coords);
  in.jacobian = Expression::number(1.0);
  m.integration = in;
  m.expected.scalar = 0.0;
  m.expected.einstein_constant = 0.0;
  m.expected.volume = 1.0;
  return m;
}

ExampleManifold round_s2(const Bindings& given) {
  const Bindings p = merge_params("round-s2", {{"r", 1.0}, {"c", 0.0}}, given);
  require_positive("round-s2", p, "r");
  const double r = p.at("r");
  const double eps = kPolarExcision;
  ExampleManifold m;
  m.name = "round-s2";
  m.chart = diagonal(m.name, {"theta", "phi"}, {"r^2", "r^2*sin(theta)^2"}, {{eps, kPi - eps}, {0.0, 2 * kPi}}, p);
  FormField f(2, 2);
  f.set({0, 1}, parse("c*r^2*sin(theta)"));
  m.F = f;
  IntegrationSpec in;
  in.vars = {"theta", "phi"};
  in.box = m.chart.domain;
  in.map = parse_all({"theta", "phi"});
  in.jacobian = Expression::number(1.0);
  in.excised_volume = 4 * kPi * r * r * (1.0 - std::cos(eps));
  m.integration = in;
  m.expected.scalar = 2.0 / (r * r);
  m.expected.einstein_constant = 1.0 / (r * r);
  m.expected.volume = 4 * kPi * r * r;
  return m;
}

ExampleManifold round_s4(const Bindings& given) {
  const Bindings p = merge_params("round-s4", {{"r", 1.0}}, given);
  require_positive("round-s4", p, "r");
  const double r = p.at("r");
  const double eps = kPolarExcision;
  ExampleManifold m;
  m.name = "round-s4";
  const std::string conf = "4*r^2/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2";
  m.chart = diagonal(m.name, {"x1", "x2", "x3", "x4"}, {conf, conf, conf, conf}, std::vector<Interval>(4, {-2.0, 2.0}),
                     p);
  IntegrationSpec in;
  in.vars = {"s", "p1", "p2", "p3"};
  in.box = {{eps, kPi - eps}, {eps, kPi - eps}, {eps, kPi - eps}, {0.0, 2 * kPi}};
  in.map = parse_all({"tan(s/2)*cos(p1)", "tan(s/2)*sin(p1)*cos(p2)", "tan(s/2)*sin(p1)*sin(p2)*cos(p3)",
                      "tan(s/2)*sin(p1)*sin(p2)*sin(p3)"});
  in.jacobian = parse("tan(s/2)^3*sin(p1)^2*sin(p2)/(2*cos(s/2)^2)");
  const double vol = 8 * kPi * kPi * std::pow(r, 4) / 3;
  in.excised_volume = 4 * vol * eps * eps;
  m.integration = in;
  m.expected.scalar = 12.0 / (r * r);
  m.expected.einstein_constant = 3.0 / (r * r);
  m.expected.volume = vol;
  m.expected.chi = 2.0;
  m.expected.tau = 0.0;
  return m;
}

ExampleManifold s2xs2(const Bindings& given) {
  const Bindings p = merge_params("s2xs2", {{"a", 1.0}, {"b", 1.0}, {"alpha", 1.0}, {"beta", 1.0}}, given);
  require_positive("s2xs2", p, "a");
  require_positive("s2xs2", p, "b");
  const double a = p.at("a"), b = p.at("b");
  const double eps = kPolarExcision;
  ExampleManifold m;
  m.name = "s2xs2";
  m.chart = diagonal(m.name, {"t1", "p1", "t2", "p2"}, {"a^2", "a^2*sin(t1)^2", "b^2", "b^2*sin(t2)^2"},
                     {{eps, kPi - eps}, {0.0, 2 * kPi}, {eps, kPi - eps}, {0.0, 2 * kPi}}, p);
  FormField f(4, 2);
  f.set({0, 1}, parse("alpha*a^2*sin(t1)"));
  f.set({2, 3}, parse("beta*b^2*sin(t2)"));
  m.F = f;
  m.J = ExpressionMatrix(4, std::vector<Expression>(4, Expression::number(0.0)));
  (*m.J)[1][0] = parse("1/sin(t1)");
  (*m.J)[0][1] = parse("-sin(t1)");
  (*m.J)[3][2] = parse("1/sin(t2)");
  (*m.J)[2][3] = parse("-sin(t2)");
  IntegrationSpec in;
  in.vars = m.chart.coords;
  in.box = m.chart.domain;
  in.map = parse_all(m.chart.coords);
  in.jacobian = Expression::number(1.0);
  const double vol = 16 * kPi * kPi * a * a * b * b;
  in.excised_volume = 2 * vol * (1.0 - std::cos(eps));
  m.integration = in;
  m.expected.scalar = 2.0 / (a * a) + 2.0 / (b * b);
  if (a == b) m.expected.einstein_constant = 1.0 / (a * a);
  m.expected.volume = vol;
  m.expected.chi = 4.0;
  m.expected.tau = 0.0;
  return m;
}

ExampleManifold cp2(const Bindings& given) {
  const Bindings p = merge_params("cp2-fubini-study", {{"c", 4.0}}, given);
  require_positive("cp2-fubini-study", p, "c");
  const double c = p.at("c");
  const double eps = kPolarExcision;
  ExampleManifold m;
  m.name = "cp2-fubini-study";
  ChartSpec& s = m.chart;
  s.name = m.name;
  s.coords = {"x1", "y1", "x2", "y2"};
  s.params = p;
  const std::string den = "(c*(1 + x1^2 + y1^2 + x2^2 + y2^2)^2)";
  const std::string ga = "4*(1 + x2^2 + y2^2)/" + den;
  const std::string gb = "4*(1 + x1^2 + y1^2)/" + den;
  const std::string gm = "-4*(x1*x2 + y1*y2)/" + den;
  const std::string gk = "-4*(x1*y2 - y1*x2)/" + den;
  const std::string gk_neg = "4*(x1*y2 - y1*x2)/" + den;
  const std::vector<std::vector<std::string>> t = {
      {ga, "0", gm, gk}, {"0", ga, gk_neg, gm}, {gm, gk_neg, gb, "0"}, {gk, gm, "0", gb}};
  s.metric.assign(4, std::vector<Expression>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s.metric[i][j] = parse(t[std::min(i, j)][std::max(i, j)]);
  s.domain.assign(4, {-1.5, 1.5});
  m.J = constant_matrix(4, {{1, 0, 1.0}, {0, 1, -1.0}, {3, 2, 1.0}, {2, 3, -1.0}});
  const ExpressionMatrix omega = kahler_form_expressions(s.metric, *m.J);
  FormField f(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (!omega[i][j].is_zero_literal()) f.set({i, j}, omega[i][j]);
  m.F = f;
  IntegrationSpec in;
  in.vars = {"s1", "t1", "s2", "t2"};
  in.box = {{eps, kPi / 2 - eps}, {0.0, 2 * kPi}, {eps, kPi / 2 - eps}, {0.0, 2 * kPi}};
  in.map = parse_all({"tan(s1)*cos(t1)", "tan(s1)*sin(t1)", "tan(s2)*cos(t2)", "tan(s2)*sin(t2)"});
  in.jacobian = parse("tan(s1)*tan(s2)/(cos(s1)^2*cos(s2)^2)");
  const double vol = 8 * kPi * kPi / (c * c);
  in.excised_volume = 8 * vol * eps * eps;
  m.integration = in;
  m.expected.scalar = 6 * c;
  m.expected.einstein_constant = 1.5 * c;
  m.expected.volume = vol;
  m.expected.chi = 3.0;
  m.expected.tau = 1.0;
  return m;
}

}  // namespace

ExpressionMatrix kahler_form_expressions(const ExpressionMatrix& metric, const ExpressionMatrix& j) {
  const int n = static_cast<int>(metric.size());
  ExpressionMatrix out(n, std::vector<Expression>(n, Expression::number(0.0)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      std::string text;
      for (int p = 0; p < n; ++p) {
        if (j[p][a].is_zero_literal() || metric[p][b].is_zero_literal()) continue;
        if (!text.empty()) text += " + ";
        text += "(" + print(j[p][a]) + ") * (" + print(metric[p][b]) + ")";
      }
      if (!text.empty()) out[a][b] = parse(text);
    }
  return out;
}

ExampleManifold builtin(const std::string& name, const Bindings& params) {
  if (name == "flat-torus-4") {
    merge_params(name, {}, params);
    return flat_torus();
  }
  if (name == "flat-rn") return flat_rn(params);
  if (name == "round-s2") return round_s2(params);
  if (name == "round-s4") return round_s4(params);
  if (name == "s2xs2") return s2xs2(params);
  if (name == "cp2-fubini-study") return cp2(params);
  throw Error(ErrorCode::kInvalidArgument, "unknown builtin manifold '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"flat-torus-4", "flat-rn", "round-s2", "round-s4", "s2xs2", "cp2-fubini-study"};
}

}  // namespace em4lab
