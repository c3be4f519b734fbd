#include "em4lab/spec_file.hpp"

#include "em4lab/error.hpp"

#define TOML_ENABLE_FORMATTERS 0
#include "toml.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace em4lab {

namespace {

class Reader {
 public:
  Reader(std::string origin) : origin_(std::move(origin)) {}

  std::string where(const toml::node& n) const {
    const toml::source_region& s = n.source();
    return origin_ + ":" + std::to_string(s.begin.line) + ":" + std::to_string(s.begin.column);
  }

  [[noreturn]] void fail(const toml::node& n, const std::string& what) const {
    throw Error(ErrorCode::kValidation, where(n) + ": " + what);
  }

  const toml::table* table(const toml::table& root, const char* name, bool required) const {
    const toml::node* n = root.get(name);
    if (!n) {
      if (required) throw Error(ErrorCode::kValidation, origin_ + ": missing [" + std::string(name) + "] table");
      return nullptr;
    }
    if (!n->is_table()) fail(*n, "'" + std::string(name) + "' must be a table");
    return n->as_table();
  }

  double number(const toml::node& n, const std::string& key) const {
    if (auto v = n.value<double>()) return *v;
    fail(n, key + " must be a number");
  }

  std::string string(const toml::node& n, const std::string& key) const {
    if (auto v = n.value<std::string>()) return *v;
    fail(n, key + " must be a string");
  }

  /// Expressions may be written as strings or plain numbers.
  Expression expression(const toml::node& n, const std::string& key) const {
    if (auto s = n.value<std::string>()) {
      try {
        return parse(*s);
      } catch (const Error& e) {
        throw Error(e.code(), where(n) + ": " + key + ": " + e.what());
      }
    }
    if (n.is_number()) return Expression::number(*n.value<double>());
    fail(n, key + " must be an expression string or a number");
  }

  Interval interval(const toml::node& n, const std::string& key) const {
    const toml::array* a = n.as_array();
    if (!a || a->size() != 2) fail(n, key + " must be [lo, hi]");
    return Interval{number(*a->get(0), key), number(*a->get(1), key)};
  }

  std::vector<std::string> strings(const toml::node& n, const std::string& key) const {
    const toml::array* a = n.as_array();
    if (!a) fail(n, key + " must be an array of strings");
    std::vector<std::string> out;
    for (const toml::node& e : *a) out.push_back(string(e, key));
    return out;
  }

  /// "X_i_j" with 1-based indices in [1, dim].
  std::pair<int, int> indices(const toml::node& n, const std::string& key, char prefix, int dim) const {
    int i = 0, j = 0;
    char tail = 0;
    const std::string fmt = std::string(1, prefix) + "_%d_%d%c";
    if (std::sscanf(key.c_str(), fmt.c_str(), &i, &j, &tail) != 2)
      fail(n, "key '" + key + "' is not of the form " + prefix + "_i_j");
    if (i < 1 || i > dim || j < 1 || j > dim)
      fail(n, "key '" + key + "' has an index outside 1.." + std::to_string(dim));
    return {i - 1, j - 1};
  }

 private:
  std::string origin_;
};

void check_names(const Reader& r, const toml::node& n, const std::string& key, const Expression& e,
                 const std::set<std::string>& allowed) {
  for (const std::string& v : e.variables())
    if (!allowed.count(v)) r.fail(n, key + " uses undeclared name '" + v + "'");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  std::string s = os.str();
  if (s.find_first_of(".eEin") == std::string::npos) s += ".0";
  return s;
}

std::string idx(char p, int i, int j) { return std::string(1, p) + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1); }

}  // namespace

ExampleManifold parse_spec(std::string_view text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw Error(ErrorCode::kSyntax,
                origin + ":" + std::to_string(b.line) + ":" + std::to_string(b.column) + ": " + std::string(e.description()));
  }
  const Reader r(origin);

  if (const toml::node* v = root.get("schema_version")) {
    const double sv = r.number(*v, "schema_version");
    if (sv != kSpecSchemaVersion) r.fail(*v, "unsupported schema_version " + num(sv));
  }

  ExampleManifold m;
  const toml::table& man = *r.table(root, "manifold", true);
  ChartSpec& c = m.chart;
  if (const toml::node* n = man.get("name")) m.name = r.string(*n, "name");
  c.name = m.name;
  const toml::node* coords = man.get("coords");
  if (!coords) throw Error(ErrorCode::kValidation, origin + ": [manifold] needs coords");
  c.coords = r.strings(*coords, "coords");
  const int dim = c.dim();
  if (const toml::node* n = man.get("dim")) {
    if (r.number(*n, "dim") != dim) r.fail(*n, "dim does not match the number of coords");
  }
  if (const toml::node* n = man.get("orientation")) {
    const std::string o = r.string(*n, "orientation");
    if (o == "positive" || o == "+")
      c.orientation = Orientation::kPositive;
    else if (o == "negative" || o == "-")
      c.orientation = Orientation::kNegative;
    else
      r.fail(*n, "orientation must be \"positive\" or \"negative\"");
  }

  if (const toml::table* p = r.table(root, "params", false))
    for (const auto& [k, v] : *p) c.params[std::string(k.str())] = r.number(v, std::string(k.str()));

  std::set<std::string> names(c.coords.begin(), c.coords.end());
  for (const auto& [k, v] : c.params) {
    if (names.count(k)) throw Error(ErrorCode::kValidation, origin + ": parameter '" + k + "' is also a coordinate");
  }
  for (const auto& [k, v] : c.params) names.insert(k);

  c.metric.assign(dim, std::vector<Expression>(dim, Expression::number(0.0)));
  std::vector<bool> diag(dim, false);
  const toml::table& metric = *r.table(root, "metric", true);
  for (const auto& [k, v] : metric) {
    const std::string key(k.str());
    const auto [i, j] = r.indices(v, key, 'g', dim);
    if (i > j)
      r.fail(v, "metric key '" + key + "' must have i <= j; write " + idx('g', j, i) + " instead");
    const Expression e = r.expression(v, key);
    check_names(r, v, key, e, names);
    c.metric[i][j] = e;
    c.metric[j][i] = e;
    if (i == j) diag[i] = true;
  }
  for (int i = 0; i < dim; ++i)
    if (!diag[i])
      throw Error(ErrorCode::kValidation, origin + ": metric is missing diagonal entry " + idx('g', i, i));

  const toml::table& domain = *r.table(root, "domain", true);
  c.domain.assign(dim, Interval{});
  for (int i = 0; i < dim; ++i) {
    const toml::node* n = domain.get(c.coords[i]);
    if (!n) throw Error(ErrorCode::kValidation, origin + ": [domain] has no interval for '" + c.coords[i] + "'");
    c.domain[i] = r.interval(*n, c.coords[i]);
    if (!(c.domain[i].hi > c.domain[i].lo)) r.fail(*n, "interval for '" + c.coords[i] + "' needs lo < hi");
  }
  for (const auto& [k, v] : domain)
    if (!std::count(c.coords.begin(), c.coords.end(), std::string(k.str())))
      r.fail(v, "[domain] names unknown coordinate '" + std::string(k.str()) + "'");

  if (const toml::table* f = r.table(root, "form_F", false)) {
    if (dim < 2) throw Error(ErrorCode::kValidation, origin + ": [form_F] needs dimension >= 2");
    FormField F(dim, 2);
    for (const auto& [k, v] : *f) {
      const std::string key(k.str());
      const auto [i, j] = r.indices(v, key, 'F', dim);
      if (i >= j) r.fail(v, "form key '" + key + "' must have i < j");
      const Expression e = r.expression(v, key);
      check_names(r, v, key, e, names);
      F.set({i, j}, e);
    }
    m.F = F;
  }

  if (const toml::table* jt = r.table(root, "complex_structure", false)) {
    ExpressionMatrix J(dim, std::vector<Expression>(dim, Expression::number(0.0)));
    for (const auto& [k, v] : *jt) {
      const std::string key(k.str());
      const auto [i, j] = r.indices(v, key, 'J', dim);
      const Expression e = r.expression(v, key);
      check_names(r, v, key, e, names);
      J[i][j] = e;
    }
    m.J = J;
  }

  if (const toml::table* it = r.table(root, "integration", false)) {
    IntegrationSpec in;
    auto need = [&](const char* key) -> const toml::node& {
      const toml::node* n = it->get(key);
      if (!n) throw Error(ErrorCode::kValidation, origin + ": [integration] needs " + key);
      return *n;
    };
    in.vars = r.strings(need("vars"), "vars");
    const toml::node& box = need("box");
    const toml::array* ba = box.as_array();
    if (!ba || ba->size() != in.vars.size()) r.fail(box, "box needs one [lo, hi] per integration variable");
    for (const toml::node& e : *ba) in.box.push_back(r.interval(e, "box"));
    std::set<std::string> inames(in.vars.begin(), in.vars.end());
    for (const auto& [k, v] : c.params) inames.insert(k);
    const toml::node& map = need("map");
    const toml::array* ma = map.as_array();
    if (!ma || static_cast<int>(ma->size()) != dim) r.fail(map, "map needs one expression per chart coordinate");
    for (const toml::node& e : *ma) {
      in.map.push_back(r.expression(e, "map"));
      check_names(r, e, "map", in.map.back(), inames);
    }
    if (const toml::node* jn = it->get("jacobian")) {
      in.jacobian = r.expression(*jn, "jacobian");
      check_names(r, *jn, "jacobian", in.jacobian, inames);
    } else {
      in.jacobian = Expression::number(1.0);
    }
    if (const toml::node* ex = it->get("excised_volume")) in.excised_volume = r.number(*ex, "excised_volume");
    m.integration = in;
  }

  if (const toml::table* et = r.table(root, "expected", false)) {
    auto opt = [&](const char* key, std::optional<double>& out) {
      if (const toml::node* n = et->get(key)) out = r.number(*n, key);
    };
    opt("scalar", m.expected.scalar);
    opt("einstein_constant", m.expected.einstein_constant);
    opt("volume", m.expected.volume);
    opt("chi", m.expected.chi);
    opt("tau", m.expected.tau);
  }

  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kValidation, origin + ": " + e.what());
  }
  return m;
}

ExampleManifold load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_spec(os.str(), path);
}

std::string export_spec(const ExampleManifold& m) {
  const ChartSpec& c = m.chart;
  const int n = c.dim();
  std::ostringstream os;
  os << "schema_version = " << kSpecSchemaVersion << "\n\n[manifold]\n";
  os << "name = " << quote(m.name) << "\n";
  os << "dim = " << n << "\n";
  os << "coords = [";
  for (int i = 0; i < n; ++i) os << (i ? ", " : "") << quote(c.coords[i]);
  os << "]\n";
  os << "orientation = " << quote(c.orientation == Orientation::kPositive ? "positive" : "negative") << "\n";
  if (!c.params.empty()) {
    os << "\n[params]\n";
    for (const auto& [k, v] : c.params) os << k << " = " << num(v) << "\n";
  }
  os << "\n[metric]\n";
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (i == j || !c.metric[i][j].is_zero_literal())
        os << idx('g', i, j) << " = " << quote(c.metric[i][j].to_string()) << "\n";
  if (m.F) {
    os << "\n[form_F]\n";
    for (const auto& [ix, e] : m.F->components())
      if (!e.is_zero_literal()) os << idx('F', ix[0], ix[1]) << " = " << quote(e.to_string()) << "\n";
  }
  if (m.J) {
    os << "\n[complex_structure]\n";
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!(*m.J)[i][j].is_zero_literal()) os << idx('J', i, j) << " = " << quote((*m.J)[i][j].to_string()) << "\n";
  }
  os << "\n[domain]\n";
  for (int i = 0; i < n; ++i) os << c.coords[i] << " = [" << num(c.domain[i].lo) << ", " << num(c.domain[i].hi) << "]\n";
  if (m.integration) {
    const IntegrationSpec& in = *m.integration;
    os << "\n[integration]\nvars = [";
    for (std::size_t i = 0; i < in.vars.size(); ++i) os << (i ? ", " : "") << quote(in.vars[i]);
    os << "]\nbox = [";
    for (std::size_t i = 0; i < in.box.size(); ++i)
      os << (i ? ", " : "") << "[" << num(in.box[i].lo) << ", " << num(in.box[i].hi) << "]";
    os << "]\nmap = [";
    for (std::size_t i = 0; i < in.map.size(); ++i) os << (i ? ", " : "") << quote(in.map[i].to_string());
    os << "]\njacobian = " << quote(in.jacobian.to_string()) << "\n";
    os << "excised_volume = " << num(in.excised_volume) << "\n";
  }
  const Expected& e = m.expected;
  if (e.scalar || e.einstein_constant || e.volume || e.chi || e.tau) {
    os << "\n[expected]\n";
    if (e.scalar) os << "scalar = " << num(*e.scalar) << "\n";
    if (e.einstein_constant) os << "einstein_constant = " << num(*e.einstein_constant) << "\n";
    if (e.volume) os << "volume = " << num(*e.volume) << "\n";
    if (e.chi) os << "chi = " << num(*e.chi) << "\n";
    if (e.tau) os << "tau = " << num(*e.tau) << "\n";
  }
  return os.str();
}

}  // namespace em4lab
