// Acceptance run: every criterion is one or more CLI invocations whose JSON
// reports are compared against independent reference values.

#include "cli.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using Json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  Json report;
  std::string text;
  double seconds = 0.0;
};

Run cli(std::vector<std::string> args) {
  args.push_back("--format");
  args.push_back("json");
  const auto t0 = std::chrono::steady_clock::now();
  const em4lab::cli::Outcome o = em4lab::cli::run(args);
  Run r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.code = o.exit_code;
  r.text = o.output;
  if (o.exit_code != 2) r.report = Json::parse(o.output, nullptr, false);
  if (!o.error.empty()) std::fprintf(stderr, "%s", o.error.c_str());
  return r;
}

// Value of the first check whose name starts with prefix; NaN when absent.
double check_value(const Run& r, const std::string& prefix) {
  if (!r.report.is_object()) return NAN;
  for (const Json& c : r.report["checks"])
    if (c["name"].get<std::string>().rfind(prefix, 0) == 0) return c["value"].is_number() ? c["value"].get<double>() : NAN;
  return NAN;
}

bool all_checks(const Run& r, const std::string& prefix) {
  if (!r.report.is_object()) return false;
  int seen = 0;
  for (const Json& c : r.report["checks"])
    if (c["name"].get<std::string>().find(prefix) != std::string::npos) {
      ++seen;
      if (!c["pass"].get<bool>()) return false;
    }
  return seen > 0;
}

double result(const Run& r, const std::vector<std::string>& path) {
  const Json* j = &r.report;
  for (const std::string& k : path) {
    if (!j->is_object() || !j->contains(k)) return NAN;
    j = &(*j)[k];
  }
  return j->is_number() ? j->get<double>() : NAN;
}

bool within(double v, double ref, double tol) { return std::isfinite(v) && std::abs(v - ref) <= tol; }

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s  %s  (%s)\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  {
    const Run r = cli({"curvature", "--algebra", "100000", "--dim", "4", "--seed", "1"});
    const double c = check_value(r, "eta0 = -2 F+ o F-"), n = check_value(r, "|eta0|^2 = |F+|^2 |F-|^2");
    report(r.code == 0 && c <= 1e-10 && n <= 1e-10 && r.seconds < 30.0,
           "stress split identities on 1e5 random pairs in dimension 4",
           "composition " + num(c) + ", norm " + num(n) + ", " + num(r.seconds) + " s");
  }

  const Run cp2 = cli({"lebrun", "manifolds/cp2.toml", "--a", "0.5,1,2"});
  {
    const bool ok = cp2.code == 0 && all_checks(cp2, "R constancy") &&
                    all_checks(cp2, "(4 - 2n) R + (n - 4) |F|^2 constancy") && cp2.seconds < 60.0;
    report(ok, "constant R and conserved combination for LeBrun fields on CP2",
           "9^4 grid, a in {0.5, 1, 2}, " + num(cp2.seconds) + " s");
  }

  {
    bool ok = true;
    std::string detail;
    for (const char* c : {"-2", "3"}) {
      const Run r = cli({"check-em", "manifolds/round-s2.toml", "--param", std::string("c=") + c});
      const double dev = result(r, {"results", "field_norm", "max_deviation"});
      const double plus = result(r, {"results", "plus_branch"}), minus = result(r, {"results", "minus_branch"});
      const double matching = c[0] == '-' ? minus : plus;
      ok = ok && r.code == 0 && dev <= 1e-9 && matching <= 1e-9;
      detail += std::string(detail.empty() ? "" : "; ") + "c=" + c + ": |F| deviation " + num(dev) + ", branch " +
                num(matching);
    }
    report(ok, "surface fields c dmu have constant norm on the matching branch", detail);
  }

  const Run prod = cli({"lebrun", "manifolds/s2xs2.toml", "--param", "b=2", "--fd-order", "6"});
  {
    const bool ok = cp2.code == 0 && prod.code == 0 && all_checks(cp2, "Einstein-Maxwell max residual") &&
                    all_checks(cp2, "F+ = a omega") && all_checks(cp2, "F- = rho0/(2a)") &&
                    all_checks(prod, "Einstein-Maxwell max residual") && all_checks(prod, "F+ = a omega") &&
                    all_checks(prod, "F- = rho0/(2a)");
    report(ok, "LeBrun fields solve Einstein-Maxwell on CP2 and on S2(1)xS2(2)",
           "CP2 residual " + num(check_value(cp2, "a=1: Einstein-Maxwell")) + ", product residual " +
               num(check_value(prod, "a=1: Einstein-Maxwell")));
  }

  {
    const Run eq = cli({"lebrun", "manifolds/s2xs2.toml", "--param", "a=1.5", "--param", "b=1.5", "--a", "1",
                        "--fd-order", "6"});
    bool ok = true;
    for (const Run* r : {&cp2, &eq})
      ok = ok && check_value(*r, "|W+|^2 = R^2/24") <= 1e-6 && check_value(*r, "W+ eigenvalues") <= 1e-6;
    const Json& ev = cp2.report["results"]["weyl"]["wplus_eigenvalues"];
    ok = ok && within(ev[0].get<double>(), 4.0, 1e-6) && within(ev[1].get<double>(), -2.0, 1e-6) &&
         within(ev[2].get<double>(), -2.0, 1e-6);
    report(ok, "Kahler Weyl identities on CP2 and S2(a)xS2(a)",
           "CP2 W+ eigenvalues " + num(ev[0].get<double>()) + ", " + num(ev[1].get<double>()) + ", " +
               num(ev[2].get<double>()));
  }

  {
    bool ok = true;
    double worst = 0.0;
    int checked = 0;
    for (const char* f : {"cp2", "s2xs2", "s2xs2_f0", "s2xs2_unbalanced", "round-s4", "flat-torus-4", "flat-rn"}) {
      const Run r = cli({"curvature", std::string("manifolds/") + f + ".toml", "--random", "100", "--seed", "1"});
      const double v = check_value(r, "|Rm|^2 = R^2/6");
      ok = ok && r.code == 0 && v <= 1e-8;
      if (std::isfinite(v)) worst = std::max(worst, v), ++checked;
    }
    report(ok && checked == 7, "Riemann norm decomposition at 100 random points on every 4-dimensional example",
           std::to_string(checked) + " manifolds, worst relative residual " + num(worst));
  }

  const Run cp2_chern = cli({"chern", "manifolds/cp2.toml", "--corollary", "--lebrun-a", "1"});
  const Run prod_chern = cli({"chern", "manifolds/s2xs2_f0.toml", "--corollary"});
  {
    const Run s4 = cli({"chern", "manifolds/round-s4.toml"});
    const Run t4 = cli({"chern", "manifolds/flat-torus-4.toml"});
    auto chi = [](const Run& r) { return result(r, {"results", "chi", "value"}); };
    auto tau = [](const Run& r) { return result(r, {"results", "tau", "value"}); };
    bool ok = within(chi(cp2_chern), 3, 1e-3) && within(tau(cp2_chern), 1, 1e-3) && within(chi(prod_chern), 4, 1e-3) &&
              within(tau(prod_chern), 0, 1e-3) && within(chi(s4), 2, 1e-3) && within(chi(t4), 0, 1e-12) &&
              within(tau(t4), 0, 1e-12);
    for (const Run* r : {&cp2_chern, &prod_chern, &s4, &t4})
      ok = ok && r->seconds < 60.0 && all_checks(*r, "halving") && all_checks(*r, "integrality");
    report(ok, "Euler characteristic and signature of CP2, S2xS2, S4 and T4",
           "CP2 " + num(chi(cp2_chern)) + "/" + num(tau(cp2_chern)) + ", S2xS2 " + num(chi(prod_chern)) + "/" +
               num(tau(prod_chern)) + ", S4 " + num(chi(s4)) + ", T4 " + num(chi(t4)) + "/" + num(tau(t4)) +
               ", slowest " + num(std::max({cp2_chern.seconds, prod_chern.seconds, s4.seconds, t4.seconds})) + " s");
  }

  {
    bool ok = true;
    for (const Run* r : {&cp2_chern, &prod_chern})
      ok = ok && all_checks(*r, "corollary integral = 2 chi + 3 tau") &&
           check_value(*r, "corollary integrand: negative part") <= 1e-9 &&
           all_checks(*r, "f >= 0") && r->code == 0;
    ok = ok && within(result(cp2_chern, {"results", "corollary", "integral", "value"}), 9, 5e-3) &&
         within(result(prod_chern, {"results", "corollary", "integral", "value"}), 8, 5e-3);
    report(ok, "corollary integrand is nonnegative and integrates to 2 chi + 3 tau",
           "CP2+LeBrun " + num(result(cp2_chern, {"results", "corollary", "integral", "value"})) + ", S2xS2 " +
               num(result(prod_chern, {"results", "corollary", "integral", "value"})));
  }

  {
    bool ok = true;
    double worst_eig = 0.0, worst_vv = 0.0;
    for (const char* n : {"3", "5", "7"}) {
      const Run r = cli({"curvature", "--algebra", "10000", "--dim", n, "--seed", "1"});
      const double e = check_value(r, "eta is positive semidefinite"), v = check_value(r, "kernel vector: max eta");
      ok = ok && r.code == 0 && e <= 1e-10 && v <= 1e-10;
      worst_eig = std::max(worst_eig, e);
      worst_vv = std::max(worst_vv, v);
    }
    report(ok, "eta has a kernel vector in dimensions 3, 5, 7",
           "max negative eigenvalue " + num(worst_eig) + ", max eta(v, v) " + num(worst_vv));
  }

  {
    const Run sym = cli({"optimize", "s2xs2-periods", "--start", "1.3"});
    const Run asym = cli({"optimize", "s2xs2-periods", "--param", "P1=8*pi", "--start", "1.3"});
    const double a = result(sym, {"results", "theta", "a"});
    const double a2 = result(asym, {"results", "manifold_params", "a"}), b2 = result(asym, {"results", "manifold_params", "b"});
    const bool ok = sym.code == 0 && asym.code == 0 && within(a, 1.0, 1e-4) &&
                    check_value(sym, "distance to the nearest scan candidate") <= 1e-4 &&
                    check_value(sym, "Einstein-Maxwell max residual") <= 1e-5 &&
                    check_value(asym, "Einstein-Maxwell max residual") <= 1e-5 && std::abs(a2 - b2) > 1e-2 &&
                    check_value(asym, "balance") <= 1e-5 && sym.seconds + asym.seconds < 300.0;
    report(ok, "descent on the period family finds Einstein-Maxwell critical points",
           "symmetric a = " + num(a) + ", asymmetric a = " + num(a2) + ", b = " + num(b2) + ", balance " +
               num(check_value(asym, "balance")) + ", " + num(sym.seconds + asym.seconds) + " s");
  }

  {
    bool ok = true;
    std::string detail;
    for (const char* order : {"4", "6"}) {
      const Run r = cli({"curvature", "manifolds/round-s2.toml", "--convergence", "--fd-order", order});
      ok = ok && r.code == 0;
      detail += std::string(detail.empty() ? "" : "; ") + "order " + order + ": observed " +
                num(result(r, {"results", "observed_order"})) + ", floor " + num(result(r, {"results", "floor"}));
    }
    report(ok, "finite differences on S2 converge at the configured order", detail);
  }

  {
    const std::vector<std::vector<std::string>> commands = {
        {"check-em", "manifolds/s2xs2_unbalanced.toml"},
        {"curvature", "manifolds/cp2.toml", "--random", "20"},
        {"curvature", "--algebra", "1000", "--dim", "5"},
        {"lebrun", "manifolds/cp2.toml", "--grid", "3"},
        {"chern", "manifolds/s2xs2.toml", "--nodes", "12", "--corollary"},
        {"optimize", "flat-t4"},
        {"examples"},
    };
    bool ok = true;
    for (const auto& c : commands) {
      const Run a = cli(c), b = cli(c);
      ok = ok && !a.text.empty() && a.text == b.text;
    }
    report(ok, "repeated CLI runs give byte-identical JSON reports",
           std::to_string(commands.size()) + " commands, each run twice");
  }

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
