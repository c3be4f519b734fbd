#include "doctest.h"
#include "support.hpp"

#include "em4lab/atlas.hpp"
#include "em4lab/error.hpp"

#include <algorithm>
#include <cmath>

using namespace em4lab;
using namespace testing;

namespace {

Vector random_interior(std::mt19937_64& rng, const ChartSpec& s) {
  Vector x(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    const Interval& d = s.domain[i];
    x[i] = uniform(rng, d.lo + 0.1 * d.extent(), d.hi - 0.1 * d.extent());
  }
  return x;
}

Matrix eval_matrix(const ExpressionMatrix& m, const ChartSpec& s, const Vector& x) {
  Bindings b = s.params;
  for (int i = 0; i < s.dim(); ++i) b[s.coords[i]] = x[i];
  const int n = static_cast<int>(m.size());
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = eval(m[i][j], b);
  return out;
}

}  // namespace

TEST_CASE("builtin examples") {
  const ExampleManifold s2 = builtin("round-s2", {{"r", 1.0}});
  CHECK(*s2.expected.scalar == 2.0);
  CHECK(std::abs(*s2.expected.volume - 4 * M_PI) <= 1e-15);
  const ExampleManifold t4 = builtin("flat-torus-4");
  CHECK(*t4.expected.scalar == 0.0);
  CHECK(*t4.expected.chi == 0.0);
  CHECK(*t4.expected.tau == 0.0);
  const ExampleManifold cp = builtin("cp2-fubini-study", {{"c", 4.0}});
  CHECK(*cp.expected.scalar == 24.0);
  CHECK(std::abs(*cp.expected.volume - M_PI * M_PI / 2) <= 1e-14);
  CHECK(*cp.expected.chi == 3.0);
  CHECK(*cp.expected.tau == 1.0);
  CHECK(cp.J.has_value());
  CHECK(cp.F.has_value());
  CHECK(builtin_names().size() == 6);
}

TEST_CASE("invalid builtin requests") {
  CHECK_THROWS_AS(builtin("klein-bottle"), Error);
  CHECK_THROWS_AS(builtin("round-s2", {{"r", -1.0}}), Error);
  CHECK_THROWS_AS(builtin("round-s2", {{"radius", 1.0}}), Error);
  CHECK_THROWS_AS(builtin("cp2-fubini-study", {{"c", 0.0}}), Error);
  CHECK_THROWS_AS(builtin("flat-rn", {{"n", 2.5}}), Error);
  CHECK_THROWS_AS(builtin("flat-rn", {{"n", 9.0}}), Error);
  try {
    builtin("s2xs2", {{"b", 0.0}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("expected scalar curvature at random points") {
  std::mt19937_64 rng(31);
  const std::vector<std::pair<std::string, Bindings>> cases = {
      {"flat-torus-4", {}},          {"flat-rn", {{"n", 3.0}}},          {"round-s2", {{"r", 1.7}}},
      {"round-s4", {{"r", 0.8}}},    {"s2xs2", {{"a", 1.0}, {"b", 2.0}}}, {"cp2-fubini-study", {{"c", 4.0}}},
      {"cp2-fubini-study", {{"c", 1.5}}}};
  for (const auto& [name, params] : cases) {
    const ExampleManifold m = builtin(name, params);
    m.chart.validate();
    const Chart chart(m.chart);
    const double expected = *m.expected.scalar;
    for (int t = 0; t < 20; ++t) {
      const Vector x = random_interior(rng, m.chart);
      for (const DiffConfig& cfg : {DiffConfig{}, DiffConfig::jets()}) {
        const GeometryPoint geo = geometry_at(chart, x, cfg);
        CHECK(std::abs(geo.scalar - expected) <= 1e-6 * std::max(1.0, std::abs(expected)));
        if (m.expected.einstein_constant) {
          const Matrix diff = geo.ricci.components() - *m.expected.einstein_constant * geo.g.components();
          CHECK(max_abs(diff) <= 1e-6 * std::max(1.0, expected));
        }
      }
    }
  }
}

TEST_CASE("fubini-study complex structure is parallel and compatible") {
  std::mt19937_64 rng(32);
  const ExampleManifold m = builtin("cp2-fubini-study", {{"c", 4.0}});
  const Chart chart(m.chart);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_interior(rng, m.chart);
    const Matrix j = eval_matrix(*m.J, m.chart, x);
    const Matrix g = chart.metric_components(x);
    CHECK(max_abs(j * j + Matrix::Identity(4, 4)) <= 1e-15);
    CHECK(max_abs(j.transpose() * g * j - g) <= 1e-14);
    for (const Matrix& d : cov_deriv_at(chart, *m.J, x, DiffConfig{})) CHECK(max_abs(d) <= 1e-6);
    const ThreeForm dw = ext_d_at(chart, *m.F, x, DiffConfig{});
    CHECK(*std::max_element(dw.c.begin(), dw.c.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) <=
          1e-6);
    // omega = J^T g
    ExpressionFormSource src(chart, *m.F);
    CHECK(max_abs(src.value(x) - j.transpose() * g) <= 1e-14);
  }
}

TEST_CASE("product of spheres Ricci eigenvalues") {
  std::mt19937_64 rng(33);
  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{0.7, 1.3}}) {
    const ExampleManifold m = builtin("s2xs2", {{"a", a}, {"b", b}});
    const Chart chart(m.chart);
    for (int t = 0; t < 10; ++t) {
      const Vector x = random_interior(rng, m.chart);
      const GeometryPoint geo = geometry_at(chart, x, DiffConfig::jets());
      Eigen::EigenSolver<Matrix> es(geo.g.inverse() * geo.ricci.components());
      std::vector<double> ev;
      for (int i = 0; i < 4; ++i) ev.push_back(es.eigenvalues()[i].real());
      std::sort(ev.begin(), ev.end());
      std::vector<double> want = {1 / (a * a), 1 / (a * a), 1 / (b * b), 1 / (b * b)};
      std::sort(want.begin(), want.end());
      for (int i = 0; i < 4; ++i) CHECK(std::abs(ev[i] - want[i]) <= 1e-7);
    }
  }
}

TEST_CASE("integration maps carry their jacobians") {
  std::mt19937_64 rng(34);
  for (const std::string name : {"round-s2", "round-s4", "s2xs2", "cp2-fubini-study"}) {
    const ExampleManifold m = builtin(name);
    const IntegrationSpec& in = *m.integration;
    const int n = static_cast<int>(in.vars.size());
    REQUIRE(static_cast<int>(in.map.size()) == m.chart.dim());
    Bindings b = m.chart.params;
    auto map = [&](const Vector& u) {
      for (int i = 0; i < n; ++i) b[in.vars[i]] = u[i];
      Vector y(n);
      for (int i = 0; i < n; ++i) y[i] = eval(in.map[i], b);
      return y;
    };
    for (int t = 0; t < 20; ++t) {
      Vector u(n);
      for (int i = 0; i < n; ++i)
        u[i] = uniform(rng, in.box[i].lo + 0.05 * in.box[i].extent(), in.box[i].hi - 0.05 * in.box[i].extent());
      const double h = 1e-6;
      Matrix jac(n, n);
      for (int k = 0; k < n; ++k) {
        Vector up = u, dn = u;
        up[k] += h;
        dn[k] -= h;
        jac.col(k) = (map(up) - map(dn)) / (2 * h);
      }
      map(u);
      const double want = std::abs(jac.determinant());
      CHECK(std::abs(eval(in.jacobian, b) - want) <= 1e-6 * std::max(1.0, want));
    }
  }
}
