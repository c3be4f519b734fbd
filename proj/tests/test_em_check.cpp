#include "doctest.h"
#include "support.hpp"

#include "em4lab/atlas.hpp"
#include "em4lab/em_check.hpp"
#include "em4lab/error.hpp"

#include <cmath>

using namespace em4lab;
using namespace testing;

namespace {

// Product of spheres with the second factor's radius modulated along t1:
// g = dt1^2 + sin^2 t1 dp1^2 + w^2 (dt2^2 + sin^2 t2 dp2^2), w = 1 + d cos t1,
// with F the sum of the two factor area forms of g.
ExampleManifold warped(double d) {
  ExampleManifold m = builtin("s2xs2");
  ChartSpec& s = m.chart;
  s.params = {{"d", d}};
  s.metric[0][0] = parse("1");
  s.metric[1][1] = parse("sin(t1)^2");
  s.metric[2][2] = parse("(1 + d*cos(t1))^2");
  s.metric[3][3] = parse("(1 + d*cos(t1))^2*sin(t2)^2");
  FormField f(4, 2);
  f.set({0, 1}, parse("sin(t1)"));
  f.set({2, 3}, parse("(1 + d*cos(t1))^2*sin(t2)"));
  m.F = f;
  return m;
}

TwoFormPoint standard_sd() {
  Matrix w = Matrix::Zero(4, 4);
  w(0, 1) = 1, w(1, 0) = -1, w(2, 3) = 1, w(3, 2) = -1;
  return TwoFormPoint(w);
}

}  // namespace

TEST_CASE("grid stays inside the stencil-safe region") {
  const ExampleManifold m = builtin("round-s2");
  const Chart chart(m.chart);
  for (int order : {2, 4, 6}) {
    DiffConfig cfg;
    cfg.order = order;
    const auto grid = sample_grid(chart, 9, cfg);
    CHECK(grid.size() == 81);
    for (const Vector& x : grid) CHECK_NOTHROW(chart.check_stencil(x, cfg));
  }
  CHECK(sample_grid(chart, 1, DiffConfig{}).size() == 1);
  CHECK_THROWS_AS(sample_grid(chart, 0, DiffConfig{}), Error);
}

TEST_CASE("flat torus vacuum") {
  const ExampleManifold m = builtin("flat-torus-4");
  const Chart chart(m.chart);
  const EMReport r = em_residuals(chart, *m.F, 5, DiffConfig{});
  CHECK(r.grid_points == 625);
  CHECK(r.max_residual() == 0.0);
  CHECK(r.f.min == 0.0);
  CHECK(r.f.max == 0.0);
  CHECK(r.combination.mean == 0.0);
  CHECK(r.combination.max_deviation == 0.0);
  CHECK(r.solution());
}

TEST_CASE("unit product of spheres with the sum of area forms") {
  const ExampleManifold m = builtin("s2xs2");
  const Chart chart(m.chart);
  const EMReport r = em_residuals(chart, *m.F, 9, DiffConfig{});
  CHECK(r.closed.max <= 1e-7);
  CHECK(r.coclosed.max <= 1e-7);
  CHECK(r.trace_free.max <= 1e-7);
  CHECK(std::abs(r.f.mean) <= 1e-7);
  CHECK(std::abs(r.combination.mean + 16.0) <= 1e-6);
  CHECK(r.solution());
}

TEST_CASE("unequal radii are not a solution") {
  // Riemannian area forms: Ric ~ {1, 1, 1/4, 1/4}, eta ~ {1, 1, 1, 1}.
  const ExampleManifold m = builtin("s2xs2", {{"a", 1.0}, {"b", 2.0}});
  const Chart chart(m.chart);
  const EMReport r = em_residuals(chart, *m.F, 5, DiffConfig{});
  CHECK(std::abs(r.trace_free.max - 0.75) <= 1e-7);
  CHECK_FALSE(r.einstein_ok);
  CHECK_FALSE(r.solution());
  CHECK(r.closed_ok);
  CHECK(r.coclosed_ok);

  // Coordinate area form sin(t2) dt2 ^ dp2 on the radius-2 factor:
  // eta ~ {1, 1, 1/16, 1/16}.
  const ExampleManifold c = builtin("s2xs2", {{"a", 1.0}, {"b", 2.0}, {"beta", 0.25}});
  const EMReport rc = em_residuals(Chart(c.chart), *c.F, 5, DiffConfig{});
  CHECK(std::abs(rc.trace_free.max - 0.1875) <= 1e-7);
  CHECK(rc.trace_free.max > 0.1);
  CHECK(rc.formulation_gap <= 1e-12);

  // Both pieces are homogeneous, so R and |F|^2 are constant and the
  // combination (-4R in dimension 4) cannot detect the failure here.
  CHECK(r.combination.max_deviation <= 1e-7);
}

TEST_CASE("conserved combination detects inhomogeneous non-solutions") {
  const ExampleManifold m = warped(0.3);
  const Chart chart(m.chart);
  const ExpressionFormSource src(chart, *m.F);
  const ConservedScan scan = conserved_scan(chart, src, 7, DiffConfig{});
  CHECK(scan.combination.max_deviation > 0.01);
  CHECK(scan.scalar.max_deviation > 0.01);
}

TEST_CASE("conserved combination deviation is controlled by the residuals") {
  // Along the warped family the residuals and the deviation both vanish
  // linearly in d; their ratio stays below kCombinationResidualRatio.
  double previous = 0.0;
  for (double d : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
    const ExampleManifold m = warped(d);
    const Chart chart(m.chart);
    const EMReport r = em_residuals(chart, *m.F, 7, DiffConfig{});
    const double ratio = r.combination.max_deviation / r.max_residual();
    CHECK(ratio <= kCombinationResidualRatio);
    if (previous > 0.0) CHECK(std::abs(ratio - previous) <= 0.5 * previous);
    previous = ratio;
  }
}

TEST_CASE("scalar constancy on the Fubini-Study Kahler-Einstein field") {
  const ExampleManifold m = builtin("cp2-fubini-study");
  const Chart chart(m.chart);
  const ExpressionFormSource src(chart, *m.F);
  const ConservedScan scan = conserved_scan(chart, src, 5, DiffConfig{});
  CHECK(scan.scalar.max_deviation <= 1e-6);
  CHECK(std::abs(scan.scalar.mean - 24.0) <= 1e-6);
  CHECK(scan.combination.max_deviation <= 1e-6);
}

TEST_CASE("surface branch: F = 3 dmu on the round sphere") {
  const ExampleManifold m = builtin("round-s2", {{"r", 1.0}, {"c", 3.0}});
  const Chart chart(m.chart);
  const ExpressionFormSource src(chart, *m.F);
  const ConservedScan scan = conserved_scan(chart, src, 9, DiffConfig{});
  CHECK(scan.field_norm.max_deviation <= 1e-9);
  CHECK(std::abs(scan.field_norm.mean - 3.0 * std::sqrt(2.0)) <= 1e-12);
  CHECK(scan.plus_branch <= 1e-12);
  CHECK(std::abs(scan.minus_branch - 6.0 * std::sqrt(2.0)) <= 1e-9);
  const EMReport r = em_residuals(chart, *m.F, 9, DiffConfig{});
  CHECK(r.solution());

  const ExampleManifold neg = builtin("round-s2", {{"r", 1.0}, {"c", -3.0}});
  const ConservedScan ns = conserved_scan(Chart(neg.chart), ExpressionFormSource(Chart(neg.chart), *neg.F), 5,
                                          DiffConfig{});
  CHECK(ns.minus_branch <= 1e-12);
}

TEST_CASE("the two residual formulations agree") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 6; ++t) {
    const double a = uniform(rng, 0.5, 2.0), b = uniform(rng, 0.5, 2.0);
    ExampleManifold m = builtin("s2xs2", {{"a", a}, {"b", b}, {"alpha", uniform(rng, -2, 2)},
                                          {"beta", uniform(rng, -2, 2)}});
    m.F->set({0, 2}, parse("cos(t1)*sin(p2)"));
    m.F->set({1, 3}, parse("t2*p1"));
    const Chart chart(m.chart);
    const ExpressionFormSource src(chart, *m.F);
    for (const Vector& x : sample_grid(chart, 3, DiffConfig{})) {
      const PointSample s = em_point(chart, src, x, DiffConfig{});
      CHECK(s.gap <= 1e-12);
      CHECK(std::abs(s.trace_free - s.f_form) <= 1e-12 * (1.0 + s.trace_free));
      CHECK(s.trace_gap <= 1e-12 * (1.0 + s.field_norm2));
      CHECK(s.f == doctest::Approx((s.scalar - s.field_norm2) / 4).epsilon(1e-15));
    }
  }
}

TEST_CASE("verdicts are pure functions of the statistics") {
  EMReport r;
  r.closed.max = 1e-7;
  r.coclosed.max = 2e-6;
  r.trace_free.max = 5e-7;
  r.combination.mean = 10.0;
  r.combination.max_deviation = 5e-6;
  apply_verdicts(r, 1e-6);
  CHECK(r.closed_ok);
  CHECK_FALSE(r.coclosed_ok);
  CHECK(r.einstein_ok);
  CHECK(r.combination_ok);
  CHECK_FALSE(r.solution());
  apply_verdicts(r, 1e-5);
  CHECK(r.solution());
  CHECK_THROWS_AS(summarize({}, 4, 0, 1e-6), Error);
}

TEST_CASE("self-dual fields give an Einstein stress") {
  std::vector<FieldPoint> pts;
  pts.push_back({MetricPoint::identity(4), standard_sd()});
  std::mt19937_64 rng(42);
  for (int t = 0; t < 200; ++t) {
    Matrix a = random_matrix(rng, 4) + 2.0 * Matrix::Identity(4, 4);
    if (a.determinant() < 0) a.row(0) *= -1;
    const MetricPoint g(a.transpose() * a);
    const double s = uniform(rng, -3, 3);
    pts.push_back({g, TwoFormPoint(s * a.transpose() * standard_sd().components() * a)});
  }
  const EinsteinReduction r = einstein_reduction_check(pts, Orientation::kPositive, 1e-9);
  CHECK(r.one_sided == pts.size());
  CHECK(r.max_eta0 <= 1e-12 * 50);
  CHECK(r.pass);
  for (const FieldPoint& p : pts) {
    const double eta0 = std::sqrt(tensor_norm2(p.g, trace_free(p.g, stress(p.g, p.F)).components()));
    CHECK(eta0 <= 1e-12 * (1.0 + two_form_norm2(p.g, p.F)));
  }
}

TEST_CASE("mixed fields have a non-Einstein stress") {
  // F = mu dx12 + nu dx34, mu = 1, nu = 2: |eta0| = |mu^2 - nu^2| = 3.
  Matrix f = Matrix::Zero(4, 4);
  f(0, 1) = 1, f(1, 0) = -1, f(2, 3) = 2, f(3, 2) = -2;
  const MetricPoint g = MetricPoint::identity(4);
  const TwoFormPoint F(f);
  const Matrix eta = brute_stress(g, f);
  const double tr = eta.trace();
  const Matrix eta0 = eta - tr / 4 * Matrix::Identity(4, 4);
  CHECK(std::abs(std::sqrt(eta0.squaredNorm()) - 3.0) <= 1e-14);
  const EinsteinReduction r = einstein_reduction_check({{g, F}}, Orientation::kPositive, 1e-9);
  CHECK(r.one_sided == 0);
  CHECK(r.pass);
}
