#include "doctest.h"
#include "support.hpp"

#include "em4lab/error.hpp"
#include "em4lab/tensor.hpp"

using namespace em4lab;
using namespace testing;

namespace {

TwoFormPoint diag_form(double mu, double nu) {
  return mu * TwoFormPoint::basis(4, 0, 1) + nu * TwoFormPoint::basis(4, 2, 3);
}

}  // namespace

TEST_CASE("metric validation") {
  Matrix bad = Matrix::Identity(3, 3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(MetricPoint{bad}, Error);
  Matrix tiny = Matrix::Identity(2, 2);
  tiny(1, 1) = 1e-12;
  CHECK_THROWS_AS(MetricPoint{tiny}, Error);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS(MetricPoint{asym}, Error);
  const MetricPoint g(4.0 * Matrix::Identity(4, 4));
  CHECK(g.sqrt_det() == doctest::Approx(16.0));
}

TEST_CASE("two-form validation") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(TwoFormPoint{m}, Error);
  CHECK(TwoFormPoint::antisymmetrized(m)(1, 0) == doctest::Approx(-0.5));
}

TEST_CASE("two_form_norm2 examples") {
  const MetricPoint id = MetricPoint::identity(4);
  CHECK(two_form_norm2(id, TwoFormPoint::basis(4, 0, 1)) == doctest::Approx(2.0));
  CHECK(two_form_norm2(id, diag_form(1.0, 2.0)) == doctest::Approx(10.0));
  const MetricPoint g4(4.0 * Matrix::Identity(4, 4));
  const TwoFormPoint f = TwoFormPoint::basis(4, 0, 1);
  CHECK(two_form_norm2(g4, f) == doctest::Approx(brute_norm2(g4, f.components())));
  CHECK(two_form_norm2(g4, f) == doctest::Approx(2.0 / 16.0));
  CHECK_THROWS_AS(two_form_norm2(MetricPoint::identity(3), f), Error);
}

TEST_CASE("stress examples") {
  const MetricPoint id = MetricPoint::identity(4);
  Matrix expect = Matrix::Zero(4, 4);
  expect(0, 0) = expect(1, 1) = 1.0;
  CHECK(max_abs(stress(id, TwoFormPoint::basis(4, 0, 1)).components() - expect) < 1e-15);
  CHECK(max_abs(stress(id, TwoFormPoint::zero(4)).components()) == 0.0);
  Matrix e3 = Matrix::Zero(3, 3);
  e3(0, 0) = e3(1, 1) = 1.0;
  CHECK(max_abs(stress(MetricPoint::identity(3), TwoFormPoint::basis(3, 0, 1)).components() - e3) < 1e-15);
}

TEST_CASE("stress matches brute force, is PSD and traces to |F|^2") {
  std::mt19937_64 rng(11);
  for (int n : {2, 3, 4, 5, 6}) {
    for (int t = 0; t < 200; ++t) {
      const MetricPoint g = random_metric(rng, n);
      const TwoFormPoint f = random_form(rng, n);
      const Matrix eta = stress(g, f).components();
      CHECK(max_abs(eta - brute_stress(g, f.components())) < 1e-11 * (1.0 + max_abs(eta)));
      const double nf = two_form_norm2(g, f);
      CHECK(std::abs(trace(g, eta) - nf) <= 1e-12 * (1.0 + nf));
      CHECK(std::abs(nf - brute_norm2(g, f.components())) <= 1e-11 * (1.0 + nf));
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(eta, g.components(), Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + max_abs(eta)));
    }
  }
}

TEST_CASE("sd_split examples") {
  const MetricPoint id = MetricPoint::identity(4);
  const FormSplit s = sd_split(id, Orientation::kPositive, TwoFormPoint::basis(4, 0, 1));
  const Matrix half_plus = 0.5 * (TwoFormPoint::basis(4, 0, 1) + TwoFormPoint::basis(4, 2, 3)).components();
  const Matrix half_minus = 0.5 * (TwoFormPoint::basis(4, 0, 1) - TwoFormPoint::basis(4, 2, 3)).components();
  CHECK(max_abs(s.plus.components() - half_plus) < 1e-15);
  CHECK(max_abs(s.minus.components() - half_minus) < 1e-15);

  const TwoFormPoint sd = diag_form(1.0, 1.0);
  const FormSplit s2 = sd_split(id, Orientation::kPositive, sd);
  CHECK(max_abs(s2.plus.components() - sd.components()) < 1e-15);
  CHECK(max_abs(s2.minus.components()) < 1e-15);
  CHECK_THROWS_AS(sd_split(MetricPoint::identity(3), Orientation::kPositive, TwoFormPoint::zero(3)), Error);
}

TEST_CASE("hodge star matches the permutation-symbol oracle") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 500; ++t) {
    const MetricPoint g = random_metric(rng, 4);
    const TwoFormPoint f = random_form(rng, 4);
    for (Orientation o : {Orientation::kPositive, Orientation::kNegative}) {
      const Matrix star = hodge_star(g, o, f).components();
      const Matrix oracle = brute_star(g, sign(o), f.components());
      CHECK(max_abs(star - oracle) < 1e-10 * (1.0 + max_abs(oracle)));
      // ** = identity on 2-forms in dimension 4.
      const Matrix twice = hodge_star(g, o, hodge_star(g, o, f)).components();
      CHECK(max_abs(twice - f.components()) < 1e-10 * (1.0 + max_abs(f.components())));
    }
  }
}

TEST_CASE("sd_split is a projection pair and flips with orientation") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 500; ++t) {
    const MetricPoint g = random_metric(rng, 4);
    const TwoFormPoint f = random_form(rng, 4);
    const FormSplit s = sd_split(g, Orientation::kPositive, f);
    const double scale = 1.0 + max_abs(f.components());
    CHECK(max_abs((s.plus + s.minus).components() - f.components()) < 1e-12 * scale);
    CHECK(max_abs(hodge_star(g, Orientation::kPositive, s.plus).components() - s.plus.components()) < 1e-12 * scale);
    CHECK(max_abs(hodge_star(g, Orientation::kPositive, s.minus).components() + s.minus.components()) < 1e-12 * scale);
    const FormSplit again = sd_split(g, Orientation::kPositive, s.plus);
    CHECK(max_abs(again.plus.components() - s.plus.components()) < 1e-12 * scale);
    CHECK(max_abs(again.minus.components()) < 1e-12 * scale);
    const FormSplit rev = sd_split(g, Orientation::kNegative, f);
    CHECK(max_abs(rev.plus.components() - s.minus.components()) < 1e-12 * scale);
    CHECK(max_abs(rev.minus.components() - s.plus.components()) < 1e-12 * scale);
  }
}

TEST_CASE("stress split residuals: diagonal example and zero form") {
  const MetricPoint id = MetricPoint::identity(4);
  const StressSplitResiduals r = stress_split_residuals(id, Orientation::kPositive, diag_form(1.0, 2.0));
  CHECK(r.composition < 1e-14);
  CHECK(r.norm < 1e-13);
  CHECK(r.eta0_norm2 == doctest::Approx(9.0));
  CHECK(r.plus_norm2 == doctest::Approx(9.0));   // (mu + nu)^2
  CHECK(r.minus_norm2 == doctest::Approx(1.0));  // (mu - nu)^2
  const StressSplitResiduals z = stress_split_residuals(id, Orientation::kPositive, TwoFormPoint::zero(4));
  CHECK(z.composition == 0.0);
  CHECK(z.norm == 0.0);
}

TEST_CASE("stress split residuals vanish on random pairs in both orientations") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 3000; ++t) {
    const MetricPoint g = random_metric(rng, 4);
    const TwoFormPoint f = random_form(rng, 4, uniform(rng, 0.1, 3.0));
    const double nf = two_form_norm2(g, f);
    const StressSplitResiduals a = stress_split_residuals(g, Orientation::kPositive, f);
    const StressSplitResiduals b = stress_split_residuals(g, Orientation::kNegative, f);
    CHECK(a.composition <= 1e-10 * (1.0 + nf));
    CHECK(a.norm <= 1e-10 * (1.0 + nf * nf));
    CHECK(b.composition <= 1e-10 * (1.0 + nf));
    CHECK(b.norm <= 1e-10 * (1.0 + nf * nf));
    CHECK(std::abs(a.eta0_norm2 - b.eta0_norm2) <= 1e-10 * (1.0 + nf * nf));
    CHECK(std::abs(a.plus_norm2 + a.minus_norm2 - nf) <= 1e-10 * (1.0 + nf));
  }
}

TEST_CASE("curvature blocks of constant curvature and of zero") {
  const MetricPoint id = MetricPoint::identity(4);
  const RiemannPoint s4 = RiemannPoint::constant_curvature(id, 1.0);
  const CurvatureBlocks b = curvature_blocks(id, Orientation::kPositive, s4);
  CHECK(b.scalar == doctest::Approx(12.0));
  CHECK(b.wplus.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(b.wminus.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(b.mixed.cwiseAbs().maxCoeff() < 1e-14);
  const CurvatureBlocks z = curvature_blocks(id, Orientation::kPositive, RiemannPoint(4));
  CHECK(z.scalar == 0.0);
  CHECK(z.wplus.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("curvature blocks of holomorphic curvature 4") {
  const MetricPoint id = MetricPoint::identity(4);
  const RiemannPoint rm = holomorphic_constant_curvature(4.0);
  CHECK(rm.symmetry_defect() < 1e-15);
  const CurvatureBlocks b = curvature_blocks(id, Orientation::kPositive, rm);
  CHECK(b.scalar == doctest::Approx(24.0));
  const Eigen::Vector3d ev = b.wplus_eigenvalues();
  CHECK(ev[0] == doctest::Approx(4.0));
  CHECK(ev[1] == doctest::Approx(-2.0));
  CHECK(ev[2] == doctest::Approx(-2.0));
  CHECK(b.wminus.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(b.wplus_norm2() == doctest::Approx(24.0));
  // Reversed orientation moves the pattern into the other block.
  const CurvatureBlocks r = curvature_blocks(id, Orientation::kNegative, rm);
  CHECK(r.wplus.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(r.wminus_eigenvalues()[0] == doctest::Approx(4.0));
}

TEST_CASE("curvature blocks: traces, rejection of broken tensors") {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 300; ++t) {
    const MetricPoint g = random_metric(rng, 4);
    const RiemannPoint rm = random_curvature(rng, 4);
    const CurvatureBlocks b = curvature_blocks(g, Orientation::kPositive, rm);
    CHECK(std::abs(b.wplus.trace()) < 1e-10 * (1.0 + std::abs(b.scalar)));
    CHECK(std::abs(b.wminus.trace()) < 1e-10 * (1.0 + std::abs(b.scalar)));
    CHECK((b.wplus - b.wplus.transpose()).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + std::abs(b.scalar)));
    CHECK(std::abs(b.scalar - scalar_curvature(g, ricci(g, rm))) < 1e-10 * (1.0 + std::abs(b.scalar)));
  }
  RiemannPoint broken(4);
  broken(0, 1, 2, 3) = 1.0;
  CHECK_THROWS_AS(curvature_blocks(MetricPoint::identity(4), Orientation::kPositive, broken), Error);
}

TEST_CASE("norm decomposition examples") {
  const MetricPoint id = MetricPoint::identity(4);
  const RiemannPoint s4 = RiemannPoint::constant_curvature(id, 1.0);
  const NormDecomposition d = norm_decomposition(id, Orientation::kPositive, s4);
  CHECK(d.rm_norm2 == doctest::Approx(24.0));
  CHECK(d.residual < 1e-12);
  CHECK(norm_decomposition_residual(id, Orientation::kPositive, RiemannPoint(4)) == 0.0);
  const RiemannPoint cp = holomorphic_constant_curvature(4.0);
  const NormDecomposition c = norm_decomposition(id, Orientation::kPositive, cp);
  CHECK(c.rm_norm2 == doctest::Approx(24.0 * 24.0 / 6.0 + 4.0 * 24.0));
  CHECK(c.residual <= 1e-8 * c.rm_norm2);
}

TEST_CASE("norm decomposition on random curvature tensors") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 300; ++t) {
    const MetricPoint g = random_metric(rng, 4);
    const RiemannPoint rm = random_curvature(rng, 4);
    const NormDecomposition d = norm_decomposition(g, Orientation::kPositive, rm);
    CHECK(d.residual <= 1e-9 * (1.0 + d.rm_norm2));
  }
}

TEST_CASE("odd kernel examples") {
  const OddKernel k = odd_kernel(MetricPoint::identity(3), TwoFormPoint::basis(3, 0, 1));
  CHECK(std::abs(std::abs(k.v[2]) - 1.0) < 1e-14);
  CHECK(k.eta_vv < 1e-15);
  const OddKernel z = odd_kernel(MetricPoint::identity(5), TwoFormPoint::zero(5));
  CHECK(z.v.norm() == doctest::Approx(1.0));
  CHECK(z.eta_vv == 0.0);
  CHECK_THROWS_AS(odd_kernel(MetricPoint::identity(4), TwoFormPoint::zero(4)), Error);
}

TEST_CASE("odd kernel on random forms in dimensions 3, 5, 7") {
  std::mt19937_64 rng(18);
  for (int n : {3, 5, 7}) {
    for (int t = 0; t < 1000; ++t) {
      const MetricPoint g = random_metric(rng, n);
      const TwoFormPoint f = random_form(rng, n);
      const OddKernel k = odd_kernel(g, f);
      CHECK(std::abs(k.v.dot(g.components() * k.v) - 1.0) < 1e-10);
      CHECK(k.eta_vv <= 1e-10);
      CHECK(k.min_eigenvalue >= -1e-10);
    }
  }
}
