#pragma once

// Random generators and brute-force oracles shared by the unit tests.

#include "em4lab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace testing {

using em4lab::Matrix;
using em4lab::MetricPoint;
using em4lab::RiemannPoint;
using em4lab::TwoFormPoint;
using em4lab::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = uniform(rng, -scale, scale);
  return m;
}

inline MetricPoint random_metric(std::mt19937_64& rng, int n) {
  const Matrix a = random_matrix(rng, n);
  return MetricPoint(a.transpose() * a + 0.3 * Matrix::Identity(n, n));
}

inline TwoFormPoint random_form(std::mt19937_64& rng, int n, double scale = 1.0) {
  const Matrix a = random_matrix(rng, n, scale);
  return TwoFormPoint(a - a.transpose());
}

inline Matrix random_symmetric(std::mt19937_64& rng, int n) {
  const Matrix a = random_matrix(rng, n);
  return 0.5 * (a + a.transpose());
}

/// Kulkarni-Nomizu product (h o k)_ijkl.
inline void add_kulkarni_nomizu(RiemannPoint& r, const Matrix& h, const Matrix& k, double c) {
  const int n = r.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          r(i, j, a, b) += c * (h(i, a) * k(j, b) + h(j, b) * k(i, a) - h(i, b) * k(j, a) - h(j, a) * k(i, b));
}

/// Random algebraic curvature tensor: a sum of Kulkarni-Nomizu squares.
inline RiemannPoint random_curvature(std::mt19937_64& rng, int n, int terms = 4) {
  RiemannPoint r(n);
  for (int t = 0; t < terms; ++t) {
    const Matrix h = random_symmetric(rng, n);
    add_kulkarni_nomizu(r, h, h, uniform(rng, -1.0, 1.0));
  }
  return r;
}

inline int parity(std::vector<int> p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if (p[i] == p[j]) return 0;
      if (p[i] > p[j]) s = -s;
    }
  return s;
}

/// g^ik g^jl F_ij F_kl by nested loops.
inline double brute_norm2(const MetricPoint& g, const Matrix& f) {
  const int n = g.dim();
  const Matrix& gi = g.inverse();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += gi(i, k) * gi(j, l) * f(i, j) * f(k, l);
  return s;
}

/// (*F)_kl = 1/2 s sqrt(det g) eps_ijkl F^ij by nested loops.
inline Matrix brute_star(const MetricPoint& g, int orientation, const Matrix& f) {
  const Matrix& gi = g.inverse();
  Matrix up = gi * f * gi.transpose();
  Matrix out = Matrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out(k, l) += 0.5 * orientation * g.sqrt_det() * parity({i, j, k, l}) * up(i, j);
  return out;
}

/// eta_ij = g^pq F_ip F_jq by nested loops.
inline Matrix brute_stress(const MetricPoint& g, const Matrix& f) {
  const int n = g.dim();
  const Matrix& gi = g.inverse();
  Matrix e = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) e(i, j) += gi(p, q) * f(i, p) * f(j, q);
  return e;
}

/// Curvature tensor of constant holomorphic sectional curvature c on C^2
/// with the standard structure: (c/4)(g o g / 2 + omega terms).
inline RiemannPoint holomorphic_constant_curvature(double c) {
  Matrix w = Matrix::Zero(4, 4);
  w(0, 1) = 1;
  w(1, 0) = -1;
  w(2, 3) = 1;
  w(3, 2) = -1;
  const Matrix g = Matrix::Identity(4, 4);
  RiemannPoint r(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l)
          r(i, j, k, l) = 0.25 * c *
                          (g(i, k) * g(j, l) - g(i, l) * g(j, k) + w(i, k) * w(j, l) - w(i, l) * w(j, k) +
                           2.0 * w(i, j) * w(k, l));
  return r;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing
