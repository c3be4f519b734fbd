#pragma once

// Second-order forward-mode jets: value, gradient and packed upper-triangular
// Hessian with respect to N seed variables.

#include <array>
#include <cmath>

namespace em4lab {

template <int N>
struct Jet {
  static constexpr int kHess = N * (N + 1) / 2;

  double v = 0.0;
  std::array<double, N> d{};
  std::array<double, kHess> h{};

  static constexpr int hidx(int i, int j) {
    if (i > j) std::swap(i, j);
    return i * N - i * (i - 1) / 2 + (j - i);
  }

  static Jet constant(double value) {
    Jet r;
    r.v = value;
    return r;
  }
  static Jet variable(double value, int k) {
    Jet r;
    r.v = value;
    r.d[k] = 1.0;
    return r;
  }

  double hess(int i, int j) const { return h[hidx(i, j)]; }
};

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Jet<N>& x) {
  return x.v;
}

template <int N>
Jet<N> operator-(const Jet<N>& a) {
  Jet<N> r;
  r.v = -a.v;
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  for (int i = 0; i < Jet<N>::kHess; ++i) r.h[i] = -a.h[i];
  return r;
}

template <int N>
Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v + b.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
  for (int i = 0; i < Jet<N>::kHess; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}

template <int N>
Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v - b.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
  for (int i = 0; i < Jet<N>::kHess; ++i) r.h[i] = a.h[i] - b.h[i];
  return r;
}

template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v * b.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.v * b.d[i] + b.v * a.d[i];
  int p = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j, ++p)
      r.h[p] = a.v * b.h[p] + b.v * a.h[p] + a.d[i] * b.d[j] + a.d[j] * b.d[i];
  return r;
}

/// f(a) given f, f', f'' at a.v.
template <int N>
Jet<N> chain(const Jet<N>& a, double f0, double f1, double f2) {
  Jet<N> r;
  r.v = f0;
  for (int i = 0; i < N; ++i) r.d[i] = f1 * a.d[i];
  int p = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j, ++p) r.h[p] = f1 * a.h[p] + f2 * a.d[i] * a.d[j];
  return r;
}

template <int N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  const double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

template <int N>
Jet<N> powi(const Jet<N>& a, int k) {
  if (k == 0) return Jet<N>::constant(1.0);
  const double x = a.v;
  const double f0 = std::pow(x, k);
  const double f1 = k * std::pow(x, k - 1);
  const double f2 = k == 1 ? 0.0 : k * (k - 1) * std::pow(x, k - 2);
  return chain(a, f0, f1, f2);
}

inline double powi(double a, int k) { return std::pow(a, k); }

template <int N>
Jet<N> sin(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
template <int N>
Jet<N> cos(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
template <int N>
Jet<N> tan(const Jet<N>& a) {
  const double t = std::tan(a.v);
  const double s2 = 1.0 + t * t;
  return chain(a, t, s2, 2.0 * t * s2);
}
template <int N>
Jet<N> atan(const Jet<N>& a) {
  const double q = 1.0 / (1.0 + a.v * a.v);
  return chain(a, std::atan(a.v), q, -2.0 * a.v * q * q);
}
template <int N>
Jet<N> sinh(const Jet<N>& a) {
  const double s = std::sinh(a.v), c = std::cosh(a.v);
  return chain(a, s, c, s);
}
template <int N>
Jet<N> cosh(const Jet<N>& a) {
  const double s = std::sinh(a.v), c = std::cosh(a.v);
  return chain(a, c, s, c);
}
template <int N>
Jet<N> tanh(const Jet<N>& a) {
  const double t = std::tanh(a.v);
  const double s = 1.0 - t * t;
  return chain(a, t, s, -2.0 * t * s);
}
template <int N>
Jet<N> exp(const Jet<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
template <int N>
Jet<N> log(const Jet<N>& a) {
  const double inv = 1.0 / a.v;
  return chain(a, std::log(a.v), inv, -inv * inv);
}
template <int N>
Jet<N> sqrt(const Jet<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int N>
Jet<N> abs(const Jet<N>& a) {
  const double sg = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return chain(a, std::abs(a.v), sg, 0.0);
}

template <int N>
bool is_finite(const Jet<N>& a) {
  if (!std::isfinite(a.v)) return false;
  for (double x : a.d)
    if (!std::isfinite(x)) return false;
  for (double x : a.h)
    if (!std::isfinite(x)) return false;
  return true;
}
inline bool is_finite(double a) { return std::isfinite(a); }

}  // namespace em4lab
