#ifndef MEXPAND_BSPLINE_HPP
#define MEXPAND_BSPLINE_HPP

#include <array>
#include <map>
#include <mutex>

#include "mexpand/core.hpp"

namespace mexpand {

/// Cardinal B-spline N_m of order m supported on [0, m], evaluated with the
/// Cox-de Boor recurrence on the unit cell containing t.
inline double bspline_uncentered(int m, double t) {
  if (m < 1 || m > 30) throw InvalidSpec("B-spline order must be in [1, 30]");
  if (m == 1) return (t >= 0.0 && t < 1.0) ? 1.0 : 0.0;
  if (!(t > 0.0 && t < m)) return 0.0;
  const int cell = static_cast<int>(std::floor(t));
  const double f = t - cell;
  // b[r] holds N_k(f + r) for r = 0..k-1.
  std::array<double, 32> b{};
  b[0] = 1.0;
  for (int k = 1; k < m; ++k) {
    std::array<double, 32> nb{};
    for (int r = 0; r <= k; ++r) {
      const double u = f + r;
      const double here = (r <= k - 1) ? b[r] : 0.0;
      const double left = (r >= 1) ? b[r - 1] : 0.0;
      nb[r] = (u * here + (k + 1 - u) * left) / k;
    }
    b = nb;
  }
  return b[cell];
}

/// Centered cardinal B-spline of order m: support [-m/2, m/2], Fourier
/// transform sinc^m.
inline double bspline(int m, double x) { return bspline_uncentered(m, x + 0.5 * m); }

/// n-th derivative of the centered B-spline (n < m), via the backward
/// difference identity B_m^{(n)} = sum_k (-1)^k C(n,k) B_{m-n}(. + n/2 - k).
inline double bspline_derivative(int m, int n, double x) {
  if (n == 0) return bspline(m, x);
  if (n >= m) throw CapabilityError("B-spline of order " + std::to_string(m) + " has no classical derivative of order " + std::to_string(n));
  double s = 0.0;
  for (int k = 0; k <= n; ++k) s += ((k % 2) ? -1.0 : 1.0) * binomial(n, k) * bspline(m - n, x + 0.5 * n - k);
  return s;
}

namespace detail {

/// Taylor coefficients (in t) of sinc(t)^m up to degree `deg`.
inline const std::vector<double>& sinc_power_series(int m) {
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  constexpr int deg = 64;
  std::lock_guard lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  std::vector<double> base(deg + 1, 0.0);
  for (int k = 0; 2 * k <= deg; ++k)
    base[2 * k] = ((k % 2) ? -1.0 : 1.0) * std::pow(pi, 2 * k) / factorial(2 * k + 1);
  std::vector<double> acc(deg + 1, 0.0);
  acc[0] = 1.0;
  for (int p = 0; p < m; ++p) {
    std::vector<double> next(deg + 1, 0.0);
    for (int i = 0; i <= deg; ++i)
      for (int j = 0; i + j <= deg; ++j) next[i + j] += acc[i] * base[j];
    acc = std::move(next);
  }
  return cache.emplace(m, std::move(acc)).first->second;
}

}  // namespace detail

/// n-th derivative of sinc(t)^m: power series near the origin, Leibniz rule
/// on sin^m(pi t) * (pi t)^{-m} away from it.
inline double sinc_power_derivative(int m, int n, double t) {
  if (std::fabs(t) < 0.5) {
    const auto& c = detail::sinc_power_series(m);
    double s = 0.0;
    double tp = 1.0;
    for (int k = n; k < static_cast<int>(c.size()); ++k) {
      if (c[k] != 0.0) {
        double falling = 1.0;
        for (int i = 0; i < n; ++i) falling *= (k - i);
        s += c[k] * falling * tp;
      }
      tp *= t;
    }
    return s;
  }
  // sin^m(pi t) = (2i)^{-m} sum_r C(m,r) (-1)^{m-r} exp(i pi (2r-m) t)
  auto sin_power_deriv = [&](int q) {
    cplx acc{0.0, 0.0};
    for (int r = 0; r <= m; ++r) {
      const int freq = 2 * r - m;
      const cplx c = binomial(m, r) * (((m - r) % 2) ? -1.0 : 1.0) * ipow(I * (pi * freq), q);
      acc += c * expi_pi(freq * t);
    }
    return (acc / ipow(2.0 * I, m)).real();
  };
  double s = 0.0;
  for (int q = 0; q <= n; ++q) {
    const int p = n - q;
    double falling = 1.0;
    for (int i = 0; i < p; ++i) falling *= (-m - i);
    const double inv_pow = falling * std::pow(pi, -m) * std::pow(t, -m - p);
    s += binomial(n, q) * sin_power_deriv(q) * inv_pow;
  }
  return s;
}

}  // namespace mexpand

#endif  // MEXPAND_BSPLINE_HPP
