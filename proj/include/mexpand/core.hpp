#ifndef MEXPAND_CORE_HPP
#define MEXPAND_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mexpand {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

/// Integer lattice point. Ordered lexicographically.
using Index = std::vector<long>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent construction parameters.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// A value asks for something the object cannot provide (derivative order,
/// Fourier transform, moment).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not reach its declared accuracy.
class AccuracyFailure : public Error {
 public:
  AccuracyFailure(const std::string& what, double estimate)
      : Error(what + " (achieved error estimate " + std::to_string(estimate) + ")"),
        estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

/// The Fourier transform of an operator vanishes where it must be inverted.
class ZeroCrossing : public Error {
 public:
  ZeroCrossing(const std::string& what, Vec location)
      : Error(what), location_(std::move(location)) {}
  const Vec& location() const { return location_; }

 private:
  Vec location_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Scalar helpers

/// sin(pi t) with exact argument reduction, so integers give exact zeros.
inline double sin_pi(double t) {
  const double n = std::nearbyint(t);
  const double r = t - n;
  const double s = std::sin(pi * r);
  return (std::fmod(std::fabs(n), 2.0) == 1.0) ? -s : s;
}

inline double cos_pi(double t) {
  const double n = std::nearbyint(t);
  const double r = t - n;
  const double c = std::cos(pi * r);
  return (std::fmod(std::fabs(n), 2.0) == 1.0) ? -c : c;
}

/// exp(i pi t)
inline cplx expi_pi(double t) { return {cos_pi(t), sin_pi(t)}; }

/// Normalized sinc: sin(pi t)/(pi t).
inline double sinc(double t) {
  const double u = pi * t;
  if (std::fabs(u) < 1e-4) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0 * (1.0 - u2 / 110.0))));
  }
  return sin_pi(t) / u;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

/// Integer power of a complex number (exact for small exponents).
inline cplx ipow(cplx z, int n) {
  cplx r{1.0, 0.0};
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

inline double ipow(double z, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

// ---------------------------------------------------------------------------
// Multi-indices

class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> components) : c_(std::move(components)) {
    for (int v : c_)
      if (v < 0) throw InvalidSpec("multi-index components must be nonnegative");
  }
  static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(d, 0)); }
  static MultiIndex unit(int d, int axis) {
    std::vector<int> c(d, 0);
    c[axis] = 1;
    return MultiIndex(std::move(c));
  }

  int dim() const { return static_cast<int>(c_.size()); }
  int operator[](int i) const { return c_[i]; }
  const std::vector<int>& components() const { return c_; }

  int total() const {
    int s = 0;
    for (int v : c_) s += v;
    return s;
  }
  double factorial() const {
    double r = 1.0;
    for (int v : c_) r *= mexpand::factorial(v);
    return r;
  }
  bool any_odd() const {
    return std::any_of(c_.begin(), c_.end(), [](int v) { return v % 2 != 0; });
  }
  bool is_zero() const { return total() == 0; }

  /// t^beta
  template <class Scalar, class V>
  Scalar monomial(const V& t) const {
    Scalar r{1.0};
    for (int i = 0; i < dim(); ++i) r *= ipow(Scalar(t[i]), c_[i]);
    return r;
  }

  auto operator<=>(const MultiIndex&) const = default;

  /// All multi-indices of dimension d with total exactly r, lexicographic.
  static std::vector<MultiIndex> of_total(int d, int r) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(d, 0);
    auto rec = [&](auto&& self, int axis, int left) -> void {
      if (axis == d - 1) {
        cur[axis] = left;
        out.emplace_back(cur);
        return;
      }
      for (int v = left; v >= 0; --v) {
        cur[axis] = v;
        self(self, axis + 1, left - v);
      }
    };
    if (d > 0) rec(rec, 0, r);
    return out;
  }

  /// All multi-indices with total <= n, ordered by total then lexicographically.
  static std::vector<MultiIndex> up_to(int d, int n) {
    std::vector<MultiIndex> out;
    for (int r = 0; r <= n; ++r) {
      auto level = of_total(d, r);
      out.insert(out.end(), level.begin(), level.end());
    }
    return out;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim(); ++i) {
      if (i) s += ",";
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int> c_;
};

// ---------------------------------------------------------------------------
// Boxes

/// Axis-aligned box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
  Vec lo;
  Vec hi;

  static Box cube(int d, double half) {
    return {Vec::Constant(d, -half), Vec::Constant(d, half)};
  }
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  double diameter() const { return (hi - lo).norm(); }
  void validate() const {
    if (lo.size() != hi.size() || lo.size() == 0) throw InvalidSpec("box dimension mismatch");
    for (int i = 0; i < dim(); ++i)
      if (!(lo[i] < hi[i])) throw InvalidSpec("degenerate box: lo >= hi on axis " + std::to_string(i));
  }
};

inline Vec to_vec(const Index& k) {
  Vec v(static_cast<Eigen::Index>(k.size()));
  for (size_t i = 0; i < k.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(k[i]);
  return v;
}

inline Index negate(Index k) {
  for (auto& v : k) v = -v;
  return k;
}

}  // namespace mexpand

#endif  // MEXPAND_CORE_HPP
