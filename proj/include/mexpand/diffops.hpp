#ifndef MEXPAND_DIFFOPS_HPP
#define MEXPAND_DIFFOPS_HPP

#include <functional>
#include <map>
#include <optional>

#include "mexpand/quadrature.hpp"
#include "mexpand/signals.hpp"

namespace mexpand {

/// L = sum_beta a_beta D^beta with constant complex coefficients, a_0 != 0.
class DiffOperator {
 public:
  using Coeffs = std::map<MultiIndex, cplx>;

  DiffOperator(int d, Coeffs coeffs) : d_(d) {
    if (d < 1) throw InvalidSpec("operator dimension must be positive");
    for (const auto& [beta, a] : coeffs) {
      if (beta.dim() != d) throw InvalidSpec("coefficient multi-index " + beta.str() + " has wrong dimension");
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw InvalidSpec("non-finite coefficient at " + beta.str());
      if (a != cplx{}) coeffs_.emplace(beta, a);
    }
    if (coefficient(MultiIndex::zero(d)) == cplx{}) throw InvalidSpec("operator needs a nonzero constant coefficient a_0");
    for (const auto& [beta, a] : coeffs_) order_ = std::max(order_, beta.total());
  }

  static DiffOperator identity(int d) { return DiffOperator(d, {{MultiIndex::zero(d), 1.0}}); }

  /// 1-D operator sum_n a[n] D^n.
  static DiffOperator univariate(const std::vector<cplx>& a) {
    Coeffs c;
    for (size_t n = 0; n < a.size(); ++n) c[MultiIndex({static_cast<int>(n)})] = a[n];
    return DiffOperator(1, std::move(c));
  }

  int dim() const { return d_; }
  int order() const { return order_; }
  const Coeffs& coeffs() const { return coeffs_; }
  cplx coefficient(const MultiIndex& beta) const {
    auto it = coeffs_.find(beta);
    return it == coeffs_.end() ? cplx{} : it->second;
  }

  /// Fourier transform of the associated distribution
  /// sum_beta conj(a_beta) (-1)^[beta] D^beta delta, i.e.
  /// sum_beta conj(a_beta) (-2 pi i xi)^beta.
  cplx dist_ft(const Vec& xi) const {
    check(xi);
    cplx s{};
    for (const auto& [beta, a] : coeffs_) s += std::conj(a) * beta.monomial<cplx>(-two_pi * I * xi.cast<cplx>());
    return s;
  }

  cplx dist_ft_complex(const CVec& z) const {
    if (z.size() != d_) throw InvalidSpec("frequency dimension mismatch");
    cplx s{};
    for (const auto& [beta, a] : coeffs_) s += std::conj(a) * beta.monomial<cplx>(CVec(-two_pi * I * z));
    return s;
  }

  /// Symbol of L: L e^{2 pi i (x, xi)} = symbol(xi) e^{2 pi i (x, xi)}.
  cplx symbol(const Vec& xi) const {
    check(xi);
    cplx s{};
    for (const auto& [beta, a] : coeffs_) s += a * beta.monomial<cplx>(two_pi * I * xi.cast<cplx>());
    return s;
  }

  /// (L f)(x) from exact partial derivatives of f.
  cplx apply(const Signal& f, const Vec& x) const {
    if (f.dim() != d_) throw InvalidSpec("signal and operator dimensions differ");
    if (f.max_order() < order_)
      throw CapabilityError("signal provides derivatives up to order " + std::to_string(f.max_order()) +
                            ", operator needs " + std::to_string(order_));
    cplx s{};
    for (const auto& [beta, a] : coeffs_) s += a * f.derivative(beta, x);
    return s;
  }

 private:
  void check(const Vec& xi) const {
    if (xi.size() != d_) throw InvalidSpec("frequency dimension mismatch");
  }
  int d_;
  int order_ = 0;
  Coeffs coeffs_;
};

/// int_{B_1} t^beta dt over the Euclidean unit ball of R^d.
inline double ball_moment(const MultiIndex& beta, int d) {
  if (beta.dim() != d) throw InvalidSpec("multi-index dimension mismatch");
  if (beta.any_odd()) return 0.0;
  double log_num = 0.0;
  for (int i = 0; i < d; ++i) log_num += std::lgamma(0.5 * (beta[i] + 1));
  return std::exp(log_num - std::lgamma(0.5 * (beta.total() + d) + 1.0));
}

inline double unit_ball_volume(int d) { return ball_moment(MultiIndex::zero(d), d); }

/// Random radii for local averages: u has density w (point masses or a
/// continuous density on [lo, hi]) and the ball radius is h(u).
class AveragingScheme {
 public:
  using Profile = std::function<double(double)>;
  struct Node {
    double u;
    double weight;
  };

  static AveragingScheme point_masses(std::vector<Node> masses, Profile h, int moment_budget = 8) {
    if (masses.empty()) throw InvalidSpec("averaging scheme needs at least one point mass");
    double total = 0.0;
    for (const auto& m : masses) {
      if (!(m.weight >= 0.0)) throw InvalidSpec("negative point-mass probability");
      total += m.weight;
    }
    if (std::fabs(total - 1.0) > 1e-10) throw InvalidSpec("point-mass probabilities must sum to 1");
    return AveragingScheme(std::move(masses), std::move(h), moment_budget, "point_masses");
  }

  /// h(u) = radius with probability 1.
  static AveragingScheme constant(double radius, int moment_budget = 8) {
    if (!(radius > 0.0)) throw InvalidSpec("radius must be positive");
    return point_masses({{radius, 1.0}}, [](double u) { return u; }, moment_budget);
  }

  /// Continuous density w on [lo, hi], discretized once with 64-node
  /// Gauss-Legendre; every moment and every expected sample uses these nodes.
  static AveragingScheme continuous(std::function<double(double)> w, double lo, double hi, Profile h,
                                    int moment_budget = 8) {
    if (!(lo < hi)) throw InvalidSpec("density support must be a nondegenerate interval");
    const auto& r = quad::gauss_legendre(64);
    std::vector<Node> nodes;
    double total = 0.0;
    for (int i = 0; i < r.size(); ++i) {
      const double u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * r.nodes[i];
      const double wt = 0.5 * (hi - lo) * r.weights[i] * w(u);
      if (!(wt >= 0.0) || !std::isfinite(wt)) throw InvalidSpec("density must be finite and nonnegative");
      nodes.push_back({u, wt});
      total += wt;
    }
    if (std::fabs(total - 1.0) > 1e-10)
      throw InvalidSpec("density does not integrate to 1 (quadrature gives " + std::to_string(total) + ")");
    return AveragingScheme(std::move(nodes), std::move(h), moment_budget, "continuous");
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  double radius(double u) const { return h_(u); }
  int moment_budget() const { return budget_; }
  const std::string& kind() const { return kind_; }

  /// int w(u) h(u)^k du.
  double moment(int k) const {
    if (k > budget_) throw CapabilityError("moment of order " + std::to_string(k) + " exceeds the scheme's budget");
    double s = 0.0;
    for (const auto& n : nodes_) s += n.weight * std::pow(h_(n.u), k);
    if (!std::isfinite(s)) throw CapabilityError("moment of order " + std::to_string(k) + " is not finite");
    return s;
  }

  /// Same u-weights with the radius profile multiplied by c.
  AveragingScheme scaled(double c) const {
    AveragingScheme s = *this;
    auto h = h_;
    s.h_ = [h, c](double u) { return c * h(u); };
    return s;
  }

 private:
  AveragingScheme(std::vector<Node> nodes, Profile h, int budget, std::string kind)
      : nodes_(std::move(nodes)), h_(std::move(h)), budget_(budget), kind_(std::move(kind)) {
    for (const auto& n : nodes_)
      if (n.weight > 0.0 && !(h_(n.u) > 0.0)) throw InvalidSpec("radius profile must be positive");
  }

  std::vector<Node> nodes_;
  Profile h_;
  int budget_;
  std::string kind_;
};

/// The operator whose Taylor expansion matches the expected ball average to
/// order N: a_beta = (1/beta!) (ball_moment(beta)/V_1) int w h^[beta].
inline DiffOperator falsified_operator(int n, const AveragingScheme& scheme, int d) {
  if (n < 0) throw InvalidSpec("operator order must be nonnegative");
  DiffOperator::Coeffs c;
  const double v1 = unit_ball_volume(d);
  c[MultiIndex::zero(d)] = 1.0;
  for (const auto& beta : MultiIndex::up_to(d, n)) {
    if (beta.is_zero() || beta.any_odd()) continue;
    c[beta] = ball_moment(beta, d) / v1 * scheme.moment(beta.total()) / beta.factorial();
  }
  return DiffOperator(d, std::move(c));
}

struct Example3Coeffs {
  cplx b1, b2;
};

/// Numerator weights for the two-dimensional order-3 kernel
///   [s1^3 s2^3 + b1 s1^5 s2^3 + b2 s1^3 s2^5] / ((pi xi1)^3 (pi xi2)^3),
/// s_i = sin(pi xi_i), chosen so that the second-order compatibility
/// conditions with L = a_0 + a20 D^(2,0) + a02 D^(0,2) (a_0 = 1) hold.
inline Example3Coeffs solve_example3(cplx a20, cplx a02) {
  return {0.5 + 4.0 * std::conj(a20), 0.5 + 4.0 * std::conj(a02)};
}

struct Example4Coeffs {
  cplx b1, b2, b3;
};

/// Numerator weights for [s^4 + b1 s^5 + b2 s^6 + b3 s^7] / (pi xi)^4 so that
/// D^k(1 - phi^ * dist_ft(L))(0) = 0 for k <= 3, L = 1 + a1 D + a2 D^2 + a3 D^3.
inline Example4Coeffs solve_example4(cplx a1, cplx a2, cplx a3) {
  const cplx c1 = std::conj(a1), c2 = std::conj(a2), c3 = std::conj(a3);
  const cplx b1 = 2.0 * I * c1;
  const cplx b2 = (2.0 + 12.0 * c2 + 6.0 * I * c1 * b1) / 3.0;
  const cplx b3 = (5.0 * b1 + 4.0 * I * (3.0 * b2 - 2.0) * c1 + 24.0 * b1 * c2 - 48.0 * I * c3) / 6.0;
  return {b1, b2, b3};
}

/// |sum_beta D^beta f(Ax) (At)^beta / beta! - sum_beta D^beta(f o A)(x) t^beta / beta!|
/// over [beta] <= N. The left side uses f's own partials; the right side
/// differentiates the composition through the multilinear chain rule.
inline double taylor_identity_residual(const Signal& f, const Mat& a, const Vec& x, const Vec& t, int n) {
  const int d = f.dim();
  if (a.rows() != d || a.cols() != d || x.size() != d || t.size() != d) throw InvalidSpec("dimension mismatch");
  if (f.max_order() < n) throw CapabilityError("signal lacks derivatives of order " + std::to_string(n));
  const Vec ax = a * x;
  const Vec at = a * t;
  cplx lhs{}, rhs{};
  for (const auto& beta : MultiIndex::up_to(d, n)) {
    lhs += f.derivative(beta, ax) * beta.monomial<double>(at) / beta.factorial();
    rhs += f.chain_rule_derivative(a, beta, x) * beta.monomial<double>(t) / beta.factorial();
  }
  return std::abs(lhs - rhs);
}

}  // namespace mexpand

#endif  // MEXPAND_DIFFOPS_HPP
