#ifndef MEXPAND_SIGNALS_HPP
#define MEXPAND_SIGNALS_HPP

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>

#include "mexpand/bspline.hpp"
#include "mexpand/core.hpp"

namespace mexpand {

namespace detail {

class SignalModel {
 public:
  virtual ~SignalModel() = default;
  virtual int dim() const = 0;
  virtual cplx derivative(const MultiIndex& beta, const Vec& x) const = 0;
  virtual bool has_ft() const { return false; }
  virtual cplx ft(const Vec&) const { throw CapabilityError("signal has no closed-form Fourier transform"); }
  /// Closed-form model of x -> f(Ax), when the family is closed under
  /// linear changes of variable.
  virtual std::shared_ptr<const SignalModel> compose_closed(const Mat&) const { return nullptr; }
};

using ModelPtr = std::shared_ptr<const SignalModel>;

// --- P(x) exp(-a x^2 + b x), one axis --------------------------------------

class ExpPolyFactor {
 public:
  ExpPolyFactor(std::vector<cplx> poly, double a, cplx b, int max_order) : a_(a), b_(b) {
    derivs_.push_back(std::move(poly));
    for (int n = 0; n < max_order; ++n) {
      const auto& p = derivs_.back();
      std::vector<cplx> q(p.size() + 2, cplx{});
      for (size_t k = 1; k < p.size(); ++k) q[k - 1] += static_cast<double>(k) * p[k];
      for (size_t k = 0; k < p.size(); ++k) {
        q[k] += b_ * p[k];
        q[k + 1] += -2.0 * a_ * p[k];
      }
      while (q.size() > 1 && q.back() == cplx{}) q.pop_back();
      derivs_.push_back(std::move(q));
    }
  }
  int max_order() const { return static_cast<int>(derivs_.size()) - 1; }
  cplx eval(int n, double x) const {
    const auto& p = derivs_.at(n);
    cplx s{};
    for (size_t k = p.size(); k-- > 0;) s = s * x + p[k];
    return s * std::exp(cplx(-a_ * x * x) + b_ * x);
  }
  double a() const { return a_; }
  cplx b() const { return b_; }

 private:
  double a_;
  cplx b_;
  std::vector<std::vector<cplx>> derivs_;
};

/// Products of per-axis P_i(x_i) exp(-a_i x_i^2 + b_i x_i): Gaussians,
/// modulated Gaussians, polynomial-times-Gaussian, exponentials.
class SeparableModel : public SignalModel {
 public:
  using AxisFt = std::function<cplx(int axis, double xi)>;
  SeparableModel(std::vector<ExpPolyFactor> factors, cplx amplitude, AxisFt ft)
      : factors_(std::move(factors)), amp_(amplitude), ft_(std::move(ft)) {}
  int dim() const override { return static_cast<int>(factors_.size()); }
  cplx derivative(const MultiIndex& beta, const Vec& x) const override {
    cplx r = amp_;
    for (int i = 0; i < dim(); ++i) {
      if (beta[i] > factors_[i].max_order()) throw CapabilityError("derivative order exceeds precomputed table");
      r *= factors_[i].eval(beta[i], x[i]);
    }
    return r;
  }
  bool has_ft() const override { return static_cast<bool>(ft_); }
  cplx ft(const Vec& xi) const override {
    if (!ft_) return SignalModel::ft(xi);
    cplx r = amp_;
    for (int i = 0; i < dim(); ++i) r *= ft_(i, xi[i]);
    return r;
  }
  std::shared_ptr<const SignalModel> compose_closed(const Mat& a) const override {
    // Closed only for pure exponentials exp(b . x).
    for (const auto& f : factors_)
      if (f.a() != 0.0 || f.max_order() < 0) return nullptr;
    for (const auto& f : factors_)
      if (std::abs(f.eval(0, 0.0) - 1.0) > 0.0) return nullptr;
    CVec b(dim());
    for (int i = 0; i < dim(); ++i) b[i] = factors_[i].b();
    const CVec nb = a.transpose().cast<cplx>() * b;
    std::vector<ExpPolyFactor> f;
    for (int i = 0; i < dim(); ++i) f.emplace_back(std::vector<cplx>{1.0}, 0.0, nb[i], factors_[i].max_order());
    return std::make_shared<SeparableModel>(std::move(f), amp_, nullptr);
  }

 private:
  std::vector<ExpPolyFactor> factors_;
  cplx amp_;
  AxisFt ft_;
};

/// Products of c * sinc(s x_i)^m: exactly band-limited, spectrum prod B_m(xi_i/s).
class SincPowerModel : public SignalModel {
 public:
  SincPowerModel(int d, int m, double scale, double amplitude) : d_(d), m_(m), s_(scale), amp_(amplitude) {}
  int dim() const override { return d_; }
  cplx derivative(const MultiIndex& beta, const Vec& x) const override {
    double r = amp_;
    for (int i = 0; i < d_; ++i) r *= std::pow(s_, beta[i]) * sinc_power_derivative(m_, beta[i], s_ * x[i]);
    return r;
  }
  bool has_ft() const override { return true; }
  cplx ft(const Vec& xi) const override {
    double r = amp_ / std::pow(s_, d_);
    for (int i = 0; i < d_; ++i) r *= bspline(m_, xi[i] / s_);
    return r;
  }

 private:
  int d_, m_;
  double s_, amp_;
};

/// Multivariate polynomial sum_alpha c_alpha x^alpha.
class PolynomialModel : public SignalModel {
 public:
  using Terms = std::map<std::vector<int>, cplx>;
  PolynomialModel(int d, Terms terms) : d_(d), terms_(std::move(terms)) {}
  int dim() const override { return d_; }
  cplx derivative(const MultiIndex& beta, const Vec& x) const override {
    cplx s{};
    for (const auto& [alpha, c] : terms_) {
      cplx t = c;
      for (int i = 0; i < d_ && t != cplx{}; ++i) {
        if (alpha[i] < beta[i]) {
          t = 0.0;
          break;
        }
        double falling = 1.0;
        for (int k = 0; k < beta[i]; ++k) falling *= (alpha[i] - k);
        t *= falling * ipow(x[i], alpha[i] - beta[i]);
      }
      s += t;
    }
    return s;
  }
  std::shared_ptr<const SignalModel> compose_closed(const Mat& a) const override {
    // Expand prod_i (sum_k A_ik x_k)^{alpha_i}.
    Terms out;
    for (const auto& [alpha, c] : terms_) {
      Terms acc{{std::vector<int>(d_, 0), c}};
      for (int i = 0; i < d_; ++i)
        for (int p = 0; p < alpha[i]; ++p) {
          Terms next;
          for (const auto& [mono, v] : acc)
            for (int k = 0; k < d_; ++k) {
              if (a(i, k) == 0.0) continue;
              auto m = mono;
              ++m[k];
              next[m] += v * a(i, k);
            }
          acc = std::move(next);
        }
      for (const auto& [mono, v] : acc) out[mono] += v;
    }
    return std::make_shared<PolynomialModel>(d_, std::move(out));
  }

 private:
  int d_;
  Terms terms_;
};

class ZeroModel : public SignalModel {
 public:
  explicit ZeroModel(int d) : d_(d) {}
  int dim() const override { return d_; }
  cplx derivative(const MultiIndex&, const Vec&) const override { return 0.0; }
  bool has_ft() const override { return true; }
  cplx ft(const Vec&) const override { return 0.0; }
  std::shared_ptr<const SignalModel> compose_closed(const Mat&) const override {
    return std::make_shared<ZeroModel>(d_);
  }

 private:
  int d_;
};

class SumModel : public SignalModel {
 public:
  using Parts = std::vector<std::pair<cplx, ModelPtr>>;
  explicit SumModel(Parts parts) : parts_(std::move(parts)) {}
  int dim() const override { return parts_.front().second->dim(); }
  cplx derivative(const MultiIndex& beta, const Vec& x) const override {
    cplx s{};
    for (const auto& [c, p] : parts_) s += c * p->derivative(beta, x);
    return s;
  }
  bool has_ft() const override {
    return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.second->has_ft(); });
  }
  cplx ft(const Vec& xi) const override {
    cplx s{};
    for (const auto& [c, p] : parts_) s += c * p->ft(xi);
    return s;
  }
  std::shared_ptr<const SignalModel> compose_closed(const Mat& a) const override {
    Parts out;
    for (const auto& [c, p] : parts_) {
      auto q = p->compose_closed(a);
      if (!q) return nullptr;
      out.emplace_back(c, std::move(q));
    }
    return std::make_shared<SumModel>(std::move(out));
  }

 private:
  Parts parts_;
};

/// D^beta (f o A)(y) by the multilinear chain rule: expand beta into a
/// sequence of axes b_1..b_r and sum over all axis assignments e of
/// prod_s A(e_s, b_s) * D^{T(e)} f(Ay), grouping equal T(e).
template <class Partial>
cplx chain_rule(Partial&& partial, const Mat& a, const MultiIndex& beta, const Vec& y) {
  const int d = beta.dim();
  std::vector<int> seq;
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < beta[i]; ++k) seq.push_back(i);
  const Vec ay = a * y;
  const int r = static_cast<int>(seq.size());
  if (r == 0) return partial(MultiIndex::zero(d), ay);
  std::map<std::vector<int>, double> grouped;
  std::vector<int> e(r, 0);
  while (true) {
    double c = 1.0;
    std::vector<int> alpha(d, 0);
    for (int s = 0; s < r; ++s) {
      c *= a(e[s], seq[s]);
      ++alpha[e[s]];
    }
    if (c != 0.0) grouped[alpha] += c;
    int s = r - 1;
    while (s >= 0 && ++e[s] == d) e[s--] = 0;
    if (s < 0) break;
  }
  cplx out{};
  for (const auto& [alpha, c] : grouped)
    if (c != 0.0) out += c * partial(MultiIndex(alpha), ay);
  return out;
}

/// x -> f(Ax) for families without a closed form under composition.
class ComposedModel : public SignalModel {
 public:
  ComposedModel(ModelPtr inner, Mat a) : inner_(std::move(inner)), a_(std::move(a)) {
    inv_t_ = a_.inverse().transpose();
    det_ = std::fabs(a_.determinant());
  }
  int dim() const override { return inner_->dim(); }
  cplx derivative(const MultiIndex& beta, const Vec& x) const override {
    return chain_rule([&](const MultiIndex& al, const Vec& y) { return inner_->derivative(al, y); }, a_, beta, x);
  }
  bool has_ft() const override { return inner_->has_ft() && det_ > 0.0; }
  cplx ft(const Vec& xi) const override { return inner_->ft(inv_t_ * xi) / det_; }
  std::shared_ptr<const SignalModel> compose_closed(const Mat& b) const override {
    return std::make_shared<ComposedModel>(inner_, Mat(a_ * b));
  }

 private:
  ModelPtr inner_;
  Mat a_, inv_t_;
  double det_;
};

}  // namespace detail

/// A test signal with exact values, exact partial derivatives up to a
/// declared order, and (for most families) a closed-form Fourier transform
/// under the convention f^(xi) = int f(x) exp(-2 pi i (x, xi)) dx.
class Signal {
 public:
  struct Param {
    std::string name;
    double value;
  };

  int dim() const { return model_->dim(); }
  const std::string& family() const { return family_; }
  const std::vector<Param>& params() const { return params_; }
  int max_order() const { return max_order_; }
  /// rho with |f^(xi)| <= C (1 + |xi|)^{-rho}; +inf for band-limited signals.
  double decay_exponent() const { return decay_; }
  const std::optional<Box>& spectrum_support() const { return spectrum_; }
  bool has_ft() const { return model_->has_ft(); }

  cplx value(const Vec& x) const { return model_->derivative(MultiIndex::zero(dim()), x); }

  cplx derivative(const MultiIndex& beta, const Vec& x) const {
    if (beta.dim() != dim()) throw InvalidSpec("multi-index dimension mismatch");
    if (beta.total() > max_order_)
      throw CapabilityError("signal '" + family_ + "' provides derivatives up to order " + std::to_string(max_order_) +
                            ", requested " + std::to_string(beta.total()));
    return model_->derivative(beta, x);
  }

  cplx ft(const Vec& xi) const {
    if (!model_->has_ft()) throw CapabilityError("signal '" + family_ + "' has no closed-form Fourier transform");
    return model_->ft(xi);
  }

  /// x -> f(Ax). Closed form for polynomials, exponentials and sums of them;
  /// the exact chain rule over f's partials otherwise.
  Signal composed(const Mat& a) const {
    if (a.rows() != dim() || a.cols() != dim()) throw InvalidSpec("composition matrix dimension mismatch");
    Signal s = *this;
    s.family_ = family_ + "∘A";
    s.spectrum_.reset();
    if (auto closed = model_->compose_closed(a)) {
      s.model_ = std::move(closed);
    } else {
      s.model_ = std::make_shared<detail::ComposedModel>(model_, a);
    }
    return s;
  }

  /// D^beta (f o A)(y) evaluated by the generic multilinear chain rule,
  /// independent of any closed-form composition.
  cplx chain_rule_derivative(const Mat& a, const MultiIndex& beta, const Vec& y) const {
    return detail::chain_rule([&](const MultiIndex& al, const Vec& x) { return derivative(al, x); }, a, beta, y);
  }

  Signal scaled(cplx c) const { return linear_combination({{c, *this}}); }

  // --- catalog -------------------------------------------------------------

  /// exp(-pi |x|^2 / sigma^2); self-dual at sigma = 1.
  static Signal gaussian(int d, double sigma = 1.0, int max_order = 6, double decay = 6.0) {
    return modulated_gaussian(d, sigma, Vec::Zero(d), max_order, decay, "gaussian");
  }

  /// exp(-pi |x|^2 / sigma^2) exp(2 pi i (omega, x)).
  static Signal modulated_gaussian(int d, double sigma, const Vec& omega, int max_order = 6, double decay = 6.0,
                                   std::string family = "modulated_gaussian") {
    check_dim(d);
    if (!(sigma > 0.0)) throw InvalidSpec("sigma must be positive");
    if (omega.size() != d) throw InvalidSpec("omega dimension mismatch");
    std::vector<detail::ExpPolyFactor> f;
    for (int i = 0; i < d; ++i) f.emplace_back(std::vector<cplx>{1.0}, pi / (sigma * sigma), two_pi * I * omega[i], max_order);
    auto ft = [sigma, omega](int axis, double xi) {
      const double u = xi - omega[axis];
      return cplx(sigma * std::exp(-pi * sigma * sigma * u * u));
    };
    Signal s(std::make_shared<detail::SeparableModel>(std::move(f), 1.0, ft), std::move(family), max_order, decay);
    s.params_ = {{"sigma", sigma}};
    for (int i = 0; i < d; ++i)
      if (omega[i] != 0.0 || s.family_ == "modulated_gaussian") s.params_.push_back({"omega" + std::to_string(i), omega[i]});
    return s;
  }

  /// prod_i x_i^{n_i} exp(-pi x_i^2 / sigma^2).
  static Signal poly_times_gaussian(int d, const std::vector<int>& powers, double sigma = 1.0, int max_order = 6,
                                    double decay = 6.0) {
    check_dim(d);
    if (static_cast<int>(powers.size()) != d) throw InvalidSpec("powers dimension mismatch");
    std::vector<detail::ExpPolyFactor> f;
    std::vector<detail::ExpPolyFactor> spectral;
    for (int i = 0; i < d; ++i) {
      std::vector<cplx> p(powers[i] + 1, 0.0);
      p.back() = 1.0;
      f.emplace_back(std::move(p), pi / (sigma * sigma), 0.0, max_order);
      // FT[x^n g](xi) = (i / 2 pi)^n D^n g^(xi), g^(xi) = sigma exp(-pi sigma^2 xi^2)
      spectral.emplace_back(std::vector<cplx>{sigma}, pi * sigma * sigma, 0.0, powers[i]);
    }
    auto ft = [spectral, powers](int axis, double xi) {
      return ipow(I / two_pi, powers[axis]) * spectral[axis].eval(powers[axis], xi);
    };
    Signal s(std::make_shared<detail::SeparableModel>(std::move(f), 1.0, ft), "poly_times_gaussian", max_order, decay);
    s.params_ = {{"sigma", sigma}};
    for (int i = 0; i < d; ++i) s.params_.push_back({"power" + std::to_string(i), static_cast<double>(powers[i])});
    return s;
  }

  /// prod_i a sinc^2(a x_i), spectrum prod_i (1 - |xi_i|/a)_+.
  static Signal bandlimited_triangle_spectrum(int d, double a, int max_order = 6) {
    check_dim(d);
    if (!(a > 0.0)) throw InvalidSpec("band limit must be positive");
    Signal s(std::make_shared<detail::SincPowerModel>(d, 2, a, std::pow(a, d)), "bandlimited_triangle_spectrum",
             max_order, std::numeric_limits<double>::infinity());
    s.spectrum_ = Box::cube(d, a);
    s.params_ = {{"a", a}};
    return s;
  }

  /// prod_i (a/2) sinc^4(a x_i / 2), spectrum prod_i B_4(2 xi_i / a)
  /// (a C^2 bump supported on [-a, a]).
  static Signal bandlimited_bump(int d, double a, int max_order = 6) {
    check_dim(d);
    if (!(a > 0.0)) throw InvalidSpec("band limit must be positive");
    Signal s(std::make_shared<detail::SincPowerModel>(d, 4, 0.5 * a, std::pow(0.5 * a, d)), "bandlimited_bump",
             max_order, std::numeric_limits<double>::infinity());
    s.spectrum_ = Box::cube(d, a);
    s.params_ = {{"a", a}};
    return s;
  }

  /// exp((c, x)) for real or complex c. No Fourier transform.
  static Signal exponential(const CVec& c, int max_order = 16) {
    const int d = static_cast<int>(c.size());
    check_dim(d);
    std::vector<detail::ExpPolyFactor> f;
    for (int i = 0; i < d; ++i) f.emplace_back(std::vector<cplx>{1.0}, 0.0, c[i], max_order);
    Signal s(std::make_shared<detail::SeparableModel>(std::move(f), 1.0, nullptr), "exponential", max_order, 0.0);
    for (int i = 0; i < d; ++i) s.params_.push_back({"c" + std::to_string(i), c[i].real()});
    return s;
  }

  /// sum_alpha c_alpha x^alpha. No Fourier transform.
  static Signal polynomial(int d, const std::map<std::vector<int>, cplx>& terms, int max_order = 64) {
    check_dim(d);
    for (const auto& [alpha, c] : terms)
      if (static_cast<int>(alpha.size()) != d) throw InvalidSpec("polynomial exponent dimension mismatch");
    Signal s(std::make_shared<detail::PolynomialModel>(d, terms), "polynomial", max_order, 0.0);
    return s;
  }

  static Signal constant(int d, cplx c) { return polynomial(d, {{std::vector<int>(d, 0), c}}); }
  static Signal zero(int d) {
    check_dim(d);
    return Signal(std::make_shared<detail::ZeroModel>(d), "zero", std::numeric_limits<int>::max(),
                  std::numeric_limits<double>::infinity());
  }

  static Signal linear_combination(const std::vector<std::pair<cplx, Signal>>& parts) {
    if (parts.empty()) throw InvalidSpec("empty linear combination");
    detail::SumModel::Parts p;
    int order = std::numeric_limits<int>::max();
    double decay = std::numeric_limits<double>::infinity();
    const int d = parts.front().second.dim();
    for (const auto& [c, s] : parts) {
      if (s.dim() != d) throw InvalidSpec("linear combination of signals with different dimensions");
      p.emplace_back(c, s.model_);
      order = std::min(order, s.max_order_);
      decay = std::min(decay, s.decay_);
    }
    Signal out(std::make_shared<detail::SumModel>(std::move(p)), "sum", order, decay);
    return out;
  }

 private:
  Signal(detail::ModelPtr model, std::string family, int max_order, double decay)
      : model_(std::move(model)), family_(std::move(family)), max_order_(max_order), decay_(decay) {}

  static void check_dim(int d) {
    if (d < 1) throw InvalidSpec("signal dimension must be positive");
  }

  detail::ModelPtr model_;
  std::string family_;
  std::vector<Param> params_;
  int max_order_ = 0;
  double decay_ = 0.0;
  std::optional<Box> spectrum_;
};

}  // namespace mexpand

#endif  // MEXPAND_SIGNALS_HPP
