#ifndef MEXPAND_KERNELS_HPP
#define MEXPAND_KERNELS_HPP

#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include "mexpand/bspline.hpp"
#include "mexpand/diffops.hpp"
#include "mexpand/quadrature.hpp"

namespace mexpand {

/// One tensor term w * prod_i B_{m_i}(x_i - s_i). Shifts are stored doubled
/// so half-integers stay exact.
struct SplineTerm {
  std::vector<int> twice_shift;
  cplx weight;
};

/// One numerator monomial c * prod_i sin^{n_i}(pi xi_i).
struct SinMonomial {
  std::vector<int> powers;
  cplx coeff;
};

/// phi^ = theta on the box S, 0 outside. Constant theta has closed forms.
struct BandLimitedForm {
  enum class Theta { constant, reciprocal, custom };
  Theta kind = Theta::constant;
  Box support;
  cplx value = 1.0;
  std::optional<DiffOperator> op;
  std::function<cplx(const Vec&)> custom;
};

class Kernel {
 public:
  enum class Form { SplineCombo, BandLimited };

  int dim() const { return d_; }
  Form form() const { return form_; }
  const std::string& name() const { return name_; }

  // Spline-combination accessors
  const std::vector<int>& orders() const { return orders_; }
  const std::vector<SplineTerm>& terms() const { return terms_; }
  const std::vector<SinMonomial>& numerator() const { return numerator_; }
  /// Per-axis radius r such that phi vanishes when some |x_i| >= r_i.
  const std::vector<double>& support_radius() const { return radius_; }

  // Band-limited accessors
  const BandLimitedForm& band() const { return band_; }
  /// Spatial decay exponent of band-limited kernels (1 for a discontinuous theta).
  double decay_exponent() const { return form_ == Form::BandLimited ? 1.0 : std::numeric_limits<double>::infinity(); }

  double quadrature_tolerance() const { return tol_; }

  cplx theta(const Vec& xi) const {
    switch (band_.kind) {
      case BandLimitedForm::Theta::constant:
        return band_.value;
      case BandLimitedForm::Theta::reciprocal:
        return band_.value / band_.op->symbol(xi);
      case BandLimitedForm::Theta::custom:
        return band_.value * band_.custom(xi);
    }
    return 0.0;
  }

  cplx phi_hat(const Vec& xi) const {
    check(xi);
    if (form_ == Form::BandLimited) return band_.support.contains(xi) ? theta(xi) : cplx{};
    cplx s{};
    for (const auto& t : numerator_) {
      cplx p = t.coeff;
      for (int i = 0; i < d_; ++i) p *= ipow(mexpand::sinc(xi[i]), orders_[i]) * ipow(sin_pi(xi[i]), t.powers[i] - orders_[i]);
      s += p;
    }
    return s;
  }

  /// Whether phi^ extends to an entire function (used for contour derivatives).
  bool entire_transform() const { return form_ == Form::SplineCombo; }

  /// Analytic continuation of phi^ to complex frequencies (spline kernels).
  cplx phi_hat_complex(const CVec& z) const {
    if (!entire_transform()) throw CapabilityError("kernel transform has no entire extension");
    if (z.size() != d_) throw InvalidSpec("kernel argument has wrong dimension");
    auto csinc = [](cplx t) {
      const cplx u = pi * t;
      if (std::abs(u) < 1e-3) {
        const cplx u2 = u * u;
        return 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)));
      }
      return std::sin(u) / u;
    };
    cplx s{};
    for (const auto& t : numerator_) {
      cplx p = t.coeff;
      for (int i = 0; i < d_; ++i) p *= ipow(csinc(z[i]), orders_[i]) * ipow(std::sin(pi * z[i]), t.powers[i] - orders_[i]);
      s += p;
    }
    return s;
  }

  cplx phi(const Vec& x) const { return derivative(MultiIndex::zero(d_), x); }

  /// D^beta phi(x). Spline kernels differentiate the B-splines exactly;
  /// band-limited kernels integrate (2 pi i xi)^beta theta e^{2 pi i (x, xi)}.
  cplx derivative(const MultiIndex& beta, const Vec& x) const {
    check(x);
    if (form_ == Form::SplineCombo) {
      for (int i = 0; i < d_; ++i)
        if (std::fabs(x[i]) >= radius_[i]) return 0.0;
      cplx s{};
      for (const auto& t : terms_) {
        cplx p = t.weight;
        for (int i = 0; i < d_ && p != cplx{}; ++i)
          p *= bspline_derivative(orders_[i], beta[i], x[i] - 0.5 * t.twice_shift[i]);
        s += p;
      }
      return s;
    }
    if (band_.kind == BandLimitedForm::Theta::constant && beta.is_zero()) {
      cplx p = band_.value;
      for (int i = 0; i < d_; ++i) {
        const double lo = band_.support.lo[i], hi = band_.support.hi[i];
        const double c = 0.5 * (lo + hi), w = hi - lo;
        p *= expi_pi(2.0 * c * x[i]) * w * mexpand::sinc(w * x[i]);
      }
      return p;
    }
    return quadrature_derivatives({beta}, x).front();
  }

  /// Several partials at once, sharing the quadrature nodes.
  std::vector<cplx> derivatives(const std::vector<MultiIndex>& betas, const Vec& x) const {
    check(x);
    if (form_ == Form::SplineCombo || band_.kind == BandLimitedForm::Theta::constant) {
      std::vector<cplx> out;
      for (const auto& b : betas) out.push_back(derivative(b, x));
      return out;
    }
    return quadrature_derivatives(betas, x);
  }

  /// c * phi.
  Kernel scaled(cplx c) const {
    Kernel k = *this;
    for (auto& t : k.terms_) t.weight *= c;
    for (auto& t : k.numerator_) t.coeff *= c;
    k.band_.value *= c;
    return k;
  }

  // --- construction --------------------------------------------------------

  /// sum_t c_t prod_i sin^{n_{t,i}}(pi xi_i) / prod_i (pi xi_i)^{m_i}, rewritten as
  /// B-spline shift combinations by expanding each sin^{n-m} into exponentials.
  static Kernel spline_decompose(const std::vector<SinMonomial>& numerator, const std::vector<int>& orders,
                                 std::string name = "spline_combo") {
    const int d = static_cast<int>(orders.size());
    if (d < 1) throw InvalidSpec("kernel dimension must be positive");
    if (numerator.empty()) throw InvalidSpec("empty numerator");
    for (int m : orders)
      if (m < 1 || m > 30) throw InvalidSpec("B-spline order must be in [1, 30]");
    std::map<std::vector<int>, cplx> acc;
    for (const auto& mono : numerator) {
      if (static_cast<int>(mono.powers.size()) != d) throw InvalidSpec("numerator power vector has wrong dimension");
      for (int i = 0; i < d; ++i)
        if (mono.powers[i] < orders[i])
          throw InvalidSpec("sine power " + std::to_string(mono.powers[i]) + " below denominator power " +
                            std::to_string(orders[i]) + ": not compactly supported");
      // sin^n(pi xi) = (2i)^{-n} sum_r C(n,r) (-1)^{n-r} e^{i pi (2r-n) xi}; the
      // factor e^{-2 pi i s xi} is the transform of a shift by s = (n - 2r)/2.
      std::vector<std::vector<std::pair<int, cplx>>> axis(d);
      for (int i = 0; i < d; ++i) {
        const int n = mono.powers[i] - orders[i];
        const cplx scale = 1.0 / ipow(2.0 * I, n);
        for (int r = 0; r <= n; ++r)
          axis[i].emplace_back(n - 2 * r, scale * binomial(n, r) * (((n - r) % 2) ? -1.0 : 1.0));
      }
      std::vector<size_t> idx(d, 0);
      while (true) {
        std::vector<int> shift(d);
        cplx w = mono.coeff;
        for (int i = 0; i < d; ++i) {
          shift[i] = axis[i][idx[i]].first;
          w *= axis[i][idx[i]].second;
        }
        acc[shift] += w;
        int i = d - 1;
        while (i >= 0 && ++idx[i] == axis[i].size()) idx[i--] = 0;
        if (i < 0) break;
      }
    }
    Kernel k;
    k.d_ = d;
    k.form_ = Form::SplineCombo;
    k.name_ = std::move(name);
    k.orders_ = orders;
    k.numerator_ = numerator;
    k.radius_.assign(d, 0.0);
    for (const auto& [shift, w] : acc) {
      // Imaginary parts of real-symmetric numerators cancel to roundoff.
      const cplx wc(std::fabs(w.real()) < 1e-15 ? 0.0 : w.real(), std::fabs(w.imag()) < 1e-15 ? 0.0 : w.imag());
      if (wc == cplx{}) continue;
      k.terms_.push_back({shift, wc});
    }
    if (k.terms_.empty()) throw InvalidSpec("numerator cancels to zero");
    for (int i = 0; i < d; ++i) {
      int smax = 0;
      for (const auto& t : k.terms_) smax = std::max(smax, std::abs(t.twice_shift[i]));
      k.radius_[i] = 0.5 * orders[i] + 0.5 * smax;
    }
    return k;
  }

  /// One-dimensional form: numerator sum_k c_k sin^k(pi xi), denominator (pi xi)^m.
  static Kernel spline_decompose(const std::vector<std::pair<int, cplx>>& numerator, int denom_power,
                                 std::string name = "spline_combo") {
    std::vector<SinMonomial> mono;
    for (const auto& [p, c] : numerator) mono.push_back({{p}, c});
    return spline_decompose(mono, {denom_power}, std::move(name));
  }

  /// Band-limited kernel with phi^ = theta on S.
  static Kernel make_class_b(std::function<cplx(const Vec&)> theta, const Box& s, std::string name = "class_b") {
    s.validate();
    BandLimitedForm b;
    b.kind = BandLimitedForm::Theta::custom;
    b.support = s;
    b.custom = std::move(theta);
    return band_limited(std::move(b), std::move(name));
  }

  static Kernel make_class_b_constant(cplx value, const Box& s, std::string name = "class_b") {
    s.validate();
    BandLimitedForm b;
    b.kind = BandLimitedForm::Theta::constant;
    b.support = s;
    b.value = value;
    return band_limited(std::move(b), std::move(name));
  }

  /// phi^ = 1 / conj(dist_ft(L)) on S, i.e. the reciprocal of L's symbol, so
  /// conj(phi^) * dist_ft(L) = 1 on S.
  static Kernel make_reciprocal_kernel(const DiffOperator& l, const Box& s) {
    s.validate();
    if (s.dim() != l.dim()) throw InvalidSpec("operator and support dimensions differ");
    check_no_zero(l, s);
    BandLimitedForm b;
    b.kind = l.order() == 0 ? BandLimitedForm::Theta::constant : BandLimitedForm::Theta::reciprocal;
    b.support = s;
    if (l.order() == 0)
      b.value = 1.0 / l.symbol(Vec::Zero(l.dim()));
    else
      b.op = l;
    return band_limited(std::move(b), "reciprocal");
  }

  // --- built-ins -----------------------------------------------------------

  /// prod_i (1 - |x_i|)_+, transform prod_i sinc^2.
  static Kernel triangle(int d) { return bspline_product(d, 2, "triangle"); }

  static Kernel bspline_product(int d, int m, std::string name = "bspline") {
    return spline_decompose({SinMonomial{std::vector<int>(d, m), 1.0}}, std::vector<int>(d, m), std::move(name));
  }

  /// prod_i sinc(x_i), transform the indicator of [-1/2, 1/2]^d.
  static Kernel sinc(int d) { return make_class_b_constant(1.0, Box::cube(d, 0.5), "sinc"); }

  static Kernel example3(cplx b1, cplx b2) {
    return spline_decompose({{{3, 3}, 1.0}, {{5, 3}, b1}, {{3, 5}, b2}}, {3, 3}, "example3");
  }

  static Kernel example4(cplx b1, cplx b2, cplx b3) {
    return spline_decompose({{4, 1.0}, {5, b1}, {6, b2}, {7, b3}}, 4, "example4");
  }

 private:
  Kernel() = default;

  static Kernel band_limited(BandLimitedForm b, std::string name) {
    Kernel k;
    k.d_ = b.support.dim();
    k.form_ = Form::BandLimited;
    k.name_ = std::move(name);
    k.band_ = std::move(b);
    return k;
  }

  void check(const Vec& x) const {
    if (x.size() != d_) throw InvalidSpec("kernel argument has wrong dimension");
    if (!x.allFinite()) throw InvalidSpec("kernel argument must be finite");
  }

  static void check_no_zero(const DiffOperator& l, const Box& s) {
    const int d = s.dim();
    const int per_axis = d == 1 ? 4097 : (d == 2 ? 257 : 33);
    auto mag_at = [&](const Vec& xi) { return std::abs(l.symbol(xi)); };
    auto node = [&](const std::vector<int>& idx) {
      Vec xi(d);
      for (int i = 0; i < d; ++i) xi[i] = s.lo[i] + (s.hi[i] - s.lo[i]) * idx[i] / (per_axis - 1);
      return xi;
    };
    std::vector<std::pair<double, Vec>> candidates;
    double max_mag = 0.0;
    std::vector<int> idx(d, 0);
    while (true) {
      const Vec xi = node(idx);
      const double mag = mag_at(xi);
      max_mag = std::max(max_mag, mag);
      bool local_min = true;
      for (int i = 0; i < d && local_min; ++i)
        for (int step : {-1, 1}) {
          auto nb = idx;
          nb[i] += step;
          if (nb[i] < 0 || nb[i] >= per_axis) continue;
          if (mag_at(node(nb)) < mag) {
            local_min = false;
            break;
          }
        }
      if (local_min) candidates.emplace_back(mag, xi);
      int i = d - 1;
      while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
      if (i < 0) break;
    }
    const double floor = 1e-9 * std::max(max_mag, 1.0);
    // A zero between grid nodes shows up as a shallow local minimum; polish
    // each one by cyclic golden-section search inside its grid cell.
    for (auto& [mag, xi] : candidates) {
      if (mag > 0.05 * max_mag && mag > floor) continue;
      for (int sweep = 0; sweep < 4 * d; ++sweep) {
        const int i = sweep % d;
        const double h = (s.hi[i] - s.lo[i]) / (per_axis - 1);
        double a = std::max(s.lo[i], xi[i] - h), b = std::min(s.hi[i], xi[i] + h);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        auto along = [&](double t) {
          Vec y = xi;
          y[i] = t;
          return mag_at(y);
        };
        double c = b - g * (b - a), e = a + g * (b - a), fc = along(c), fe = along(e);
        for (int it = 0; it < 80; ++it) {
          if (fc < fe) {
            b = e, e = c, fe = fc, c = b - g * (b - a), fc = along(c);
          } else {
            a = c, c = e, fc = fe, e = a + g * (b - a), fe = along(e);
          }
        }
        const double t = fc < fe ? c : e;
        if (along(t) < mag) {
          xi[i] = t;
          mag = along(t);
        }
      }
      if (mag <= 1e-8 * std::max(max_mag, 1.0))
        throw ZeroCrossing("operator symbol vanishes on the kernel's spectral box", xi);
    }
  }

  std::vector<cplx> quadrature_once(const std::vector<MultiIndex>& betas, const Vec& x, int scale) const {
    const Box& s = band_.support;
    const double diam = s.diameter();
    std::vector<int> panels(d_);
    for (int i = 0; i < d_; ++i)
      panels[i] = scale * std::max(8, static_cast<int>(std::ceil(4.0 * std::fabs(x[i]) * diam)));
    const auto& r = quad::gauss_legendre(12);
    // Per-axis nodes, weights and phases; the tensor sum is formed on the fly.
    std::vector<std::vector<double>> nodes(d_), weights(d_);
    std::vector<std::vector<cplx>> phase(d_);
    for (int i = 0; i < d_; ++i) {
      const double h = (s.hi[i] - s.lo[i]) / panels[i];
      for (int p = 0; p < panels[i]; ++p) {
        const double mid = s.lo[i] + (p + 0.5) * h;
        for (int q = 0; q < r.size(); ++q) {
          const double xi = mid + 0.5 * h * r.nodes[q];
          nodes[i].push_back(xi);
          weights[i].push_back(0.5 * h * r.weights[q]);
          phase[i].push_back(expi_pi(2.0 * x[i] * xi));
        }
      }
    }
    std::vector<cplx> out(betas.size(), cplx{});
    std::vector<size_t> idx(d_, 0);
    Vec xi(d_);
    while (true) {
      double w = 1.0;
      cplx e = 1.0;
      for (int i = 0; i < d_; ++i) {
        xi[i] = nodes[i][idx[i]];
        w *= weights[i][idx[i]];
        e *= phase[i][idx[i]];
      }
      const cplx base = w * e * theta(xi);
      for (size_t b = 0; b < betas.size(); ++b) out[b] += base * betas[b].monomial<cplx>(two_pi * I * xi.cast<cplx>());
      int i = d_ - 1;
      while (i >= 0 && ++idx[i] == nodes[i].size()) idx[i--] = 0;
      if (i < 0) break;
    }
    return out;
  }

  /// Composite Gauss-Legendre, panels doubled until two successive results
  /// agree to the kernel tolerance.
  std::vector<cplx> quadrature_derivatives(const std::vector<MultiIndex>& betas, const Vec& x) const {
    auto prev = quadrature_once(betas, x, 1);
    double err = 0.0;
    for (int scale = 2; scale <= 64; scale *= 2) {
      auto cur = quadrature_once(betas, x, scale);
      err = 0.0;
      for (size_t b = 0; b < cur.size(); ++b) err = std::max(err, std::abs(cur[b] - prev[b]));
      if (err <= tol_) return cur;
      prev = std::move(cur);
    }
    throw AccuracyFailure("band-limited kernel quadrature did not converge", err);
  }

  int d_ = 0;
  Form form_ = Form::SplineCombo;
  std::string name_;
  std::vector<int> orders_;
  std::vector<SplineTerm> terms_;
  std::vector<SinMonomial> numerator_;
  std::vector<double> radius_;
  BandLimitedForm band_;
  double tol_ = 1e-9;
};

}  // namespace mexpand

#endif  // MEXPAND_KERNELS_HPP
