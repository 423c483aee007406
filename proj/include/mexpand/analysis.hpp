#ifndef MEXPAND_ANALYSIS_HPP
#define MEXPAND_ANALYSIS_HPP

#include <limits>
#include <optional>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mexpand/expand.hpp"
#include "mexpand/finite_difference.hpp"

namespace mexpand {

/// All nonzero lattice points with |l|_inf <= radius, lexicographic.
inline std::vector<Vec> lattice_points(int d, int radius) {
  std::vector<Vec> out;
  std::vector<int> k(d, -radius);
  while (true) {
    Vec v(d);
    bool zero = true;
    for (int i = 0; i < d; ++i) {
      v[i] = k[i];
      zero = zero && k[i] == 0;
    }
    if (!zero) out.push_back(std::move(v));
    int i = d - 1;
    while (i >= 0 && ++k[i] > radius) k[i--] = -radius;
    if (i < 0) break;
  }
  return out;
}

struct StrangFixOptions {
  double step = 1e-3;
  int refinements = 2;
  int lattice_radius = 3;
};

/// Largest n <= n_max with |D^beta phi^(l)| <= tol for every [beta] < n and
/// every nonzero lattice point l with |l|_inf <= radius.
inline int strang_fix_order(const Kernel& g, int n_max, double tol, const StrangFixOptions& opt = {}) {
  if (n_max < 0 || n_max > 8) throw InvalidSpec("Strang-Fix order bound must be in [0, 8]");
  const int d = g.dim();
  const auto lattice = lattice_points(d, opt.lattice_radius);
  auto f = [&](const Vec& xi) { return g.phi_hat(xi); };
  for (int n = 1; n <= n_max; ++n)
    for (const auto& beta : MultiIndex::of_total(d, n - 1))
      for (const auto& l : lattice)
        if (std::abs(fd::derivative(f, l, beta, opt.step, opt.refinements)) > tol) return n - 1;
  return n_max;
}

/// D^beta f(0) for f analytic on the polydisc of radius r, by the trapezoid
/// rule on the Cauchy integral over the torus |z_i| = r (n nodes per axis).
template <class F>
cplx contour_derivative(F&& f, int d, const MultiIndex& beta, double r, int n = 32) {
  std::vector<int> idx(d, 0);
  cplx sum{};
  CVec z(d);
  while (true) {
    cplx phase = 1.0;
    for (int i = 0; i < d; ++i) {
      const double t = 2.0 * idx[i] / n;
      z[i] = r * expi_pi(t);
      phase *= expi_pi(-t * beta[i]);
    }
    sum += phase * f(z);
    int i = d - 1;
    while (i >= 0 && ++idx[i] == n) idx[i--] = 0;
    if (i < 0) break;
  }
  return sum / std::pow(static_cast<double>(n), d) * beta.factorial() / std::pow(r, beta.total());
}

struct DefectOptions {
  double step = 1e-2;
  int refinements = 2;
  double contour_radius = 0.25;
};

/// max over [beta] < n of |D^beta(1 - phi^ * dist_ft(L))(0)|. Spline kernels
/// have entire transforms and use Cauchy integrals; the rest use central
/// differences with Richardson extrapolation.
inline double compatibility_defect(const Kernel& g, const DiffOperator& l, int n, const DefectOptions& opt = {}) {
  if (n < 0 || n > 8) throw InvalidSpec("defect order must be in [0, 8]");
  if (g.dim() != l.dim()) throw InvalidSpec("kernel and operator dimensions differ");
  const int d = g.dim();
  double worst = 0.0;
  for (const auto& beta : MultiIndex::up_to(d, n - 1)) {
    cplx v;
    if (beta.is_zero()) {
      v = 1.0 - g.phi_hat(Vec::Zero(d)) * l.dist_ft(Vec::Zero(d));
    } else if (g.entire_transform()) {
      v = contour_derivative([&](const CVec& z) { return 1.0 - g.phi_hat_complex(z) * l.dist_ft_complex(z); }, d, beta,
                             opt.contour_radius);
    } else {
      auto f = [&](const Vec& xi) { return 1.0 - g.phi_hat(xi) * l.dist_ft(xi); };
      v = fd::derivative(f, Vec::Zero(d), beta, opt.step, opt.refinements);
    }
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

/// About `target` deterministic points filling the open ball |xi| < delta.
inline std::vector<Vec> ball_samples(int d, double delta, int target = 1000) {
  const double frac = unit_ball_volume(d) / std::pow(2.0, d);
  const int per = std::max(2, static_cast<int>(std::ceil(std::pow(target / frac, 1.0 / d))));
  std::vector<Vec> out;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = delta * (-1.0 + (2.0 * idx[i] + 1.0) / per);
    if (v.norm() < delta) out.push_back(std::move(v));
    int i = d - 1;
    while (i >= 0 && ++idx[i] == per) idx[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

/// conj(phi^) dist_ft(L) = 1 on |xi| < delta and phi^ = 0 on |xi - l| < delta
/// for nonzero l with |l|_inf <= 3, both checked on ~10^3 points per ball.
inline bool strict_compatibility(const Kernel& g, const DiffOperator& l, double delta, double tol) {
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidSpec("delta must lie in (0, 1/2)");
  const int d = g.dim();
  const auto pts = ball_samples(d, delta);
  for (const auto& xi : pts)
    if (std::abs(std::conj(g.phi_hat(xi)) * l.dist_ft(xi) - 1.0) > tol) return false;
  for (const auto& c : lattice_points(d, 3))
    for (const auto& xi : pts)
      if (std::abs(g.phi_hat(Vec(c - xi))) > tol) return false;
  return true;
}

struct PeriodizedNorm {
  double value;
  bool diverges;
};

/// || sum_k |phi(. + k)| ||_{L_p(T^d)} with |k|_inf <= R; `diverges` is set
/// when doubling R moves the value by more than 5%.
inline PeriodizedNorm periodized_lp_norm(const Kernel& g, double p, long trunc_r) {
  if (!(p >= 1.0)) throw InvalidSpec("norm index must be >= 1");
  if (trunc_r < 0) throw InvalidSpec("truncation radius must be nonnegative");
  const int d = g.dim();
  const int per = d == 1 ? 256 : (d == 2 ? 48 : 12);
  std::vector<Vec> torus;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = (idx[i] + 0.5) / per;
    torus.push_back(std::move(v));
    int i = d - 1;
    while (i >= 0 && ++idx[i] == per) idx[i--] = 0;
    if (i < 0) break;
  }
  auto norm = [&](long r) {
    std::vector<cplx> sums(torus.size());
    detail::parallel_for(torus.size(), [&](size_t t) {
      double s = 0.0;
      std::vector<long> k(d, -r);
      Vec arg(d);
      while (true) {
        for (int i = 0; i < d; ++i) arg[i] = torus[t][i] + static_cast<double>(k[i]);
        s += std::abs(g.phi(arg));
        int i = d - 1;
        while (i >= 0 && ++k[i] > r) k[i--] = -r;
        if (i < 0) break;
      }
      sums[t] = s;
    });
    return grid_lp_norm(sums, p, 1.0 / static_cast<double>(torus.size()));
  };
  const double v = norm(trunc_r);
  const double v2 = norm(std::max<long>(1, 2 * trunc_r));
  return {v, std::fabs(v2 - v) > 0.05 * std::fabs(v)};
}

/// (sum |exact - approx|^p * cell_volume)^{1/p}, or the max for p = inf.
inline double lp_error(const std::vector<cplx>& exact, const std::vector<cplx>& approx, double p, double cell_volume) {
  if (exact.size() != approx.size()) throw InvalidSpec("grid length mismatch");
  std::vector<cplx> diff(exact.size());
  for (size_t i = 0; i < exact.size(); ++i) diff[i] = exact[i] - approx[i];
  return grid_lp_norm(diff, p, cell_volume);
}

struct OrderFit {
  double order;
  double residual;
};

/// Least-squares slope of -log_base(error) against j over the last `window`
/// levels, with the RMS residual of that line.
inline OrderFit fit_order(const std::vector<int>& levels, const std::vector<double>& errors, double base,
                          int window = 4) {
  if (levels.size() != errors.size()) throw InvalidSpec("levels and errors differ in length");
  if (!(base > 1.0)) throw InvalidSpec("base must exceed 1");
  const int n = std::min<int>(window, static_cast<int>(levels.size()));
  if (n < 3) throw InvalidSpec("need >= 3 levels to fit an order");
  const size_t first = levels.size() - static_cast<size_t>(n);
  std::vector<double> x, y;
  for (size_t i = first; i < levels.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) throw InvalidSpec("errors must be positive and finite");
    x.push_back(levels[i]);
    y.push_back(-std::log(errors[i]) / std::log(base));
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) mx += x[i] / n, my += y[i] / n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    rss += r * r;
  }
  return {slope, std::sqrt(rss / n)};
}

struct ConvergenceReport {
  std::vector<int> levels;
  std::vector<double> errors;
  double p = 2.0;
  double base = 2.0;
  int window = 4;
  double fitted_order = 0.0;
  double fit_residual = 0.0;
  double predicted_order = 0.0;
  std::string prediction_source;

  void fit() {
    const auto f = fit_order(levels, errors, base, window);
    fitted_order = f.order;
    fit_residual = f.residual;
  }
};

// --- tail integrals ----------------------------------------------------------

struct TailIntegralSpec {
  double gamma = 0.0;
  double q = 1.0;
  double delta = 0.25;
  int j = 0;
};

enum class TailDomain { Out, In };

/// I^Out = int_{|M^{*-j} xi| >= delta} |xi|^{q gamma} |f^(xi)|^q dxi (or the
/// complementary I^In), computed in the variable eta = M^{*-j} xi by radial
/// quadrature with relative tolerance 1e-6.
inline double tail_integral(const Signal& f, const Dilation& m, const TailIntegralSpec& s,
                            TailDomain domain = TailDomain::Out) {
  if (!(s.q >= 1.0)) throw InvalidSpec("q must be >= 1");
  if (!(s.delta > 0.0)) throw InvalidSpec("delta must be positive");
  const int d = f.dim();
  if (m.dim() != d) throw InvalidSpec("dimension mismatch");
  if (!f.has_ft()) throw CapabilityError("signal has no closed-form Fourier transform");
  if (domain == TailDomain::Out && !(s.q * (f.decay_exponent() - s.gamma) > d))
    throw PreconditionError("|xi|^{q gamma} |f^|^q is not integrable for the declared decay exponent");

  const Mat a = m.adjoint_power(s.j);
  const double jac = std::pow(m.det_mag(), s.j);
  auto integrand = [&](const Vec& eta) {
    const Vec xi = a * eta;
    const double mag = std::abs(f.ft(xi));
    if (mag == 0.0) return 0.0;
    return std::pow(xi.norm(), s.q * s.gamma) * std::pow(mag, s.q) * jac;
  };
  // Spherical average of the integrand at radius r, times the sphere area r^{d-1}|S^{d-1}|.
  auto shell = [&](double r) {
    if (d == 1) return integrand(Vec::Constant(1, r)) + integrand(Vec::Constant(1, -r));
    if (d == 2) {
      const int na = 512;
      double acc = 0.0;
      for (int k = 0; k < na; ++k) {
        Vec e(2);
        e << r * cos_pi(2.0 * k / na), r * sin_pi(2.0 * k / na);
        acc += integrand(e);
      }
      return acc * two_pi * r / na;
    }
    if (d == 3) {
      const auto& gl = quad::gauss_legendre(48);
      const int na = 96;
      double acc = 0.0;
      for (int c = 0; c < gl.size(); ++c) {
        const double ct = gl.nodes[c], st = std::sqrt(1.0 - ct * ct);
        for (int k = 0; k < na; ++k) {
          Vec e(3);
          e << r * st * cos_pi(2.0 * k / na), r * st * sin_pi(2.0 * k / na), r * ct;
          acc += gl.weights[c] * integrand(e);
        }
      }
      return acc * (two_pi / na) * r * r;
    }
    throw CapabilityError("tail integrals are implemented for d <= 3");
  };

  // Band-limited spectra give a finite outer radius in eta.
  std::optional<double> outer;
  if (const auto& box = f.spectrum_support()) {
    const Mat ainv = a.inverse();
    double rmax = 0.0;
    for (int c = 0; c < (1 << d); ++c) {
      Vec corner(d);
      for (int i = 0; i < d; ++i) corner[i] = (c >> i & 1) ? box->hi[i] : box->lo[i];
      rmax = std::max(rmax, (ainv * corner).norm());
    }
    outer = rmax;
  }

  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  if (domain == TailDomain::In) {
    const double hi = outer ? std::min(*outer, s.delta) : s.delta;
    return gauss_kronrod<double, 31>::integrate(shell, 0.0, hi, 15, 1e-10, &err);
  }
  if (outer) {
    if (*outer <= s.delta) return 0.0;
    return gauss_kronrod<double, 31>::integrate(shell, s.delta, *outer, 15, 1e-10, &err);
  }
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate(shell, s.delta, std::numeric_limits<double>::infinity(), 1e-10, &err);
}

// --- Brown-type bound --------------------------------------------------------

struct BrownRow {
  int j;
  double sup_error;
  double bound;
};

/// Per level: the grid sup error of the differential expansion and
/// ||M^{*-j}||^N * I^Out_{j,N,1}(f^).
inline std::vector<BrownRow> brown_check(const Kernel& g, const DiffOperator& l, const Signal& f, const Dilation& m,
                                         const std::vector<int>& levels, const ExpansionPlan& plan, double delta) {
  if (!strict_compatibility(g, l, delta, 1e-9))
    throw PreconditionError("kernel and operator are not strictly compatible at this delta");
  const int n = l.order();
  const int d = f.dim();
  if (!(f.decay_exponent() > n + d)) throw PreconditionError("signal decay exponent must exceed N + d");
  const auto xs = plan.grid.points();
  std::vector<cplx> exact(xs.size());
  detail::parallel_for(xs.size(), [&](size_t i) { exact[i] = f.value(xs[i]); });
  std::vector<BrownRow> rows;
  for (int j : levels) {
    const auto approx = differential_expansion(g, l, f, m, j, plan.truncation).evaluate(xs);
    const double err = lp_error(exact, approx.values, std::numeric_limits<double>::infinity(), 1.0);
    const double norm = operator_norm(m.adjoint_power(-j));
    const double bound = std::pow(norm, n) * tail_integral(f, m, {static_cast<double>(n), 1.0, delta, j});
    rows.push_back({j, err, bound});
  }
  return rows;
}

}  // namespace mexpand

#endif  // MEXPAND_ANALYSIS_HPP
