#ifndef MEXPAND_EXPAND_HPP
#define MEXPAND_EXPAND_HPP

#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "mexpand/dilation.hpp"
#include "mexpand/diffops.hpp"
#include "mexpand/kernels.hpp"
#include "mexpand/signals.hpp"

namespace mexpand {

namespace detail {

/// Runs fn(i) for i in [0, n) on a few threads. Each index writes its own
/// slot, so results do not depend on scheduling.
template <class F>
void parallel_for(size_t n, F&& fn) {
  const size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t workers = std::min<size_t>(hw, (n + 63) / 64);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace detail

/// n points per axis, uniformly spaced over [-T, T]^d, lexicographic order.
struct Grid {
  int dim = 1;
  double half_width = 4.0;
  int per_axis = 1025;

  double spacing() const { return 2.0 * half_width / (per_axis - 1); }
  double cell_volume() const { return std::pow(spacing(), dim); }
  size_t size() const { return static_cast<size_t>(std::pow(per_axis, dim)); }
  std::vector<Vec> points() const {
    if (dim < 1 || per_axis < 2 || !(half_width > 0.0)) throw InvalidSpec("grid needs d >= 1, n >= 2 and T > 0");
    std::vector<Vec> out;
    out.reserve(size());
    std::vector<int> idx(dim, 0);
    while (true) {
      Vec x(dim);
      for (int i = 0; i < dim; ++i) x[i] = -half_width + spacing() * idx[i];
      out.push_back(std::move(x));
      int i = dim - 1;
      while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
      if (i < 0) break;
    }
    return out;
  }
};

struct TruncationPolicy {
  enum class Mode { support_exact, radius };
  Mode mode = Mode::support_exact;
  long radius = 0;
  /// Tail estimates above this are flagged on the result.
  double tolerance = std::numeric_limits<double>::infinity();

  static TruncationPolicy support_exact() { return {}; }
  static TruncationPolicy box(long r, double tol = std::numeric_limits<double>::infinity()) {
    if (r < 0) throw InvalidSpec("truncation radius must be nonnegative");
    return {Mode::radius, r, tol};
  }
  /// Smallest R with c log(R) / R <= tol, capped at 1e5; the achieved tail
  /// estimate is still reported per evaluation.
  static TruncationPolicy for_tolerance(double tol, double c = 1.0) {
    if (!(tol > 0.0) || !(c > 0.0)) throw InvalidSpec("tolerance and constant must be positive");
    constexpr long cap = 100000;
    long lo = 3, hi = cap;
    if (c * std::log(static_cast<double>(cap)) / cap > tol) return box(cap, tol);
    while (lo < hi) {
      const long mid = (lo + hi) / 2;
      if (c * std::log(static_cast<double>(mid)) / mid <= tol)
        hi = mid;
      else
        lo = mid + 1;
    }
    return box(lo, tol);
  }
  /// Compact kernels sum exactly over their support; others use the box.
  static TruncationPolicy for_kernel(const Kernel& g, long r) {
    return g.form() == Kernel::Form::SplineCombo ? support_exact() : box(r);
  }
};

struct ExpansionPlan {
  Grid grid;
  TruncationPolicy truncation;
};

/// Coefficient c_k multiplying phi(M^j x + k).
using CoefficientRule = std::function<cplx(const Index&)>;

struct ExpansionValues {
  std::vector<cplx> values;
  /// Heuristic size of the dropped lattice tail (0 for exact sums).
  double tail_estimate = 0.0;
  bool tail_warning = false;
  size_t coefficient_count = 0;
};

/// Mean of g over the unit ball of R^d (d <= 3) by product Gauss rules,
/// doubling nodes until two successive values agree to `tol`.
template <class G>
cplx ball_mean(G&& g, int d, double tol = 1e-10, int max_nodes = 512) {
  auto rule = [&](int n) -> cplx {
    const auto& r = quad::gauss_legendre(n);
    cplx s{};
    Vec t(d);
    if (d == 1) {
      for (int i = 0; i < n; ++i) {
        t[0] = r.nodes[i];
        s += r.weights[i] * g(t);
      }
      return 0.5 * s;
    }
    if (d == 2) {
      const int na = 2 * n;
      for (int i = 0; i < n; ++i) {
        const double rad = 0.5 * (1.0 + r.nodes[i]);
        const double wr = 0.5 * r.weights[i] * rad;
        for (int a = 0; a < na; ++a) {
          const double ang = 2.0 * a / na;
          t[0] = rad * cos_pi(ang);
          t[1] = rad * sin_pi(ang);
          s += wr * g(t);
        }
      }
      return s * (two_pi / na) / pi;
    }
    if (d == 3) {
      const int na = 2 * n;
      for (int i = 0; i < n; ++i) {
        const double rad = 0.5 * (1.0 + r.nodes[i]);
        const double wr = 0.5 * r.weights[i] * rad * rad;
        for (int c = 0; c < n; ++c) {
          const double ct = r.nodes[c];
          const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
          for (int a = 0; a < na; ++a) {
            const double ang = 2.0 * a / na;
            t[0] = rad * st * cos_pi(ang);
            t[1] = rad * st * sin_pi(ang);
            t[2] = rad * ct;
            s += wr * r.weights[c] * g(t);
          }
        }
      }
      return s * (two_pi / na) / (4.0 * pi / 3.0);
    }
    throw CapabilityError("ball averages are implemented for d <= 3");
  };
  cplx prev = rule(16);
  double err = 0.0;
  for (int n = 32; n <= max_nodes; n *= 2) {
    const cplx cur = rule(n);
    err = std::abs(cur - prev);
    if (err <= tol) return cur;
    prev = cur;
  }
  throw AccuracyFailure("ball average quadrature exceeded its node budget", err);
}

/// (1/V_h) int_{B_h} f(M^{-j}(k + s)) ds: the mean of f over the ball
/// M^{-j} B_h centred at M^{-j} k.
inline cplx average_sample(const Signal& f, const Dilation& m, int j, const Index& k, double h) {
  if (!(h > 0.0)) throw InvalidSpec("averaging radius must be positive");
  const int d = f.dim();
  if (m.dim() != d || static_cast<int>(k.size()) != d) throw InvalidSpec("dimension mismatch");
  const Mat minv = m.power(-j);
  const Vec kc = to_vec(k);
  return ball_mean([&](const Vec& s) { return f.value(minv * (kc + h * s)); }, d);
}

/// E(f, M^{-j}k) = int w(u) Av_{h(u)}(f, M^{-j}k) du over the scheme's nodes.
inline cplx expected_sample(const Signal& f, const Dilation& m, int j, const Index& k, const AveragingScheme& scheme) {
  cplx s{};
  for (const auto& n : scheme.nodes())
    if (n.weight != 0.0) s += n.weight * average_sample(f, m, j, k, scheme.radius(n.u));
  return s;
}

// --- coefficient rules -----------------------------------------------------

/// c_k = (L f(M^{-j} .))(-k), derivatives of the composition by the chain rule.
inline CoefficientRule differential_coefficients(const DiffOperator& l, const Signal& f, const Dilation& m, int j) {
  if (l.dim() != f.dim() || m.dim() != f.dim()) throw InvalidSpec("dimension mismatch");
  if (f.max_order() < l.order()) throw CapabilityError("signal lacks derivatives of the operator's order");
  const Signal fj = f.composed(m.power(-j));
  return [l, fj](const Index& k) { return l.apply(fj, to_vec(negate(k))); };
}

/// c_k = E(f, M^{-j}(-k)).
inline CoefficientRule falsified_coefficients(const Signal& f, const Dilation& m, int j, const AveragingScheme& scheme) {
  return [f, m, j, scheme](const Index& k) { return expected_sample(f, m, j, negate(k), scheme); };
}

/// c_k = eps_j(-k) = E(f, M^{-j}(-k)) - (L f(M^{-j} .))(-k).
inline CoefficientRule residual_coefficients(const DiffOperator& l, const Signal& f, const Dilation& m, int j,
                                             const AveragingScheme& scheme) {
  auto e = falsified_coefficients(f, m, j, scheme);
  auto c = differential_coefficients(l, f, m, j);
  return [e, c](const Index& k) { return e(k) - c(k); };
}

// --- engine ------------------------------------------------------------------

/// sum_k c_k phi(M^j x + k), which equals m^{-j/2} sum_k c_k phi_{jk}(x).
class Expansion {
 public:
  Expansion(Kernel g, const Dilation& m, int j, CoefficientRule c, TruncationPolicy t)
      : g_(std::move(g)), mj_(m.power(j)), c_(std::move(c)), t_(t) {
    if (g_.dim() != m.dim()) throw InvalidSpec("kernel and dilation dimensions differ");
    if (t_.mode == TruncationPolicy::Mode::support_exact && g_.form() != Kernel::Form::SplineCombo)
      throw InvalidSpec("exact support truncation needs a compactly supported kernel");
  }

  ExpansionValues evaluate(const std::vector<Vec>& xs) const {
    const int d = g_.dim();
    ExpansionValues out;
    out.values.assign(xs.size(), cplx{});
    if (xs.empty()) return out;
    std::vector<Vec> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) {
      if (x.size() != d) throw InvalidSpec("evaluation point has wrong dimension");
      ys.push_back(mj_ * x);
    }

    // Dense coefficient box [lo, hi] covering every k any point needs.
    std::vector<long> lo(d), hi(d);
    const bool exact = t_.mode == TruncationPolicy::Mode::support_exact;
    for (int i = 0; i < d; ++i) {
      if (exact) {
        double ymin = ys[0][i], ymax = ys[0][i];
        for (const auto& y : ys) ymin = std::min(ymin, y[i]), ymax = std::max(ymax, y[i]);
        const double r = g_.support_radius()[i];
        lo[i] = static_cast<long>(std::ceil(-ymax - r));
        hi[i] = static_cast<long>(std::floor(-ymin + r));
      } else {
        lo[i] = -t_.radius;
        hi[i] = t_.radius;
      }
    }
    std::vector<long> extent(d);
    size_t total = 1;
    for (int i = 0; i < d; ++i) {
      extent[i] = hi[i] - lo[i] + 1;
      total *= static_cast<size_t>(extent[i]);
    }
    auto unflatten = [&](size_t flat) {
      Index k(d);
      for (int i = d - 1; i >= 0; --i) {
        k[i] = lo[i] + static_cast<long>(flat % extent[i]);
        flat /= extent[i];
      }
      return k;
    };
    std::vector<cplx> coef(total);
    detail::parallel_for(total, [&](size_t f) { coef[f] = c_(unflatten(f)); });
    out.coefficient_count = total;

    if (!exact) {
      // Mean coefficient mass per shell |k|_inf = r over the outer tenth of
      // the box, times the log growth of the sinc-type kernel tail.
      const long band = std::max(1L, t_.radius / 10);
      double mass = 0.0;
      for (size_t f = 0; f < total; ++f) {
        const Index k = unflatten(f);
        long mx = 0;
        for (long v : k) mx = std::max(mx, std::labs(v));
        if (mx > t_.radius - band) mass += std::abs(coef[f]);
      }
      out.tail_estimate = mass / static_cast<double>(band) * (1.0 + std::log1p(static_cast<double>(t_.radius)));
      out.tail_warning = out.tail_estimate > t_.tolerance;
    }

    detail::parallel_for(xs.size(), [&](size_t p) {
      const Vec& y = ys[p];
      std::vector<long> klo(d), khi(d);
      for (int i = 0; i < d; ++i) {
        if (exact) {
          const double r = g_.support_radius()[i];
          klo[i] = std::max(lo[i], static_cast<long>(std::ceil(-y[i] - r)));
          khi[i] = std::min(hi[i], static_cast<long>(std::floor(-y[i] + r)));
          if (klo[i] > khi[i]) return;
        } else {
          klo[i] = lo[i];
          khi[i] = hi[i];
        }
      }
      std::vector<long> k(klo);
      Vec arg(d);
      cplx sum{};
      while (true) {
        size_t flat = 0;
        for (int i = 0; i < d; ++i) {
          flat = flat * extent[i] + static_cast<size_t>(k[i] - lo[i]);
          arg[i] = y[i] + static_cast<double>(k[i]);
        }
        if (coef[flat] != cplx{}) sum += coef[flat] * g_.phi(arg);
        int i = d - 1;
        while (i >= 0 && ++k[i] > khi[i]) k[i] = klo[i], --i;
        if (i < 0) break;
      }
      out.values[p] = sum;
    });
    return out;
  }

  cplx at(const Vec& x) const { return evaluate({x}).values.front(); }

 private:
  Kernel g_;
  Mat mj_;
  CoefficientRule c_;
  TruncationPolicy t_;
};

// --- spec-level entry points -------------------------------------------------

inline Expansion differential_expansion(const Kernel& g, const DiffOperator& l, const Signal& f, const Dilation& m,
                                        int j, const TruncationPolicy& t) {
  return Expansion(g, m, j, differential_coefficients(l, f, m, j), t);
}

inline cplx differential_expansion(const Kernel& g, const DiffOperator& l, const Signal& f, const Dilation& m, int j,
                                   const Vec& x, const TruncationPolicy& t) {
  return differential_expansion(g, l, f, m, j, t).at(x);
}

inline Expansion falsified_expansion(const Kernel& g, const Signal& f, const Dilation& m, int j,
                                     const AveragingScheme& scheme, const TruncationPolicy& t) {
  return Expansion(g, m, j, falsified_coefficients(f, m, j, scheme), t);
}

inline cplx falsified_expansion(const Kernel& g, const Signal& f, const Dilation& m, int j, const Vec& x,
                                const AveragingScheme& scheme, const TruncationPolicy& t) {
  return falsified_expansion(g, f, m, j, scheme, t).at(x);
}

/// L_p grid norm of m^{-j/2} sum_k eps_j(-k) phi_{jk} with L the falsified
/// operator of order n for the scheme.
inline double grid_lp_norm(const std::vector<cplx>& v, double p, double cell_volume) {
  if (!(p >= 1.0)) throw InvalidSpec("norm index must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& e : v) m = std::max(m, std::abs(e));
    return m;
  }
  double s = 0.0;
  for (const auto& e : v) s += std::pow(std::abs(e), p);
  return std::pow(s * cell_volume, 1.0 / p);
}

inline double expansion_residual_norm(const Kernel& g, const Signal& f, const Dilation& m, int j,
                                      const AveragingScheme& scheme, int n, double p, const ExpansionPlan& plan) {
  const DiffOperator l = falsified_operator(n, scheme, f.dim());
  const Expansion e(g, m, j, residual_coefficients(l, f, m, j, scheme), plan.truncation);
  return grid_lp_norm(e.evaluate(plan.grid.points()).values, p, plan.grid.cell_volume());
}

}  // namespace mexpand

#endif  // MEXPAND_EXPAND_HPP
