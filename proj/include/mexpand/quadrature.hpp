#ifndef MEXPAND_QUADRATURE_HPP
#define MEXPAND_QUADRATURE_HPP

#include <map>
#include <memory>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

#include "mexpand/core.hpp"

namespace mexpand::quad {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

inline Rule build_gauss_legendre(int n) {
  Rule r;
  auto zeros = boost::math::legendre_p_zeros<double>(n);
  for (double z : zeros) {
    r.nodes.push_back(z);
    if (z > 0.0) r.nodes.push_back(-z);
  }
  std::sort(r.nodes.begin(), r.nodes.end());
  for (double z : r.nodes) {
    const double dp = boost::math::legendre_p_prime(n, z);
    r.weights.push_back(2.0 / ((1.0 - z * z) * dp * dp));
  }
  return r;
}

/// Cached n-point rule; safe to call concurrently.
inline const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule>(build_gauss_legendre(n));
  return *slot;
}

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
template <class F>
auto composite(F&& f, double a, double b, int panels, int order) {
  const Rule& r = gauss_legendre(order);
  const double h = (b - a) / panels;
  decltype(f(a)) sum{};
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < r.size(); ++i) sum += r.weights[i] * f(mid + 0.5 * h * r.nodes[i]);
  }
  return sum * (0.5 * h);
}

/// Tensor-product nodes for a box with per-axis composite rules.
struct TensorNodes {
  std::vector<Vec> points;
  std::vector<double> weights;
};

inline TensorNodes tensor_nodes(const Box& box, const std::vector<int>& panels, int order) {
  const int d = box.dim();
  const Rule& r = gauss_legendre(order);
  std::vector<std::vector<double>> ax_nodes(d), ax_weights(d);
  for (int a = 0; a < d; ++a) {
    const double h = (box.hi[a] - box.lo[a]) / panels[a];
    for (int p = 0; p < panels[a]; ++p) {
      const double mid = box.lo[a] + (p + 0.5) * h;
      for (int i = 0; i < r.size(); ++i) {
        ax_nodes[a].push_back(mid + 0.5 * h * r.nodes[i]);
        ax_weights[a].push_back(0.5 * h * r.weights[i]);
      }
    }
  }
  TensorNodes out;
  std::vector<size_t> idx(d, 0);
  while (true) {
    Vec p(d);
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      p[a] = ax_nodes[a][idx[a]];
      w *= ax_weights[a][idx[a]];
    }
    out.points.push_back(std::move(p));
    out.weights.push_back(w);
    int a = d - 1;
    while (a >= 0 && ++idx[a] == ax_nodes[a].size()) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

}  // namespace mexpand::quad

#endif  // MEXPAND_QUADRATURE_HPP
