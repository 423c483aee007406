#ifndef MEXPAND_FINITE_DIFFERENCE_HPP
#define MEXPAND_FINITE_DIFFERENCE_HPP

#include "mexpand/core.hpp"

namespace mexpand::fd {

/// Central difference of mixed order beta with step h: a tensor product of
/// 1-D stencils with nodes (r/2 - k) h. Its error expands in even powers of h.
template <class F>
cplx central(F&& f, const Vec& x0, const MultiIndex& beta, double h) {
  const int d = static_cast<int>(x0.size());
  std::vector<int> k(d, 0);
  cplx sum{0.0, 0.0};
  while (true) {
    Vec x = x0;
    double c = 1.0;
    for (int a = 0; a < d; ++a) {
      const int r = beta[a];
      x[a] += (0.5 * r - k[a]) * h;
      c *= ((k[a] % 2) ? -1.0 : 1.0) * binomial(r, k[a]);
    }
    sum += c * cplx(f(x));
    int a = d - 1;
    while (a >= 0 && ++k[a] > beta[a]) k[a--] = 0;
    if (a < 0) break;
  }
  return sum / ipow(h, beta.total());
}

/// D^beta f(x0) by central differences at steps h0, h0/2, ..., h0/2^levels,
/// combined by Richardson extrapolation.
template <class F>
cplx derivative(F&& f, const Vec& x0, const MultiIndex& beta, double h0, int refinements) {
  if (beta.total() == 0) return cplx(f(x0));
  std::vector<cplx> table;
  for (int l = 0; l <= refinements; ++l) table.push_back(central(f, x0, beta, h0 / std::ldexp(1.0, l)));
  for (int m = 1; m <= refinements; ++m) {
    const double p = std::ldexp(1.0, 2 * m);
    for (int l = 0; l + m <= refinements; ++l) table[l] = (p * table[l + 1] - table[l]) / (p - 1.0);
  }
  return table[0];
}

}  // namespace mexpand::fd

#endif  // MEXPAND_FINITE_DIFFERENCE_HPP
