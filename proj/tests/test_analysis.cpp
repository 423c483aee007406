#include <random>

#include <gtest/gtest.h>

#include "mexpand/analysis.hpp"

using namespace mexpand;

namespace {

const double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(Analysis, StrangFixOrders) {
  EXPECT_EQ(strang_fix_order(Kernel::triangle(1), 8, 1e-7), 2);
  EXPECT_EQ(strang_fix_order(Kernel::triangle(2), 8, 1e-7), 2);
  EXPECT_EQ(strang_fix_order(Kernel::example3(0.5, 0.5), 8, 1e-7), 3);
  EXPECT_EQ(strang_fix_order(Kernel::example3({0.2, 0.4}, {1.1, -0.3}), 8, 1e-7), 3);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  for (int n = 0; n < 5; ++n) {
    const Kernel g = Kernel::example4({n01(rng), n01(rng)}, {n01(rng), n01(rng)}, {n01(rng), n01(rng)});
    EXPECT_EQ(strang_fix_order(g, 8, 1e-7), 4);
    EXPECT_EQ(strang_fix_order(g.scaled(2.0), 8, 1e-7), 4);
  }
  EXPECT_EQ(strang_fix_order(Kernel::bspline_product(1, 4), 8, 1e-7), 4);
  EXPECT_EQ(strang_fix_order(Kernel::triangle(1).scaled(2.0), 8, 1e-7), 2);
}

TEST(Analysis, StrangFixForBandLimitedKernels) {
  // phi^ vanishes near every nonzero integer (sinc) or equals 1 there
  EXPECT_EQ(strang_fix_order(Kernel::sinc(1), 8, 1e-7), 8);
  const Kernel wide = Kernel::make_class_b_constant(1.0, Box::cube(1, 1.5));
  EXPECT_EQ(strang_fix_order(wide, 8, 1e-7), 0);
}

TEST(Analysis, CompatibilityDefectOfTriangle) {
  const DiffOperator id = DiffOperator::identity(1);
  EXPECT_LE(compatibility_defect(Kernel::triangle(1), id, 2), 1e-8);
  // 1 - sinc^2(xi) = (pi^2 / 3) xi^2 + O(xi^4)
  EXPECT_NEAR(compatibility_defect(Kernel::triangle(1), id, 3), 2.0 * pi * pi / 3.0, 1e-6);
}

TEST(Analysis, CompatibilityDefectOfSolvedKernel) {
  const DiffOperator l = falsified_operator(3, AveragingScheme::constant(0.5), 1);
  const auto b = solve_example4(l.coefficient(MultiIndex({1})), l.coefficient(MultiIndex({2})),
                                l.coefficient(MultiIndex({3})));
  EXPECT_LE(compatibility_defect(Kernel::example4(b.b1, b.b2, b.b3), l, 4), 1e-7);
  // one order more is generically violated
  EXPECT_GT(compatibility_defect(Kernel::example4(b.b1, b.b2, b.b3), l, 5), 1e-2);
}

TEST(Analysis, CompatibilityDefectAtOrderOne) {
  for (cplx c : {cplx(1.3), cplx(0.2, -0.4)}) {
    const Kernel g = Kernel::example4(0.1, 0.7, 0.2).scaled(c);
    const double expect = std::abs(1.0 - g.phi_hat(Vec::Zero(1)));
    EXPECT_NEAR(compatibility_defect(g, DiffOperator::identity(1), 1), expect, 1e-15);
  }
}

TEST(Analysis, CompatibilityDefectForBandLimitedKernels) {
  const DiffOperator l = DiffOperator::univariate({1.0, 0.0, -1.0});
  const Kernel rec = Kernel::make_reciprocal_kernel(l, Box::cube(1, 0.5));
  EXPECT_LE(compatibility_defect(rec, l, 4), 1e-6);
  EXPECT_LE(compatibility_defect(Kernel::sinc(2), DiffOperator::identity(2), 4), 1e-10);
}

TEST(Analysis, StrictCompatibility) {
  EXPECT_TRUE(strict_compatibility(Kernel::sinc(1), DiffOperator::identity(1), 0.4, 1e-9));
  EXPECT_TRUE(strict_compatibility(Kernel::sinc(2), DiffOperator::identity(2), 0.4, 1e-9));
  EXPECT_FALSE(strict_compatibility(Kernel::triangle(1), DiffOperator::identity(1), 0.1, 1e-9));
  const DiffOperator l = DiffOperator::univariate({1.0, 0.0, -1.0});
  EXPECT_TRUE(strict_compatibility(Kernel::make_reciprocal_kernel(l, Box::cube(1, 0.5)), l, 0.4, 1e-9));
  const DiffOperator first = DiffOperator::univariate({1.0, 1.0});
  EXPECT_TRUE(strict_compatibility(Kernel::make_reciprocal_kernel(first, Box::cube(1, 0.5)), first, 0.4, 1e-9));
  // a mismatched pair fails
  EXPECT_FALSE(strict_compatibility(Kernel::sinc(1), l, 0.4, 1e-9));
}

TEST(Analysis, PeriodizedNorms) {
  const auto t = periodized_lp_norm(Kernel::triangle(1), inf, 3);
  EXPECT_NEAR(t.value, 1.0, 1e-12);
  EXPECT_FALSE(t.diverges);
  for (const Kernel& g : {Kernel::example4(0.3, 0.9, -0.1), Kernel::example3(0.5, 0.5)}) {
    const auto n = periodized_lp_norm(g, 2.0, 4);
    EXPECT_TRUE(std::isfinite(n.value));
    EXPECT_FALSE(n.diverges);
  }
  const auto s = periodized_lp_norm(Kernel::sinc(1), inf, 50);
  EXPECT_TRUE(s.diverges);
  EXPECT_GT(periodized_lp_norm(Kernel::sinc(1), inf, 400).value, s.value);
}

TEST(Analysis, LpError) {
  std::vector<cplx> a(100, cplx(0.5, 0.5));
  EXPECT_EQ(lp_error(a, a, 2.0, 0.01), 0.0);
  std::vector<cplx> b(100, cplx(0.5, 0.5) + cplx(0.3, -0.4));
  EXPECT_NEAR(lp_error(a, b, 2.0, 0.01), 0.5, 1e-14);
  EXPECT_NEAR(lp_error(a, b, inf, 0.01), 0.5, 1e-14);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<cplx> x(57), y(57);
  for (size_t i = 0; i < x.size(); ++i) x[i] = {n01(rng), n01(rng)}, y[i] = {n01(rng), n01(rng)};
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]), 3.0) * 0.2;
  EXPECT_NEAR(lp_error(x, y, 3.0, 0.2), std::cbrt(s), 1e-13);
  EXPECT_THROW(lp_error(x, std::vector<cplx>(3), 2.0, 1.0), InvalidSpec);
}

TEST(Analysis, FitOrderSynthetic) {
  std::vector<int> js;
  std::vector<double> clean, wobbly;
  for (int j = 1; j <= 7; ++j) {
    js.push_back(j);
    clean.push_back(3.0 * std::pow(2.0, -2.0 * j));
    wobbly.push_back(std::pow(2.0, -4.0 * j) * (1.0 + 0.05 * ((j % 2) ? -1.0 : 1.0)));
  }
  const auto a = fit_order(js, clean, 2.0);
  EXPECT_NEAR(a.order, 2.0, 1e-12);
  EXPECT_NEAR(a.residual, 0.0, 1e-12);
  EXPECT_NEAR(fit_order(js, wobbly, 2.0).order, 4.0, 0.05);
  EXPECT_NEAR(fit_order(js, clean, 4.0).order, 1.0, 1e-12);
}

TEST(Analysis, FitOrderValidation) {
  EXPECT_THROW(fit_order({1, 2, 3}, {1.0, 0.0, 0.1}, 2.0), InvalidSpec);
  EXPECT_THROW(fit_order({1, 2}, {1.0, 0.1}, 2.0), InvalidSpec);
  EXPECT_THROW(fit_order({1, 2, 3}, {1.0, 0.5, 0.1}, 1.0), InvalidSpec);
}

TEST(Analysis, ConvergenceReportFit) {
  ConvergenceReport r;
  r.levels = {1, 2, 3, 4, 5};
  for (int j : r.levels) r.errors.push_back(std::pow(2.0, -3.0 * j));
  r.fit();
  EXPECT_NEAR(r.fitted_order, 3.0, 1e-12);
}

TEST(Analysis, TailIntegralFullDomain) {
  // gamma = 0, q = 1, delta -> 0: int |f^| = 1 for the self-dual Gaussian
  for (int d = 1; d <= 3; ++d) {
    const double v = tail_integral(Signal::gaussian(d), Dilation::scalar(d, 2.0), {0.0, 1.0, 1e-9, 0});
    EXPECT_NEAR(v, 1.0, 1e-6) << d;
  }
}

TEST(Analysis, TailIntegralSplitsIntoInnerAndOuter) {
  const Signal f = Signal::modulated_gaussian(2, 0.7, Vec{{0.4, -0.1}});
  Mat a(2, 2);
  a << 1, 1, 1, -1;
  const Dilation m(a);
  for (int j = 0; j <= 3; ++j) {
    const TailIntegralSpec s{2.0, 1.0, 0.3, j};
    const double out = tail_integral(f, m, s, TailDomain::Out), in = tail_integral(f, m, s, TailDomain::In);
    const double all = tail_integral(f, m, {2.0, 1.0, 1e-9, 0});
    EXPECT_NEAR((out + in) / all, 1.0, 1e-6) << j;
  }
}

TEST(Analysis, TailIntegralDecreasesWithLevel) {
  const Signal f = Signal::gaussian(1, 0.3);
  const Dilation m = Dilation::scalar(1, 2.0);
  double prev = inf;
  for (int j = 0; j <= 8; ++j) {
    const double v = tail_integral(f, m, {1.0, 1.0, 0.4, j});
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Analysis, TailIntegralDecayRate) {
  // ||M^{*-j}||^{gamma q} I^Out decays at least like 2^{-j q (gamma + eps)},
  // eps = rho - gamma - d for declared decay rho
  const Signal f = Signal::gaussian(1, 0.09);
  const Dilation m = Dilation::scalar(1, 2.0);
  for (double gamma : {0.0, 1.0, 2.0}) {
    std::vector<int> js;
    std::vector<double> v;
    for (int j = 0; j <= 8; ++j) {
      js.push_back(j);
      v.push_back(std::pow(operator_norm(m.adjoint_power(-j)), gamma) * tail_integral(f, m, {gamma, 1.0, 0.4, j}));
    }
    const double eps = f.decay_exponent() - gamma - 1.0;
    EXPECT_GE(fit_order(js, v, 2.0).order, gamma + eps - 0.1) << gamma;
  }
}

TEST(Analysis, TailIntegralPrecondition) {
  const Signal f = Signal::gaussian(1, 1.0, 6, 2.0);
  EXPECT_THROW(tail_integral(f, Dilation::scalar(1, 2.0), {1.0, 1.0, 0.3, 0}), PreconditionError);
  EXPECT_NO_THROW(tail_integral(f, Dilation::scalar(1, 2.0), {1.0, 1.0, 0.3, 0}, TailDomain::In));
}

TEST(Analysis, BrownCheckBandLimitedSignal) {
  // spectrum [-1/8, 1/8] sits inside |2^{-j} xi| < 0.4 for every j >= 0
  const ExpansionPlan plan{Grid{1, 4.0, 129}, TruncationPolicy::box(400)};
  const auto rows = brown_check(Kernel::sinc(1), DiffOperator::identity(1), Signal::bandlimited_bump(1, 0.125),
                                Dilation::scalar(1, 2.0), {0, 1, 2}, plan, 0.4);
  for (const auto& r : rows) {
    EXPECT_EQ(r.bound, 0.0);
    EXPECT_LT(r.sup_error, 1e-6);
  }
}

TEST(Analysis, BrownCheckZeroSignal) {
  const ExpansionPlan plan{Grid{1, 4.0, 65}, TruncationPolicy::box(100)};
  for (const auto& r : brown_check(Kernel::sinc(1), DiffOperator::identity(1), Signal::zero(1), Dilation::scalar(1, 2.0),
                                   {1, 2, 3}, plan, 0.4)) {
    EXPECT_EQ(r.sup_error, 0.0);
    EXPECT_EQ(r.bound, 0.0);
  }
}

TEST(Analysis, BrownCheckPreconditions) {
  const ExpansionPlan plan{Grid{1, 4.0, 65}, TruncationPolicy::support_exact()};
  EXPECT_THROW(brown_check(Kernel::triangle(1), DiffOperator::identity(1), Signal::gaussian(1), Dilation::scalar(1, 2.0),
                           {1, 2}, plan, 0.4),
               PreconditionError);
  const ExpansionPlan box{Grid{1, 4.0, 65}, TruncationPolicy::box(50)};
  EXPECT_THROW(brown_check(Kernel::sinc(1), DiffOperator::identity(1), Signal::gaussian(1, 1.0, 6, 1.0),
                           Dilation::scalar(1, 2.0), {1, 2}, box, 0.4),
               PreconditionError);
}

TEST(Analysis, LatticePoints) {
  EXPECT_EQ(lattice_points(1, 3).size(), 6u);
  EXPECT_EQ(lattice_points(2, 3).size(), 48u);
  for (const auto& p : lattice_points(3, 2)) EXPECT_GT(p.lpNorm<Eigen::Infinity>(), 0.0);
}
