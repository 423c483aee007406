#include <gtest/gtest.h>

#include "mexpand/dilation.hpp"

using namespace mexpand;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

// Largest singular value by scanning the unit circle, then golden-section
// refinement around the best angle.
double brute_norm_2x2(const Mat& a) {
  auto len = [&](double t) { return (a * Vec{{std::cos(t), std::sin(t)}}).norm(); };
  double best = 0.0, arg = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double t = pi * i / 100000.0;
    if (len(t) > best) best = len(t), arg = t;
  }
  double lo = arg - pi / 1e5, hi = arg + pi / 1e5;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (len(x1) < len(x2))
      lo = x1;
    else
      hi = x2;
  }
  return std::max(best, len(0.5 * (lo + hi)));
}

}  // namespace

TEST(Dilation, PowerOfScalarDilation) {
  const Dilation m = Dilation::scalar(1, 2.0);
  EXPECT_EQ(m.power(3)(0, 0), 8.0);
  EXPECT_EQ(m.power(0)(0, 0), 1.0);
}

TEST(Dilation, QuincunxSquaresToTwiceIdentity) {
  const Dilation m(mat2(1, 1, 1, -1));
  EXPECT_TRUE(m.power(2).isApprox(2.0 * Mat::Identity(2, 2), 0.0));
  EXPECT_TRUE(m.isotropic());
  EXPECT_NEAR(m.min_eig_mag(), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.det_mag(), 2.0, 1e-15);
}

TEST(Dilation, InversePower) {
  const Dilation m = Dilation::scalar(2, 2.0);
  EXPECT_TRUE(m.power(-1).isApprox(0.5 * Mat::Identity(2, 2), 0.0));
}

TEST(Dilation, PowersCompose) {
  const Dilation m(mat2(1, -2, 2, 1));
  for (int a = -6; a <= 6; ++a)
    for (int b = -6; b <= 6; ++b) {
      const Mat lhs = m.power(a + b), rhs = m.power(a) * m.power(b);
      EXPECT_LE((lhs - rhs).norm(), 1e-9 * std::max(1.0, lhs.norm())) << a << " " << b;
    }
  for (int j = -10; j <= 10; ++j) EXPECT_LE((m.power(j) * m.power(-j) - Mat::Identity(2, 2)).norm(), 1e-10);
}

TEST(Dilation, AdjointPowerIsTransposedPower) {
  const Dilation m(mat2(2, 1, 0, 3));
  for (int j = -4; j <= 4; ++j) EXPECT_LE((m.adjoint_power(j) - m.power(j).transpose()).norm(), 1e-12);
}

TEST(Dilation, OperatorNorm) {
  EXPECT_NEAR(operator_norm(Mat::Identity(3, 3)), 1.0, 1e-12);
  EXPECT_NEAR(operator_norm(mat2(2, 0, 0, 0.5)), 2.0, 1e-12);
  const Mat q = mat2(1, 1, 1, -1);
  EXPECT_NEAR(operator_norm(q), brute_norm_2x2(q), 1e-8 * std::sqrt(2.0));
  EXPECT_NEAR(operator_norm(q), std::sqrt(2.0), 1e-8);
  const Mat s = mat2(3, -1, 0.5, 2);
  EXPECT_NEAR(operator_norm(s), brute_norm_2x2(s), 1e-8 * brute_norm_2x2(s));
}

TEST(Dilation, RejectsNonExpandingMatrices) {
  EXPECT_THROW(Dilation(mat2(2, 0, 0, 0.5)), InvalidSpec);
  EXPECT_THROW(Dilation(mat2(1, 0, 0, 2)), InvalidSpec);
  EXPECT_THROW(Dilation(Mat(2, 3)), InvalidSpec);
}

TEST(Dilation, DeterminantMatchesEigenvalueProduct) {
  Mat m3(3, 3);
  m3 << 2, 1, 0, 0, 3, 1, 0, 0, -2;
  for (const Mat& a : {mat2(1, 1, 1, -1), mat2(2, 1, 0, 3), mat2(1, -2, 2, 1), m3}) {
    const Dilation m(a);
    double prod = 1.0;
    for (double v : m.eig_mags()) prod *= v;
    EXPECT_NEAR(prod, std::fabs(a.determinant()), 1e-9 * m.det_mag());
  }
  const Dilation m(m3);
  EXPECT_NEAR(m.eig_mags()[0], 2.0, 1e-9);
  EXPECT_NEAR(m.eig_mags()[1], 2.0, 1e-9);
  EXPECT_NEAR(m.eig_mags()[2], 3.0, 1e-9);
  EXPECT_FALSE(m.isotropic());
}

TEST(Dilation, IsotropyFlag) {
  EXPECT_TRUE(Dilation::scalar(3, 2.0).isotropic());
  EXPECT_TRUE(Dilation(mat2(1, -2, 2, 1)).isotropic());  // eigenvalues 1 +- 2i
  EXPECT_FALSE(Dilation(mat2(2, 1, 0, 3)).isotropic());
}

TEST(Dilation, IsotropicPowersGrowLikeEigenvalueMagnitude) {
  for (const Mat& a : {mat2(1, 1, 1, -1), mat2(1, -2, 2, 1), mat2(2, 5, 0, 2)}) {
    const Dilation m(a);
    double lo = std::numeric_limits<double>::max(), hi = 0.0;
    for (int j = -8; j <= 8; ++j) {
      const double r = operator_norm(m.power(j)) / std::pow(m.min_eig_mag(), j);
      lo = std::min(lo, r), hi = std::max(hi, r);
    }
    // [[2,5],[0,2]] is not diagonalizable: its ratio grows linearly in |j|.
    if (a(0, 1) == 5.0)
      EXPECT_GT(hi / lo, 10.0);
    else
      EXPECT_LT(hi / lo, 10.0);
  }
}

TEST(Dilation, InversePowersDecayFasterThanRate) {
  for (const Mat& a : {mat2(1, 1, 1, -1), mat2(2, 1, 0, 3), mat2(2, 5, 0, 2)}) {
    const Dilation m(a);
    EXPECT_NEAR(m.rate(), 0.99 * m.min_eig_mag(), 1e-15);
    double prev = 0.0;
    for (int j = 0; j <= 12; ++j) {
      const double v = operator_norm(m.power(-j)) * std::pow(m.rate(), j);
      EXPECT_LT(v, 50.0) << j;
      prev = v;
    }
    EXPECT_GT(prev, 0.0);
  }
}

TEST(Dilation, CustomRateValidated) {
  EXPECT_NO_THROW(Dilation(2.0 * Mat::Identity(1, 1), 1.5));
  EXPECT_THROW(Dilation(2.0 * Mat::Identity(1, 1), 2.0), InvalidSpec);
}

TEST(Dilation, IntegerPowersAreExact) {
  const Dilation m(mat2(1, 1, 1, -1));
  EXPECT_TRUE(m.integer_entries());
  const Mat p = m.power(20);
  EXPECT_EQ(p(0, 0), 1024.0);
  EXPECT_EQ(p(0, 1), 0.0);
  EXPECT_EQ(m.power(-20)(1, 1), 1.0 / 1024.0);
}
