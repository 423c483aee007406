// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "mexpand/experiments.hpp"

using namespace mexpand;
using cli::json;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0.0 || secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  char timing[96];
  if (budget_s > 0.0)
    std::snprintf(timing, sizeof timing, "%.1f s of %.0f s%s", secs, budget_s, in_time ? "" : " (over budget)");
  else
    std::snprintf(timing, sizeof timing, "%.1f s", secs);
  std::printf("%s %2d %s: %s [%s]\n", pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), timing);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double fitted(const cli::RunResult& r) { return r.document["results"]["fitted_order"].get<double>(); }

json converge_ex4(const std::string& samples) {
  return {{"dim", 1},
          {"scheme", {{"kind", "constant"}, {"h", 0.5}}},
          {"operator", {{"kind", "falsified"}, {"order", 3}}},
          {"samples", samples},
          {"kernel", {{"name", "example4"}}},
          {"signal", {{"family", "gaussian"}, {"sigma", 1.0}}},
          {"levels", {{"j_min", 1}, {"j_max", 6}}},
          {"p", "inf"},
          {"expect", {{"order_min", 3.7}, {"order_max", 4.3}}}};
}

}  // namespace

int main() {
  criterion(1, "band-limited reproduction with the sinc kernel", 10.0, [] {
    const json c = {{"dim", 1},
                    {"kernel", {{"name", "sinc"}}},
                    {"signal", {{"family", "bandlimited_triangle_spectrum"}, {"a", 0.25}}},
                    {"j", 0},
                    {"truncation", {{"mode", "radius"}, {"R", 2000}}},
                    {"expect", {{"sup_error_max", 1e-5}}}};
    const auto r = cli::run("reproduce", c);
    const double e = r.document["results"]["sup_error"].get<double>();
    return Outcome{r.status == 0, fmt("sup error %.3g (limit 1e-5)", e)};
  });

  criterion(2, "ball moments against Monte Carlo", 30.0, [] {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    constexpr long samples = 10000000;
    double worst = 0.0;
    int checked = 0;
    for (int d = 1; d <= 3; ++d) {
      std::vector<MultiIndex> betas;
      for (const auto& b : MultiIndex::up_to(d, 4))
        if (!b.any_odd()) betas.push_back(b);
      std::vector<double> sums(betas.size(), 0.0);
      Vec t(d);
      for (long s = 0; s < samples; ++s) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
          t[i] = u(rng);
          r2 += t[i] * t[i];
        }
        if (r2 > 1.0) continue;
        for (size_t b = 0; b < betas.size(); ++b) sums[b] += betas[b].monomial<double>(t);
      }
      for (size_t b = 0; b < betas.size(); ++b) {
        const double mc = std::ldexp(sums[b] / samples, d);
        const double exact = ball_moment(betas[b], d);
        worst = std::max(worst, std::fabs(mc - exact) / exact);
        ++checked;
      }
    }
    return Outcome{worst <= 2e-3, std::to_string(checked) + " moments, worst relative error " + fmt("%.3g", worst)};
  });

  criterion(3, "falsified operator second-order coefficients", 0.0, [] {
    double worst = 0.0;
    for (double h : {0.1, 0.5, 1.0, 2.0}) {
      const auto s = AveragingScheme::constant(h);
      const cplx a2 = falsified_operator(3, s, 1).coefficient(MultiIndex({2}));
      const cplx a20 = falsified_operator(3, s, 2).coefficient(MultiIndex({2, 0}));
      worst = std::max({worst, std::abs(a2 - h * h / 6.0), std::abs(a20 - h * h / 8.0)});
    }
    return Outcome{worst <= 1e-12, fmt("max deviation from h^2/6 and h^2/8: %.3g", worst)};
  });

  criterion(4, "triangle kernel convergence order", 60.0, [] {
    std::string detail;
    bool ok = true;
    for (const char* p : {"2", "inf"}) {
      json c = {{"dim", 1},
                {"kernel", {{"name", "triangle"}}},
                {"signal", {{"family", "gaussian"}, {"sigma", 1.0}}},
                {"levels", {{"j_min", 1}, {"j_max", 7}}},
                {"p", std::string(p) == "inf" ? json("inf") : json(2)},
                {"expect", {{"order_min", 1.85}, {"order_max", 2.15}}}};
      const auto r = cli::run("converge", c);
      ok = ok && r.status == 0;
      detail += std::string(detail.empty() ? "" : ", ") + "p=" + p + fmt(" order %.3f", fitted(r));
    }
    return Outcome{ok, detail + " (window [1.85, 2.15])"};
  });

  criterion(5, "third-order kernel, exact and falsified samples", 120.0, [] {
    const auto exact = cli::run("converge", converge_ex4("exact"));
    const auto fals = cli::run("converge", converge_ex4("falsified"));
    return Outcome{exact.status == 0 && fals.status == 0,
                   fmt("exact order %.3f, ", fitted(exact)) + fmt("falsified order %.3f (window [3.7, 4.3])", fitted(fals))};
  });

  criterion(6, "two-dimensional kernel with quincunx dilation", 300.0, [] {
    const json c = {{"dim", 2},
                    {"kernel", {{"name", "example3"}}},
                    {"signal", {{"family", "gaussian"}, {"sigma", 1.0}}},
                    {"dilation", {{"matrix", {{1, 1}, {1, -1}}}}},
                    {"levels", {{"j_min", 1}, {"j_max", 6}}},
                    {"grid", {{"n", 257}}},
                    {"p", "inf"},
                    {"base", std::sqrt(2.0)},
                    {"expect", {{"order_min", 2.6}, {"order_max", 3.4}}}};
    const auto r = cli::run("converge", c);
    return Outcome{r.status == 0, fmt("order %.3f against base sqrt 2 (window [2.6, 3.4])", fitted(r))};
  });

  criterion(7, "Taylor identity under a linear change of variables", 0.0, [] {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    const Signal poly = Signal::polynomial(
        2, {{{0, 0}, 1.0}, {{2, 1}, cplx(0.5, -1.0)}, {{0, 3}, 2.0}, {{1, 1}, -0.7}, {{4, 0}, 0.25}, {{1, 3}, -0.1}});
    for (int n = 0; n < 100; ++n) {
      const int order = n % 5;
      Mat a(2, 2);
      for (int i = 0; i < 4; ++i) a.data()[i] = n01(rng);
      const Vec x{{n01(rng), n01(rng)}}, t{{n01(rng), n01(rng)}};
      worst = std::max(worst, taylor_identity_residual(poly, a, x, t, order));
    }
    for (int n = 0; n < 100; ++n) {
      const int d = 1 + n % 3;
      const int order = n % 5;
      CVec c(d);
      for (int i = 0; i < d; ++i) c[i] = cplx(0.5 * n01(rng), 0.5 * n01(rng));
      Mat a(d, d);
      for (int i = 0; i < d * d; ++i) a.data()[i] = 0.5 * n01(rng);
      Vec x(d), t(d);
      for (int i = 0; i < d; ++i) x[i] = 0.5 * n01(rng), t[i] = 0.5 * n01(rng);
      worst = std::max(worst, taylor_identity_residual(Signal::exponential(c), a, x, t, order));
    }
    return Outcome{worst <= 1e-10, fmt("200 cases, worst residual %.3g", worst)};
  });

  criterion(8, "coefficient solver for the third-order kernel", 0.0, [] {
    const auto z = solve_example4(0.0, 0.0, 0.0);
    const bool exact_zero = z.b1 == cplx{} && z.b2 == cplx(2.0 / 3.0) && z.b3 == cplx{};
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      const cplx a1(u(rng), u(rng)), a2(u(rng), u(rng)), a3(u(rng), u(rng));
      const auto b = solve_example4(a1, a2, a3);
      worst = std::max(worst, compatibility_defect(Kernel::example4(b.b1, b.b2, b.b3),
                                                   DiffOperator::univariate({1.0, a1, a2, a3}), 4));
    }
    return Outcome{exact_zero && worst <= 1e-7,
                   std::string(exact_zero ? "zero operator gives (0, 2/3, 0)" : "zero operator mismatch") +
                       fmt(", worst defect over 20 operators %.3g", worst)};
  });

  criterion(9, "Strang-Fix order detection", 0.0, [] {
    const auto b3 = solve_example3(0.0, 0.0);
    const auto b4 = solve_example4(0.0, 0.0, 0.0);
    const int tri = strang_fix_order(Kernel::triangle(1), 8, 1e-7);
    const int ex3 = strang_fix_order(Kernel::example3(b3.b1, b3.b2), 8, 1e-7);
    const int ex4 = strang_fix_order(Kernel::example4(b4.b1, b4.b2, b4.b3), 8, 1e-7);
    return Outcome{tri == 2 && ex3 == 3 && ex4 == 4, "triangle " + std::to_string(tri) + ", two-dimensional " +
                                                         std::to_string(ex3) + ", third-order " + std::to_string(ex4)};
  });

  criterion(10, "error bound via Fourier tails, sinc kernel", 0.0, [] {
    const json c = {{"dim", 1},
                    {"kernel", {{"name", "sinc"}}},
                    {"signal", {{"family", "gaussian"}, {"sigma", 0.09}}},
                    {"levels", {{"j_min", 1}, {"j_max", 6}}},
                    {"delta", 0.4},
                    {"truncation", {{"mode", "radius"}, {"R", 2000}}},
                    {"expect", {{"margin", 1.5}, {"slope_slack", 0.1}}}};
    const auto r = cli::run("brown", c);
    const auto& res = r.document["results"];
    return Outcome{r.status == 0, fmt("worst error/(C bound) %.3f (limit 1.5), ", res["worst_ratio_over_C"].get<double>()) +
                                      fmt("bound slope %.3f", res["bound_slope"].get<double>())};
  });

  criterion(11, "solving f - f'' = g for band-limited g", 30.0, [] {
    const json c = {{"dim", 1},
                    {"operator",
                     {{"kind", "coefficients"}, {"terms", {{{"beta", {0}}, {"a", 1}}, {{"beta", {2}}, {"a", -1}}}}}},
                    {"signal", {{"family", "bandlimited_bump"}, {"a", 0.45}}},
                    {"R", 200},
                    {"grid", {{"T", 4}, {"n", 129}}},
                    {"expect", {{"residual_max", 1e-4}}}};
    const auto r = cli::run("ode-demo", c);
    return Outcome{r.status == 0, fmt("sup residual %.3g (limit 1e-4)", r.document["results"]["residual"].get<double>())};
  });

  criterion(12, "residual norm decay for falsified samples", 0.0, [] {
    std::string detail;
    bool ok = true;
    for (double h : {0.5, 1.0}) {
      const json c = {{"dim", 1},
                      {"scheme", {{"kind", "constant"}, {"h", h}}},
                      {"order", 3},
                      {"kernel", {{"name", "example4"}}},
                      {"signal", {{"family", "gaussian"}, {"sigma", 1.0}}},
                      {"levels", {{"j_min", 2}, {"j_max", 6}}},
                      {"p", "inf"}};
      const auto r = cli::run("falsify", c);
      ok = ok && r.status == 0;
      double lo = 1e300, hi = 0.0;
      for (const auto& row : r.document["results"]["levels"])
        if (row.contains("ratio")) {
          lo = std::min(lo, row["ratio"].get<double>() * 16.0);
          hi = std::max(hi, row["ratio"].get<double>() * 16.0);
        }
      detail += std::string(detail.empty() ? "" : ", ") + fmt("h=%.1f: 16*ratio in ", h) + fmt("[%.3f, ", lo) +
                fmt("%.3f]", hi);
    }
    return Outcome{ok, detail + " (window [0.8, 1.25])"};
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
