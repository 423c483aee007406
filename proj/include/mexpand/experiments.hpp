#ifndef MEXPAND_EXPERIMENTS_HPP
#define MEXPAND_EXPERIMENTS_HPP

#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "mexpand/mexpand.hpp"

namespace mexpand {

// --- ODE demo ----------------------------------------------------------------

struct OdeReport {
  double residual = 0.0;
  double solution_sup = 0.0;
  long radius = 0;
  size_t grid_points = 0;
  size_t kernel_evaluations = 0;
};

/// Solves L f = g for band-limited g: with phi^ = 1/symbol(L) on
/// [-1/2, 1/2]^d, f = sum_k g(-k) phi(. + k). L is applied to the series term
/// by term and compared with g on the grid.
inline OdeReport ode_demo(const DiffOperator& l, const Signal& g, long radius, const Grid& grid) {
  if (l.dim() != g.dim() || grid.dim != g.dim()) throw InvalidSpec("dimension mismatch");
  const int d = g.dim();
  const Kernel phi = Kernel::make_reciprocal_kernel(l, Box::cube(d, 0.5));
  std::vector<MultiIndex> betas{MultiIndex::zero(d)};
  std::vector<cplx> coeffs{0.0};
  for (const auto& [beta, a] : l.coeffs()) {
    if (beta.is_zero()) {
      coeffs[0] = a;
      continue;
    }
    betas.push_back(beta);
    coeffs.push_back(a);
  }

  const auto xs = grid.points();
  // Lattice translates of a grid with spacing dividing 1 repeat, so the
  // kernel is evaluated once per distinct argument.
  constexpr double key_scale = 1048576.0;
  std::map<std::vector<long long>, size_t> slot;
  std::vector<Vec> args;
  std::vector<std::vector<std::pair<size_t, cplx>>> uses(xs.size());
  std::map<Index, cplx> samples;
  std::vector<long> k(d, -radius);
  while (true) {
    const cplx c = g.value(to_vec(negate(k)));
    if (c != cplx{}) samples[k] = c;
    int i = d - 1;
    while (i >= 0 && ++k[i] > radius) k[i--] = -radius;
    if (i < 0) break;
  }
  for (size_t p = 0; p < xs.size(); ++p)
    for (const auto& [kk, c] : samples) {
      Vec a = xs[p] + to_vec(kk);
      std::vector<long long> key(d);
      for (int i = 0; i < d; ++i) key[i] = std::llround(a[i] * key_scale);
      auto [it, fresh] = slot.emplace(key, args.size());
      if (fresh) args.push_back(a);
      uses[p].emplace_back(it->second, c);
    }

  std::vector<std::vector<cplx>> values(args.size());
  detail::parallel_for(args.size(), [&](size_t i) { values[i] = phi.derivatives(betas, args[i]); });

  OdeReport r;
  r.radius = radius;
  r.grid_points = xs.size();
  r.kernel_evaluations = args.size();
  for (size_t p = 0; p < xs.size(); ++p) {
    cplx f{}, lf{};
    for (const auto& [s, c] : uses[p]) {
      f += c * values[s][0];
      cplx term{};
      for (size_t b = 0; b < betas.size(); ++b) term += coeffs[b] * values[s][b];
      lf += c * term;
    }
    r.solution_sup = std::max(r.solution_sup, std::abs(f));
    r.residual = std::max(r.residual, std::abs(lf - g.value(xs[p])));
  }
  return r;
}

namespace cli {

using json = nlohmann::json;

/// Configuration problems: unknown keys, missing fields, bad values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Reads a JSON object while recording every value it used (defaults
/// included) so the resolved configuration can be echoed, and rejects keys
/// that nothing consumed.
class Reader {
 public:
  Reader(const json& in, std::string path) : in_(in), path_(std::move(path)), out_(json::object()) {
    if (!in_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    if (!in_.contains(key)) {
      out_[key] = fallback;
      return fallback;
    }
    return require<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!in_.contains(key)) throw ConfigError("missing key '" + where(key) + "'");
    try {
      T v = in_.at(key).get<T>();
      out_[key] = in_.at(key);
      return v;
    } catch (const json::exception&) {
      throw ConfigError("key '" + where(key) + "' has the wrong type");
    }
  }

  /// Number or "inf".
  double norm_index(const std::string& key, double fallback) {
    if (!in_.contains(key)) {
      out_[key] = std::isinf(fallback) ? json("inf") : json(fallback);
      return fallback;
    }
    const json& v = in_.at(key);
    out_[key] = v;
    if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (v.is_number() && v.get<double>() >= 1.0) return v.get<double>();
    throw ConfigError("key '" + where(key) + "' must be a number >= 1 or \"inf\"");
  }

  /// Number, or [re, im].
  static cplx complex_of(const json& v, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError("'" + what + "' must be a number or [re, im]");
  }

  cplx complex(const std::string& key, cplx fallback) {
    if (!in_.contains(key)) {
      out_[key] = complex_json(fallback);
      return fallback;
    }
    out_[key] = in_.at(key);
    return complex_of(in_.at(key), where(key));
  }

  std::vector<cplx> complex_list(const std::string& key) {
    if (!in_.contains(key)) throw ConfigError("missing key '" + where(key) + "'");
    const json& v = in_.at(key);
    if (!v.is_array()) throw ConfigError("key '" + where(key) + "' must be a list");
    std::vector<cplx> out;
    for (size_t i = 0; i < v.size(); ++i) out.push_back(complex_of(v[i], where(key) + "[" + std::to_string(i) + "]"));
    out_[key] = v;
    return out;
  }

  Reader child(const std::string& key) {
    if (!in_.contains(key)) throw ConfigError("missing section '" + where(key) + "'");
    return Reader(in_.at(key), where(key));
  }

  Reader child_or_empty(const std::string& key) {
    static const json empty = json::object();
    return in_.contains(key) ? Reader(in_.at(key), where(key)) : Reader(empty, where(key));
  }

  void store(const std::string& key, Reader& sub) { out_[key] = sub.finish(); }

  /// Raw subtree, echoed verbatim.
  const json& raw(const std::string& key) {
    if (!in_.contains(key)) throw ConfigError("missing key '" + where(key) + "'");
    out_[key] = in_.at(key);
    return in_.at(key);
  }

  const json& finish() {
    for (auto it = in_.begin(); it != in_.end(); ++it)
      if (!out_.contains(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
    return out_;
  }

  static json complex_json(cplx c) {
    if (c.imag() == 0.0) return c.real();
    return json::array({c.real(), c.imag()});
  }

 private:
  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& in_;
  std::string path_;
  json out_;
};

struct CsvRow {
  int j;
  std::optional<double> error, bound, order_running;
};

struct RunResult {
  int status = 0;  // 0 pass, 2 expectation failure
  json document;
  std::vector<CsvRow> rows;
};

// --- spec readers --------------------------------------------------------------

inline Dilation read_dilation(Reader& r, int d) {
  std::optional<double> rate;
  if (r.has("rate")) rate = r.require<double>("rate");
  Mat m;
  if (r.has("matrix")) {
    const auto rows = r.require<std::vector<std::vector<double>>>("matrix");
    const auto d = static_cast<Eigen::Index>(rows.size());
    m.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != d) throw ConfigError("dilation matrix must be square");
      for (Eigen::Index k = 0; k < d; ++k) m(i, k) = rows[i][k];
    }
  } else {
    m = r.get<double>("scalar", 2.0) * Mat::Identity(d, d);
  }
  r.finish();
  if (m.rows() != d) throw ConfigError("dilation dimension differs from dim");
  return Dilation(m, rate);
}

inline Signal read_signal(Reader& r, int d) {
  const auto fam = r.require<std::string>("family");
  const int order = r.get<int>("max_order", 6);
  Signal s = Signal::zero(d);
  if (fam == "gaussian") {
    s = Signal::gaussian(d, r.get<double>("sigma", 1.0), order, r.get<double>("decay", 6.0));
  } else if (fam == "modulated_gaussian") {
    const auto om = r.require<std::vector<double>>("omega");
    if (static_cast<int>(om.size()) != d) throw ConfigError("omega must have one entry per dimension");
    s = Signal::modulated_gaussian(d, r.get<double>("sigma", 1.0), Eigen::Map<const Vec>(om.data(), d), order,
                                   r.get<double>("decay", 6.0));
  } else if (fam == "poly_times_gaussian") {
    s = Signal::poly_times_gaussian(d, r.require<std::vector<int>>("powers"), r.get<double>("sigma", 1.0), order,
                                    r.get<double>("decay", 6.0));
  } else if (fam == "bandlimited_triangle_spectrum") {
    s = Signal::bandlimited_triangle_spectrum(d, r.require<double>("a"), order);
  } else if (fam == "bandlimited_bump") {
    s = Signal::bandlimited_bump(d, r.require<double>("a"), order);
  } else if (fam == "zero") {
  } else {
    throw ConfigError("unknown signal family '" + fam + "'");
  }
  r.finish();
  return s;
}

inline AveragingScheme read_scheme(Reader& r) {
  const auto kind = r.require<std::string>("kind");
  const int budget = r.get<int>("moment_budget", 8);
  std::optional<AveragingScheme> s;
  if (kind == "constant") {
    s = AveragingScheme::constant(r.require<double>("h"), budget);
  } else if (kind == "point_masses") {
    const json& masses = r.raw("masses");
    if (!masses.is_array()) throw ConfigError("scheme.masses must be a list of {h, p}");
    std::vector<AveragingScheme::Node> nodes;
    for (const auto& m : masses) {
      if (!m.is_object() || !m.contains("h") || !m.contains("p") || m.size() != 2)
        throw ConfigError("scheme.masses entries must be {h, p}");
      nodes.push_back({m.at("h").get<double>(), m.at("p").get<double>()});
    }
    s = AveragingScheme::point_masses(nodes, [](double u) { return u; }, budget);
  } else if (kind == "uniform") {
    // u uniform on [lo, hi], radius h(u) = scale * u.
    const double lo = r.require<double>("lo"), hi = r.require<double>("hi");
    const double scale = r.get<double>("scale", 1.0);
    if (!(hi > lo)) throw ConfigError("scheme.hi must exceed scheme.lo");
    s = AveragingScheme::continuous([lo, hi](double) { return 1.0 / (hi - lo); }, lo, hi,
                                    [scale](double u) { return scale * u; }, budget);
  } else {
    throw ConfigError("unknown scheme kind '" + kind + "'");
  }
  r.finish();
  return *s;
}

inline DiffOperator read_operator(Reader& r, int d, const std::optional<AveragingScheme>& scheme) {
  const auto kind = r.get<std::string>("kind", "identity");
  std::optional<DiffOperator> l;
  if (kind == "identity") {
    l = DiffOperator::identity(d);
  } else if (kind == "coefficients") {
    const json& terms = r.raw("terms");
    if (!terms.is_array()) throw ConfigError("operator.terms must be a list of {beta, a}");
    DiffOperator::Coeffs c;
    for (const auto& t : terms) {
      if (!t.is_object() || !t.contains("beta") || !t.contains("a") || t.size() != 2)
        throw ConfigError("operator.terms entries must be {beta, a}");
      c[MultiIndex(t.at("beta").get<std::vector<int>>())] += Reader::complex_of(t.at("a"), "operator.terms.a");
    }
    l = DiffOperator(d, std::move(c));
  } else if (kind == "falsified") {
    if (!scheme) throw ConfigError("operator kind 'falsified' needs a 'scheme' section");
    l = falsified_operator(r.require<int>("order"), *scheme, d);
  } else {
    throw ConfigError("unknown operator kind '" + kind + "'");
  }
  r.finish();
  return *l;
}

inline Kernel read_kernel(Reader& r, int d, const std::optional<DiffOperator>& l) {
  const auto name = r.require<std::string>("name");
  std::optional<Kernel> k;
  if (name == "triangle") {
    k = Kernel::triangle(d);
  } else if (name == "bspline") {
    k = Kernel::bspline_product(d, r.require<int>("order"));
  } else if (name == "sinc") {
    k = Kernel::sinc(d);
  } else if (name == "reciprocal") {
    if (!l) throw ConfigError("kernel 'reciprocal' needs an operator");
    k = Kernel::make_reciprocal_kernel(*l, Box::cube(d, r.get<double>("half_width", 0.5)));
  } else if (name == "example4") {
    if (d != 1) throw ConfigError("kernel 'example4' is one-dimensional");
    if (r.has("b")) {
      const auto b = r.complex_list("b");
      if (b.size() != 3) throw ConfigError("kernel.b must have three entries");
      k = Kernel::example4(b[0], b[1], b[2]);
    } else if (r.has("params")) {
      Reader pr = r.child("params");
      const cplx a1 = pr.complex("a1", 0.0), a2 = pr.complex("a2", 0.0), a3 = pr.complex("a3", 0.0);
      r.store("params", pr);
      const auto b = solve_example4(a1, a2, a3);
      k = Kernel::example4(b.b1, b.b2, b.b3);
    } else {
      const DiffOperator op = l.value_or(DiffOperator::identity(1));
      if (op.order() > 3 || op.coefficient(MultiIndex({0})) != 1.0)
        throw ConfigError("solving example4 weights needs a_0 = 1 and order <= 3");
      const auto b = solve_example4(op.coefficient(MultiIndex({1})), op.coefficient(MultiIndex({2})),
                                    op.coefficient(MultiIndex({3})));
      k = Kernel::example4(b.b1, b.b2, b.b3);
    }
  } else if (name == "example3") {
    if (d != 2) throw ConfigError("kernel 'example3' is two-dimensional");
    if (r.has("b")) {
      const auto b = r.complex_list("b");
      if (b.size() != 2) throw ConfigError("kernel.b must have two entries");
      k = Kernel::example3(b[0], b[1]);
    } else if (r.has("params")) {
      Reader pr = r.child("params");
      const cplx a20 = pr.complex("a20", 0.0), a02 = pr.complex("a02", 0.0);
      r.store("params", pr);
      const auto b = solve_example3(a20, a02);
      k = Kernel::example3(b.b1, b.b2);
    } else {
      const DiffOperator op = l.value_or(DiffOperator::identity(2));
      for (const auto& [beta, a] : op.coeffs()) {
        const bool allowed = beta.is_zero() || beta == MultiIndex({2, 0}) || beta == MultiIndex({0, 2}) ||
                             (beta.total() > 2);
        if (!allowed) throw ConfigError("solving example3 weights needs a_10 = a_01 = a_11 = 0");
      }
      if (op.coefficient(MultiIndex({0, 0})) != 1.0) throw ConfigError("solving example3 weights needs a_0 = 1");
      const auto b = solve_example3(op.coefficient(MultiIndex({2, 0})), op.coefficient(MultiIndex({0, 2})));
      k = Kernel::example3(b.b1, b.b2);
    }
  } else {
    throw ConfigError("unknown kernel '" + name + "'");
  }
  r.finish();
  return *k;
}

inline Grid read_grid(Reader& r, int d, std::optional<int> default_n = std::nullopt) {
  Grid g;
  g.dim = d;
  g.half_width = r.get<double>("T", 4.0);
  g.per_axis = r.get<int>("n", default_n.value_or(d == 1 ? 4097 : 129));
  r.finish();
  if (g.per_axis < 2 || !(g.half_width > 0.0)) throw ConfigError("grid needs n >= 2 and T > 0");
  return g;
}

inline TruncationPolicy read_truncation(Reader& r, const Kernel& k) {
  const std::string fallback = k.form() == Kernel::Form::SplineCombo ? "support_exact" : "radius";
  const auto mode = r.get<std::string>("mode", fallback);
  TruncationPolicy t;
  if (mode == "support_exact") {
    t = TruncationPolicy::support_exact();
  } else if (mode == "radius") {
    t = TruncationPolicy::box(r.get<long>("R", 2000));
  } else {
    throw ConfigError("unknown truncation mode '" + mode + "'");
  }
  r.finish();
  return t;
}

// --- experiment bodies ---------------------------------------------------------

namespace detail {

struct Expect {
  json checks = json::array();
  bool ok = true;
  void check(const std::string& what, bool pass, json observed, json expected) {
    checks.push_back({{"check", what}, {"pass", pass}, {"observed", std::move(observed)}, {"expected", std::move(expected)}});
    ok = ok && pass;
  }
};

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline int dim_of(Reader& r) {
  const int d = r.get<int>("dim", 1);
  if (d < 1 || d > 3) throw ConfigError("dim must be 1, 2 or 3");
  return d;
}

inline std::pair<int, int> read_levels(Reader& r) {
  Reader lv = r.child("levels");
  const int lo = lv.require<int>("j_min"), hi = lv.require<int>("j_max");
  r.store("levels", lv);
  if (hi - lo < 2) throw ConfigError("need ≥ 3 levels (j_max - j_min >= 2)");
  return {lo, hi};
}

inline std::optional<double> running_order(const std::vector<int>& js, const std::vector<double>& errs, double base,
                                           int window) {
  if (js.size() < 3) return std::nullopt;
  for (double e : errs)
    if (!(e > 0.0)) return std::nullopt;
  return fit_order(js, errs, base, window).order;
}

}  // namespace detail

inline RunResult run_converge(Reader& r) {
  const int d = detail::dim_of(r);
  std::optional<AveragingScheme> scheme;
  if (r.has("scheme")) {
    Reader s = r.child("scheme");
    scheme = read_scheme(s);
    r.store("scheme", s);
  }
  const auto samples = r.get<std::string>("samples", "exact");
  if (samples != "exact" && samples != "falsified") throw ConfigError("samples must be 'exact' or 'falsified'");
  if (samples == "falsified" && !scheme) throw ConfigError("falsified samples need a 'scheme' section");
  Reader ro = r.child_or_empty("operator");
  const DiffOperator l = read_operator(ro, d, scheme);
  r.store("operator", ro);
  Reader rk = r.child("kernel");
  const Kernel g = read_kernel(rk, d, l);
  r.store("kernel", rk);
  Reader rs = r.child("signal");
  const Signal f = read_signal(rs, d);
  r.store("signal", rs);
  Reader rd = r.child_or_empty("dilation");
  const Dilation m = read_dilation(rd, d);
  r.store("dilation", rd);
  const auto [jlo, jhi] = detail::read_levels(r);
  const double p = r.norm_index("p", 2.0);
  Reader rg = r.child_or_empty("grid");
  const Grid grid = read_grid(rg, d);
  r.store("grid", rg);
  Reader rt = r.child_or_empty("truncation");
  const TruncationPolicy trunc = read_truncation(rt, g);
  r.store("truncation", rt);
  const int window = r.get<int>("window", 4);
  const double base = r.get<double>("base", m.isotropic() ? m.min_eig_mag() : m.rate());
  Reader re = r.child_or_empty("expect");
  const double omin = re.get<double>("order_min", -std::numeric_limits<double>::max());
  const double omax = re.get<double>("order_max", std::numeric_limits<double>::max());
  r.store("expect", re);

  const auto xs = grid.points();
  std::vector<cplx> exact(xs.size());
  mexpand::detail::parallel_for(xs.size(), [&](size_t i) { exact[i] = f.value(xs[i]); });
  RunResult out;
  std::vector<int> js;
  std::vector<double> errs;
  json table = json::array();
  for (int j = jlo; j <= jhi; ++j) {
    const CoefficientRule rule =
        samples == "exact" ? differential_coefficients(l, f, m, j) : falsified_coefficients(f, m, j, *scheme);
    const auto v = Expansion(g, m, j, rule, trunc).evaluate(xs);
    const double e = lp_error(exact, v.values, p, grid.cell_volume());
    js.push_back(j);
    errs.push_back(e);
    const auto running = detail::running_order(js, errs, base, window);
    out.rows.push_back({j, e, std::nullopt, running});
    table.push_back({{"j", j}, {"error", e}, {"tail_estimate", v.tail_estimate}, {"tail_warning", v.tail_warning}});
  }
  detail::Expect ex;
  json results = {{"levels", table}, {"base", base}, {"p", std::isinf(p) ? json("inf") : json(p)}};
  const auto fit = fit_order(js, errs, base, window);
  results["fitted_order"] = fit.order;
  results["fit_residual"] = fit.residual;
  ex.check("fitted_order", fit.order >= omin && fit.order <= omax, fit.order, json::array({omin, omax}));
  out.document = {{"results", results}, {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_strang_fix(Reader& r) {
  const int d = detail::dim_of(r);
  Reader rk = r.child("kernel");
  const Kernel g = read_kernel(rk, d, std::nullopt);
  r.store("kernel", rk);
  const int n_max = r.get<int>("n_max", 8);
  const double tol = r.get<double>("tol", 1e-7);
  Reader re = r.child_or_empty("expect");
  const int want = re.get<int>("order", -1);
  r.store("expect", re);
  const int order = strang_fix_order(g, n_max, tol);
  detail::Expect ex;
  if (want >= 0) ex.check("strang_fix_order", order == want, order, want);
  RunResult out;
  out.document = {{"results", {{"strang_fix_order", order}}}, {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_compat(Reader& r) {
  const int d = detail::dim_of(r);
  std::optional<AveragingScheme> scheme;
  if (r.has("scheme")) {
    Reader s = r.child("scheme");
    scheme = read_scheme(s);
    r.store("scheme", s);
  }
  Reader ro = r.child_or_empty("operator");
  const DiffOperator l = read_operator(ro, d, scheme);
  r.store("operator", ro);
  Reader rk = r.child("kernel");
  const Kernel g = read_kernel(rk, d, l);
  r.store("kernel", rk);
  const int n = r.get<int>("n", 4);
  const double delta = r.get<double>("delta", 0.4);
  const double tol = r.get<double>("tol", 1e-9);
  Reader re = r.child_or_empty("expect");
  const double dmax = re.get<double>("defect_max", std::numeric_limits<double>::max());
  const bool want_strict = re.get<bool>("strict", false);
  r.store("expect", re);
  const double defect = compatibility_defect(g, l, n);
  const bool strict = strict_compatibility(g, l, delta, tol);
  detail::Expect ex;
  ex.check("compatibility_defect", defect <= dmax, defect, dmax);
  if (want_strict) ex.check("strict_compatibility", strict, strict, true);
  RunResult out;
  out.document = {{"results", {{"compatibility_defect", defect}, {"strict_compatibility", strict}}},
                  {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_solve_coeffs(Reader& r) {
  const auto which = r.require<std::string>("example");
  const auto a = r.complex_list("a");
  Reader re = r.child_or_empty("expect");
  std::optional<std::vector<cplx>> want;
  if (re.has("b")) want = re.complex_list("b");
  const double tol = re.get<double>("tol", 1e-12);
  r.store("expect", re);
  std::vector<cplx> b;
  double defect = 0.0;
  if (which == "example4") {
    if (a.size() != 3) throw ConfigError("example4 needs a = [a1, a2, a3]");
    const auto s = solve_example4(a[0], a[1], a[2]);
    b = {s.b1, s.b2, s.b3};
    defect = compatibility_defect(Kernel::example4(s.b1, s.b2, s.b3), DiffOperator::univariate({1.0, a[0], a[1], a[2]}), 4);
  } else if (which == "example3") {
    if (a.size() != 2) throw ConfigError("example3 needs a = [a20, a02]");
    const auto s = solve_example3(a[0], a[1]);
    b = {s.b1, s.b2};
    const DiffOperator l(2, {{MultiIndex({0, 0}), 1.0}, {MultiIndex({2, 0}), a[0]}, {MultiIndex({0, 2}), a[1]}});
    defect = compatibility_defect(Kernel::example3(s.b1, s.b2), l, 3);
  } else {
    throw ConfigError("unknown example '" + which + "' (expected example3 or example4)");
  }
  json bj = json::array();
  for (const auto& v : b) bj.push_back(detail::complex_json(v));
  detail::Expect ex;
  if (want) {
    if (want->size() != b.size()) throw ConfigError("expect.b has the wrong length");
    double dev = 0.0;
    for (size_t i = 0; i < b.size(); ++i) dev = std::max(dev, std::abs(b[i] - (*want)[i]));
    ex.check("b", dev <= tol, dev, tol);
  }
  RunResult out;
  out.document = {{"results", {{"b", bj}, {"compatibility_defect", defect}}}, {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_reproduce(Reader& r) {
  const int d = detail::dim_of(r);
  Reader ro = r.child_or_empty("operator");
  const DiffOperator l = read_operator(ro, d, std::nullopt);
  r.store("operator", ro);
  Reader rk = r.child_or_empty("kernel");
  const Kernel g = r.has("kernel") ? read_kernel(rk, d, l) : Kernel::sinc(d);
  if (r.has("kernel")) r.store("kernel", rk);
  Reader rs = r.child("signal");
  const Signal f = read_signal(rs, d);
  r.store("signal", rs);
  Reader rd = r.child_or_empty("dilation");
  const Dilation m = read_dilation(rd, d);
  r.store("dilation", rd);
  const int j = r.get<int>("j", 0);
  Reader rg = r.child_or_empty("grid");
  const Grid grid = read_grid(rg, d);
  r.store("grid", rg);
  Reader rt = r.child_or_empty("truncation");
  const TruncationPolicy trunc = read_truncation(rt, g);
  r.store("truncation", rt);
  Reader re = r.child_or_empty("expect");
  const double emax = re.get<double>("sup_error_max", 1e-5);
  r.store("expect", re);

  const auto xs = grid.points();
  const auto v = differential_expansion(g, l, f, m, j, trunc).evaluate(xs);
  std::vector<cplx> exact(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) exact[i] = f.value(xs[i]);
  const double err = lp_error(exact, v.values, std::numeric_limits<double>::infinity(), 1.0);
  detail::Expect ex;
  ex.check("sup_error", err <= emax, err, emax);
  RunResult out;
  out.rows.push_back({j, err, std::nullopt, std::nullopt});
  out.document = {{"results", {{"sup_error", err}, {"tail_estimate", v.tail_estimate}, {"j", j}}},
                  {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_brown(Reader& r) {
  const int d = detail::dim_of(r);
  Reader ro = r.child_or_empty("operator");
  const DiffOperator l = read_operator(ro, d, std::nullopt);
  r.store("operator", ro);
  Reader rk = r.child_or_empty("kernel");
  const Kernel g = r.has("kernel") ? read_kernel(rk, d, l) : Kernel::sinc(d);
  if (r.has("kernel")) r.store("kernel", rk);
  Reader rs = r.child("signal");
  const Signal f = read_signal(rs, d);
  r.store("signal", rs);
  Reader rd = r.child_or_empty("dilation");
  const Dilation m = read_dilation(rd, d);
  r.store("dilation", rd);
  const auto [jlo, jhi] = detail::read_levels(r);
  const double delta = r.get<double>("delta", 0.4);
  Reader rg = r.child_or_empty("grid");
  const Grid grid = read_grid(rg, d);
  r.store("grid", rg);
  Reader rt = r.child_or_empty("truncation");
  const TruncationPolicy trunc = read_truncation(rt, g);
  r.store("truncation", rt);
  const int window = r.get<int>("window", 4);
  Reader re = r.child_or_empty("expect");
  const double margin = re.get<double>("margin", 1.5);
  const double slack = re.get<double>("slope_slack", 0.1);
  r.store("expect", re);

  std::vector<int> js;
  for (int j = jlo; j <= jhi; ++j) js.push_back(j);
  const auto rows = brown_check(g, l, f, m, js, ExpansionPlan{grid, trunc}, delta);
  RunResult out;
  detail::Expect ex;
  json table = json::array();
  const double c = rows.front().bound > 0.0 ? rows.front().sup_error / rows.front().bound : 0.0;
  double worst = 0.0;
  std::vector<double> bounds;
  std::vector<int> seen;
  bool positive = true;
  for (const auto& row : rows) {
    const double limit = margin * c * row.bound;
    worst = std::max(worst, row.bound > 0.0 ? row.sup_error / (c * row.bound) : (row.sup_error > 0.0 ? 1e300 : 0.0));
    seen.push_back(row.j);
    bounds.push_back(row.bound);
    positive = positive && row.bound > 0.0;
    out.rows.push_back({row.j, row.sup_error, row.bound,
                        positive ? detail::running_order(seen, bounds, m.rate(), window) : std::nullopt});
    table.push_back({{"j", row.j}, {"sup_error", row.sup_error}, {"bound", row.bound}, {"limit", limit}});
  }
  json results = {{"levels", table}, {"C", c}, {"worst_ratio_over_C", worst}, {"rate", m.rate()}};
  ex.check("sup_error <= margin * C * bound", worst <= margin, worst, margin);
  if (positive && f.decay_exponent() < std::numeric_limits<double>::infinity()) {
    const double eps = f.decay_exponent() - l.order() - d;
    const auto fit = fit_order(js, bounds, m.rate(), window);
    results["bound_slope"] = fit.order;
    ex.check("bound slope >= N + eps - slack", fit.order >= l.order() + eps - slack, fit.order,
             l.order() + eps - slack);
  }
  out.document = {{"results", results}, {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_falsify(Reader& r) {
  const int d = detail::dim_of(r);
  Reader s = r.child("scheme");
  const AveragingScheme scheme = read_scheme(s);
  r.store("scheme", s);
  const int n = r.get<int>("order", 3);
  const DiffOperator l = falsified_operator(n, scheme, d);
  Reader rk = r.child("kernel");
  const Kernel g = read_kernel(rk, d, l);
  r.store("kernel", rk);
  Reader rs = r.child("signal");
  const Signal f = read_signal(rs, d);
  r.store("signal", rs);
  Reader rd = r.child_or_empty("dilation");
  const Dilation m = read_dilation(rd, d);
  r.store("dilation", rd);
  const auto [jlo, jhi] = detail::read_levels(r);
  const double p = r.norm_index("p", std::numeric_limits<double>::infinity());
  Reader rg = r.child_or_empty("grid");
  const Grid grid = read_grid(rg, d);
  r.store("grid", rg);
  Reader rt = r.child_or_empty("truncation");
  const TruncationPolicy trunc = read_truncation(rt, g);
  r.store("truncation", rt);
  const int window = r.get<int>("window", 4);
  Reader re = r.child_or_empty("expect");
  const double target = std::pow(m.min_eig_mag(), -(n + 1));
  const double rlo = re.get<double>("ratio_min", 0.8 * target);
  const double rhi = re.get<double>("ratio_max", 1.25 * target);
  r.store("expect", re);

  RunResult out;
  detail::Expect ex;
  json table = json::array();
  std::vector<int> js;
  std::vector<double> res;
  for (int j = jlo; j <= jhi; ++j) {
    const double v = expansion_residual_norm(g, f, m, j, scheme, n, p, ExpansionPlan{grid, trunc});
    js.push_back(j);
    res.push_back(v);
    out.rows.push_back({j, v, std::nullopt, detail::running_order(js, res, m.min_eig_mag(), window)});
    json row = {{"j", j}, {"residual", v}};
    if (res.size() > 1) {
      const double ratio = v / res[res.size() - 2];
      row["ratio"] = ratio;
      ex.check("ratio at j=" + std::to_string(j), ratio >= rlo && ratio <= rhi, ratio, json::array({rlo, rhi}));
    }
    table.push_back(row);
  }
  json coeffs = json::object();
  for (const auto& [beta, a] : l.coeffs()) coeffs[beta.str()] = detail::complex_json(a);
  out.document = {{"results", {{"levels", table}, {"target_ratio", target}, {"operator", coeffs}}},
                  {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline RunResult run_ode_demo(Reader& r) {
  const int d = detail::dim_of(r);
  Reader ro = r.child_or_empty("operator");
  const DiffOperator l = read_operator(ro, d, std::nullopt);
  r.store("operator", ro);
  Reader rs = r.child("signal");
  const Signal g = read_signal(rs, d);
  r.store("signal", rs);
  const long radius = r.get<long>("R", 200);
  Reader rg = r.child_or_empty("grid");
  const Grid grid = read_grid(rg, d, d == 1 ? 129 : 33);
  r.store("grid", rg);
  Reader re = r.child_or_empty("expect");
  const double rmax = re.get<double>("residual_max", 1e-4);
  r.store("expect", re);
  const auto rep = ode_demo(l, g, radius, grid);
  detail::Expect ex;
  ex.check("residual", rep.residual <= rmax, rep.residual, rmax);
  RunResult out;
  out.document = {{"results",
                   {{"residual", rep.residual},
                    {"solution_sup", rep.solution_sup},
                    {"R", rep.radius},
                    {"grid_points", rep.grid_points},
                    {"kernel_evaluations", rep.kernel_evaluations}}},
                  {"expectations", ex.checks}};
  out.status = ex.ok ? 0 : 2;
  return out;
}

inline const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k{"converge", "strang-fix", "compat",  "solve-coeffs",
                                          "reproduce", "brown",      "falsify", "ode-demo"};
  return k;
}

/// Runs one experiment. Throws ConfigError / InvalidSpec for bad input.
inline RunResult run(const std::string& kind, const json& config, std::optional<std::uint64_t> seed = std::nullopt) {
  if (std::find(kinds().begin(), kinds().end(), kind) == kinds().end())
    throw ConfigError("unknown experiment kind '" + kind + "'");
  Reader r(config, "");
  const auto declared = r.get<std::string>("kind", kind);
  if (declared != kind) throw ConfigError("config declares kind '" + declared + "' but '" + kind + "' was requested");
  RunResult out;
  if (kind == "converge") out = run_converge(r);
  else if (kind == "strang-fix") out = run_strang_fix(r);
  else if (kind == "compat") out = run_compat(r);
  else if (kind == "solve-coeffs") out = run_solve_coeffs(r);
  else if (kind == "reproduce") out = run_reproduce(r);
  else if (kind == "brown") out = run_brown(r);
  else if (kind == "falsify") out = run_falsify(r);
  else out = run_ode_demo(r);
  json doc = {{"kind", kind}, {"config", r.finish()}, {"pass", out.status == 0}};
  doc["seed"] = seed ? json(*seed) : json(nullptr);
  doc["results"] = out.document["results"];
  doc["expectations"] = out.document["expectations"];
  out.document = std::move(doc);
  return out;
}

inline std::string format_csv(const std::vector<CsvRow>& rows) {
  auto num = [](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
  };
  std::string s = "j,error,bound,order_running\n";
  for (const auto& r : rows) s += std::to_string(r.j) + "," + num(r.error) + "," + num(r.bound) + "," + num(r.order_running) + "\n";
  return s;
}

}  // namespace cli
}  // namespace mexpand

#endif  // MEXPAND_EXPERIMENTS_HPP
