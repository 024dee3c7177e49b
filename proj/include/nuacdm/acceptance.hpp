#pragma once
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "data_io.hpp"
#include "problems.hpp"
#include "solvers.hpp"

// Acceptance checks shared by the test suite and `nuacdm check`. Each check
// returns one pass/fail line with the numbers it was decided on.

namespace nuacdm {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  unsigned jobs = 1;
};

namespace acceptance {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline CriterionResult start(int id, std::string title) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

struct DiagInstance {
  DiagQuadratic q;
  Vector x0;
};

// n = 20, L log-uniform in [1e-2, 1e2], minimizer and start standard normal.
inline DiagInstance diag_instance(std::uint64_t seed) {
  const Index n = 20;
  Vector l = norm_profile::log_uniform(n, 1e-2, 1e2, stream_seed(seed, 0));
  Rng rng(stream_seed(seed, 1));
  Vector c(n), x0(n);
  for (Index i = 0; i < n; ++i) c[i] = rng.normal();
  for (Index i = 0; i < n; ++i) x0[i] = rng.normal();
  return {DiagQuadratic(std::move(l), std::move(c)), std::move(x0)};
}

inline bool same_trace(const ConvergenceTrace& a, const ConvergenceTrace& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& r = a.records[k];
    const auto& s = b.records[k];
    if (r.iter != s.iter || r.epoch != s.epoch || r.value != s.value || r.dist != s.dist) return false;
  }
  return true;
}

inline bool same_result(const SolverResult& a, const SolverResult& b) {
  return same_trace(a.trace, b.trace) && a.solution == b.solution;
}

struct InvariantTotals {
  std::int64_t runs = 0;
  std::int64_t descent_checks = 0;
  std::int64_t mirror_checks = 0;
  double max_descent_excess = -std::numeric_limits<double>::infinity();
  double max_mirror_residual = 0.0;
  std::vector<std::string> violations;
};

template <CoordOracle O>
void invariant_runs(const std::string& label, const O& oracle, const SmoothnessProfile& profile,
                    InvariantTotals& tot) {
  const Index n = oracle.dim();
  Rng rng(stream_seed(0xc3, static_cast<std::uint64_t>(n)));
  Vector x0(n);
  for (Index i = 0; i < n; ++i) x0[i] = rng.normal();
  Vector p(n);
  for (Index i = 0; i < n; ++i) p[i] = rng.uniform(0.1, 1.0);
  p /= p.sum();

  std::vector<std::pair<std::string, std::function<SolverResult(const SolverConfig&)>>> algos;
  if (profile.strongly_convex()) {
    algos.emplace_back("nu-acdm", [&](const SolverConfig& c) { return nu_acdm(oracle, profile, x0, c); });
    algos.emplace_back("generalized", [&](const SolverConfig& c) {
      return generalized_accel(oracle, profile, x0, c, p);
    });
  }
  algos.emplace_back("nu-acdm-ns", [&](const SolverConfig& c) { return nu_acdm_ns(oracle, profile, x0, c); });
  algos.emplace_back("generalized-ns", [&](const SolverConfig& c) {
    return generalized_accel_ns(oracle, profile, x0, c, p);
  });
  algos.emplace_back("acdm", [&](const SolverConfig& c) { return acdm(oracle, profile, x0, c); });
  algos.emplace_back("rcdm", [&](const SolverConfig& c) { return rcdm(oracle, profile, x0, c); });

  for (std::size_t a = 0; a < algos.size(); ++a) {
    SolverConfig cfg;
    cfg.iters = 2000;
    cfg.seed = a;
    cfg.check = CheckLevel::full;
    ++tot.runs;
    try {
      const SolverResult r = algos[a].second(cfg);
      tot.descent_checks += r.checks.descent_checks;
      tot.mirror_checks += r.checks.mirror_checks;
      tot.max_descent_excess = std::max(tot.max_descent_excess, r.checks.max_descent_excess);
      tot.max_mirror_residual = std::max(tot.max_mirror_residual, r.checks.max_mirror_residual);
    } catch (const InvariantViolation& e) {
      tot.violations.push_back(label + "/" + algos[a].first + ": " + e.what());
    }
  }
}

// Every algorithm with full checking on small instances of each problem, at
// beta in {0, 0.5, 1}.
inline InvariantTotals invariant_sweep() {
  InvariantTotals tot;
  const DiagInstance diag = diag_instance(3);

  Rng rng(0xd1);
  Eigen::MatrixXd b(10, 10);
  for (Index i = 0; i < 10; ++i) {
    for (Index j = 0; j < 10; ++j) b(i, j) = rng.normal();
  }
  Eigen::MatrixXd q = b.transpose() * b;
  q.diagonal().array() += 0.1;
  Vector lin(10);
  for (Index i = 0; i < 10; ++i) lin[i] = rng.normal();
  const DenseQuadratic dense(q, lin);

  const LinearSystem sys = gen_linear_system(30, 10, 0.2, 0xd2);
  const KaczmarzQuadratic kacz(sys.a, sys.b);

  const Dataset ds = gen_skewed_dataset(30, 5, norm_profile::log_uniform(30, 0.3, 3.0, 0xd3), 0xd4);
  const ErmDual ridge(ErmVariant::ridge, ds.features, ds.labels, 1e-2);
  const ErmDual lasso(ErmVariant::smoothed_lasso, ds.features, ds.labels, 1e-2, 1e-3);
  const ErmDual penalty(ErmVariant::l1l2_penalty, ds.features, ds.labels, 1e-2);

  for (double beta : {0.0, 0.5, 1.0}) {
    const std::string b = "beta=" + fmt("%.1f", beta);
    invariant_runs("diag/" + b, diag.q, diag.q.profile(beta), tot);
    invariant_runs("dense/" + b, dense, dense.profile(beta), tot);
    invariant_runs("kaczmarz/" + b, kacz, kacz.profile(beta), tot);
    invariant_runs("ridge/" + b, ridge, ridge.profile(beta), tot);
    invariant_runs("lasso/" + b, lasso, lasso.profile(beta), tot);
    invariant_runs("penalty/" + b, penalty, penalty.profile(beta), tot);
  }
  return tot;
}

// Least-squares slope and R^2 of log(dist) against iteration.
struct LogFit {
  double slope = 0.0;
  double r2 = 0.0;
  int points = 0;
};

inline LogFit fit_log_decay(const ConvergenceTrace& t, double hi, double lo) {
  std::vector<double> xs, ys;
  for (const auto& r : t.records) {
    if (r.dist && *r.dist <= hi && *r.dist >= lo) {
      xs.push_back(static_cast<double>(r.iter));
      ys.push_back(std::log(*r.dist));
    }
  }
  LogFit f;
  f.points = static_cast<int>(xs.size());
  if (f.points < 3) return f;
  const double c = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / c;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / c;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  f.slope = sxy / sxx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

}  // namespace detail

// -- 1 ----------------------------------------------------------------------
inline CriterionResult convex_rate(const AcceptanceOptions& opt) {
  CriterionResult res = detail::start(1, "convex rate bound, diagonal quadratic, 200 seeds");
  const auto inst = detail::diag_instance(1);
  const SmoothnessProfile profile = inst.q.profile(0.0);
  const auto seeds = detail::seed_range(200);
  auto run = [&](const SolverConfig& cfg) { return nu_acdm_ns(inst.q, profile, inst.x0, cfg); };
  bool ok = true;
  std::ostringstream d;
  for (std::int64_t t : {10, 100, 1000}) {
    const BoundCheck c{t, mean_final_gap(run, t, seeds, 0.0, opt.jobs),
                       convex_rate_bound(profile, inst.x0, inst.q.minimizer(), t)};
    ok = ok && c.holds(1.2);
    d << "T=" << t << " mean/bound=" << detail::fmt("%.3g", c.mean_gap / c.bound) << " ";
  }
  res.passed = ok;
  res.detail = d.str();
  return res;
}

// -- 2 ----------------------------------------------------------------------
inline CriterionResult strongly_convex_rate(const AcceptanceOptions& opt) {
  CriterionResult res = detail::start(2, "strongly convex decay at T = ceil(6 / tau), 200 seeds");
  const auto inst = detail::diag_instance(2);
  const SmoothnessProfile profile = inst.q.profile(0.0);
  const double s = s_alpha(profile, sampling_exponent(profile));
  const double tau = strongly_convex_parameters(s * s, profile.sigma_beta()).tau;
  const auto t = static_cast<std::int64_t>(std::ceil(6.0 / tau));
  const double f0 = value_at(inst.q, inst.x0);
  auto run = [&](const SolverConfig& cfg) { return nu_acdm(inst.q, profile, inst.x0, cfg); };
  const double mean = mean_final_gap(run, t, detail::seed_range(200), 0.0, opt.jobs);
  const double bound = strongly_convex_rate_bound(profile, f0, t);
  res.passed = mean <= 1.2 * bound;
  res.detail = "T=" + std::to_string(t) + " mean=" + detail::fmt("%.4g", mean) +
               " bound=" + detail::fmt("%.4g", bound);
  return res;
}

// -- 3 ----------------------------------------------------------------------
inline CriterionResult descent_lemma(const AcceptanceOptions&) {
  CriterionResult res = detail::start(3, "coordinate descent guarantee at every checked iteration");
  const auto tot = detail::invariant_sweep();
  res.passed = tot.violations.empty() && tot.descent_checks > 0;
  res.detail = std::to_string(tot.runs) + " runs, " + std::to_string(tot.descent_checks) +
               " checks, max relative excess " + detail::fmt("%.3g", tot.max_descent_excess);
  if (!tot.violations.empty()) res.detail += "; first violation: " + tot.violations.front();
  return res;
}

// -- 4 ----------------------------------------------------------------------
inline CriterionResult mirror_optimality(const AcceptanceOptions&) {
  CriterionResult res = detail::start(4, "mirror step first-order residual <= 1e-9");
  const auto tot = detail::invariant_sweep();
  res.passed = tot.violations.empty() && tot.mirror_checks > 0 && tot.max_mirror_residual <= 1e-9;
  res.detail = std::to_string(tot.mirror_checks) + " checks, max residual " +
               detail::fmt("%.3g", tot.max_mirror_residual);
  if (!tot.violations.empty()) res.detail += "; first violation: " + tot.violations.front();
  return res;
}

// -- 5 ----------------------------------------------------------------------
inline CriterionResult schedule_identities(const AcceptanceOptions&) {
  CriterionResult res = detail::start(5, "step-size schedule identities, 1e4 parameterizations");
  Rng rng(0x5c4ed);
  double worst_sc = 0.0, worst_ns = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const double m = std::pow(10.0, rng.uniform(-3.0, 6.0));
    const double sigma = m * std::pow(10.0, rng.uniform(-8.0, 0.0));
    const AccelParameters sc = strongly_convex_parameters(m, sigma);
    const double lhs = 1.0 + sc.eta * sigma;
    const double rhs = 1.0 / (1.0 - sc.tau);
    worst_sc = std::max(worst_sc, std::abs(lhs - rhs) / std::max(1.0, rhs));
    worst_sc = std::max(worst_sc, std::abs(sc.eta * sc.tau * m - 1.0));

    const auto k = static_cast<std::int64_t>(rng.index(1000000)) + 1;
    const double eta_k = convex_parameters(k - 1, m).eta;
    const AccelParameters next = convex_parameters(k, m);
    const double a = eta_k * eta_k * m;
    const double b = next.eta * next.eta * m - next.eta + 1.0 / (4.0 * m);
    const double scale = std::max({1.0, std::abs(a), next.eta * next.eta * m});
    worst_ns = std::max(worst_ns, std::abs(a - b) / scale);
    worst_ns = std::max(worst_ns, std::abs(next.tau * next.eta * m - 1.0));
  }
  res.passed = worst_sc <= 1e-12 && worst_ns <= 1e-12;
  res.detail = "max relative error " + detail::fmt("%.3g", worst_sc) + " (strongly convex), " +
               detail::fmt("%.3g", worst_ns) + " (convex)";
  return res;
}

// -- 6 ----------------------------------------------------------------------
inline CriterionResult speedup_values(const AcceptanceOptions&) {
  CriterionResult res = detail::start(6, "speed-up factors of generated systems");
  const std::vector<double> r = {1.0, 0.8, 0.6, 0.4, 0.2, 0.1};
  const std::vector<double> printed = {1.0, 1.0992, 1.2464, 1.4025, 1.6243, 1.7379};
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = speedup_table(r);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = secs < 1.0;
  std::ostringstream d;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double rel = std::abs(rows[k].theory - printed[k]) / printed[k];
    ok = ok && rel <= 0.03;
    d << rows[k].r << ":" << detail::fmt("%.4f", rows[k].theory) << " ";
  }
  res.passed = ok;
  res.detail = d.str();
  return res;
}

// -- 7 ----------------------------------------------------------------------
inline CriterionResult kaczmarz_race(const AcceptanceOptions& opt) {
  CriterionResult res = detail::start(7, "300x100 r=0.1 race to 1e-8, 10 seeds");
  RaceOptions ro;
  ro.jobs = opt.jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const RaceResult race = run_kaczmarz_race(300, 100, 0.1, detail::seed_range(10), 1e-8, ro);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double nu = race.at(algo::nu_acdm).median_epochs();
  const double ac = race.at(algo::acdm).median_epochs();
  const double kz = race.at(algo::kaczmarz).median_epochs();
  res.passed = nu < ac && ac < kz && ac / nu >= 1.3 && secs < 120.0;
  res.detail = "median epochs nu-acdm=" + detail::fmt("%.1f", nu) + " acdm=" + detail::fmt("%.1f", ac) +
               " kaczmarz=" + detail::fmt("%.1f", kz) + " ratio=" + detail::fmt("%.3f", ac / nu);
  return res;
}

// -- 8 ----------------------------------------------------------------------
inline CriterionResult oracle_correctness(const AcceptanceOptions&) {
  CriterionResult res = detail::start(8, "finite-difference gradients and conjugate grid suprema");
  double worst_grad = 0.0;
  const Dataset ds = gen_skewed_dataset(25, 6, norm_profile::log_uniform(25, 0.3, 3.0, 0xa8), 0xa9);
  const LinearSystem sys = gen_linear_system(25, 6, 0.2, 0xaa);
  const KaczmarzQuadratic kacz(sys.a, sys.b);
  const ErmDual ridge(ErmVariant::ridge, ds.features, ds.labels, 0.1);
  const ErmDual lasso(ErmVariant::smoothed_lasso, ds.features, ds.labels, 0.05, 0.5);
  const ErmDual penalty(ErmVariant::l1l2_penalty, ds.features, ds.labels, 0.1);
  const double h = 1e-5, margin = 1e-3;

  auto away_from_kinks = [&](const ErmDual& p, const Vector& y) {
    if (p.variant() == ErmVariant::l1l2_penalty) {
      for (Index i = 0; i < y.size(); ++i) {
        if (std::abs(std::abs(y[i]) - 1.0) < margin) return false;
      }
    }
    if (p.variant() == ErmVariant::smoothed_lasso) {
      const Vector z = -p.data().multiply_transpose(y) / static_cast<double>(p.dim());
      for (Index j = 0; j < z.size(); ++j) {
        if (std::abs(std::abs(z[j]) - p.lambda()) < margin) return false;
      }
    }
    return true;
  };
  Rng rng(0xab);
  auto draw = [&](Index n, double scale) {
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = scale * rng.normal();
    return y;
  };
  for (int pt = 0; pt < 20; ++pt) {
    const Vector yk = draw(kacz.dim(), 1.0);
    for (Index i = 0; i < kacz.dim(); ++i) worst_grad = std::max(worst_grad, grad_check(kacz, yk, i, h));
    for (const ErmDual* p : {&ridge, &lasso, &penalty}) {
      Vector y = draw(p->dim(), 1.5);
      while (!away_from_kinks(*p, y)) y = draw(p->dim(), 1.5);
      for (Index i = 0; i < p->dim(); ++i) worst_grad = std::max(worst_grad, grad_check(*p, y, i, h));
    }
  }

  // sup_t s t - phi(t) over a grid on [-3, 3]
  auto grid_sup = [](const std::function<double(double)>& g) {
    double best = -std::numeric_limits<double>::infinity();
    for (int k = -3000; k <= 3000; ++k) best = std::max(best, g(k * 1e-3));
    return best;
  };
  double worst_conj = 0.0;
  for (int k = -60; k <= 60; ++k) {
    const double s = k * 0.05;
    for (double l : {-0.5, 0.0, 0.5}) {
      const double sup = grid_sup([&](double t) { return s * t - conjugate::penalty_loss(t, l); });
      worst_conj = std::max(worst_conj, std::abs(sup - conjugate::penalty_loss_conj(s, l)));
    }
    const double lam = 0.5, lam2 = 1.0;
    const double sup = grid_sup([&](double w) { return s * w - conjugate::elastic_reg(w, lam, lam2); });
    worst_conj = std::max(worst_conj, std::abs(sup - conjugate::elastic_reg_conj(s, lam, lam2)));
  }
  res.passed = worst_grad <= 1e-6 && worst_conj <= 1e-6;
  res.detail = "max gradient error " + detail::fmt("%.3g", worst_grad) + ", max conjugate error " +
               detail::fmt("%.3g", worst_conj);
  return res;
}

// -- 9 ----------------------------------------------------------------------
inline CriterionResult ridge_duality(const AcceptanceOptions&) {
  CriterionResult res = detail::start(9, "ridge duality gap along a converged run");
  const Index n = 100;
  const Dataset ds = gen_skewed_dataset(n, 10, norm_profile::log_uniform(n, 0.1, 10.0, 0xb9), 0xba);
  const auto prob = build_ridge_dual(ds.features, ds.labels, 1e-2);
  const ReferenceMinimum ref = reference_minimum(prob.oracle);
  const double p_star = -ref.value;

  double min_gap = std::numeric_limits<double>::infinity();
  double first_primal = 0.0, last_primal = 0.0;
  bool first = true;
  SolverConfig cfg;
  cfg.iters = 5000 * n;
  cfg.seed = 9;
  cfg.distance = [&](const OracleState& st) { return prob.oracle.duality_gap(st.point); };
  cfg.target = 1e-12;
  cfg.observer = [&](const TraceRecord& rec, const OracleState& st) {
    min_gap = std::min(min_gap, *rec.dist);
    last_primal = prob.oracle.primal_objective(prob.oracle.primal_from_sum(st.cache)) - p_star;
    if (first) first_primal = last_primal;
    first = false;
  };
  const SolverResult r = nu_acdm(prob.oracle, prob.profile, Vector::Zero(n), cfg);
  const double final_gap = prob.oracle.duality_gap(r.solution);
  const double primal_tol = 1e-8 * std::max(1.0, std::abs(p_star));
  res.passed = min_gap >= -1e-10 && final_gap <= 1e-8 && last_primal <= primal_tol && last_primal < first_primal;
  res.detail = "min gap " + detail::fmt("%.3g", min_gap) + ", final gap " + detail::fmt("%.3g", final_gap) +
               ", final primal distance " + detail::fmt("%.3g", last_primal) + " after " +
               detail::fmt("%.0f", r.trace.back().epoch) + " epochs";
  return res;
}

// -- 10 ---------------------------------------------------------------------
inline CriterionResult beta_sweep_bounds(const AcceptanceOptions& opt) {
  CriterionResult res = detail::start(10, "convex rate bound for each beta on the penalty dual, 200 seeds");
  const Index n = 50;
  const Dataset ds = gen_skewed_dataset(n, 10, norm_profile::log_uniform(n, 0.1, 10.0, 0xc1), 0xc2);
  BetaSweepSpec spec;
  spec.lambda = 1e-2;
  spec.seeds = detail::seed_range(200);
  spec.jobs = opt.jobs;
  const auto entries = beta_sweep(ds, spec);
  bool ok = true;
  double worst = 0.0;
  for (const auto& e : entries) {
    for (const auto& c : e.checks) {
      ok = ok && c.holds(1.2);
      worst = std::max(worst, c.mean_gap / c.bound);
    }
  }
  res.passed = ok;
  res.detail = std::to_string(entries.size()) + " betas, worst mean/bound " + detail::fmt("%.3g", worst);
  return res;
}

// -- 11 ---------------------------------------------------------------------
inline CriterionResult specialization_determinism(const AcceptanceOptions&) {
  CriterionResult res = detail::start(11, "generalized method reproduces the specialized one; runs are reproducible");
  std::vector<std::string> failures;

  const LinearSystem sys = gen_linear_system(60, 20, 0.2, 0xe1);
  const auto kacz = build_kaczmarz(sys.a, sys.b);
  const Dataset ds = gen_skewed_dataset(40, 8, norm_profile::log_uniform(40, 0.2, 5.0, 0xe2), 0xe3);
  const auto ridge = build_ridge_dual(ds.features, ds.labels, 1e-2, 0.5);
  const auto penalty = build_penalty_dual(ds.features, ds.labels, 1e-2, 0.3);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SolverConfig cfg;
    cfg.iters = 3000;
    cfg.seed = seed;
    cfg.trace_stride = 7;
    const Vector yk = Vector::Zero(kacz.oracle.dim());
    if (!detail::same_result(nu_acdm(kacz.oracle, kacz.profile, yk, cfg),
                             generalized_accel(kacz.oracle, kacz.profile, yk, cfg, nu_probabilities(kacz.profile)))) {
      failures.push_back("kaczmarz seed " + std::to_string(seed));
    }
    const Vector yr = Vector::Zero(ridge.oracle.dim());
    if (!detail::same_result(
            nu_acdm(ridge.oracle, ridge.profile, yr, cfg),
            generalized_accel(ridge.oracle, ridge.profile, yr, cfg, nu_probabilities(ridge.profile)))) {
      failures.push_back("ridge seed " + std::to_string(seed));
    }
    if (!detail::same_result(nu_acdm_ns(penalty.oracle, penalty.profile, yr, cfg),
                             generalized_accel_ns(penalty.oracle, penalty.profile, yr, cfg,
                                                  nu_probabilities(penalty.profile)))) {
      failures.push_back("penalty seed " + std::to_string(seed));
    }
  }

  for (const char* name : {algo::nu_acdm, algo::nu_acdm_ns, algo::acdm, algo::rcdm, algo::gd}) {
    SolverConfig cfg;
    cfg.iters = 2000;
    cfg.seed = 42;
    const Vector y0 = Vector::Zero(ridge.oracle.dim());
    if (!detail::same_result(run_algorithm(name, ridge.oracle, ridge.profile, y0, cfg),
                             run_algorithm(name, ridge.oracle, ridge.profile, y0, cfg))) {
      failures.push_back(std::string("repeat ") + name);
    }
  }
  {
    SolverConfig cfg;
    cfg.iters = 2000;
    cfg.seed = 42;
    const Vector x0 = Vector::Zero(sys.a.cols());
    if (!detail::same_result(kaczmarz(sys.a, sys.b, x0, cfg), kaczmarz(sys.a, sys.b, x0, cfg))) {
      failures.push_back("repeat kaczmarz");
    }
  }
  {
    const LinearSystem a = gen_linear_system(60, 20, 0.2, 0xe1);
    const Dataset b = gen_skewed_dataset(40, 8, norm_profile::log_uniform(40, 0.2, 5.0, 0xe2), 0xe3);
    if (a.a.to_dense() != sys.a.to_dense() || a.b != sys.b || a.x_star != sys.x_star) {
      failures.push_back("linear system generator");
    }
    if (b.features.to_dense() != ds.features.to_dense() || b.labels != ds.labels) {
      failures.push_back("dataset generator");
    }
  }
  {
    RaceOptions one, two;
    one.max_epochs = two.max_epochs = 200;
    two.jobs = 2;
    const auto ra = run_kaczmarz_race(60, 20, 0.2, {1, 2, 3}, 1e-8, one);
    const auto rb = run_kaczmarz_race(60, 20, 0.2, {1, 2, 3}, 1e-8, two);
    const auto ta = ra.all_traces();
    const auto tb = rb.all_traces();
    bool same = ta.size() == tb.size();
    for (std::size_t k = 0; same && k < ta.size(); ++k) same = detail::same_trace(ta[k].trace, tb[k].trace);
    if (!same) failures.push_back("race with 1 vs 2 jobs");
  }
  res.passed = failures.empty();
  res.detail = failures.empty() ? "all comparisons bit-identical" : "mismatch: " + failures.front();
  return res;
}

// -- 12 ---------------------------------------------------------------------
inline CriterionResult kaczmarz_rate(const AcceptanceOptions& opt) {
  CriterionResult res = detail::start(12, "randomized Kaczmarz decay rate vs sigma_min^2 / |A|_F^2, 10 seeds");
  const Index m = 300, n = 100;
  const LinearSystem sys = gen_linear_system(m, n, 0.1, 0xf1);
  const double sigma = build_kaczmarz(sys.a, sys.b).profile.sigma_beta();
  const double rho = sigma / sys.a.row_norms_sq().sum();
  std::vector<LabeledTrace> traces(10);
  parallel_for(traces.size(), opt.jobs, [&](std::size_t s) {
    SolverConfig cfg;
    cfg.iters = 5000 * m;
    cfg.seed = s;
    cfg.trace_stride = m;
    cfg.target = 1e-10;
    traces[s] = {algo::kaczmarz, s, kaczmarz(sys.a, sys.b, Vector::Zero(n), cfg, sys.x_star).trace};
  });
  const ConvergenceTrace mean = nuacdm::detail::mean_trace(traces);
  const detail::LogFit fit = detail::fit_log_decay(mean, 1e-2, 1e-8);
  const double fitted = -fit.slope;
  const double ratio = fitted / rho;
  res.passed = fit.points >= 10 && fit.r2 >= 0.99 && ratio >= 0.5 && ratio <= 2.0;
  res.detail = "fitted rate " + detail::fmt("%.4g", fitted) + " per iteration, predicted " +
               detail::fmt("%.4g", rho) + ", ratio " + detail::fmt("%.3f", ratio) + ", R^2 " +
               detail::fmt("%.4f", fit.r2);
  return res;
}

}  // namespace acceptance

/// Runs the selected acceptance checks (all when `only` is empty). Exceptions
/// inside a check turn into a failed result carrying the message.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {},
                                                   const std::vector<int>& only = {}) {
  using Check = CriterionResult (*)(const AcceptanceOptions&);
  const std::vector<Check> checks = {
      acceptance::convex_rate,        acceptance::strongly_convex_rate, acceptance::descent_lemma,
      acceptance::mirror_optimality,  acceptance::schedule_identities,  acceptance::speedup_values,
      acceptance::kaczmarz_race,      acceptance::oracle_correctness,   acceptance::ridge_duality,
      acceptance::beta_sweep_bounds,  acceptance::specialization_determinism,
      acceptance::kaczmarz_rate};
  std::vector<CriterionResult> out;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = checks[k](opt);
    } catch (const std::exception& e) {
      r = acceptance::detail::start(id, "criterion " + std::to_string(id));
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_result(const CriterionResult& r) {
  char head[32];
  std::snprintf(head, sizeof head, "[%s] %2d ", r.passed ? "PASS" : "FAIL", r.id);
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.2f s)", r.seconds);
  return head + r.title + ": " + r.detail + tail;
}

}  // namespace nuacdm
