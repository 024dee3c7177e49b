#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "data_io.hpp"
#include "parallel.hpp"
#include "problem_core.hpp"
#include "problems.hpp"
#include "rng.hpp"
#include "solvers.hpp"

namespace nuacdm {

// Algorithm names shared by the bench drivers and the command line.
namespace algo {
inline constexpr const char* nu_acdm = "nu-acdm";
inline constexpr const char* nu_acdm_ns = "nu-acdm-ns";
inline constexpr const char* acdm = "acdm";
inline constexpr const char* rcdm = "rcdm";
inline constexpr const char* kaczmarz = "kaczmarz";
inline constexpr const char* gd = "gd";
}  // namespace algo

/// Runs a coordinate-oracle algorithm by name. "nu-acdm" falls back to the
/// non-strongly convex variant when the profile has sigma_beta = 0. "gd" uses
/// sum_i L_i as its global smoothness bound and counts one epoch per step.
template <CoordOracle O>
SolverResult run_algorithm(const std::string& name, const O& oracle, const SmoothnessProfile& profile,
                           const Vector& x0, const SolverConfig& cfg) {
  if (name == algo::nu_acdm) {
    return profile.strongly_convex() ? nu_acdm(oracle, profile, x0, cfg)
                                     : nu_acdm_ns(oracle, profile, x0, cfg);
  }
  if (name == algo::nu_acdm_ns) return nu_acdm_ns(oracle, profile, x0, cfg);
  if (name == algo::acdm) return acdm(oracle, profile, x0, cfg);
  if (name == algo::rcdm) return rcdm(oracle, profile, x0, cfg);
  if (name == algo::gd) {
    SolverConfig gd_cfg = cfg;
    gd_cfg.iters = std::max<std::int64_t>(1, cfg.iters / oracle.dim());
    gd_cfg.trace_stride = 1;
    return full_gd(oracle, profile.l().sum(), x0, gd_cfg);
  }
  throw InvalidArgument("unknown algorithm '" + name + "'");
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct AlgoRace {
  std::string algo;
  std::vector<LabeledTrace> traces;  // one per seed
  // Per seed; +inf when the target was not reached within the budget.
  std::vector<double> epochs_to_eps;
  // Primal distance P(w(y_k)) - P* per seed, recorded alongside `traces`
  // (ridge races only).
  std::vector<ConvergenceTrace> primal_traces;
  // Mean distance over seeds, on the epoch grid shared by all seeds.
  ConvergenceTrace mean_trace;

  double median_epochs() const { return median(epochs_to_eps); }
};

struct RaceResult {
  std::vector<AlgoRace> algos;
  double theory_speedup = 1.0;
  double eps = 0.0;

  const AlgoRace& at(const std::string& name) const {
    for (const auto& a : algos) {
      if (a.algo == name) return a;
    }
    throw InvalidArgument("race has no algorithm '" + name + "'");
  }

  std::vector<LabeledTrace> all_traces() const {
    std::vector<LabeledTrace> out;
    for (const auto& a : algos) out.insert(out.end(), a.traces.begin(), a.traces.end());
    return out;
  }
};

namespace detail {

inline ConvergenceTrace mean_trace(const std::vector<LabeledTrace>& traces) {
  ConvergenceTrace out;
  if (traces.empty()) return out;
  std::size_t len = traces.front().trace.size();
  for (const auto& t : traces) len = std::min(len, t.trace.size());
  for (std::size_t k = 0; k < len; ++k) {
    TraceRecord r = traces.front().trace.records[k];
    double value = 0.0, dist = 0.0;
    bool has_dist = true;
    for (const auto& t : traces) {
      const auto& rec = t.trace.records[k];
      value += rec.value;
      if (rec.dist) {
        dist += *rec.dist;
      } else {
        has_dist = false;
      }
    }
    const double s = static_cast<double>(traces.size());
    r.value = value / s;
    r.dist = has_dist ? std::optional<double>(dist / s) : std::nullopt;
    out.records.push_back(r);
  }
  return out;
}

// Epoch at which dist / dist(0) first drops to eps; +inf if never.
inline double normalized_epochs_to(const ConvergenceTrace& t, double eps) {
  if (t.empty() || !t.records.front().dist) return std::numeric_limits<double>::infinity();
  const double d0 = *t.records.front().dist;
  for (const auto& r : t.records) {
    if (r.dist && *r.dist <= eps * (d0 > 0.0 ? d0 : 1.0)) return r.epoch;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear systems
// ---------------------------------------------------------------------------

struct RaceOptions {
  double max_epochs = 5000.0;
  // Trace records per epoch.
  std::int64_t records_per_epoch = 20;
  unsigned jobs = 1;
};

/// Per seed: generates an (m, n, r) system, then runs randomized Kaczmarz, the
/// ACDM baseline and NU_ACDM (beta = 0) from zero. Distance is the relative
/// error |x_k - x*|^2 / |x_0 - x*|^2, with x_k = A^T y_k for the coordinate
/// methods; runs stop once it reaches eps.
inline RaceResult run_kaczmarz_race(Index m, Index n, double r, const std::vector<std::uint64_t>& seeds,
                                    double eps, const RaceOptions& opt = {}) {
  require(!seeds.empty(), "race: need at least one seed");
  const std::vector<std::string> names = {algo::kaczmarz, algo::acdm, algo::nu_acdm};
  struct Instance {
    LinearSystem sys;
    std::optional<Problem<KaczmarzQuadratic>> problem;
  };
  std::vector<Instance> inst(seeds.size());
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t s) {
    inst[s].sys = gen_linear_system(m, n, r, stream_seed(seeds[s], 0));
    inst[s].problem.emplace(build_kaczmarz(inst[s].sys.a, inst[s].sys.b));
  });

  RaceResult out;
  out.eps = eps;
  out.theory_speedup = speedup_factor(inst.front().problem->profile);
  out.algos.resize(names.size());
  for (std::size_t a = 0; a < names.size(); ++a) {
    out.algos[a].algo = names[a];
    out.algos[a].traces.resize(seeds.size());
    out.algos[a].epochs_to_eps.resize(seeds.size());
  }

  const std::size_t cells = names.size() * seeds.size();
  parallel_for(cells, opt.jobs, [&](std::size_t c) {
    const std::size_t a = c / seeds.size();
    const std::size_t s = c % seeds.size();
    const auto& sys = inst[s].sys;
    const auto& prob = *inst[s].problem;
    SolverConfig cfg;
    cfg.seed = stream_seed(seeds[s], 1 + a);
    cfg.iters = static_cast<std::int64_t>(opt.max_epochs * static_cast<double>(m));
    cfg.trace_stride = std::max<std::int64_t>(1, m / opt.records_per_epoch);
    cfg.target = eps;
    const double d0 = sys.x_star.squaredNorm();
    SolverResult res;
    if (names[a] == algo::kaczmarz) {
      res = kaczmarz(sys.a, sys.b, Vector::Zero(n), cfg, sys.x_star);
    } else {
      const Vector xs = sys.x_star;
      cfg.distance = [xs, d0](const OracleState& st) {
        return (KaczmarzQuadratic::recovered_solution(st) - xs).squaredNorm() / d0;
      };
      res = run_algorithm(names[a], prob.oracle, prob.profile, Vector::Zero(m), cfg);
    }
    auto& slot = out.algos[a];
    slot.traces[s] = {names[a], seeds[s], std::move(res.trace)};
    slot.epochs_to_eps[s] = slot.traces[s].trace.epochs_to(eps).value_or(std::numeric_limits<double>::infinity());
  });
  for (auto& a : out.algos) a.mean_trace = detail::mean_trace(a.traces);
  return out;
}

struct SpeedupRow {
  double r;
  double theory;
  // Median ACDM epochs over median NU_ACDM epochs, when measured.
  std::optional<double> measured;
};

struct SpeedupOptions {
  Index m = 300;
  Index n = 100;
  std::uint64_t seed = 0;
  // Seeds for the measured column; empty skips the measurement.
  std::vector<std::uint64_t> measure_seeds;
  double eps = 1e-8;
  RaceOptions race;
};

/// Theoretical speed-up sqrt(m sum L_i) / sum sqrt(L_i) of generated systems
/// with L_i = |a_i|^2.
inline std::vector<SpeedupRow> speedup_table(const std::vector<double>& r_values,
                                             const SpeedupOptions& opt = {}) {
  std::vector<SpeedupRow> rows;
  for (double r : r_values) {
    require(r >= 0.0 && r <= 1.0, "speedup: r must lie in [0, 1]");
    const LinearSystem sys = gen_linear_system(opt.m, opt.n, r, stream_seed(opt.seed, 0));
    SpeedupRow row{r, speedup_factor(SmoothnessProfile(sys.a.row_norms_sq(), 0.0)), std::nullopt};
    if (!opt.measure_seeds.empty()) {
      const RaceResult race = run_kaczmarz_race(opt.m, opt.n, r, opt.measure_seeds, opt.eps, opt.race);
      row.measured = race.at(algo::acdm).median_epochs() / race.at(algo::nu_acdm).median_epochs();
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_speedup_csv(std::ostream& out, const std::vector<SpeedupRow>& rows) {
  out << "r,theory,measured\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.1f,%.6f,", row.r, row.theory);
    out << buf;
    if (row.measured) {
      std::snprintf(buf, sizeof buf, "%.6f", *row.measured);
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Empirical risk minimization
// ---------------------------------------------------------------------------

struct ErmRaceSpec {
  ErmVariant variant = ErmVariant::ridge;
  double lambda = 1e-3;
  double lambda2 = 0.0;  // smoothed Lasso only; 0 selects lambda / 10
  std::vector<std::string> algos = {algo::nu_acdm, algo::acdm, algo::rcdm};
  double beta = 0.0;
  std::vector<std::uint64_t> seeds = {0};
  double epochs = 50.0;
  // Normalized target for epochs-to-eps.
  double eps = 1e-6;
  std::int64_t records_per_epoch = 1;
  unsigned jobs = 1;
  ReferenceOptions reference;
};

inline Problem<ErmDual> build_erm(const Dataset& ds, ErmVariant variant, double lambda, double lambda2,
                                  double beta) {
  switch (variant) {
    case ErmVariant::ridge: return build_ridge_dual(ds.features, ds.labels, lambda, beta);
    case ErmVariant::smoothed_lasso:
      return build_lasso_dual(ds.features, ds.labels, lambda, lambda2 > 0.0 ? lambda2 : lambda / 10.0, beta);
    case ErmVariant::l1l2_penalty: return build_penalty_dual(ds.features, ds.labels, lambda, beta);
  }
  throw InvalidArgument("unknown ERM variant");
}

/// Traces of D(y_k) - D* per epoch for each algorithm and seed, starting at
/// y = 0. Ridge races also record the primal distance P(w(y_k)) - P*, with
/// P* = -D* by strong duality.
inline RaceResult run_erm_race(const Dataset& ds, const ErmRaceSpec& spec) {
  require(!spec.algos.empty() && !spec.seeds.empty(), "race: need at least one algorithm and one seed");
  const auto prob = build_erm(ds, spec.variant, spec.lambda, spec.lambda2, spec.beta);
  const ReferenceMinimum ref = reference_minimum(prob.oracle, spec.reference);
  const Index n = prob.oracle.dim();
  const bool primal = spec.variant == ErmVariant::ridge;

  RaceResult out;
  out.eps = spec.eps;
  out.theory_speedup = speedup_factor(prob.profile);
  out.algos.resize(spec.algos.size());
  for (std::size_t a = 0; a < spec.algos.size(); ++a) {
    out.algos[a].algo = spec.algos[a];
    out.algos[a].traces.resize(spec.seeds.size());
    out.algos[a].epochs_to_eps.resize(spec.seeds.size());
    if (primal) out.algos[a].primal_traces.resize(spec.seeds.size());
  }
  const std::size_t cells = spec.algos.size() * spec.seeds.size();
  parallel_for(cells, spec.jobs, [&](std::size_t c) {
    const std::size_t a = c / spec.seeds.size();
    const std::size_t s = c % spec.seeds.size();
    SolverConfig cfg;
    cfg.seed = stream_seed(spec.seeds[s], 1 + a);
    cfg.iters = static_cast<std::int64_t>(spec.epochs * static_cast<double>(n));
    cfg.trace_stride = std::max<std::int64_t>(1, n / spec.records_per_epoch);
    cfg.f_star = ref.value;
    ConvergenceTrace primal_trace;
    if (primal) {
      cfg.observer = [&](const TraceRecord& rec, const OracleState& st) {
        const double p = prob.oracle.primal_objective(prob.oracle.primal_from_sum(st.cache));
        primal_trace.records.push_back({rec.iter, rec.epoch, p, p + ref.value});
      };
    }
    SolverResult res = run_algorithm(spec.algos[a], prob.oracle, prob.profile, Vector::Zero(n), cfg);
    auto& slot = out.algos[a];
    slot.epochs_to_eps[s] = detail::normalized_epochs_to(res.trace, spec.eps);
    slot.traces[s] = {spec.algos[a], spec.seeds[s], std::move(res.trace)};
    if (primal) slot.primal_traces[s] = std::move(primal_trace);
  });
  for (auto& a : out.algos) a.mean_trace = detail::mean_trace(a.traces);
  return out;
}

// ---------------------------------------------------------------------------
// Expectation bounds
// ---------------------------------------------------------------------------

struct BoundCheck {
  std::int64_t iters = 0;
  double mean_gap = 0.0;
  double bound = 0.0;

  bool holds(double slack) const { return mean_gap <= slack * bound; }
};

// Mean of f(y_T) - f* over the seeds, running `run(cfg)` with cfg.iters = T.
template <class Run>
double mean_final_gap(Run&& run, std::int64_t iters, const std::vector<std::uint64_t>& seeds, double f_star,
                      unsigned jobs = 1) {
  std::vector<double> gaps(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t s) {
    SolverConfig cfg;
    cfg.iters = iters;
    cfg.seed = seeds[s];
    cfg.trace_stride = std::max<std::int64_t>(1, iters);
    gaps[s] = run(cfg).trace.back().value - f_star;
  });
  double sum = 0.0;
  for (double g : gaps) sum += g;
  return sum / static_cast<double>(gaps.size());
}

// 2 |x0 - x*|^2_{L_beta} S_{(1-beta)/2}^2 / (T + 1)^2
inline double convex_rate_bound(const SmoothnessProfile& profile, const Vector& x0, const Vector& x_star,
                                std::int64_t iters) {
  const double s = s_alpha(profile, sampling_exponent(profile));
  const double t1 = static_cast<double>(iters) + 1.0;
  return 2.0 * lbeta_norm_sq(x0 - x_star, profile) * s * s / (t1 * t1);
}

// 2 (1 - tau)^T (f(x0) - f*)
inline double strongly_convex_rate_bound(const SmoothnessProfile& profile, double initial_gap,
                                         std::int64_t iters) {
  const double s = s_alpha(profile, sampling_exponent(profile));
  const double tau = strongly_convex_parameters(s * s, profile.sigma_beta()).tau;
  return 2.0 * std::pow(1.0 - tau, static_cast<double>(iters)) * initial_gap;
}

struct BetaSweepEntry {
  double beta = 0.0;
  std::vector<BoundCheck> checks;
  // Mean trace over seeds for the largest iteration budget.
  ConvergenceTrace mean_trace;
  std::vector<LabeledTrace> traces;
};

struct BetaSweepSpec {
  double lambda = 1e-3;
  std::vector<double> betas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::uint64_t> seeds = {0};
  std::vector<std::int64_t> iters = {10, 100, 1000};
  unsigned jobs = 1;
  ReferenceOptions reference;
};

/// NU_ACDM^ns on the l2-l1 penalty dual for each beta, starting at y = 0, with
/// the convex-rate bound evaluated at the reference minimizer.
inline std::vector<BetaSweepEntry> beta_sweep(const Dataset& ds, const BetaSweepSpec& spec) {
  require(!spec.seeds.empty() && !spec.iters.empty(), "beta sweep: need seeds and iteration budgets");
  const auto base = build_penalty_dual(ds.features, ds.labels, spec.lambda);
  const ReferenceMinimum ref = reference_minimum(base.oracle, spec.reference);
  const Index n = base.oracle.dim();
  const Vector x0 = Vector::Zero(n);
  std::vector<BetaSweepEntry> out;
  for (double beta : spec.betas) {
    BetaSweepEntry entry;
    entry.beta = beta;
    const SmoothnessProfile profile = base.oracle.profile(beta);
    for (std::int64_t t : spec.iters) {
      auto run = [&](const SolverConfig& cfg) { return nu_acdm_ns(base.oracle, profile, x0, cfg); };
      entry.checks.push_back({t, mean_final_gap(run, t, spec.seeds, ref.value, spec.jobs),
                              convex_rate_bound(profile, x0, ref.solution, t)});
    }
    const std::int64_t t_max = *std::max_element(spec.iters.begin(), spec.iters.end());
    entry.traces.resize(spec.seeds.size());
    std::ostringstream name;
    name << "nu-acdm-ns-beta" << beta;
    parallel_for(spec.seeds.size(), spec.jobs, [&](std::size_t s) {
      SolverConfig cfg;
      cfg.iters = t_max;
      cfg.seed = spec.seeds[s];
      cfg.trace_stride = std::max<std::int64_t>(1, n);
      cfg.f_star = ref.value;
      entry.traces[s] = {name.str(), spec.seeds[s],
                         nu_acdm_ns(base.oracle, profile, x0, cfg).trace};
    });
    entry.mean_trace = detail::mean_trace(entry.traces);
    out.push_back(std::move(entry));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary table
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string experiment;
  std::string algo;
  std::string param;
  double median_epochs = 0.0;
  double theory_speedup = 0.0;
};

inline void write_summary(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "experiment,algo,param,median_epochs_to_eps,theory_speedup\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.algo << ',' << r.param << ',' << format_double(r.median_epochs) << ','
        << format_double(r.theory_speedup) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace nuacdm
