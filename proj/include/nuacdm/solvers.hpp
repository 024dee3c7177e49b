#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "problem_core.hpp"
#include "sampler.hpp"
#include "sparse_matrix.hpp"

namespace nuacdm {

enum class CheckLevel { off, cheap, full };

struct TraceRecord {
  std::int64_t iter = 0;
  double epoch = 0.0;
  double value = 0.0;
  std::optional<double> dist;
};

// Recorded points of one solver run, in strictly increasing iteration order.
struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  const TraceRecord& back() const { return records.back(); }

  // Epoch of the first record whose distance is <= eps, if any.
  std::optional<double> epochs_to(double eps) const {
    for (const auto& r : records) {
      if (r.dist && *r.dist <= eps) return r.epoch;
    }
    return std::nullopt;
  }
};

struct SolverConfig {
  std::int64_t iters = 1;
  std::uint64_t seed = 0;
  // Iterations between trace records. 0 means one record per epoch.
  std::int64_t trace_stride = 0;
  CheckLevel check = CheckLevel::off;
  // Reference minimum. When set, records carry f - f_star as their distance.
  std::optional<double> f_star;
  // Custom distance metric; takes precedence over f_star.
  std::function<double(const OracleState&)> distance;
  // Stop at the first record whose distance is <= target.
  std::optional<double> target;
  // Called at every record with the state the record describes.
  std::function<void(const TraceRecord&, const OracleState&)> observer;
};

struct CheckReport {
  std::int64_t descent_checks = 0;
  std::int64_t mirror_checks = 0;
  // Largest observed f(y') - (f(x) - g^2 / 2L_i), relative to max(1, |f(x)|).
  double max_descent_excess = -std::numeric_limits<double>::infinity();
  double max_mirror_residual = 0.0;
};

struct SolverResult {
  Vector solution;
  OracleState state;
  ConvergenceTrace trace;
  CheckReport checks;
  std::int64_t iterations = 0;
};

inline constexpr double kDescentSlack = 1e-12;
inline constexpr double kMirrorTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Parameter schedules
// ---------------------------------------------------------------------------

struct AccelParameters {
  double tau;
  double eta;
};

// Coupling and mirror step for the strongly convex method. `rate_constant` is
// S_alpha^2 for the non-uniform sampling, or max_i L_i^{1-beta} / p_i^2 for an
// arbitrary distribution. Satisfies 1 + eta sigma = 1 / (1 - tau).
inline AccelParameters strongly_convex_parameters(double rate_constant, double sigma) {
  require(sigma > 0.0, "strongly convex schedule needs sigma_beta > 0");
  require(rate_constant > 0.0, "rate constant must be positive");
  const double tau = 2.0 / (1.0 + std::sqrt(4.0 * rate_constant / sigma + 1.0));
  return {tau, 1.0 / (tau * rate_constant)};
}

// eta_{k+1} = (k + 2) / (2 S^2) and tau_k = 2 / (k + 2).
inline AccelParameters convex_parameters(std::int64_t k, double rate_constant) {
  const double kk = static_cast<double>(k);
  return {2.0 / (kk + 2.0), (kk + 2.0) / (2.0 * rate_constant)};
}

// p_i = L_i^alpha / S_alpha with alpha = (1 - beta) / 2.
inline Vector nu_probabilities(const SmoothnessProfile& profile) {
  const double alpha = sampling_exponent(profile);
  const double s = s_alpha(profile, alpha);
  Vector p(profile.size());
  for (Index i = 0; i < p.size(); ++i) p[i] = std::pow(profile.l(i), alpha) / s;
  return p;
}

// Smallest valid rate constant for an arbitrary distribution:
// max_i L_i^{1-beta} / p_i^2.
inline double rate_constant(const SmoothnessProfile& profile, const Vector& p) {
  require(p.size() == profile.size(), "probability vector has the wrong dimension");
  double m = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) throw InvalidArgument("zero probability on coordinate " + std::to_string(i));
    m = std::max(m, std::pow(profile.l(i), 1.0 - profile.beta()) / (p[i] * p[i]));
  }
  return m;
}

// ACDM baseline sampling, p_i proportional to max{L_i, mean_j L_j}.
inline Vector acdm_probabilities(const SmoothnessProfile& profile) {
  const double mean = profile.l().mean();
  Vector w = profile.l().cwiseMax(mean);
  return w / w.sum();
}

// Rate constant used for the ACDM baseline: its published complexity
// sqrt(n sum_i L_i / sigma), raised to the validity bound when that is larger.
inline double acdm_rate_constant(const SmoothnessProfile& profile, const Vector& p) {
  const double n = static_cast<double>(profile.size());
  const double published = n * profile.l().array().pow(1.0 - profile.beta()).sum();
  return std::max(published, rate_constant(profile, p));
}

// ---------------------------------------------------------------------------
// Mirror-step optimality
// ---------------------------------------------------------------------------

// Inputs of one mirror (z) step. sigma = 0 gives the non-strongly convex form.
struct MirrorStep {
  const Vector& z_prev;
  const Vector& x;
  const Vector& z_next;
  Index coord;
  double grad;
  double prob;
  double eta;
  double sigma;
};

/// Dual-norm size of the gradient of
///   1/2 |z - z_prev|^2_Lb + (eta / p_i) <grad e_i, z> + (eta sigma / 2) |z - x|^2_Lb
/// at z = z_next. Exactly zero when z_next is the minimizer.
inline double mirror_step_residual(const MirrorStep& step, const SmoothnessProfile& profile) {
  double sq = 0.0;
  for (Index j = 0; j < step.z_next.size(); ++j) {
    const double lb = std::pow(profile.l(j), profile.beta());
    double g = lb * (step.z_next[j] - step.z_prev[j]) +
               step.eta * step.sigma * lb * (step.z_next[j] - step.x[j]);
    if (j == step.coord && step.eta != 0.0) g += step.eta / step.prob * step.grad;
    sq += g * g / lb;
  }
  return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Shared driver pieces
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t stride_for(const SolverConfig& cfg, Index n) {
  require(cfg.iters >= 0, "iteration count must be nonnegative");
  require(cfg.trace_stride >= 0, "trace stride must be nonnegative");
  return cfg.trace_stride > 0 ? cfg.trace_stride : std::max<std::int64_t>(1, n);
}

class Recorder {
 public:
  Recorder(const SolverConfig& cfg, double iters_per_epoch)
      : cfg_(cfg), per_epoch_(iters_per_epoch) {}

  // Returns true when the run should stop because the target was reached.
  bool record(std::int64_t k, double value, const OracleState& state, ConvergenceTrace& trace) {
    if (!std::isfinite(value)) {
      throw DivergenceError("non-finite objective at iteration " + std::to_string(k) +
                            "; the oracle and smoothness profile are inconsistent");
    }
    TraceRecord rec;
    rec.iter = k;
    rec.epoch = static_cast<double>(k) / per_epoch_;
    rec.value = value;
    if (cfg_.distance) {
      rec.dist = cfg_.distance(state);
    } else if (cfg_.f_star) {
      rec.dist = value - *cfg_.f_star;
    }
    if (cfg_.observer) cfg_.observer(rec, state);
    trace.records.push_back(rec);
    return cfg_.target && rec.dist && *rec.dist <= *cfg_.target;
  }

 private:
  const SolverConfig& cfg_;
  double per_epoch_;
};

inline bool check_due(const SolverConfig& cfg, std::int64_t k_next, std::int64_t stride) {
  return cfg.check == CheckLevel::full || (cfg.check == CheckLevel::cheap && k_next % stride == 0);
}

inline void check_descent(double fx, double fy, double grad, double l, std::int64_t k,
                          CheckReport& report) {
  const double scale = std::max(1.0, std::abs(fx));
  const double excess = (fy - (fx - grad * grad / (2.0 * l))) / scale;
  ++report.descent_checks;
  report.max_descent_excess = std::max(report.max_descent_excess, excess);
  if (excess > kDescentSlack) {
    throw InvariantViolation("coordinate descent guarantee violated at iteration " +
                             std::to_string(k) + " (relative excess " + std::to_string(excess) + ")");
  }
}

inline void check_mirror(const MirrorStep& step, const SmoothnessProfile& profile, std::int64_t k,
                         CheckReport& report) {
  const double r = mirror_step_residual(step, profile);
  ++report.mirror_checks;
  report.max_mirror_residual = std::max(report.max_mirror_residual, r);
  if (r > kMirrorTolerance) {
    throw InvariantViolation("mirror step is not optimal at iteration " + std::to_string(k) +
                             " (residual " + std::to_string(r) + ")");
  }
}

template <CoordOracle O>
void check_start(const O& oracle, const Vector& x0) {
  require(x0.size() == oracle.dim(), "initial point has the wrong dimension");
}

// Linear-coupling iteration shared by the strongly convex method, its
// non-strongly convex variant and the arbitrary-distribution generalization.
// With sigma > 0 the step sizes are constant; with sigma == 0 they follow the
// (k + 2) / (2 M) schedule.
template <CoordOracle O>
SolverResult linear_coupling(const O& oracle, const SmoothnessProfile& profile, const Vector& x0,
                             const SolverConfig& cfg, const Vector& probs, double m, double sigma) {
  check_start(oracle, x0);
  require(profile.size() == oracle.dim(), "profile dimension does not match the oracle");
  const Index n = oracle.dim();
  const std::int64_t stride = stride_for(cfg, n);

  Vector lb(n);
  for (Index i = 0; i < n; ++i) lb[i] = std::pow(profile.l(i), profile.beta());

  WeightedSampler sampler(probs, cfg.seed);
  Recorder recorder(cfg, static_cast<double>(n));
  SolverResult out;

  OracleState y = oracle.make_state(x0);
  OracleState z = y;
  OracleState x = y;
  Vector z_prev;

  const bool strongly = sigma > 0.0;
  const AccelParameters fixed = strongly ? strongly_convex_parameters(m, sigma) : AccelParameters{1, 0};

  bool stop = recorder.record(0, oracle.value(y), y, out.trace);
  std::int64_t k = 0;
  for (; k < cfg.iters && !stop; ++k) {
    const AccelParameters par = strongly ? fixed : convex_parameters(k, m);
    combine(x, par.tau, z, 1.0 - par.tau, y);

    const Index i = sampler.sample();
    const double g = oracle.coord_grad(x, i);
    if (!std::isfinite(g)) {
      throw DivergenceError("non-finite coordinate gradient at iteration " + std::to_string(k));
    }

    y = x;
    oracle.apply_coord_step(y, i, -g / profile.l(i));

    const bool checking = check_due(cfg, k + 1, stride);
    if (checking) z_prev = z.point;
    if (strongly) {
      const double c = 1.0 / (1.0 + par.eta * sigma);
      combine(z, c, z, c * par.eta * sigma, x);
      oracle.apply_coord_step(z, i, -c * par.eta / (probs[i] * lb[i]) * g);
    } else {
      oracle.apply_coord_step(z, i, -par.eta / (probs[i] * lb[i]) * g);
    }

    if (checking) {
      check_descent(oracle.value(x), oracle.value(y), g, profile.l(i), k, out.checks);
      check_mirror(MirrorStep{z_prev, x.point, z.point, i, g, probs[i], par.eta, sigma}, profile, k,
                   out.checks);
    }
    if ((k + 1) % stride == 0 || k + 1 == cfg.iters) {
      stop = recorder.record(k + 1, oracle.value(y), y, out.trace);
    }
  }
  out.iterations = k;
  out.solution = y.point;
  out.state = std::move(y);
  return out;
}

inline void validate_probabilities(const SmoothnessProfile& profile, const Vector& p) {
  require(p.size() == profile.size(), "probability vector has the wrong dimension");
  for (Index i = 0; i < p.size(); ++i) {
    require(std::isfinite(p[i]) && p[i] >= 0.0, "probabilities must be finite and nonnegative");
    if (p[i] == 0.0) throw InvalidArgument("zero probability on live coordinate " + std::to_string(i));
  }
  require(std::abs(p.sum() - 1.0) <= 1e-9, "probabilities must sum to one");
}

// The rate constant for a caller-supplied distribution. The non-uniform
// distribution itself gets S_alpha^2 exactly, so that the generalization
// reproduces the specialized method bit for bit.
inline double generalized_rate_constant(const SmoothnessProfile& profile, const Vector& p,
                                        std::optional<double> m_override) {
  validate_probabilities(profile, p);
  double m = rate_constant(profile, p);
  if (p == nu_probabilities(profile)) {
    const double s = s_alpha(profile, sampling_exponent(profile));
    m = s * s;
  }
  if (m_override) {
    require(*m_override >= m * (1.0 - 1e-12),
            "rate constant override is below max_i L_i^(1-beta) / p_i^2");
    m = *m_override;
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Accelerated methods
// ---------------------------------------------------------------------------

/// Non-uniformly sampled accelerated coordinate descent for sigma_beta-strongly
/// convex objectives. Samples i with probability L_i^alpha / S_alpha and
/// returns y_T.
template <CoordOracle O>
SolverResult nu_acdm(const O& oracle, const SmoothnessProfile& profile, const Vector& x0,
                     const SolverConfig& cfg) {
  if (!(profile.sigma_beta() > 0.0)) {
    throw InvalidArgument("nu_acdm needs sigma_beta > 0; use nu_acdm_ns for non-strongly convex f");
  }
  const double s = s_alpha(profile, sampling_exponent(profile));
  return detail::linear_coupling(oracle, profile, x0, cfg, nu_probabilities(profile), s * s,
                                 profile.sigma_beta());
}

/// Non-strongly convex variant: eta_{k+1} = (k + 2) / (2 S_alpha^2),
/// tau_k = 2 / (k + 2), and only coordinate i of z moves. sigma_beta is ignored.
template <CoordOracle O>
SolverResult nu_acdm_ns(const O& oracle, const SmoothnessProfile& profile, const Vector& x0,
                        const SolverConfig& cfg) {
  const double s = s_alpha(profile, sampling_exponent(profile));
  return detail::linear_coupling(oracle, profile, x0, cfg, nu_probabilities(profile), s * s, 0.0);
}

/// Strongly convex method with an arbitrary sampling distribution p. The rate
/// constant defaults to max_i L_i^{1-beta} / p_i^2; `m_override` may raise it.
template <CoordOracle O>
SolverResult generalized_accel(const O& oracle, const SmoothnessProfile& profile, const Vector& x0,
                               const SolverConfig& cfg, const Vector& p,
                               std::optional<double> m_override = std::nullopt) {
  if (!(profile.sigma_beta() > 0.0)) {
    throw InvalidArgument("generalized_accel needs sigma_beta > 0; use generalized_accel_ns");
  }
  const double m = detail::generalized_rate_constant(profile, p, m_override);
  return detail::linear_coupling(oracle, profile, x0, cfg, p, m, profile.sigma_beta());
}

// Non-strongly convex counterpart of generalized_accel.
template <CoordOracle O>
SolverResult generalized_accel_ns(const O& oracle, const SmoothnessProfile& profile,
                                  const Vector& x0, const SolverConfig& cfg, const Vector& p,
                                  std::optional<double> m_override = std::nullopt) {
  const double m = detail::generalized_rate_constant(profile, p, m_override);
  return detail::linear_coupling(oracle, profile, x0, cfg, p, m, 0.0);
}

// ACDM baseline: p_i proportional to max(L_i, mean L), rate constant
// max(n sum L_i^{1-beta}, max_i L_i^{1-beta} / p_i^2). Picks the strongly convex or convex schedule
// from the profile.
template <CoordOracle O>
SolverResult acdm(const O& oracle, const SmoothnessProfile& profile, const Vector& x0,
                  const SolverConfig& cfg) {
  const Vector p = acdm_probabilities(profile);
  const double m = acdm_rate_constant(profile, p);
  if (profile.strongly_convex()) return generalized_accel(oracle, profile, x0, cfg, p, m);
  return generalized_accel_ns(oracle, profile, x0, cfg, p, m);
}

// ---------------------------------------------------------------------------
// Non-accelerated baselines
// ---------------------------------------------------------------------------

// p_i proportional to L_i^{1-beta}.
inline Vector rcdm_probabilities(const SmoothnessProfile& profile) {
  const Vector w = profile.l().array().pow(1.0 - profile.beta());
  return w / w.sum();
}

/// Randomized coordinate descent: x <- x - (1/L_i) grad_i f(x), with i drawn
/// proportionally to L_i^{1-beta}.
template <CoordOracle O>
SolverResult rcdm(const O& oracle, const SmoothnessProfile& profile, const Vector& x0,
                  const SolverConfig& cfg) {
  detail::check_start(oracle, x0);
  require(profile.size() == oracle.dim(), "profile dimension does not match the oracle");
  const Index n = oracle.dim();
  const std::int64_t stride = detail::stride_for(cfg, n);
  WeightedSampler sampler(rcdm_probabilities(profile), cfg.seed);
  detail::Recorder recorder(cfg, static_cast<double>(n));
  SolverResult out;

  OracleState x = oracle.make_state(x0);
  double fx = oracle.value(x);
  bool stop = recorder.record(0, fx, x, out.trace);
  std::int64_t k = 0;
  for (; k < cfg.iters && !stop; ++k) {
    const Index i = sampler.sample();
    const double g = oracle.coord_grad(x, i);
    if (!std::isfinite(g)) {
      throw DivergenceError("non-finite coordinate gradient at iteration " + std::to_string(k));
    }
    const bool checking = detail::check_due(cfg, k + 1, stride);
    if (checking) fx = oracle.value(x);
    oracle.apply_coord_step(x, i, -g / profile.l(i));
    if (checking) detail::check_descent(fx, oracle.value(x), g, profile.l(i), k, out.checks);
    if ((k + 1) % stride == 0 || k + 1 == cfg.iters) {
      stop = recorder.record(k + 1, oracle.value(x), x, out.trace);
    }
  }
  out.iterations = k;
  out.solution = x.point;
  out.state = std::move(x);
  return out;
}

/// Full gradient descent with step 1/L. One iteration is one pass, so the
/// trace's epoch equals the iteration count. trace_stride = 0 records every
/// iteration.
template <CoordOracle O>
SolverResult full_gd(const O& oracle, double l_global, const Vector& x0, const SolverConfig& cfg) {
  detail::check_start(oracle, x0);
  require(std::isfinite(l_global) && l_global > 0.0, "global smoothness must be positive");
  const std::int64_t stride = cfg.trace_stride > 0 ? cfg.trace_stride : 1;
  detail::Recorder recorder(cfg, 1.0);
  SolverResult out;

  OracleState x = oracle.make_state(x0);
  bool stop = recorder.record(0, oracle.value(x), x, out.trace);
  std::int64_t k = 0;
  for (; k < cfg.iters && !stop; ++k) {
    const Vector g = full_gradient(oracle, x);
    if (!g.allFinite()) throw DivergenceError("non-finite gradient at iteration " + std::to_string(k));
    x.point -= g / l_global;
    oracle.rebuild(x);
    if ((k + 1) % stride == 0 || k + 1 == cfg.iters) {
      stop = recorder.record(k + 1, oracle.value(x), x, out.trace);
    }
  }
  out.iterations = k;
  out.solution = x.point;
  out.state = std::move(x);
  return out;
}

/// Randomized Kaczmarz: project onto {x : <a_i, x> = b_i} with row i drawn
/// proportionally to |a_i|^2. Records 1/2 |Ax - b|^2 as the value and, when
/// x_star is given, |x - x*|^2 / |x0 - x*|^2 as the distance. An epoch is m
/// row projections.
inline SolverResult kaczmarz(const SparseRowMatrix& a, const Vector& b, const Vector& x0,
                             const SolverConfig& cfg,
                             const std::optional<Vector>& x_star = std::nullopt) {
  require(b.size() == a.rows(), "kaczmarz: right-hand side has the wrong dimension");
  require(x0.size() == a.cols(), "kaczmarz: initial point has the wrong dimension");
  for (Index r = 0; r < a.rows(); ++r) {
    if (a.row_norm_sq(r) == 0.0) throw InvalidArgument("kaczmarz: row " + std::to_string(r) + " is zero");
  }
  const Index m = a.rows();
  const std::int64_t stride = detail::stride_for(cfg, m);

  SolverConfig run_cfg = cfg;
  if (x_star && !cfg.distance) {
    require(x_star->size() == a.cols(), "kaczmarz: x_star has the wrong dimension");
    const double d0 = (x0 - *x_star).squaredNorm();
    const Vector xs = *x_star;
    run_cfg.distance = [xs, d0](const OracleState& s) {
      const double d = (s.point - xs).squaredNorm();
      return d0 > 0.0 ? d / d0 : d;
    };
  }
  auto residual = [&](const Vector& x) { return 0.5 * (a.multiply(x) - b).squaredNorm(); };

  WeightedSampler sampler(a.row_norms_sq(), cfg.seed);
  detail::Recorder recorder(run_cfg, static_cast<double>(m));
  SolverResult out;
  OracleState x{x0, Vector()};
  bool stop = recorder.record(0, residual(x.point), x, out.trace);
  std::int64_t k = 0;
  for (; k < cfg.iters && !stop; ++k) {
    const Index i = sampler.sample();
    const double step = (b[i] - a.row_dot(i, x.point)) / a.row_norm_sq(i);
    a.add_row(i, step, x.point);
    if ((k + 1) % stride == 0 || k + 1 == cfg.iters) {
      stop = recorder.record(k + 1, residual(x.point), x, out.trace);
    }
  }
  out.iterations = k;
  out.solution = x.point;
  out.state = std::move(x);
  return out;
}

}  // namespace nuacdm
