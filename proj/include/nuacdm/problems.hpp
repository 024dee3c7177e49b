#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "common.hpp"
#include "problem_core.hpp"
#include "rng.hpp"
#include "solvers.hpp"
#include "sparse_matrix.hpp"

namespace nuacdm {

// ===========================================================================
// Scalar losses, regularizers and their Fenchel conjugates
// ===========================================================================

namespace conjugate {

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

// sign(z) max(|z| - t, 0)
inline double soft_threshold(double z, double t) { return sign(z) * std::max(std::abs(z) - t, 0.0); }

// phi(t) = 1/2 (t - l)^2 and phi*(s) = 1/2 s^2 + s l.
inline double squared_loss(double t, double l) { return 0.5 * (t - l) * (t - l); }
inline double squared_loss_conj(double s, double l) { return 0.5 * s * s + s * l; }
inline double squared_loss_conj_deriv(double s, double l) { return s + l; }

// phi(t) = 1/2 (t - l)^2 + |t - l|. Writing phi(t) = g(t - l) with
// g(u) = u^2/2 + |u| gives phi*(s) = l s + g*(s), g*(s) = 1/2 max(|s| - 1, 0)^2.
inline double penalty_loss(double t, double l) { return 0.5 * (t - l) * (t - l) + std::abs(t - l); }
inline double penalty_loss_conj(double s, double l) {
  const double e = std::max(std::abs(s) - 1.0, 0.0);
  return l * s + 0.5 * e * e;
}
inline double penalty_loss_conj_deriv(double s, double l) { return l + soft_threshold(s, 1.0); }

// r'(w) = lambda |w| + lambda2/2 w^2 per coordinate and its conjugate
// 1/(2 lambda2) max(|z| - lambda, 0)^2, whose derivative is a soft threshold.
inline double elastic_reg(double w, double lambda, double lambda2) {
  return lambda * std::abs(w) + 0.5 * lambda2 * w * w;
}
inline double elastic_reg_conj(double z, double lambda, double lambda2) {
  const double e = std::max(std::abs(z) - lambda, 0.0);
  return 0.5 * e * e / lambda2;
}
inline double elastic_reg_conj_deriv(double z, double lambda, double lambda2) {
  return soft_threshold(z, lambda) / lambda2;
}

}  // namespace conjugate

// ===========================================================================
// Oracles
// ===========================================================================

template <CoordOracle O>
struct Problem {
  O oracle;
  SmoothnessProfile profile;
};

/// f(x) = 1/2 sum_i L_i (x_i - c_i)^2. Minimum 0 at x = c.
class DiagQuadratic {
 public:
  DiagQuadratic(Vector l, Vector center) : l_(std::move(l)), c_(std::move(center)) {
    require(l_.size() == c_.size(), "diag quadratic: dimension mismatch");
    require(l_.size() >= 1 && (l_.array() > 0.0).all(), "diag quadratic: curvatures must be positive");
  }

  Index dim() const { return l_.size(); }
  OracleState make_state(const Vector& x) const {
    require(x.size() == dim(), "diag quadratic: dimension mismatch");
    return {x, Vector()};
  }
  void rebuild(OracleState&) const {}
  double value(const OracleState& s) const {
    return 0.5 * (l_.array() * (s.point - c_).array().square()).sum();
  }
  double coord_grad(const OracleState& s, Index i) const { return l_[i] * (s.point[i] - c_[i]); }
  void apply_coord_step(OracleState& s, Index i, double d) const { s.point[i] += d; }

  const Vector& curvatures() const { return l_; }
  const Vector& minimizer() const { return c_; }
  double minimum() const { return 0.0; }

  // Exact: sigma_beta = min_i L_i^{1-beta}.
  SmoothnessProfile profile(double beta = 0.0) const {
    return SmoothnessProfile(l_, beta, l_.array().pow(1.0 - beta).minCoeff());
  }

 private:
  Vector l_;
  Vector c_;
};

namespace detail {

// Smallest eigenvalue of D^{-1/2} H D^{-1/2}, D = diag(L^beta), above
// `rel_zero` times the largest one.
inline double smallest_scaled_eigenvalue(const Eigen::MatrixXd& h, const Vector& l, double beta,
                                         double rel_zero) {
  const Vector dinv = l.array().pow(-0.5 * beta);
  const Eigen::MatrixXd scaled = dinv.asDiagonal() * h * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev[k] > rel_zero * top) return ev[k];
  }
  return 0.0;
}

}  // namespace detail

/// f(x) = 1/2 x^T Q x - q^T x with Q symmetric positive semidefinite. Caches Q x.
class DenseQuadratic {
 public:
  DenseQuadratic(Eigen::MatrixXd q, Vector lin) : q_(std::move(q)), lin_(std::move(lin)) {
    require(q_.rows() == q_.cols() && q_.rows() == lin_.size(), "dense quadratic: dimension mismatch");
    require((q_.diagonal().array() > 0.0).all(), "dense quadratic: diagonal must be positive");
  }

  Index dim() const { return lin_.size(); }
  OracleState make_state(const Vector& x) const {
    require(x.size() == dim(), "dense quadratic: dimension mismatch");
    OracleState s{x, Vector()};
    rebuild(s);
    return s;
  }
  void rebuild(OracleState& s) const { s.cache = q_ * s.point; }
  double value(const OracleState& s) const { return 0.5 * s.point.dot(s.cache) - lin_.dot(s.point); }
  double coord_grad(const OracleState& s, Index i) const { return s.cache[i] - lin_[i]; }
  void apply_coord_step(OracleState& s, Index i, double d) const {
    s.point[i] += d;
    s.cache += d * q_.col(i);
  }

  const Eigen::MatrixXd& matrix() const { return q_; }
  const Vector& linear() const { return lin_; }

  SmoothnessProfile profile(double beta = 0.0) const {
    const Vector l = q_.diagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q_, Eigen::EigenvaluesOnly);
    const double sigma = eig.eigenvalues().minCoeff() > 0.0
                             ? detail::smallest_scaled_eigenvalue(q_, l, beta, 0.0)
                             : 0.0;
    return SmoothnessProfile(l, beta, sigma);
  }

 private:
  Eigen::MatrixXd q_;
  Vector lin_;
};

/// Least-squares reformulation of A x = b over y in R^m:
///   f(y) = 1/2 |A^T y|^2 - <b, y>,  grad_i f(y) = <a_i, A^T y> - b_i,
/// with L_i = |a_i|^2. The cache holds A^T y, which is also the recovered
/// solution estimate x = A^T y.
class KaczmarzQuadratic {
 public:
  KaczmarzQuadratic(SparseRowMatrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
    require(b_.size() == a_.rows(), "kaczmarz problem: b must have one entry per row of A");
    require(b_.allFinite(), "kaczmarz problem: b must be finite");
    for (Index r = 0; r < a_.rows(); ++r) {
      if (a_.row_norm_sq(r) == 0.0) {
        throw InvalidArgument("kaczmarz problem: row " + std::to_string(r) + " is zero");
      }
    }
  }

  Index dim() const { return a_.rows(); }
  OracleState make_state(const Vector& y) const {
    require(y.size() == dim(), "kaczmarz problem: dimension mismatch");
    OracleState s{y, Vector()};
    rebuild(s);
    return s;
  }
  void rebuild(OracleState& s) const { s.cache = a_.multiply_transpose(s.point); }
  double value(const OracleState& s) const { return 0.5 * s.cache.squaredNorm() - b_.dot(s.point); }
  double coord_grad(const OracleState& s, Index i) const { return a_.row_dot(i, s.cache) - b_[i]; }
  void apply_coord_step(OracleState& s, Index i, double d) const {
    s.point[i] += d;
    a_.add_row(i, d, s.cache);
  }

  const SparseRowMatrix& matrix() const { return a_; }
  const Vector& rhs() const { return b_; }
  static const Vector& recovered_solution(const OracleState& s) { return s.cache; }

  // sigma_beta is the smallest nonzero eigenvalue of A^T D^{-1} A,
  // D = diag(L^beta): strong convexity orthogonal to the null space of A^T.
  SmoothnessProfile profile(double beta = 0.0) const {
    const Vector l = a_.row_norms_sq();
    const Eigen::MatrixXd dense = a_.to_dense();
    const Vector dinv = l.array().pow(-beta);
    const Eigen::MatrixXd h = dense.transpose() * dinv.asDiagonal() * dense;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    double sigma = 0.0;
    for (Index k = 0; k < ev.size(); ++k) {
      if (ev[k] > 1e-10 * top) {
        sigma = ev[k];
        break;
      }
    }
    return SmoothnessProfile(l, beta, sigma, ConvexityKind::restricted);
  }

 private:
  SparseRowMatrix a_;
  Vector b_;
};

inline Problem<KaczmarzQuadratic> build_kaczmarz(SparseRowMatrix a, Vector b, double beta = 0.0) {
  KaczmarzQuadratic oracle(std::move(a), std::move(b));
  auto profile = oracle.profile(beta);
  return {std::move(oracle), std::move(profile)};
}

// ---------------------------------------------------------------------------
// Dual empirical risk minimization
// ---------------------------------------------------------------------------

enum class ErmVariant { ridge, smoothed_lasso, l1l2_penalty };

inline std::string to_string(ErmVariant v) {
  switch (v) {
    case ErmVariant::ridge: return "ridge";
    case ErmVariant::smoothed_lasso: return "lasso";
    case ErmVariant::l1l2_penalty: return "penalty";
  }
  return "unknown";
}

/// Dual of min_w (1/n) sum_i phi_i(<a_i, w>) + r(w):
///   D(y) = (1/n) sum_i phi_i*(y_i) + r*(-(1/n) sum_i y_i a_i).
/// The cache holds v = sum_i y_i a_i.
///  ridge:          phi = squared loss,    r = lambda/2 |w|^2
///  smoothed_lasso: phi = squared loss,    r = lambda |w|_1 + lambda2/2 |w|^2
///  l1l2_penalty:   phi = squared + |.|,   r = lambda/2 |w|^2
class ErmDual {
 public:
  ErmDual(ErmVariant variant, SparseRowMatrix data, Vector labels, double lambda,
          double lambda2 = 0.0)
      : variant_(variant),
        a_(std::move(data)),
        labels_(std::move(labels)),
        lambda_(lambda),
        lambda2_(lambda2) {
    require(a_.rows() >= 1, "erm dual: need at least one example");
    require(labels_.size() == a_.rows(), "erm dual: one label per example required");
    require(labels_.allFinite(), "erm dual: labels must be finite");
    require(std::isfinite(lambda_) && lambda_ > 0.0, "erm dual: lambda must be positive");
    if (variant_ == ErmVariant::smoothed_lasso) {
      require(std::isfinite(lambda2_) && lambda2_ > 0.0, "erm dual: lambda2 must be positive");
    }
  }

  Index dim() const { return a_.rows(); }
  Index features() const { return a_.cols(); }
  ErmVariant variant() const { return variant_; }
  const SparseRowMatrix& data() const { return a_; }
  const Vector& labels() const { return labels_; }
  double lambda() const { return lambda_; }
  double lambda2() const { return lambda2_; }

  OracleState make_state(const Vector& y) const {
    require(y.size() == dim(), "erm dual: dimension mismatch");
    OracleState s{y, Vector()};
    rebuild(s);
    return s;
  }
  void rebuild(OracleState& s) const { s.cache = a_.multiply_transpose(s.point); }

  double value(const OracleState& s) const {
    const double n = static_cast<double>(dim());
    double loss = 0.0;
    for (Index i = 0; i < dim(); ++i) loss += loss_conj(s.point[i], labels_[i]);
    return loss / n + reg_conj_of_sum(s.cache);
  }

  double coord_grad(const OracleState& s, Index i) const {
    const double n = static_cast<double>(dim());
    const double g_loss = loss_conj_deriv(s.point[i], labels_[i]) / n;
    if (variant_ == ErmVariant::smoothed_lasso) {
      // -(1/n) <a_i, grad r'*(-v/n)>, evaluated only on the support of a_i.
      double acc = 0.0;
      for (const auto& e : a_.row(i)) {
        acc += e.value * conjugate::elastic_reg_conj_deriv(-s.cache[e.col] / n, lambda_, lambda2_);
      }
      return g_loss - acc / n;
    }
    return g_loss + a_.row_dot(i, s.cache) / (lambda_ * n * n);
  }

  void apply_coord_step(OracleState& s, Index i, double d) const {
    s.point[i] += d;
    a_.add_row(i, d, s.cache);
  }

  // L_i = 1/n + |a_i|^2 / (lambda' n^2), lambda' = lambda2 for the smoothed Lasso.
  Vector coordinate_smoothness() const {
    const double n = static_cast<double>(dim());
    const double lam = variant_ == ErmVariant::smoothed_lasso ? lambda2_ : lambda_;
    Vector l(dim());
    for (Index i = 0; i < dim(); ++i) l[i] = 1.0 / n + a_.row_norm_sq(i) / (lam * n * n);
    return l;
  }

  // The squared-loss variants are 1/n-strongly convex in the Euclidean norm,
  // hence (1/n) min_i L_i^{-beta}-strongly convex in the L_beta norm. The
  // penalty variant is only convex.
  SmoothnessProfile profile(double beta = 0.0) const {
    const Vector l = coordinate_smoothness();
    if (variant_ == ErmVariant::l1l2_penalty) return SmoothnessProfile(l, beta, 0.0);
    const double n = static_cast<double>(dim());
    const double sigma = beta == 0.0 ? 1.0 / n : l.array().pow(-beta).minCoeff() / n;
    return SmoothnessProfile(l, beta, sigma);
  }

  /// w = grad r*(-(1/n) sum_i y_i a_i).
  Vector primal_from_dual(const Vector& y) const {
    require(y.size() == dim(), "erm dual: dimension mismatch");
    return primal_from_sum(a_.multiply_transpose(y));
  }

  Vector primal_from_sum(const Vector& v) const {
    const double n = static_cast<double>(dim());
    Vector w(v.size());
    for (Index j = 0; j < v.size(); ++j) {
      const double z = -v[j] / n;
      w[j] = variant_ == ErmVariant::smoothed_lasso
                 ? conjugate::elastic_reg_conj_deriv(z, lambda_, lambda2_)
                 : z / lambda_;
    }
    return w;
  }

  /// P(w) with the variant's loss and its original regularizer. For the
  /// smoothed Lasso this is lambda |w|_1 only; see smoothing_term.
  double primal_objective(const Vector& w) const {
    require(w.size() == features(), "erm dual: primal point has the wrong dimension");
    const double n = static_cast<double>(dim());
    double loss = 0.0;
    for (Index i = 0; i < dim(); ++i) loss += primal_loss(a_.row_dot(i, w), labels_[i]);
    double reg = 0.0;
    if (variant_ == ErmVariant::smoothed_lasso) {
      reg = lambda_ * w.lpNorm<1>();
    } else {
      reg = 0.5 * lambda_ * w.squaredNorm();
    }
    return loss / n + reg;
  }

  // lambda2/2 |w|^2 for the smoothed Lasso, zero otherwise.
  double smoothing_term(const Vector& w) const {
    return variant_ == ErmVariant::smoothed_lasso ? 0.5 * lambda2_ * w.squaredNorm() : 0.0;
  }

  // The objective that is exactly dual to D: P plus the smoothing term.
  double paired_primal_objective(const Vector& w) const {
    return primal_objective(w) + smoothing_term(w);
  }

  /// P(w(y)) + D(y); nonnegative, zero at the optimum.
  double duality_gap(const Vector& y) const {
    const OracleState s = make_state(y);
    return paired_primal_objective(primal_from_sum(s.cache)) + value(s);
  }

  double loss_conj(double s, double l) const {
    return variant_ == ErmVariant::l1l2_penalty ? conjugate::penalty_loss_conj(s, l)
                                                : conjugate::squared_loss_conj(s, l);
  }
  double loss_conj_deriv(double s, double l) const {
    return variant_ == ErmVariant::l1l2_penalty ? conjugate::penalty_loss_conj_deriv(s, l)
                                                : conjugate::squared_loss_conj_deriv(s, l);
  }
  double primal_loss(double t, double l) const {
    return variant_ == ErmVariant::l1l2_penalty ? conjugate::penalty_loss(t, l)
                                                : conjugate::squared_loss(t, l);
  }

 private:
  // r*(-v/n)
  double reg_conj_of_sum(const Vector& v) const {
    const double n = static_cast<double>(dim());
    if (variant_ == ErmVariant::smoothed_lasso) {
      double s = 0.0;
      for (Index j = 0; j < v.size(); ++j) s += conjugate::elastic_reg_conj(-v[j] / n, lambda_, lambda2_);
      return s;
    }
    return v.squaredNorm() / (2.0 * lambda_ * n * n);
  }

  ErmVariant variant_;
  SparseRowMatrix a_;
  Vector labels_;
  double lambda_;
  double lambda2_;
};

inline Problem<ErmDual> build_ridge_dual(SparseRowMatrix data, Vector labels, double lambda,
                                         double beta = 0.0) {
  ErmDual oracle(ErmVariant::ridge, std::move(data), std::move(labels), lambda);
  auto profile = oracle.profile(beta);
  return {std::move(oracle), std::move(profile)};
}

inline Problem<ErmDual> build_lasso_dual(SparseRowMatrix data, Vector labels, double lambda,
                                         double lambda2, double beta = 0.0) {
  require(std::isfinite(lambda2) && lambda2 > 0.0, "lasso dual: lambda2 must be positive");
  ErmDual oracle(ErmVariant::smoothed_lasso, std::move(data), std::move(labels), lambda, lambda2);
  auto profile = oracle.profile(beta);
  return {std::move(oracle), std::move(profile)};
}

inline Problem<ErmDual> build_penalty_dual(SparseRowMatrix data, Vector labels, double lambda,
                                           double beta = 0.0) {
  ErmDual oracle(ErmVariant::l1l2_penalty, std::move(data), std::move(labels), lambda);
  auto profile = oracle.profile(beta);
  return {std::move(oracle), std::move(profile)};
}

inline Vector primal_from_dual(const ErmDual& problem, const Vector& y) {
  return problem.primal_from_dual(y);
}

inline double primal_objective(const ErmDual& problem, const Vector& w) {
  return problem.primal_objective(w);
}

// ===========================================================================
// Reference minima
// ===========================================================================

struct ReferenceMinimum {
  double value = 0.0;
  // Estimated absolute error of `value`.
  double uncertainty = 0.0;
  // A minimizer (empty when not computed).
  Vector solution;
  // Coordinate iterations spent (0 for closed forms).
  std::int64_t iterations = 0;
};

inline ReferenceMinimum reference_minimum(const DiagQuadratic& q) {
  return {0.0, 0.0, q.minimizer(), 0};
}

inline ReferenceMinimum reference_minimum(const DenseQuadratic& q) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(q.matrix());
  const Vector x = ldlt.solve(q.linear());
  return {-0.5 * q.linear().dot(x), 0.0, x, 0};
}

/// f* = -1/2 |x+|^2 where x+ is the minimum-norm solution of A x = b. Throws
/// when the system is inconsistent (f is then unbounded below).
inline ReferenceMinimum reference_minimum(const KaczmarzQuadratic& q) {
  const Eigen::MatrixXd a = q.matrix().to_dense();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Vector x = cod.solve(q.rhs());
  const double resid = (a * x - q.rhs()).norm();
  if (resid > 1e-8 * std::max(1.0, q.rhs().norm())) {
    throw ConvergenceFailure("kaczmarz problem: A x = b is inconsistent (residual " +
                             std::to_string(resid) + "); the objective is unbounded below");
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_t(a.transpose());
  const Vector y = cod_t.solve(x);
  const double f = -0.5 * x.squaredNorm();
  return {f, 1e-14 * std::max(1.0, std::abs(f)), y, 0};
}

struct ReferenceOptions {
  std::int64_t round_epochs = 50;
  std::int64_t max_epochs = 200000;
  double rel_tol = 1e-14;
  std::uint64_t seed = 0x5eed;
};

/// Minimizes D by warm-started rounds of the accelerated method (the strongly
/// convex one when the profile allows it) until two successive rounds each
/// improve the objective by at most rel_tol * max(1, |D|).
inline ReferenceMinimum iterative_reference_minimum(const ErmDual& problem,
                                                    const ReferenceOptions& opt = {}) {
  const auto profile = problem.profile(0.0);
  const Index n = problem.dim();
  Vector y = Vector::Zero(n);
  double best = problem.value(problem.make_state(y));
  double last_improvement = std::numeric_limits<double>::infinity();
  int quiet_rounds = 0;
  std::int64_t spent = 0;
  for (std::uint64_t round = 0; spent < opt.max_epochs * n; ++round) {
    SolverConfig cfg;
    cfg.iters = opt.round_epochs * n;
    cfg.seed = stream_seed(opt.seed, round);
    cfg.trace_stride = cfg.iters;
    SolverResult res = profile.strongly_convex() ? nu_acdm(problem, profile, y, cfg)
                                                 : nu_acdm_ns(problem, profile, y, cfg);
    spent += res.iterations;
    problem.rebuild(res.state);
    const double val = problem.value(res.state);
    const double improvement = best - val;
    if (val < best) {
      best = val;
      y = res.solution;
    }
    last_improvement = std::max(improvement, 0.0);
    if (improvement <= opt.rel_tol * std::max(1.0, std::abs(best))) {
      if (++quiet_rounds >= 2) {
        return {best, std::max(last_improvement, 1e-15 * std::max(1.0, std::abs(best))), y, spent};
      }
    } else {
      quiet_rounds = 0;
    }
  }
  throw ConvergenceFailure("reference minimum: no stationarity within " +
                           std::to_string(opt.max_epochs) + " epochs (last improvement " +
                           std::to_string(last_improvement) + ")");
}

/// Ridge is solved in closed form: D is quadratic with Hessian
/// I/n + A A^T / (lambda n^2) and linear term l/n. The other variants are
/// piecewise quadratic and use iterative_reference_minimum.
inline ReferenceMinimum reference_minimum(const ErmDual& problem, const ReferenceOptions& opt = {}) {
  if (problem.variant() != ErmVariant::ridge) return iterative_reference_minimum(problem, opt);
  const double n = static_cast<double>(problem.dim());
  const Eigen::MatrixXd a = problem.data().to_dense();
  Eigen::MatrixXd h = (a * a.transpose()) / (problem.lambda() * n * n);
  h.diagonal().array() += 1.0 / n;
  const Vector c = problem.labels() / n;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  const Vector y = -ldlt.solve(c);
  const double f = 0.5 * c.dot(y);
  return {f, 1e-14 * std::max(1.0, std::abs(f)), y, 0};
}

}  // namespace nuacdm
