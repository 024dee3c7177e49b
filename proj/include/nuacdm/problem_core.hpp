#pragma once
#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <utility>

#include "common.hpp"

namespace nuacdm {

// How the strong-convexity modulus of a profile was obtained.
//  - global: f is sigma-strongly convex on all of R^n, so sigma <= L_i^{1-beta}.
//  - restricted: strong convexity only holds orthogonally to a null space
//    (least-squares reformulations). The coordinate bound need not hold.
enum class ConvexityKind { global, restricted };

/// Coordinate smoothness L_i, the norm exponent beta and the strong-convexity
/// modulus sigma_beta measured in the norm sum_i x_i^2 L_i^beta. A modulus of
/// zero marks a function that is only assumed convex.
class SmoothnessProfile {
 public:
  SmoothnessProfile(Vector l, double beta, double sigma_beta = 0.0,
                    ConvexityKind kind = ConvexityKind::global)
      : l_(std::move(l)), beta_(beta), sigma_(sigma_beta), kind_(kind) {
    require(l_.size() >= 1, "smoothness profile needs at least one coordinate");
    for (Index i = 0; i < l_.size(); ++i) {
      require(std::isfinite(l_[i]) && l_[i] > 0.0,
              "coordinate smoothness L_" + std::to_string(i) + " must be positive and finite");
    }
    require(beta_ >= 0.0 && beta_ <= 1.0, "beta must lie in [0, 1]");
    require(std::isfinite(sigma_) && sigma_ >= 0.0, "sigma_beta must be nonnegative");
    if (kind_ == ConvexityKind::global) {
      // L_i >= sigma_beta L_i^beta for any globally strongly convex f.
      const double bound = (l_.array().pow(1.0 - beta_)).minCoeff();
      require(sigma_ <= bound * (1.0 + 1e-12),
              "sigma_beta exceeds min_i L_i^(1-beta); the profile is inconsistent");
    }
  }

  Index size() const { return l_.size(); }
  const Vector& l() const { return l_; }
  double l(Index i) const { return l_[i]; }
  double beta() const { return beta_; }
  double sigma_beta() const { return sigma_; }
  ConvexityKind convexity() const { return kind_; }
  bool strongly_convex() const { return sigma_ > 0.0; }

  // Same smoothness, different norm exponent and modulus.
  SmoothnessProfile with_beta(double beta, double sigma_beta) const {
    return SmoothnessProfile(l_, beta, sigma_beta, kind_);
  }

 private:
  Vector l_;
  double beta_;
  double sigma_;
  ConvexityKind kind_;
};

// sum_i L_i^alpha
inline double s_alpha(const SmoothnessProfile& profile, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  double s = 0.0;
  for (Index i = 0; i < profile.size(); ++i) s += std::pow(profile.l(i), alpha);
  return s;
}

// The exponent (1 - beta) / 2 that drives both the sampling and the rate.
inline double sampling_exponent(const SmoothnessProfile& profile) {
  return 0.5 * (1.0 - profile.beta());
}

/// Squared L_beta norm, sum_i x_i^2 L_i^beta.
inline double lbeta_norm_sq(const Vector& x, const SmoothnessProfile& profile) {
  require(x.size() == profile.size(), "lbeta_norm_sq: dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += x[i] * x[i] * std::pow(profile.l(i), profile.beta());
  return s;
}

inline double lbeta_inner(const Vector& x, const Vector& y, const SmoothnessProfile& profile) {
  require(x.size() == profile.size() && y.size() == profile.size(),
          "lbeta_inner: dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += x[i] * y[i] * std::pow(profile.l(i), profile.beta());
  return s;
}

/// Predicted iteration ratio of the non-uniform accelerated method over ACDM:
/// sqrt(n sum L_i) / sum sqrt(L_i). At least 1, with equality iff all L_i agree.
inline double speedup_factor(const SmoothnessProfile& profile) {
  const double n = static_cast<double>(profile.size());
  return std::sqrt(n * profile.l().sum()) / profile.l().array().sqrt().sum();
}

// ---------------------------------------------------------------------------
// Coordinate oracles
// ---------------------------------------------------------------------------

// A query point together with the oracle's cached products. Every oracle in
// this library keeps a cache that is a linear function of the point (A^T y,
// sum_i y_i a_i, Q x), so states can be recombined linearly without a rebuild.
struct OracleState {
  Vector point;
  Vector cache;
};

// out <- a * u + b * v, applied to point and cache alike. `out` may alias u or v.
inline void combine(OracleState& out, double a, const OracleState& u, double b,
                    const OracleState& v) {
  out.point = a * u.point + b * v.point;
  if (u.cache.size() > 0) out.cache = a * u.cache + b * v.cache;
}

// The interface every solver consumes.
//  make_state(x)            builds a state with a freshly computed cache
//  rebuild(state)           recomputes the cache from state.point
//  value(state)             f(point)
//  coord_grad(state, i)     i-th partial derivative at point
//  apply_coord_step(s,i,d)  point_i += d, cache updated incrementally
template <class O>
concept CoordOracle = requires(const O& o, OracleState& s, const OracleState& cs, const Vector& x,
                               Index i, double d) {
  { o.dim() } -> std::convertible_to<Index>;
  { o.make_state(x) } -> std::same_as<OracleState>;
  o.rebuild(s);
  { o.value(cs) } -> std::convertible_to<double>;
  { o.coord_grad(cs, i) } -> std::convertible_to<double>;
  o.apply_coord_step(s, i, d);
};

template <CoordOracle O>
double value_at(const O& oracle, const Vector& x) {
  return oracle.value(oracle.make_state(x));
}

template <CoordOracle O>
double coord_grad_at(const O& oracle, const Vector& x, Index i) {
  return oracle.coord_grad(oracle.make_state(x), i);
}

template <CoordOracle O>
Vector full_gradient(const O& oracle, const OracleState& state) {
  Vector g(oracle.dim());
  for (Index i = 0; i < oracle.dim(); ++i) g[i] = oracle.coord_grad(state, i);
  return g;
}

/// Central-difference check of the i-th coordinate gradient. Returns
/// |g_i - fd| / max(1, |g_i|).
template <CoordOracle O>
double grad_check(const O& oracle, const Vector& x, Index i, double h) {
  require(h > 0.0, "grad_check: step must be positive");
  require(x.size() == oracle.dim(), "grad_check: dimension mismatch");
  require(i >= 0 && i < oracle.dim(), "grad_check: coordinate out of range");
  const double g = coord_grad_at(oracle, x, i);
  Vector xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  const double fd = (value_at(oracle, xp) - value_at(oracle, xm)) / (2.0 * h);
  return std::abs(g - fd) / std::max(1.0, std::abs(g));
}

}  // namespace nuacdm
