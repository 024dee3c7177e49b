#pragma once
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace nuacdm {

// Discrete distribution over [0, n) with O(1) draws (Vose's alias method).
// Zero-weight indices are legal and never returned.
class WeightedSampler {
 public:
  // One alias-table slot: keep the slot with probability `keep`, otherwise
  // return `alias`.
  struct Slot {
    double keep;
    Index alias;
  };

  WeightedSampler(std::span<const double> weights, std::uint64_t seed) : rng_(seed) {
    require(!weights.empty(), "sampler: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
      require(std::isfinite(w), "sampler: non-finite weight");
      require(w >= 0.0, "sampler: negative weight");
      total += w;
    }
    require(total > 0.0, "sampler: all weights are zero");

    const auto n = static_cast<Index>(weights.size());
    probs_ = Vector(n);
    for (Index i = 0; i < n; ++i) probs_[i] = weights[static_cast<std::size_t>(i)] / total;
    build_table();
  }

  WeightedSampler(const Vector& weights, std::uint64_t seed)
      : WeightedSampler(std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())),
                        seed) {}

  Index size() const { return probs_.size(); }

  // Exact normalized weights w_i / sum w.
  const Vector& probabilities() const { return probs_; }

  const std::vector<Slot>& table() const { return table_; }

  Index sample() {
    const auto j = static_cast<Index>(rng_.index(static_cast<std::uint64_t>(table_.size())));
    const Slot& s = table_[static_cast<std::size_t>(j)];
    return rng_.uniform() < s.keep ? j : s.alias;
  }

 private:
  void build_table() {
    const Index n = probs_.size();
    table_.assign(static_cast<std::size_t>(n), Slot{0.0, 0});
    std::vector<double> scaled(static_cast<std::size_t>(n));
    std::vector<Index> small, large;
    Index some_positive = -1;
    for (Index i = 0; i < n; ++i) {
      scaled[static_cast<std::size_t>(i)] = probs_[i] * static_cast<double>(n);
      if (probs_[i] > 0.0 && some_positive < 0) some_positive = i;
      (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const Index s = small.back();
      small.pop_back();
      const Index l = large.back();
      auto& sl = table_[static_cast<std::size_t>(s)];
      sl.keep = scaled[static_cast<std::size_t>(s)];
      sl.alias = l;
      scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
      if (scaled[static_cast<std::size_t>(l)] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers carry mass 1 up to rounding. A zero-weight leftover must stay
    // unreachable, so it is redirected to a positive index instead.
    for (auto* rest : {&small, &large}) {
      for (Index i : *rest) {
        auto& slot = table_[static_cast<std::size_t>(i)];
        if (probs_[i] > 0.0) {
          slot = Slot{1.0, i};
        } else {
          slot = Slot{0.0, some_positive};
        }
      }
    }
  }

  Vector probs_;
  std::vector<Slot> table_;
  Rng rng_;
};

inline WeightedSampler build_sampler(const Vector& weights, std::uint64_t seed) {
  return WeightedSampler(weights, seed);
}

}  // namespace nuacdm
