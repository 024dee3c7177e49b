#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <nuacdm/nuacdm.hpp>

using namespace nuacdm;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Total probability each index receives from the alias table.
Vector table_mass(const WeightedSampler& s) {
  const auto& t = s.table();
  const double n = static_cast<double>(t.size());
  Vector mass = Vector::Zero(static_cast<Index>(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j) {
    mass[static_cast<Index>(j)] += t[j].keep / n;
    mass[t[j].alias] += (1.0 - t[j].keep) / n;
  }
  return mass;
}

}  // namespace

TEST(Sampler, NormalizesWeights) {
  EXPECT_TRUE(build_sampler(vec({1, 4}), 0).probabilities().isApprox(vec({0.2, 0.8}), 1e-15));
  EXPECT_TRUE(build_sampler(vec({2, 2}), 0).probabilities().isApprox(vec({0.5, 0.5}), 1e-15));
}

TEST(Sampler, SqrtSmoothnessWeights) {
  const SmoothnessProfile p(vec({1, 4}), 0.0);
  const Vector w = p.l().array().pow(0.5) / s_alpha(p, 0.5);
  const Vector probs = build_sampler(w, 0).probabilities();
  EXPECT_NEAR(probs[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(probs[1], 2.0 / 3.0, 1e-15);
}

TEST(Sampler, RowNormWeightsOfSkewedSystem) {
  const LinearSystem sys = gen_linear_system(300, 100, 0.1, 3);
  const Eigen::MatrixXd a = sys.a.to_dense();
  std::vector<double> norms;
  double total = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    norms.push_back(a.row(i).norm());
    total += norms.back();
  }
  const Vector p = build_sampler(sys.a.row_norms(), 1).probabilities();
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  for (Index i = 0; i < a.rows(); ++i) EXPECT_NEAR(p[i], norms[static_cast<std::size_t>(i)] / total, 1e-14);
  // 30 rows of norm 10 and 270 of norm 1
  EXPECT_NEAR(p.maxCoeff(), 10.0 / (10.0 * 30 + 270), 1e-12);
}

TEST(Sampler, RandomWeightsSumToOne) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    Vector w(1 + static_cast<Index>(rng.index(500)));
    for (Index i = 0; i < w.size(); ++i) w[i] = std::exp(rng.uniform(-20.0, 20.0));
    EXPECT_NEAR(build_sampler(w, t).probabilities().sum(), 1.0, 1e-12);
  }
}

TEST(Sampler, DegenerateDistribution) {
  auto s = build_sampler(vec({1, 0}), 3);
  for (int k = 0; k < 10000; ++k) EXPECT_EQ(s.sample(), 0);
}

TEST(Sampler, ZeroWeightsAreNeverDrawn) {
  Vector w = Vector::Zero(50);
  w[7] = 1.0;
  w[31] = 3.0;
  w[49] = 1e-9;
  auto s = build_sampler(w, 11);
  for (int k = 0; k < 200000; ++k) {
    const Index i = s.sample();
    EXPECT_TRUE(i == 7 || i == 31 || i == 49) << i;
  }
  EXPECT_EQ(s.probabilities()[0], 0.0);
}

TEST(Sampler, FairCoinFrequency) {
  auto s = build_sampler(vec({1, 1}), 2024);
  const int draws = 1000000;
  int zeros = 0;
  for (int k = 0; k < draws; ++k) zeros += s.sample() == 0;
  EXPECT_NEAR(static_cast<double>(zeros) / draws, 0.5, 0.002);
}

TEST(Sampler, ChiSquareGoodnessOfFit) {
  auto s = build_sampler(vec({1, 2, 3}), 99);
  const int draws = 1000000;
  std::vector<double> counts(3, 0.0);
  for (int k = 0; k < draws; ++k) counts[static_cast<std::size_t>(s.sample())] += 1.0;
  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double expect = draws * (i + 1) / 6.0;
    chi2 += (counts[static_cast<std::size_t>(i)] - expect) * (counts[static_cast<std::size_t>(i)] - expect) / expect;
  }
  // 0.999 quantile of chi-square with 2 degrees of freedom: -2 ln(0.001)
  EXPECT_LT(chi2, -2.0 * std::log(0.001));
}

TEST(Sampler, AliasTableMassIsExact) {
  Rng rng(17);
  for (Index n = 1; n <= 64; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      Vector w(n);
      for (Index i = 0; i < n; ++i) w[i] = static_cast<double>(rng.index(6)) / static_cast<double>(1 + rng.index(4));
      if (w.sum() == 0.0) w[0] = 1.0;
      const auto s = build_sampler(w, 0);
      const Vector mass = table_mass(s);
      for (Index i = 0; i < n; ++i) EXPECT_NEAR(mass[i], w[i] / w.sum(), 1e-12) << "n=" << n << " i=" << i;
    }
  }
}

TEST(Sampler, Reproducible) {
  const Vector w = norm_profile::log_uniform(200, 0.01, 100.0, 1);
  auto a = build_sampler(w, 123);
  auto b = build_sampler(w, 123);
  auto c = build_sampler(w, 124);
  int differ = 0;
  for (int k = 0; k < 100000; ++k) {
    const Index x = a.sample();
    ASSERT_EQ(x, b.sample());
    differ += x != c.sample();
  }
  EXPECT_GT(differ, 0);
}

TEST(Sampler, RejectsInvalidWeights) {
  EXPECT_THROW(build_sampler(Vector(), 0), InvalidArgument);
  EXPECT_THROW(build_sampler(vec({0, 0}), 0), InvalidArgument);
  EXPECT_THROW(build_sampler(vec({1, -1}), 0), InvalidArgument);
  EXPECT_THROW(build_sampler(vec({1, std::numeric_limits<double>::quiet_NaN()}), 0), InvalidArgument);
  EXPECT_THROW(build_sampler(vec({1, std::numeric_limits<double>::infinity()}), 0), InvalidArgument);
}

TEST(Rng, StreamsAreDistinct) {
  EXPECT_NE(stream_seed(1, 0), stream_seed(1, 1));
  EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
  EXPECT_EQ(stream_seed(5, 3), stream_seed(5, 3));
  Rng r(1);
  for (int k = 0; k < 1000; ++k) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.index(7), 7u);
  }
}
