#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nuacdm/nuacdm.hpp>

using namespace nuacdm;

namespace {

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// Theoretical speed-up of a generated (m, n, r) system with norms 10 and 1.
double two_level_speedup(double r) { return std::sqrt(99.0 * r + 1.0) / (9.0 * r + 1.0); }

bool same_traces(const std::vector<LabeledTrace>& a, const std::vector<LabeledTrace>& b) {
  std::ostringstream x, y;
  write_trace(x, a);
  write_trace(y, b);
  return x.str() == y.str();
}

}  // namespace

TEST(Speedup, UniformNormsGiveOne) {
  const auto rows = speedup_table({1.0});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].theory, 1.0, 1e-12);
  EXPECT_FALSE(rows[0].measured);
}

TEST(Speedup, MatchesClosedForm) {
  const auto rows = speedup_table({0.1, 0.3, 0.5, 0.7});
  for (const auto& row : rows) {
    EXPECT_NEAR(row.theory, two_level_speedup(row.r), 1e-12) << row.r;
  }
  EXPECT_NEAR(rows[0].theory, 1.7379, 0.03 * 1.7379);
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) EXPECT_GT(two_level_speedup(r), 1.0);
}

TEST(Speedup, CsvFormat) {
  std::ostringstream out;
  write_speedup_csv(out, {{1.0, 1.0, std::nullopt}, {0.1, 1.7376, 1.5}});
  EXPECT_EQ(out.str(), "r,theory,measured\n1.0,1.000000,\n0.1,1.737600,1.500000\n");
}

TEST(KaczmarzRace, UniformNormsTieAcdm) {
  const RaceResult race = run_kaczmarz_race(300, 100, 1.0, seeds(10), 1e-8);
  const double nu = race.at(algo::nu_acdm).median_epochs();
  const double ac = race.at(algo::acdm).median_epochs();
  ASSERT_TRUE(std::isfinite(nu));
  ASSERT_TRUE(std::isfinite(ac));
  EXPECT_NEAR(nu / ac, 1.0, 0.1);
  EXPECT_NEAR(race.theory_speedup, 1.0, 1e-12);
}

TEST(KaczmarzRace, SkewedNormsOrdering) {
  const RaceResult race = run_kaczmarz_race(300, 100, 0.1, seeds(10), 1e-8);
  const double nu = race.at(algo::nu_acdm).median_epochs();
  const double ac = race.at(algo::acdm).median_epochs();
  const double kz = race.at(algo::kaczmarz).median_epochs();
  EXPECT_LT(nu, ac);
  EXPECT_LT(ac, kz);
  EXPECT_GE(ac / nu, 1.3);
  EXPECT_EQ(race.all_traces().size(), 30u);
}

TEST(KaczmarzRace, OneByOneSystem) {
  const RaceResult race = run_kaczmarz_race(1, 1, 1.0, seeds(3), 1e-12);
  for (const auto& a : race.algos) {
    for (const auto& t : a.traces) {
      ASSERT_FALSE(t.trace.empty());
      EXPECT_LE(t.trace.back().iter, 2) << a.algo;
      EXPECT_LE(*t.trace.back().dist, 1e-12) << a.algo;
    }
  }
}

TEST(KaczmarzRace, Deterministic) {
  const RaceResult a = run_kaczmarz_race(60, 20, 0.2, {4, 5}, 1e-6);
  const RaceResult b = run_kaczmarz_race(60, 20, 0.2, {4, 5}, 1e-6);
  EXPECT_TRUE(same_traces(a.all_traces(), b.all_traces()));
}

TEST(KaczmarzRace, JobsDoNotChangeResults) {
  RaceOptions two;
  two.jobs = 2;
  const RaceResult a = run_kaczmarz_race(60, 20, 0.2, {1, 2, 3}, 1e-6);
  const RaceResult b = run_kaczmarz_race(60, 20, 0.2, {1, 2, 3}, 1e-6, two);
  EXPECT_TRUE(same_traces(a.all_traces(), b.all_traces()));
}

TEST(ErmRace, SkewedNormsFavorNonUniformSampling) {
  const Index n = 200;
  const Dataset ds = gen_skewed_dataset(n, 10, norm_profile::two_level(n, 0.1, 10.0, 1.0), 3);
  ErmRaceSpec spec;
  spec.lambda = 1e-4;
  spec.seeds = seeds(5);
  spec.epochs = 400;
  spec.eps = 1e-8;
  const RaceResult race = run_erm_race(ds, spec);
  const double nu = race.at(algo::nu_acdm).median_epochs();
  const double rc = race.at(algo::rcdm).median_epochs();
  ASSERT_TRUE(std::isfinite(nu));
  EXPECT_GT(race.theory_speedup, 1.3);
  EXPECT_GE(rc / nu, race.theory_speedup / 2.0) << "rcdm " << rc << " nu " << nu;
  // ridge races carry the primal distance, which duality keeps nonnegative
  for (const auto& t : race.at(algo::nu_acdm).primal_traces) {
    ASSERT_FALSE(t.empty());
    for (const auto& r : t.records) EXPECT_GE(*r.dist, -1e-9);
  }
}

TEST(ErmRace, UniformNormsTieAcdm) {
  const Index n = 100;
  const Dataset ds = gen_skewed_dataset(n, 10, norm_profile::constant(n, 1.0), 4);
  ErmRaceSpec spec;
  spec.lambda = 1e-3;
  spec.seeds = seeds(10);
  spec.epochs = 300;
  spec.eps = 1e-8;
  const RaceResult race = run_erm_race(ds, spec);
  const double nu = race.at(algo::nu_acdm).median_epochs();
  const double ac = race.at(algo::acdm).median_epochs();
  ASSERT_TRUE(std::isfinite(nu));
  EXPECT_NEAR(nu / ac, 1.0, 0.1);
}

TEST(ErmRace, SingleExample) {
  const Dataset ds = gen_skewed_dataset(1, 3, norm_profile::constant(1, 2.0), 5);
  ErmRaceSpec spec;
  spec.epochs = 20;
  spec.eps = 1e-10;
  const RaceResult race = run_erm_race(ds, spec);
  for (const auto& a : race.algos) EXPECT_LE(a.median_epochs(), 3.0) << a.algo;
}

TEST(ErmRace, AllVariantsRun) {
  const Dataset ds = gen_skewed_dataset(40, 5, norm_profile::log_uniform(40, 0.5, 5.0, 1), 6);
  for (ErmVariant v : {ErmVariant::ridge, ErmVariant::smoothed_lasso, ErmVariant::l1l2_penalty}) {
    ErmRaceSpec spec;
    spec.variant = v;
    spec.lambda = 1e-2;
    spec.epochs = 30;
    spec.algos = {algo::nu_acdm, algo::acdm, algo::rcdm, algo::gd};
    const RaceResult race = run_erm_race(ds, spec);
    for (const auto& a : race.algos) {
      const auto& t = a.traces.front().trace;
      ASSERT_GE(t.size(), 2u);
      EXPECT_LT(*t.back().dist, *t.records.front().dist) << to_string(v) << " " << a.algo;
    }
  }
  ErmRaceSpec bad;
  bad.algos = {"newton"};
  EXPECT_THROW(run_erm_race(ds, bad), InvalidArgument);
}

TEST(BetaSweep, UniformSmoothnessMakesBetaIrrelevant) {
  const Dataset ds = gen_skewed_dataset(30, 5, norm_profile::constant(30, 1.0), 7);
  BetaSweepSpec spec;
  spec.lambda = 1e-2;
  spec.betas = {0.0, 0.5, 1.0};
  spec.seeds = seeds(3);
  spec.iters = {300};
  const auto entries = beta_sweep(ds, spec);
  ASSERT_EQ(entries.size(), 3u);
  for (std::size_t e = 1; e < entries.size(); ++e) {
    const auto& a = entries[0].mean_trace.records;
    const auto& b = entries[e].mean_trace.records;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k].value, b[k].value, 1e-9 * std::max(1.0, std::abs(a[k].value)));
  }
}

TEST(BetaSweep, BoundsHoldOnSkewedData) {
  const Dataset ds = gen_skewed_dataset(50, 10, norm_profile::log_uniform(50, 0.1, 10.0, 2), 8);
  BetaSweepSpec spec;
  spec.lambda = 1e-2;
  spec.seeds = seeds(50);
  const auto entries = beta_sweep(ds, spec);
  ASSERT_EQ(entries.size(), spec.betas.size());
  for (const auto& e : entries) {
    for (const auto& c : e.checks) EXPECT_TRUE(c.holds(1.2)) << e.beta << " T=" << c.iters << " " << c.mean_gap << " " << c.bound;
  }
}

TEST(BetaOne, SamplesUniformly) {
  const SmoothnessProfile p(norm_profile::log_uniform(10, 1e-2, 1e2, 3), 1.0);
  const Vector probs = nu_probabilities(p);
  for (Index i = 0; i < 10; ++i) EXPECT_NEAR(probs[i], 0.1, 1e-15);
  WeightedSampler s(probs, 12);
  const int draws = 100000;
  std::vector<int> counts(10, 0);
  for (int k = 0; k < draws; ++k) ++counts[static_cast<std::size_t>(s.sample())];
  const double sd = std::sqrt(draws * 0.1 * 0.9);
  for (int c : counts) EXPECT_NEAR(c, draws * 0.1, 4.0 * sd);
}

TEST(Summary, CsvLayout) {
  const auto path = std::filesystem::temp_directory_path() / "nuacdm_summary_test.csv";
  write_summary({{"kaczmarz-race", "nu-acdm", "r=0.1", 37.5, 1.7376}}, path.string());
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), "experiment,algo,param,median_epochs_to_eps,theory_speedup\nkaczmarz-race,nu-acdm,r=0.1,37.5,1.7376\n");
  std::filesystem::remove(path);
  EXPECT_THROW(write_summary({}, "/nonexistent/dir/summary.csv"), IoError);
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}
