#include <gtest/gtest.h>

#include <iostream>

#include <nuacdm/acceptance.hpp>

using namespace nuacdm;

namespace {

// Runs everything once so the summary lines come out together.
const std::vector<CriterionResult>& results() {
  static const std::vector<CriterionResult> r = [] {
    auto out = run_acceptance();
    std::cout << "---- acceptance ----\n";
    for (const auto& c : out) std::cout << format_result(c) << '\n';
    std::cout << "--------------------" << std::endl;
    return out;
  }();
  return r;
}

void expect_criterion(int id) {
  const auto& all = results();
  ASSERT_GE(all.size(), static_cast<std::size_t>(id));
  const auto& c = all[static_cast<std::size_t>(id - 1)];
  EXPECT_EQ(c.id, id);
  EXPECT_TRUE(c.passed) << format_result(c);
}

}  // namespace

TEST(Acceptance, ConvexRateBound) { expect_criterion(1); }
TEST(Acceptance, StronglyConvexDecay) { expect_criterion(2); }
TEST(Acceptance, CoordinateDescentGuarantee) { expect_criterion(3); }
TEST(Acceptance, MirrorStepResidual) { expect_criterion(4); }
TEST(Acceptance, ScheduleIdentities) { expect_criterion(5); }
TEST(Acceptance, SpeedupFactors) { expect_criterion(6); }
TEST(Acceptance, KaczmarzRace) { expect_criterion(7); }
TEST(Acceptance, OracleCorrectness) { expect_criterion(8); }
TEST(Acceptance, RidgeDuality) { expect_criterion(9); }
TEST(Acceptance, BetaSweep) { expect_criterion(10); }
TEST(Acceptance, SpecializationAndDeterminism) { expect_criterion(11); }
TEST(Acceptance, KaczmarzRate) { expect_criterion(12); }
