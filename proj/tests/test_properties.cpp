#include <gtest/gtest.h>

#include "property_checks.hpp"

using namespace rhoest;

TEST(Properties, PsiIdentities) {
  const auto c = props::psi_identities();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, TAntisymmetricAndBounded) {
  const auto c = props::t_antisymmetry();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, UpsilonNonnegative) {
  const auto c = props::upsilon_nonnegative();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, HellingerClosedFormMatchesOracle) {
  const auto c = props::hellinger_matches_oracle();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, MleGradientMatchesFiniteDifferences) {
  const auto c = props::mle_gradient_fd();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, MixtureDistanceBoundedByRate) {
  const auto c = props::mixture_rate_bound();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, RiskMcReplaysExactly) {
  const auto c = props::risk_mc_replay();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Properties, CheckRecordsFirstFailure) {
  props::Check c;
  c.fail("first");
  c.fail("second");
  EXPECT_FALSE(c.ok);
  EXPECT_EQ(c.detail, "first");
}
