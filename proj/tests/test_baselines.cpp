#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhoest/baselines.hpp"
#include "rhoest/scenarios.hpp"

using namespace rhoest;

namespace {

Dataset constant_data(std::size_t n, double y) {
  Dataset ds(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    ds.w(static_cast<Eigen::Index>(i), 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    ds.y[i] = y;
  }
  return ds;
}

}  // namespace

TEST(Mle, ConstantPoissonIsLogMean) {
  const auto fam = NaturalExpFamily::poisson();
  const auto model = RegressionModel::piecewise_constant(1);
  std::mt19937_64 rng(1);
  Dataset ds = constant_data(400, 0.0);
  double sum = 0.0;
  for (auto& y : ds.y) {
    y = sample(fam, std::log(3.2), rng);
    sum += y;
  }
  const MleResult r = mle(ds, fam, model);
  ASSERT_TRUE(r.exists);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.eta_hat[0], std::log(sum / 400.0), 1e-8);
  EXPECT_LE(r.gradient_norm, 1e-8 * 400);
}

TEST(Mle, WellSpecifiedFitsAreNearTruth) {
  for (const char* id : {"bernoulli_ws", "poisson_ws", "exponential_ws"}) {
    const Scenario s = make_scenario(id);
    const Dataset ds = generate(s, 2024, 0);
    const MleResult r = mle(ds, s.family, s.model);
    ASSERT_TRUE(r.exists) << id;
    EXPECT_TRUE(r.converged) << id;
    EXPECT_LE(r.gradient_norm, 1e-8 * static_cast<double>(ds.size())) << id;
    // Likelihood at the fit is at least the likelihood at the truth.
    EXPECT_GE(r.log_lik, log_likelihood(ds, s.family, s.model, s.eta_star)) << id;
  }
}

TEST(Mle, SeparableLogitDoesNotExist) {
  const Scenario s = make_scenario("bernoulli_separable");
  int missing = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const MleResult r = mle(generate(s, 11, rep), s.family, s.model);
    if (!r.exists) {
      ++missing;
      EXPECT_EQ(r.eta_hat.size(), 0);
      EXPECT_EQ(r.eta_last.size(), 6);
    }
  }
  EXPECT_GE(missing, 19);
}

TEST(Mle, FixtureIsSeparable) {
  std::ifstream in(std::string(RHOEST_TEST_DATA_DIR) + "/separable_logit.csv");
  ASSERT_TRUE(in.good());
  const Dataset ds = read_csv(in);
  const MleResult r = mle(ds, NaturalExpFamily::bernoulli(), RegressionModel::linear());
  EXPECT_FALSE(r.exists);
}

TEST(Mle, LikelihoodUnboundedWithOutlierLabel) {
  // y = -1 at a huge covariate: the likelihood increases without bound.
  const Scenario s = make_scenario("bernoulli_outlier");
  const MleResult r = mle(generate(s, 4, 0), s.family, s.model);
  EXPECT_FALSE(r.exists);
}

TEST(Mle, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int draws = 0;
  for (const char* id : {"bernoulli_ws", "poisson_ws", "exponential_ws"}) {
    const Scenario s = make_scenario(id);
    for (int k = 0; k < 10; ++k, ++draws) {
      const Dataset ds = generate(s, 100 + k, 0);
      Vector eta = s.eta_star;
      for (auto& e : eta) e += 0.3 * u(rng);
      const Vector g = log_likelihood_gradient(ds, s.family, s.model, eta);
      for (int j = 0; j < 6; ++j) {
        Vector up = eta, dn = eta;
        up[j] += 1e-5;
        dn[j] -= 1e-5;
        const double fd = (log_likelihood(ds, s.family, s.model, up) - log_likelihood(ds, s.family, s.model, dn)) / 2e-5;
        EXPECT_NEAR(g[j], fd, 1e-4 * std::max(1.0, std::abs(fd))) << id << " coord " << j;
      }
    }
  }
  EXPECT_EQ(draws, 30);
}

TEST(Mle, DimensionMismatchThrows) {
  Dataset ds(10, 3);
  ds.w.setZero();
  EXPECT_THROW(mle(ds, NaturalExpFamily::poisson(), RegressionModel::loglog1pexp()), DomainError);
}

TEST(MedianEstimate, ConstantPoissonRoot) {
  const auto fam = NaturalExpFamily::poisson();
  const auto model = RegressionModel::piecewise_constant(1);
  const Dataset ds = constant_data(50, 1.0);
  std::mt19937_64 rng(3);
  const auto r = median_estimate(ds, fam, model, OptimizerSettings{}, rng);
  EXPECT_NEAR(r.eta_hat[0], oracle::kPoissonMedianRootY1, 1e-4);
  EXPECT_LE(r.criterion, r.warm_start_criterion);
}

TEST(MedianEstimate, ConstantExponentialRoot) {
  const auto fam = NaturalExpFamily::exponential();
  const auto model = RegressionModel::piecewise_constant(1, std::nullopt, SearchBox::uniform(1, 1e-3, 20.0));
  const Dataset ds = constant_data(50, 2.0);
  std::mt19937_64 rng(4);
  const auto r = median_estimate(ds, fam, model, OptimizerSettings{}, rng);
  EXPECT_NEAR(r.eta_hat[0], oracle::kExponentialMedianRootY2, 1e-4);
}

TEST(MedianEstimate, NeverWorseThanWarmStartAndDeterministic) {
  for (const char* id : {"poisson_ws", "exponential_outlier"}) {
    const Scenario s = make_scenario(id);
    const Dataset ds = generate(s, 6, 0);
    std::mt19937_64 a(9), b(9);
    const auto ra = median_estimate(ds, s.family, s.model, OptimizerSettings{}, a);
    const auto rb = median_estimate(ds, s.family, s.model, OptimizerSettings{}, b);
    EXPECT_LE(ra.criterion, ra.warm_start_criterion) << id;
    EXPECT_EQ(ra.eta_hat, rb.eta_hat) << id;
    const BoundDesign design(s.model, ds.w);
    EXPECT_DOUBLE_EQ(median_criterion(ds, s.family, design, ra.eta_hat), ra.criterion);
  }
}

TEST(MedianEstimate, BernoulliUnsupported) {
  const Scenario s = make_scenario("bernoulli_ws");
  std::mt19937_64 rng(1);
  EXPECT_THROW(median_estimate(generate(s, 1, 0), s.family, s.model, OptimizerSettings{}, rng), UnsupportedError);
}

TEST(HingeInit, ObjectiveBelowZeroStart) {
  const Scenario s = make_scenario("bernoulli_ws");
  const Dataset ds = generate(s, 12, 0);
  const auto r = hinge_init_detailed(ds);
  EXPECT_TRUE(r.converged);
  EXPECT_DOUBLE_EQ(hinge_objective(ds, Vector::Zero(6)), 10.0 * static_cast<double>(ds.size()));
  EXPECT_LT(r.objective, hinge_objective(ds, Vector::Zero(6)));
}

TEST(HingeInit, FeasibleAllOnes) {
  // All y = 1 and w >= 0.5: eta = (0, 2, 0, 0, 0, 0) gives theta >= 1 everywhere.
  Dataset ds(40, 5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) ds.w(i, j) = u(rng);
  std::fill(ds.y.begin(), ds.y.end(), 1.0);
  Vector feasible = Vector::Zero(6);
  feasible[1] = 2.0;
  const auto r = hinge_init_detailed(ds);
  EXPECT_LE(r.objective, 0.5 * feasible.tail(5).squaredNorm() + 1e-8);
}

TEST(HingeInit, SymmetricDataHasZeroIntercept) {
  Dataset ds(60, 5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      ds.w(i, j) = u(rng) + (j == 0 ? 0.3 : 0.0);
      ds.w(i + 30, j) = -ds.w(i, j);
    }
    ds.y[static_cast<std::size_t>(i)] = 1.0;
    ds.y[static_cast<std::size_t>(i + 30)] = 0.0;
  }
  const auto r = hinge_init_detailed(ds);
  EXPECT_NEAR(r.eta[0], 0.0, 1e-6);
}

TEST(HingeInit, MatchesSubgradientReference) {
  // A slow projected subgradient run on a small problem lands on the same objective.
  const Scenario s = make_scenario("bernoulli_ws");
  Dataset ds = generate(s, 21, 0);
  const auto r = hinge_init_detailed(ds);
  Vector eta = Vector::Zero(6);
  Vector best = eta;
  double best_f = hinge_objective(ds, eta);
  for (int k = 1; k <= 20000; ++k) {
    Vector g = Vector::Zero(6);
    g.tail(5) = eta.tail(5);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double sgn = ds.y[i] >= 0.5 ? 1.0 : -1.0;
      const auto row = ds.w.row(static_cast<Eigen::Index>(i));
      const double theta = eta[0] + row.dot(eta.tail(5));
      if (1.0 - sgn * theta > 0.0) {
        g[0] -= 10.0 * sgn;
        g.tail(5) -= 10.0 * sgn * row.transpose();
      }
    }
    eta -= (1.0 / (10.0 * std::sqrt(static_cast<double>(k)))) * g / std::max(1.0, g.norm());
    const double f = hinge_objective(ds, eta);
    if (f < best_f) {
      best_f = f;
      best = eta;
    }
  }
  EXPECT_LE(r.objective, best_f + 1e-6);
  EXPECT_NEAR(r.objective, best_f, 0.05 * best_f);
}

TEST(HingeInit, OutlierRowHandled) {
  const Scenario s = make_scenario("bernoulli_outlier");
  const auto r = hinge_init_detailed(generate(s, 3, 0));
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.eta.allFinite());
}

TEST(HingeInit, RejectsNonBinary) {
  const Scenario s = make_scenario("poisson_ws");
  EXPECT_THROW(hinge_init(generate(s, 1, 0)), UnsupportedError);
}
