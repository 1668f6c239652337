#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhoest/rho.hpp"
#include "rhoest/scenarios.hpp"

using namespace rhoest;

namespace {

Dataset single_row(double y, int d = 5) {
  Dataset ds(1, d);
  ds.w.setConstant(0.3);
  ds.y[0] = y;
  return ds;
}

Vector random_eta(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector eta(6);
  for (auto& e : eta) e = u(rng);
  return eta;
}

}  // namespace

TEST(Psi, Values) {
  EXPECT_EQ(psi(1.0), 0.0);
  EXPECT_EQ(psi(0.0), -1.0);
  EXPECT_EQ(psi(kInf), 1.0);
  EXPECT_DOUBLE_EQ(psi(1.5), 0.2);
  EXPECT_THROW(psi(-0.1), DomainError);
  EXPECT_THROW(psi(kNaN), DomainError);
}

TEST(Psi, InversionAndMonotonicity) {
  double prev = -1.0;
  for (int k = 1; k < 200; ++k) {
    const double x = 0.05 * k;
    EXPECT_NEAR(psi(1.0 / x), -psi(x), 1e-15);
    EXPECT_GE(psi(x), prev);
    prev = psi(x);
  }
}

TEST(Psi, LogRatioFormAgrees) {
  for (double lr : {-50.0, -3.0, -0.1, 0.0, 0.7, 12.0}) {
    EXPECT_NEAR(psi_of_log_ratio(lr), psi(std::sqrt(std::exp(lr))), 1e-14);
  }
  EXPECT_EQ(psi_of_log_ratio(kInf), 1.0);
  EXPECT_EQ(psi_of_log_ratio(-kInf), -1.0);
}

TEST(TStatistic, BernoulliHandExample) {
  const auto fam = NaturalExpFamily::bernoulli();
  const auto model = RegressionModel::linear();
  const Dataset ds = single_row(1.0);
  Vector eta = Vector::Zero(6);
  Vector eta_prime = Vector::Zero(6);
  eta_prime[0] = std::log(3.0);
  EXPECT_NEAR(t_statistic(ds, fam, model, eta, eta_prime), oracle::kTBernoulliOneObs, 1e-15);
  EXPECT_NEAR(oracle::kTBernoulliOneObs, psi(std::sqrt(1.5)), 1e-15);
}

TEST(TStatistic, ZeroAtSameParameter) {
  const Scenario s = make_scenario("poisson_ws");
  const Dataset ds = generate(s, 1, 0);
  EXPECT_EQ(t_statistic(ds, s.family, s.model, s.eta_star, s.eta_star), 0.0);
}

TEST(TStatistic, AntisymmetricAndBounded) {
  std::mt19937_64 rng(17);
  for (const char* id : {"bernoulli_ws", "poisson_ws", "exponential_ws", "bernoulli_outlier"}) {
    const Scenario s = make_scenario(id);
    const Dataset ds = generate(s, 3, 0);
    for (int k = 0; k < 50; ++k) {
      const Vector a = random_eta(rng, -5.0, 5.0);
      const Vector b = random_eta(rng, -5.0, 5.0);
      const double ab = t_statistic(ds, s.family, s.model, a, b);
      const double ba = t_statistic(ds, s.family, s.model, b, a);
      EXPECT_NEAR(ab, -ba, 1e-12 * static_cast<double>(ds.size())) << id;
      EXPECT_LE(std::abs(ab), static_cast<double>(ds.size()));
    }
  }
}

TEST(TStatistic, ParameterOutsideIntervalNamesIndex) {
  const auto fam = NaturalExpFamily::exponential();
  const auto model = RegressionModel::linear();
  Dataset ds(3, 5);
  ds.w.setConstant(0.1);
  ds.y = {1.0, 2.0, 3.0};
  ds.w(2, 0) = -100.0;
  Vector eta = Vector::Zero(6);
  eta[0] = 1.0;
  Vector bad = eta;
  bad[1] = 1.0;  // theta(w_2) = 1 - 100 < 0
  try {
    t_statistic(ds, fam, model, eta, bad);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("w_2"), std::string::npos) << e.what();
  }
}

TEST(TStatistic, GroupedPiecewiseMatchesDirectSum) {
  const auto fam = NaturalExpFamily::poisson();
  const auto model = RegressionModel::piecewise_constant(5, mean_parametrization(fam),
                                                         SearchBox::uniform(5, 1e-2, 20.0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset ds(300, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ds.w(static_cast<Eigen::Index>(i), 0) = u(rng);
    ds.y[i] = sample(fam, 0.5, rng);
  }
  Vector a(5), b(5);
  for (int j = 0; j < 5; ++j) {
    a[j] = 0.5 + 3 * u(rng);
    b[j] = 0.5 + 3 * u(rng);
  }
  double direct = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int c = model.cell_of(ds.w(static_cast<Eigen::Index>(i), 0));
    const double t0 = std::log(a[c]), t1 = std::log(b[c]);
    direct += psi(std::sqrt(std::exp(ds.y[i] * (t1 - t0) - (std::exp(t1) - std::exp(t0)))));
  }
  EXPECT_NEAR(t_statistic(ds, fam, model, a, b), direct, 1e-10);
}

TEST(TStatistic, FusedKernelsMatchGenericEvaluation) {
  // Compare against a direct evaluation through eval_theta and log_density.
  std::mt19937_64 rng(23);
  for (const char* id : {"bernoulli_ws", "poisson_ws", "exponential_ws", "poisson_outlier"}) {
    const Scenario s = make_scenario(id);
    const Dataset ds = generate(s, 9, 1);
    for (int k = 0; k < 5; ++k) {
      const Vector a = random_eta(rng, -3.0, 3.0);
      const Vector b = random_eta(rng, -3.0, 3.0);
      double direct = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.w.row(static_cast<Eigen::Index>(i));
        const std::span<const double> w(row.data(), 5);
        const double ta = s.model.eval_theta(std::span<const double>(a.data(), 6), w);
        const double tb = s.model.eval_theta(std::span<const double>(b.data(), 6), w);
        direct += psi_of_log_ratio(log_density(s.family, tb, ds.y[i]) - log_density(s.family, ta, ds.y[i]));
      }
      EXPECT_NEAR(t_statistic(ds, s.family, s.model, a, b), direct, 1e-9) << id;
    }
  }
}

TEST(Upsilon, NonNegativeAndProbesBase) {
  const Scenario s = make_scenario("exponential_ws");
  const Dataset ds = generate(s, 5, 0);
  RhoConfig cfg;
  cfg.sup_search.max_evals = 300;
  std::mt19937_64 rng(1);
  const auto u = upsilon(ds, s.family, s.model, s.eta_star, cfg, rng);
  EXPECT_GE(u.value, 0.0);
  EXPECT_EQ(u.argmax.size(), 6);
}

TEST(Upsilon, CollapsedBoxGivesZero) {
  auto model = RegressionModel::loglog1pexp();
  Vector eta(6);
  eta << 0.7, 3, 4, 10, 2, 5;
  SearchBox box;
  box.lo.assign(eta.data(), eta.data() + 6);
  box.hi = box.lo;
  model.set_search_box(box);
  const Scenario s = make_scenario("poisson_ws");
  const Dataset ds = generate(s, 2, 0);
  std::mt19937_64 rng(1);
  const auto u = upsilon(ds, s.family, model, eta, RhoConfig{}, rng);
  EXPECT_EQ(u.value, 0.0);
  EXPECT_EQ(u.argmax, eta);
}

TEST(Upsilon, TruthIsCertifiedOnWellSpecifiedLogit) {
  const Scenario s = make_scenario("bernoulli_ws");
  RhoConfig cfg;
  int certified = 0;
  const int seeds = 20;
  for (int k = 0; k < seeds; ++k) {
    const Dataset ds = generate(s, 1000 + k, 0);
    std::mt19937_64 rng(k);
    if (upsilon(ds, s.family, s.model, s.eta_star, cfg, rng).value <= cfg.certificate_level()) ++certified;
  }
  EXPECT_GE(certified, 19);
}

TEST(RhoEstimate, WellSpecifiedStopsQuickly) {
  for (const char* id : {"bernoulli_ws", "poisson_ws", "exponential_ws"}) {
    const Scenario s = make_scenario(id);
    const Dataset ds = generate(s, 77, 0);
    RhoConfig cfg;
    cfg.seed = 5;
    const auto r = rho_estimate(ds, s.family, s.model, s.eta_star, cfg);
    EXPECT_LE(r.iterations, 2) << id;
    EXPECT_LE(r.upsilon_hat, 1.0) << id;
    EXPECT_TRUE(r.certificate);
    EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations + 1));
    EXPECT_GE(r.upsilon_hat, 0.0);
  }
}

TEST(RhoEstimate, Deterministic) {
  const Scenario s = make_scenario("poisson_outlier");
  const Dataset ds = generate(s, 8, 0);
  RhoConfig cfg;
  cfg.seed = 123;
  Vector init = s.eta_star;
  init[0] += 0.5;
  const auto a = rho_estimate(ds, s.family, s.model, init, cfg);
  const auto b = rho_estimate(ds, s.family, s.model, init, cfg);
  EXPECT_EQ(a.eta_hat, b.eta_hat);
  EXPECT_EQ(a.upsilon_hat, b.upsilon_hat);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(RhoEstimate, IterationCap) {
  const Scenario s = make_scenario("poisson_ws");
  const Dataset ds = generate(s, 8, 0);
  RhoConfig cfg;
  cfg.early_stop = 0.0;  // never met in practice
  cfg.max_iters = 2;
  cfg.sup_search.max_evals = 400;
  const auto r = rho_estimate(ds, s.family, s.model, s.eta_star, cfg);
  EXPECT_LE(r.iterations, cfg.max_iters + 1);
}

TEST(RhoEstimate, StartOutsideBoxThrows) {
  const Scenario s = make_scenario("poisson_ws");
  const Dataset ds = generate(s, 8, 0);
  Vector init = Vector::Constant(6, 25.0);
  EXPECT_THROW(rho_estimate(ds, s.family, s.model, init, RhoConfig{}), std::invalid_argument);
}

TEST(RhoConfig, KappaInvariants) {
  RhoConfig cfg;
  EXPECT_NEAR(cfg.kappa, 280.0 * std::sqrt(2.0) + 74.0, 1e-12);
  EXPECT_GT(cfg.certificate_level(), 18.0);
  EXPECT_LT(cfg.certificate_level(), 18.8);
  EXPECT_NO_THROW(cfg.validate());
  cfg.early_stop = 19.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RhoConfig{};
  cfg.kappa = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(TheoreticalBound, Examples) {
  EXPECT_NEAR(theoretical_bound({7, 500, 1.0}), oracle::kTheoreticalBoundV7N500Xi1, 1e-6);
  EXPECT_DOUBLE_EQ(theoretical_bound({7, 5, 1.0}), 9.11 * 1.1e6 * 7 + 5014.0 * 2.5);
  EXPECT_LT(theoretical_bound({7, 500, 0.5}), theoretical_bound({7, 500, 1.0}));
  EXPECT_LT(theoretical_bound({7, 500, 1e-9}), theoretical_bound({7, 500, 0.5}));
  EXPECT_THROW(theoretical_bound({0, 500, 1.0}), DomainError);
  EXPECT_THROW(theoretical_bound({7, 500, 0.0}), DomainError);
  EXPECT_DOUBLE_EQ(misspecification_term(0.025), 150.0 * 0.025);
}
