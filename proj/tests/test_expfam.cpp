#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhoest/expfam.hpp"

using namespace rhoest;

namespace {

const NaturalExpFamily kFamilies[] = {NaturalExpFamily::bernoulli(), NaturalExpFamily::poisson(),
                                      NaturalExpFamily::exponential(), NaturalExpFamily::gaussian(1.5)};

double interior_point(const NaturalExpFamily& fam, double u) {
  return fam.kind() == FamilyKind::exponential ? 0.1 + 5.0 * u : -3.0 + 6.0 * u;
}

}  // namespace

TEST(LogDensity, Examples) {
  EXPECT_NEAR(log_density(NaturalExpFamily::bernoulli(), 0.0, 1.0), oracle::kBernoulliLogDensityTheta0Y1, 1e-15);
  EXPECT_EQ(log_density(NaturalExpFamily::poisson(), 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(log_density(NaturalExpFamily::exponential(), 1.0, 2.0), -2.0);
}

TEST(LogDensity, OutsideIntervalThrows) {
  EXPECT_THROW(log_density(NaturalExpFamily::exponential(), 0.0, 1.0), DomainError);
  EXPECT_THROW(log_density(NaturalExpFamily::exponential(), -1.0, 1.0), DomainError);
  try {
    log_density(NaturalExpFamily::exponential(), -1.0, 1.0);
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("(0, inf)"), std::string::npos) << e.what();
  }
}

TEST(LogDensity, OutlierObservationStaysFinite) {
  // y = -1 is outside {0,1} but the ratio in T needs a finite log-density.
  const auto fam = NaturalExpFamily::bernoulli();
  EXPECT_TRUE(std::isfinite(log_density(fam, 2.0, -1.0)));
  EXPECT_DOUBLE_EQ(log_density(fam, 0.0, -1.0), -std::log(2.0));
}

TEST(LogPartition, StrictlyConvex) {
  for (const auto& fam : kFamilies) {
    for (int k = 0; k <= 20; ++k) {
      const double t = interior_point(fam, k / 20.0);
      EXPECT_GT(fam.log_partition_d2(t), 0.0) << fam.name() << " at " << t;
    }
  }
}

TEST(LogPartition, DerivativesMatchFiniteDifferences) {
  for (const auto& fam : kFamilies) {
    for (double u : {0.1, 0.5, 0.9}) {
      const double t = interior_point(fam, u);
      const double h = 1e-5;
      const double d1 = (fam.log_partition(t + h) - fam.log_partition(t - h)) / (2 * h);
      const double d2 = (fam.log_partition_d1(t + h) - fam.log_partition_d1(t - h)) / (2 * h);
      EXPECT_NEAR(fam.log_partition_d1(t), d1, 1e-6 * (1 + std::abs(d1))) << fam.name();
      EXPECT_NEAR(fam.log_partition_d2(t), d2, 1e-6 * (1 + std::abs(d2))) << fam.name();
    }
  }
}

TEST(LogPartition, DiscreteMassesSumToOne) {
  const auto bern = NaturalExpFamily::bernoulli();
  for (double t : {-30.0, -2.0, 0.0, 1.5, 40.0}) {
    EXPECT_NEAR(std::exp(log_prob(bern, t, 0.0)) + std::exp(log_prob(bern, t, 1.0)), 1.0, 1e-10);
  }
  const auto pois = NaturalExpFamily::poisson();
  for (double t : {-3.0, 0.0, 2.0, 4.0}) {
    double total = 0.0;
    for (int y = 0; y <= 400; ++y) total += std::exp(log_prob(pois, t, y));
    EXPECT_NEAR(total, 1.0, 1e-10) << t;
  }
}

TEST(Softplus, StableBranches) {
  EXPECT_DOUBLE_EQ(softplus(0.0), std::numbers::ln2);
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-800.0), -1.0);
  EXPECT_NEAR(softplus(-40.0), std::exp(-40.0), 1e-30);
  EXPECT_NEAR(softplus(31.0), 31.0 + std::exp(-31.0), 1e-12);
}

TEST(HellingerSq, Examples) {
  EXPECT_NEAR(hellinger_sq(NaturalExpFamily::poisson(), 0.0, std::log(4.0)), oracle::kPoissonH2Means1And4, 1e-14);
  EXPECT_NEAR(hellinger_sq(NaturalExpFamily::gaussian(1.0), 0.0, 2.0), oracle::kGaussianH2Sigma1Theta0And2, 1e-14);
  for (const auto& fam : kFamilies) {
    for (double u : {0.0, 0.3, 1.0}) {
      const double t = interior_point(fam, u);
      EXPECT_EQ(hellinger_sq(fam, t, t), 0.0) << fam.name();
    }
  }
}

TEST(HellingerSq, SymmetricAndBounded) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& fam : kFamilies) {
    for (int k = 0; k < 200; ++k) {
      const double a = interior_point(fam, u(rng));
      const double b = interior_point(fam, u(rng));
      const double h = hellinger_sq(fam, a, b);
      EXPECT_EQ(h, hellinger_sq(fam, b, a));
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 1.0);
      if (a != b) {
        EXPECT_GT(h, 0.0);
      }
    }
  }
}

TEST(HellingerSq, MatchesBruteForceOracle) {
  auto check = [](const NaturalExpFamily& fam, const auto& cases) {
    for (const auto& c : cases) {
      EXPECT_NEAR(hellinger_sq(fam, c.theta, c.theta_prime), c.h2, 1e-6)
          << fam.name() << " " << c.theta << " " << c.theta_prime;
    }
  };
  check(NaturalExpFamily::bernoulli(), oracle::kBernoulliHellingerCases);
  check(NaturalExpFamily::poisson(), oracle::kPoissonHellingerCases);
  check(NaturalExpFamily::exponential(), oracle::kExponentialHellingerCases);
  check(NaturalExpFamily::gaussian(1.5), oracle::kGaussianHellingerCases);
}

TEST(Sample, EmpiricalMeans) {
  std::mt19937_64 rng(42);
  auto mean_of = [&](const NaturalExpFamily& fam, double theta) {
    double s = 0.0;
    for (int k = 0; k < 100000; ++k) s += sample(fam, theta, rng);
    return s / 100000.0;
  };
  EXPECT_NEAR(mean_of(NaturalExpFamily::bernoulli(), 0.0), 0.5, 0.01);
  EXPECT_NEAR(mean_of(NaturalExpFamily::poisson(), 0.0), 1.0, 0.02);
  EXPECT_NEAR(mean_of(NaturalExpFamily::exponential(), 2.0), 0.5, 0.01);
}

TEST(Sample, MomentsMatchLogPartitionDerivatives) {
  std::mt19937_64 rng(99);
  const int m = 100000;
  for (const auto& fam : kFamilies) {
    const double theta = interior_point(fam, 0.6);
    double s = 0.0, ss = 0.0;
    std::vector<double> draws(m);
    for (auto& d : draws) {
      d = sample(fam, theta, rng);
      // E[S(Y)] = A'(theta), Var S(Y) = A''(theta)
      const double sy = fam.suff_stat(d);
      s += sy;
      ss += sy * sy;
    }
    const double mean = s / m;
    const double var = ss / m - mean * mean;
    const double se_mean = std::sqrt(fam.log_partition_d2(theta) / m);
    EXPECT_NEAR(mean, fam.log_partition_d1(theta), 5 * se_mean) << fam.name();
    EXPECT_NEAR(var, fam.log_partition_d2(theta), 0.05 * fam.log_partition_d2(theta)) << fam.name();
  }
}

TEST(Sample, DeterministicGivenGenerator) {
  std::mt19937_64 a(5), b(5);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(sample(NaturalExpFamily::poisson(), 1.0, a), sample(NaturalExpFamily::poisson(), 1.0, b));
  }
}

TEST(Parametrization, ToNaturalExamples) {
  EXPECT_EQ(to_natural(mean_parametrization(NaturalExpFamily::poisson()), 1.0), 0.0);
  EXPECT_NEAR(to_natural(variance_stabilizer(NaturalExpFamily::poisson()), 1.0 / std::numbers::sqrt2), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(to_natural(mean_parametrization(NaturalExpFamily::exponential()), 0.5), 2.0);
  EXPECT_THROW(to_natural(mean_parametrization(NaturalExpFamily::poisson()), -1.0), DomainError);
}

TEST(Parametrization, VarianceStabilizerValues) {
  const auto g = variance_stabilizer(NaturalExpFamily::gaussian(2.0));
  EXPECT_EQ(from_natural(g, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(from_natural(g, 1.0), 1.0 / (2.0 * std::sqrt(8.0)));
  EXPECT_NEAR(from_natural(variance_stabilizer(NaturalExpFamily::poisson()), 0.0), 0.7071067811865476, 1e-15);
  EXPECT_EQ(from_natural(variance_stabilizer(NaturalExpFamily::exponential()), 1.0), 0.0);
}

TEST(Parametrization, VarianceStabilizerDerivative) {
  // v' = sqrt(A''/8)
  for (const auto& fam : kFamilies) {
    const auto v = variance_stabilizer(fam);
    for (double u : {0.2, 0.5, 0.8}) {
      const double t = interior_point(fam, u);
      const double h = 1e-6;
      const double dv = (from_natural(v, t + h) - from_natural(v, t - h)) / (2 * h);
      EXPECT_NEAR(dv, std::sqrt(fam.log_partition_d2(t) / 8.0), 1e-6) << fam.name();
    }
  }
}

TEST(Parametrization, RoundTripAndMonotone) {
  for (const auto& fam : kFamilies) {
    for (const auto& par : {variance_stabilizer(fam), mean_parametrization(fam)}) {
      double prev_gamma = 0.0;
      int sign = 0;
      for (int k = 0; k <= 50; ++k) {
        const double t = interior_point(fam, 0.02 + 0.96 * k / 50.0);
        const double gamma = from_natural(par, t);
        EXPECT_NEAR(to_natural(par, gamma), t, 1e-12 * (1 + std::abs(t))) << par.name;
        EXPECT_NEAR(from_natural(par, to_natural(par, gamma)), gamma, 1e-12 * (1 + std::abs(gamma))) << par.name;
        if (k > 0) {
          const int s = gamma > prev_gamma ? 1 : -1;
          EXPECT_NE(gamma, prev_gamma);
          if (sign != 0) {
            EXPECT_EQ(s, sign) << par.name;
          }
          sign = s;
        }
        prev_gamma = gamma;
      }
    }
  }
}

TEST(MedianApprox, Values) {
  EXPECT_NEAR(median_approx(NaturalExpFamily::poisson(), 0.0), oracle::kPoissonMedianAt0, 1e-15);
  EXPECT_NEAR(median_approx(NaturalExpFamily::exponential(), 1.0), oracle::kLog2, 1e-15);
  EXPECT_DOUBLE_EQ(median_approx(NaturalExpFamily::exponential(), std::numbers::ln2), 1.0);
  EXPECT_THROW(median_approx(NaturalExpFamily::bernoulli(), 0.0), UnsupportedError);
  EXPECT_THROW(median_approx(NaturalExpFamily::gaussian(1.0), 0.0), UnsupportedError);
}

TEST(Family, FromName) {
  EXPECT_EQ(NaturalExpFamily::from_name("poisson").kind(), FamilyKind::poisson);
  EXPECT_EQ(NaturalExpFamily::from_name("gaussian_fixed_sigma", 2.0).sigma(), 2.0);
  EXPECT_THROW(NaturalExpFamily::from_name("gamma"), std::invalid_argument);
}
