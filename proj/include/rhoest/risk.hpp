#pragma once

// Hellinger risk of the estimators by Monte Carlo over replicated draws of a
// scenario, the mixture distance used under contamination, and the
// piecewise-constant fits of a Holder regression function.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rhoest/baselines.hpp"
#include "rhoest/dataset.hpp"
#include "rhoest/expfam.hpp"
#include "rhoest/models.hpp"
#include "rhoest/numeric.hpp"
#include "rhoest/parallel.hpp"
#include "rhoest/rho.hpp"
#include "rhoest/scenarios.hpp"

namespace rhoest {

/// (r_tilde - r_hat) / r_hat.
inline double excess(double r_tilde, double r_hat) {
  if (!(r_hat > 0.0)) throw DomainError("excess: reference risk must be > 0");
  return (r_tilde - r_hat) / r_hat;
}

/// Excess as a percentage with two significant digits: "+110%", "+1900%",
/// "+1.9%", and "<+0.1%" below a tenth of a percent.
inline std::string format_excess(double e) {
  if (!std::isfinite(e)) return "NA";
  const double pct = 100.0 * e;
  if (std::abs(pct) < 0.1) return pct >= 0.0 ? "<+0.1%" : ">-0.1%";
  int digits = static_cast<int>(std::floor(std::log10(std::abs(pct))));
  double rounded = std::round(pct / std::pow(10.0, digits - 1)) * std::pow(10.0, digits - 1);
  if (std::abs(rounded) >= std::pow(10.0, digits + 1)) ++digits;  // 9.96 -> 10
  std::ostringstream os;
  os << (rounded >= 0.0 ? "+" : "") << std::fixed << std::setprecision(std::max(0, 1 - digits)) << rounded << '%';
  return os.str();
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Quartiles {
  double q1 = kNaN;
  double median = kNaN;
  double q3 = kNaN;
  double max = kNaN;
};

inline Quartiles quartiles(const std::vector<double>& v) {
  if (v.empty()) return {};
  return Quartiles{quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), *std::max_element(v.begin(), v.end())};
}

// ---------------------------------------------------------------------------
// Squared Hellinger distance from a contaminated conditional law

namespace detail {

/// Chernoff bound on P(Y >= k) for Y ~ Poisson(lambda).
inline double poisson_tail_bound(double lambda, double k) {
  if (k <= lambda) return 1.0;
  if (lambda <= 0.0) return 0.0;
  return std::exp(-lambda + k * (1.0 + std::log(lambda / k)));
}

inline double log_factorial(long long y) {
  static const std::vector<double> table = [] {
    std::vector<double> t(4096);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  return y < static_cast<long long>(table.size()) ? table[static_cast<std::size_t>(y)]
                                                  : std::lgamma(static_cast<double>(y) + 1.0);
}

}  // namespace detail

/// h^2((1 - rate) Q_{theta_star} + rate R, Q_{theta_hat}) with R the
/// contaminant at the same covariate. Discrete families: summation over the
/// support truncated where both Poisson tails are below 1e-13 (so the omitted
/// affinity is below 1e-13 by Cauchy-Schwarz). Continuous families: adaptive
/// quadrature split at the contaminant's support boundaries.
inline double hellinger_mixture_sq(const NaturalExpFamily& fam, double theta_hat, double theta_star,
                                   const ContaminantLaw& contam, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("hellinger_mixture_sq: rate must lie in [0,1]");
  fam.check_parameter(theta_hat);
  fam.check_parameter(theta_star);
  if (rate == 0.0) return hellinger_sq(fam, theta_star, theta_hat);

  double affinity = 0.0;
  if (fam.is_discrete()) {
    auto term = [&](double y, double lq_star, double lq_hat) {
      const double mix = (1.0 - rate) * std::exp(lq_star) + rate * contam.mass(y);
      return mix > 0.0 ? std::exp(0.5 * (std::log(mix) + lq_hat)) : 0.0;
    };
    if (fam.kind() == FamilyKind::poisson) {
      const double l_star = std::exp(theta_star);
      const double l_hat = std::exp(theta_hat);
      double y_max = std::max(200.0, std::ceil(contam.support_max()));
      while (detail::poisson_tail_bound(l_star, y_max + 1.0) > 1e-13 ||
             detail::poisson_tail_bound(l_hat, y_max + 1.0) > 1e-13) {
        y_max = std::ceil(1.5 * y_max);
      }
      const auto top = static_cast<long long>(y_max);
      for (long long k = 0; k <= top; ++k) {
        const double y = static_cast<double>(k);
        const double lf = detail::log_factorial(k);
        affinity += term(y, y * theta_star - l_star - lf, y * theta_hat - l_hat - lf);
      }
    } else {
      for (double y : {0.0, 1.0}) affinity += term(y, log_prob(fam, theta_star, y), log_prob(fam, theta_hat, y));
    }
  } else {
    // Atoms of R are singular with respect to Q_{theta_hat} and add nothing.
    const double density_r = contam.discrete ? 0.0 : 1.0;
    auto f = [&](double y) {
      const double lq_hat = log_prob(fam, theta_hat, y);
      if (lq_hat == -kInf) return 0.0;
      const double mix =
          (1.0 - rate) * std::exp(log_prob(fam, theta_star, y)) + rate * density_r * contam.mass(y);
      return mix > 0.0 ? std::exp(0.5 * (std::log(mix) + lq_hat)) : 0.0;
    };
    using boost::math::quadrature::exp_sinh;
    using boost::math::quadrature::gauss_kronrod;
    const double lower = fam.kind() == FamilyKind::exponential ? 0.0 : -kInf;
    std::vector<double> cuts;
    if (!contam.discrete) {
      for (double c : {contam.lo, contam.hi}) {
        if (c > lower) cuts.push_back(c);
      }
    }
    if (cuts.empty()) cuts.push_back(lower == -kInf ? 0.0 : lower + 1.0);
    // (lower, cuts[0]], [cuts[k], cuts[k+1]], [cuts.back(), inf)
    if (lower == -kInf) {
      exp_sinh<double> left;
      affinity += left.integrate(f, -kInf, cuts.front());
    } else if (cuts.front() > lower) {
      affinity += gauss_kronrod<double, 31>::integrate(f, lower, cuts.front(), 15, 1e-12);
    }
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      affinity += gauss_kronrod<double, 31>::integrate(f, cuts[k], cuts[k + 1], 15, 1e-12);
    }
    exp_sinh<double> right;
    affinity += right.integrate(f, cuts.back(), kInf);
  }
  const double h2 = 1.0 - affinity;
  return std::clamp(h2, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Estimators and their fits within a replication

enum class Estimator { rho, mle, median, hinge };

inline std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::rho: return "rho";
    case Estimator::mle: return "mle";
    case Estimator::median: return "median";
    case Estimator::hinge: return "hinge";
  }
  return "?";
}

inline Estimator estimator_from_string(std::string_view s) {
  if (s == "rho") return Estimator::rho;
  if (s == "mle") return Estimator::mle;
  if (s == "median") return Estimator::median;
  if (s == "hinge") return Estimator::hinge;
  throw std::invalid_argument("unknown estimator '" + std::string(s) + "'");
}

/// Whether the estimator is defined for the family.
inline bool estimator_supports(Estimator e, const NaturalExpFamily& fam) {
  switch (e) {
    case Estimator::median:
      return fam.kind() == FamilyKind::poisson || fam.kind() == FamilyKind::exponential;
    case Estimator::hinge: return fam.kind() == FamilyKind::bernoulli;
    default: return true;
  }
}

struct SimulationSettings {
  std::uint64_t seed = 20240101;
  int replications = 0;  // 0: the scenario's default
  int quadrature_n = 0;  // 0: the scenario's default
  int threads = 0;       // 0: RHOEST_THREADS or the hardware concurrency
  RhoConfig rho{};
  OptimizerSettings median_search{};
  MleOptions mle{};
};

struct FitOutcome {
  Estimator estimator = Estimator::rho;
  bool exists = true;
  Vector eta;  // the estimate, or the last iterate when it does not exist
  int iterations = 0;
  double upsilon = kNaN;
  bool certificate = false;
  double seconds = 0.0;
};

inline std::uint64_t fit_seed(std::uint64_t master, std::string_view scenario_id, std::uint64_t rep,
                              Estimator e) {
  return mix_seed(replication_seed(master, scenario_id, rep, SeedPurpose::fit), stable_hash(to_string(e)));
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline Vector clamp_to_box(Vector eta, const SearchBox& box) {
  box.clamp(std::span<double>(eta.data(), static_cast<std::size_t>(eta.size())));
  return eta;
}

}  // namespace detail

/// Fits one estimator to one replication's data. The median fit is cached in
/// `median_cache` because it also initializes rho for Poisson and exponential
/// data; its seed does not depend on which estimator asked for it.
inline FitOutcome fit_estimator(const Scenario& s, const Dataset& data, Estimator e,
                                const SimulationSettings& st, std::uint64_t rep,
                                std::optional<FitOutcome>* median_cache = nullptr) {
  if (!estimator_supports(e, s.family)) {
    throw UnsupportedError(std::string("estimator ") + std::string(to_string(e)) + " is not defined for the " +
                           std::string(s.family.name()) + " family");
  }
  const auto t0 = std::chrono::steady_clock::now();
  FitOutcome out;
  out.estimator = e;
  auto median_fit = [&]() -> FitOutcome {
    if (median_cache && median_cache->has_value()) return **median_cache;
    const auto tm = std::chrono::steady_clock::now();
    std::mt19937_64 rng(fit_seed(st.seed, s.id, rep, Estimator::median));
    const MedianResult m = median_estimate(data, s.family, s.model, st.median_search, rng);
    FitOutcome f;
    f.estimator = Estimator::median;
    f.eta = m.eta_hat;
    f.seconds = detail::seconds_since(tm);
    if (median_cache) *median_cache = f;
    return f;
  };
  switch (e) {
    case Estimator::mle: {
      const MleResult m = mle(data, s.family, s.model, st.mle);
      out.exists = m.exists;
      out.eta = m.eta_last;
      break;
    }
    case Estimator::median: return median_fit();
    case Estimator::hinge:
      out.eta = hinge_init(data);
      break;
    case Estimator::rho: {
      double init_seconds = 0.0;
      Vector init;
      if (s.family.kind() == FamilyKind::bernoulli) {
        init = hinge_init(data);
        init_seconds = detail::seconds_since(t0);
      } else {
        const FitOutcome m = median_fit();
        init = m.eta;
        init_seconds = m.seconds;
      }
      RhoConfig cfg = st.rho;
      cfg.seed = fit_seed(st.seed, s.id, rep, Estimator::rho);
      const auto tr = std::chrono::steady_clock::now();
      const RhoFitResult r = rho_estimate(data, s.family, s.model, detail::clamp_to_box(init, s.model.search_box()), cfg);
      out.eta = r.eta_hat;
      out.iterations = r.iterations;
      out.upsilon = r.upsilon_hat;
      out.certificate = r.certificate;
      out.seconds = init_seconds + detail::seconds_since(tr);
      return out;
    }
  }
  out.seconds = detail::seconds_since(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Risk integrals

/// Fresh covariate draws with theta*(w) and, under contamination, R(.|w).
struct QuadratureSample {
  RowMatrix w;
  Vector theta_star;
  std::vector<ContaminantLaw> contaminant;
};

inline QuadratureSample draw_quadrature(const Scenario& s, std::uint64_t seed, int count) {
  QuadratureSample q;
  const auto d = static_cast<Eigen::Index>(s.pw.dim());
  q.w.resize(count, d);
  q.theta_star.resize(count);
  std::mt19937_64 rng(seed);
  std::vector<double> w(static_cast<std::size_t>(d));
  const bool contaminated = s.corruption.kind == CorruptionKind::contamination;
  for (int k = 0; k < count; ++k) {
    s.pw.sample(rng, w);
    for (Eigen::Index j = 0; j < d; ++j) q.w(k, j) = w[static_cast<std::size_t>(j)];
    q.theta_star[k] = s.theta_star(w);
    if (contaminated) q.contaminant.push_back(s.corruption.contamination.law_at(w));
  }
  return q;
}

/// Integral over P_W of h^2(Q_{theta*(w)}, Q_{theta_hat(w)}), or of the mixture
/// distance when the scenario is contaminated, by averaging over q.
inline double integrated_risk(const Scenario& s, const QuadratureSample& q, const Vector& eta) {
  const BoundDesign design(s.model, q.w);
  Vector theta;
  design.thetas(eta, theta);
  const bool contaminated = s.corruption.kind == CorruptionKind::contamination;
  double total = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    total += contaminated
                 ? hellinger_mixture_sq(s.family, theta[k], q.theta_star[k],
                                        q.contaminant[static_cast<std::size_t>(k)], s.corruption.contamination.rate)
                 : hellinger_sq(s.family, q.theta_star[k], theta[k]);
  }
  return total / static_cast<double>(theta.size());
}

/// h^2(P*, P_{theta*}) per observation: the distance of the contaminated law to
/// the model's best element, integrated over P_W. Zero without contamination.
inline double approximation_error(const Scenario& s, std::uint64_t seed, int count) {
  if (s.corruption.kind != CorruptionKind::contamination) return 0.0;
  const QuadratureSample q = draw_quadrature(s, seed, count);
  double total = 0.0;
  for (Eigen::Index k = 0; k < q.theta_star.size(); ++k) {
    total += hellinger_mixture_sq(s.family, q.theta_star[k], q.theta_star[k], q.contaminant[static_cast<std::size_t>(k)],
                                  s.corruption.contamination.rate);
  }
  return total / static_cast<double>(q.theta_star.size());
}

// ---------------------------------------------------------------------------
// Replicated experiments

struct ReplicationRecord {
  int rep = 0;
  double risk = kNaN;
  bool exists = true;
  int iterations = 0;
  double upsilon = kNaN;
  bool certificate = false;
  double seconds = 0.0;
};

struct RiskReport {
  std::string scenario;
  std::string estimator;
  int n = 0;  // clean sample size; risks are per observation
  int replications = 0;
  int quadrature_n = 0;
  std::uint64_t seed = 0;
  int failures = 0;          // replications where the estimator does not exist
  double risk = kNaN;        // mean over replications where it exists
  double std_error = kNaN;
  double risk_all = kNaN;    // mean over all replications, last iterate for failures
  double std_error_all = kNaN;
  std::map<std::string, double> excess_vs;  // excess of this estimator's risk over the named one
  Quartiles iterations;      // rho only
  double certified_fraction = kNaN;  // rho only
  double mean_seconds = 0.0;
  double approximation_h2 = kNaN;    // contamination scenarios
  std::vector<ReplicationRecord> records;

  /// Risk used for comparisons: over existing fits when there are any, else
  /// over the last iterates.
  double reported_risk() const { return failures < replications ? risk : risk_all; }
};

namespace detail {

inline void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
  if (v.empty()) {
    mean = se = kNaN;
    return;
  }
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  mean = m;
  se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : kNaN;
}

}  // namespace detail

/// Runs every estimator on the same replicated datasets (common random
/// numbers) and integrates each fit's risk over the same fresh covariate
/// draws. Replications are independent given the master seed, run on a
/// worker pool, and are reduced in index order. When rho is among the
/// estimators every report carries its excess over rho.
inline std::vector<RiskReport> run_scenario(const Scenario& s, std::span<const Estimator> estimators,
                                            const SimulationSettings& st) {
  s.validate();
  for (Estimator e : estimators) {
    if (!estimator_supports(e, s.family)) {
      throw UnsupportedError(std::string("estimator ") + std::string(to_string(e)) + " is not defined for scenario " + s.id);
    }
  }
  const int reps = st.replications > 0 ? st.replications : s.replications;
  const int quad = st.quadrature_n > 0 ? st.quadrature_n : s.quadrature_n;
  const std::size_t k_est = estimators.size();
  std::vector<std::vector<ReplicationRecord>> grid(static_cast<std::size_t>(reps),
                                                   std::vector<ReplicationRecord>(k_est));

  parallel_for(reps, resolve_threads(st.threads), [&](int rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    const Dataset data = generate(s, st.seed, r);
    const QuadratureSample q = draw_quadrature(s, replication_seed(st.seed, s.id, r, SeedPurpose::quadrature), quad);
    std::optional<FitOutcome> median_cache;
    for (std::size_t k = 0; k < k_est; ++k) {
      const FitOutcome f = fit_estimator(s, data, estimators[k], st, r, &median_cache);
      ReplicationRecord& rec = grid[static_cast<std::size_t>(rep)][k];
      rec.rep = rep;
      rec.exists = f.exists;
      rec.risk = integrated_risk(s, q, f.eta);
      rec.iterations = f.iterations;
      rec.upsilon = f.upsilon;
      rec.certificate = f.certificate;
      rec.seconds = f.seconds;
    }
  });

  const double approx = s.corruption.kind == CorruptionKind::contamination
                            ? approximation_error(s, replication_seed(st.seed, s.id, ~0ULL, SeedPurpose::quadrature), quad)
                            : kNaN;
  std::vector<RiskReport> reports;
  for (std::size_t k = 0; k < k_est; ++k) {
    RiskReport rp;
    rp.scenario = s.id;
    rp.estimator = std::string(to_string(estimators[k]));
    rp.n = s.n;
    rp.replications = reps;
    rp.quadrature_n = quad;
    rp.seed = st.seed;
    rp.approximation_h2 = approx;
    std::vector<double> ok, all, iters;
    int certified = 0;
    double secs = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const ReplicationRecord& rec = grid[static_cast<std::size_t>(rep)][k];
      rp.records.push_back(rec);
      all.push_back(rec.risk);
      if (rec.exists) {
        ok.push_back(rec.risk);
      } else {
        ++rp.failures;
      }
      iters.push_back(static_cast<double>(rec.iterations));
      certified += rec.certificate ? 1 : 0;
      secs += rec.seconds;
    }
    detail::mean_and_se(ok, rp.risk, rp.std_error);
    detail::mean_and_se(all, rp.risk_all, rp.std_error_all);
    rp.mean_seconds = secs / reps;
    if (estimators[k] == Estimator::rho) {
      rp.iterations = quartiles(iters);
      rp.certified_fraction = static_cast<double>(certified) / reps;
    }
    reports.push_back(std::move(rp));
  }
  for (std::size_t k = 0; k < k_est; ++k) {
    if (estimators[k] != Estimator::rho) continue;
    const double ref = reports[k].reported_risk();
    if (!(ref > 0.0)) break;
    for (auto& rp : reports) rp.excess_vs["rho"] = excess(rp.reported_risk(), ref);
  }
  return reports;
}

/// Monte-Carlo risk of one estimator on a scenario.
inline RiskReport risk_mc(const Scenario& s, Estimator estimator, int reps, std::uint64_t seed,
                          SimulationSettings st = {}) {
  st.replications = reps;
  st.seed = seed;
  const Estimator one[] = {estimator};
  return run_scenario(s, one, st).front();
}

// ---------------------------------------------------------------------------
// Piecewise-constant fits of a Holder regression function

/// gamma*(w) = 1 + M (2 pi)^-alpha |sin(2 pi w)|^alpha. Since t -> t^alpha is
/// alpha-Holder with constant 1 and |sin| is 1-Lipschitz, gamma* is in H_alpha(M).
struct HolderTarget {
  double alpha = 1.0;
  double M = 1.0;
  double operator()(double w) const {
    const double two_pi = 2.0 * std::numbers::pi;
    return 1.0 + M * std::pow(two_pi, -alpha) * std::pow(std::abs(std::sin(two_pi * w)), alpha);
  }
};

struct HolderFit {
  double risk = kNaN;
  int cells = 0;
  int iterations = 0;
  double upsilon = kNaN;
  bool certificate = false;
  Vector gamma_hat;
};

/// Draws (W_i, Y_i), W ~ U[0,1], Y ~ Poisson(gamma*(W)), and fits the
/// mean-parametrized piecewise-constant Poisson model with
/// D = holder_partition_dim(alpha, M, n, kappa, poisson_mean) cells by rho
/// estimation, started at the cellwise sample means. The risk integral over
/// [0,1] uses a midpoint grid.
inline HolderFit holder_scenario_fit(double alpha, double M, long long n, std::uint64_t seed,
                                     RhoConfig cfg = {}, int grid = 10000) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_scenario_fit: alpha must lie in (0,1]");
  if (!(M > 0.0)) throw DomainError("holder_scenario_fit: M must be > 0");
  const HolderTarget target{alpha, M};
  const NaturalExpFamily fam = NaturalExpFamily::poisson();
  const int cells = holder_partition_dim(alpha, M, n, cfg.kappa, HolderRegime::poisson_mean);

  Dataset data(static_cast<Eigen::Index>(n), 1);
  std::mt19937_64 rng(mix_seed(seed, stable_hash("holder_poisson"), static_cast<std::uint64_t>(SeedPurpose::data)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double y_max = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double w = unif(rng);
    data.w(static_cast<Eigen::Index>(i), 0) = w;
    const double y = sample(fam, std::log(target(w)), rng);
    data.y[static_cast<std::size_t>(i)] = y;
    y_max = std::max(y_max, y);
  }

  const double hi = std::max(10.0, 2.0 * y_max);
  const RegressionModel model = RegressionModel::piecewise_constant(
      cells, mean_parametrization(fam), SearchBox::uniform(static_cast<std::size_t>(cells), 1e-2, hi));

  Vector sums = Vector::Zero(cells);
  Vector counts = Vector::Zero(cells);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int j = model.cell_of(data.w(static_cast<Eigen::Index>(i), 0));
    sums[j] += data.y[i];
    counts[j] += 1.0;
    total += data.y[i];
  }
  const double overall = total / static_cast<double>(data.size());
  Vector init(cells);
  for (int j = 0; j < cells; ++j) init[j] = std::clamp(counts[j] > 0 ? sums[j] / counts[j] : overall, 1e-2, hi);

  cfg.seed = mix_seed(seed, stable_hash("holder_poisson"), static_cast<std::uint64_t>(SeedPurpose::fit));
  const RhoFitResult r = rho_estimate(data, fam, model, init, cfg);

  HolderFit out;
  out.cells = cells;
  out.iterations = r.iterations;
  out.upsilon = r.upsilon_hat;
  out.certificate = r.certificate;
  out.gamma_hat = r.eta_hat;
  double risk = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double w = (g + 0.5) / grid;
    risk += hellinger_sq(fam, std::log(target(w)), std::log(r.eta_hat[model.cell_of(w)]));
  }
  out.risk = risk / grid;
  return out;
}

struct HolderSweepPoint {
  long long n = 0;
  int cells = 0;
  double risk = kNaN;  // mean over replications
  double std_error = kNaN;
};

/// Mean risk of holder_scenario_fit at each sample size over `reps`
/// independent draws; replication r at size n uses seed mix_seed(seed, n, r).
inline std::vector<HolderSweepPoint> holder_sweep(double alpha, double M, std::span<const long long> ns, int reps,
                                                  std::uint64_t seed, const RhoConfig& cfg = {}, int threads = 0,
                                                  int grid = 10000) {
  if (reps < 1) throw std::invalid_argument("holder_sweep: reps must be >= 1");
  std::vector<HolderSweepPoint> out;
  for (long long n : ns) {
    std::vector<double> risks(static_cast<std::size_t>(reps));
    std::vector<int> cells(static_cast<std::size_t>(reps));
    parallel_for(reps, resolve_threads(threads), [&](int r) {
      const HolderFit f = holder_scenario_fit(alpha, M, n, mix_seed(seed, static_cast<std::uint64_t>(n),
                                                                    static_cast<std::uint64_t>(r)),
                                              cfg, grid);
      risks[static_cast<std::size_t>(r)] = f.risk;
      cells[static_cast<std::size_t>(r)] = f.cells;
    });
    HolderSweepPoint p;
    p.n = n;
    p.cells = cells.front();
    detail::mean_and_se(risks, p.risk, p.std_error);
    out.push_back(p);
  }
  return out;
}

/// Least-squares slope of log(risk) against log(n).
inline double log_log_slope(std::span<const HolderSweepPoint> pts) {
  if (pts.size() < 2) throw std::invalid_argument("log_log_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    if (!(p.risk > 0.0)) throw DomainError("log_log_slope: risks must be > 0");
    mx += std::log(static_cast<double>(p.n));
    my += std::log(p.risk);
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& p : pts) {
    const double dx = std::log(static_cast<double>(p.n)) - mx;
    sxy += dx * (std::log(p.risk) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace rhoest
