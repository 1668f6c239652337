#pragma once

// rho-estimation: the test statistic T, the criterion upsilon and the
// iterative search that stops once upsilon at the current iterate is small.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rhoest/cmaes.hpp"
#include "rhoest/dataset.hpp"
#include "rhoest/expfam.hpp"
#include "rhoest/models.hpp"
#include "rhoest/numeric.hpp"

namespace rhoest {

inline const double kKappa = 280.0 * std::numbers::sqrt2 + 74.0;

struct RhoConfig {
  double kappa = kKappa;
  double early_stop = 1.0;
  int max_iters = 100;
  OptimizerSettings sup_search{};
  std::uint64_t seed = 20240101;

  double certificate_level() const { return kappa / 25.0; }

  void validate() const {
    const double k25 = kappa / 25.0;
    if (!(k25 > 18.0 && k25 < 18.8)) {
      throw std::invalid_argument("rho config: kappa/25 must lie in (18, 18.8)");
    }
    if (!(early_stop >= 0.0 && early_stop <= k25)) {
      throw std::invalid_argument("rho config: early_stop must lie in [0, kappa/25]");
    }
    if (max_iters < 0) throw std::invalid_argument("rho config: max_iters must be >= 0");
  }
};

/// psi(x) = (x - 1)/(x + 1) on [0, inf), psi(inf) = 1.
inline double psi(double x) {
  if (std::isnan(x) || x < 0.0) {
    std::ostringstream os;
    os << "psi: argument " << x << " outside [0, +inf]";
    throw DomainError(os.str());
  }
  if (x == kInf) return 1.0;
  return (x - 1.0) / (x + 1.0);
}

/// psi(sqrt(exp(log_ratio))), i.e. tanh(log_ratio / 4), for log_ratio in [-inf, inf].
inline double psi_of_log_ratio(double log_ratio) {
  if (log_ratio == kInf) return 1.0;
  if (log_ratio == -kInf) return -1.0;
  return std::tanh(0.25 * log_ratio);
}

/// T(X, eta, .) for a fixed base eta. The per-observation data of the base
/// (theta_i, A(theta_i)) are cached so that each evaluation costs one pass.
/// Piecewise-constant models group observations by (cell, S(y)), since T only
/// depends on those; the groups are visited in a fixed order.
class TestStatistic {
 public:
  TestStatistic(const Dataset& data, const NaturalExpFamily& fam, const RegressionModel& model)
      : fam_(fam), design_(model, data.w) {
    if (static_cast<Eigen::Index>(data.size()) != data.w.rows()) {
      throw std::invalid_argument("dataset: y and w row counts differ");
    }
    if (model.kind() == ModelKind::linear && fam.kind() == FamilyKind::bernoulli) {
      kernel_ = Kernel::logit;
    } else if (model.kind() == ModelKind::loglog1pexp && fam.kind() == FamilyKind::poisson) {
      kernel_ = Kernel::poisson_loglog;
    } else if (model.kind() == ModelKind::log1pexp && fam.kind() == FamilyKind::exponential) {
      kernel_ = Kernel::exponential_log1pexp;
    }
    if (model.is_piecewise()) {
      std::map<std::pair<int, double>, double> groups;
      for (std::size_t i = 0; i < data.size(); ++i) {
        groups[{design_.cells()[i], fam.suff_stat(data.y[i])}] += 1.0;
      }
      const auto g = static_cast<Eigen::Index>(groups.size());
      suff_.resize(g);
      weight_.resize(g);
      group_cell_.reserve(groups.size());
      Eigen::Index k = 0;
      for (const auto& [key, count] : groups) {
        group_cell_.push_back(key.first);
        suff_[k] = key.second;
        weight_[k] = count;
        ++k;
      }
    } else {
      suff_.resize(static_cast<Eigen::Index>(data.size()));
      for (std::size_t i = 0; i < data.size(); ++i) suff_[static_cast<Eigen::Index>(i)] = fam.suff_stat(data.y[i]);
    }
    n_obs_ = data.size();
  }

  void set_base(const Vector& eta) {
    evaluate_params(eta, base_theta_, base_a_);
    base_ = eta;
  }

  const Vector& base() const { return base_; }
  std::size_t size() const { return n_obs_; }

  /// T(X, base, eta_prime).
  double operator()(const Vector& eta_prime) {
    evaluate_params(eta_prime, theta_, a_);
    double total = 0.0;
    const bool grouped = weight_.size() > 0;
    const auto m = suff_.size();
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index j = grouped ? group_cell_[static_cast<std::size_t>(k)] : k;
      const double a_new = a_[j];
      const double a_old = base_a_[j];
      double lr;
      if (std::isfinite(a_new) && std::isfinite(a_old)) {
        lr = suff_[k] * (theta_[j] - base_theta_[j]) - (a_new - a_old);
      } else {
        // An infinite log-partition means a zero density: 0/0 = 1, a/0 = inf.
        const bool zero_new = !std::isfinite(a_new);
        const bool zero_old = !std::isfinite(a_old);
        lr = zero_new && zero_old ? 0.0 : (zero_old ? kInf : -kInf);
      }
      const double term = psi_of_log_ratio(lr);
      total += grouped ? weight_[k] * term : term;
    }
    return total;
  }

 private:
  enum class Kernel { generic, logit, poisson_loglog, exponential_log1pexp };

  // theta and A(theta) per observation, or per cell for piecewise models.
  void evaluate_params(const Vector& eta, Vector& theta, Vector& a) const {
    const RegressionModel& model = design_.model();
    if (model.is_piecewise()) {
      model.check_eta(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())));
      const auto& par = model.parametrization();
      theta.resize(model.dim_p());
      for (int j = 0; j < model.dim_p(); ++j) theta[j] = par ? to_natural(*par, eta[j]) : eta[j];
    } else if (kernel_ == Kernel::generic) {
      design_.thetas(eta, theta);
    } else {
      model.check_eta(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())));
      theta.noalias() = design_.features() * eta;  // z for now
    }
    a.resize(theta.size());
    const Interval iv = fam_.natural_interval();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double z = theta[i];
      switch (kernel_) {
        case Kernel::logit:
          a[i] = softplus(z);
          break;
        case Kernel::poisson_loglog: {
          const double sp = softplus(z);
          theta[i] = z < -30.0 ? z - 0.5 * std::exp(z) : std::log(sp);
          a[i] = sp - 1.0;
          break;
        }
        case Kernel::exponential_log1pexp:
          theta[i] = std::max(softplus(z), std::numeric_limits<double>::min());
          a[i] = -std::log(theta[i]);
          break;
        case Kernel::generic:
          break;
      }
      if (!iv.contains(theta[i]) || std::isnan(theta[i])) {
        std::ostringstream os;
        os << "T statistic: theta(" << (model.is_piecewise() ? "cell " : "w_") << i << ") = " << theta[i]
           << " outside I = " << iv.str();
        throw DomainError(os.str());
      }
      if (kernel_ == Kernel::generic) a[i] = fam_.log_partition(theta[i]);
    }
  }

  NaturalExpFamily fam_;
  BoundDesign design_;
  Kernel kernel_ = Kernel::generic;
  Vector suff_;
  Vector weight_;
  std::vector<int> group_cell_;
  std::size_t n_obs_ = 0;
  Vector base_;
  Vector base_theta_;
  Vector base_a_;
  Vector theta_;
  Vector a_;
};

inline double t_statistic(const Dataset& data, const NaturalExpFamily& fam,
                          const RegressionModel& model, const Vector& eta, const Vector& eta_prime) {
  TestStatistic t(data, fam, model);
  t.set_base(eta);
  return t(eta_prime);
}

struct UpsilonResult {
  double value = 0.0;
  Vector argmax;
  int evaluations = 0;
  bool budget_exceeded = false;
};

/// Approximate sup over eta' in the search box of T(X, base, eta'), by CMA-ES
/// started from the base and from each extra start. The base is always probed,
/// so the value is >= 0.
template <typename Rng>
UpsilonResult upsilon(TestStatistic& stat, const RegressionModel& model,
                      std::span<const Vector> extra_starts, const OptimizerSettings& settings,
                      Rng& rng) {
  std::vector<Vector> starts;
  starts.push_back(stat.base());
  for (const auto& s : extra_starts) starts.push_back(s);
  Objective objective = [&stat](const Vector& x) {
    try {
      return stat(x);
    } catch (const DomainError&) {
      return -kInf;
    }
  };
  const OptimizeResult r = cmaes_maximize(objective, std::span<const Vector>(starts), model.search_box(),
                                          settings, rng);
  UpsilonResult out;
  out.value = std::max(r.f, 0.0);
  out.argmax = r.f > 0.0 ? r.x : stat.base();
  out.evaluations = r.evaluations;
  out.budget_exceeded = r.budget_exceeded;
  return out;
}

template <typename Rng>
UpsilonResult upsilon(const Dataset& data, const NaturalExpFamily& fam, const RegressionModel& model,
                      const Vector& eta, const RhoConfig& cfg, Rng& rng,
                      std::span<const Vector> extra_starts = {}) {
  const auto& box = model.search_box();
  if (!box.contains(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())))) {
    throw std::invalid_argument("upsilon: eta outside the search box");
  }
  TestStatistic stat(data, fam, model);
  stat.set_base(eta);
  return upsilon(stat, model, extra_starts, cfg.sup_search, rng);
}

struct RhoTraceEntry {
  int iteration = 0;
  double upsilon = 0.0;
  int evaluations = 0;
  bool budget_exceeded = false;
  Vector eta;
};

struct RhoFitResult {
  Vector eta_hat;
  double upsilon_hat = 0.0;
  int iterations = 0;
  bool certificate = false;
  // Iterate with the smallest observed upsilon (may differ from eta_hat when
  // the search oscillates); eta_hat is the last iterate.
  Vector best_eta;
  double best_upsilon = 0.0;
  int evaluations = 0;
  double seconds = 0.0;
  std::vector<RhoTraceEntry> trace;
};

/// Iterative search for a rho-estimator:
///   eta_hat = eta0, l = 0
///   while upsilon(eta_hat) > early_stop and l <= L:
///     l += 1; eta_hat = argmax_eta T(X, eta_hat, eta)
/// upsilon and the argmax come from the same maximization. Deterministic given
/// cfg.seed.
inline RhoFitResult rho_estimate(const Dataset& data, const NaturalExpFamily& fam,
                                 const RegressionModel& model, const Vector& eta0,
                                 const RhoConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto& box = model.search_box();
  if (eta0.size() != model.dim_p() ||
      !box.contains(std::span<const double>(eta0.data(), static_cast<std::size_t>(eta0.size())))) {
    throw std::invalid_argument("rho_estimate: starting point outside the search box");
  }
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x72686fULL, cfg.sup_search.stream));
  TestStatistic stat(data, fam, model);
  const std::vector<Vector> init{eta0};

  RhoFitResult out;
  Vector eta_hat = eta0;
  int l = 0;
  auto evaluate = [&](const Vector& eta) {
    stat.set_base(eta);
    UpsilonResult u = upsilon(stat, model, std::span<const Vector>(init), cfg.sup_search, rng);
    out.evaluations += u.evaluations;
    out.trace.push_back(RhoTraceEntry{l, u.value, u.evaluations, u.budget_exceeded, eta});
    if (out.trace.size() == 1 || u.value < out.best_upsilon) {
      out.best_upsilon = u.value;
      out.best_eta = eta;
    }
    return u;
  };

  UpsilonResult u = evaluate(eta_hat);
  while (u.value > cfg.early_stop && l <= cfg.max_iters) {
    ++l;
    eta_hat = u.argmax;
    u = evaluate(eta_hat);
  }

  out.eta_hat = eta_hat;
  out.upsilon_hat = u.value;
  out.iterations = l;
  out.certificate = u.value <= cfg.certificate_level();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Deviation bound constants for h^2(Q*, Q_hat).
struct TheoreticalBound {
  static constexpr double c1 = 150.0;
  static constexpr double c2 = 1.1e6;
  static constexpr double c3 = 5014.0;
  int V = 1;
  long long n = 1;
  double xi = 1.0;
};

/// c2 V [9.11 + log+(n/V)] + c3 (1.5 + xi): the bound holding with probability
/// at least 1 - e^-xi when the model is exact. Add c1 * h^2(Q*, model) for the
/// misspecified case.
inline double theoretical_bound(const TheoreticalBound& tb) {
  if (tb.V < 1) throw DomainError("theoretical_bound: V must be >= 1");
  if (tb.n < 1) throw DomainError("theoretical_bound: n must be >= 1");
  if (!(tb.xi > 0.0)) throw DomainError("theoretical_bound: xi must be > 0");
  const double ratio = static_cast<double>(tb.n) / static_cast<double>(tb.V);
  const double log_plus = std::max(0.0, std::log(ratio));
  return TheoreticalBound::c2 * tb.V * (9.11 + log_plus) + TheoreticalBound::c3 * (1.5 + tb.xi);
}

inline double misspecification_term(double approximation_h2) {
  return TheoreticalBound::c1 * approximation_h2;
}

}  // namespace rhoest
