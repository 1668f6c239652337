#pragma once

// (mu/mu_w, lambda)-CMA-ES for bounded maximization of a black-box objective.
// Standard parameter settings from Hansen's tutorial; box constraints are
// handled by resampling and, failing that, projection onto the box.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rhoest/models.hpp"
#include "rhoest/numeric.hpp"

namespace rhoest {

struct OptimizerSettings {
  int population = 0;        // 0: 4 + floor(3 ln p)
  double sigma0 = 0.3;       // initial step, as a fraction of each box side
  int max_evals = 5000;      // total budget per call, shared by all runs
  int restarts = 2;          // number of runs; run k starts at starts[k mod #starts]
  std::uint64_t stream = 0;  // seed-stream id mixed into the caller's seed
  double tol_x = 1e-6;       // stop when every coordinate's step is below this
  double tol_fun = 1e-6;     // stop when recent best values span less than this

  int population_for(int dim) const {
    return population > 0 ? population : 4 + static_cast<int>(std::floor(3.0 * std::log(dim)));
  }

  void validate(int dim) const {
    const int lambda = population_for(dim);
    if (lambda < 4) throw std::invalid_argument("optimizer: population must be >= 4");
    if (max_evals < lambda) throw std::invalid_argument("optimizer: max_evals must be >= population");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("optimizer: sigma0 must be > 0");
    if (restarts < 1) throw std::invalid_argument("optimizer: restarts must be >= 1");
  }
};

struct OptimizeResult {
  Vector x;
  double f = -kInf;
  int evaluations = 0;
  bool budget_exceeded = false;  // a run ended on the evaluation budget rather than converging
};

using Objective = std::function<double(const Vector&)>;

namespace detail {

inline double sanitize(double f) { return std::isnan(f) ? -kInf : f; }

template <typename Rng>
void cmaes_run(const Objective& objective, const Vector& x0, const SearchBox& box,
               const OptimizerSettings& s, int budget, Rng& rng, OptimizeResult& best) {
  const int n = static_cast<int>(x0.size());
  const int lambda = s.population_for(n);
  const int mu = lambda / 2;
  const double nd = static_cast<double>(n);

  Vector weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();

  const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
  const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
  const double c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff);
  const double cmu =
      std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nd + 2.0) * (nd + 2.0) + mueff));
  const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  Vector scale(n);
  for (int i = 0; i < n; ++i) {
    const double w = box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)];
    scale[i] = w > 0.0 ? w : 0.0;
  }
  // Collapsed coordinates are held fixed.
  if (scale.maxCoeff() <= 0.0) return;
  const bool has_fixed = scale.minCoeff() <= 0.0;

  Vector mean = x0;
  double sigma = s.sigma0;
  const double sigma_max = 10.0 * s.sigma0;
  Eigen::MatrixXd C = scale.cwiseAbs2().asDiagonal();
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  Vector D = scale;
  Vector ps = Vector::Zero(n);
  Vector pc = Vector::Zero(n);
  Eigen::MatrixXd inv_sqrt_C = Eigen::MatrixXd::Zero(n, n);
  auto refresh_inv_sqrt = [&] {
    inv_sqrt_C.setZero();
    for (int i = 0; i < n; ++i) {
      if (D[i] > 0.0) inv_sqrt_C += (1.0 / D[i]) * B.col(i) * B.col(i).transpose();
    }
  };
  refresh_inv_sqrt();

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> xs(static_cast<std::size_t>(lambda), Vector(n));
  std::vector<double> fs(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));
  std::deque<double> history;
  const std::size_t history_len = 10 + static_cast<std::size_t>(std::ceil(30.0 * nd / lambda));

  int used = 0;
  for (int gen = 0;; ++gen) {
    if (used + lambda > budget) {
      best.budget_exceeded = true;
      break;
    }
    for (int k = 0; k < lambda; ++k) {
      Vector& x = xs[static_cast<std::size_t>(k)];
      bool inside = false;
      for (int attempt = 0; attempt < 10 && !inside; ++attempt) {
        Vector z(n);
        for (int i = 0; i < n; ++i) z[i] = normal(rng);
        x = mean + sigma * (B * D.cwiseProduct(z));
        inside = box.contains(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
      }
      if (!inside) box.clamp(std::span<double>(x.data(), static_cast<std::size_t>(n)));
      fs[static_cast<std::size_t>(k)] = sanitize(objective(x));
      ++used;
      if (fs[static_cast<std::size_t>(k)] > best.f) {
        best.f = fs[static_cast<std::size_t>(k)];
        best.x = x;
      }
    }
    best.evaluations += lambda;

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return fs[static_cast<std::size_t>(a)] > fs[static_cast<std::size_t>(b)];
    });

    const Vector old_mean = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += weights[i] * xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    const Vector yw = (mean - old_mean) / sigma;

    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt_C * yw);
    const double ps_norm = ps.norm();
    const double hs_lhs = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1)));
    const bool hsig = hs_lhs < (1.4 + 2.0 / (nd + 1.0)) * chi_n;
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * yw;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Vector yi = (xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] - old_mean) / sigma;
      rank_mu += weights[i] * yi * yi.transpose();
    }
    C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) +
        cmu * rank_mu;
    C = 0.5 * (C + C.transpose());

    sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1.0));

    const double f_best = fs[static_cast<std::size_t>(order.front())];
    const double f_worst = fs[static_cast<std::size_t>(order.back())];
    if (f_best == f_worst) sigma *= std::exp(0.2 + cs / ds);  // flat population
    sigma = std::min(sigma, sigma_max);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) break;
    B = eig.eigenvectors();
    D = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    refresh_inv_sqrt();

    history.push_back(f_best);
    if (history.size() > history_len) history.pop_front();

    const double max_step = sigma * C.diagonal().cwiseMax(0.0).cwiseSqrt().maxCoeff();
    if (max_step < s.tol_x) break;
    if (history.size() == history_len) {
      const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
      if (*hi - *lo < s.tol_fun && f_best - f_worst < s.tol_fun) break;
    }
    if (!has_fixed && D.maxCoeff() > 1e7 * std::max(D.minCoeff(), 1e-300)) break;
  }
}

}  // namespace detail

/// Maximizes objective over box. Each run starts at starts[k mod #starts];
/// the starts themselves are always probed, so the result is never worse than
/// the best start. Deterministic given rng state.
template <typename Rng>
OptimizeResult cmaes_maximize(const Objective& objective, std::span<const Vector> starts,
                              const SearchBox& box, const OptimizerSettings& settings, Rng& rng) {
  if (starts.empty()) throw std::invalid_argument("cmaes_maximize: no start point");
  const int n = static_cast<int>(starts.front().size());
  if (static_cast<std::size_t>(n) != box.size()) {
    throw std::invalid_argument("cmaes_maximize: start and box dimensions differ");
  }
  settings.validate(n);

  OptimizeResult best;
  std::vector<Vector> clipped;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    Vector x = starts[k];
    if (x.size() != n) throw std::invalid_argument("cmaes_maximize: start dimension mismatch");
    if (!box.contains(std::span<const double>(x.data(), static_cast<std::size_t>(n)))) {
      if (k == 0) throw std::invalid_argument("cmaes_maximize: x0 outside the search box");
      box.clamp(std::span<double>(x.data(), static_cast<std::size_t>(n)));
    }
    const double raw = objective(x);
    if (k == 0 && std::isnan(raw)) throw std::domain_error("cmaes_maximize: objective is NaN at x0");
    const double f = detail::sanitize(raw);
    ++best.evaluations;
    if (k == 0 || f > best.f) {
      best.f = f;
      best.x = x;
    }
    clipped.push_back(std::move(x));
  }

  const int runs = settings.restarts;
  const int remaining = std::max(0, settings.max_evals - best.evaluations);
  for (int r = 0; r < runs; ++r) {
    const int budget = remaining / runs;
    detail::cmaes_run(objective, clipped[static_cast<std::size_t>(r) % clipped.size()], box,
                      settings, budget, rng, best);
  }
  return best;
}

template <typename Rng>
OptimizeResult cmaes_maximize(const Objective& objective, const Vector& x0, const SearchBox& box,
                              const OptimizerSettings& settings, Rng& rng) {
  return cmaes_maximize(objective, std::span<const Vector>(&x0, 1), box, settings, rng);
}

}  // namespace rhoest
