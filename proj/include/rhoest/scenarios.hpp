#pragma once

// Simulation scenarios: covariate laws, true parameters, and the outlier and
// contamination corruptions, with the generators that draw datasets from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rhoest/dataset.hpp"
#include "rhoest/expfam.hpp"
#include "rhoest/models.hpp"
#include "rhoest/numeric.hpp"

namespace rhoest {

struct UniformBox {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(std::span<const double> w) const {
    if (w.size() != lo.size()) return false;
    for (std::size_t j = 0; j < lo.size(); ++j) {
      if (w[j] < lo[j] || w[j] > hi[j]) return false;
    }
    return true;
  }
};

/// Mixture of product-uniform laws on boxes.
struct CovariateLaw {
  std::vector<double> weights;
  std::vector<UniformBox> boxes;

  std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().lo.size(); }

  void validate() const {
    if (boxes.empty() || boxes.size() != weights.size()) {
      throw std::invalid_argument("covariate law: one weight per box required");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("covariate law: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("covariate law: weights must sum to 1");
    for (const auto& b : boxes) {
      if (b.lo.size() != dim() || b.hi.size() != dim()) {
        throw std::invalid_argument("covariate law: boxes differ in dimension");
      }
      for (std::size_t j = 0; j < b.lo.size(); ++j) {
        if (!(b.lo[j] <= b.hi[j])) throw std::invalid_argument("covariate law: empty box side");
      }
    }
  }

  /// Index of the box a draw came from is returned; the draw goes to out.
  template <typename Rng>
  std::size_t sample(Rng& rng, std::span<double> out) const {
    std::size_t k = 0;
    if (boxes.size() > 1) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double r = u(rng);
      double acc = 0.0;
      k = boxes.size() - 1;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) {
          k = i;
          break;
        }
      }
    }
    const auto& b = boxes[k];
    for (std::size_t j = 0; j < b.lo.size(); ++j) {
      std::uniform_real_distribution<double> u(b.lo[j], b.hi[j]);
      out[j] = u(rng);
    }
    return k;
  }

  static CovariateLaw product(std::vector<double> lo, std::vector<double> hi) {
    return CovariateLaw{{1.0}, {UniformBox{std::move(lo), std::move(hi)}}};
  }
};

/// Conditional law R(.|w) of a contaminating observation, evaluated at one w:
/// either finitely many atoms or a uniform law on [lo, hi].
struct ContaminantLaw {
  bool discrete = true;
  std::vector<double> atoms;
  std::vector<double> probs;
  double lo = 0.0;
  double hi = 0.0;

  static ContaminantLaw point_masses(std::vector<double> at, std::vector<double> p) {
    ContaminantLaw r;
    r.discrete = true;
    r.atoms = std::move(at);
    r.probs = std::move(p);
    return r;
  }
  static ContaminantLaw uniform(double a, double b) {
    if (!(a < b)) throw DomainError("contaminant: uniform law needs lo < hi");
    ContaminantLaw r;
    r.discrete = false;
    r.lo = a;
    r.hi = b;
    return r;
  }

  /// Probability of y (discrete) or density at y (continuous).
  double mass(double y) const {
    if (discrete) {
      double p = 0.0;
      for (std::size_t k = 0; k < atoms.size(); ++k) p += atoms[k] == y ? probs[k] : 0.0;
      return p;
    }
    return (y >= lo && y <= hi) ? 1.0 / (hi - lo) : 0.0;
  }

  double support_max() const {
    if (discrete) return atoms.empty() ? 0.0 : *std::max_element(atoms.begin(), atoms.end());
    return hi;
  }

  template <typename Rng>
  double sample(Rng& rng) const {
    if (!discrete) return std::uniform_real_distribution<double>(lo, hi)(rng);
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      acc += probs[k];
      if (r < acc) return atoms[k];
    }
    return atoms.back();
  }
};

enum class ContaminationKind {
  shifted_bernoulli,  // y = base + B, B ~ Bernoulli(logistic(<c, w>))
  uniform_interval,   // y ~ U[lo, hi], independent of w
};

struct Contamination {
  double rate = 0.0;
  ContaminationKind kind = ContaminationKind::uniform_interval;
  double base = 80.0;
  std::vector<double> coefficients;  // for shifted_bernoulli
  double lo = 50.0;
  double hi = 60.0;

  ContaminantLaw law_at(std::span<const double> w) const {
    if (kind == ContaminationKind::uniform_interval) return ContaminantLaw::uniform(lo, hi);
    double z = 0.0;
    for (std::size_t j = 0; j < coefficients.size() && j < w.size(); ++j) z += coefficients[j] * w[j];
    const double p = logistic(z);
    return ContaminantLaw::point_masses({base, base + 1.0}, {1.0 - p, p});
  }
};

struct Outlier {
  std::vector<double> w;
  double y = 0.0;
};

enum class CorruptionKind { none, outlier, contamination };

struct Corruption {
  CorruptionKind kind = CorruptionKind::none;
  Outlier outlier;
  Contamination contamination;
};

struct Scenario {
  std::string id;
  NaturalExpFamily family = NaturalExpFamily::bernoulli();
  RegressionModel model = RegressionModel::linear();
  Vector eta_star;
  CovariateLaw pw;
  Corruption corruption;
  int n = 500;
  int replications = 500;
  int quadrature_n = 10000;

  void validate() const {
    pw.validate();
    if (static_cast<int>(pw.dim()) != model.covariate_dim()) {
      throw std::invalid_argument("scenario " + id + ": covariate law and model dimensions differ");
    }
    if (eta_star.size() != model.dim_p()) {
      throw std::invalid_argument("scenario " + id + ": eta_star has the wrong dimension");
    }
    const double r = corruption.contamination.rate;
    if (corruption.kind == CorruptionKind::contamination && !(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument("scenario " + id + ": contamination rate must lie in [0,1]");
    }
    if (n < 1 || replications < 1 || quadrature_n < 1) {
      throw std::invalid_argument("scenario " + id + ": n, replications and quadrature_n must be >= 1");
    }
  }

  double theta_star(std::span<const double> w) const {
    return model.eval_theta(std::span<const double>(eta_star.data(), static_cast<std::size_t>(eta_star.size())), w);
  }
};

namespace detail {

inline Vector make_vector(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline CovariateLaw bernoulli_cubes(bool separable) {
  auto cube = [](double c) {
    return UniformBox{std::vector<double>(5, c - 0.25), std::vector<double>(5, c + 0.25)};
  };
  if (separable) return CovariateLaw{{0.5, 0.5}, {cube(2.0), cube(-2.0)}};
  return CovariateLaw{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {cube(0.0), cube(2.0), cube(-2.0)}};
}

}  // namespace detail

inline std::vector<std::string> scenario_ids() {
  return {"bernoulli_ws",      "bernoulli_separable", "poisson_ws",        "exponential_ws",
          "bernoulli_outlier", "poisson_outlier",     "exponential_outlier", "poisson_contam",
          "exponential_contam"};
}

/// Built-in scenario definitions. The separable logit scenario keeps only the
/// two far cubes, where the logit of the true parameter is at least 6.25 in
/// absolute value, so that most samples are linearly separable.
inline Scenario make_scenario(std::string_view id) {
  Scenario s;
  s.id = std::string(id);
  const std::string family = s.id.substr(0, s.id.find('_'));
  const std::string variant = s.id.find('_') == std::string::npos ? "" : s.id.substr(s.id.find('_') + 1);
  if (family == "bernoulli") {
    s.family = NaturalExpFamily::bernoulli();
    s.model = RegressionModel::linear();
    s.eta_star = Vector::Ones(6);
    s.pw = detail::bernoulli_cubes(variant == "separable");
    if (variant == "outlier") {
      s.corruption.kind = CorruptionKind::outlier;
      s.corruption.outlier = Outlier{std::vector<double>(5, 1000.0), -1.0};
    } else if (variant != "ws" && variant != "separable") {
      throw std::invalid_argument("unknown scenario '" + s.id + "'");
    }
  } else if (family == "poisson") {
    s.family = NaturalExpFamily::poisson();
    s.model = RegressionModel::loglog1pexp();
    s.eta_star = detail::make_vector({0.7, 3, 4, 10, 2, 5});
    s.pw = CovariateLaw::product({0.2, 0.2, 0.2, 0.1, 0.1}, {0.25, 0.25, 0.3, 0.2, 0.2});
    if (variant == "outlier") {
      s.corruption.kind = CorruptionKind::outlier;
      s.corruption.outlier = Outlier{std::vector<double>(5, 0.1), 200.0};
    } else if (variant == "contam") {
      s.corruption.kind = CorruptionKind::contamination;
      auto& c = s.corruption.contamination;
      c.rate = 0.05;
      c.kind = ContaminationKind::shifted_bernoulli;
      c.base = 80.0;
      c.coefficients = {1.0, -1.0, 0.0, -1.0, 1.0};
    } else if (variant != "ws") {
      throw std::invalid_argument("unknown scenario '" + s.id + "'");
    }
  } else if (family == "exponential") {
    s.family = NaturalExpFamily::exponential();
    s.model = RegressionModel::log1pexp();
    s.eta_star = detail::make_vector({0.07, 3, 4, 6, 2, 1});
    s.pw = CovariateLaw::product({0, 0, 0, 0, 0}, {0.01, 0.01, 0.01, 0.1, 0.1});
    if (variant == "outlier") {
      s.corruption.kind = CorruptionKind::outlier;
      s.corruption.outlier = Outlier{{0.005, 0.005, 0.005, 0.05, 0.05}, 1000.0};
    } else if (variant == "contam") {
      s.corruption.kind = CorruptionKind::contamination;
      auto& c = s.corruption.contamination;
      c.rate = 0.05;
      c.kind = ContaminationKind::uniform_interval;
      c.lo = 50.0;
      c.hi = 60.0;
    } else if (variant != "ws") {
      throw std::invalid_argument("unknown scenario '" + s.id + "'");
    }
  } else {
    throw std::invalid_argument("unknown scenario '" + s.id + "'");
  }
  s.validate();
  return s;
}

// Seed streams. Datasets and quadrature draws depend on (master, scenario,
// replication) only, so every estimator sees the same samples.
enum class SeedPurpose : std::uint64_t { data = 1, corruption = 2, quadrature = 3, fit = 4 };

inline std::uint64_t replication_seed(std::uint64_t master, std::string_view scenario_id,
                                      std::uint64_t rep, SeedPurpose purpose) {
  return mix_seed(master, stable_hash(scenario_id), rep, static_cast<std::uint64_t>(purpose));
}

/// Clean sample of size s.n: W_i ~ P_W, Y_i ~ Q_{theta*(W_i)}.
inline Dataset gen_well_specified(const Scenario& s, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(s.pw.dim());
  Dataset ds(s.n, d);
  std::mt19937_64 rng(seed);
  std::vector<double> w(static_cast<std::size_t>(d));
  for (int i = 0; i < s.n; ++i) {
    s.pw.sample(rng, w);
    for (Eigen::Index j = 0; j < d; ++j) ds.w(i, j) = w[static_cast<std::size_t>(j)];
    ds.y[static_cast<std::size_t>(i)] = sample(s.family, s.theta_star(w), rng);
  }
  return ds;
}

/// Appends the scenario's outlier (w_out, y_out) as a flagged last row.
inline Dataset inject_outlier(const Dataset& ds, const Scenario& s) {
  if (s.corruption.kind != CorruptionKind::outlier) {
    throw std::invalid_argument("inject_outlier: scenario " + s.id + " has no outlier");
  }
  const auto& o = s.corruption.outlier;
  if (static_cast<Eigen::Index>(o.w.size()) != ds.dim()) {
    throw std::invalid_argument("inject_outlier: outlier dimension mismatch");
  }
  Dataset out = ds;
  out.append(Eigen::Map<const Eigen::RowVectorXd>(o.w.data(), static_cast<Eigen::Index>(o.w.size())), o.y,
             RowFlag::outlier);
  return out;
}

/// Clean sample from the same stream as gen_well_specified, after which each
/// response is independently replaced, with probability rate, by a draw from
/// R(.|W_i). Covariates are left unchanged.
inline Dataset gen_contaminated(const Scenario& s, std::uint64_t seed, std::uint64_t corruption_seed) {
  if (s.corruption.kind != CorruptionKind::contamination) {
    throw std::invalid_argument("gen_contaminated: scenario " + s.id + " has no contamination");
  }
  Dataset ds = gen_well_specified(s, seed);
  const auto& c = s.corruption.contamination;
  std::mt19937_64 rng(corruption_seed);
  std::bernoulli_distribution coin(c.rate);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!coin(rng)) continue;
    const auto row = ds.w.row(static_cast<Eigen::Index>(i));
    const ContaminantLaw r = c.law_at(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    ds.y[i] = r.sample(rng);
    ds.flag[i] = RowFlag::contaminated;
  }
  return ds;
}

inline Dataset gen_contaminated(const Scenario& s, std::uint64_t seed) {
  return gen_contaminated(s, seed, mix_seed(seed, static_cast<std::uint64_t>(SeedPurpose::corruption)));
}

/// The dataset of replication rep: clean, with the outlier appended, or
/// contaminated, according to the scenario.
inline Dataset generate(const Scenario& s, std::uint64_t master, std::uint64_t rep) {
  const auto data_seed = replication_seed(master, s.id, rep, SeedPurpose::data);
  switch (s.corruption.kind) {
    case CorruptionKind::none: return gen_well_specified(s, data_seed);
    case CorruptionKind::outlier: return inject_outlier(gen_well_specified(s, data_seed), s);
    case CorruptionKind::contamination:
      return gen_contaminated(s, data_seed, replication_seed(master, s.id, rep, SeedPurpose::corruption));
  }
  return {};
}

}  // namespace rhoest
