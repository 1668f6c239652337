#pragma once

// One-parameter natural exponential families q_theta(y) = exp(S(y) theta - A(theta))
// with respect to a fixed base measure, plus reparametrizations theta = u(gamma).

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "rhoest/numeric.hpp"

namespace rhoest {

/// Interval of the extended real line with open/closed ends.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const {
    if (std::isnan(x)) return false;
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }

  std::string str() const {
    std::ostringstream os;
    os << (lo_closed ? '[' : '(') << lo << ", " << hi << (hi_closed ? ']' : ')');
    return os.str();
  }
};

inline const Interval kRealLine{};
inline const Interval kPositiveHalfLine{0.0, kInf, false, false};

enum class FamilyKind { bernoulli, poisson, exponential, gaussian_fixed_sigma };

enum class BaseMeasure {
  counting_binary,    // counting measure on {0, 1}
  poisson_one,        // Poisson(1) on N, i.e. counting measure weighted by e^-1 / y!
  lebesgue_positive,  // Lebesgue on (0, inf)
  gaussian_reference  // N(0, sigma^2)
};

inline std::string_view to_string(BaseMeasure b) {
  switch (b) {
    case BaseMeasure::counting_binary: return "counting on {0,1}";
    case BaseMeasure::poisson_one: return "Poisson(1) on N";
    case BaseMeasure::lebesgue_positive: return "Lebesgue on (0,inf)";
    case BaseMeasure::gaussian_reference: return "N(0,sigma^2)";
  }
  return "?";
}

class NaturalExpFamily {
 public:
  static NaturalExpFamily bernoulli() { return NaturalExpFamily(FamilyKind::bernoulli, 1.0); }
  static NaturalExpFamily poisson() { return NaturalExpFamily(FamilyKind::poisson, 1.0); }
  static NaturalExpFamily exponential() { return NaturalExpFamily(FamilyKind::exponential, 1.0); }
  static NaturalExpFamily gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("gaussian_fixed_sigma: sigma must be finite and > 0");
    }
    return NaturalExpFamily(FamilyKind::gaussian_fixed_sigma, sigma);
  }

  static NaturalExpFamily from_name(std::string_view name, double sigma = 1.0) {
    if (name == "bernoulli") return bernoulli();
    if (name == "poisson") return poisson();
    if (name == "exponential") return exponential();
    if (name == "gaussian_fixed_sigma" || name == "gaussian") return gaussian(sigma);
    throw UnsupportedError("unknown family '" + std::string(name) + "'");
  }

  FamilyKind kind() const { return kind_; }
  double sigma() const { return sigma_; }

  std::string_view name() const {
    switch (kind_) {
      case FamilyKind::bernoulli: return "bernoulli";
      case FamilyKind::poisson: return "poisson";
      case FamilyKind::exponential: return "exponential";
      case FamilyKind::gaussian_fixed_sigma: return "gaussian_fixed_sigma";
    }
    return "?";
  }

  Interval natural_interval() const {
    return kind_ == FamilyKind::exponential ? kPositiveHalfLine : kRealLine;
  }

  BaseMeasure base_measure() const {
    switch (kind_) {
      case FamilyKind::bernoulli: return BaseMeasure::counting_binary;
      case FamilyKind::poisson: return BaseMeasure::poisson_one;
      case FamilyKind::exponential: return BaseMeasure::lebesgue_positive;
      case FamilyKind::gaussian_fixed_sigma: return BaseMeasure::gaussian_reference;
    }
    return BaseMeasure::counting_binary;
  }

  bool is_discrete() const {
    return kind_ == FamilyKind::bernoulli || kind_ == FamilyKind::poisson;
  }

  void check_parameter(double theta) const {
    if (!natural_interval().contains(theta)) {
      std::ostringstream os;
      os << name() << ": natural parameter " << theta << " outside I = "
         << natural_interval().str();
      throw DomainError(os.str());
    }
  }

  /// S(y). Defined on the whole real line so that observations outside the
  /// nominal support (e.g. y = -1 for Bernoulli) still give finite ratios.
  double suff_stat(double y) const {
    switch (kind_) {
      case FamilyKind::bernoulli:
      case FamilyKind::poisson: return y;
      case FamilyKind::exponential: return -y;
      case FamilyKind::gaussian_fixed_sigma: return y / (sigma_ * sigma_);
    }
    return kNaN;
  }

  /// A(theta). No domain check; callers on hot paths validate once.
  double log_partition(double theta) const {
    switch (kind_) {
      case FamilyKind::bernoulli: return softplus(theta);
      case FamilyKind::poisson: return std::expm1(theta);
      case FamilyKind::exponential: return -std::log(theta);
      case FamilyKind::gaussian_fixed_sigma: return theta * theta / (2.0 * sigma_ * sigma_);
    }
    return kNaN;
  }

  /// A'(theta) = E_theta[S(Y)].
  double log_partition_d1(double theta) const {
    switch (kind_) {
      case FamilyKind::bernoulli: return logistic(theta);
      case FamilyKind::poisson: return std::exp(theta);
      case FamilyKind::exponential: return -1.0 / theta;
      case FamilyKind::gaussian_fixed_sigma: return theta / (sigma_ * sigma_);
    }
    return kNaN;
  }

  /// A''(theta) = Var_theta[S(Y)].
  double log_partition_d2(double theta) const {
    switch (kind_) {
      case FamilyKind::bernoulli: {
        const double p = logistic(theta);
        return p * (1.0 - p);
      }
      case FamilyKind::poisson: return std::exp(theta);
      case FamilyKind::exponential: return 1.0 / (theta * theta);
      case FamilyKind::gaussian_fixed_sigma: return 1.0 / (sigma_ * sigma_);
    }
    return kNaN;
  }

  /// log of the base measure's mass (discrete) or density w.r.t. Lebesgue
  /// (continuous) at y; -inf outside the support.
  double log_base(double y) const {
    switch (kind_) {
      case FamilyKind::bernoulli: return (y == 0.0 || y == 1.0) ? 0.0 : -kInf;
      case FamilyKind::poisson:
        if (y < 0.0 || y != std::floor(y)) return -kInf;
        return -1.0 - std::lgamma(y + 1.0);
      case FamilyKind::exponential: return y >= 0.0 ? 0.0 : -kInf;
      case FamilyKind::gaussian_fixed_sigma:
        return -0.5 * (y * y) / (sigma_ * sigma_) - std::log(sigma_) -
               0.5 * std::log(2.0 * std::numbers::pi);
    }
    return kNaN;
  }

  /// Mean of Y (not of S(Y)) under Q_theta.
  double mean(double theta) const {
    switch (kind_) {
      case FamilyKind::bernoulli: return logistic(theta);
      case FamilyKind::poisson: return std::exp(theta);
      case FamilyKind::exponential: return 1.0 / theta;
      case FamilyKind::gaussian_fixed_sigma: return theta;
    }
    return kNaN;
  }

 private:
  NaturalExpFamily(FamilyKind kind, double sigma) : kind_(kind), sigma_(sigma) {}

  FamilyKind kind_;
  double sigma_;
};

/// log q_theta(y) = S(y) theta - A(theta), the log-density w.r.t. the base measure.
inline double log_density(const NaturalExpFamily& fam, double theta, double y) {
  fam.check_parameter(theta);
  return fam.suff_stat(y) * theta - fam.log_partition(theta);
}

/// log of the probability mass / Lebesgue density of Q_theta at y.
inline double log_prob(const NaturalExpFamily& fam, double theta, double y) {
  const double lb = fam.log_base(y);
  if (lb == -kInf) return -kInf;
  return log_density(fam, theta, y) + lb;
}

/// Closed-form squared Hellinger distance between Q_theta and Q_theta'.
inline double hellinger_sq(const NaturalExpFamily& fam, double theta, double theta_prime) {
  fam.check_parameter(theta);
  fam.check_parameter(theta_prime);
  const double mid = 0.5 * (theta + theta_prime);
  fam.check_parameter(mid);
  const double a = fam.log_partition(mid);
  const double b = 0.5 * (fam.log_partition(theta) + fam.log_partition(theta_prime));
  const double h2 = -std::expm1(a - b);
  if (h2 < 0.0) return 0.0;
  return h2 > 1.0 ? 1.0 : h2;
}

/// Draws Y ~ Q_theta.
template <typename Rng>
double sample(const NaturalExpFamily& fam, double theta, Rng& rng) {
  fam.check_parameter(theta);
  switch (fam.kind()) {
    case FamilyKind::bernoulli: {
      std::bernoulli_distribution d(logistic(theta));
      return d(rng) ? 1.0 : 0.0;
    }
    case FamilyKind::poisson: {
      std::poisson_distribution<long long> d(std::exp(theta));
      return static_cast<double>(d(rng));
    }
    case FamilyKind::exponential: {
      std::exponential_distribution<double> d(theta);
      return d(rng);
    }
    case FamilyKind::gaussian_fixed_sigma: {
      std::normal_distribution<double> d(theta, fam.sigma());
      return d(rng);
    }
  }
  return kNaN;
}

/// Median (or the approximation used for median-based fitting) of Q_theta.
inline double median_approx(const NaturalExpFamily& fam, double theta) {
  switch (fam.kind()) {
    case FamilyKind::poisson:
      fam.check_parameter(theta);
      return std::exp(theta) + 1.0 / 3.0 - 0.02 * std::exp(-theta);
    case FamilyKind::exponential:
      fam.check_parameter(theta);
      return std::numbers::ln2 / theta;
    default:
      throw UnsupportedError("median_approx: no median-based criterion for family " +
                             std::string(fam.name()));
  }
}

enum class ParametrizationKind { natural, mean, variance_stabilizing, custom };

/// gamma in J with theta = u(gamma) in I; B = A o u.
struct GeneralParametrization {
  Interval interval_J;
  std::function<double(double)> u;
  std::function<double(double)> u_inverse;
  ParametrizationKind kind = ParametrizationKind::custom;
  std::string name;
};

inline double to_natural(const GeneralParametrization& par, double gamma) {
  if (!par.interval_J.contains(gamma)) {
    std::ostringstream os;
    os << "parametrization '" << par.name << "': gamma " << gamma << " outside J = "
       << par.interval_J.str();
    throw DomainError(os.str());
  }
  return par.u(gamma);
}

inline double from_natural(const GeneralParametrization& par, double theta) {
  return par.u_inverse(theta);
}

/// The map gamma = v(theta) with v' = sqrt(A''/8), returned with u = v^{-1}.
inline GeneralParametrization variance_stabilizer(const NaturalExpFamily& fam) {
  constexpr double sqrt2 = std::numbers::sqrt2;
  const double sqrt8 = 2.0 * sqrt2;
  GeneralParametrization p;
  p.kind = ParametrizationKind::variance_stabilizing;
  switch (fam.kind()) {
    case FamilyKind::gaussian_fixed_sigma: {
      const double s = fam.sigma() * sqrt8;
      p.interval_J = kRealLine;
      p.u_inverse = [s](double theta) { return theta / s; };
      p.u = [s](double gamma) { return gamma * s; };
      p.name = "gaussian_vst";
      break;
    }
    case FamilyKind::bernoulli:
      // v(theta) = asin(1/sqrt(1+e^-theta)) / sqrt2 maps R onto (0, pi/(2 sqrt2)).
      p.interval_J = Interval{0.0, std::numbers::pi / (2.0 * sqrt2), false, false};
      p.u_inverse = [](double theta) {
        return std::asin(std::sqrt(logistic(theta))) / sqrt2;
      };
      p.u = [](double gamma) {
        const double s = std::sin(sqrt2 * gamma);
        return logit(s * s);
      };
      p.name = "bernoulli_vst";
      break;
    case FamilyKind::poisson:
      p.interval_J = kPositiveHalfLine;
      p.u_inverse = [](double theta) { return std::exp(0.5 * theta) / sqrt2; };
      p.u = [](double gamma) { return 2.0 * std::log(sqrt2 * gamma); };
      p.name = "poisson_vst";
      break;
    case FamilyKind::exponential:
      p.interval_J = kRealLine;
      p.u_inverse = [sqrt8](double theta) { return std::log(theta) / sqrt8; };
      p.u = [sqrt8](double gamma) { return std::exp(sqrt8 * gamma); };
      p.name = "exponential_vst";
      break;
  }
  return p;
}

/// gamma = E[Y] parametrization.
inline GeneralParametrization mean_parametrization(const NaturalExpFamily& fam) {
  GeneralParametrization p;
  p.kind = ParametrizationKind::mean;
  switch (fam.kind()) {
    case FamilyKind::bernoulli:
      p.interval_J = Interval{0.0, 1.0, false, false};
      p.u = [](double g) { return logit(g); };
      p.u_inverse = [](double t) { return logistic(t); };
      p.name = "bernoulli_mean";
      break;
    case FamilyKind::poisson:
      p.interval_J = kPositiveHalfLine;
      p.u = [](double g) { return std::log(g); };
      p.u_inverse = [](double t) { return std::exp(t); };
      p.name = "poisson_mean";
      break;
    case FamilyKind::exponential:
      p.interval_J = kPositiveHalfLine;
      p.u = [](double g) { return 1.0 / g; };
      p.u_inverse = [](double t) { return 1.0 / t; };
      p.name = "exponential_mean";
      break;
    case FamilyKind::gaussian_fixed_sigma:
      p.interval_J = kRealLine;
      p.u = [](double g) { return g; };
      p.u_inverse = [](double t) { return t; };
      p.name = "gaussian_mean";
      break;
  }
  return p;
}

}  // namespace rhoest
