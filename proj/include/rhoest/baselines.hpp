#pragma once

// Competitors and initializers: maximum likelihood (damped Newton), the
// median-based L1 fit, and the penalized-hinge initializer for binary data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rhoest/cmaes.hpp"
#include "rhoest/dataset.hpp"
#include "rhoest/expfam.hpp"
#include "rhoest/models.hpp"
#include "rhoest/numeric.hpp"

namespace rhoest {

// ---------------------------------------------------------------------------
// Maximum likelihood

struct MleOptions {
  int max_iters = 500;
  double ridge = 1e-8;            // lambda in (-H + lambda I) d = g
  double divergence_norm = 1e3;   // ||eta|| beyond which an ascending fit is declared divergent
  double gradient_tol = 1e-8;     // per observation
};

struct MleResult {
  bool exists = false;
  Vector eta_hat;    // valid when exists
  Vector eta_last;   // last iterate, also when the fit diverged
  double log_lik = -kInf;
  double gradient_norm = kInf;
  int newton_iters = 0;
  bool converged = false;
  double seconds = 0.0;
};

namespace detail {

/// Log-likelihood sum_i S(y_i) theta_i - A(theta_i) with its gradient and
/// Hessian in eta, for models of the form theta = g(<eta, x(w)>).
class LogLikelihood {
 public:
  LogLikelihood(const Dataset& data, const NaturalExpFamily& fam, const RegressionModel& model)
      : fam_(fam), model_(model), x_(static_cast<Eigen::Index>(data.size()), model.dim_p()),
        suff_(static_cast<Eigen::Index>(data.size())) {
    if (model.is_piecewise() && model.parametrization()) {
      throw UnsupportedError("mle: piecewise models with a general parametrization are not supported");
    }
    std::vector<double> feat(static_cast<std::size_t>(model.dim_p()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto row = data.w.row(static_cast<Eigen::Index>(i));
      model.features(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), feat);
      for (int j = 0; j < model.dim_p(); ++j) x_(static_cast<Eigen::Index>(i), j) = feat[static_cast<std::size_t>(j)];
      suff_[static_cast<Eigen::Index>(i)] = fam.suff_stat(data.y[i]);
    }
  }

  double value(const Vector& eta) const {
    const Vector z = x_ * eta;
    const Interval iv = fam_.natural_interval();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double theta = model_.link(z[i]);
      if (!iv.contains(theta)) return -kInf;
      ll += suff_[i] * theta - fam_.log_partition(theta);
    }
    return std::isnan(ll) ? -kInf : ll;
  }

  void gradient(const Vector& eta, Vector& g) const {
    const Vector z = x_ * eta;
    Vector r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double theta = model_.link(z[i]);
      r[i] = (suff_[i] - fam_.log_partition_d1(theta)) * model_.link_d1(z[i]);
    }
    g.noalias() = x_.transpose() * r;
  }

  /// Negative Hessian: sum_i [A''(theta_i) g'(z_i)^2 - (S_i - A'(theta_i)) g''(z_i)] x_i x_i^T.
  void neg_hessian(const Vector& eta, Eigen::MatrixXd& h) const {
    const Vector z = x_ * eta;
    Vector c(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double theta = model_.link(z[i]);
      const double g1 = model_.link_d1(z[i]);
      c[i] = fam_.log_partition_d2(theta) * g1 * g1 -
             (suff_[i] - fam_.log_partition_d1(theta)) * model_.link_d2(z[i]);
    }
    h.noalias() = x_.transpose() * c.asDiagonal() * x_;
  }

  /// Bernoulli only: true when every observation lies strictly on its own side
  /// of the hyperplane <eta, x> = 0. Then the likelihood increases along the
  /// ray t * eta without bound on t, so no maximizer exists.
  bool separates(const Vector& eta) const {
    if (fam_.kind() != FamilyKind::bernoulli) return false;
    if (model_.kind() != ModelKind::linear && model_.kind() != ModelKind::piecewise_constant) return false;
    const Vector z = x_ * eta;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (!((suff_[i] >= 1.0 && z[i] > 0.0) || (suff_[i] <= 0.0 && z[i] < 0.0))) return false;
    }
    return true;
  }

  Eigen::Index dim() const { return x_.cols(); }
  Eigen::Index rows() const { return x_.rows(); }

 private:
  NaturalExpFamily fam_;
  const RegressionModel& model_;
  RowMatrix x_;
  Vector suff_;
};

}  // namespace detail

/// Damped Newton ascent on the log-likelihood, started at eta = 0. Divergence
/// (||eta|| above the threshold while the likelihood still increases, or a
/// binary iterate that separates the labels) is reported through
/// exists = false rather than thrown.
inline MleResult mle(const Dataset& data, const NaturalExpFamily& fam, const RegressionModel& model,
                     const MleOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (data.w.cols() != model.covariate_dim()) throw DomainError("mle: covariate dimension mismatch");
  detail::LogLikelihood ll(data, fam, model);
  const auto p = ll.dim();
  const double n = static_cast<double>(ll.rows());

  MleResult res;
  Vector eta = Vector::Zero(p);
  double f = ll.value(eta);
  Vector g(p);
  Eigen::MatrixXd h(p, p);
  bool diverged = false;

  for (int it = 0; it < opt.max_iters; ++it) {
    ll.gradient(eta, g);
    res.gradient_norm = g.norm();
    if (res.gradient_norm <= opt.gradient_tol * n) {
      res.converged = true;
      break;
    }
    ll.neg_hessian(eta, h);
    h.diagonal().array() += opt.ridge;
    Vector d;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) d = ldlt.solve(g);
    if (d.size() != p || !d.allFinite() || d.dot(g) <= 0.0) d = g;

    const double slope = d.dot(g);
    double step = 1.0;
    double f_new = -kInf;
    Vector trial(p);
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = eta + step * d;
      f_new = ll.value(trial);
      if (f_new >= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.newton_iters = it + 1;
    if (!accepted || !(f_new >= f)) {
      // No ascent possible at working precision.
      res.converged = res.gradient_norm <= opt.gradient_tol * n;
      break;
    }
    eta = trial;
    f = f_new;
    if (eta.norm() > opt.divergence_norm || ll.separates(eta)) {
      diverged = true;
      break;
    }
  }
  if (!diverged && !res.converged) {
    ll.gradient(eta, g);
    res.gradient_norm = g.norm();
    res.converged = res.gradient_norm <= opt.gradient_tol * n;
  }

  res.eta_last = eta;
  res.log_lik = f;
  res.exists = !diverged;
  if (res.exists) res.eta_hat = eta;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Analytic log-likelihood gradient, exposed for finite-difference checks.
inline Vector log_likelihood_gradient(const Dataset& data, const NaturalExpFamily& fam,
                                      const RegressionModel& model, const Vector& eta) {
  detail::LogLikelihood ll(data, fam, model);
  Vector g(ll.dim());
  ll.gradient(eta, g);
  return g;
}

inline double log_likelihood(const Dataset& data, const NaturalExpFamily& fam,
                             const RegressionModel& model, const Vector& eta) {
  return detail::LogLikelihood(data, fam, model).value(eta);
}

// ---------------------------------------------------------------------------
// Median-based estimator

/// sum_i |y_i - m(theta(w_i))| with m the family's median approximation.
inline double median_criterion(const Dataset& data, const NaturalExpFamily& fam,
                               const BoundDesign& design, const Vector& eta) {
  Vector theta;
  design.thetas(eta, theta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    total += std::abs(data.y[static_cast<std::size_t>(i)] - median_approx(fam, theta[i]));
  }
  return total;
}

namespace detail {

/// Inverse of the model's map from eta-coordinates to theta, per coordinate.
inline double link_inverse(const RegressionModel& model, double theta) {
  switch (model.kind()) {
    case ModelKind::loglog1pexp: return softplus_inv(std::exp(theta));
    case ModelKind::log1pexp: return softplus_inv(theta);
    case ModelKind::piecewise_constant:
      return model.parametrization() ? from_natural(*model.parametrization(), theta) : theta;
    default: return theta;
  }
}

}  // namespace detail

/// Least-squares warm start for the median fit: a per-observation natural
/// parameter guess from y, mapped back through the link and regressed on x(w).
inline Vector median_warm_start(const Dataset& data, const NaturalExpFamily& fam,
                                const RegressionModel& model) {
  const auto n = static_cast<Eigen::Index>(data.size());
  RowMatrix x(n, model.dim_p());
  Vector target(n);
  std::vector<double> feat(static_cast<std::size_t>(model.dim_p()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = data.w.row(i);
    model.features(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), feat);
    for (int j = 0; j < model.dim_p(); ++j) x(i, j) = feat[static_cast<std::size_t>(j)];
    const double y = data.y[static_cast<std::size_t>(i)];
    double theta = 0.0;
    if (fam.kind() == FamilyKind::poisson) {
      theta = std::log(std::clamp(y, 0.5, 1e6));
    } else {
      theta = std::clamp(std::numbers::ln2 / std::max(y, 1e-6), 1e-6, 1e6);
    }
    target[i] = detail::link_inverse(model, theta);
  }
  Vector eta = x.colPivHouseholderQr().solve(target);
  if (!eta.allFinite()) eta.setZero();
  model.search_box().clamp(std::span<double>(eta.data(), static_cast<std::size_t>(eta.size())));
  return eta;
}

struct MedianResult {
  Vector eta_hat;
  double criterion = 0.0;
  double warm_start_criterion = 0.0;
  int evaluations = 0;
  double seconds = 0.0;
};

/// Minimizes the L1 median criterion over the search box with CMA-ES from a
/// least-squares warm start.
template <typename Rng>
MedianResult median_estimate(const Dataset& data, const NaturalExpFamily& fam,
                             const RegressionModel& model, const OptimizerSettings& settings,
                             Rng& rng) {
  if (fam.kind() != FamilyKind::poisson && fam.kind() != FamilyKind::exponential) {
    throw UnsupportedError("median_estimate: only the poisson and exponential families have a median criterion");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const BoundDesign design(model, data.w);
  const Vector warm = median_warm_start(data, fam, model);
  Objective objective = [&](const Vector& eta) {
    try {
      return -median_criterion(data, fam, design, eta);
    } catch (const DomainError&) {
      return -kInf;
    }
  };
  const OptimizeResult r = cmaes_maximize(objective, warm, model.search_box(), settings, rng);
  MedianResult out;
  out.eta_hat = r.x;
  out.criterion = -r.f;
  out.warm_start_criterion = median_criterion(data, fam, design, warm);
  out.evaluations = r.evaluations;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Penalized hinge initializer

struct HingeOptions {
  double cost = 10.0;
  double tolerance = 1e-10;  // relative duality gap and residual level at exit
  int max_iters = 200;
};

struct HingeResult {
  Vector eta;  // (intercept, slopes)
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// cost * sum_i (1 - s_i theta(w_i))_+ + 0.5 * ||eta_{1:d}||^2 with s_i = +1 for
/// y_i >= 1/2, -1 otherwise, theta linear with an unpenalized intercept.
inline double hinge_objective(const Dataset& data, const Vector& eta, double cost = 10.0) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double s = data.y[i] >= 0.5 ? 1.0 : -1.0;
    const double theta = eta[0] + data.w.row(static_cast<Eigen::Index>(i)).dot(eta.tail(eta.size() - 1));
    hinge += std::max(0.0, 1.0 - s * theta);
  }
  return cost * hinge + 0.5 * eta.tail(eta.size() - 1).squaredNorm();
}

/// Minimizer of the hinge objective as the quadratic program
///   min 0.5 ||w||^2 + cost * sum xi_i,  s_i (b + <w, x_i>) + xi_i >= 1,  xi >= 0,
/// by a Mehrotra predictor-corrector interior-point method. Eliminating the
/// slacks and multipliers leaves a (d+1) x (d+1) normal system per step.
inline HingeResult hinge_init_detailed(const Dataset& data, const HingeOptions& opt = {}) {
  for (double y : data.y) {
    if (!(y == 0.0 || y == 1.0 || y == -1.0)) {
      throw UnsupportedError("hinge_init: responses must be binary (0/1, outliers -1)");
    }
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = data.w.cols() + 1;
  const double c = opt.cost;
  const double nn = static_cast<double>(n);
  // Rows a_i = s_i (1, x_i).
  Eigen::MatrixXd a_mat(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = data.y[static_cast<std::size_t>(i)] >= 0.5 ? 1.0 : -1.0;
    a_mat(i, 0) = s;
    a_mat.row(i).tail(p - 1) = s * data.w.row(i);
  }
  Vector pen = Vector::Ones(p);
  pen[0] = 0.0;

  Vector v = Vector::Zero(p);
  Vector xi = Vector::Ones(n);
  Vector t = Vector::Ones(n);        // slack of the margin constraints
  Vector lam = Vector::Constant(n, 0.5 * c);
  Vector kap = Vector::Constant(n, 0.5 * c);
  const double scale = 1.0 + a_mat.cwiseAbs().maxCoeff();

  auto max_step = [](const Vector& x, const Vector& dx) {
    double step = kInf;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (dx[i] < 0.0) step = std::min(step, -x[i] / dx[i]);
    }
    return step;
  };

  HingeResult res;
  for (int it = 0; it < opt.max_iters; ++it) {
    const Vector r1 = pen.cwiseProduct(v) - a_mat.transpose() * lam;
    const Vector r2 = Vector::Constant(n, c) - lam - kap;
    const Vector r3 = a_mat * v + xi - Vector::Ones(n) - t;
    const double mu = (lam.dot(t) + kap.dot(xi)) / (2.0 * nn);
    const double obj = 0.5 * v.tail(p - 1).squaredNorm() + c * xi.sum();
    res.iterations = it;
    if (!std::isfinite(mu)) break;
    if (2.0 * nn * mu <= opt.tolerance * (1.0 + std::abs(obj)) &&
        r1.lpNorm<Eigen::Infinity>() <= opt.tolerance * scale * c &&
        r2.lpNorm<Eigen::Infinity>() <= opt.tolerance * c &&
        r3.lpNorm<Eigen::Infinity>() <= opt.tolerance * scale) {
      res.converged = true;
      break;
    }
    const Vector e_inv = (xi.cwiseQuotient(kap) + t.cwiseQuotient(lam)).cwiseInverse();
    Eigen::MatrixXd normal = a_mat.transpose() * e_inv.asDiagonal() * a_mat;
    normal.diagonal() += pen;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);

    Vector dv, dxi, dt, dlam, dkap;
    auto newton = [&](const Vector& rc1, const Vector& rc2) {
      const Vector rhat = -r3 - (rc2 - xi.cwiseProduct(r2)).cwiseQuotient(kap) + rc1.cwiseQuotient(lam);
      dv = ldlt.solve(-r1 + a_mat.transpose() * e_inv.cwiseProduct(rhat));
      dlam = e_inv.cwiseProduct(rhat - a_mat * dv);
      dt = (rc1 - t.cwiseProduct(dlam)).cwiseQuotient(lam);
      dxi = (rc2 - xi.cwiseProduct(r2)).cwiseQuotient(kap) + xi.cwiseQuotient(kap).cwiseProduct(dlam);
      dkap = r2 - dlam;
    };

    newton(-lam.cwiseProduct(t), -kap.cwiseProduct(xi));
    double sp = std::min({1.0, max_step(t, dt), max_step(xi, dxi)});
    double sd = std::min({1.0, max_step(lam, dlam), max_step(kap, dkap)});
    const double mu_aff =
        ((lam + sd * dlam).dot(t + sp * dt) + (kap + sd * dkap).dot(xi + sp * dxi)) / (2.0 * nn);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
    const Vector rc1 = Vector::Constant(n, sigma * mu) - lam.cwiseProduct(t) - dlam.cwiseProduct(dt);
    const Vector rc2 = Vector::Constant(n, sigma * mu) - kap.cwiseProduct(xi) - dkap.cwiseProduct(dxi);
    newton(rc1, rc2);
    sp = std::min(1.0, 0.995 * std::min(max_step(t, dt), max_step(xi, dxi)));
    sd = std::min(1.0, 0.995 * std::min(max_step(lam, dlam), max_step(kap, dkap)));
    if (!dv.allFinite() || !(sp > 0.0) || !(sd > 0.0)) break;
    v += sp * dv;
    xi += sp * dxi;
    t += sp * dt;
    lam += sd * dlam;
    kap += sd * dkap;
  }

  res.eta = v;
  res.objective = hinge_objective(data, res.eta, opt.cost);
  return res;
}

inline Vector hinge_init(const Dataset& data) { return hinge_init_detailed(data).eta; }

}  // namespace rhoest
