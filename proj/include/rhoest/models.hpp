#pragma once

// Parameter classes Theta: a finite vector eta mapped to a regression function
// theta(.) on the covariate space.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rhoest/expfam.hpp"
#include "rhoest/numeric.hpp"

namespace rhoest {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Axis-aligned bounds for the free coordinates of eta.
struct SearchBox {
  std::vector<double> lo;
  std::vector<double> hi;

  static SearchBox uniform(std::size_t dim, double lo, double hi) {
    return SearchBox{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
  }

  std::size_t size() const { return lo.size(); }

  bool contains(std::span<const double> x) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    }
    return true;
  }

  void clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
};

enum class ModelKind { linear, loglog1pexp, log1pexp, piecewise_constant };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::linear: return "linear";
    case ModelKind::loglog1pexp: return "loglog1pexp";
    case ModelKind::log1pexp: return "log1pexp";
    case ModelKind::piecewise_constant: return "piecewise_constant";
  }
  return "?";
}

class RegressionModel {
 public:
  /// theta(w) = eta_0 + <eta_{1:d}, w>
  static RegressionModel linear(int covariate_dim = 5, double box_halfwidth = 20.0) {
    return RegressionModel(ModelKind::linear, covariate_dim, kRealLine, box_halfwidth);
  }
  /// theta(w) = log log(1 + exp(eta_0 + <eta_{1:d}, w>)), Poisson mean = softplus(.)
  static RegressionModel loglog1pexp(int covariate_dim = 5, double box_halfwidth = 20.0) {
    return RegressionModel(ModelKind::loglog1pexp, covariate_dim, kRealLine, box_halfwidth);
  }
  /// theta(w) = log(1 + exp(eta_0 + <eta_{1:d}, w>)) > 0
  static RegressionModel log1pexp(int covariate_dim = 5, double box_halfwidth = 20.0) {
    return RegressionModel(ModelKind::log1pexp, covariate_dim, kPositiveHalfLine,
                           box_halfwidth);
  }

  /// Piecewise constant on the D cells [(j-1)/D, j/D) of [0,1] (last cell closed).
  /// Without a parametrization eta_j is the natural parameter on cell j; with
  /// one, eta_j = gamma_j and theta = u(gamma_j).
  static RegressionModel piecewise_constant(int cells,
                                            std::optional<GeneralParametrization> par = {},
                                            std::optional<SearchBox> box = {},
                                            Interval codomain = kRealLine) {
    if (cells < 1) throw DomainError("piecewise_constant: number of cells must be >= 1");
    RegressionModel m;
    m.kind_ = ModelKind::piecewise_constant;
    m.dim_p_ = cells;
    m.covariate_dim_ = 1;
    m.vc_bound_ = cells + 1;
    m.codomain_ = codomain;
    m.par_ = std::move(par);
    if (box) {
      m.box_ = *box;
    } else if (m.par_ && m.par_->interval_J.lo == 0.0) {
      m.box_ = SearchBox::uniform(cells, 1e-3, 1e3);
    } else {
      m.box_ = SearchBox::uniform(cells, -20.0, 20.0);
    }
    if (m.box_.size() != static_cast<std::size_t>(cells)) {
      throw DomainError("piecewise_constant: search box dimension mismatch");
    }
    return m;
  }

  static RegressionModel from_name(std::string_view name, int covariate_dim = 5) {
    if (name == "linear") return linear(covariate_dim);
    if (name == "loglog1pexp") return loglog1pexp(covariate_dim);
    if (name == "log1pexp") return log1pexp(covariate_dim);
    throw UnsupportedError("unknown model kind '" + std::string(name) + "'");
  }

  /// The link used by each of the three simulation families.
  static RegressionModel for_family(const NaturalExpFamily& fam, int covariate_dim = 5) {
    switch (fam.kind()) {
      case FamilyKind::poisson: return loglog1pexp(covariate_dim);
      case FamilyKind::exponential: return log1pexp(covariate_dim);
      default: return linear(covariate_dim);
    }
  }

  ModelKind kind() const { return kind_; }
  int dim_p() const { return dim_p_; }
  int covariate_dim() const { return covariate_dim_; }
  const Interval& codomain() const { return codomain_; }
  int vc_bound() const { return vc_bound_; }
  const SearchBox& search_box() const { return box_; }
  const std::optional<GeneralParametrization>& parametrization() const { return par_; }
  bool is_piecewise() const { return kind_ == ModelKind::piecewise_constant; }

  void set_search_box(SearchBox box) {
    if (box.size() != static_cast<std::size_t>(dim_p_)) {
      throw DomainError("search box dimension mismatch");
    }
    box_ = std::move(box);
  }

  /// g in theta = g(linear predictor), for the linear-predictor kinds and for
  /// natural piecewise models (identity).
  double link(double z) const {
    switch (kind_) {
      case ModelKind::loglog1pexp: return log_softplus(z);
      case ModelKind::log1pexp:
        return std::max(softplus(z), std::numeric_limits<double>::min());
      default: return z;
    }
  }
  double link_d1(double z) const {
    switch (kind_) {
      case ModelKind::loglog1pexp: return logistic(z) / softplus(z);
      case ModelKind::log1pexp: return logistic(z);
      default: return 1.0;
    }
  }
  double link_d2(double z) const {
    switch (kind_) {
      case ModelKind::loglog1pexp: {
        const double s = softplus(z);
        const double p = logistic(z);
        return (p * (1.0 - p) * s - p * p) / (s * s);
      }
      case ModelKind::log1pexp: {
        const double p = logistic(z);
        return p * (1.0 - p);
      }
      default: return 0.0;
    }
  }

  /// Cell index of w in [0,1] for piecewise models.
  int cell_of(double w) const {
    if (!(w >= 0.0 && w <= 1.0)) {
      std::ostringstream os;
      os << "piecewise_constant: covariate " << w << " outside [0,1]";
      throw DomainError(os.str());
    }
    const double d = static_cast<double>(dim_p_);
    int j = static_cast<int>(std::floor(w * d));
    // Snap to the exact boundary convention when w * D rounds across j.
    if (j + 1 <= dim_p_ && static_cast<double>(j + 1) / d <= w) ++j;
    if (j > 0 && static_cast<double>(j) / d > w) --j;
    return std::min(j, dim_p_ - 1);
  }

  /// Feature vector x(w) such that theta(w) = g(<eta, x(w)>): (1, w) for the
  /// linear-predictor kinds, the one-hot cell indicator for piecewise models.
  void features(std::span<const double> w, std::span<double> out) const {
    check_w(w);
    if (is_piecewise()) {
      std::fill(out.begin(), out.end(), 0.0);
      out[static_cast<std::size_t>(cell_of(w[0]))] = 1.0;
      return;
    }
    out[0] = 1.0;
    for (int j = 0; j < covariate_dim_; ++j) out[static_cast<std::size_t>(j) + 1] = w[static_cast<std::size_t>(j)];
  }

  double eval_theta(std::span<const double> eta, std::span<const double> w) const {
    check_eta(eta);
    check_w(w);
    if (is_piecewise()) {
      const double g = eta[static_cast<std::size_t>(cell_of(w[0]))];
      return par_ ? to_natural(*par_, g) : g;
    }
    double z = eta[0];
    for (int j = 0; j < covariate_dim_; ++j) {
      z += eta[static_cast<std::size_t>(j) + 1] * w[static_cast<std::size_t>(j)];
    }
    return link(z);
  }

  void check_eta(std::span<const double> eta) const {
    if (eta.size() != static_cast<std::size_t>(dim_p_)) {
      std::ostringstream os;
      os << to_string(kind_) << ": eta has " << eta.size() << " coordinates, expected "
         << dim_p_;
      throw DomainError(os.str());
    }
  }

  void check_w(std::span<const double> w) const {
    if (w.size() != static_cast<std::size_t>(covariate_dim_)) {
      std::ostringstream os;
      os << to_string(kind_) << ": covariate has dimension " << w.size() << ", expected "
         << covariate_dim_;
      throw DomainError(os.str());
    }
  }

 private:
  RegressionModel() = default;
  RegressionModel(ModelKind kind, int d, Interval codomain, double halfwidth)
      : kind_(kind),
        dim_p_(d + 1),
        covariate_dim_(d),
        vc_bound_(d + 2),
        codomain_(codomain),
        box_(SearchBox::uniform(static_cast<std::size_t>(d) + 1, -halfwidth, halfwidth)) {
    if (d < 1) throw DomainError("covariate dimension must be >= 1");
  }

  ModelKind kind_ = ModelKind::linear;
  int dim_p_ = 0;
  int covariate_dim_ = 0;
  int vc_bound_ = 1;
  Interval codomain_;
  SearchBox box_;
  std::optional<GeneralParametrization> par_;
};

inline double eval_theta(const RegressionModel& model, std::span<const double> eta,
                         std::span<const double> w) {
  return model.eval_theta(eta, w);
}

inline int vc_dim_bound(const RegressionModel& model) { return model.vc_bound(); }

enum class HolderRegime { stabilized, poisson_mean };

/// Number of equal cells for a piecewise-constant model over a Holder(alpha, M)
/// class: the least k >= 1 with rate^{exponent} <= k.
inline int holder_partition_dim(double alpha, double M, long long n, double kappa,
                                HolderRegime regime) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_partition_dim: alpha must lie in (0,1]");
  if (!(M > 0.0)) throw DomainError("holder_partition_dim: M must be > 0");
  if (n < 1) throw DomainError("holder_partition_dim: n must be >= 1");
  if (!(kappa > 0.0)) throw DomainError("holder_partition_dim: kappa must be > 0");
  const double nn = static_cast<double>(n);
  double x = 0.0;
  if (regime == HolderRegime::stabilized) {
    x = std::pow(kappa * kappa * M * M * nn / (1.0 + std::log(nn)), 1.0 / (1.0 + 2.0 * alpha));
  } else {
    x = std::pow(M * nn / (2.0 * (1.0 + std::log(nn))), 1.0 / (1.0 + alpha));
  }
  return std::max(1, static_cast<int>(std::ceil(x)));
}

/// theta_i = theta(w_i) for a whole dataset, with the design precomputed.
class BoundDesign {
 public:
  BoundDesign(const RegressionModel& model, const RowMatrix& w) : model_(&model) {
    if (w.cols() != model.covariate_dim()) {
      throw DomainError("design: covariate dimension does not match the model");
    }
    const auto n = w.rows();
    if (model.is_piecewise()) {
      cells_.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) cells_[static_cast<std::size_t>(i)] = model.cell_of(w(i, 0));
    } else {
      x_.resize(n, model.dim_p());
      x_.col(0).setOnes();
      x_.rightCols(model.covariate_dim()) = w;
    }
  }

  Eigen::Index rows() const {
    return model_->is_piecewise() ? static_cast<Eigen::Index>(cells_.size()) : x_.rows();
  }
  const RegressionModel& model() const { return *model_; }
  const RowMatrix& features() const { return x_; }
  const std::vector<int>& cells() const { return cells_; }

  /// Writes theta(w_i) into out; out must have rows() entries.
  void thetas(const Vector& eta, Vector& out) const {
    model_->check_eta(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())));
    if (model_->is_piecewise()) {
      const auto& par = model_->parametrization();
      std::vector<double> cell_theta(static_cast<std::size_t>(model_->dim_p()));
      for (int j = 0; j < model_->dim_p(); ++j) {
        cell_theta[static_cast<std::size_t>(j)] = par ? to_natural(*par, eta[j]) : eta[j];
      }
      out.resize(static_cast<Eigen::Index>(cells_.size()));
      for (std::size_t i = 0; i < cells_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = cell_theta[static_cast<std::size_t>(cells_[i])];
      }
      return;
    }
    out.noalias() = x_ * eta;
    if (model_->kind() != ModelKind::linear) {
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = model_->link(out[i]);
    }
  }

 private:
  const RegressionModel* model_;
  RowMatrix x_;
  std::vector<int> cells_;
};

}  // namespace rhoest
