#pragma once

// Statistical kernels shared by every assessment: correlation, cosine
// similarity, PCA, ridge least squares, L2-penalised logistic regression,
// rank AUC and seeded index splitting. Everything here is pure; the
// templates accept any Eigen dense expression and follow its scalar type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "embedprobe/common.hpp"

namespace embedprobe::numerics {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

inline constexpr double kVarianceFloor = 1e-15;
inline constexpr double kDefaultRidge = 1e-8;

// ---------------------------------------------------------------------------
// Correlation and similarity

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x,
                                  const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::TooShort, "pearson needs two sequences of equal length >= 2");
  const auto n = static_cast<Scalar>(x.size());
  const auto xa = x.derived().reshaped().array();
  const auto ya = y.derived().reshaped().array();
  const VectorX<Scalar> xc = (xa - xa.sum() / n).matrix();
  const VectorX<Scalar> yc = (ya - ya.sum() / n).matrix();
  const Scalar sxx = xc.squaredNorm();
  const Scalar syy = yc.squaredNorm();
  if (sxx / n <= kVarianceFloor || syy / n <= kVarianceFloor)
    throw Error(ErrorCode::ZeroVariance, "pearson input has zero variance");
  const Scalar r = xc.dot(yc) / std::sqrt(sxx * syy);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedU>& u,
                                            const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size())
    throw Error(ErrorCode::InvalidConfig, "cosine_similarity needs vectors of equal length");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu <= kVarianceFloor || nv <= kVarianceFloor)
    throw Error(ErrorCode::ZeroNorm, "cosine_similarity input has zero norm");
  const Scalar s = u.derived().reshaped().dot(v.derived().reshaped()) / (nu * nv);
  return std::clamp(s, Scalar(-1), Scalar(1));
}

// ---------------------------------------------------------------------------
// PCA

template <typename Scalar>
struct PcaResult {
  MatrixX<Scalar> components;             // one unit-norm component per row
  VectorX<Scalar> explained_variance_ratio;
  VectorX<Scalar> singular_values;
  RowVectorX<Scalar> means;

  template <typename Derived>
  MatrixX<Scalar> transform(const Eigen::MatrixBase<Derived>& x, Index k) const {
    return (x.rowwise() - means) * components.topRows(k).transpose();
  }

  template <typename Derived>
  MatrixX<Scalar> transform(const Eigen::MatrixBase<Derived>& x) const {
    return transform(x, components.rows());
  }

  template <typename Derived>
  MatrixX<Scalar> inverse_transform(const Eigen::MatrixBase<Derived>& scores) const {
    return (scores * components.topRows(scores.cols())).rowwise() + means;
  }
};

/// Centre columns, take the thin SVD, and report components with a fixed
/// sign (the largest-magnitude coordinate of each component is positive).
template <typename Derived>
PcaResult<typename Derived::Scalar> pca(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() < 2 || x.cols() < 1)
    throw Error(ErrorCode::DegenerateInput, "pca needs at least two rows");
  if (!x.allFinite()) throw Error(ErrorCode::DegenerateInput, "pca input is not finite");

  PcaResult<Scalar> result;
  result.means = x.colwise().mean();
  const MatrixX<Scalar> centered = x.rowwise() - result.means;
  const Scalar scale = std::max<Scalar>(Scalar(1), x.cwiseAbs().maxCoeff());
  if (centered.cwiseAbs().maxCoeff() <= Scalar(1e-12) * scale)
    throw Error(ErrorCode::DegenerateInput, "pca input rows are all identical");

  MatrixX<Scalar> v;
  if (std::min(x.rows(), x.cols()) <= 16) {
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(centered, Eigen::ComputeThinV);
    result.singular_values = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<MatrixX<Scalar>> svd(centered, Eigen::ComputeThinV);
    result.singular_values = svd.singularValues();
    v = svd.matrixV();
  }

  const VectorX<Scalar> power = result.singular_values.array().square().matrix();
  result.explained_variance_ratio = power / power.sum();

  result.components = v.transpose();
  for (Index i = 0; i < result.components.rows(); ++i) {
    Index pivot = 0;
    result.components.row(i).cwiseAbs().maxCoeff(&pivot);
    if (result.components(i, pivot) < Scalar(0)) result.components.row(i) *= Scalar(-1);
  }
  return result;
}

/// Smallest k whose leading ratios sum to at least `threshold`.
template <typename Derived>
Index components_for_variance(const Eigen::MatrixBase<Derived>& ratios, double threshold = 0.9) {
  using Scalar = typename Derived::Scalar;
  Scalar cumulative = 0;
  for (Index k = 0; k < ratios.size(); ++k) {
    cumulative += ratios(k);
    if (cumulative >= Scalar(threshold) - Scalar(1e-12)) return k + 1;
  }
  return ratios.size();
}

// ---------------------------------------------------------------------------
// Ridge regression

template <typename Scalar>
struct RidgeModel {
  MatrixX<Scalar> weights;        // P x K
  RowVectorX<Scalar> intercepts;  // 1 x K

  template <typename Derived>
  MatrixX<Scalar> predict(const Eigen::MatrixBase<Derived>& x) const {
    return (x * weights).rowwise() + intercepts;
  }
};

template <typename Scalar>
struct LinearModel {
  VectorX<Scalar> weights;
  Scalar intercept = 0;

  template <typename Derived>
  VectorX<Scalar> predict(const Eigen::MatrixBase<Derived>& x) const {
    return (x * weights).array() + intercept;
  }
};

/// Minimises ||Y - X W - 1 b||^2 + lambda ||W||^2 column by column. The
/// intercept is unpenalised, so both sides are centred before solving.
template <typename DerivedX, typename DerivedY>
RidgeModel<typename DerivedX::Scalar> ridge_fit_multi(const Eigen::MatrixBase<DerivedX>& x,
                                                      const Eigen::MatrixBase<DerivedY>& y,
                                                      double lambda = kDefaultRidge) {
  using Scalar = typename DerivedX::Scalar;
  if (x.rows() != y.rows()) throw Error(ErrorCode::InvalidConfig, "ridge_fit row mismatch");
  if (x.rows() < 2) throw Error(ErrorCode::TooFewSamples, "ridge_fit needs at least two rows");
  if (lambda < 0) throw Error(ErrorCode::InvalidConfig, "ridge penalty must be >= 0");

  const RowVectorX<Scalar> x_mean = x.colwise().mean();
  const RowVectorX<Scalar> y_mean = y.colwise().mean();
  const MatrixX<Scalar> xc = x.rowwise() - x_mean;
  const MatrixX<Scalar> yc = y.rowwise() - y_mean;

  RidgeModel<Scalar> model;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(xc);
    if (qr.rank() < xc.cols())
      throw Error(ErrorCode::SingularSystem, "design matrix is rank deficient at lambda = 0");
    model.weights = qr.solve(yc);
  } else {
    MatrixX<Scalar> gram = xc.transpose() * xc;
    gram.diagonal().array() += Scalar(lambda);
    Eigen::LDLT<MatrixX<Scalar>> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "ridge normal equations are not solvable");
    model.weights = ldlt.solve(xc.transpose() * yc);
  }
  model.intercepts = y_mean - x_mean * model.weights;
  return model;
}

template <typename DerivedX, typename DerivedY>
LinearModel<typename DerivedX::Scalar> ridge_fit(const Eigen::MatrixBase<DerivedX>& x,
                                                 const Eigen::MatrixBase<DerivedY>& y,
                                                 double lambda = kDefaultRidge) {
  const auto multi = ridge_fit_multi(x, y.derived().reshaped(), lambda);
  return {multi.weights.col(0), multi.intercepts(0)};
}

/// Coefficient of determination, 1 - SS_res / SS_tot.
template <typename DerivedY, typename DerivedP>
typename DerivedY::Scalar r2(const Eigen::MatrixBase<DerivedY>& y,
                             const Eigen::MatrixBase<DerivedP>& yhat) {
  using Scalar = typename DerivedY::Scalar;
  if (y.size() != yhat.size() || y.size() < 2)
    throw Error(ErrorCode::TooFewSamples, "r2 needs two equal-length sequences of length >= 2");
  const auto ya = y.derived().reshaped().array();
  const auto pa = yhat.derived().reshaped().array();
  const Scalar mean = ya.mean();
  const Scalar ss_tot = (ya - mean).square().sum();
  if (ss_tot <= Scalar(kVarianceFloor) * Scalar(y.size()))
    throw Error(ErrorCode::ZeroVariance, "r2 target has zero variance");
  const Scalar ss_res = (ya - pa).square().sum();
  return Scalar(1) - ss_res / ss_tot;
}

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticOptions {
  double l2 = 1e-4;
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

template <typename Scalar>
struct LogisticModel {
  VectorX<Scalar> weights;
  Scalar intercept = 0;
  int iterations = 0;
  bool converged = false;
  Scalar gradient_norm = 0;

  template <typename Derived>
  VectorX<Scalar> decision(const Eigen::MatrixBase<Derived>& x) const {
    return (x * weights).array() + intercept;
  }

  /// Class-1 probabilities.
  template <typename Derived>
  VectorX<Scalar> predict_score(const Eigen::MatrixBase<Derived>& x) const {
    return decision(x).unaryExpr([](Scalar z) {
      return z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z))
                    : std::exp(z) / (Scalar(1) + std::exp(z));
    });
  }
};

namespace detail {

template <typename Scalar>
Scalar log1p_exp(Scalar z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
}

inline void check_binary(std::span<const int> labels, Index rows) {
  if (static_cast<Index>(labels.size()) != rows)
    throw Error(ErrorCode::InvalidConfig, "label count does not match rows");
  bool has0 = false;
  bool has1 = false;
  for (int label : labels) {
    if (label == 0) has0 = true;
    else if (label == 1) has1 = true;
    else throw Error(ErrorCode::InvalidConfig, "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "both classes must be present");
}

}  // namespace detail

/// Penalised mean log-likelihood
///   (1/N) sum_i [y_i z_i - log(1 + exp z_i)] - (l2 / 2) ||w||^2,  z = X w + b.
template <typename Derived>
typename Derived::Scalar logistic_objective(const Eigen::MatrixBase<Derived>& x,
                                            std::span<const int> labels,
                                            const VectorX<typename Derived::Scalar>& weights,
                                            typename Derived::Scalar intercept, double l2) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> z = (x * weights).array() + intercept;
  Scalar total = 0;
  for (Index i = 0; i < z.size(); ++i)
    total += Scalar(labels[static_cast<std::size_t>(i)]) * z(i) - detail::log1p_exp(z(i));
  return total / Scalar(x.rows()) - Scalar(0.5 * l2) * weights.squaredNorm();
}

/// Gradient of logistic_objective; the last entry is d/d(intercept).
template <typename Derived>
VectorX<typename Derived::Scalar> logistic_gradient(
    const Eigen::MatrixBase<Derived>& x, std::span<const int> labels,
    const VectorX<typename Derived::Scalar>& weights, typename Derived::Scalar intercept,
    double l2) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows();
  const Index p = x.cols();
  const VectorX<Scalar> z = (x * weights).array() + intercept;
  VectorX<Scalar> residual(n);
  for (Index i = 0; i < n; ++i)
    residual(i) = Scalar(labels[static_cast<std::size_t>(i)]) - detail::sigmoid(z(i));
  VectorX<Scalar> gradient(p + 1);
  gradient.head(p) = x.transpose() * residual / Scalar(n) - Scalar(l2) * weights;
  gradient(p) = residual.sum() / Scalar(n);
  return gradient;
}

namespace detail {

// Damped Newton ascent from zero.
template <typename Scalar>
LogisticModel<Scalar> newton_logistic(const MatrixX<Scalar>& x, std::span<const int> labels,
                                      const LogisticOptions& options) {
  const Index n = x.rows();
  const Index p = x.cols();
  LogisticModel<Scalar> model;
  model.weights = VectorX<Scalar>::Zero(p);
  model.intercept = 0;

  Scalar objective = logistic_objective(x, labels, model.weights, model.intercept, options.l2);
  for (int iteration = 0;; ++iteration) {
    const VectorX<Scalar> gradient =
        logistic_gradient(x, labels, model.weights, model.intercept, options.l2);
    model.gradient_norm = gradient.norm();
    model.iterations = iteration;
    if (model.gradient_norm < Scalar(options.gradient_tolerance)) {
      model.converged = true;
      return model;
    }
    if (iteration >= options.max_iterations) return model;

    const VectorX<Scalar> z = (x * model.weights).array() + model.intercept;
    VectorX<Scalar> w(n);
    for (Index i = 0; i < n; ++i) {
      const Scalar s = sigmoid(z(i));
      w(i) = s * (Scalar(1) - s) / Scalar(n);
    }
    MatrixX<Scalar> hessian(p + 1, p + 1);
    const MatrixX<Scalar> weighted = x.transpose() * w.asDiagonal();
    hessian.topLeftCorner(p, p) = weighted * x;
    hessian.topLeftCorner(p, p).diagonal().array() += Scalar(options.l2);
    hessian.topRightCorner(p, 1) = weighted.rowwise().sum();
    hessian.bottomLeftCorner(1, p) = hessian.topRightCorner(p, 1).transpose();
    hessian(p, p) = w.sum();
    hessian.diagonal().array() += std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + hessian.diagonal().maxCoeff());

    Eigen::LDLT<MatrixX<Scalar>> ldlt(hessian);
    VectorX<Scalar> step = ldlt.solve(gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(gradient) <= 0)
      step = gradient;

    // Backtracking keeps every accepted step an ascent step.
    Scalar t = 1;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, t *= Scalar(0.5)) {
      const VectorX<Scalar> trial_w = model.weights + t * step.head(p);
      const Scalar trial_b = model.intercept + t * step(p);
      const Scalar trial = logistic_objective(x, labels, trial_w, trial_b, options.l2);
      if (trial >= objective + Scalar(1e-4) * t * step.dot(gradient)) {
        model.weights = trial_w;
        model.intercept = trial_b;
        objective = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return model;
  }
}

}  // namespace detail

/// Fits P(y = 1 | x) = sigmoid(x w + b). When there are more columns than
/// rows the fit runs in the row space of X, which is exact for an L2
/// penalty: the weight component orthogonal to every row never changes
/// the likelihood and is driven to zero by the penalty.
template <typename Derived>
LogisticModel<typename Derived::Scalar> logistic_fit(const Eigen::MatrixBase<Derived>& x,
                                                     std::span<const int> labels,
                                                     const LogisticOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  detail::check_binary(labels, x.rows());
  if (options.l2 < 0) throw Error(ErrorCode::InvalidConfig, "l2 penalty must be >= 0");

  if (x.cols() <= x.rows()) return detail::newton_logistic<Scalar>(x, labels, options);

  Eigen::BDCSVD<MatrixX<Scalar>> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Index rank = 0;
  while (rank < s.size() && s(rank) > Scalar(1e-12) * s(0)) ++rank;
  const MatrixX<Scalar> reduced = svd.matrixU().leftCols(rank) * s.head(rank).asDiagonal();
  LogisticModel<Scalar> inner = detail::newton_logistic<Scalar>(reduced, labels, options);
  LogisticModel<Scalar> model = inner;
  model.weights = svd.matrixV().leftCols(rank) * inner.weights;
  return model;
}

// ---------------------------------------------------------------------------
// AUC

/// Normalised Mann-Whitney U with average ranks for ties.
template <typename Derived>
double auc_roc(const Eigen::MatrixBase<Derived>& scores, std::span<const int> labels) {
  detail::check_binary(labels, scores.size());
  const auto n = static_cast<std::size_t>(scores.size());
  const auto flat = scores.derived().reshaped();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return flat(Index(a)) < flat(Index(b)); });

  // Ranks doubled so tied averages stay integral.
  double positive_rank_sum2 = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && flat(Index(order[j])) == flat(Index(order[i]))) ++j;
    const double rank2 = double(i + 1 + j);  // 2 * average of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum2 += rank2;
        ++positives;
      }
    }
    i = j;
  }
  const double n1 = double(positives);
  const double n0 = double(n - positives);
  const double u = (positive_rank_sum2 - n1 * (n1 + 1)) / 2.0;
  return u / (n1 * n0);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitPlan {
  std::vector<Index> train;
  std::vector<Index> test;
  std::vector<int> classes;                  // distinct class ids, ascending
  std::vector<double> train_fraction;        // per entry of `classes`
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Per-class seeded shuffle; floor(ratio * n_c) of each class goes to train,
/// then single extra items are handed to the classes with the largest
/// fractional remainders until the global train count is round(ratio * N).
/// A class with fewer than two members goes wholly to train.
SplitPlan stratified_split(std::span<const int> class_of, double ratio, std::uint64_t seed);

/// k disjoint folds covering [0, n), sizes differing by at most one.
std::vector<std::vector<Index>> kfold_indices(Index n, Index k, std::uint64_t seed);

}  // namespace embedprobe::numerics
