#pragma once

// Dense least-squares kernels shared by every solver: the regression problem container,
// OLS on a support, the rank-one add/drop updates of the inverse Gram matrix, a cached
// subset-SSE evaluator and principal components.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bss/error.hpp"

namespace bss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Support = std::vector<int>;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Columns whose residual norm after projection falls below this (times T) are skipped.
inline constexpr double kCollinearityTolerance = 1e-8;
/// Smallest admissible Gram eigenvalue, relative to max(1, largest diagonal entry).
inline constexpr double kRankTolerance = 1e-10;
/// The inverse Gram matrix is re-solved from scratch after this many rank-one updates.
inline constexpr int kResolveEvery = 50;

struct ColumnMeta {
  std::string variable_id;
  int lag = 0;

  friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

/// Column-wise affine map fitted on one block of rows and applied to others.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x) {
    const auto t = x.rows();
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double ss = (x.col(j).array() - s.mean(j)).square().sum();
      const double sd = t > 1 ? std::sqrt(ss / static_cast<double>(t - 1)) : 0.0;
      s.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }
};

/// Design matrix and response of the best-subset regression. The intercept is never a
/// column: every fit works on the centered copies, and the intercept is recovered from
/// the column means.
class RegressionProblem {
 public:
  RegressionProblem(Matrix x, Vector y, std::vector<ColumnMeta> meta = {}, bool standardized = false)
      : x_(std::move(x)), y_(std::move(y)), meta_(std::move(meta)), standardized_(standardized) {
    if (x_.rows() != y_.size()) {
      throw Error(ErrorKind::InvalidArgument, "design rows and response length differ");
    }
    if (x_.rows() < 2 || x_.cols() < 1) {
      throw Error(ErrorKind::InvalidArgument, "need T >= 2 and p >= 1");
    }
    if (!x_.allFinite() || !y_.allFinite()) {
      throw Error(ErrorKind::InvalidArgument, "non-finite entry in design or response");
    }
    if (meta_.empty()) {
      meta_.reserve(static_cast<std::size_t>(x_.cols()));
      for (Eigen::Index j = 0; j < x_.cols(); ++j) meta_.push_back({"x" + std::to_string(j), 0});
    } else if (static_cast<Eigen::Index>(meta_.size()) != x_.cols()) {
      throw Error(ErrorKind::InvalidArgument, "column metadata size differs from p");
    }
    x_mean_ = x_.colwise().mean().transpose();
    y_mean_ = y_.mean();
    xc_ = x_.rowwise() - x_mean_.transpose();
    yc_ = y_.array() - y_mean_;
    col_sq_norm_ = xc_.colwise().squaredNorm().transpose();
    xty_ = xc_.transpose() * yc_;
    sst_ = yc_.squaredNorm();
  }

  /// Scales every column to mean zero and unit sample variance. Constant columns stay zero.
  static RegressionProblem standardized(const Matrix& x, Vector y, std::vector<ColumnMeta> meta = {}) {
    return RegressionProblem(Standardizer::fit(x).apply(x), std::move(y), std::move(meta), true);
  }

  int rows() const { return static_cast<int>(x_.rows()); }
  int cols() const { return static_cast<int>(x_.cols()); }
  const Matrix& x() const { return x_; }
  const Vector& y() const { return y_; }
  const Matrix& xc() const { return xc_; }
  const Vector& yc() const { return yc_; }
  const Vector& x_mean() const { return x_mean_; }
  double y_mean() const { return y_mean_; }
  const Vector& col_sq_norm() const { return col_sq_norm_; }
  const Vector& xty() const { return xty_; }
  double sst() const { return sst_; }
  bool is_standardized() const { return standardized_; }
  const std::vector<ColumnMeta>& meta() const { return meta_; }

  /// Row subset, re-centered on its own means.
  RegressionProblem subset_rows(std::span<const int> rows) const {
    Matrix xs(static_cast<Eigen::Index>(rows.size()), x_.cols());
    Vector ys(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      xs.row(static_cast<Eigen::Index>(i)) = x_.row(rows[i]);
      ys(static_cast<Eigen::Index>(i)) = y_(rows[i]);
    }
    return RegressionProblem(std::move(xs), std::move(ys), meta_, false);
  }

  Matrix columns(std::span<const int> support) const {
    Matrix out(xc_.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = xc_.col(support[i]);
    return out;
  }

 private:
  Matrix x_;
  Vector y_;
  std::vector<ColumnMeta> meta_;
  bool standardized_ = false;
  Vector x_mean_;
  double y_mean_ = 0.0;
  Matrix xc_;
  Vector yc_;
  Vector col_sq_norm_;
  Vector xty_;
  double sst_ = 0.0;
};

/// OLS fit restricted to an ordered support, carrying (X_U'X_U)^{-1} for rank-one updates.
struct OlsState {
  Support support;
  Matrix gram_inv;
  Vector coef;  // aligned with `support`, on the centered design
  double intercept = 0.0;
  double sse = 0.0;
  Vector residuals;
  int updates_since_solve = 0;
};

namespace detail {

inline void check_support(const RegressionProblem& problem, std::span<const int> support) {
  std::vector<int> sorted(support.begin(), support.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::InvalidArgument, "support has repeated indices");
  }
  if (!sorted.empty() && (sorted.front() < 0 || sorted.back() >= problem.cols())) {
    throw Error(ErrorKind::InvalidArgument, "support index out of range");
  }
}

inline std::string support_string(std::span<const int> support) {
  std::string s = "{";
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(support[i]);
  }
  return s + "}";
}

inline double intercept_for(const RegressionProblem& problem, std::span<const int> support, const Vector& coef) {
  double b0 = problem.y_mean();
  for (std::size_t i = 0; i < support.size(); ++i) b0 -= problem.x_mean()(support[i]) * coef(static_cast<Eigen::Index>(i));
  return b0;
}

}  // namespace detail

inline OlsState solve_ols(const RegressionProblem& problem, std::span<const int> support) {
  detail::check_support(problem, support);
  OlsState state;
  state.support.assign(support.begin(), support.end());
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0) {
    state.gram_inv.resize(0, 0);
    state.coef.resize(0);
    state.intercept = problem.y_mean();
    state.residuals = problem.yc();
    state.sse = problem.sst();
    return state;
  }
  if (k >= problem.rows()) {
    throw Error(ErrorKind::RankDeficient, "support " + detail::support_string(support) + " not smaller than T");
  }
  const Matrix xu = problem.columns(support);
  const Matrix gram = xu.transpose() * xu;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const double scale = std::max(1.0, gram.diagonal().maxCoeff());
  if (eig.eigenvalues().minCoeff() <= kRankTolerance * scale) {
    throw Error(ErrorKind::RankDeficient, "singular Gram matrix on support " + detail::support_string(support));
  }
  const Vector inv_eval = eig.eigenvalues().cwiseInverse();
  state.gram_inv = eig.eigenvectors() * inv_eval.asDiagonal() * eig.eigenvectors().transpose();
  Vector xty(k);
  for (Eigen::Index i = 0; i < k; ++i) xty(i) = problem.xty()(support[static_cast<std::size_t>(i)]);
  state.coef = state.gram_inv * xty;
  state.residuals = problem.yc() - xu * state.coef;
  state.sse = state.residuals.squaredNorm();
  state.intercept = detail::intercept_for(problem, support, state.coef);
  return state;
}

struct OlsUpdate {
  double delta_sse = 0.0;
  OlsState state;
};

/// Residual sum of squares of column z regressed on the current support, with the
/// cross-products c = X_U'z and G^{-1}c it was computed from.
struct ColumnProjection {
  Vector cross;
  Vector gram_inv_cross;
  double residual_ss = 0.0;
};

inline ColumnProjection project_column(const RegressionProblem& problem, const OlsState& state, int z) {
  ColumnProjection p;
  const auto k = static_cast<Eigen::Index>(state.support.size());
  p.cross.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    p.cross(i) = problem.xc().col(state.support[static_cast<std::size_t>(i)]).dot(problem.xc().col(z));
  }
  p.gram_inv_cross = state.gram_inv * p.cross;
  p.residual_ss = problem.col_sq_norm()(z) - p.cross.dot(p.gram_inv_cross);
  return p;
}

/// Adds column z to the support. The SSE decrement is (y'e_z)^2 / e_{z|X_U} and the
/// inverse Gram matrix grows by the partitioned-inverse formula.
inline OlsUpdate add_column_delta(const RegressionProblem& problem, const OlsState& state, int z) {
  if (z < 0 || z >= problem.cols()) throw Error(ErrorKind::InvalidArgument, "column index out of range");
  if (std::find(state.support.begin(), state.support.end(), z) != state.support.end()) {
    throw Error(ErrorKind::InvalidArgument, "column " + std::to_string(z) + " already in support");
  }
  const ColumnProjection proj = project_column(problem, state, z);
  const double e = proj.residual_ss;
  if (e <= kCollinearityTolerance * problem.rows()) {
    throw Error(ErrorKind::Collinear, "column " + std::to_string(z) + " is (nearly) spanned by the support");
  }
  const double ye = problem.xty()(z) - state.coef.dot(proj.cross);
  const auto k = static_cast<Eigen::Index>(state.support.size());

  OlsUpdate out;
  out.delta_sse = ye * ye / e;
  OlsState& next = out.state;
  next.support = state.support;
  next.support.push_back(z);
  next.updates_since_solve = state.updates_since_solve + 1;
  if (next.updates_since_solve >= kResolveEvery) {
    next = solve_ols(problem, next.support);
    return out;
  }
  const Vector& g = proj.gram_inv_cross;
  next.gram_inv.resize(k + 1, k + 1);
  next.gram_inv.topLeftCorner(k, k) = state.gram_inv + g * g.transpose() / e;
  next.gram_inv.topRightCorner(k, 1) = -g / e;
  next.gram_inv.bottomLeftCorner(1, k) = -g.transpose() / e;
  next.gram_inv(k, k) = 1.0 / e;

  const double bz = ye / e;
  next.coef.resize(k + 1);
  next.coef.head(k) = state.coef - g * bz;
  next.coef(k) = bz;

  Vector ez = problem.xc().col(z);
  for (Eigen::Index i = 0; i < k; ++i) ez -= g(i) * problem.xc().col(state.support[static_cast<std::size_t>(i)]);
  next.residuals = state.residuals - bz * ez;
  next.sse = state.sse - out.delta_sse;
  next.intercept = detail::intercept_for(problem, next.support, next.coef);
  return out;
}

/// Removes the support member at `position`. With M = G^{-1} partitioned around that
/// column as [[M11, u], [u', m]], the reduced inverse is M11 - uu'/m and the SSE grows by
/// (y'Z~u + m y'x_j)^2 / m.
inline OlsUpdate drop_column_delta(const RegressionProblem& problem, const OlsState& state, int position) {
  const auto k = static_cast<Eigen::Index>(state.support.size());
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "cannot drop from an empty support");
  if (position < 0 || position >= k) throw Error(ErrorKind::InvalidArgument, "support position out of range");

  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(k - 1));
  for (Eigen::Index i = 0; i < k; ++i) {
    if (i != position) keep.push_back(i);
  }
  const double m = state.gram_inv(position, position);
  Vector u(k - 1);
  Matrix m11(k - 1, k - 1);
  for (Eigen::Index a = 0; a < k - 1; ++a) {
    u(a) = state.gram_inv(keep[static_cast<std::size_t>(a)], position);
    for (Eigen::Index b = 0; b < k - 1; ++b) {
      m11(a, b) = state.gram_inv(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
    }
  }
  const int xj = state.support[static_cast<std::size_t>(position)];
  double ytz_u = 0.0;
  for (Eigen::Index a = 0; a < k - 1; ++a) {
    ytz_u += problem.xty()(state.support[static_cast<std::size_t>(keep[static_cast<std::size_t>(a)])]) * u(a);
  }
  const double num = ytz_u + m * problem.xty()(xj);

  OlsUpdate out;
  out.delta_sse = num * num / m;
  OlsState& next = out.state;
  next.support.reserve(static_cast<std::size_t>(k - 1));
  for (auto i : keep) next.support.push_back(state.support[static_cast<std::size_t>(i)]);
  next.updates_since_solve = state.updates_since_solve + 1;
  if (next.updates_since_solve >= kResolveEvery) {
    next = solve_ols(problem, next.support);
    return out;
  }
  next.gram_inv = m11 - u * u.transpose() / m;
  const double bj = state.coef(position);
  next.coef.resize(k - 1);
  for (Eigen::Index a = 0; a < k - 1; ++a) next.coef(a) = state.coef(keep[static_cast<std::size_t>(a)]) - u(a) * bj / m;

  next.residuals = state.residuals + bj * problem.xc().col(xj);
  for (Eigen::Index a = 0; a < k - 1; ++a) {
    next.residuals += (u(a) * bj / m) * problem.xc().col(next.support[static_cast<std::size_t>(a)]);
  }
  next.sse = state.sse + out.delta_sse;
  next.intercept = detail::intercept_for(problem, next.support, next.coef);
  return out;
}

/// SSE of arbitrary supports from a precomputed Gram matrix: y'y - b_U' G_UU^{-1} b_U.
/// Rank-deficient supports evaluate to +inf.
class SubsetSseEvaluator {
 public:
  explicit SubsetSseEvaluator(const RegressionProblem& problem)
      : gram_(problem.xc().transpose() * problem.xc()),
        xty_(problem.xty()),
        yty_(problem.sst()),
        rows_(problem.rows()) {}

  double operator()(std::span<const int> support) const {
    const auto k = static_cast<Eigen::Index>(support.size());
    if (k == 0) return yty_;
    if (k >= rows_) return kInf;
    Matrix g(k, k);
    Vector b(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const int ia = support[static_cast<std::size_t>(a)];
      b(a) = xty_(ia);
      for (Eigen::Index c = 0; c <= a; ++c) {
        g(a, c) = gram_(ia, support[static_cast<std::size_t>(c)]);
        g(c, a) = g(a, c);
      }
    }
    Eigen::LDLT<Matrix> ldlt(g);
    const double scale = std::max(1.0, g.diagonal().maxCoeff());
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= kRankTolerance * scale) return kInf;
    const double sse = yty_ - b.dot(ldlt.solve(b));
    return std::max(sse, 0.0);
  }

  const Matrix& gram() const { return gram_; }

 private:
  Matrix gram_;
  Vector xty_;
  double yty_;
  Eigen::Index rows_;
};

struct PcaResult {
  Matrix loadings;    // n x s, orthonormal columns
  Matrix scores;      // T x s, Z * loadings
  Vector eigenvalues;  // of Z'Z/(T-1), descending
};

/// Principal components of a complete, column-centered panel. Decomposes whichever of
/// ZZ' and Z'Z is smaller. Each loading column is signed so its largest-magnitude entry
/// is positive.
inline PcaResult principal_components(const Matrix& z, int s) {
  const auto t = z.rows();
  const auto n = z.cols();
  if (s < 1 || s > std::min(t, n)) throw Error(ErrorKind::InvalidArgument, "component count out of range");
  if (!z.allFinite()) throw Error(ErrorKind::InvalidArgument, "principal_components needs a complete panel");
  const double denom = static_cast<double>(std::max<Eigen::Index>(t - 1, 1));

  PcaResult out;
  out.loadings.resize(n, s);
  out.eigenvalues.resize(s);
  if (t < n) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(z * z.transpose());
    for (int c = 0; c < s; ++c) {
      const Eigen::Index src = t - 1 - c;
      const double lambda = std::max(eig.eigenvalues()(src), 0.0);
      out.eigenvalues(c) = lambda / denom;
      Vector v = z.transpose() * eig.eigenvectors().col(src);
      const double norm = v.norm();
      out.loadings.col(c) = norm > 0.0 ? Vector(v / norm) : Vector::Zero(n);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(z.transpose() * z);
    for (int c = 0; c < s; ++c) {
      const Eigen::Index src = n - 1 - c;
      out.eigenvalues(c) = std::max(eig.eigenvalues()(src), 0.0) / denom;
      out.loadings.col(c) = eig.eigenvectors().col(src);
    }
  }
  for (int c = 0; c < s; ++c) {
    Eigen::Index arg = 0;
    out.loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.loadings(arg, c) < 0.0) out.loadings.col(c) *= -1.0;
  }
  out.scores = z * out.loadings;
  return out;
}

}  // namespace bss
