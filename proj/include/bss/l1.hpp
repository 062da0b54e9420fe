#pragma once

// Ridge regression and (adaptive) LASSO by pathwise coordinate descent. The LASSO
// objective is ||y - Xb||^2 + lambda * sum_j w_j |b_j| on the centered design.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/rng.hpp"
#include "bss/subset_model.hpp"

namespace bss {

inline constexpr double kWeightCap = 1e6;

struct LassoConfig {
  int max_sweeps = 10000;
  double kkt_tolerance = 1e-4;
};

struct L1Solution {
  double lambda = 0.0;
  Vector coef;  // length p
  double intercept = 0.0;
  int sweeps = 0;
  bool converged = false;
};

struct L1Path {
  std::vector<double> lambdas;
  std::vector<L1Solution> solutions;
  Vector weights;
  int non_converged = 0;
};

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Smallest lambda with an all-zero solution: max_j |2 x_j'y| / w_j.
inline double lambda_max(const RegressionProblem& problem, const Vector& weights) {
  double out = 0.0;
  for (int j = 0; j < problem.cols(); ++j) out = std::max(out, std::abs(2.0 * problem.xty()(j)) / weights(j));
  return out;
}

/// Log-spaced descending grid from `top` to `ratio * top`.
inline std::vector<double> lambda_grid(double top, int points = 100, double ratio = 1e-3) {
  if (points < 1 || !(top > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda grid needs points >= 1 and top > 0");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = points > 1 ? std::log(ratio) / (points - 1) : 0.0;
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = top * std::exp(step * i);
  return grid;
}

/// Largest violation of the stationarity conditions at `beta`:
/// |2x_j'r| <= lambda w_j when b_j = 0, and 2x_j'r = lambda w_j sign(b_j) otherwise.
inline double kkt_violation(const RegressionProblem& problem, const Vector& beta, double lambda, const Vector& weights) {
  const Vector r = problem.yc() - problem.xc() * beta;
  const Vector g = 2.0 * (problem.xc().transpose() * r);
  double worst = 0.0;
  for (int j = 0; j < problem.cols(); ++j) {
    const double bound = lambda * weights(j);
    const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(g(j)) - bound)
                                    : std::abs(g(j) - bound * (beta(j) > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

namespace detail {

class CoordinateDescent {
 public:
  CoordinateDescent(const RegressionProblem& problem, const Vector& weights)
      : problem_(problem), weights_(weights), beta_(Vector::Zero(problem.cols())), resid_(problem.yc()) {}

  /// Solves at `lambda`, warm-started from the current coefficients.
  L1Solution solve(double lambda, const LassoConfig& cfg) {
    L1Solution sol;
    sol.lambda = lambda;
    const double inner_tol = 0.05 * cfg.kkt_tolerance;
    while (sol.sweeps < cfg.max_sweeps) {
      double change = sweep_all(lambda);
      ++sol.sweeps;
      std::vector<int> active;
      for (int j = 0; j < problem_.cols(); ++j) {
        if (beta_(j) != 0.0) active.push_back(j);
      }
      while (change > inner_tol && sol.sweeps < cfg.max_sweeps) {
        change = sweep(lambda, active);
        ++sol.sweeps;
      }
      if (kkt_violation(problem_, beta_, lambda, weights_) <= cfg.kkt_tolerance) {
        sol.converged = true;
        break;
      }
    }
    sol.coef = beta_;
    sol.intercept = problem_.y_mean() - problem_.x_mean().dot(beta_);
    return sol;
  }

 private:
  // Returns the largest gradient-scale change 2 n_j |db_j|.
  double update(int j, double lambda) {
    const double nj = problem_.col_sq_norm()(j);
    if (nj <= 0.0) return 0.0;
    const double old = beta_(j);
    const double z = problem_.xc().col(j).dot(resid_) + nj * old;
    const double t = 0.5 * lambda * weights_(j);
    // Relative slack absorbs rounding when lambda sits exactly at lambda_max.
    const double next = std::abs(z) <= t * (1.0 + 1e-12) ? 0.0 : soft_threshold(z, t) / nj;
    if (next == old) return 0.0;
    resid_ -= (next - old) * problem_.xc().col(j);
    beta_(j) = next;
    return 2.0 * nj * std::abs(next - old);
  }

  double sweep_all(double lambda) {
    double change = 0.0;
    for (int j = 0; j < problem_.cols(); ++j) change = std::max(change, update(j, lambda));
    return change;
  }

  double sweep(double lambda, const std::vector<int>& active) {
    double change = 0.0;
    for (int j : active) change = std::max(change, update(j, lambda));
    return change;
  }

  const RegressionProblem& problem_;
  const Vector& weights_;
  Vector beta_;
  Vector resid_;
};

}  // namespace detail

inline L1Path lasso_path(const RegressionProblem& problem, const std::vector<double>& grid, const Vector& weights,
                         const LassoConfig& cfg = {}) {
  if (weights.size() != problem.cols() || (weights.array() <= 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument, "LASSO weights must be positive, one per column");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && grid[i] >= grid[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "lambda grid must be positive and strictly descending");
    }
  }
  L1Path path;
  path.lambdas = grid;
  path.weights = weights;
  detail::CoordinateDescent cd(problem, path.weights);
  for (double lambda : grid) {
    path.solutions.push_back(cd.solve(lambda, cfg));
    if (!path.solutions.back().converged) ++path.non_converged;
  }
  return path;
}

inline L1Path lasso_path(const RegressionProblem& problem, const std::vector<double>& grid) {
  return lasso_path(problem, grid, Vector::Ones(problem.cols()));
}

/// Eigendecomposition of the smaller Gram matrix, reused across ridge penalties.
class RidgeSolver {
 public:
  explicit RidgeSolver(const RegressionProblem& problem) : problem_(problem), dual_(problem.cols() > problem.rows()) {
    const Matrix& x = problem.xc();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(dual_ ? Matrix(x * x.transpose()) : Matrix(x.transpose() * x));
    evals_ = eig.eigenvalues().cwiseMax(0.0);
    evecs_ = eig.eigenvectors();
    proj_ = evecs_.transpose() * (dual_ ? problem.yc() : problem.xty());
  }

  /// (X'X + alpha I)^{-1} X'y, via X'(XX' + alpha I)^{-1} y when p > T.
  Vector coef(double alpha) const {
    const Vector scaled = proj_.cwiseQuotient((evals_.array() + alpha).matrix());
    const Vector v = evecs_ * scaled;
    return dual_ ? Vector(problem_.xc().transpose() * v) : v;
  }

  /// Mean eigenvalue of X'X, the natural penalty scale.
  double scale() const { return evals_.sum() / problem_.cols(); }

 private:
  const RegressionProblem& problem_;
  bool dual_;
  Vector evals_;
  Matrix evecs_;
  Vector proj_;
};

/// Random partition of 0..n-1 into `folds` groups of near-equal size.
inline std::vector<std::vector<int>> make_folds(int n, int folds, Rng& rng) {
  if (folds < 2 || folds > n) throw Error(ErrorKind::InvalidArgument, "fold count out of range");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i % folds)].push_back(idx[static_cast<std::size_t>(i)]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

/// Row indices outside `fold`.
inline std::vector<int> complement_rows(int n, const std::vector<int>& fold) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - fold.size());
  std::size_t f = 0;
  for (int i = 0; i < n; ++i) {
    if (f < fold.size() && fold[f] == i) {
      ++f;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

struct RidgeCvResult {
  double alpha = 0.0;
  std::vector<double> alphas;
  std::vector<double> cv_error;
  Vector coef;
};

/// Ridge penalty chosen by k-fold CV over a 20-point log grid spanning 1e-3..1e3 times
/// the mean eigenvalue of X'X.
inline RidgeCvResult ridge_cv(const RegressionProblem& problem, Rng& rng, int folds = 5, int points = 20) {
  RidgeSolver full(problem);
  RidgeCvResult out;
  const double base = std::max(full.scale(), 1e-12);
  for (int i = 0; i < points; ++i) {
    const double e = -3.0 + 6.0 * i / std::max(points - 1, 1);
    out.alphas.push_back(base * std::pow(10.0, e));
  }
  out.cv_error.assign(out.alphas.size(), 0.0);
  const auto parts = make_folds(problem.rows(), folds, rng);
  for (const auto& fold : parts) {
    const RegressionProblem train = problem.subset_rows(complement_rows(problem.rows(), fold));
    RidgeSolver solver(train);
    for (std::size_t a = 0; a < out.alphas.size(); ++a) {
      const Vector b = solver.coef(out.alphas[a]);
      const double b0 = train.y_mean() - train.x_mean().dot(b);
      for (int r : fold) {
        const double err = problem.y()(r) - b0 - problem.x().row(r).dot(b);
        out.cv_error[a] += err * err;
      }
    }
  }
  const auto best = std::min_element(out.cv_error.begin(), out.cv_error.end()) - out.cv_error.begin();
  out.alpha = out.alphas[static_cast<std::size_t>(best)];
  out.coef = full.coef(out.alpha);
  return out;
}

/// w_i = min(1 / |b_i^ridge|, cap).
inline Vector adaptive_weights(const Vector& ridge_coef) {
  Vector w(ridge_coef.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double a = std::abs(ridge_coef(i));
    w(i) = a > 1.0 / kWeightCap ? 1.0 / a : kWeightCap;
  }
  return w;
}

struct AdaptiveLassoFit {
  L1Path path;
  double ridge_alpha = 0.0;
};

/// Stage 1: CV-tuned ridge gives the weights. Stage 2: weighted LASSO path on a 100-point
/// grid down from lambda_max (or the supplied grid).
inline AdaptiveLassoFit adaptive_lasso(const RegressionProblem& problem, Rng& rng, std::vector<double> grid = {},
                                       const LassoConfig& cfg = {}) {
  const RidgeCvResult ridge = ridge_cv(problem, rng);
  AdaptiveLassoFit out;
  out.ridge_alpha = ridge.alpha;
  const Vector w = adaptive_weights(ridge.coef);
  if (grid.empty()) grid = lambda_grid(lambda_max(problem, w));
  out.path = lasso_path(problem, grid, w, cfg);
  return out;
}

/// Penalized solution reported as a model; SSE is that of the penalized fit.
inline SubsetModel model_from_l1(const RegressionProblem& problem, const L1Solution& sol) {
  SubsetModel m;
  m.solver = SolverKind::AdaLasso;
  std::vector<double> c;
  for (int j = 0; j < problem.cols(); ++j) {
    if (sol.coef(j) != 0.0) {
      m.support.push_back(j);
      c.push_back(sol.coef(j));
    }
  }
  m.coef = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
  m.intercept = sol.intercept;
  m.sse = (problem.yc() - problem.xc() * sol.coef).squaredNorm();
  m.r_squared = r_squared_from(m.sse, problem.sst());
  return m;
}

}  // namespace bss
