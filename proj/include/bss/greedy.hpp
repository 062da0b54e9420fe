#pragma once

// Forward selection and backward elimination driven by the rank-one OLS updates.

#include <numeric>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/subset_model.hpp"

namespace bss {

/// Candidates whose SSE changes differ by less than this are tied; the lowest index wins.
inline constexpr double kGreedyTieTolerance = 1e-12;

struct GreedyPath {
  std::vector<SubsetModel> models;  // FS: sizes 1..k; BE: sizes p..kMin
  bool exhausted = false;           // FS ran out of non-collinear candidates
};

inline int default_k_max(int rows) { return std::max(1, std::min(rows / 2, 50)); }

inline GreedyPath forward_select(const RegressionProblem& problem, int k_max) {
  const int p = problem.cols();
  if (k_max < 1 || k_max >= problem.rows()) throw Error(ErrorKind::InvalidArgument, "forward_select needs 1 <= kMax < T");
  k_max = std::min(k_max, p);

  GreedyPath path;
  OlsState state = solve_ols(problem, {});
  Matrix cross(p, 0);  // X'X_U, one column per selected predictor
  std::vector<char> in_support(static_cast<std::size_t>(p), 0);
  const double tol = kCollinearityTolerance * problem.rows();

  for (int step = 0; step < k_max; ++step) {
    const Matrix weighted = cross * state.gram_inv;  // rows: c_j' G^{-1}
    int best = -1;
    double best_delta = -1.0;
    for (int j = 0; j < p; ++j) {
      if (in_support[static_cast<std::size_t>(j)]) continue;
      double e = problem.col_sq_norm()(j);
      double ye = problem.xty()(j);
      if (step > 0) {
        e -= weighted.row(j).dot(cross.row(j));
        ye -= cross.row(j).dot(state.coef);
      }
      if (e <= tol) continue;
      const double delta = ye * ye / e;
      if (delta > best_delta + kGreedyTieTolerance) {
        best_delta = delta;
        best = j;
      }
    }
    if (best < 0) {
      path.exhausted = true;
      break;
    }
    state = add_column_delta(problem, state, best).state;
    in_support[static_cast<std::size_t>(best)] = 1;
    cross.conservativeResize(p, step + 1);
    cross.col(step) = problem.xc().transpose() * problem.xc().col(best);
    path.models.push_back(model_from_ols(problem, state, SolverKind::FS));
  }
  return path;
}

inline GreedyPath backward_eliminate(const RegressionProblem& problem, int k_min) {
  const int p = problem.cols();
  if (p >= problem.rows()) {
    throw Error(ErrorKind::NotApplicable, "backward elimination needs p < T (p=" + std::to_string(p) + ")");
  }
  if (k_min < 0 || k_min > p) throw Error(ErrorKind::InvalidArgument, "kMin out of range");

  Support all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), 0);
  OlsState state = solve_ols(problem, all);
  GreedyPath path;
  path.models.push_back(model_from_ols(problem, state, SolverKind::BE));

  while (static_cast<int>(state.support.size()) > k_min) {
    const auto k = static_cast<Eigen::Index>(state.support.size());
    Vector b(k);
    for (Eigen::Index i = 0; i < k; ++i) b(i) = problem.xty()(state.support[static_cast<std::size_t>(i)]);
    int best_pos = -1;
    double best_delta = kInf;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double m = state.gram_inv(j, j);
      const double ytz_u = state.gram_inv.col(j).dot(b) - m * b(j);
      const double num = ytz_u + m * b(j);
      const double delta = num * num / m;
      const bool better = delta < best_delta - kGreedyTieTolerance;
      const bool tie_lower = best_pos >= 0 && std::abs(delta - best_delta) <= kGreedyTieTolerance &&
                             state.support[static_cast<std::size_t>(j)] < state.support[static_cast<std::size_t>(best_pos)];
      if (best_pos < 0 || better || tie_lower) {
        best_delta = delta;
        best_pos = static_cast<int>(j);
      }
    }
    state = drop_column_delta(problem, state, best_pos).state;
    path.models.push_back(model_from_ols(problem, state, SolverKind::BE));
  }
  return path;
}

}  // namespace bss
