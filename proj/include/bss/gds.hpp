#pragma once

// Gradient descent with sparsification: IHT, HTP, CoSaMP and subspace pursuit on the
// centered least-squares loss f(b) = ||y - Xb||^2 with gradient 2X'Xb - 2X'y.

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/subset_model.hpp"

namespace bss {

struct GdsConfig {
  int k = 1;
  std::optional<double> step_size;  // empty: 0.9 / (power-iteration estimate of lambda_max(2X'X))
  double eps1 = 0.005;              // R^2 gain threshold
  double eps2 = 0.01;               // squared coefficient change threshold
  int max_iter = 500;
  double divergence_factor = 1e3;   // sse > factor * SST aborts
};

enum class StopReason { R2Stalled, BetaStalled, MaxIter };

struct GdsIterate {
  double sse = 0.0;
  double r_squared = 0.0;
  int support_changes = 0;
  int support_size = 0;
  double sse_before_refit = kNaN;  // HTP: thresholded gradient step; SP: merged-support fit
  int candidate_size = 0;          // CoSaMP/SP: size of the merged support
};

struct GdsTrace {
  std::vector<GdsIterate> iterates;
  bool converged = false;
  StopReason reason = StopReason::MaxIter;
  double step_size = 0.0;
};

struct GdsResult {
  SubsetModel model;
  GdsTrace trace;
};

/// Keeps the k largest-magnitude entries; ties at equal magnitude go to the lower index.
inline Vector hard_threshold(const Vector& v, int k) {
  const auto p = static_cast<int>(v.size());
  if (k < 0 || k > p) throw Error(ErrorKind::InvalidArgument, "hard_threshold needs 0 <= k <= p");
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    const double fa = std::abs(v(a)), fb = std::abs(v(b));
    return fa > fb || (fa == fb && a < b);
  });
  Vector out = Vector::Zero(p);
  for (int i = 0; i < k; ++i) out(idx[static_cast<std::size_t>(i)]) = v(idx[static_cast<std::size_t>(i)]);
  return out;
}

/// Indices of the k largest-magnitude entries, ascending. Same tie rule as hard_threshold.
inline Support top_k_indices(const Vector& v, int k) {
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    const double fa = std::abs(v(a)), fb = std::abs(v(b));
    return fa > fb || (fa == fb && a < b);
  });
  Support s(idx.begin(), idx.begin() + k);
  std::sort(s.begin(), s.end());
  return s;
}

inline Support support_of(const Vector& v) {
  Support s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) s.push_back(static_cast<int>(i));
  }
  return s;
}

namespace detail {

inline Vector fitted_sparse(const RegressionProblem& problem, const Vector& beta) {
  Vector fit = Vector::Zero(problem.rows());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) fit += beta(j) * problem.xc().col(j);
  }
  return fit;
}

inline int count_changes(const Support& a, const Support& b) {
  Support diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return static_cast<int>(diff.size()) / 2;
}

inline Vector ols_dense(const RegressionProblem& problem, const Support& support, double* sse) {
  const OlsState st = solve_ols(problem, support);
  Vector beta = Vector::Zero(problem.cols());
  for (std::size_t i = 0; i < support.size(); ++i) beta(support[i]) = st.coef(static_cast<Eigen::Index>(i));
  if (sse) *sse = st.sse;
  return beta;
}

}  // namespace detail

/// grad f(b) = 2X'Xb - 2X'y on the centered design.
inline Vector gradient(const RegressionProblem& problem, const Vector& beta) {
  return 2.0 * (problem.xc().transpose() * detail::fitted_sparse(problem, beta)) - 2.0 * problem.xty();
}

inline double sse_at(const RegressionProblem& problem, const Vector& beta) {
  return (problem.yc() - detail::fitted_sparse(problem, beta)).squaredNorm();
}

/// Power-iteration estimate of the largest eigenvalue of 2X'X.
inline double lipschitz_estimate(const RegressionProblem& problem, int iterations = 50) {
  Vector v = Vector::Ones(problem.cols()) / std::sqrt(static_cast<double>(problem.cols()));
  double lambda = 0.0;
  for (int i = 0; i < iterations; ++i) {
    const Vector w = 2.0 * (problem.xc().transpose() * (problem.xc() * v));
    lambda = v.dot(w);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
  }
  return lambda;
}

inline double resolve_step(const RegressionProblem& problem, const GdsConfig& cfg) {
  if (cfg.step_size) {
    if (*cfg.step_size <= 0.0) throw Error(ErrorKind::InvalidArgument, "step size must be positive");
    return *cfg.step_size;
  }
  const double l = lipschitz_estimate(problem);
  return l > 0.0 ? 0.9 / l : 1.0;
}

namespace detail {

inline void validate(const RegressionProblem& problem, const GdsConfig& cfg) {
  if (cfg.k < 1 || cfg.k > problem.cols()) throw Error(ErrorKind::InvalidK, "k out of range");
  if (cfg.eps1 <= 0.0 || cfg.eps2 <= 0.0) throw Error(ErrorKind::InvalidArgument, "eps1 and eps2 must be positive");
  if (cfg.max_iter < 1) throw Error(ErrorKind::InvalidArgument, "maxIter must be >= 1");
}

/// Applies the stopping rule: iterate while the R^2 gain exceeds eps1 or the squared
/// coefficient change exceeds eps2.
inline bool stalled(double r2_gain, double beta_change, const GdsConfig& cfg, GdsTrace& trace) {
  if (r2_gain > cfg.eps1 || beta_change > cfg.eps2) return false;
  trace.converged = true;
  trace.reason = beta_change == 0.0 ? StopReason::BetaStalled : StopReason::R2Stalled;
  return true;
}

inline void check_divergence(double sse, const RegressionProblem& problem, const GdsConfig& cfg) {
  if (!std::isfinite(sse) || sse > cfg.divergence_factor * problem.sst()) {
    throw Error(ErrorKind::Diverged, "SSE exceeded divergence bound; step size too large");
  }
}

/// Shared driver for the four methods: `step` maps the current iterate to the next one.
template <typename Step>
GdsResult run_gds(const RegressionProblem& problem, const GdsConfig& cfg, SolverKind solver, Step step) {
  validate(problem, cfg);
  GdsResult out;
  out.trace.step_size = resolve_step(problem, cfg);
  Vector beta = Vector::Zero(problem.cols());
  Support support;
  double r2 = 0.0;
  std::set<Support> seen{support};
  // HTP and SP iterates are functions of their support alone, so a revisited support
  // means the sequence cycles forever.
  const bool detect_cycles = solver == SolverKind::HTP || solver == SolverKind::SP;
  for (int r = 0; r < cfg.max_iter; ++r) {
    GdsIterate it;
    Vector next = step(beta, out.trace.step_size, it);
    Support next_support = support_of(next);
    check_divergence(it.sse, problem, cfg);
    it.r_squared = r_squared_from(it.sse, problem.sst());
    it.support_changes = count_changes(support, next_support);
    it.support_size = static_cast<int>(next_support.size());
    out.trace.iterates.push_back(it);
    const double gain = it.r_squared - r2;
    const double change = (next - beta).squaredNorm();
    const bool revisit = next_support != support && seen.count(next_support) > 0;
    beta = std::move(next);
    support = std::move(next_support);
    r2 = it.r_squared;
    if (stalled(gain, change, cfg, out.trace)) break;
    if (revisit && detect_cycles) {
      out.trace.converged = false;
      out.trace.reason = StopReason::MaxIter;
      break;
    }
    seen.insert(support);
  }
  if (support.empty()) support = top_k_indices(problem.xty(), cfg.k);
  out.model = refit_model(problem, support, solver);
  return out;
}

}  // namespace detail

inline GdsResult iht(const RegressionProblem& problem, const GdsConfig& cfg) {
  return detail::run_gds(problem, cfg, SolverKind::IHT, [&](const Vector& beta, double eta, GdsIterate& it) {
    Vector next = hard_threshold(beta - eta * gradient(problem, beta), cfg.k);
    it.sse = sse_at(problem, next);
    return next;
  });
}

inline GdsResult htp(const RegressionProblem& problem, const GdsConfig& cfg) {
  return detail::run_gds(problem, cfg, SolverKind::HTP, [&](const Vector& beta, double eta, GdsIterate& it) {
    const Vector thresholded = hard_threshold(beta - eta * gradient(problem, beta), cfg.k);
    it.sse_before_refit = sse_at(problem, thresholded);
    return detail::ols_dense(problem, support_of(thresholded), &it.sse);
  });
}

inline GdsResult cosamp(const RegressionProblem& problem, const GdsConfig& cfg) {
  return detail::run_gds(problem, cfg, SolverKind::CoSaMP, [&](const Vector& beta, double, GdsIterate& it) {
    Support merged = support_of(beta);
    const Support top = top_k_indices(gradient(problem, beta), std::min(2 * cfg.k, problem.cols()));
    merged.insert(merged.end(), top.begin(), top.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    it.candidate_size = static_cast<int>(merged.size());
    if (it.candidate_size >= problem.rows()) {
      throw Error(ErrorKind::RankDeficient, "CoSaMP candidate support not smaller than T");
    }
    const Vector wide = detail::ols_dense(problem, merged, nullptr);
    Vector next = hard_threshold(wide, cfg.k);
    it.sse = sse_at(problem, next);
    return next;
  });
}

inline GdsResult subspace_pursuit(const RegressionProblem& problem, const GdsConfig& cfg) {
  return detail::run_gds(problem, cfg, SolverKind::SP, [&](const Vector& beta, double, GdsIterate& it) {
    Support merged = support_of(beta);
    const Support top = top_k_indices(gradient(problem, beta), cfg.k);
    merged.insert(merged.end(), top.begin(), top.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    it.candidate_size = static_cast<int>(merged.size());
    if (it.candidate_size >= problem.rows()) {
      throw Error(ErrorKind::RankDeficient, "SP candidate support not smaller than T");
    }
    const Vector wide = detail::ols_dense(problem, merged, &it.sse_before_refit);
    const Support keep = top_k_indices(wide, cfg.k);
    return detail::ols_dense(problem, keep, &it.sse);
  });
}

/// Largest step that still converges: starts at 1/(2 max ||x_j||^2), the unit step on
/// normalized columns, and halves while the run diverges or hits maxIter, ending at the
/// power-iteration default. CoSaMP and SP take no step and run once.
inline GdsResult gds_step_search(const RegressionProblem& problem, GdsConfig cfg, SolverKind solver) {
  const auto run = [&](const GdsConfig& c) {
    switch (solver) {
      case SolverKind::IHT: return iht(problem, c);
      case SolverKind::HTP: return htp(problem, c);
      case SolverKind::CoSaMP: return cosamp(problem, c);
      case SolverKind::SP: return subspace_pursuit(problem, c);
      default: throw Error(ErrorKind::NotApplicable, "not a gradient-descent solver");
    }
  };
  if (solver == SolverKind::CoSaMP || solver == SolverKind::SP || cfg.step_size) return run(cfg);
  cfg.step_size.reset();
  const double floor = resolve_step(problem, cfg);
  const double top = problem.col_sq_norm().maxCoeff();
  for (double eta = top > 0.0 ? 0.5 / top : floor; eta > floor; eta *= 0.5) {
    cfg.step_size = eta;
    try {
      auto out = run(cfg);
      if (out.trace.converged) return out;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Diverged) throw;
    }
  }
  cfg.step_size = floor;
  return run(cfg);
}

}  // namespace bss
