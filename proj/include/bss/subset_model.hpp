#pragma once

#include <algorithm>
#include <cctype>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bss/linalg.hpp"

namespace bss {

enum class SolverKind { FS, BE, IHT, HTP, CoSaMP, SP, SMC, AdaLasso };

inline std::string_view to_string(SolverKind s) {
  switch (s) {
    case SolverKind::FS: return "FS";
    case SolverKind::BE: return "BE";
    case SolverKind::IHT: return "IHT";
    case SolverKind::HTP: return "HTP";
    case SolverKind::CoSaMP: return "CoSaMP";
    case SolverKind::SP: return "SP";
    case SolverKind::SMC: return "SMC";
    case SolverKind::AdaLasso: return "adaLASSO";
  }
  return "?";
}

inline std::optional<SolverKind> parse_solver(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "fs") return SolverKind::FS;
  if (s == "be") return SolverKind::BE;
  if (s == "iht") return SolverKind::IHT;
  if (s == "htp") return SolverKind::HTP;
  if (s == "cosamp") return SolverKind::CoSaMP;
  if (s == "sp") return SolverKind::SP;
  if (s == "smc") return SolverKind::SMC;
  if (s == "adalasso") return SolverKind::AdaLasso;
  return std::nullopt;
}

/// A fitted sparse linear model: coefficients live exactly on `support` (ascending).
struct SubsetModel {
  Support support;
  double intercept = 0.0;
  Vector coef;
  double sse = 0.0;
  double r_squared = 0.0;
  SolverKind solver = SolverKind::FS;

  int size() const { return static_cast<int>(support.size()); }

  double coefficient(int index) const {
    auto it = std::lower_bound(support.begin(), support.end(), index);
    if (it == support.end() || *it != index) return 0.0;
    return coef(it - support.begin());
  }

  template <typename Row>
  double predict_row(const Row& x) const {
    double v = intercept;
    for (std::size_t i = 0; i < support.size(); ++i) v += coef(static_cast<Eigen::Index>(i)) * x(support[i]);
    return v;
  }

  Vector predict(const Matrix& x) const {
    Vector out(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) = predict_row(x.row(r));
    return out;
  }
};

inline double r_squared_from(double sse, double sst) { return sst > 0.0 ? 1.0 - sse / sst : 0.0; }

/// Converts an OLS state to a model with the support sorted ascending.
inline SubsetModel model_from_ols(const RegressionProblem& problem, const OlsState& state, SolverKind solver) {
  SubsetModel m;
  m.solver = solver;
  std::vector<std::size_t> order(state.support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return state.support[a] < state.support[b]; });
  m.support.reserve(order.size());
  m.coef.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    m.support.push_back(state.support[order[i]]);
    m.coef(static_cast<Eigen::Index>(i)) = state.coef(static_cast<Eigen::Index>(order[i]));
  }
  m.intercept = state.intercept;
  m.sse = state.sse;
  m.r_squared = r_squared_from(state.sse, problem.sst());
  return m;
}

/// OLS refit on `support`, reported as a model.
inline SubsetModel refit_model(const RegressionProblem& problem, std::span<const int> support, SolverKind solver) {
  return model_from_ols(problem, solve_ols(problem, support), solver);
}

}  // namespace bss
