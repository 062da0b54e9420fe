#pragma once

// Factor-augmented forecasting: principal-component factors (EM when the panel has
// holes) and the direct h-step regression on lagged y and lagged factors.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/selection.hpp"

namespace bss {

inline constexpr double kMinObservedShare = 0.3;
inline constexpr double kEmTolerance = 1e-6;
inline constexpr int kEmMaxIterations = 200;
inline constexpr int kExtractedFactors = 8;
inline constexpr int kMinForecastRows = 30;

struct FactorFit {
  Matrix loadings;  // n x s
  Matrix factors;   // T x s
  int s = 0;
  int em_iterations = 0;
  bool em_converged = true;
  Vector mean;   // observed-entry standardization
  Vector scale;
  std::vector<double> observed_error;  // per EM iteration
  Matrix completed;  // standardized panel with the final fill
};

inline FactorFit extract_factors(const Matrix& z, int s) {
  const auto t = z.rows();
  const auto n = z.cols();
  FactorFit out;
  out.s = s;
  out.mean.resize(n);
  out.scale.resize(n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed(t, n);
  bool complete = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index r = 0; r < t; ++r) {
      observed(r, j) = std::isfinite(z(r, j));
      if (observed(r, j)) {
        sum += z(r, j);
        ++count;
      }
    }
    if (count < kMinObservedShare * static_cast<double>(t) || count < 2) {
      throw Error(ErrorKind::TooSparseColumn, "column " + std::to_string(j) + " has " + std::to_string(count) + " of " +
                                                  std::to_string(t) + " entries observed");
    }
    complete = complete && count == t;
    const double mu = sum / count;
    double ss = 0.0;
    for (Eigen::Index r = 0; r < t; ++r) {
      if (observed(r, j)) ss += (z(r, j) - mu) * (z(r, j) - mu);
    }
    const double sd = std::sqrt(ss / (count - 1));
    out.mean(j) = mu;
    out.scale(j) = sd > 0.0 ? sd : 1.0;
  }

  Matrix filled(t, n);
  if (complete) {
    const auto st = Standardizer::fit(z);
    out.mean = st.mean;
    out.scale = st.scale;
    filled = st.apply(z);
  }
  for (Eigen::Index j = 0; j < n && !complete; ++j) {
    for (Eigen::Index r = 0; r < t; ++r) filled(r, j) = observed(r, j) ? (z(r, j) - out.mean(j)) / out.scale(j) : 0.0;
  }

  PcaResult pc;
  if (complete) {
    pc = principal_components(filled, s);
  } else {
    out.em_converged = false;
    for (int it = 1; it <= kEmMaxIterations; ++it) {
      pc = principal_components(filled, s);
      const Matrix common = pc.scores * pc.loadings.transpose();
      double change = 0.0;
      double err = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index r = 0; r < t; ++r) {
          if (observed(r, j)) {
            const double e = filled(r, j) - common(r, j);
            err += e * e;
          } else {
            change = std::max(change, std::abs(common(r, j) - filled(r, j)));
            filled(r, j) = common(r, j);
          }
        }
      }
      out.observed_error.push_back(err);
      out.em_iterations = it;
      if (change < kEmTolerance) {
        out.em_converged = true;
        break;
      }
    }
  }
  out.loadings = pc.loadings;
  out.factors = pc.scores;
  out.completed = std::move(filled);
  return out;
}

/// Factors of new complete rows under a fitted standardization and loadings.
inline Matrix project_factors(const FactorFit& fit, const Matrix& z) {
  const Matrix zs = (z.rowwise() - fit.mean.transpose()).array().rowwise() / fit.scale.transpose().array();
  return zs * fit.loadings;
}

struct FaSpec {
  int d = 0;
  int q = 0;
  int m = 1;

  int params() const { return 1 + q + (d > 0 ? d * m : 0); }
  int max_lag() const { return std::max(q, d > 0 ? m : 0); }
  friend bool operator==(const FaSpec&, const FaSpec&) = default;
};

/// Regressors of row t: y_{t-l} for l < q, then f_{t-l} (first d factors) for l < m.
inline bool factor_design_row(const Vector& y, const Matrix& f, Eigen::Index t, const FaSpec& spec, Eigen::Ref<Vector> out) {
  if (t - spec.max_lag() + 1 < 0) return false;
  Eigen::Index c = 0;
  for (int l = 0; l < spec.q; ++l) {
    const double v = y(t - l);
    if (!std::isfinite(v)) return false;
    out(c++) = v;
  }
  if (spec.d > 0) {
    for (int l = 0; l < spec.m; ++l) {
      for (int k = 0; k < spec.d; ++k) out(c++) = f(t - l, k);
    }
  }
  return true;
}

struct FactorForecastModel {
  FaSpec spec;
  double intercept = 0.0;
  Vector coef;  // AR terms then factor blocks by lag
  std::vector<int> rows;
  Vector residuals;
  double sse = 0.0;

  double predict(const Vector& y, const Matrix& f, Eigen::Index t) const {
    Vector z(coef.size());
    if (!factor_design_row(y, f, t, spec, z)) return kNaN;
    return intercept + z.dot(coef);
  }
};

/// OLS of target(t) (the value to forecast, aligned at its origin t) on the regressors of
/// row t, for each t in `rows`. An empty `rows` means every usable row.
inline FactorForecastModel fit_factor_forecast(const Vector& target, const Vector& y, const Matrix& f, const FaSpec& spec,
                                               std::span<const int> rows = {}) {
  if (spec.d < 0 || spec.d > f.cols() || spec.q < 0 || spec.m < 1) {
    throw Error(ErrorKind::InvalidArgument, "factor forecast orders out of range");
  }
  const int width = spec.q + (spec.d > 0 ? spec.d * spec.m : 0);
  std::vector<int> use;
  Vector buf(width);
  const auto consider = [&](int t) {
    if (t >= 0 && t < target.size() && std::isfinite(target(t)) && factor_design_row(y, f, t, spec, buf)) use.push_back(t);
  };
  if (rows.empty()) {
    for (int t = 0; t < target.size(); ++t) consider(t);
  } else {
    for (int t : rows) consider(t);
  }
  if (static_cast<int>(use.size()) < std::max(kMinForecastRows, width + 2)) {
    throw Error(ErrorKind::InsufficientHistory, "factor forecast has " + std::to_string(use.size()) + " usable rows");
  }
  const auto n = static_cast<Eigen::Index>(use.size());
  Matrix x(n, width + 1);
  Vector b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    factor_design_row(y, f, use[static_cast<std::size_t>(i)], spec, buf);
    x.row(i).tail(width) = buf.transpose();
    b(i) = target(use[static_cast<std::size_t>(i)]);
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < width + 1) throw Error(ErrorKind::RankDeficient, "factor forecast design is rank deficient");
  const Vector beta = qr.solve(b);
  FactorForecastModel out;
  out.spec = spec;
  out.intercept = beta(0);
  out.coef = beta.tail(width);
  out.rows = std::move(use);
  out.residuals = b - x * beta;
  out.sse = out.residuals.squaredNorm();
  return out;
}

/// (d, q, m) grid ordered by parameter count so ties go to the smaller model. With d = 0
/// only m = 1 is listed.
inline std::vector<FaSpec> fa_grid(int d_max = 5, int q_max = 6, int m_max = 6, int q_min = 0) {
  std::vector<FaSpec> g;
  for (int d = 0; d <= d_max; ++d) {
    for (int q = q_min; q <= q_max; ++q) {
      for (int m = 1; m <= (d > 0 ? m_max : 1); ++m) g.push_back({d, q, m});
    }
  }
  std::stable_sort(g.begin(), g.end(), [](const FaSpec& a, const FaSpec& b) { return a.params() < b.params(); });
  return g;
}

struct FaSelection {
  FactorForecastModel model;
  SelectionResult selection;
  std::vector<FaSpec> grid;
};

/// Chooses (d, q, m) by BIC, AIC or forward CV. Every grid point is scored on the same
/// rows: those in `rows` where the deepest lag of the grid is available.
inline FaSelection select_fa(const Vector& target, const Vector& y, const Matrix& f, std::vector<FaSpec> grid,
                             const SelectionPlan& plan, std::span<const int> rows) {
  int deepest = 0;
  for (const auto& g : grid) deepest = std::max(deepest, g.max_lag());
  std::vector<int> common;
  for (int t : rows) {
    if (t - deepest + 1 < 0 || t >= target.size() || !std::isfinite(target(t))) continue;
    bool ok = true;
    for (int l = 0; l < deepest && ok; ++l) ok = std::isfinite(y(t - l));
    if (ok) common.push_back(t);
  }
  FaSelection out;
  out.grid = grid;
  const auto n = static_cast<int>(common.size());
  if (plan.kind == CriterionKind::BIC || plan.kind == CriterionKind::AIC) {
    std::vector<double> sse;
    std::vector<int> params;
    for (const auto& g : grid) {
      try {
        sse.push_back(fit_factor_forecast(target, y, f, g, common).sse);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw;
        sse.push_back(kInf);
      }
      params.push_back(g.params());
    }
    out.selection = information_select(sse, params, n, plan.kind);
  } else if (plan.kind == CriterionKind::ForwardCV) {
    const FoldScorer scorer = [&](std::span<const int> fit, std::span<const int> valid) {
      std::vector<int> fit_rows, valid_rows;
      for (int i : fit) fit_rows.push_back(common[static_cast<std::size_t>(i)]);
      for (int i : valid) valid_rows.push_back(common[static_cast<std::size_t>(i)]);
      std::vector<double> scores;
      for (const auto& g : grid) {
        try {
          const auto m = fit_factor_forecast(target, y, f, g, fit_rows);
          double s = 0.0;
          for (int t : valid_rows) {
            const double e = target(t) - m.predict(y, f, t);
            s += e * e;
          }
          scores.push_back(s);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::RankDeficient) throw;
          scores.push_back(kInf);
        }
      }
      return scores;
    };
    out.selection = forward_cv_select(n, plan.validation_length, static_cast<int>(grid.size()), scorer, kMinForecastRows);
  } else {
    throw Error(ErrorKind::NotApplicable, "factor models are selected by BIC, AIC or forward CV");
  }
  if (out.selection.chosen < 0) throw Error(ErrorKind::RankDeficient, "no factor model could be fitted");
  out.model = fit_factor_forecast(target, y, f, grid[static_cast<std::size_t>(out.selection.chosen)], common);
  return out;
}

}  // namespace bss
