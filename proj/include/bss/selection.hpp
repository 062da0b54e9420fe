#pragma once

// Tuning-parameter selection. Candidates are indexed from most to least parsimonious
// (k ascending, or lambda descending), so the first minimizer is the tie-break winner.

#include <cmath>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "bss/error.hpp"
#include "bss/l1.hpp"
#include "bss/rng.hpp"

namespace bss {

enum class CriterionKind { KFold, ForwardCV, BIC, AIC };

inline std::string_view to_string(CriterionKind c) {
  switch (c) {
    case CriterionKind::KFold: return "kfold";
    case CriterionKind::ForwardCV: return "fcv";
    case CriterionKind::BIC: return "bic";
    case CriterionKind::AIC: return "aic";
  }
  return "?";
}

struct SelectionPlan {
  CriterionKind kind = CriterionKind::KFold;
  int folds = 5;
  int validation_length = 48;
};

struct SelectionResult {
  int chosen = -1;
  std::vector<double> scores;  // per candidate; inf marks a failed fit
};

/// Relative slack under which two scores count as tied.
inline constexpr double kScoreTieTolerance = 1e-12;

inline double bic(double sse, int t, int params) {
  return t * std::log(sse / t) + std::log(static_cast<double>(t)) * params;
}

inline double aic(double sse, int t, int params) { return t * std::log(sse / t) + 2.0 * params; }

inline int argmin_parsimonious(const std::vector<double>& scores) {
  int best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!std::isfinite(s)) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const double b = scores[static_cast<std::size_t>(best)];
    if (s < b - kScoreTieTolerance * std::max(1.0, std::abs(b))) best = static_cast<int>(i);
  }
  return best;
}

/// Returns per-candidate sums of squared prediction errors over `valid` after fitting on
/// `fit`. Failed candidates report inf.
using FoldScorer = std::function<std::vector<double>(std::span<const int> fit, std::span<const int> valid)>;

inline SelectionResult kfold_select(int n, int folds, int candidates, Rng& rng, const FoldScorer& scorer) {
  if (folds < 2 || folds > n) throw Error(ErrorKind::InvalidArgument, "k-fold CV needs 2 <= folds <= n");
  SelectionResult out;
  out.scores.assign(static_cast<std::size_t>(candidates), 0.0);
  for (const auto& fold : make_folds(n, folds, rng)) {
    const auto fit = complement_rows(n, fold);
    const auto sq = scorer(fit, fold);
    for (int c = 0; c < candidates; ++c) out.scores[static_cast<std::size_t>(c)] += sq[static_cast<std::size_t>(c)];
  }
  for (double& s : out.scores) s /= n;
  out.chosen = argmin_parsimonious(out.scores);
  return out;
}

/// Fit once on the rows before the final `validation_length`, score those rows.
inline SelectionResult forward_cv_select(int n, int validation_length, int candidates, const FoldScorer& scorer,
                                         int min_fit_rows = 2) {
  if (validation_length < 1) throw Error(ErrorKind::InvalidArgument, "validation length must be positive");
  const int fit_rows = n - validation_length;
  if (fit_rows < min_fit_rows) {
    throw Error(ErrorKind::InsufficientHistory, "forward CV leaves " + std::to_string(fit_rows) + " fitting rows");
  }
  std::vector<int> fit(static_cast<std::size_t>(fit_rows)), valid(static_cast<std::size_t>(validation_length));
  for (int i = 0; i < fit_rows; ++i) fit[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < validation_length; ++i) valid[static_cast<std::size_t>(i)] = fit_rows + i;
  SelectionResult out;
  out.scores = scorer(fit, valid);
  out.scores.resize(static_cast<std::size_t>(candidates), kInf);
  for (double& s : out.scores) s /= validation_length;
  out.chosen = argmin_parsimonious(out.scores);
  return out;
}

/// BIC or AIC over full-sample fits; `params` counts every estimated coefficient.
inline SelectionResult information_select(const std::vector<double>& sse, const std::vector<int>& params, int t,
                                          CriterionKind kind) {
  if (kind != CriterionKind::BIC && kind != CriterionKind::AIC) {
    throw Error(ErrorKind::InvalidArgument, "information_select takes BIC or AIC");
  }
  SelectionResult out;
  for (std::size_t i = 0; i < sse.size(); ++i) {
    const double s = std::max(sse[i], 1e-300);
    out.scores.push_back(!std::isfinite(sse[i]) ? kInf
                         : kind == CriterionKind::BIC ? bic(s, t, params[i])
                                                      : aic(s, t, params[i]));
  }
  out.chosen = argmin_parsimonious(out.scores);
  return out;
}

}  // namespace bss
