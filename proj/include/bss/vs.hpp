#pragma once

// Variable-selection methods as candidate families: one fitted model per tuning value
// (k = 0..kMax, or a lambda grid for adaLASSO), plus selection and the final refit.

#include <optional>
#include <vector>

#include "bss/gds.hpp"
#include "bss/greedy.hpp"
#include "bss/l1.hpp"
#include "bss/selection.hpp"
#include "bss/smc.hpp"

namespace bss {

struct VsConfig {
  int k_max = 20;
  SmcConfig smc;
  GdsConfig gds;
  LassoConfig lasso;
  int lambda_points = 100;
  bool step_search = true;  // IHT/HTP: largest convergent step rather than the fixed default
  std::uint64_t seed = 1;
};

using CandidateModels = std::vector<std::optional<SubsetModel>>;

class CandidateFamily {
 public:
  /// adaLASSO weights and the lambda grid come from `full` and are shared by every fold.
  CandidateFamily(SolverKind solver, const VsConfig& cfg, const RegressionProblem& full)
      : solver_(solver), cfg_(cfg), full_rows_(full.rows()) {
    if (solver == SolverKind::BE) throw Error(ErrorKind::NotApplicable, "BE has no candidate family");
    if (solver == SolverKind::AdaLasso) {
      Rng rng = make_rng(cfg.seed, "adalasso-ridge");
      weights_ = adaptive_weights(ridge_cv(full, rng).coef);
      grid_ = lambda_grid(lambda_max(full, weights_), cfg.lambda_points);
    } else {
      k_max_ = std::max(1, std::min({cfg.k_max, full.cols(), full.rows() - 2}));
    }
  }

  SolverKind solver() const { return solver_; }
  /// Subset solvers list k = 0..kMax; k = 0 is the intercept-only model.
  int size() const { return solver_ == SolverKind::AdaLasso ? static_cast<int>(grid_.size()) : k_max_ + 1; }
  double label(int i) const { return solver_ == SolverKind::AdaLasso ? grid_[static_cast<std::size_t>(i)] : i; }
  const Vector& weights() const { return weights_; }

  /// Every candidate fitted on `pr`. `warm` (SMC only) holds the models of size 1, 2, ...
  /// from an earlier fit.
  CandidateModels fit_all(const RegressionProblem& pr, const std::vector<SubsetModel>& warm = {}) const {
    CandidateModels out(static_cast<std::size_t>(size()));
    const int kmax = std::min(k_max_, pr.rows() - 2);
    if (solver_ != SolverKind::AdaLasso) out[0] = refit_model(pr, {}, solver_);
    switch (solver_) {
      case SolverKind::FS: {
        const auto path = forward_select(pr, std::min(kmax, pr.cols()));
        for (std::size_t i = 0; i < path.models.size() && i + 1 < out.size(); ++i) out[i + 1] = path.models[i];
        break;
      }
      case SolverKind::SMC: {
        SmcContext ctx(pr);
        const auto path = smc_path(ctx, kmax, cfg_.smc, warm);
        for (std::size_t i = 0; i < path.size(); ++i) out[i + 1] = path[i].model;
        break;
      }
      case SolverKind::AdaLasso: {
        const auto path = lasso_path(pr, scaled_grid(pr, grid_.size()), weights_, cfg_.lasso);
        for (std::size_t i = 0; i < path.solutions.size(); ++i) out[i] = model_from_l1(pr, path.solutions[i]);
        break;
      }
      default:
        for (int k = 1; k <= kmax; ++k) out[static_cast<std::size_t>(k)] = fit_gds(pr, k);
    }
    return out;
  }

  std::optional<SubsetModel> fit_one(const RegressionProblem& pr, int i, const std::vector<SubsetModel>& warm = {}) const {
    const int k = i;
    if (k == 0 && solver_ != SolverKind::AdaLasso) return refit_model(pr, {}, solver_);
    switch (solver_) {
      case SolverKind::FS: {
        const auto path = forward_select(pr, std::min(k, pr.cols()));
        if (static_cast<int>(path.models.size()) < k) return std::nullopt;
        return path.models.back();
      }
      case SolverKind::SMC: {
        SmcContext ctx(pr);
        std::optional<SubsetModel> w;
        const auto slot = static_cast<std::size_t>(k - 1);
        if (slot < warm.size() && warm[slot].size() == k) w = warm[slot];
        return smc_best_subset(ctx, k, cfg_.smc, std::move(w)).model;
      }
      case SolverKind::AdaLasso: {
        const auto path = lasso_path(pr, scaled_grid(pr, static_cast<std::size_t>(i) + 1), weights_, cfg_.lasso);
        return model_from_l1(pr, path.solutions.back());
      }
      default:
        return fit_gds(pr, k);
    }
  }

 private:
  // The penalty multiplies a sum of squares, so a fold with fewer rows takes a
  // proportionally smaller lambda.
  std::vector<double> scaled_grid(const RegressionProblem& pr, std::size_t count) const {
    std::vector<double> g(grid_.begin(), grid_.begin() + static_cast<std::ptrdiff_t>(count));
    const double r = static_cast<double>(pr.rows()) / full_rows_;
    for (double& v : g) v *= r;
    return g;
  }

  std::optional<SubsetModel> fit_gds(const RegressionProblem& pr, int k) const {
    GdsConfig g = cfg_.gds;
    g.k = k;
    try {
      if (cfg_.step_search) return gds_step_search(pr, g, solver_).model;
      switch (solver_) {
        case SolverKind::IHT: return iht(pr, g).model;
        case SolverKind::HTP: return htp(pr, g).model;
        case SolverKind::CoSaMP: return cosamp(pr, g).model;
        case SolverKind::SP: return subspace_pursuit(pr, g).model;
        default: break;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Diverged || e.kind() == ErrorKind::RankDeficient) return std::nullopt;
      throw;
    }
    throw Error(ErrorKind::NotApplicable, "not a gradient-descent solver");
  }

  SolverKind solver_;
  VsConfig cfg_;
  int full_rows_;
  int k_max_ = 0;
  Vector weights_;
  std::vector<double> grid_;
};

struct VsFit {
  SubsetModel model;
  double label = kNaN;  // chosen k or lambda
  SelectionResult selection;
  std::vector<SubsetModel> path;  // fit-block models per k (SMC warm starts)
};

inline std::vector<double> held_out_sse(const RegressionProblem& full, const CandidateModels& models,
                                        std::span<const int> valid) {
  std::vector<double> out;
  out.reserve(models.size());
  for (const auto& m : models) {
    if (!m) {
      out.push_back(kInf);
      continue;
    }
    double s = 0.0;
    for (int r : valid) {
      const double e = full.y()(r) - m->predict_row(full.x().row(r));
      s += e * e;
    }
    out.push_back(s);
  }
  return out;
}

/// Selects the tuning value by `plan` and refits the winner on all rows of `full`.
inline VsFit select_vs(const RegressionProblem& full, SolverKind solver, const VsConfig& cfg, const SelectionPlan& plan,
                       Rng& rng, const std::vector<SubsetModel>& warm = {}) {
  const CandidateFamily family(solver, cfg, full);
  VsFit out;
  std::vector<SubsetModel> fit_block;
  const FoldScorer scorer = [&](std::span<const int> fit, std::span<const int> valid) {
    const auto models = family.fit_all(full.subset_rows(fit), warm);
    if (plan.kind == CriterionKind::ForwardCV) {
      for (const auto& m : models) {
        if (m && m->size() > 0) fit_block.push_back(*m);
      }
    }
    return held_out_sse(full, models, valid);
  };
  switch (plan.kind) {
    case CriterionKind::KFold:
      out.selection = kfold_select(full.rows(), plan.folds, family.size(), rng, scorer);
      break;
    case CriterionKind::ForwardCV:
      out.selection = forward_cv_select(full.rows(), plan.validation_length, family.size(), scorer);
      break;
    default: {
      const auto models = family.fit_all(full, warm);
      std::vector<double> sse;
      std::vector<int> params;
      for (const auto& m : models) {
        sse.push_back(m ? m->sse : kInf);
        params.push_back(m ? m->size() + 1 : 0);
      }
      out.selection = information_select(sse, params, full.rows(), plan.kind);
      if (out.selection.chosen >= 0) {
        out.model = *models[static_cast<std::size_t>(out.selection.chosen)];
        out.label = family.label(out.selection.chosen);
        return out;
      }
    }
  }
  if (out.selection.chosen < 0) throw Error(ErrorKind::Diverged, "no candidate of " + std::string(to_string(solver)) + " could be fitted");
  out.label = family.label(out.selection.chosen);
  out.path = std::move(fit_block);
  const auto& hint = out.path.empty() ? warm : out.path;
  auto model = family.fit_one(full, out.selection.chosen, hint);
  if (!model) throw Error(ErrorKind::Diverged, "refit of the chosen candidate failed");
  out.model = std::move(*model);
  return out;
}

}  // namespace bss
