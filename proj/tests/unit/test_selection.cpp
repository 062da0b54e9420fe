#include <gtest/gtest.h>

#include <random>

#include "bss/factor.hpp"
#include "bss/vs.hpp"
#include "oracles.hpp"

using namespace bss;

TEST(Criteria, MatchDirectFormulas) {
  const double sse = 37.5;
  const int t = 120, k = 4;
  EXPECT_NEAR(bic(sse, t, k), 120 * std::log(37.5 / 120) + std::log(120.0) * 4, 1e-12);
  EXPECT_NEAR(aic(sse, t, k), 120 * std::log(37.5 / 120) + 8.0, 1e-12);
}

TEST(Criteria, InformationSelectPrefersSmallerOnTie) {
  const auto r = information_select({10.0, 10.0 * std::exp(-std::log(50.0) / 50.0), 5.0}, {2, 3, 40}, 50, CriterionKind::BIC);
  // Candidate 1 buys exactly one BIC penalty of fit, so it ties candidate 0.
  EXPECT_EQ(r.chosen, 0);
  EXPECT_NEAR(r.scores[0], r.scores[1], 1e-9);
}

TEST(Criteria, ArgminSkipsFailures) {
  EXPECT_EQ(argmin_parsimonious({kInf, 3.0, 2.0, 2.0}), 2);
  EXPECT_EQ(argmin_parsimonious({kInf, kNaN}), -1);
}

TEST(KFold, EveryRowValidatedOnce) {
  Rng rng(3);
  std::vector<int> hits(37, 0);
  kfold_select(37, 5, 2, rng, [&](std::span<const int> fit, std::span<const int> valid) {
    EXPECT_EQ(fit.size() + valid.size(), 37u);
    for (int r : valid) ++hits[static_cast<std::size_t>(r)];
    return std::vector<double>{1.0, 2.0};
  });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(KFold, PureNoiseChoosesSmallestModel) {
  int smallest = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 gen(seed);
    const Matrix x = oracle::gaussian_matrix(200, 10, gen);
    const Vector y = oracle::planted_response(x, 0, 1.0, gen);
    const auto pr = RegressionProblem::standardized(x, y);
    VsConfig cfg;
    cfg.k_max = 6;
    Rng rng(seed);
    const auto fit = select_vs(pr, SolverKind::FS, cfg, {CriterionKind::KFold, 5, 0}, rng);
    if (fit.model.size() <= 1) ++smallest;
  }
  EXPECT_GE(smallest, 40);
}

TEST(KFold, DominantPredictorIsKept) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(seed);
    const Matrix x = oracle::gaussian_matrix(80, 12, gen);
    const Vector y = oracle::planted_response(x, 1, 1.0 / 3.0, gen);
    const auto pr = RegressionProblem::standardized(x, y);
    VsConfig cfg;
    cfg.k_max = 5;
    Rng rng(seed);
    for (auto s : {SolverKind::FS, SolverKind::IHT, SolverKind::HTP, SolverKind::AdaLasso}) {
      const auto fit = select_vs(pr, s, cfg, {}, rng);
      EXPECT_GE(fit.model.size(), 1);
      EXPECT_NE(fit.model.coefficient(0), 0.0);
    }
  }
}

TEST(ForwardCv, ValidationBlockNeverFitted) {
  std::mt19937_64 gen(5);
  const Matrix x = oracle::gaussian_matrix(100, 15, gen);
  Vector y = oracle::planted_response(x, 3, 1.0, gen);
  const auto a = RegressionProblem::standardized(x, y);
  y.tail(30).array() += 7.0;
  const auto b = RegressionProblem::standardized(x, y);
  VsConfig cfg;
  cfg.k_max = 6;
  cfg.smc.particles = 100;
  const SelectionPlan plan{CriterionKind::ForwardCV, 5, 30};
  for (auto s : {SolverKind::FS, SolverKind::SMC, SolverKind::IHT}) {
    Rng r1(1), r2(1);
    const auto fa = select_vs(a, s, cfg, plan, r1);
    const auto fb = select_vs(b, s, cfg, plan, r2);
    ASSERT_EQ(fa.path.size(), fb.path.size());
    for (std::size_t i = 0; i < fa.path.size(); ++i) {
      EXPECT_EQ(fa.path[i].support, fb.path[i].support);
      EXPECT_LT((fa.path[i].coef - fb.path[i].coef).norm(), 1e-10);
    }
    EXPECT_NE(fa.selection.scores, fb.selection.scores);
  }
}

TEST(ForwardCv, RowSplitArithmetic) {
  std::size_t fit_rows = 0;
  forward_cv_select(240 - 3, 48, 1, [&](std::span<const int> fit, std::span<const int> valid) {
    fit_rows = fit.size();
    EXPECT_EQ(valid.front(), static_cast<int>(fit.size()));
    EXPECT_EQ(valid.size(), 48u);
    return std::vector<double>{0.0};
  });
  EXPECT_EQ(fit_rows, 192u - 3u);
  EXPECT_THROW(forward_cv_select(40, 48, 1, [](auto, auto) { return std::vector<double>{0.0}; }), Error);
}

TEST(ForwardCv, StationaryArOrderIsSmall) {
  // The validation block dwarfs the fit block; with equal sizes the pick among orders 1..6
  // is close to a coin toss.
  const int validation = 5000;
  int small = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 gen(100 + seed);
    std::normal_distribution<double> n01;
    const int t = 241 + validation;
    Vector y(t);
    y(0) = n01(gen);
    for (int i = 1; i < t; ++i) y(i) = 0.6 * y(i - 1) + n01(gen);
    Vector target = Vector::Constant(t, kNaN);
    target.head(t - 1) = y.tail(t - 1);
    std::vector<int> rows(t - 1);
    std::iota(rows.begin(), rows.end(), 0);
    const auto sel = select_fa(target, y, Matrix::Zero(t, 1), fa_grid(0, 6, 1, 1), {CriterionKind::ForwardCV, 5, validation}, rows);
    if (sel.model.spec.q == 1 || sel.model.spec.q == 2) ++small;
  }
  EXPECT_GE(small, 45);
}

TEST(VsFamily, AdaLassoGridIsSharedAndDescending) {
  std::mt19937_64 gen(7);
  const Matrix x = oracle::gaussian_matrix(50, 20, gen);
  const auto pr = RegressionProblem::standardized(x, oracle::planted_response(x, 3, 1.0, gen));
  const CandidateFamily fam(SolverKind::AdaLasso, VsConfig{}, pr);
  ASSERT_EQ(fam.size(), 100);
  for (int i = 1; i < fam.size(); ++i) EXPECT_LT(fam.label(i), fam.label(i - 1));
  const auto models = fam.fit_all(pr);
  EXPECT_EQ(models.front()->size(), 0);
  const auto one = fam.fit_one(pr, 40);
  EXPECT_EQ(one->support, models[40]->support);
}

TEST(VsFamily, GdsFailuresBecomeEmptyCandidates) {
  std::mt19937_64 gen(8);
  const Matrix x = oracle::gaussian_matrix(12, 30, gen);
  const auto pr = RegressionProblem::standardized(x, oracle::planted_response(x, 2, 0.5, gen));
  VsConfig cfg;
  cfg.k_max = 10;
  const CandidateFamily fam(SolverKind::CoSaMP, cfg, pr);
  const auto models = fam.fit_all(pr);
  EXPECT_TRUE(models[0].has_value());
  EXPECT_FALSE(models[9].has_value());
}
