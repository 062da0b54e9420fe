#include <gtest/gtest.h>

#include <random>

#include "bss/linalg.hpp"
#include "oracles.hpp"

using namespace bss;

namespace {

RegressionProblem random_problem(int t, int p, std::uint64_t seed, bool standardize = true) {
  std::mt19937_64 rng(seed);
  Matrix x = oracle::gaussian_matrix(t, p, rng);
  Vector y = oracle::planted_response(x, std::min(p, 3), 1.0, rng);
  return standardize ? RegressionProblem::standardized(x, y) : RegressionProblem(x, y);
}

}  // namespace

TEST(Linalg, StandardizedColumnsHaveUnitVariance) {
  const auto pr = random_problem(40, 6, 1);
  for (int j = 0; j < pr.cols(); ++j) {
    EXPECT_NEAR(pr.x().col(j).mean(), 0.0, 1e-10);
    EXPECT_NEAR(pr.x().col(j).squaredNorm() / (pr.rows() - 1), 1.0, 1e-8);
  }
}

TEST(Linalg, RejectsNonFinite) {
  Matrix x = Matrix::Ones(4, 2);
  x(1, 1) = kNaN;
  EXPECT_THROW(RegressionProblem(x, Vector::Ones(4)), Error);
  EXPECT_THROW(RegressionProblem(Matrix::Ones(1, 2), Vector::Ones(1)), Error);
}

TEST(Linalg, ExactLine) {
  Matrix x(3, 1);
  x << -1, 0, 1;
  Vector y(3);
  y << 1, 2, 3;
  const auto pr = RegressionProblem::standardized(x, y);
  const auto st = solve_ols(pr, std::vector<int>{0});
  EXPECT_NEAR(st.intercept, 2.0, 1e-12);
  EXPECT_NEAR(st.sse, 0.0, 1e-12);
}

TEST(Linalg, EmptySupportIsInterceptOnly) {
  const auto pr = random_problem(20, 3, 2);
  const auto st = solve_ols(pr, {});
  EXPECT_NEAR(st.sse, (pr.y().array() - pr.y().mean()).square().sum(), 1e-10);
  EXPECT_NEAR(st.intercept, pr.y().mean(), 1e-12);
}

TEST(Linalg, SolveMatchesNormalEquations) {
  const auto pr = random_problem(30, 8, 3, false);
  const std::vector<int> s{1, 3, 5};
  const auto st = solve_ols(pr, s);
  EXPECT_NEAR(st.sse, oracle::ols_sse(pr.x(), pr.y(), s), 1e-8);
  const Vector b = oracle::ols_coef(pr.x(), pr.y(), s);
  EXPECT_NEAR(st.intercept, b(0), 1e-8);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(st.coef(i), b(i + 1), 1e-8);
  EXPECT_NEAR(st.residuals.squaredNorm(), st.sse, 1e-8);
  const Matrix xu = pr.columns(s);
  EXPECT_LT((st.gram_inv * (xu.transpose() * xu) - Matrix::Identity(3, 3)).norm(), 1e-8);
}

TEST(Linalg, RankDeficientSupport) {
  std::mt19937_64 rng(4);
  Matrix x = oracle::gaussian_matrix(20, 3, rng);
  x.col(2) = x.col(0) * 2.0;
  const RegressionProblem pr(x, Vector::LinSpaced(20, 0, 1));
  try {
    solve_ols(pr, std::vector<int>{0, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
  }
  EXPECT_THROW(solve_ols(RegressionProblem(Matrix::Identity(3, 3), Vector::Ones(3)), std::vector<int>{0, 1, 2}), Error);
}

TEST(Linalg, AddSingleColumnIsProjection) {
  const auto pr = random_problem(25, 4, 5);
  const auto up = add_column_delta(pr, solve_ols(pr, {}), 2);
  const double ytz = pr.xty()(2);
  EXPECT_NEAR(up.delta_sse, ytz * ytz / pr.col_sq_norm()(2), 1e-10);
}

TEST(Linalg, AddOrthogonalColumnGivesZeroDelta) {
  Matrix x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;
  Vector y(4);
  y << 1, -1, 1, -1;
  const RegressionProblem pr(x, y);
  const auto st = solve_ols(pr, std::vector<int>{0});
  EXPECT_NEAR(add_column_delta(pr, st, 1).delta_sse, 0.0, 1e-12);
}

TEST(Linalg, AddChainMatchesRefit) {
  const auto pr = random_problem(50, 10, 6);
  OlsState st = solve_ols(pr, {});
  for (int z : {2, 7, 4}) {
    const auto up = add_column_delta(pr, st, z);
    EXPECT_NEAR(up.state.sse, st.sse - up.delta_sse, 1e-10);
    st = up.state;
  }
  EXPECT_NEAR(st.sse, oracle::ols_sse(pr.x(), pr.y(), {2, 7, 4}), 1e-8);
}

TEST(Linalg, CollinearCandidateRejected) {
  std::mt19937_64 rng(7);
  Matrix x = oracle::gaussian_matrix(30, 3, rng);
  x.col(2) = x.col(0) - x.col(1);
  const RegressionProblem pr(x, Vector::LinSpaced(30, 0, 1));
  const auto st = solve_ols(pr, std::vector<int>{0, 1});
  try {
    add_column_delta(pr, st, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Collinear);
  }
}

TEST(Linalg, DropOnlyColumn) {
  const auto pr = random_problem(20, 3, 8);
  const auto up = drop_column_delta(pr, solve_ols(pr, std::vector<int>{1}), 0);
  EXPECT_TRUE(up.state.support.empty());
  EXPECT_NEAR(up.state.sse, pr.sst(), 1e-8);
}

TEST(Linalg, AddThenDropRecovers) {
  const auto pr = random_problem(40, 6, 9);
  const auto st = solve_ols(pr, std::vector<int>{0, 4});
  const auto grown = add_column_delta(pr, st, 3).state;
  const auto back = drop_column_delta(pr, grown, 2).state;
  EXPECT_NEAR(back.sse, st.sse, 1e-8);
  EXPECT_LT((back.coef - st.coef).norm(), 1e-8);
}

TEST(Linalg, EachDropMatchesRefit) {
  const auto pr = random_problem(40, 6, 10);
  const std::vector<int> s{0, 2, 3, 5};
  const auto st = solve_ols(pr, s);
  for (int pos = 0; pos < 4; ++pos) {
    auto reduced = s;
    reduced.erase(reduced.begin() + pos);
    const auto up = drop_column_delta(pr, st, pos);
    EXPECT_GE(up.delta_sse, 0.0);
    EXPECT_NEAR(up.state.sse, oracle::ols_sse(pr.x(), pr.y(), reduced), 1e-8);
    EXPECT_NEAR(up.state.sse, st.sse + up.delta_sse, 1e-8);
  }
}

TEST(LinalgProperty, RandomUpdateSequencesMatchRefit) {
  std::mt19937_64 rng(11);
  for (int c = 0; c < 200; ++c) {
    const int t = 20 + static_cast<int>(rng() % 40);
    const int p = 3 + static_cast<int>(rng() % 10);
    const auto pr = random_problem(t, p, 1000 + static_cast<std::uint64_t>(c));
    OlsState st = solve_ols(pr, {});
    for (int step = 0; step < 12; ++step) {
      const bool add = st.support.empty() || (static_cast<int>(st.support.size()) < p && rng() % 3 != 0);
      if (add) {
        std::vector<int> free;
        for (int j = 0; j < p; ++j) {
          if (std::find(st.support.begin(), st.support.end(), j) == st.support.end()) free.push_back(j);
        }
        const auto up = add_column_delta(pr, st, free[rng() % free.size()]);
        EXPECT_GE(up.delta_sse, -1e-10);
        st = up.state;
      } else {
        const auto up = drop_column_delta(pr, st, static_cast<int>(rng() % st.support.size()));
        EXPECT_GE(up.delta_sse, -1e-10);
        st = up.state;
      }
      ASSERT_NEAR(st.sse, oracle::ols_sse(pr.x(), pr.y(), st.support), 1e-8);
      if (!st.support.empty()) {
        const Matrix xu = pr.columns(st.support);
        const auto k = static_cast<Eigen::Index>(st.support.size());
        ASSERT_LT((st.gram_inv * (xu.transpose() * xu) - Matrix::Identity(k, k)).norm(), 1e-8);
      }
    }
  }
}

TEST(Linalg, PeriodicResolveKeepsAccuracy) {
  const auto pr = random_problem(200, 60, 12);
  OlsState st = solve_ols(pr, {});
  for (int z = 0; z < 55; ++z) st = add_column_delta(pr, st, z).state;
  EXPECT_LT(st.updates_since_solve, kResolveEvery);
  EXPECT_NEAR(st.sse, solve_ols(pr, st.support).sse, 1e-8);
}

TEST(Linalg, SubsetSseEvaluatorMatchesSolve) {
  const auto pr = random_problem(30, 8, 13);
  const SubsetSseEvaluator eval(pr);
  const std::vector<int> s{0, 6, 7};
  EXPECT_NEAR(eval(s), solve_ols(pr, s).sse, 1e-8);
  EXPECT_NEAR(eval(std::vector<int>{}), pr.sst(), 1e-10);
}

TEST(Pca, RankOneReconstruction) {
  Vector a = Vector::LinSpaced(30, -1, 1);
  Vector b = Vector::LinSpaced(5, 1, 2);
  const Matrix z = a * b.transpose();
  const auto pc = principal_components(z, 1);
  EXPECT_LT((z - pc.scores * pc.loadings.transpose()).squaredNorm(), 1e-8);
}

TEST(Pca, EigenvaluesSumToTotalVariance) {
  std::mt19937_64 rng(14);
  Matrix z = oracle::gaussian_matrix(50, 6, rng);
  z = Standardizer::fit(z).apply(z);
  const auto pc = principal_components(z, 6);
  EXPECT_NEAR(pc.eigenvalues.sum(), 6.0, 1e-6);
}

TEST(Pca, MatchesFullEigendecompositionAndIsOrthogonal) {
  std::mt19937_64 rng(15);
  Matrix z = oracle::gaussian_matrix(100, 20, rng);
  z = Standardizer::fit(z).apply(z);
  const auto pc = principal_components(z, 5);
  const Matrix cov = z.transpose() * z / 99.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const double share = eig.eigenvalues()(19) / eig.eigenvalues().sum();
  EXPECT_NEAR(pc.eigenvalues(0) / cov.trace(), share, 1e-8);
  const Matrix g = pc.scores.transpose() * pc.scores;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i != j) {
        EXPECT_NEAR(g(i, j), 0.0, 1e-8);
      }
    }
  }
  double previous = kInf;
  for (int s = 1; s <= 8; ++s) {
    const auto f = principal_components(z, s);
    const double err = (z - f.scores * f.loadings.transpose()).squaredNorm();
    EXPECT_LE(err, previous + 1e-9);
    previous = err;
  }
}

TEST(Pca, WideInputUsesDualAndAgrees) {
  std::mt19937_64 rng(16);
  Matrix z = oracle::gaussian_matrix(15, 40, rng);
  z = Standardizer::fit(z).apply(z);
  const auto wide = principal_components(z, 3);
  const Matrix cov = z.transpose() * z / 14.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(wide.eigenvalues(c), eig.eigenvalues()(39 - c), 1e-8);
  for (int c = 0; c < 3; ++c) {
    Eigen::Index arg;
    wide.loadings.col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(wide.loadings(arg, c), 0.0);
  }
}
