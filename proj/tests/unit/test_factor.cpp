#include <gtest/gtest.h>

#include <random>

#include "bss/factor.hpp"
#include "oracles.hpp"

using namespace bss;

namespace {

Matrix low_rank_panel(int t, int n, int r, double noise, std::mt19937_64& gen) {
  return oracle::gaussian_matrix(t, r, gen) * oracle::gaussian_matrix(r, n, gen) + noise * oracle::gaussian_matrix(t, n, gen);
}

void punch_holes(Matrix& z, double share, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (u(gen) < share) z(i, j) = kNaN;
    }
  }
}

}  // namespace

TEST(Factors, CompletePanelIsPlainPca) {
  std::mt19937_64 gen(1);
  const Matrix z = low_rank_panel(80, 25, 3, 0.5, gen);
  const auto fit = extract_factors(z, 4);
  const Matrix zs = Standardizer::fit(z).apply(z);
  const auto pc = principal_components(zs, 4);
  EXPECT_EQ(fit.em_iterations, 0);
  EXPECT_TRUE(fit.em_converged);
  EXPECT_EQ(fit.factors, pc.scores);
  EXPECT_EQ(fit.loadings, pc.loadings);
}

TEST(Factors, FactorColumnsOrthogonal) {
  std::mt19937_64 gen(2);
  const auto fit = extract_factors(low_rank_panel(60, 30, 2, 1.0, gen), 5);
  const Matrix g = fit.factors.transpose() * fit.factors;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i != j) {
        EXPECT_NEAR(g(i, j), 0.0, 1e-8);
      }
    }
  }
}

TEST(Factors, EmRecoversRankOneHoles) {
  std::mt19937_64 gen(3);
  const Vector a = oracle::gaussian_matrix(100, 1, gen).col(0);
  const Vector b = oracle::gaussian_matrix(20, 1, gen).col(0).array() + 2.0;
  const Matrix full = a * b.transpose();
  Matrix z = full;
  punch_holes(z, 0.1, gen);
  // Observed-entry standardization adds a column constant, so the standardized panel has rank two.
  const auto fit = extract_factors(z, 2);
  EXPECT_TRUE(fit.em_converged);
  double err = 0.0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (std::isnan(z(i, j))) {
        const double back = fit.completed(i, j) * fit.scale(j) + fit.mean(j);
        err += (back - full(i, j)) * (back - full(i, j));
      }
    }
  }
  EXPECT_LT(err, 1e-4);
}

TEST(FactorsProperty, EmObservedErrorNonincreasing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(10 + seed);
    Matrix z = low_rank_panel(60, 20, 3, 0.7, gen);
    punch_holes(z, 0.15, gen);
    const auto fit = extract_factors(z, 3);
    ASSERT_GE(fit.observed_error.size(), 2u);
    for (std::size_t i = 1; i < fit.observed_error.size(); ++i) {
      ASSERT_LE(fit.observed_error[i], fit.observed_error[i - 1] * (1 + 1e-12) + 1e-12);
    }
  }
}

TEST(FactorsProperty, ReconstructionErrorFallsWithS) {
  std::mt19937_64 gen(4);
  const Matrix z = low_rank_panel(50, 15, 4, 1.0, gen);
  double prev = kInf;
  for (int s = 1; s <= 8; ++s) {
    const auto fit = extract_factors(z, s);
    const double e = (fit.completed - fit.factors * fit.loadings.transpose()).squaredNorm();
    EXPECT_LE(e, prev + 1e-9);
    prev = e;
  }
}

TEST(Factors, SparseColumnRejected) {
  std::mt19937_64 gen(5);
  Matrix z = oracle::gaussian_matrix(50, 4, gen);
  z.col(2).head(36).setConstant(kNaN);
  try {
    extract_factors(z, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooSparseColumn);
  }
}

TEST(FactorForecast, ArOneWithoutFactors) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> n01;
  const int t = 120;
  Vector y(t);
  y(0) = 0;
  for (int i = 1; i < t; ++i) y(i) = 0.5 * y(i - 1) + n01(gen);
  Vector target = Vector::Constant(t, kNaN);
  target.head(t - 1) = y.tail(t - 1);
  const auto m = fit_factor_forecast(target, y, Matrix::Zero(t, 1), {0, 1, 1});
  Matrix xr(t - 1, 1);
  xr.col(0) = y.head(t - 1);
  const Vector b = oracle::ols_coef(xr, y.tail(t - 1), {0});
  EXPECT_NEAR(m.intercept, b(0), 1e-10);
  EXPECT_NEAR(m.coef(0), b(1), 1e-10);
  EXPECT_EQ(m.rows.size(), static_cast<std::size_t>(t - 1));
}

TEST(FactorForecastProperty, ResidualsOrthogonalToRegressors) {
  std::mt19937_64 gen(7);
  const int t = 150;
  const Matrix f = oracle::gaussian_matrix(t, 5, gen);
  const Vector y = oracle::gaussian_matrix(t, 1, gen).col(0);
  Vector target = y + f.col(0);
  target.tail(3).setConstant(kNaN);
  for (const FaSpec spec : {FaSpec{2, 3, 2}, FaSpec{5, 0, 6}, FaSpec{1, 6, 1}}) {
    const auto m = fit_factor_forecast(target, y, f, spec);
    Vector z(m.coef.size());
    Vector acc = Vector::Zero(m.coef.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      factor_design_row(y, f, m.rows[i], spec, z);
      acc += m.residuals(static_cast<Eigen::Index>(i)) * z;
      sum += m.residuals(static_cast<Eigen::Index>(i));
    }
    EXPECT_LT(acc.cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(std::abs(sum), 1e-6);
  }
}

TEST(FactorForecast, NullFactorsAreInsignificant) {
  int exceed = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(200 + seed);
    const int t = 200;
    const Matrix f = oracle::gaussian_matrix(t, 1, gen);
    const Vector y = oracle::gaussian_matrix(t, 1, gen).col(0);
    const auto m = fit_factor_forecast(y, y, f, {1, 0, 1});
    const double s2 = m.sse / (t - 2);
    const Vector fc = f.col(0).array() - f.col(0).mean();
    const double se = std::sqrt(s2 / fc.squaredNorm());
    if (std::abs(m.coef(0)) > 2.0 * se) ++exceed;
  }
  // Twenty 5%-level tests: more than four rejections has probability about 0.3%.
  EXPECT_LE(exceed, 4);
}

TEST(FactorForecast, InsufficientHistory) {
  std::mt19937_64 gen(11);
  // 34 rows less the 5 lost to lags of order 6 leaves 29.
  const Vector y = oracle::gaussian_matrix(34, 1, gen).col(0);
  const Matrix f = oracle::gaussian_matrix(34, 2, gen);
  EXPECT_NO_THROW(fit_factor_forecast(y, y, f, {2, 5, 5}));
  try {
    fit_factor_forecast(y, y, f, {2, 6, 6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientHistory);
  }
}

TEST(FaGrid, OrderedByParameterCount) {
  const auto g = fa_grid();
  EXPECT_EQ(g.size(), 7u + 5u * 7u * 6u);
  EXPECT_EQ(g.front(), (FaSpec{0, 0, 1}));
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LE(g[i - 1].params(), g[i].params());
}

TEST(FaSelect, BicFindsPlantedFactorModel) {
  std::mt19937_64 gen(9);
  const int t = 300;
  const Matrix f = oracle::gaussian_matrix(t, 5, gen);
  const Vector noise = oracle::gaussian_matrix(t, 1, gen).col(0);
  Vector y = Vector::Zero(t);
  for (int i = 1; i < t; ++i) y(i) = f(i, 0) - 0.8 * f(i, 1) + 0.7 * f(i - 1, 0) + 0.5 * noise(i);
  std::vector<int> rows(t);
  std::iota(rows.begin(), rows.end(), 0);
  const auto sel = select_fa(y, y, f, fa_grid(5, 0, 6), {CriterionKind::BIC, 5, 0}, rows);
  EXPECT_EQ(sel.model.spec, (FaSpec{2, 0, 2}));
}
