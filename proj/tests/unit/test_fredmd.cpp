#include <gtest/gtest.h>

#include <random>

#include "bss/fredmd.hpp"
#include "synthetic_fredmd.hpp"

using namespace bss;

namespace {

const char* kToy =
    "sasdate,A,B,C\n"
    "Transform:,1,5,6\n"
    "1/1/1959,1.5,100,20\n"
    "2/1/1959,-2.25,101.5,\n"
    "3/1/1959,0.125,103,21.75\n"
    "4/1/1959,NA,104.5,22\n";

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

bool same_table(const FredmdTable& a, const FredmdTable& b) {
  if (a.names != b.names || a.tcodes != b.tcodes || a.dates != b.dates) return false;
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) return false;
  for (Eigen::Index i = 0; i < a.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.values.cols(); ++j) {
      const double x = a.values(i, j), y = b.values(i, j);
      if (std::isnan(x) != std::isnan(y) || (!std::isnan(x) && x != y)) return false;
    }
  }
  return true;
}

Vector series(int n, const std::function<double(int)>& f) {
  Vector v(n);
  for (int t = 0; t < n; ++t) v(t) = f(t);
  return v;
}

}  // namespace

TEST(FredmdParse, ToyTable) {
  const auto t = parse_fredmd(kToy);
  ASSERT_EQ(t.cols(), 3);
  EXPECT_EQ(t.tcodes, (std::vector<int>{1, 5, 6}));
  EXPECT_EQ(t.dates.front(), month_index(1959, 1));
  EXPECT_EQ(t.rows(), 4);
  EXPECT_TRUE(std::isnan(t.values(1, 2)));
  EXPECT_TRUE(std::isnan(t.values(3, 0)));
  EXPECT_EQ(t.values(1, 0), -2.25);
  EXPECT_FALSE(t.notes.empty());
}

TEST(FredmdParse, RoundTripIsIdentity) {
  const auto a = parse_fredmd(kToy);
  const auto b = parse_fredmd(serialize_fredmd(a));
  EXPECT_TRUE(same_table(a, b));
  EXPECT_EQ(serialize_fredmd(a), serialize_fredmd(b));
  const auto big = synthetic::table(12, 80, 3);
  EXPECT_TRUE(same_table(big, parse_fredmd(serialize_fredmd(big))));
}

TEST(FredmdParse, YearColonMonthDates) {
  const auto t = parse_fredmd("date,A\r\ntransform,2\r\n1959:01,1\r\n1959:02,2\r\n1959:03,4\r\n,\r\n");
  EXPECT_EQ(t.dates, (std::vector<int>{month_index(1959, 1), month_index(1959, 2), month_index(1959, 3)}));
}

TEST(FredmdParse, Errors) {
  EXPECT_EQ(kind_of([] { parse_fredmd("sasdate,A,B\n1/1/1959,1,2\n2/1/1959,1,2\n"); }), ErrorKind::MissingTransformRow);
  EXPECT_EQ(kind_of([] { parse_fredmd("sasdate,A,B\nTransform:,1\n1/1/1959,1,2\n"); }), ErrorKind::MissingTransformRow);
  EXPECT_EQ(kind_of([] { parse_fredmd("sasdate,A\nTransform:,1\n1/1/1959,1\n3/1/1959,2\n"); }), ErrorKind::NonMonotoneDates);
  EXPECT_EQ(kind_of([] { parse_fredmd("sasdate,A\nTransform:,1\n2/1/1959,1\n1/1/1959,2\n"); }), ErrorKind::NonMonotoneDates);
  try {
    parse_fredmd("sasdate,A,B\nTransform:,1,2\n1/1/1959,1,2\n2/1/1959,1,x7\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnparseableCell);
    EXPECT_NE(std::string(e.what()).find("row 4, col 3"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { parse_fredmd("sasdate,A\nTransform:,9\n1/1/1959,1\n"); }), ErrorKind::UnparseableCell);
}

TEST(FredmdParse, ChecksumTracksBytes) {
  const std::string a = kToy;
  std::string b = a;
  b[b.size() - 3] = '1';
  EXPECT_EQ(checksum_hex(a), checksum_hex(a));
  EXPECT_NE(checksum_hex(a), checksum_hex(b));
  EXPECT_EQ(checksum_hex(a).size(), 16u);
}

TEST(Transforms, AnalyticCases) {
  const int n = 40;
  const Vector expo = series(n, [](int t) { return std::exp(0.01 * t); });
  const Vector z5 = apply_transform(expo, 5);
  EXPECT_TRUE(std::isnan(z5(0)));
  for (int t = 1; t < n; ++t) EXPECT_NEAR(z5(t), 0.01, 1e-12);

  const Vector ramp = series(n, [](int t) { return 3.0 + 0.5 * t; });
  const Vector z2 = apply_transform(ramp, 2);
  for (int t = 1; t < n; ++t) EXPECT_NEAR(z2(t), 0.5, 1e-12);

  // ln x = 0.2 + 0.01 t + 0.003 t^2 has second difference 0.006.
  const Vector quad = series(n, [](int t) { return std::exp(0.2 + 0.01 * t + 0.003 * t * t); });
  const Vector z6 = apply_transform(quad, 6);
  EXPECT_TRUE(std::isnan(z6(0)) && std::isnan(z6(1)));
  for (int t = 2; t < n; ++t) EXPECT_NEAR(z6(t), 0.006, 1e-10);

  const Vector parab = series(n, [](int t) { return 1.0 + 2.0 * t * t; });
  const Vector z3 = apply_transform(parab, 3);
  for (int t = 2; t < n; ++t) EXPECT_NEAR(z3(t), 4.0, 1e-9);

  const Vector growth = series(n, [](int t) { return 5.0 * std::pow(1.02, t); });
  const Vector z7 = apply_transform(growth, 7);
  for (int t = 2; t < n; ++t) EXPECT_NEAR(z7(t), 0.0, 1e-12);

  EXPECT_EQ(apply_transform(ramp, 1), ramp);
  EXPECT_NEAR(apply_transform(expo, 4)(7), 0.07, 1e-12);
}

TEST(Transforms, LengthAndMissingPrefix) {
  const Vector x = series(10, [](int t) { return 1.0 + t; });
  for (int code = 1; code <= 7; ++code) {
    const Vector z = apply_transform(x, code);
    ASSERT_EQ(z.size(), 10);
    const int lost = code == 3 || code == 6 || code == 7 ? 2 : (code == 2 || code == 5 ? 1 : 0);
    for (int t = 0; t < 10; ++t) EXPECT_EQ(std::isnan(z(t)), t < lost) << code << " " << t;
  }
}

TEST(Transforms, LogCodesRejectNonPositive) {
  Vector x = series(10, [](int t) { return 1.0 + t; });
  x(6) = 0.0;
  for (int code = 4; code <= 7; ++code) {
    try {
      apply_transform(x, code, "SER");
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NonPositiveForLog);
      EXPECT_NE(std::string(e.what()).find("SER at t=6"), std::string::npos);
    }
  }
  EXPECT_NO_THROW(apply_transform(x, 2));
}

TEST(TransformsProperty, DiffLogThenCumsumRecoversLogLevel) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 10; ++rep) {
    Vector x(60);
    double l = n01(gen);
    for (int t = 0; t < 60; ++t) {
      l += 0.01 * n01(gen);
      x(t) = std::exp(l);
    }
    const Vector z = apply_transform(x, 5);
    double acc = 0.0;
    const double offset = std::log(x(0));
    for (int t = 1; t < 60; ++t) {
      acc += z(t);
      ASSERT_NEAR(acc + offset, std::log(x(t)), 1e-10);
    }
  }
}

TEST(Outliers, QuartileConvention) {
  const auto odd = quartiles({7, 1, 3, 2, 6, 5, 4});
  EXPECT_EQ(odd.median, 4.0);
  EXPECT_EQ(odd.q1, 2.5);
  EXPECT_EQ(odd.q3, 5.5);
  const auto even = quartiles({1, 2, 3, 4, 5, 6});
  EXPECT_EQ(even.median, 3.5);
  EXPECT_EQ(even.q1, 2.0);
  EXPECT_EQ(even.q3, 5.0);
}

TEST(Outliers, CleanGaussianHasNone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    EXPECT_TRUE(detect_outliers(series(500, [&](int) { return n01(gen); })).empty());
  }
}

TEST(Outliers, PlantedSpikeIsTheOnlyFlag) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n01;
  Vector x = series(300, [&](int) { return n01(gen); });
  std::vector<double> v(x.data(), x.data() + x.size());
  const auto q = quartiles(v);
  x(123) = q.median + 20.0 * (q.q3 - q.q1);
  EXPECT_EQ(detect_outliers(x), std::vector<int>{123});
}

TEST(Outliers, ConstantSeriesUsesFloor) {
  Vector x = Vector::Constant(40, 2.0);
  EXPECT_TRUE(detect_outliers(x).empty());
  x(5) = 2.0 + 1e-6;
  EXPECT_EQ(detect_outliers(x), std::vector<int>{5});
  EXPECT_THROW(detect_outliers(Vector::Zero(19)), Error);
}

TEST(OutliersProperty, ShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 gen(100 + seed);
    std::student_t_distribution<double> heavy(1.0);
    const Vector x = series(200, [&](int) { return heavy(gen); });
    const auto base = detect_outliers(x);
    for (double c : {-3.5, 1.0, 1e3}) {
      const Vector shifted = x.array() + c;
      ASSERT_EQ(detect_outliers(shifted), base) << seed << " " << c;
    }
  }
}

TEST(Imputation, SmootherFillsHolesNearLevel) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n01;
  Vector x = series(200, [&](int) { return 3.0 + 0.1 * n01(gen); });
  for (int t : {20, 21, 100, 150}) x(t) = kNaN;
  const auto fit = local_level_smoother(x);
  ASSERT_TRUE(fit.ok);
  for (int t : {20, 21, 100, 150}) EXPECT_NEAR(fit.level(t), 3.0, 0.1);
  const Vector lin = interpolate_linear(series(5, [](int t) { return t == 2 ? kNaN : 2.0 * t; }));
  EXPECT_NEAR(lin(2), 4.0, 1e-12);
}

TEST(Dataset, EmpDoublingTarget) {
  auto tab = synthetic::table(6, 60, 1);
  for (int t = 0; t < 60; ++t) tab.values(t, 0) = 1000.0 * std::pow(2.0, t / 12.0);
  const auto ds = build_dataset(tab, Target::EMP, 12);
  for (int t = 0; t + 12 < 60; ++t) EXPECT_NEAR(ds.yh(t), 100.0 * std::log(2.0), 1e-10);
  for (int t = 48; t < 60; ++t) EXPECT_TRUE(std::isnan(ds.yh(t)));
  EXPECT_NEAR(ds.y(5), 100.0 * std::log(2.0), 1e-10);
}

TEST(Dataset, ConstantCpiGrowthGivesZeroTarget) {
  auto tab = synthetic::table(6, 60, 2);
  for (int t = 0; t < 60; ++t) tab.values(t, 2) = 100.0 * std::pow(1.003, t);
  for (int h : {1, 3, 6, 12}) {
    const auto ds = build_dataset(tab, Target::CPI, h);
    for (int t = 1; t + h < 60; ++t) EXPECT_NEAR(ds.yh(t), 0.0, 1e-9);
  }
}

TEST(Dataset, DropSeriesDimension) {
  auto tab = synthetic::table(128, 300, 3);
  for (int j : {10, 40, 77}) tab.values(150, j) = tab.tcodes[static_cast<std::size_t>(j)] >= 4 ? tab.values(150, j) * 1e6 : 1e9;
  const auto ds = build_dataset(tab, Target::IP, 3, {OutlierStrategy::DropSeries});
  EXPECT_EQ(ds.dropped.size(), 3u);
  EXPECT_EQ(ds.p(), 750);
  EXPECT_EQ(ds.dropped[1].name, "S40");
  EXPECT_EQ(ds.dropped[1].reason, "outliers");
  const auto kept = build_dataset(tab, Target::IP, 3, {OutlierStrategy::Impute});
  EXPECT_EQ(kept.p(), 768);
  EXPECT_TRUE(kept.z.block(kept.span_begin - 5, 0, kept.rows() - kept.span_begin + 5, kept.n()).allFinite());
}

TEST(Dataset, ImputeReplacesFlaggedPointsOnly) {
  auto tab = synthetic::table(8, 200, 4);
  tab.values(90, 4) = 1e6;  // tcode 1
  const auto ds = build_dataset(tab, Target::EMP, 1, {OutlierStrategy::Impute});
  const int col = 4;
  ASSERT_EQ(ds.series[col], "S4");
  EXPECT_EQ(ds.outliers[col], std::vector<int>{90});
  EXPECT_LT(std::abs(ds.z(90, col)), 10.0);
  EXPECT_EQ(ds.z(89, col), tab.values(89, col));
  EXPECT_TRUE(ds.interpolated.empty());
  const auto lin = build_dataset(tab, Target::EMP, 1, {OutlierStrategy::Impute, true});
  EXPECT_EQ(lin.interpolated, std::vector<std::string>{"S4"});
  EXPECT_NEAR(lin.z(90, col), 0.5 * (tab.values(89, col) + tab.values(91, col)), 1e-12);
}

TEST(Dataset, TargetOutliersUntouched) {
  auto tab = synthetic::table(8, 200, 5);
  for (int t = 120; t < 200; ++t) tab.values(t, 0) *= 1e3;
  const auto ds = build_dataset(tab, Target::EMP, 1, {OutlierStrategy::Impute});
  EXPECT_NEAR(ds.y(120), 1200.0 * std::log(tab.values(120, 0) / tab.values(119, 0)), 1e-9);
}

TEST(Dataset, TargetMissing) {
  auto tab = synthetic::table(6, 60, 6);
  tab.names[1] = "OTHER";
  EXPECT_EQ(kind_of([&] { build_dataset(tab, Target::IP, 1); }), ErrorKind::TargetMissing);
  EXPECT_NO_THROW(build_dataset(tab, Target::EMP, 1));
  EXPECT_THROW(build_dataset(tab, Target::EMP, 2), Error);
}

TEST(Dataset, StackedRowLayout) {
  const auto tab = synthetic::table(5, 50, 7);
  const auto ds = build_dataset(tab, Target::EMP, 1);
  Vector row(ds.p());
  ASSERT_TRUE(ds.stacked_row(20, row));
  for (int l = 0; l < kLagDepth; ++l) {
    for (int i = 0; i < ds.n(); ++i) EXPECT_EQ(row(l * ds.n() + i), ds.z(20 - l, i));
  }
  const auto meta = ds.meta();
  EXPECT_EQ(ForecastDataset::column_name(meta[static_cast<std::size_t>(2 * ds.n() + 1)]), "INDPRO_2");
  EXPECT_EQ(ForecastDataset::column_name(meta[0]), "PAYEMS");
}

TEST(Dataset, SeriesMissingInSpanDropped) {
  auto tab = synthetic::table(6, 120, 8);
  for (int t = 0; t < 40; ++t) tab.values(t, 5) = kNaN;
  const auto all = build_dataset(tab, Target::EMP, 1);
  EXPECT_EQ(all.n(), 5);
  EXPECT_EQ(all.dropped.front().reason, "missing");
  DatasetOptions late;
  late.span_begin = tab.dates[50];
  EXPECT_EQ(build_dataset(tab, Target::EMP, 1, late).n(), 6);
}

TEST(DatasetProperty, NoLookAhead) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto tab = synthetic::table(12, 240, 20 + seed);
    // After the cut the series continue along another draw of the same process.
    const auto other = synthetic::table(12, 240, 900 + seed);
    auto changed = tab;
    const int cut = 150;
    for (int t = cut + 1; t < 240; ++t) {
      for (int j = 0; j < 12; ++j) {
        const int code = tab.tcodes[static_cast<std::size_t>(j)];
        double& v = changed.values(t, j);
        if (code >= 4) {
          v = tab.values(cut, j) * other.values(t, j) / other.values(cut, j);
        } else if (code > 1) {
          v = tab.values(cut, j) + other.values(t, j) - other.values(cut, j);
        } else {
          v = other.values(t, j);
        }
      }
    }
    for (int h : {1, 12}) {
      const auto a = build_dataset(tab, Target::CPI, h);
      const auto b = build_dataset(changed, Target::CPI, h);
      ASSERT_EQ(a.series, b.series);
      Vector ra(a.p()), rb(b.p());
      for (int t = kLagDepth + 1; t <= cut; ++t) {
        ASSERT_TRUE(a.stacked_row(t, ra) && b.stacked_row(t, rb));
        ASSERT_EQ(ra, rb);
        ASSERT_EQ(a.y(t), b.y(t));
        if (t + h <= cut) {
          ASSERT_EQ(a.yh(t), b.yh(t));
        }
      }
    }
  }
}
