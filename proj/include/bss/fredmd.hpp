#pragma once

// FRED-MD ingestion: the CSV layout, stationarity transforms, the ten-IQR outlier rule,
// outlier strategies and the stacked forecasting dataset.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/rng.hpp"

namespace bss {

inline constexpr int kFredmdSeries = 128;
inline constexpr int kLagDepth = 6;  // Z_t .. Z_{t-5}
inline constexpr double kOutlierIqrs = 10.0;
inline constexpr double kIqrFloor = 1e-8;
inline constexpr int kMinOutlierObs = 20;

/// Months since year 0: year * 12 + (month - 1).
inline int month_index(int year, int month) { return year * 12 + month - 1; }
inline int month_year(int m) { return m / 12; }
inline int month_of_year(int m) { return m % 12 + 1; }

inline std::string format_month(int m) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%d:%02d", month_year(m), month_of_year(m));
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_int(std::string_view s, int& v) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

inline bool is_missing_cell(std::string_view s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "."; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// m/d/yyyy, yyyy:mm or yyyy-mm[-dd]
inline bool parse_date(std::string_view s, int& out) {
  const auto pick = [&](char sep) { return split(s, sep); };
  int y = 0, m = 0, d = 1;
  if (s.find('/') != std::string_view::npos) {
    const auto p = pick('/');
    if (p.size() != 3 || !parse_int(p[0], m) || !parse_int(p[1], d) || !parse_int(p[2], y)) return false;
  } else if (s.find(':') != std::string_view::npos) {
    const auto p = pick(':');
    if (p.size() != 2 || !parse_int(p[0], y) || !parse_int(p[1], m)) return false;
  } else if (s.find('-') != std::string_view::npos) {
    const auto p = pick('-');
    if (p.size() < 2 || p.size() > 3 || !parse_int(p[0], y) || !parse_int(p[1], m)) return false;
    if (p.size() == 3 && !parse_int(p[2], d)) return false;
  } else {
    return false;
  }
  if (m < 1 || m > 12 || d < 1 || d > 31 || y < 1000 || y > 9999) return false;
  out = month_index(y, m);
  return true;
}

}  // namespace detail

struct FredmdTable {
  std::string date_header = "sasdate";
  std::vector<int> dates;  // month indices, consecutive
  std::vector<std::string> names;
  std::vector<int> tcodes;
  Matrix values;  // T x n, NaN where missing
  std::vector<std::string> notes;

  int rows() const { return static_cast<int>(dates.size()); }
  int cols() const { return static_cast<int>(names.size()); }

  int column(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
  }

  int row_of(int month) const {
    if (dates.empty() || month < dates.front() || month > dates.back()) return -1;
    return month - dates.front();
  }

  /// Vintage drift: the paper's vintage has 128 series.
  std::string column_count_note() const {
    if (cols() == kFredmdSeries) return {};
    return "expected " + std::to_string(kFredmdSeries) + " series, found " + std::to_string(cols());
  }
};

/// Parses the FRED-MD layout: header row, a "Transform:" row, then monthly rows.
/// Row and column numbers in errors are 1-based positions in the file.
inline FredmdTable parse_fredmd(std::string_view csv) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto pos = csv.find('\n', start);
    if (pos == std::string_view::npos) pos = csv.size();
    lines.push_back(csv.substr(start, pos - start));
    start = pos + 1;
  }
  const auto blank = [](std::string_view l) { return l.find_first_not_of(" ,\t\r\"") == std::string_view::npos; };
  std::vector<std::pair<int, std::string_view>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!blank(lines[i])) rows.emplace_back(static_cast<int>(i) + 1, lines[i]);
  }
  if (rows.size() < 2) throw Error(ErrorKind::MissingTransformRow, "file has no transform-code row");

  FredmdTable t;
  const auto header = detail::split(rows[0].second, ',');
  t.date_header = std::string(header[0]);
  for (std::size_t j = 1; j < header.size(); ++j) t.names.emplace_back(header[j]);
  while (!t.names.empty() && t.names.back().empty()) t.names.pop_back();
  const auto n = t.names.size();

  const auto codes = detail::split(rows[1].second, ',');
  if (detail::lower(codes[0]).rfind("transform", 0) != 0) {
    throw Error(ErrorKind::MissingTransformRow, "second row is not a transform-code row");
  }
  std::size_t code_count = codes.size() - 1;
  while (code_count > n && codes[code_count].empty()) --code_count;
  if (code_count != n) {
    throw Error(ErrorKind::MissingTransformRow, std::to_string(n) + " series but " + std::to_string(code_count) + " transform codes");
  }
  for (std::size_t j = 1; j <= n; ++j) {
    double v = 0.0;
    if (!detail::parse_double(codes[j], v) || v != std::floor(v) || v < 1 || v > 7) {
      throw Error(ErrorKind::UnparseableCell, "row " + std::to_string(rows[1].first) + ", col " + std::to_string(j + 1) +
                                                  ": bad transform code '" + std::string(codes[j]) + "'");
    }
    t.tcodes.push_back(static_cast<int>(v));
  }

  std::vector<std::vector<double>> data;
  for (std::size_t r = 2; r < rows.size(); ++r) {
    const auto cells = detail::split(rows[r].second, ',');
    const auto where = [&](std::size_t col) {
      return "row " + std::to_string(rows[r].first) + ", col " + std::to_string(col + 1);
    };
    int month = 0;
    if (!detail::parse_date(cells[0], month)) {
      throw Error(ErrorKind::UnparseableCell, where(0) + ": bad date '" + std::string(cells[0]) + "'");
    }
    if (!t.dates.empty() && month != t.dates.back() + 1) {
      throw Error(ErrorKind::NonMonotoneDates, where(0) + ": " + format_month(month) + " does not follow " + format_month(t.dates.back()));
    }
    std::size_t used = cells.size() - 1;
    while (used > n && cells[used].empty()) --used;
    if (used > n) throw Error(ErrorKind::UnparseableCell, where(n + 1) + ": more cells than series");
    std::vector<double> row(n, kNaN);
    for (std::size_t j = 1; j <= used; ++j) {
      if (detail::is_missing_cell(cells[j])) continue;
      if (!detail::parse_double(cells[j], row[j - 1])) {
        throw Error(ErrorKind::UnparseableCell, where(j) + ": '" + std::string(cells[j]) + "'");
      }
    }
    t.dates.push_back(month);
    data.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t j = 0; j < n; ++j) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = data[r][j];
  }
  if (const auto note = t.column_count_note(); !note.empty()) t.notes.push_back(note);
  return t;
}

/// Shortest round-trip formatting, so parse(serialize(t)) reproduces t exactly.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string serialize_fredmd(const FredmdTable& t) {
  std::string out = t.date_header;
  for (const auto& n : t.names) out += "," + n;
  out += "\nTransform:";
  for (int c : t.tcodes) out += "," + std::to_string(c);
  out += '\n';
  for (int r = 0; r < t.rows(); ++r) {
    out += std::to_string(month_of_year(t.dates[static_cast<std::size_t>(r)])) + "/1/" + std::to_string(month_year(t.dates[static_cast<std::size_t>(r)]));
    for (int j = 0; j < t.cols(); ++j) out += "," + format_double(t.values(r, j));
    out += '\n';
  }
  return out;
}

inline std::string checksum_hex(std::string_view bytes) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

/// McCracken-Ng codes: 1 x, 2 dx, 3 d2x, 4 ln x, 5 d ln x, 6 d2 ln x, 7 d(x_t/x_{t-1} - 1).
/// Differencing leaves a missing prefix; the length is kept.
inline Vector apply_transform(const Vector& x, int tcode, std::string_view series = "series") {
  if (tcode < 1 || tcode > 7) throw Error(ErrorKind::InvalidArgument, "transform code " + std::to_string(tcode));
  const auto n = x.size();
  if (tcode >= 4) {
    for (Eigen::Index t = 0; t < n; ++t) {
      if (std::isfinite(x(t)) && x(t) <= 0.0) {
        throw Error(ErrorKind::NonPositiveForLog, std::string(series) + " at t=" + std::to_string(t) + " is " + format_double(x(t)));
      }
    }
  }
  const auto diff = [n](const Vector& v) {
    Vector d = Vector::Constant(n, kNaN);
    for (Eigen::Index t = 1; t < n; ++t) d(t) = v(t) - v(t - 1);
    return d;
  };
  switch (tcode) {
    case 1: return x;
    case 2: return diff(x);
    case 3: return diff(diff(x));
    case 4: return x.array().log().matrix();
    case 5: return diff(x.array().log().matrix());
    case 6: return diff(diff(x.array().log().matrix()));
    default: {
      Vector g = Vector::Constant(n, kNaN);
      for (Eigen::Index t = 1; t < n; ++t) g(t) = x(t) / x(t - 1) - 1.0;
      return diff(g);
    }
  }
}

struct Quartiles {
  double q1 = kNaN;
  double median = kNaN;
  double q3 = kNaN;
};

/// Inclusive-median rule: with an odd count the median belongs to both halves.
inline Quartiles quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto med = [](std::span<const double> s) {
    const auto m = s.size();
    return m % 2 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
  };
  const auto n = v.size();
  Quartiles q;
  if (n == 0) return q;
  const std::span<const double> all(v);
  q.median = med(all);
  const auto half = n / 2 + n % 2;
  q.q1 = med(all.first(half));
  q.q3 = med(all.last(half));
  return q;
}

/// Indices t with |x_t - median| > 10 IQR, over the observed entries.
inline std::vector<int> detect_outliers(const Vector& x) {
  std::vector<double> obs;
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    if (std::isfinite(x(t))) obs.push_back(x(t));
  }
  if (static_cast<int>(obs.size()) < kMinOutlierObs) {
    throw Error(ErrorKind::InvalidArgument, "outlier rule needs " + std::to_string(kMinOutlierObs) + " observations, got " + std::to_string(obs.size()));
  }
  const auto q = quartiles(std::move(obs));
  const double bound = kOutlierIqrs * std::max(q.q3 - q.q1, kIqrFloor);
  std::vector<int> out;
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    if (std::isfinite(x(t)) && std::abs(x(t) - q.median) > bound) out.push_back(static_cast<int>(t));
  }
  return out;
}

/// Linear interpolation over missing entries; ends are held flat.
inline Vector interpolate_linear(const Vector& x) {
  Vector out = x;
  std::vector<Eigen::Index> known;
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    if (std::isfinite(x(t))) known.push_back(t);
  }
  if (known.empty()) return out;
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    if (std::isfinite(x(t))) continue;
    const auto it = std::lower_bound(known.begin(), known.end(), t);
    if (it == known.begin()) {
      out(t) = x(known.front());
    } else if (it == known.end()) {
      out(t) = x(known.back());
    } else {
      const auto b = *it, a = *(it - 1);
      const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
      out(t) = (1 - w) * x(a) + w * x(b);
    }
  }
  return out;
}

struct LocalLevelFit {
  Vector level;  // smoothed state
  double signal_ratio = kNaN;  // level variance / noise variance
  double log_likelihood = kNaN;
  bool ok = false;
};

/// Local-level model x_t = mu_t + e_t, mu_t = mu_{t-1} + u_t. The variance ratio is picked
/// from a coarse grid by concentrated likelihood; missing entries are skipped by the filter.
inline LocalLevelFit local_level_smoother(const Vector& x) {
  const auto n = x.size();
  LocalLevelFit best;
  Eigen::Index first = 0;
  while (first < n && !std::isfinite(x(first))) ++first;
  if (first == n) return best;
  constexpr double kDiffuse = 1e7;
  for (double q : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
    Vector a_pred(n), p_pred(n), a_filt(n), p_filt(n);
    double a = x(first), p = kDiffuse;
    double sum_v2f = 0.0, sum_logf = 0.0;
    int count = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
      a_pred(t) = a;
      p_pred(t) = p;
      if (std::isfinite(x(t))) {
        const double f = p + 1.0;
        const double v = x(t) - a;
        if (t > first) {
          sum_v2f += v * v / f;
          sum_logf += std::log(f);
          ++count;
        }
        a += p / f * v;
        p -= p * p / f;
      }
      a_filt(t) = a;
      p_filt(t) = p;
      p += q;
    }
    if (count < 2) continue;
    const double s2 = sum_v2f / count;
    const double ll = -0.5 * (count * std::log(std::max(s2, 1e-300)) + sum_logf);
    if (!std::isfinite(ll) || (best.ok && ll <= best.log_likelihood)) continue;
    Vector level(n);
    level(n - 1) = a_filt(n - 1);
    for (Eigen::Index t = n - 2; t >= 0; --t) {
      const double j = p_filt(t) / p_pred(t + 1);
      level(t) = a_filt(t) + j * (level(t + 1) - a_pred(t + 1));
    }
    if (!level.allFinite()) continue;
    best = {std::move(level), q, ll, true};
  }
  return best;
}

enum class Target { EMP, IP, CPI };
enum class OutlierStrategy { DropSeries, Impute };

inline std::string_view to_string(Target t) {
  switch (t) {
    case Target::EMP: return "EMP";
    case Target::IP: return "IP";
    default: return "CPI";
  }
}

inline std::string_view target_series(Target t) {
  switch (t) {
    case Target::EMP: return "PAYEMS";
    case Target::IP: return "INDPRO";
    default: return "CPIAUCSL";
  }
}

inline std::string_view to_string(OutlierStrategy s) { return s == OutlierStrategy::DropSeries ? "drop" : "impute"; }

inline std::optional<Target> parse_target(std::string_view s) {
  const auto l = detail::lower(s);
  if (l == "emp") return Target::EMP;
  if (l == "ip") return Target::IP;
  if (l == "cpi") return Target::CPI;
  return std::nullopt;
}

inline std::optional<OutlierStrategy> parse_strategy(std::string_view s) {
  const auto l = detail::lower(s);
  if (l == "drop" || l == "dropseries" || l == "1") return OutlierStrategy::DropSeries;
  if (l == "impute" || l == "2") return OutlierStrategy::Impute;
  return std::nullopt;
}

struct DatasetOptions {
  OutlierStrategy strategy = OutlierStrategy::DropSeries;
  bool linear_imputation = false;  // skip the smoother
  int span_begin = -1;  // first month whose stacked row must be complete
  int span_end = -1;    // last such month; -1 = last row
};

struct DroppedSeries {
  std::string name;
  std::string reason;  // "outliers" or "missing"
};

struct ForecastDataset {
  Target target = Target::EMP;
  int h = 1;
  OutlierStrategy strategy = OutlierStrategy::DropSeries;
  std::vector<int> dates;
  std::vector<std::string> series;  // retained predictors
  Matrix z;   // T x n transformed predictors after outlier handling, not standardized
  Vector y;   // y_t
  Vector yh;  // yh(t) = y^h_{t+h}, aligned at the origin t
  std::vector<std::vector<int>> outliers;  // flagged rows per retained series
  std::vector<DroppedSeries> dropped;
  std::vector<std::string> interpolated;  // series imputed by the linear fallback
  int span_begin = 0;  // row range with complete stacked predictors
  int span_end = -1;
  std::string checksum;

  int rows() const { return static_cast<int>(dates.size()); }
  int n() const { return static_cast<int>(series.size()); }
  int p() const { return kLagDepth * n(); }

  /// Column l * n + i holds series i at lag l.
  std::vector<ColumnMeta> meta() const {
    std::vector<ColumnMeta> m;
    for (int l = 0; l < kLagDepth; ++l) {
      for (const auto& s : series) m.push_back({s, l});
    }
    return m;
  }

  static std::string column_name(const ColumnMeta& m) { return m.lag == 0 ? m.variable_id : m.variable_id + "_" + std::to_string(m.lag); }

  bool stacked_row(int t, Eigen::Ref<Vector> out) const {
    if (t < kLagDepth - 1 || t >= rows()) return false;
    const auto k = static_cast<Eigen::Index>(n());
    for (int l = 0; l < kLagDepth; ++l) out.segment(l * k, k) = z.row(t - l).transpose();
    return out.allFinite();
  }

  Matrix design(std::span<const int> rows_) const {
    Matrix x(static_cast<Eigen::Index>(rows_.size()), p());
    Vector buf(p());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!stacked_row(rows_[i], buf)) {
        throw Error(ErrorKind::InsufficientHistory, "stacked predictors incomplete at " + format_month(dates[static_cast<std::size_t>(std::max(rows_[i], 0))]));
      }
      x.row(static_cast<Eigen::Index>(i)) = buf.transpose();
    }
    return x;
  }

  int row_of(int month) const {
    if (dates.empty() || month < dates.front() || month > dates.back()) return -1;
    return month - dates.front();
  }
};

/// y and y^h of the target; CPI uses the acceleration form.
inline void target_values(const Vector& level, Target target, int h, Vector& y, Vector& yh) {
  const auto n = level.size();
  y = Vector::Constant(n, kNaN);
  yh = Vector::Constant(n, kNaN);
  for (Eigen::Index t = 1; t < n; ++t) y(t) = 1200.0 * std::log(level(t) / level(t - 1));
  for (Eigen::Index t = 0; t + h < n; ++t) {
    double v = 1200.0 / h * std::log(level(t + h) / level(t));
    if (target == Target::CPI) v -= y(t);
    yh(t) = v;
  }
}

/// Transforms every series, applies the outlier strategy and builds the target. Series
/// with holes inside the span (after imputation, when imputing) are dropped.
inline ForecastDataset build_dataset(const FredmdTable& table, Target target, int h, const DatasetOptions& opt = {},
                                     std::string_view checksum = {}) {
  if (h != 1 && h != 3 && h != 6 && h != 12) throw Error(ErrorKind::InvalidArgument, "horizon must be 1, 3, 6 or 12");
  const int tc = table.column(target_series(target));
  if (tc < 0) throw Error(ErrorKind::TargetMissing, std::string(target_series(target)) + " is not in the table");
  ForecastDataset ds;
  ds.target = target;
  ds.h = h;
  ds.strategy = opt.strategy;
  ds.dates = table.dates;
  ds.checksum = std::string(checksum);
  const int t_all = table.rows();

  const Vector level = table.values.col(tc);
  for (int t = 0; t < t_all; ++t) {
    if (std::isfinite(level(t)) && level(t) <= 0.0) {
      throw Error(ErrorKind::NonPositiveForLog, std::string(target_series(target)) + " at t=" + std::to_string(t));
    }
  }
  target_values(level, target, h, ds.y, ds.yh);

  // Differencing costs at most two rows, so by default the span starts where a full lag
  // stack of twice-differenced series exists.
  const auto clamp_row = [&](int month) { return std::clamp(month - table.dates.front(), 0, std::max(t_all - 1, 0)); };
  ds.span_begin = std::max(opt.span_begin < 0 ? kLagDepth + 1 : clamp_row(opt.span_begin), kLagDepth - 1);
  ds.span_end = opt.span_end < 0 ? t_all - 1 : clamp_row(opt.span_end);
  const int check_from = ds.span_begin - (kLagDepth - 1);

  std::vector<Vector> kept;
  for (int j = 0; j < table.cols(); ++j) {
    const auto& name = table.names[static_cast<std::size_t>(j)];
    Vector zj = apply_transform(table.values.col(j), table.tcodes[static_cast<std::size_t>(j)], name);
    int observed = 0;
    for (Eigen::Index t = 0; t < zj.size(); ++t) observed += std::isfinite(zj(t)) ? 1 : 0;
    if (observed < kMinOutlierObs) {
      ds.dropped.push_back({name, "missing"});
      continue;
    }
    auto flagged = detect_outliers(zj);
    if (!flagged.empty() && opt.strategy == OutlierStrategy::DropSeries) {
      ds.dropped.push_back({name, "outliers"});
      continue;
    }
    if (opt.strategy == OutlierStrategy::Impute) {
      for (int t : flagged) zj(t) = kNaN;
      // Fill holes only between the first and last observations.
      Eigen::Index a = 0, b = zj.size() - 1;
      while (a <= b && !std::isfinite(zj(a))) ++a;
      while (b >= a && !std::isfinite(zj(b))) --b;
      bool holes = false;
      for (Eigen::Index t = a; t <= b; ++t) holes = holes || !std::isfinite(zj(t));
      if (holes) {
        const Vector seg = zj.segment(a, b - a + 1);
        Vector filled;
        if (!opt.linear_imputation) {
          const auto fit = local_level_smoother(seg);
          if (fit.ok) filled = fit.level;
        }
        if (filled.size() == 0) {
          filled = interpolate_linear(seg);
          ds.interpolated.push_back(name);
        }
        for (Eigen::Index t = a; t <= b; ++t) {
          if (!std::isfinite(zj(t))) zj(t) = filled(t - a);
        }
      }
    }
    bool complete = true;
    for (int t = check_from; t <= ds.span_end && complete; ++t) complete = std::isfinite(zj(t));
    if (!complete) {
      ds.dropped.push_back({name, "missing"});
      continue;
    }
    ds.series.push_back(name);
    ds.outliers.push_back(std::move(flagged));
    kept.push_back(std::move(zj));
  }
  ds.z.resize(t_all, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) ds.z.col(static_cast<Eigen::Index>(j)) = kept[j];
  return ds;
}

/// Dataset snapshot: date, y, y^h (at its origin) and the transformed predictors.
inline std::string dataset_csv(const ForecastDataset& ds) {
  std::string out = "date,y,yh";
  for (const auto& s : ds.series) out += "," + s;
  out += '\n';
  for (int t = 0; t < ds.rows(); ++t) {
    out += format_month(ds.dates[static_cast<std::size_t>(t)]) + "," + format_double(ds.y(t)) + "," + format_double(ds.yh(t));
    for (int j = 0; j < ds.n(); ++j) out += "," + format_double(ds.z(t, j));
    out += '\n';
  }
  return out;
}

}  // namespace bss
