#pragma once

// Rolling-window real-time forecasting: the AR benchmark, VS and FA forecasts per origin,
// MSPE ratios to AR and predictor-frequency tables.

#include <atomic>
#include <chrono>
#include <future>
#include <map>
#include <string>
#include <vector>

#include "bss/factor.hpp"
#include "bss/fredmd.hpp"
#include "bss/vs.hpp"

namespace bss {

inline constexpr int kFrequencyThreshold = 12;
inline constexpr double kBoldWithin = 1.05;

struct RollingConfig {
  int window = 240;
  int validation = 48;
  int test_begin = month_index(2015, 1);  // first forecast target date
  int test_end = month_index(2018, 12);
  std::vector<int> horizons{1, 3, 6, 12};
  std::vector<std::string> methods{"FS", "SMC", "adaLASSO", "IHT", "HTP", "FA", "AR"};
  bool allow_cosamp_sp = false;
  VsConfig vs;
  int ar_max_order = 6;
  int fa_d_max = 5;
  int fa_q_max = 6;
  int fa_m_max = 6;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate(int h) const {
    if (window <= validation + h + kMinForecastRows) {
      throw Error(ErrorKind::ConfigInvalid, "window must exceed validation + horizon + 30");
    }
    if (test_end < test_begin) throw Error(ErrorKind::ConfigInvalid, "test range is empty");
    for (const auto& m : methods) {
      if (m == "FA" || m == "AR") continue;
      const auto s = parse_solver(m);
      if (!s || *s == SolverKind::BE) throw Error(ErrorKind::ConfigInvalid, "unknown method '" + m + "'");
      if ((*s == SolverKind::CoSaMP || *s == SolverKind::SP) && !allow_cosamp_sp) {
        throw Error(ErrorKind::ConfigInvalid, m + " needs the CoSaMP/SP flag");
      }
    }
  }
};

/// Direct h-step projection of the target on y_t .. y_{t-q+1}; q = 0 is the historical
/// mean. Inputs are window-local; `target` is missing where it is not yet observed.
struct ArForecast {
  double forecast = kNaN;
  int order = 0;
  FaSelection selection;
};

inline ArForecast ar_benchmark(const Vector& y, const Vector& target, int origin, int max_order, int validation) {
  std::vector<int> rows;
  for (int t = 0; t < origin; ++t) {
    if (std::isfinite(target(t))) rows.push_back(t);
  }
  const Matrix none(y.size(), 0);
  ArForecast out;
  out.selection = select_fa(target, y, none, fa_grid(0, max_order, 1, 0), {CriterionKind::ForwardCV, 5, validation}, rows);
  out.order = out.selection.model.spec.q;
  out.forecast = out.selection.model.predict(y, none, origin);
  return out;
}

using FrequencyTable = std::map<std::pair<std::string, int>, int>;

struct MethodResult {
  std::string method;
  std::vector<double> forecast;  // per origin, NaN when the method failed
  std::vector<std::string> chosen;  // tuning value per origin
  std::vector<std::string> errors;
  int missing = 0;
  int compared = 0;  // origins scored against AR
  double mspe = kNaN;
  double ratio = kNaN;
  FrequencyTable frequency;
  double minutes = 0.0;
};

struct HorizonResult {
  int h = 1;
  std::vector<int> origins;  // row indices
  std::vector<int> origin_dates;
  std::vector<int> target_dates;
  std::vector<double> realized;
  std::vector<MethodResult> methods;

  const MethodResult* find(std::string_view m) const {
    for (const auto& r : methods) {
      if (r.method == m) return &r;
    }
    return nullptr;
  }
};

struct RollingReport {
  Target target = Target::EMP;
  std::vector<HorizonResult> horizons;
};

namespace detail {

struct WindowData {
  int start = 0;  // first row of the window
  Vector y;       // window-local y_t
  Vector target;  // window-local y^h, missing where t + h > origin
  int origin = 0;  // local index of the origin
};

inline WindowData window_data(const ForecastDataset& ds, int o, int window) {
  WindowData w;
  w.start = o - window + 1;
  w.origin = window - 1;
  w.y = ds.y.segment(w.start, window);
  w.target = Vector::Constant(window, kNaN);
  for (int i = 0; i + ds.h <= w.origin; ++i) w.target(i) = ds.yh(w.start + i);
  return w;
}

struct CellResult {
  double forecast = kNaN;
  std::string chosen;
  std::string error;
  std::vector<ColumnMeta> selected;
};

inline CellResult fa_cell(const ForecastDataset& ds, const RollingConfig& cfg, int o) {
  const auto w = window_data(ds, o, cfg.window);
  Matrix z = ds.z.middleRows(w.start, cfg.window);
  if (ds.strategy == OutlierStrategy::Impute) {
    for (int i = 0; i < ds.n(); ++i) {
      for (int t : ds.outliers[static_cast<std::size_t>(i)]) {
        if (t >= w.start && t <= o) z(t - w.start, i) = kNaN;
      }
    }
  }
  const auto fit = extract_factors(z, std::min<int>(kExtractedFactors, static_cast<int>(z.cols())));
  std::vector<int> rows;
  for (int t = 0; t < w.origin; ++t) {
    if (std::isfinite(w.target(t))) rows.push_back(t);
  }
  const auto sel = select_fa(w.target, w.y, fit.factors, fa_grid(std::min(cfg.fa_d_max, fit.s), cfg.fa_q_max, cfg.fa_m_max),
                             {CriterionKind::ForwardCV, 5, cfg.validation}, rows);
  CellResult c;
  c.forecast = sel.model.predict(w.y, fit.factors, w.origin);
  const auto& s = sel.model.spec;
  c.chosen = "d=" + std::to_string(s.d) + " q=" + std::to_string(s.q) + " m=" + std::to_string(s.m);
  return c;
}

inline CellResult ar_cell(const ForecastDataset& ds, const RollingConfig& cfg, int o) {
  const auto w = window_data(ds, o, cfg.window);
  const auto ar = ar_benchmark(w.y, w.target, w.origin, cfg.ar_max_order, cfg.validation);
  return {ar.forecast, "order=" + std::to_string(ar.order), {}, {}};
}

inline CellResult vs_cell(const ForecastDataset& ds, const RollingConfig& cfg, SolverKind solver, int o, std::uint64_t stream,
                          std::vector<SubsetModel>& warm) {
  std::vector<int> train;
  for (int t = o - cfg.window + 1; t + ds.h <= o; ++t) train.push_back(t);
  const Matrix xr = ds.design(train);
  const auto st = Standardizer::fit(xr);
  Vector yv(static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) yv(static_cast<Eigen::Index>(i)) = ds.yh(train[i]);
  const auto meta = ds.meta();
  const RegressionProblem pr(st.apply(xr), yv, meta, true);
  Vector xo(ds.p());
  if (!ds.stacked_row(o, xo)) throw Error(ErrorKind::InsufficientHistory, "origin predictors incomplete");
  const Vector xs = (xo - st.mean).cwiseQuotient(st.scale);

  const std::string name(to_string(solver));
  VsConfig vs = cfg.vs;
  vs.seed = derive_seed(cfg.seed, name + "-h" + std::to_string(ds.h), stream);
  vs.smc.seed = derive_seed(vs.seed, "smc");
  Rng rng = make_rng(vs.seed, "cv");
  const auto fit = select_vs(pr, solver, vs, {CriterionKind::ForwardCV, 5, cfg.validation}, rng, warm);
  if (solver == SolverKind::SMC) warm = fit.path;
  CellResult c;
  c.forecast = fit.model.predict_row(xs);
  c.chosen = solver == SolverKind::AdaLasso ? "lambda=" + format_double(fit.label) : "k=" + std::to_string(fit.model.size());
  for (int j : fit.model.support) c.selected.push_back(meta[static_cast<std::size_t>(j)]);
  return c;
}

}  // namespace detail

/// Pairwise MSPE ratio: only origins where both forecasts exist enter either sum.
inline double pairwise_ratio(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& realized,
                             int* compared = nullptr) {
  double sa = 0.0, sb = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < realized.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) continue;
    sa += (realized[i] - a[i]) * (realized[i] - a[i]);
    sb += (realized[i] - b[i]) * (realized[i] - b[i]);
    ++n;
  }
  if (compared) *compared = n;
  return n > 0 ? sa / sb : kNaN;
}

/// All origins of one horizon. Origins are forecast target dates minus h; each origin
/// sees rows [o - window + 1, o], and training rows are those whose target is observed by o.
inline HorizonResult roll_forecast(const ForecastDataset& ds, const RollingConfig& cfg) {
  cfg.validate(ds.h);
  HorizonResult out;
  out.h = ds.h;
  for (int d = cfg.test_begin; d <= cfg.test_end; ++d) {
    const int o = ds.row_of(d - ds.h);
    if (o < 0 || o - cfg.window + 1 < ds.span_begin || o > ds.span_end || !std::isfinite(ds.yh(o))) {
      throw Error(ErrorKind::InsufficientHistory, "dataset does not cover the window for target date " + format_month(d));
    }
    out.origins.push_back(o);
    out.origin_dates.push_back(d - ds.h);
    out.target_dates.push_back(d);
    out.realized.push_back(ds.yh(o));
  }
  const auto n_orig = out.origins.size();
  const auto nm = cfg.methods.size();
  std::vector<std::vector<detail::CellResult>> cells(nm, std::vector<detail::CellResult>(n_orig));
  std::vector<double> seconds(nm, 0.0);

  // SMC carries warm starts from origin to origin, so it is one sequential task.
  struct Task {
    std::size_t method;
    std::size_t origin;  // ignored for sequential tasks
    bool sequential;
  };
  std::vector<Task> tasks;
  for (std::size_t m = 0; m < nm; ++m) {
    if (cfg.methods[m] == "SMC") {
      tasks.push_back({m, 0, true});
    } else {
      for (std::size_t i = 0; i < n_orig; ++i) tasks.push_back({m, i, false});
    }
  }
  std::vector<double> task_seconds(tasks.size(), 0.0);
  const auto run_cell = [&](std::size_t m, std::size_t i, std::vector<SubsetModel>& warm) {
    const auto& name = cfg.methods[m];
    const int o = out.origins[i];
    auto& cell = cells[m][i];
    try {
      if (name == "AR") {
        cell = detail::ar_cell(ds, cfg, o);
      } else if (name == "FA") {
        cell = detail::fa_cell(ds, cfg, o);
      } else {
        cell = detail::vs_cell(ds, cfg, *parse_solver(name), o, static_cast<std::uint64_t>(out.origin_dates[i]), warm);
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigInvalid) throw;
      cell = {};
      cell.error = e.what();
      warm.clear();
    }
  };
  const auto run_task = [&](std::size_t k) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& task = tasks[k];
    std::vector<SubsetModel> warm;
    if (task.sequential) {
      for (std::size_t i = 0; i < n_orig; ++i) run_cell(task.method, i, warm);
    } else {
      run_cell(task.method, task.origin, warm);
    }
    task_seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    for (std::size_t k = 0; k < tasks.size(); ++k) run_task(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (int w = 0; w < threads; ++w) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t k = next++; k < tasks.size(); k = next++) run_task(k);
      }));
    }
    for (auto& f : pool) f.get();
  }
  for (std::size_t k = 0; k < tasks.size(); ++k) seconds[tasks[k].method] += task_seconds[k];

  for (std::size_t m = 0; m < nm; ++m) {
    MethodResult r;
    r.method = cfg.methods[m];
    r.minutes = seconds[m] / 60.0;
    double sse = 0.0;
    int scored = 0;
    for (std::size_t i = 0; i < n_orig; ++i) {
      const auto& c = cells[m][i];
      r.forecast.push_back(c.forecast);
      r.chosen.push_back(c.chosen);
      if (!c.error.empty()) r.errors.push_back(format_month(out.origin_dates[i]) + ": " + c.error);
      if (!std::isfinite(c.forecast)) {
        ++r.missing;
        continue;
      }
      sse += (out.realized[i] - c.forecast) * (out.realized[i] - c.forecast);
      ++scored;
      for (const auto& cm : c.selected) ++r.frequency[{cm.variable_id, cm.lag}];
    }
    r.mspe = scored > 0 ? sse / scored : kNaN;
    out.methods.push_back(std::move(r));
  }
  if (const auto* ar = out.find("AR")) {
    const auto ar_forecast = ar->forecast;
    for (auto& r : out.methods) {
      if (r.method == "AR") {
        r.ratio = 1.0;
        r.compared = static_cast<int>(n_orig) - r.missing;
      } else {
        r.ratio = pairwise_ratio(r.forecast, ar_forecast, out.realized, &r.compared);
      }
    }
  }
  return out;
}

/// Entries selected at least `threshold` times, most frequent first, as "ID_lag(count)".
inline std::vector<std::string> frequent_predictors(const FrequencyTable& f, int threshold = kFrequencyThreshold) {
  std::vector<std::pair<int, std::pair<std::string, int>>> v;
  for (const auto& [key, count] : f) {
    if (count >= threshold) v.push_back({count, key});
  }
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (const auto& [count, key] : v) out.push_back(ForecastDataset::column_name({key.first, key.second}) + "(" + std::to_string(count) + ")");
  return out;
}

/// Methods by horizons; ratios within 5% of the column minimum are bold.
inline std::string rolling_markdown(const RollingReport& r, int digits = 2) {
  if (r.horizons.empty()) return {};
  std::string out = "| " + std::string(to_string(r.target)) + " |";
  std::string rule = "|---|";
  for (const auto& h : r.horizons) {
    out += " h=" + std::to_string(h.h) + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  std::vector<double> best;
  for (const auto& h : r.horizons) {
    double b = kInf;
    for (const auto& m : h.methods) {
      if (std::isfinite(m.ratio)) b = std::min(b, m.ratio);
    }
    best.push_back(b);
  }
  for (std::size_t m = 0; m < r.horizons.front().methods.size(); ++m) {
    out += "| " + r.horizons.front().methods[m].method + " |";
    for (std::size_t k = 0; k < r.horizons.size(); ++k) {
      const double v = r.horizons[k].methods[m].ratio;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.*f", digits, v);
      const bool bold = std::isfinite(v) && v <= kBoldWithin * best[k];
      out += std::string(" ") + (bold ? "**" : "") + (std::isfinite(v) ? buf : "--") + (bold ? "**" : "") + " |";
    }
    out += '\n';
  }
  return out;
}

inline std::string rolling_csv(const RollingReport& r) {
  std::string out = "target,h,method,mspe,ratio,compared,missing\n";
  char buf[256];
  for (const auto& h : r.horizons) {
    for (const auto& m : h.methods) {
      std::snprintf(buf, sizeof buf, "%s,%d,%s,%.10g,%.10g,%d,%d\n", std::string(to_string(r.target)).c_str(), h.h,
                    m.method.c_str(), m.mspe, m.ratio, m.compared, m.missing);
      out += buf;
    }
  }
  return out;
}

/// One line per (horizon, origin, method); no timings, so reruns are byte-identical.
inline std::string forecasts_csv(const RollingReport& r) {
  std::string out = "target,h,origin,target_date,method,forecast,realized,chosen\n";
  for (const auto& h : r.horizons) {
    for (std::size_t i = 0; i < h.origins.size(); ++i) {
      for (const auto& m : h.methods) {
        out += std::string(to_string(r.target)) + "," + std::to_string(h.h) + "," + format_month(h.origin_dates[i]) + "," +
               format_month(h.target_dates[i]) + "," + m.method + "," + format_double(m.forecast[i]) + "," +
               format_double(h.realized[i]) + "," + m.chosen[i] + "\n";
      }
    }
  }
  return out;
}

inline std::string frequency_csv(const RollingReport& r) {
  std::string out = "target,h,method,variable,lag,count\n";
  for (const auto& h : r.horizons) {
    for (const auto& m : h.methods) {
      for (const auto& [key, count] : m.frequency) {
        out += std::string(to_string(r.target)) + "," + std::to_string(h.h) + "," + m.method + "," + key.first + "," +
               std::to_string(key.second) + "," + std::to_string(count) + "\n";
      }
    }
  }
  return out;
}

}  // namespace bss
