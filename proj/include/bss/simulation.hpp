#pragma once

// Simulation designs (three i.i.d. settings and the FA-vs-VS time-series design), the
// selection-accuracy criteria and the repetition driver.

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bss/factor.hpp"
#include "bss/rng.hpp"
#include "bss/vs.hpp"

namespace bss {

enum class DgpKind { Setting1, Setting2, Setting3, FaVsVs };
enum class FaMechanism { FromPredictors, FromFactors };

inline std::string_view to_string(DgpKind k) {
  switch (k) {
    case DgpKind::Setting1: return "setting1";
    case DgpKind::Setting2: return "setting2";
    case DgpKind::Setting3: return "setting3";
    case DgpKind::FaVsVs: return "favsvs";
  }
  return "?";
}

struct DgpSpec {
  DgpKind kind = DgpKind::Setting2;
  int t = 200;
  double r2 = 0.8;
  FaMechanism mechanism = FaMechanism::FromPredictors;
  int p = 0;  // setting 2 only; 0 keeps 2000
  int test_size = 100;
};

struct FaGroup {
  double phi;
  double innovation_var;
  double noise_var;
};

inline constexpr std::array<FaGroup, 4> kFaGroups{{{0.7, 0.357, 0.3}, {0.7, 0.153, 0.7}, {0.3, 0.637, 0.3}, {0.3, 0.273, 0.7}}};
inline constexpr int kFaPerGroup = 30;
inline constexpr int kFaLags = 6;  // lags 0..5
inline constexpr int kFaTestRows = 50;

struct SimData {
  Matrix x_train, x_test;
  Vector y_train, y_test;
  Vector beta;  // full-length truth
  Support truth;
  double sigma2 = 0.0;
  std::vector<ColumnMeta> meta;
  // FA-vs-VS only: contemporaneous predictors for factor extraction and the latent
  // factors over the same rows.
  Matrix z_train, z_test;
  Matrix factors;
};

namespace detail {

struct Block {
  int size;
  double rho;
  std::vector<double> coef;  // leading coefficients; the rest are zero
};

inline Matrix block_design(int rows, const std::vector<Block>& blocks, Rng& rng) {
  std::normal_distribution<double> n01;
  int p = 0;
  for (const auto& b : blocks) p += b.size;
  Matrix x(rows, p);
  for (int r = 0; r < rows; ++r) {
    int c = 0;
    for (const auto& b : blocks) {
      const double g = n01(rng);
      const double a = std::sqrt(b.rho), e = std::sqrt(1.0 - b.rho);
      for (int j = 0; j < b.size; ++j) x(r, c++) = a * g + e * n01(rng);
    }
  }
  return x;
}

/// Var(x'beta) under the one-factor block model: rho (sum b)^2 + (1 - rho) sum b^2 per block.
inline double block_signal_var(const std::vector<Block>& blocks) {
  double v = 0.0;
  for (const auto& b : blocks) {
    double s = 0.0, s2 = 0.0;
    for (double c : b.coef) {
      s += c;
      s2 += c * c;
    }
    v += b.rho * s * s + (1.0 - b.rho) * s2;
  }
  return v;
}

inline std::vector<Block> blocks_for(const DgpSpec& spec) {
  switch (spec.kind) {
    case DgpKind::Setting1: {
      const std::vector<double> c{0.1, 0.4, 0.7, 1.0};
      return {{300, 0.1, c}, {300, 0.4, c}, {300, 0.8, c}};
    }
    case DgpKind::Setting2: return {{spec.p > 0 ? spec.p : 2000, 0.0, {1, 1, 1, 1, 1}}};
    case DgpKind::Setting3: {
      const std::vector<double> c{1.0, 1.0};
      return {{500, 0.1, c}, {500, 0.4, c}, {500, 0.7, c}, {500, 0.9, c}};
    }
    default: throw Error(ErrorKind::InvalidArgument, "not a block design");
  }
}

inline SimData generate_iid(const DgpSpec& spec, Rng& rng) {
  const auto blocks = blocks_for(spec);
  SimData d;
  int p = 0;
  for (const auto& b : blocks) p += b.size;
  d.beta = Vector::Zero(p);
  int offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < b.coef.size(); ++j) {
      d.beta(offset + static_cast<int>(j)) = b.coef[j];
      d.truth.push_back(offset + static_cast<int>(j));
    }
    offset += b.size;
  }
  d.sigma2 = block_signal_var(blocks) * (1.0 - spec.r2) / spec.r2;
  const double sd = std::sqrt(d.sigma2);
  std::normal_distribution<double> n01;
  const auto response = [&](const Matrix& x) {
    Vector y = x * d.beta;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * n01(rng);
    return y;
  };
  d.x_train = block_design(spec.t, blocks, rng);
  d.y_train = response(d.x_train);
  d.x_test = block_design(spec.test_size, blocks, rng);
  d.y_test = response(d.x_test);
  return d;
}

/// Var of the FA-vs-VS response signal, from the AR(1) factor moments.
inline double favsvs_signal_var(FaMechanism mech) {
  double v = 0.0;
  for (const auto& g : kFaGroups) {
    const double vf = g.innovation_var / (1.0 - g.phi * g.phi);
    if (mech == FaMechanism::FromFactors) {
      v += vf * (0.64 + 0.16 + 2.0 * 0.32 * g.phi);
    } else {
      // a_t = 1.2 f_t + 0.8 e_1t + 0.4 e_2t; signal a_t + a_{t-1}.
      v += 1.44 * 2.0 * vf * (1.0 + g.phi) + 2.0 * (0.64 + 0.16) * g.noise_var;
    }
  }
  return v;
}

inline SimData generate_favsvs(const DgpSpec& spec, Rng& rng) {
  std::normal_distribution<double> n01;
  const int groups = static_cast<int>(kFaGroups.size());
  const int vars = groups * kFaPerGroup;
  const int pre = kFaLags - 1;
  const int total = spec.t + pre;
  Matrix f(total, groups), x(total, vars);
  for (int i = 0; i < groups; ++i) {
    const auto& g = kFaGroups[static_cast<std::size_t>(i)];
    const double e = std::sqrt(g.innovation_var), ns = std::sqrt(g.noise_var);
    f(0, i) = std::sqrt(g.innovation_var / (1.0 - g.phi * g.phi)) * n01(rng);
    for (int t = 1; t < total; ++t) f(t, i) = g.phi * f(t - 1, i) + e * n01(rng);
    for (int j = 0; j < kFaPerGroup; ++j) {
      for (int t = 0; t < total; ++t) x(t, i * kFaPerGroup + j) = f(t, i) + ns * n01(rng);
    }
  }
  SimData d;
  d.sigma2 = favsvs_signal_var(spec.mechanism) * (1.0 - spec.r2) / spec.r2;
  const double sd = std::sqrt(d.sigma2);
  const int p = vars * kFaLags;
  d.beta = Vector::Zero(p);
  if (spec.mechanism == FaMechanism::FromPredictors) {
    for (int i = 0; i < groups; ++i) {
      for (int lag = 0; lag < 2; ++lag) {
        d.beta((i * kFaPerGroup) * kFaLags + lag) = 0.8;
        d.beta((i * kFaPerGroup + 1) * kFaLags + lag) = 0.4;
      }
    }
    for (int c = 0; c < p; ++c) {
      if (d.beta(c) != 0.0) d.truth.push_back(c);
    }
  }
  Matrix design(spec.t, p);
  Vector y(spec.t);
  for (int t = 0; t < spec.t; ++t) {
    const int s = t + pre;
    for (int v = 0; v < vars; ++v) {
      for (int lag = 0; lag < kFaLags; ++lag) design(t, v * kFaLags + lag) = x(s - lag, v);
    }
    double signal = 0.0;
    if (spec.mechanism == FaMechanism::FromPredictors) {
      signal = design.row(t).dot(d.beta);
    } else {
      for (int i = 0; i < groups; ++i) signal += 0.8 * f(s, i) + 0.4 * f(s - 1, i);
    }
    y(t) = signal + sd * n01(rng);
  }
  for (int v = 0; v < vars; ++v) {
    const std::string id = "x" + std::to_string(v / kFaPerGroup + 1) + "_" + std::to_string(v % kFaPerGroup + 1);
    for (int lag = 0; lag < kFaLags; ++lag) d.meta.push_back({id, lag});
  }
  const int train = spec.t - kFaTestRows;
  d.x_train = design.topRows(train);
  d.x_test = design.bottomRows(kFaTestRows);
  d.y_train = y.head(train);
  d.y_test = y.tail(kFaTestRows);
  const Matrix z = x.bottomRows(spec.t);
  d.z_train = z.topRows(train);
  d.z_test = z.bottomRows(kFaTestRows);
  d.factors = f.bottomRows(spec.t);
  return d;
}

}  // namespace detail

inline SimData generate(const DgpSpec& spec, std::uint64_t seed) {
  if (spec.t < 10 || spec.r2 <= 0.0 || spec.r2 >= 1.0) throw Error(ErrorKind::InvalidArgument, "invalid simulation spec");
  Rng rng(seed);
  if (spec.kind == DgpKind::FaVsVs) {
    if (spec.t <= kFaTestRows + 20) throw Error(ErrorKind::InvalidArgument, "FA-vs-VS needs T > 70");
    return detail::generate_favsvs(spec, rng);
  }
  return detail::generate_iid(spec, rng);
}

struct EvalReport {
  double precision = kNaN;
  double recall = kNaN;
  double dc = kNaN;
  double mspe = kNaN;
  double r_squared = kNaN;
  double minutes = 0.0;
  int selected = 0;
  int tp = 0, fp = 0, fn = 0;
  std::vector<int> hits;  // truth indices recovered
};

/// Confusion counts over supports. An empty truth leaves precision, recall and DC NaN;
/// an empty selection against a nonempty truth scores zero.
inline EvalReport confusion(const Support& truth, const Support& selected) {
  EvalReport r;
  r.selected = static_cast<int>(selected.size());
  for (int s : selected) {
    if (std::find(truth.begin(), truth.end(), s) != truth.end()) {
      ++r.tp;
      r.hits.push_back(s);
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<int>(truth.size()) - r.tp;
  if (truth.empty()) return r;
  r.precision = selected.empty() ? 0.0 : static_cast<double>(r.tp) / (r.tp + r.fp);
  r.recall = static_cast<double>(r.tp) / (r.tp + r.fn);
  r.dc = 2.0 * r.tp / (2.0 * r.tp + r.fp + r.fn);
  return r;
}

inline EvalReport evaluate(const Support& truth, const SubsetModel& model, const Matrix& x_test, const Vector& y_test) {
  EvalReport r = confusion(truth, model.support);
  r.mspe = (y_test - model.predict(x_test)).squaredNorm() / static_cast<double>(y_test.size());
  r.r_squared = model.r_squared;
  return r;
}

struct Summary {
  double mean = kNaN;
  double se = kNaN;
  int n = 0;
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  double sum = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) {
      sum += x;
      ++s.n;
    }
  }
  if (s.n == 0) return s;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
  }
  s.se = s.n > 1 ? std::sqrt(ss / (s.n - 1) / s.n) : 0.0;
  return s;
}

struct StudyConfig {
  DgpSpec dgp;
  std::vector<std::string> methods{"FS", "IHT", "HTP", "adaLASSO"};
  int reps = 20;
  SelectionPlan plan;
  VsConfig vs;
  std::uint64_t seed = 1;
  int threads = 1;
};

inline int study_k_max(DgpKind kind) {
  switch (kind) {
    case DgpKind::Setting1: return 20;
    case DgpKind::FaVsVs: return 25;
    default: return 15;
  }
}

inline SelectionPlan default_plan(DgpKind kind) {
  if (kind == DgpKind::FaVsVs) return {CriterionKind::ForwardCV, 5, kFaTestRows};
  return {CriterionKind::KFold, 5, 0};
}

inline bool is_vs_method(const std::string& m) { return parse_solver(m).has_value(); }

inline void validate_methods(const std::vector<std::string>& methods) {
  for (const auto& m : methods) {
    if (m == "true" || m == "FA_BIC" || m == "FA_FCV") continue;
    const auto s = parse_solver(m);
    if (!s || *s == SolverKind::BE) throw Error(ErrorKind::ConfigInvalid, "unknown solver '" + m + "'");
  }
}

namespace detail {

inline EvalReport run_fa(const SimData& d, CriterionKind kind, const SelectionPlan& plan) {
  const auto fit = extract_factors(d.z_train, kExtractedFactors);
  const auto train = static_cast<Eigen::Index>(d.y_train.size());
  const auto test = static_cast<Eigen::Index>(d.y_test.size());
  Matrix f(train + test, kExtractedFactors);
  f.topRows(train) = fit.factors;
  f.bottomRows(test) = project_factors(fit, d.z_test);
  Vector y(train + test);
  y << d.y_train, d.y_test;
  std::vector<int> rows(static_cast<std::size_t>(train));
  std::iota(rows.begin(), rows.end(), 0);
  const auto sel = select_fa(y, y, f, fa_grid(5, 0, 6), {kind, plan.folds, plan.validation_length}, rows);
  EvalReport r;
  double s = 0.0;
  for (Eigen::Index t = train; t < train + test; ++t) {
    const double e = y(t) - sel.model.predict(y, f, t);
    s += e * e;
  }
  r.mspe = s / static_cast<double>(test);
  double sst = 0.0;
  double mu = 0.0;
  for (int t : sel.model.rows) mu += y(t);
  mu /= static_cast<double>(sel.model.rows.size());
  for (int t : sel.model.rows) sst += (y(t) - mu) * (y(t) - mu);
  r.r_squared = r_squared_from(sel.model.sse, sst);
  r.selected = sel.model.spec.d;
  return r;
}

}  // namespace detail

/// One method on one generated data set. Predictors are standardized on the training rows.
inline EvalReport run_method(const std::string& method, const SimData& d, const StudyConfig& cfg, std::uint64_t rep) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport r;
  if (method == "FA_BIC" || method == "FA_FCV") {
    if (d.z_train.size() == 0) throw Error(ErrorKind::NotApplicable, "FA needs the FA-vs-VS design");
    r = detail::run_fa(d, method == "FA_BIC" ? CriterionKind::BIC : CriterionKind::ForwardCV, cfg.plan);
  } else {
    const auto st = Standardizer::fit(d.x_train);
    const RegressionProblem pr(st.apply(d.x_train), d.y_train, d.meta, true);
    const Matrix xt = st.apply(d.x_test);
    if (method == "true") {
      r = evaluate(d.truth, refit_model(pr, d.truth, SolverKind::FS), xt, d.y_test);
    } else {
      const SolverKind solver = *parse_solver(method);
      VsConfig vs = cfg.vs;
      vs.seed = derive_seed(cfg.seed, method, rep);
      vs.smc.seed = vs.seed;
      Rng rng = make_rng(cfg.seed, method + "-cv", rep);
      const auto fit = select_vs(pr, solver, vs, cfg.plan, rng);
      r = evaluate(d.truth, fit.model, xt, d.y_test);
    }
  }
  r.minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  return r;
}

struct MethodSummary {
  std::string method;
  Summary mspe, r_squared, dc, precision, recall, selected, minutes;
  int failures = 0;
  std::map<int, int> hits;
  std::vector<EvalReport> reports;
};

struct StudyTable {
  DgpSpec dgp;
  int reps = 0;
  std::vector<MethodSummary> rows;

  const MethodSummary* find(const std::string& method) const {
    for (const auto& r : rows) {
      if (r.method == method) return &r;
    }
    return nullptr;
  }
};

/// Runs every method on `reps` data sets. Repetition seeds derive from the master seed
/// and the repetition index only, so adding a method leaves the others' draws unchanged.
inline StudyTable run_study(const StudyConfig& cfg) {
  validate_methods(cfg.methods);
  StudyTable table;
  table.dgp = cfg.dgp;
  table.reps = cfg.reps;
  if (cfg.reps <= 0) return table;
  struct Cell {
    std::optional<EvalReport> report;
  };
  const std::size_t nm = cfg.methods.size();
  std::vector<std::vector<Cell>> cells(static_cast<std::size_t>(cfg.reps), std::vector<Cell>(nm));
  const auto work = [&](int rep) {
    const auto data = generate(cfg.dgp, derive_seed(cfg.seed, "data", static_cast<std::uint64_t>(rep)));
    for (std::size_t m = 0; m < nm; ++m) {
      try {
        cells[static_cast<std::size_t>(rep)][m].report = run_method(cfg.methods[m], data, cfg, static_cast<std::uint64_t>(rep));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigInvalid || e.kind() == ErrorKind::NotApplicable) throw;
      }
    }
  };
  const int threads = std::max(1, std::min(cfg.threads, cfg.reps));
  if (threads == 1) {
    for (int rep = 0; rep < cfg.reps; ++rep) work(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::future<void>> pool;
    for (int w = 0; w < threads; ++w) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (int rep = next++; rep < cfg.reps; rep = next++) work(rep);
      }));
    }
    for (auto& f : pool) f.get();
  }
  for (std::size_t m = 0; m < nm; ++m) {
    MethodSummary s;
    s.method = cfg.methods[m];
    std::vector<double> mspe, r2, dc, prec, rec, size, mins;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const auto& c = cells[static_cast<std::size_t>(rep)][m];
      if (!c.report) {
        ++s.failures;
        continue;
      }
      const auto& r = *c.report;
      mspe.push_back(r.mspe);
      r2.push_back(r.r_squared);
      dc.push_back(r.dc);
      prec.push_back(r.precision);
      rec.push_back(r.recall);
      size.push_back(r.selected);
      mins.push_back(r.minutes);
      for (int h : r.hits) ++s.hits[h];
      s.reports.push_back(r);
    }
    s.mspe = summarize(mspe);
    s.r_squared = summarize(r2);
    s.dc = summarize(dc);
    s.precision = summarize(prec);
    s.recall = summarize(rec);
    s.selected = summarize(size);
    s.minutes = summarize(mins);
    table.rows.push_back(std::move(s));
  }
  return table;
}

inline std::string format_cell(const Summary& s, int digits = 2) {
  if (s.n == 0 || !std::isfinite(s.mean)) return "--";
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << s.mean << " (" << s.se << ")";
  return o.str();
}

/// Criteria by row, methods by column, "mean (SE)" cells.
inline std::string study_markdown(const StudyTable& t) {
  std::ostringstream o;
  o << "| criterion |";
  for (const auto& r : t.rows) o << ' ' << r.method << " |";
  o << "\n|---|";
  for (std::size_t i = 0; i < t.rows.size(); ++i) o << "---|";
  o << '\n';
  const auto line = [&](const char* name, Summary MethodSummary::*field) {
    o << "| " << name << " |";
    for (const auto& r : t.rows) o << ' ' << format_cell(r.*field) << " |";
    o << '\n';
  };
  line("MSPE", &MethodSummary::mspe);
  line("R2", &MethodSummary::r_squared);
  line("DC", &MethodSummary::dc);
  line("precision", &MethodSummary::precision);
  line("recall", &MethodSummary::recall);
  line("size", &MethodSummary::selected);
  line("minutes", &MethodSummary::minutes);
  o << "| failures |";
  for (const auto& r : t.rows) o << ' ' << r.failures << " |";
  o << '\n';
  return o.str();
}

/// No timings, so a rerun of the same config is byte-identical.
inline std::string study_csv(const StudyTable& t) {
  std::ostringstream o;
  o.precision(10);
  o << "method,criterion,mean,se,n,failures\n";
  for (const auto& r : t.rows) {
    const std::pair<const char*, const Summary*> cols[] = {{"mspe", &r.mspe},      {"r2", &r.r_squared},
                                                           {"dc", &r.dc},          {"precision", &r.precision},
                                                           {"recall", &r.recall}, {"size", &r.selected}};
    for (const auto& [name, s] : cols) {
      o << r.method << ',' << name << ',' << s->mean << ',' << s->se << ',' << s->n << ',' << r.failures << '\n';
    }
  }
  return o.str();
}

}  // namespace bss
