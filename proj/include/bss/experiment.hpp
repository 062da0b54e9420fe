#pragma once

// Experiment configuration as flat key = value text, and its translation into the study,
// rolling and oracle configurations.

#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bss/harness.hpp"
#include "bss/oracle_check.hpp"
#include "bss/simulation.hpp"

namespace bss {

struct ExperimentConfig {
  std::string command = "simulate";
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 1;

  // simulate
  std::string setting = "2";  // 1, 2, 3, fa29, fa30
  int t = 200;
  int p = 0;  // 0: the setting's own dimension
  double r2 = 0.8;
  int reps = 20;
  int test_size = 100;
  std::vector<std::string> solvers{"FS", "IHT", "HTP", "adaLASSO"};
  int k_max = 0;  // 0: the setting's default
  std::string criterion = "auto";  // auto, kfold, fcv, bic, aic
  int folds = 5;
  int validation = 0;  // 0: 50 in simulations, 48 in backtests

  // solvers
  int smc_particles = 1000;
  double smc_ess = 0.5;
  int smc_max_moves = 10;
  double smc_boost_target = 5.0;
  double gds_step = 0.0;  // 0: step search
  int gds_max_iter = 500;
  int lambda_points = 100;

  // oracle-check
  int k = 3;
  int seeds = 20;

  // ingest / backtest
  std::string fredmd;
  std::string checksum;  // pinned vintage; empty: not checked
  std::string target = "emp";
  std::vector<int> horizons{1, 3, 6, 12};
  std::string strategy = "drop";
  bool linear_impute = false;
  int window = 240;
  std::string test_begin = "2015:01";
  std::string test_end = "2018:12";
  std::vector<std::string> methods{"FS", "SMC", "adaLASSO", "IHT", "HTP", "FA", "AR"};
  bool cosamp_sp = false;
};

namespace detail {

inline std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  for (auto part : split(s, ',')) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

[[noreturn]] inline void bad_field(std::string_view key, std::string_view value) {
  throw Error(ErrorKind::ConfigInvalid, std::string(key) + " = '" + std::string(value) + "'");
}

inline int to_int(std::string_view key, std::string_view v) {
  int out = 0;
  if (!parse_int(v, out)) bad_field(key, v);
  return out;
}

inline std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_field(key, v);
  return out;
}

inline double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (!parse_double(v, out)) bad_field(key, v);
  return out;
}

inline bool to_bool(std::string_view key, std::string_view v) {
  const auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  bad_field(key, v);
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define BSS_FIELD(name, member, fmt, parse) \
  Field { name, [](const ExperimentConfig& c) { return fmt(c.member); }, [](ExperimentConfig& c, std::string_view v) { c.member = parse(name, v); } }

inline std::string str(const std::string& s) { return s; }
inline std::string keep(std::string_view, std::string_view v) { return std::string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num64(std::uint64_t v) { return std::to_string(v); }
inline std::string flag(bool v) { return v ? "true" : "false"; }
inline std::vector<std::string> list(std::string_view, std::string_view v) { return split_list(v); }
inline std::vector<int> int_list(std::string_view key, std::string_view v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(to_int(key, s));
  return out;
}
inline std::string join_ints(const std::vector<int>& v) {
  std::vector<std::string> s;
  for (int x : v) s.push_back(std::to_string(x));
  return join(s);
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> f{
      BSS_FIELD("command", command, str, keep),
      BSS_FIELD("seed", seed, num64, to_u64),
      BSS_FIELD("out", out, str, keep),
      BSS_FIELD("threads", threads, num, to_int),
      BSS_FIELD("setting", setting, str, keep),
      BSS_FIELD("T", t, num, to_int),
      BSS_FIELD("p", p, num, to_int),
      BSS_FIELD("r2", r2, format_double, to_double),
      BSS_FIELD("reps", reps, num, to_int),
      BSS_FIELD("test_size", test_size, num, to_int),
      BSS_FIELD("solvers", solvers, join, list),
      BSS_FIELD("k_max", k_max, num, to_int),
      BSS_FIELD("criterion", criterion, str, keep),
      BSS_FIELD("folds", folds, num, to_int),
      BSS_FIELD("validation", validation, num, to_int),
      BSS_FIELD("smc.particles", smc_particles, num, to_int),
      BSS_FIELD("smc.ess", smc_ess, format_double, to_double),
      BSS_FIELD("smc.max_moves", smc_max_moves, num, to_int),
      BSS_FIELD("smc.boost_target", smc_boost_target, format_double, to_double),
      BSS_FIELD("gds.step", gds_step, format_double, to_double),
      BSS_FIELD("gds.max_iter", gds_max_iter, num, to_int),
      BSS_FIELD("lambda_points", lambda_points, num, to_int),
      BSS_FIELD("k", k, num, to_int),
      BSS_FIELD("seeds", seeds, num, to_int),
      BSS_FIELD("fredmd", fredmd, str, keep),
      BSS_FIELD("checksum", checksum, str, keep),
      BSS_FIELD("target", target, str, keep),
      BSS_FIELD("horizon", horizons, join_ints, int_list),
      BSS_FIELD("strategy", strategy, str, keep),
      BSS_FIELD("linear_impute", linear_impute, flag, to_bool),
      BSS_FIELD("window", window, num, to_int),
      BSS_FIELD("test_begin", test_begin, str, keep),
      BSS_FIELD("test_end", test_end, str, keep),
      BSS_FIELD("methods", methods, join, list),
      BSS_FIELD("cosamp_sp", cosamp_sp, flag, to_bool),
  };
  return f;
}

#undef BSS_FIELD

}  // namespace detail

inline void set_field(ExperimentConfig& c, std::string_view key, std::string_view value) {
  for (const auto& f : detail::fields()) {
    if (key == f.key) {
      f.set(c, detail::trim(value));
      return;
    }
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown key '" + std::string(key) + "'");
}

inline std::string get_field(const ExperimentConfig& c, std::string_view key) {
  for (const auto& f : detail::fields()) {
    if (key == f.key) return f.get(c);
  }
  throw Error(ErrorKind::ConfigInvalid, "unknown key '" + std::string(key) + "'");
}

inline std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : detail::fields()) out.emplace_back(f.key, f.get(c));
  return out;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_items(c)) out += k + " = " + v + "\n";
  return out;
}

/// `key = value` lines; '#' starts a comment, blank lines are skipped.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::ConfigInvalid, "line " + std::to_string(n) + " has no '='");
    set_field(base, detail::trim(body.substr(0, eq)), body.substr(eq + 1));
  }
  return base;
}

inline int parse_month(std::string_view key, std::string_view s) {
  int m = 0;
  if (!detail::parse_date(s, m)) detail::bad_field(key, s);
  return m;
}

inline CriterionKind criterion_for(const ExperimentConfig& c, CriterionKind fallback) {
  const auto l = detail::lower(c.criterion);
  if (l == "auto") return fallback;
  if (l == "kfold") return CriterionKind::KFold;
  if (l == "fcv") return CriterionKind::ForwardCV;
  if (l == "bic") return CriterionKind::BIC;
  if (l == "aic") return CriterionKind::AIC;
  detail::bad_field("criterion", c.criterion);
}

inline VsConfig vs_config(const ExperimentConfig& c) {
  VsConfig vs;
  vs.smc.particles = c.smc_particles;
  vs.smc.ess_fraction = c.smc_ess;
  vs.smc.max_mh_moves = c.smc_max_moves;
  vs.smc.boost_target = c.smc_boost_target;
  if (c.gds_step > 0.0) {
    vs.gds.step_size = c.gds_step;
    vs.step_search = false;
  }
  vs.gds.max_iter = c.gds_max_iter;
  vs.lambda_points = c.lambda_points;
  try {
    vs.smc.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigInvalid, e.what());
  }
  if (c.gds_max_iter < 1) detail::bad_field("gds.max_iter", std::to_string(c.gds_max_iter));
  if (c.lambda_points < 2) detail::bad_field("lambda_points", std::to_string(c.lambda_points));
  return vs;
}

inline StudyConfig study_config(const ExperimentConfig& c) {
  StudyConfig s;
  const auto l = detail::lower(c.setting);
  if (l == "1") {
    s.dgp.kind = DgpKind::Setting1;
  } else if (l == "2") {
    s.dgp.kind = DgpKind::Setting2;
  } else if (l == "3") {
    s.dgp.kind = DgpKind::Setting3;
  } else if (l == "fa29" || l == "favsvs-predictors") {
    s.dgp.kind = DgpKind::FaVsVs;
    s.dgp.mechanism = FaMechanism::FromPredictors;
  } else if (l == "fa30" || l == "favsvs-factors") {
    s.dgp.kind = DgpKind::FaVsVs;
    s.dgp.mechanism = FaMechanism::FromFactors;
  } else {
    detail::bad_field("setting", c.setting);
  }
  s.dgp.t = c.t;
  s.dgp.p = c.p;
  s.dgp.r2 = c.r2;
  s.dgp.test_size = c.test_size;
  if (c.t < 10) detail::bad_field("T", std::to_string(c.t));
  if (c.reps < 0) detail::bad_field("reps", std::to_string(c.reps));
  if (!(c.r2 > 0.0 && c.r2 < 1.0)) detail::bad_field("r2", format_double(c.r2));
  s.methods = c.solvers;
  validate_methods(s.methods);
  s.reps = c.reps;
  s.plan = default_plan(s.dgp.kind);
  s.plan.kind = criterion_for(c, s.plan.kind);
  s.plan.folds = c.folds;
  if (c.validation > 0) s.plan.validation_length = c.validation;
  s.vs = vs_config(c);
  s.vs.k_max = c.k_max > 0 ? c.k_max : study_k_max(s.dgp.kind);
  s.seed = c.seed;
  s.threads = std::max(1, c.threads);
  return s;
}

inline RollingConfig rolling_config(const ExperimentConfig& c) {
  RollingConfig r;
  r.window = c.window;
  r.validation = c.validation > 0 ? c.validation : 48;
  r.test_begin = parse_month("test_begin", c.test_begin);
  r.test_end = parse_month("test_end", c.test_end);
  r.horizons = c.horizons;
  for (int h : r.horizons) {
    if (h != 1 && h != 3 && h != 6 && h != 12) detail::bad_field("horizon", std::to_string(h));
  }
  if (r.horizons.empty()) detail::bad_field("horizon", "");
  r.methods = c.methods;
  r.allow_cosamp_sp = c.cosamp_sp;
  r.vs = vs_config(c);
  r.vs.k_max = c.k_max > 0 ? c.k_max : 20;
  r.seed = c.seed;
  r.threads = std::max(1, c.threads);
  for (int h : r.horizons) r.validate(h);
  return r;
}

inline OracleCheckConfig oracle_config(const ExperimentConfig& c) {
  OracleCheckConfig o;
  o.p = c.p > 0 ? c.p : 15;
  o.t = c.t;
  o.k = c.k;
  o.r2 = c.r2;
  o.seeds = c.seeds;
  o.solvers = c.solvers;
  o.particles = c.smc_particles;
  o.master = c.seed;
  if (o.k < 1 || o.k > o.p) detail::bad_field("k", std::to_string(o.k));
  if (o.p > 30) detail::bad_field("p", std::to_string(o.p));
  if (o.t < o.k + 2) detail::bad_field("T", std::to_string(o.t));
  for (const auto& s : o.solvers) {
    const auto k = parse_solver(s);
    if (!k || *k == SolverKind::AdaLasso) detail::bad_field("solvers", s);
  }
  return o;
}

}  // namespace bss
