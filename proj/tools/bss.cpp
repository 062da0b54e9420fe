// bss: simulation studies, FRED-MD ingestion, rolling backtests and the exhaustive oracle check.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "bss/bss.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace bss;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Run {
  ExperimentConfig cfg;
  fs::path out;
  json manifest;
  std::ofstream log;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void stage(const std::string& name, double seconds) {
    manifest["stages"].push_back({{"stage", name}, {"seconds", seconds}});
    log << name << " " << seconds << "s\n";
    log.flush();
  }

  void write(const std::string& file, const std::string& body) {
    std::ofstream f(out / file, std::ios::binary);
    if (!f) throw Error(ErrorKind::InputMissing, "cannot write " + (out / file).string());
    f << body;
    manifest["outputs"].push_back(file);
  }

  void finish(const std::string& status) {
    manifest["status"] = status;
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream f(out / "manifest.json");
    f << manifest.dump(2) << '\n';
  }
};

template <typename F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InputMissing, path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json config_json(const ExperimentConfig& c) {
  json j = json::object();
  for (const auto& [k, v] : config_items(c)) j[k] = v;
  return j;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigInvalid: return 2;
    case ErrorKind::InputMissing: return 3;
    default: return 1;
  }
}

void write_error(const fs::path& out, const Error& e) {
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream f(out / "error.json");
  f << json{{"kind", to_string(e.kind())}, {"message", e.what()}}.dump(2) << '\n';
}

FredmdTable load_table(Run& run, std::string& checksum) {
  if (run.cfg.fredmd.empty()) throw Error(ErrorKind::ConfigInvalid, "fredmd path is required");
  const auto bytes = read_file(run.cfg.fredmd);
  checksum = checksum_hex(bytes);
  run.manifest["fredmd"] = {{"path", run.cfg.fredmd}, {"checksum", checksum}};
  if (!run.cfg.checksum.empty() && run.cfg.checksum != checksum) {
    throw Error(ErrorKind::ConfigInvalid, "checksum: file has " + checksum + ", config pins " + run.cfg.checksum);
  }
  FredmdTable t;
  run.stage("parse", timed([&] { t = parse_fredmd(bytes); }));
  run.manifest["fredmd"]["series"] = t.cols();
  run.manifest["fredmd"]["first_date"] = format_month(t.dates.front());
  run.manifest["fredmd"]["last_date"] = format_month(t.dates.back());
  run.manifest["fredmd"]["notes"] = t.notes;
  for (const auto& n : t.notes) std::cerr << "note: " << n << '\n';
  return t;
}

// Rows the backtest touches for horizon h: the first window through the last origin.
DatasetOptions span_options(const ExperimentConfig& c, const RollingConfig& r, int h) {
  DatasetOptions o;
  o.strategy = *parse_strategy(c.strategy);
  o.linear_imputation = c.linear_impute;
  o.span_begin = r.test_begin - h - r.window + 1;
  o.span_end = r.test_end - h;
  return o;
}

json dataset_json(const ForecastDataset& ds) {
  json dropped = json::array();
  for (const auto& d : ds.dropped) dropped.push_back({{"series", d.name}, {"reason", d.reason}});
  int flagged = 0;
  for (const auto& o : ds.outliers) flagged += static_cast<int>(o.size());
  return {{"target", to_string(ds.target)}, {"h", ds.h},          {"strategy", to_string(ds.strategy)},
          {"series", ds.n()},               {"p", ds.p()},         {"dropped", dropped},
          {"flagged_points", flagged},      {"interpolated", ds.interpolated}, {"checksum", ds.checksum}};
}

Target target_of(const ExperimentConfig& c) {
  const auto t = parse_target(c.target);
  if (!t) throw Error(ErrorKind::ConfigInvalid, "target = '" + c.target + "'");
  return *t;
}

void check_strategy(const ExperimentConfig& c) {
  if (!parse_strategy(c.strategy)) throw Error(ErrorKind::ConfigInvalid, "strategy = '" + c.strategy + "'");
}

void simulate(Run& run, const StudyConfig& sc) {
  StudyTable table;
  run.stage("study", timed([&] { table = run_study(sc); }));
  run.write("simulation.csv", study_csv(table));
  run.write("simulation.md", study_markdown(table));
  json minutes = json::object();
  for (const auto& r : table.rows) minutes[r.method] = r.minutes.mean;
  run.manifest["mean_minutes"] = minutes;
  std::cout << study_markdown(table);
}

void ingest(Run& run, const RollingConfig& rc) {
  std::string checksum;
  const auto table = load_table(run, checksum);
  const int h = run.cfg.horizons.front();
  ForecastDataset ds;
  run.stage("build", timed([&] { ds = build_dataset(table, target_of(run.cfg), h, span_options(run.cfg, rc, h), checksum); }));
  run.write("dataset.csv", dataset_csv(ds));
  run.manifest["dataset"] = dataset_json(ds);
  std::cout << ds.n() << " series retained, p = " << ds.p() << ", " << ds.dropped.size() << " dropped\n";
}

void backtest(Run& run, const RollingConfig& rc) {
  std::string checksum;
  const auto table = load_table(run, checksum);
  RollingReport report;
  report.target = target_of(run.cfg);
  run.manifest["datasets"] = json::array();
  for (int h : rc.horizons) {
    ForecastDataset ds;
    run.stage("build h=" + std::to_string(h),
              timed([&] { ds = build_dataset(table, report.target, h, span_options(run.cfg, rc, h), checksum); }));
    run.manifest["datasets"].push_back(dataset_json(ds));
    HorizonResult hr;
    run.stage("roll h=" + std::to_string(h), timed([&] { hr = roll_forecast(ds, rc); }));
    for (const auto& m : hr.methods) {
      run.manifest["methods"].push_back({{"h", h}, {"method", m.method}, {"minutes", m.minutes}, {"missing", m.missing}, {"errors", m.errors}});
    }
    report.horizons.push_back(std::move(hr));
  }
  run.write("report.csv", rolling_csv(report));
  run.write("forecasts.csv", forecasts_csv(report));
  run.write("frequency.csv", frequency_csv(report));
  std::string md = rolling_markdown(report);
  for (const auto& h : report.horizons) {
    const MethodResult* best = nullptr;
    for (const auto& m : h.methods) {
      if (m.method == "AR" || m.method == "FA" || !std::isfinite(m.ratio)) continue;
      if (!best || m.ratio < best->ratio) best = &m;
    }
    if (!best) continue;
    md += "\nh=" + std::to_string(h.h) + ", " + best->method + ":";
    for (const auto& s : frequent_predictors(best->frequency)) md += " " + s;
    md += '\n';
  }
  run.write("report.md", md);
  std::cout << md;
}

void oracle(Run& run, const OracleCheckConfig& oc) {
  std::vector<OracleRow> rows;
  run.stage("oracle", timed([&] { rows = oracle_check(oc); }));
  run.write("oracle.csv", oracle_csv(rows));
  json summary = json::object();
  for (const auto& s : oc.solvers) summary[std::string(to_string(*parse_solver(s)))] = 0;
  for (const auto& r : rows) {
    if (r.matched) summary[r.solver] = summary[r.solver].get<int>() + 1;
  }
  run.manifest["matched"] = summary;
  for (const auto& r : rows) std::cout << "seed " << r.seed << " " << r.solver << " " << (r.matched ? "optimal" : "suboptimal") << '\n';
  for (const auto& [k, v] : summary.items()) std::cout << k << ": " << v.get<int>() << "/" << oc.seeds << " optimal\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-subset selection experiments"};
  app.set_version_flag("--version", kVersion);
  std::string command, config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  app.add_option("command", command, "simulate | ingest | backtest | oracle-check")->required();
  app.add_option("--config", config_path, "key = value file");
  const std::pair<const char*, const char*> direct[] = {
      {"--seed", "seed"},         {"--out", "out"},       {"--threads", "threads"}, {"--setting", "setting"},
      {"--target", "target"},     {"--horizon", "horizon"}, {"--strategy", "strategy"}, {"--fredmd", "fredmd"},
      {"--T", "T"},               {"--reps", "reps"},     {"--p", "p"},             {"--k", "k"},
      {"--seeds", "seeds"},       {"--solvers", "solvers"}};
  for (const auto& [flag, key] : direct) app.add_option(flag, flags[key], std::string("config key ") + key);
  app.add_option("--set", sets, "any config key as key=value");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  fs::path out = "out";
  try {
    if (command == "oracle-check") cfg.solvers = OracleCheckConfig{}.solvers;
    if (!config_path.empty()) cfg = parse_config(read_file(config_path), cfg);
    if (command != "simulate" && command != "ingest" && command != "backtest" && command != "oracle-check") {
      throw Error(ErrorKind::ConfigInvalid, "command = '" + command + "'");
    }
    cfg.command = command;
    if (auto it = flags.find("out"); it != flags.end() && !it->second.empty()) cfg.out = it->second;
    out = cfg.out;
    for (const auto& [key, value] : flags) {
      if (value.empty() || key == "out") continue;
      // Backtests take their method list from --solvers.
      set_field(cfg, key == "solvers" && command == "backtest" ? "methods" : key, value);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::ConfigInvalid, "--set needs key=value, got '" + s + "'");
      set_field(cfg, detail::trim(std::string_view(s).substr(0, eq)), std::string_view(s).substr(eq + 1));
    }
    out = cfg.out;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    write_error(out, e);
    return exit_code(e.kind());
  }

  Run run;
  run.cfg = cfg;
  run.out = out;
  try {
    StudyConfig sc;
    RollingConfig rc;
    OracleCheckConfig oc;
    if (command == "simulate") sc = study_config(cfg);
    if (command == "ingest" || command == "backtest") {
      check_strategy(cfg);
      target_of(cfg);
      rc = rolling_config(cfg);
    }
    if (command == "oracle-check") oc = oracle_config(cfg);

    fs::create_directories(out);
    fs::remove(out / "error.json");
    run.log.open(out / "run.log");
    run.manifest = {{"command", command}, {"version", kVersion}, {"seed", cfg.seed}, {"config", config_json(cfg)},
                    {"outputs", json::array()}, {"stages", json::array()},
                    {"build", {{"compiler", __VERSION__}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION)}}}};
    run.write("config.txt", serialize_config(cfg));
    try {
      if (command == "simulate") simulate(run, sc);
      if (command == "ingest") ingest(run, rc);
      if (command == "backtest") backtest(run, rc);
      if (command == "oracle-check") oracle(run, oc);
    } catch (const Error& e) {
      run.manifest["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
      run.finish("error");
      throw;
    }
    run.finish("ok");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    write_error(out, e);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    write_error(out, Error(ErrorKind::InvalidArgument, e.what()));
    return 1;
  }
  return 0;
}
