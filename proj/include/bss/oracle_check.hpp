#pragma once

// Fixed-k solvers against exhaustive search on small enumerable instances.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "bss/gds.hpp"
#include "bss/greedy.hpp"
#include "bss/smc.hpp"

namespace bss {

inline constexpr double kOracleMatchTolerance = 1e-10;

struct OracleInstance {
  Matrix x;
  Vector y;
  Support truth;
};

/// iid N(0,1) design, unit coefficients on k random columns, noise scaled to the R^2.
inline OracleInstance oracle_instance(int p, int t, int k, double r2, std::uint64_t seed) {
  if (k < 1 || k > p || !(r2 > 0.0 && r2 < 1.0)) throw Error(ErrorKind::InvalidArgument, "oracle instance needs 1 <= k <= p, 0 < R2 < 1");
  Rng rng = make_rng(seed, "oracle-instance");
  std::normal_distribution<double> n01;
  OracleInstance in;
  in.x.resize(t, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < t; ++i) in.x(i, j) = n01(rng);
  }
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  in.truth.assign(idx.begin(), idx.begin() + k);
  std::sort(in.truth.begin(), in.truth.end());
  const double sigma = std::sqrt(k * (1.0 - r2) / r2);
  in.y = Vector::Zero(t);
  for (int j : in.truth) in.y += in.x.col(j);
  for (int i = 0; i < t; ++i) in.y(i) += sigma * n01(rng);
  return in;
}

struct ExhaustiveBest {
  Support support;
  double sse = kInf;
  long long visited = 0;
};

inline ExhaustiveBest exhaustive_best_subset(const RegressionProblem& pr, int k) {
  if (k < 1 || k > pr.cols()) throw Error(ErrorKind::InvalidK, "exhaustive search needs 1 <= k <= p");
  const SubsetSseEvaluator eval(pr);
  ExhaustiveBest best;
  Support s(static_cast<std::size_t>(k));
  std::iota(s.begin(), s.end(), 0);
  const int p = pr.cols();
  for (;;) {
    const double v = eval(s);
    ++best.visited;
    if (v < best.sse) {
      best.sse = v;
      best.support = s;
    }
    int i = k - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++s[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

inline SubsetModel fixed_k_fit(const RegressionProblem& pr, SolverKind solver, int k, const SmcConfig& smc) {
  switch (solver) {
    case SolverKind::FS: return forward_select(pr, k).models.back();
    case SolverKind::BE: return backward_eliminate(pr, k).models.back();
    case SolverKind::SMC: return smc_best_subset(pr, k, smc).model;
    case SolverKind::AdaLasso: throw Error(ErrorKind::ConfigInvalid, "adaLASSO has no fixed-k mode");
    default: {
      GdsConfig g;
      g.k = k;
      return gds_step_search(pr, g, solver).model;
    }
  }
}

struct OracleRow {
  std::uint64_t seed = 0;
  std::string solver;
  Support support;
  double sse = kNaN;
  double optimum = kNaN;
  bool matched = false;
  double gap = kNaN;  // sse / optimum - 1
  std::string error;
};

struct OracleCheckConfig {
  int p = 15;
  int t = 60;
  int k = 3;
  double r2 = 0.8;
  int seeds = 20;
  std::vector<std::string> solvers{"FS", "SMC", "IHT", "HTP"};
  int particles = 300;
  std::uint64_t master = 1;
};

inline std::vector<OracleRow> oracle_check(const OracleCheckConfig& cfg) {
  std::vector<SolverKind> kinds;
  for (const auto& s : cfg.solvers) {
    const auto k = parse_solver(s);
    if (!k) throw Error(ErrorKind::ConfigInvalid, "unknown solver '" + s + "'");
    if (*k == SolverKind::AdaLasso) throw Error(ErrorKind::ConfigInvalid, "adaLASSO has no fixed-k mode");
    kinds.push_back(*k);
  }
  std::vector<OracleRow> rows;
  for (int s = 0; s < cfg.seeds; ++s) {
    const auto seed = derive_seed(cfg.master, "oracle", static_cast<std::uint64_t>(s));
    const auto in = oracle_instance(cfg.p, cfg.t, cfg.k, cfg.r2, seed);
    const RegressionProblem pr(in.x, in.y);
    const auto best = exhaustive_best_subset(pr, cfg.k);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      OracleRow r;
      r.seed = static_cast<std::uint64_t>(s);
      r.solver = std::string(to_string(kinds[i]));
      r.optimum = best.sse;
      SmcConfig smc;
      smc.particles = cfg.particles;
      smc.seed = derive_seed(seed, "smc");
      try {
        const auto m = fixed_k_fit(pr, kinds[i], cfg.k, smc);
        r.support = m.support;
        r.sse = m.sse;
        r.gap = m.sse / best.sse - 1.0;
        r.matched = m.support == best.support || m.sse <= best.sse * (1.0 + kOracleMatchTolerance);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigInvalid) throw;
        r.error = e.what();
      }
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

inline std::string oracle_csv(const std::vector<OracleRow>& rows) {
  std::string out = "seed,solver,support,sse,optimum,matched,gap\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%d,%.6g\n", r.sse, r.optimum, r.matched ? 1 : 0, r.gap);
    out += std::to_string(r.seed) + "," + r.solver + ",\"" + detail::support_string(r.support) + "\"" + buf;
  }
  return out;
}

}  // namespace bss
