#pragma once

// Sequential Monte Carlo search over ordered k-subsets. The target on ordered supports is
// f(U) ∝ exp(-SSE(U)); the bridge is f_j ∝ f^{gamma_j} I^{1-gamma_j}, where I is the initial
// sampler (f0, or the add/trim mixture when warm-started). Everything is kept in log space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "bss/linalg.hpp"
#include "bss/rng.hpp"
#include "bss/subset_model.hpp"

namespace bss {

struct SmcConfig {
  int particles = 1000;
  double ess_fraction = 0.5;
  double proposal_mix = 0.5;     // weight of the count-based proposal
  double warm_start_mix = 0.1;   // weight of the add/trim sampler in the initial mixture
  double boost_target = 5.0;     // cumulative acceptance per particle
  int max_mh_moves = 10;
  std::uint64_t seed = 1;
  double gamma_tolerance = 1e-6;
  double min_gamma_step = 1e-6;

  void validate() const {
    if (particles < 1) throw Error(ErrorKind::InvalidArgument, "SMC needs at least one particle");
    if (!(ess_fraction > 0.0 && ess_fraction < 1.0)) throw Error(ErrorKind::InvalidArgument, "ESS fraction must be in (0,1)");
    if (proposal_mix < 0.0 || proposal_mix > 1.0 || warm_start_mix < 0.0 || warm_start_mix > 1.0) {
      throw Error(ErrorKind::InvalidArgument, "mixing weights must be in [0,1]");
    }
    if (max_mh_moves < 1) throw Error(ErrorKind::InvalidArgument, "max MH moves must be >= 1");
  }
};

struct Particle {
  Support support;  // ordered: a permutation of k distinct indices
  double sse = kInf;
  double log_init = 0.0;  // log I(U)
};

struct SmcRound {
  double gamma = 0.0;
  double ess = 0.0;
  int distinct = 0;
  double best_sse = kInf;
  int mh_passes = 0;
  double acceptance = 0.0;  // cumulative accepted moves per particle
};

struct SmcDiagnostics {
  std::vector<SmcRound> rounds;
  long long evaluations = 0;  // SSE computations (cache misses)
  long long proposals = 0;
  long long accepted = 0;
};

struct TemperingState {
  double gamma = 0.0;
  int round = 0;
  std::vector<Particle> particles;
  Particle best;
};

inline double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// (sum w)^2 / sum w^2 for weights exp(log_w), computed stably.
inline double effective_sample_size(const std::vector<double>& log_w) {
  double top = -kInf;
  for (double v : log_w) top = std::max(top, v);
  if (top == -kInf) return 0.0;
  double s = 0.0, s2 = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - top);
    s += w;
    s2 += w * w;
  }
  return s * s / s2;
}

/// Systematic resampling: returns `m` ancestor indices.
inline std::vector<int> systematic_resample(const std::vector<double>& weights, int m, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw Error(ErrorKind::InvalidArgument, "resampling weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "resampling weights are all zero");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u0 = unif(rng) / m;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m));
  double cum = weights[0] / total;
  std::size_t i = 0;
  for (int j = 0; j < m; ++j) {
    const double u = u0 + static_cast<double>(j) / m;
    while (u > cum && i + 1 < weights.size()) cum += weights[++i] / total;
    out.push_back(static_cast<int>(i));
  }
  return out;
}

/// Draws indices proportional to nonnegative weights, excluding a small set.
class WeightedIndexSampler {
 public:
  explicit WeightedIndexSampler(const Vector& weights) : dense_(weights) {
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights(i) > 0.0) {
        index_.push_back(static_cast<int>(i));
        total_ += weights(i);
        cum_.push_back(total_);
      }
    }
  }

  double weight(int i) const { return dense_(i); }
  double total() const { return total_; }

  double mass_of(std::span<const int> idx) const {
    double s = 0.0;
    for (int i : idx) s += dense_(i);
    return s;
  }

  /// Returns -1 when every positive-weight index is excluded.
  int sample(std::span<const int> excluded, Rng& rng) const {
    const double avail = total_ - mass_of(excluded);
    if (index_.empty() || avail <= total_ * 1e-12) return -1;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto is_excluded = [&](int c) { return std::find(excluded.begin(), excluded.end(), c) != excluded.end(); };
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double u = unif(rng) * total_;
      auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
      if (it == cum_.end()) --it;
      const int c = index_[static_cast<std::size_t>(it - cum_.begin())];
      if (!is_excluded(c)) return c;
    }
    double u = unif(rng) * avail;
    int last = -1;
    for (int c : index_) {
      if (is_excluded(c)) continue;
      last = c;
      u -= dense_(c);
      if (u <= 0.0) return c;
    }
    return last;
  }

 private:
  Vector dense_;
  std::vector<int> index_;
  std::vector<double> cum_;
  double total_ = 0.0;
};

/// log f0 of an ordered support: q_{i1} * q_{i2}/(1 - q_{i1}) * ...
inline double sequential_log_prob(const Vector& q, std::span<const int> u) {
  double lp = 0.0, used = 0.0;
  for (int i : u) {
    const double rem = 1.0 - used;
    if (rem <= 0.0) return -kInf;
    lp += std::log(q(i)) - std::log(rem);
    used += q(i);
  }
  return lp;
}

struct SupportHash {
  std::size_t operator()(const Support& s) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int v : s) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

/// Problem-level data shared by every SMC run on one design: the Gram-based SSE
/// evaluator, the SSE cache keyed by sorted support, and the inclusion probabilities q.
class SmcContext {
 public:
  explicit SmcContext(const RegressionProblem& problem) : problem_(problem), eval_(problem) {
    const int p = problem.cols();
    Vector r2(p);
    for (int i = 0; i < p; ++i) {
      const double n = problem.col_sq_norm()(i);
      r2(i) = (n > 0.0 && problem.sst() > 0.0) ? problem.xty()(i) * problem.xty()(i) / (n * problem.sst()) : 0.0;
    }
    const double top = r2.maxCoeff();
    if (!(top > 0.0)) {
      degenerate_r2_ = true;
      q_ = Vector::Constant(p, 1.0 / p);
    } else {
      q_ = r2.cwiseMax(top * 1e-10);
      q_ /= q_.sum();
    }
    q_sampler_.emplace(q_);
  }

  const RegressionProblem& problem() const { return problem_; }
  const Vector& q() const { return q_; }
  const WeightedIndexSampler& q_sampler() const { return *q_sampler_; }
  bool degenerate_r2() const { return degenerate_r2_; }
  long long evaluations() const { return evaluations_; }

  double sse(const Support& ordered) {
    Support key = ordered;
    std::sort(key.begin(), key.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > kCacheLimit) cache_.clear();
    const double v = eval_(key);
    ++evaluations_;
    cache_.emplace(std::move(key), v);
    return v;
  }

  double log_f0(std::span<const int> u) const { return sequential_log_prob(q_, u); }

 private:
  static constexpr std::size_t kCacheLimit = 2'000'000;
  const RegressionProblem& problem_;
  SubsetSseEvaluator eval_;
  Vector q_;
  std::optional<WeightedIndexSampler> q_sampler_;
  bool degenerate_r2_ = false;
  std::unordered_map<Support, double, SupportHash> cache_;
  long long evaluations_ = 0;
};

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

class SmcSampler {
 public:
  /// `warm` (an SMC model of another size) switches the initial sampler to the add/trim
  /// mixture omega' T(U; warm) + (1 - omega') f0(U).
  SmcSampler(SmcContext& ctx, int k, SmcConfig cfg, std::optional<SubsetModel> warm = std::nullopt)
      : ctx_(ctx), k_(k), cfg_(cfg), rng_(derive_seed(cfg.seed, "smc", static_cast<std::uint64_t>(k))) {
    cfg_.validate();
    const auto& pr = ctx.problem();
    if (k < 1 || k >= pr.rows() || k > pr.cols()) throw Error(ErrorKind::InvalidK, "k=" + std::to_string(k) + " out of range");
    if (warm) {
      if (warm->solver != SolverKind::SMC) throw Error(ErrorKind::InvalidArgument, "warm start needs an SMC model");
      if (warm->support.empty()) throw Error(ErrorKind::InvalidArgument, "warm start support is empty");
      warm_ = warm->support;
      std::sort(warm_->begin(), warm_->end());
    }
  }

  int k() const { return k_; }
  const SmcConfig& config() const { return cfg_; }
  const SmcDiagnostics& diagnostics() const { return diag_; }
  Rng& rng() { return rng_; }

  /// log T(U; warm) for the add/trim sampler.
  double log_trim_add(std::span<const int> u) const {
    const Support& base = *warm_;
    const int kb = static_cast<int>(base.size());
    if (k_ < kb) {
      if (!std::is_sorted(u.begin(), u.end())) return -kInf;
      for (int i : u) {
        if (!std::binary_search(base.begin(), base.end(), i)) return -kInf;
      }
      return -log_binomial(kb, k_);
    }
    if (!std::equal(base.begin(), base.end(), u.begin())) return -kInf;
    double lp = 0.0, used = ctx_.q_sampler().mass_of(base);
    for (int t = kb; t < k_; ++t) {
      const int i = u[static_cast<std::size_t>(t)];
      lp += std::log(ctx_.q()(i)) - std::log(1.0 - used);
      used += ctx_.q()(i);
    }
    return lp;
  }

  double log_init(std::span<const int> u) const {
    if (!warm_) return ctx_.log_f0(u);
    const double w = cfg_.warm_start_mix;
    const double a = w > 0.0 ? std::log(w) + log_trim_add(u) : -kInf;
    const double b = w < 1.0 ? std::log1p(-w) + ctx_.log_f0(u) : -kInf;
    return log_sum_exp(a, b);
  }

  Particle make_particle(Support u) {
    Particle p;
    p.sse = ctx_.sse(u);
    p.log_init = log_init(u);
    p.support = std::move(u);
    note(p);
    return p;
  }

  Support draw_f0() {
    Support u;
    u.reserve(static_cast<std::size_t>(k_));
    for (int t = 0; t < k_; ++t) u.push_back(ctx_.q_sampler().sample(u, rng_));
    return u;
  }

  Support draw_trim_add() {
    Support u = *warm_;
    const int kb = static_cast<int>(u.size());
    if (k_ < kb) {
      std::shuffle(u.begin(), u.end(), rng_);
      u.resize(static_cast<std::size_t>(k_));
      std::sort(u.begin(), u.end());
      return u;
    }
    for (int t = kb; t < k_; ++t) u.push_back(ctx_.q_sampler().sample(u, rng_));
    return u;
  }

  TemperingState initial_sample() {
    TemperingState st;
    std::bernoulli_distribution from_warm(warm_ ? cfg_.warm_start_mix : 0.0);
    st.particles.reserve(static_cast<std::size_t>(cfg_.particles));
    for (int m = 0; m < cfg_.particles; ++m) {
      st.particles.push_back(make_particle(warm_ && from_warm(rng_) ? draw_trim_add() : draw_f0()));
    }
    st.best = best_;
    return st;
  }

  /// Log incremental weights per unit of gamma: -SSE(U) - log I(U).
  static std::vector<double> unit_log_weights(const TemperingState& st) {
    std::vector<double> out;
    out.reserve(st.particles.size());
    for (const auto& p : st.particles) out.push_back(std::isfinite(p.sse) ? -p.sse - p.log_init : -kInf);
    return out;
  }

  static double ess_at(const std::vector<double>& unit, double step) {
    std::vector<double> lw(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) lw[i] = unit[i] == -kInf ? -kInf : step * unit[i];
    return effective_sample_size(lw);
  }

  /// Largest gamma' in (gamma, 1] with ESS >= eta M, by bisection on the increment.
  double choose_next_gamma(const TemperingState& st) const {
    if (st.gamma >= 1.0) throw Error(ErrorKind::InvalidArgument, "gamma already reached 1");
    const auto unit = unit_log_weights(st);
    const double bound = cfg_.ess_fraction * static_cast<double>(st.particles.size());
    const double room = 1.0 - st.gamma;
    if (ess_at(unit, room) >= bound) return 1.0;
    double lo = 0.0, hi = room;
    while (hi - lo > cfg_.gamma_tolerance) {
      const double mid = 0.5 * (lo + hi);
      (ess_at(unit, mid) >= bound ? lo : hi) = mid;
    }
    const double next = st.gamma + std::max(lo, cfg_.min_gamma_step);
    return std::min(next, 1.0);
  }

  /// Reweights to `next_gamma`, resamples, and returns the ESS of the weights used.
  double reweight_resample(TemperingState& st, double next_gamma) {
    const auto unit = unit_log_weights(st);
    const double step = next_gamma - st.gamma;
    std::vector<double> lw(unit.size());
    double top = -kInf;
    for (std::size_t i = 0; i < unit.size(); ++i) {
      lw[i] = unit[i] == -kInf ? -kInf : step * unit[i];
      top = std::max(top, lw[i]);
    }
    const double ess = effective_sample_size(lw);
    std::vector<double> w(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) w[i] = std::exp(lw[i] - top);
    const auto anc = systematic_resample(w, static_cast<int>(st.particles.size()), rng_);
    std::vector<Particle> next;
    next.reserve(anc.size());
    for (int a : anc) next.push_back(st.particles[static_cast<std::size_t>(a)]);
    st.particles = std::move(next);
    st.gamma = next_gamma;
    return ess;
  }

  /// log f_gamma(U) up to a constant.
  static double log_target(const Particle& p, double gamma) {
    if (!std::isfinite(p.sse)) return -kInf;
    return -gamma * p.sse + (1.0 - gamma) * p.log_init;
  }

  struct Proposal {
    const WeightedIndexSampler* counts;
    double mix;
  };

  /// log h(seq | kept) under the omega-mixture of the count-based and q-based sequential
  /// samplers. A count-based step with no available mass falls back to q.
  double log_proposal(const Proposal& prop, const Support& kept, std::span<const int> seq) const {
    Support excluded = kept;
    double lc = 0.0, lq = 0.0;
    const auto& qs = ctx_.q_sampler();
    for (int i : seq) {
      const double q_avail = qs.total() - qs.mass_of(excluded);
      const double step_q = std::log(qs.weight(i)) - std::log(q_avail);
      lq += step_q;
      const double c_avail = prop.counts->total() - prop.counts->mass_of(excluded);
      if (c_avail <= prop.counts->total() * 1e-12) {
        lc += step_q;
      } else {
        const double c = prop.counts->weight(i);
        lc += c > 0.0 ? std::log(c) - std::log(c_avail) : -kInf;
      }
      excluded.push_back(i);
    }
    const double a = prop.mix > 0.0 ? std::log(prop.mix) + lc : -kInf;
    const double b = prop.mix < 1.0 ? std::log1p(-prop.mix) + lq : -kInf;
    return log_sum_exp(a, b);
  }

  /// One MH move of `p` at temperature gamma. Returns true when accepted.
  bool mh_move(Particle& p, double gamma, const Proposal& prop) {
    const int k = k_;
    const int max_a = std::max(1, (k + 1) / 2);
    const int a = std::uniform_int_distribution<int>(1, max_a)(rng_);
    std::vector<int> pos(static_cast<std::size_t>(k));
    std::iota(pos.begin(), pos.end(), 0);
    for (int i = 0; i < a; ++i) {
      const int j = std::uniform_int_distribution<int>(i, k - 1)(rng_);
      std::swap(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
    }
    pos.resize(static_cast<std::size_t>(a));
    std::sort(pos.begin(), pos.end());

    Support kept;
    for (int i = 0, c = 0; i < k; ++i) {
      if (c < a && pos[static_cast<std::size_t>(c)] == i) {
        ++c;
        continue;
      }
      kept.push_back(p.support[static_cast<std::size_t>(i)]);
    }
    std::vector<int> old_seq, new_seq;
    Support excluded = kept;
    const bool use_counts = std::bernoulli_distribution(prop.mix)(rng_);
    for (int t = 0; t < a; ++t) {
      old_seq.push_back(p.support[static_cast<std::size_t>(pos[static_cast<std::size_t>(t)])]);
      int draw = use_counts ? prop.counts->sample(excluded, rng_) : -1;
      if (draw < 0) draw = ctx_.q_sampler().sample(excluded, rng_);
      new_seq.push_back(draw);
      excluded.push_back(draw);
    }
    ++diag_.proposals;
    if (new_seq == old_seq) {
      ++diag_.accepted;
      return true;
    }
    Support cand = p.support;
    for (int t = 0; t < a; ++t) cand[static_cast<std::size_t>(pos[static_cast<std::size_t>(t)])] = new_seq[static_cast<std::size_t>(t)];
    Particle next = make_particle(std::move(cand));
    if (!std::isfinite(next.sse)) return false;
    const double log_ratio = log_target(next, gamma) - log_target(p, gamma) + log_proposal(prop, kept, old_seq) -
                             log_proposal(prop, kept, new_seq);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    if (std::log(u) < log_ratio) {
      p = std::move(next);
      ++diag_.accepted;
      return true;
    }
    return false;
  }

  /// Population MH passes at the state's gamma until the cumulative acceptance per
  /// particle reaches the target or `max_passes` passes ran.
  SmcRound support_boost(TemperingState& st, std::optional<int> max_passes = std::nullopt,
                         std::optional<double> target = std::nullopt) {
    Vector counts = Vector::Zero(ctx_.problem().cols());
    for (const auto& p : st.particles) {
      for (int i : p.support) counts(i) += 1.0;
    }
    const WeightedIndexSampler count_sampler(counts);
    const Proposal prop{&count_sampler, cfg_.proposal_mix};
    const int passes = max_passes.value_or(cfg_.max_mh_moves);
    const double goal = target.value_or(cfg_.boost_target);
    SmcRound r;
    r.gamma = st.gamma;
    long long accepted = 0;
    const auto m = static_cast<double>(st.particles.size());
    for (int pass = 0; pass < passes; ++pass) {
      for (auto& p : st.particles) accepted += mh_move(p, st.gamma, prop) ? 1 : 0;
      ++r.mh_passes;
      if (static_cast<double>(accepted) / m >= goal) break;
    }
    r.acceptance = static_cast<double>(accepted) / m;
    st.best = best_;
    r.best_sse = best_.sse;
    r.distinct = distinct_supports(st);
    return r;
  }

  static int distinct_supports(const TemperingState& st) {
    std::vector<Support> keys;
    keys.reserve(st.particles.size());
    for (const auto& p : st.particles) {
      Support s = p.support;
      std::sort(s.begin(), s.end());
      keys.push_back(std::move(s));
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<int>(std::unique(keys.begin(), keys.end()) - keys.begin());
  }

  /// Full run: initial sample, reweight/resample/boost rounds until gamma = 1, then the
  /// duplicated 2M sample is boosted once more.
  TemperingState run() {
    const long long evals_before = ctx_.evaluations();
    TemperingState st = initial_sample();
    while (st.gamma < 1.0) {
      const double next = choose_next_gamma(st);
      const double ess = reweight_resample(st, next);
      ++st.round;
      SmcRound r = support_boost(st);
      r.ess = ess;
      diag_.rounds.push_back(r);
    }
    const std::size_t m = st.particles.size();
    st.particles.reserve(2 * m);
    for (std::size_t i = 0; i < m; ++i) st.particles.push_back(st.particles[i]);
    SmcRound r = support_boost(st);
    r.ess = static_cast<double>(st.particles.size());
    diag_.rounds.push_back(r);
    diag_.evaluations = ctx_.evaluations() - evals_before;
    return st;
  }

  const Particle& best() const { return best_; }

 private:
  void note(const Particle& p) {
    if (p.sse < best_.sse) best_ = p;
  }

  SmcContext& ctx_;
  int k_;
  SmcConfig cfg_;
  Rng rng_;
  std::optional<Support> warm_;
  Particle best_;
  SmcDiagnostics diag_;
};

struct SmcResult {
  SubsetModel model;
  SmcDiagnostics diagnostics;
};

inline SmcResult smc_best_subset(SmcContext& ctx, int k, const SmcConfig& cfg,
                                 std::optional<SubsetModel> warm = std::nullopt) {
  SmcSampler sampler(ctx, k, cfg, std::move(warm));
  sampler.run();
  SmcResult out;
  out.model = refit_model(ctx.problem(), sampler.best().support, SolverKind::SMC);
  out.diagnostics = sampler.diagnostics();
  return out;
}

inline SmcResult smc_best_subset(const RegressionProblem& problem, int k, const SmcConfig& cfg) {
  SmcContext ctx(problem);
  return smc_best_subset(ctx, k, cfg);
}

/// Best-subset models for k = 1..k_max. Each k after the first is warm-started by add/trim
/// from k-1, or from `previous[k-1]` (same k, e.g. the last rolling origin) when given.
inline std::vector<SmcResult> smc_path(SmcContext& ctx, int k_max, const SmcConfig& cfg,
                                       const std::vector<SubsetModel>& previous = {}) {
  std::vector<SmcResult> out;
  for (int k = 1; k <= k_max; ++k) {
    std::optional<SubsetModel> warm;
    const auto idx = static_cast<std::size_t>(k - 1);
    if (idx < previous.size() && previous[idx].size() == k) {
      warm = previous[idx];
    } else if (!out.empty()) {
      warm = out.back().model;
    }
    out.push_back(smc_best_subset(ctx, k, cfg, std::move(warm)));
  }
  return out;
}

}  // namespace bss
