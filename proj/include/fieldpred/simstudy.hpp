#pragma once

// Coverage simulation for one-sided Bayesian prediction bounds under the
// hierarchical Weibull model: generate grouped type-I-censored data, fit,
// predict (t_c, t_w] failures, and score the bounds against the hidden truth.

#include <algorithm>
#include <array>
#include <exception>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/hier.hpp"
#include "fieldpred/likelihood.hpp"
#include "fieldpred/predict.hpp"
#include "fieldpred/priors.hpp"
#include "fieldpred/sampler.hpp"

namespace fieldpred {

struct Interval95 {
  double lower = 1.0;
  double upper = 2.0;
};

struct SimConfig {
  std::string name = "custom";
  int G = 5;
  double expected_r = 125.0;  // total expected failures before t_c
  double p_f = 0.20;
  double p_delta = 0.20;
  Interval95 tp_interval{4.0, 8.0};
  Interval95 sigma_interval{0.50, 0.75};
  // Per-group expected failures; when set, overrides expected_r / G.
  std::vector<double> group_expected;
  std::size_t n_datasets = 300;
  std::size_t calibration_draws = 50000;
  std::uint64_t seed = 20240101;
  double p = 0.05;  // quantile used for t_p

  void validate() const {
    if (G < 1) fail(ErrorCategory::config, "G must be >= 1");
    if (!(p_f > 0.0 && p_delta > 0.0 && p_f + p_delta < 1.0))
      fail(ErrorCategory::config, "need 0 < p_f < p_f + p_delta < 1");
    if (!group_expected.empty() && group_expected.size() != static_cast<std::size_t>(G))
      fail(ErrorCategory::config, "group_expected must list one value per group");
    if (group_expected.empty() && !(expected_r > 0.0)) fail(ErrorCategory::config, "expected_r must be > 0");
    for (double e : group_expected)
      if (!(e > 0.0)) fail(ErrorCategory::config, "group expected failures must be > 0");
    for (const auto& iv : {tp_interval, sigma_interval})
      if (!(iv.lower > 0.0 && iv.upper > iv.lower)) fail(ErrorCategory::config, "hyper interval needs 0 < lower < upper");
    if (n_datasets == 0 || calibration_draws == 0) fail(ErrorCategory::config, "n_datasets and calibration_draws must be > 0");
    if (!(p > 0.0 && p < 1.0)) fail(ErrorCategory::config, "quantile level p must lie in (0,1)");
  }

  /// n_g = E(r_g) / p_f rounded to the nearest integer, at least 1.
  std::vector<std::size_t> units_per_group() const {
    std::vector<std::size_t> n(static_cast<std::size_t>(G));
    for (std::size_t g = 0; g < n.size(); ++g) {
      const double e = group_expected.empty() ? expected_r / G : group_expected[g];
      n[g] = static_cast<std::size_t>(std::max(1.0, std::round(e / p_f)));
    }
    return n;
  }

  std::vector<std::string> group_names() const {
    std::vector<std::string> out;
    const int width = G >= 100 ? 3 : 2;
    for (int g = 1; g <= G; ++g) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "g%0*d", width, g);
      out.emplace_back(buf);
    }
    return out;
  }
};

/// Priors used when fitting simulated data.
inline PriorMap simulation_priors() {
  PriorMap m = default_lls_priors(true);
  m.insert_or_assign("eta_tp", PriorSpec::lognormal_interval(2.75, 19.70));
  m.insert_or_assign("eta_sigma", PriorSpec::lognormal_interval(0.08, 4.0));
  return m;
}

struct GroupParams {
  double tp = 1.0;
  double sigma = 1.0;
};

namespace detail {

inline GroupParams draw_one_group(const LogLocationScale& tp, const LogLocationScale& sg, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  GroupParams g;
  g.tp = std::exp(tp.location + tp.scale * z(rng));
  g.sigma = std::exp(sg.location + sg.scale * z(rng));
  return g;
}

}  // namespace detail

inline std::vector<GroupParams> draw_group_params(const SimConfig& cfg, std::mt19937_64& rng) {
  const auto tp = interval_to_lognormal(cfg.tp_interval.lower, cfg.tp_interval.upper);
  const auto sg = interval_to_lognormal(cfg.sigma_interval.lower, cfg.sigma_interval.upper);
  std::vector<GroupParams> out(static_cast<std::size_t>(cfg.G));
  for (auto& g : out) g = detail::draw_one_group(tp, sg, rng);
  return out;
}

struct CensorTimes {
  double t_c = 0.0;
  double t_w = 0.0;
};

namespace detail {

inline double sim_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = 0.0;
  while (x == 0.0) x = u(rng);
  return x;
}

// Bisection on log t for F(t) = target, F nondecreasing.
template <class F>
double solve_increasing(F&& cdf, double target, double lo, double hi) {
  if (!(cdf(lo) <= target && cdf(hi) >= target))
    fail(ErrorCategory::calibration, "censoring time not bracketed for target " + std::to_string(target));
  double a = std::log(lo), b = std::log(hi);
  for (int it = 0; it < 400 && b - a > 1e-11; ++it) {
    const double m = 0.5 * (a + b);
    (cdf(std::exp(m)) < target ? a : b) = m;
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace detail

/// Solves mean_j F(t; theta_j) = p_f and = p_f + p_delta over calibration draws.
inline CensorTimes calibrate_censor_times(const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(detail::stream_seed(cfg.seed, 0xCA11B7A7EULL));
  const auto tp = interval_to_lognormal(cfg.tp_interval.lower, cfg.tp_interval.upper);
  const auto sg = interval_to_lognormal(cfg.sigma_interval.lower, cfg.sigma_interval.upper);
  std::vector<LlsDistribution> dists;
  std::vector<double> tps;
  dists.reserve(cfg.calibration_draws);
  for (std::size_t j = 0; j < cfg.calibration_draws; ++j) {
    const auto one = detail::draw_one_group(tp, sg, rng);
    dists.emplace_back(Family::sev, QuantileParam{cfg.p, one.tp, one.sigma});
    tps.push_back(one.tp);
  }
  std::nth_element(tps.begin(), tps.begin() + static_cast<std::ptrdiff_t>(tps.size() / 2), tps.end());
  const double med = tps[tps.size() / 2];
  auto fbar = [&](double t) {
    double s = 0.0;
    for (const auto& d : dists) s += d.cdf(t);
    return s / static_cast<double>(dists.size());
  };
  const double lo = 1e-12 * med, hi = 1e12 * med;
  CensorTimes out;
  out.t_c = detail::solve_increasing(fbar, cfg.p_f, lo, hi);
  out.t_w = detail::solve_increasing(fbar, cfg.p_f + cfg.p_delta, out.t_c, hi);
  return out;
}

struct SimDataset {
  std::vector<std::string> groups;
  std::vector<LifetimeRecord> records;  // failures EXACT, survivors one RIGHT record per group
  std::vector<RiskSetEntry> risk;       // survivors at t_c
  std::vector<std::size_t> observed;    // failures by t_c per group
  std::vector<std::size_t> future;      // hidden: failures in (t_c, t_w] per group

  std::size_t future_total() const {
    std::size_t s = 0;
    for (auto f : future) s += f;
    return s;
  }
};

inline SimDataset simulate_dataset(const SimConfig& cfg, std::span<const GroupParams> params, const CensorTimes& times,
                                   std::mt19937_64& rng) {
  if (params.size() != static_cast<std::size_t>(cfg.G)) fail(ErrorCategory::config, "need one parameter set per group");
  SimDataset ds;
  ds.groups = cfg.group_names();
  const auto n = cfg.units_per_group();
  ds.observed.assign(n.size(), 0);
  ds.future.assign(n.size(), 0);
  for (std::size_t g = 0; g < n.size(); ++g) {
    const LlsDistribution d(Family::sev, QuantileParam{cfg.p, params[g].tp, params[g].sigma});
    std::size_t survivors = 0;
    for (std::size_t i = 0; i < n[g]; ++i) {
      const double t = d.quantile(detail::sim_uniform(rng));
      if (t <= times.t_c) {
        ds.records.push_back(LifetimeRecord::exact(ds.groups[g], t));
        ++ds.observed[g];
        continue;
      }
      if (t <= times.t_w) ++ds.future[g];
      ds.risk.push_back({ds.groups[g] + "-" + std::to_string(i), ds.groups[g], times.t_c, true});
      ++survivors;
    }
    if (survivors > 0 && times.t_c > 0.0) ds.records.push_back(LifetimeRecord::right(ds.groups[g], times.t_c, survivors));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Coverage.

enum class BoundSide { lower, upper };

inline std::string_view side_name(BoundSide s) { return s == BoundSide::lower ? "lower" : "upper"; }

/// A lower bound covers when it does not exceed the truth; an upper bound when
/// the truth does not exceed it.
inline bool bound_covers(BoundSide side, std::size_t bound, std::size_t truth) {
  return side == BoundSide::lower ? bound <= truth : truth <= bound;
}

struct CoverageCell {
  std::string scope;  // "single-group", "multi-group" or "group:<label>"
  BoundSide side = BoundSide::upper;
  double level = 0.95;
  double coverage = 0.0;
  double mc_se = 0.0;

  double deviation() const { return std::abs(coverage - level); }
};

struct CoverageReport {
  std::string scenario;
  std::vector<CoverageCell> cells;
  std::size_t n_datasets = 0;  // datasets used (after exclusions)
  std::size_t excluded = 0;
  CensorTimes times;
  std::vector<std::size_t> n_g;

  const CoverageCell& at(const std::string& scope, BoundSide side, double level) const {
    for (const auto& c : cells)
      if (c.scope == scope && c.side == side && std::abs(c.level - level) < 1e-12) return c;
    fail(ErrorCategory::config, "no coverage cell for scope '" + scope + "'");
  }
};

struct CoverageOptions {
  SamplerConfig sampler;
  std::vector<double> levels{0.90, 0.95};
  bool oracle = false;  // use the true group parameters in place of posterior draws
  PredictMethod method = PredictMethod::automatic;
  double rhat_limit = 1.1;
  bool single_group = true;
  bool multi_group = true;
  std::optional<std::size_t> tracked_group;  // also report this group on its own
  std::size_t workers = 0;                   // 0: hardware concurrency
};

inline SamplerConfig sampler_preset(const std::string& name) {
  // Random-walk draws are strongly autocorrelated, so each kept draw is every
  // fifth iteration.
  SamplerConfig s;
  s.thin = 5;
  if (name == "desk") {
    s.warmup = 1000;
    s.keep = 1000;
  } else if (name == "paper") {
    s.warmup = 2500;
    s.keep = 2500;
  } else {
    fail(ErrorCategory::config, "unknown sampler preset '" + name + "' (desk|paper)");
  }
  return s;
}

namespace detail {

struct DatasetOutcome {
  bool excluded = false;
  // [scope slot][level][side] coverage indicators; slot 0..G-1 groups, G = all.
  std::vector<std::vector<std::array<bool, 2>>> covered;
};

inline std::vector<std::size_t> scope_slots(const SimConfig& cfg, const CoverageOptions& opt) {
  std::vector<std::size_t> slots;
  const auto G = static_cast<std::size_t>(cfg.G);
  if (opt.single_group)
    for (std::size_t g = 0; g < G; ++g) slots.push_back(g);
  else if (opt.tracked_group)
    slots.push_back(*opt.tracked_group);
  if (opt.multi_group) slots.push_back(G);
  return slots;
}

inline DatasetOutcome run_one_dataset(const SimConfig& cfg, const CoverageOptions& opt, const CensorTimes& times,
                                      std::size_t index) {
  std::mt19937_64 rng(stream_seed(cfg.seed, 2 * index));
  const auto params = draw_group_params(cfg, rng);
  const auto ds = simulate_dataset(cfg, params, times, rng);
  const auto G = static_cast<std::size_t>(cfg.G);

  LlsModel model({Family::sev, cfg.p, true, ds.groups}, ds.records, simulation_priors());
  PosteriorDraws draws;
  if (opt.oracle) {
    HierWeibullParams h;
    for (const auto& g : params) {
      h.tp.push_back(g.tp);
      h.sigma.push_back(g.sigma);
    }
    h.eta_tp = h.tau_tp = h.eta_sigma = h.tau_sigma = 1.0;
    draws.values = model.pack(h);
    draws.names = model.parameter_names();
    draws.chain = {0};
    draws.iteration = {0};
    draws.n_chains = 1;
  } else {
    SamplerConfig sc = opt.sampler;
    sc.seed = stream_seed(cfg.seed, 2 * index + 1);
    DatasetOutcome out;
    try {
      draws = sample(model, sc);
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::initialization) throw;
      out.excluded = true;
      return out;
    }
    const auto r = rhat(draws);
    if (std::any_of(r.begin(), r.end(), [&](double v) { return !(v <= opt.rhat_limit); })) {
      out.excluded = true;
      return out;
    }
  }

  DatasetOutcome out;
  const PredictionWindow window{times.t_w - times.t_c};
  const auto slots = scope_slots(cfg, opt);
  out.covered.resize(G + 1);
  for (std::size_t slot : slots) {
    const Scope scope = slot < G ? Scope::single(ds.groups[slot]) : Scope::all();
    const std::size_t truth = slot < G ? ds.future[slot] : ds.future_total();
    const auto pd = predictive_cdf(model, draws, ds.risk, window, scope, opt.method);
    for (double level : opt.levels) {
      out.covered[slot].push_back({bound_covers(BoundSide::lower, lower_bound(pd.dist, level), truth),
                                   bound_covers(BoundSide::upper, upper_bound(pd.dist, level), truth)});
    }
  }
  return out;
}

template <class Fn>
void run_pool(std::size_t n_jobs, std::size_t workers, Fn&& job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n_jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n_jobs; i = next++) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n_jobs;
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline CoverageReport run_coverage(const SimConfig& cfg, const CoverageOptions& opt) {
  cfg.validate();
  opt.sampler.validate();
  if (opt.tracked_group && *opt.tracked_group >= static_cast<std::size_t>(cfg.G))
    fail(ErrorCategory::config, "tracked group out of range");
  CoverageReport rep;
  rep.scenario = cfg.name;
  rep.times = calibrate_censor_times(cfg);
  rep.n_g = cfg.units_per_group();

  std::vector<detail::DatasetOutcome> outcomes(cfg.n_datasets);
  detail::run_pool(cfg.n_datasets, opt.workers,
                   [&](std::size_t i) { outcomes[i] = detail::run_one_dataset(cfg, opt, rep.times, i); });

  const auto G = static_cast<std::size_t>(cfg.G);
  std::vector<const detail::DatasetOutcome*> kept;
  for (const auto& o : outcomes) {
    if (o.excluded)
      ++rep.excluded;
    else
      kept.push_back(&o);
  }
  rep.n_datasets = kept.size();
  if (kept.empty()) fail(ErrorCategory::convergence, "every simulated dataset was excluded for nonconvergence");
  const double n = static_cast<double>(kept.size());

  auto cell = [&](std::string scope, BoundSide side, std::size_t li, const std::vector<std::size_t>& slots) {
    // Per-group coverage over datasets, then averaged over the listed groups.
    double p = 0.0;
    for (std::size_t slot : slots) {
      double hits = 0.0;
      for (const auto* o : kept) hits += o->covered[slot][li][side == BoundSide::lower ? 0 : 1] ? 1.0 : 0.0;
      p += hits / n;
    }
    p /= static_cast<double>(slots.size());
    rep.cells.push_back({std::move(scope), side, opt.levels[li], p, std::sqrt(p * (1.0 - p) / n)});
  };

  std::vector<std::size_t> all_groups(G);
  for (std::size_t g = 0; g < G; ++g) all_groups[g] = g;
  const auto names = cfg.group_names();
  for (BoundSide side : {BoundSide::lower, BoundSide::upper}) {
    for (std::size_t li = 0; li < opt.levels.size(); ++li) {
      if (opt.single_group) cell("single-group", side, li, all_groups);
      if (opt.multi_group) cell("multi-group", side, li, {G});
      if (opt.tracked_group) cell("group:" + names[*opt.tracked_group], side, li, {*opt.tracked_group});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Unbalanced design: group 1 fixed at E(r) = fixed_expected, the others varied.

struct UnbalancedPoint {
  double others_expected = 0.0;
  CoverageReport report;
};

inline std::vector<UnbalancedPoint> run_unbalanced(const SimConfig& base, std::span<const double> levels,
                                                   CoverageOptions opt, double fixed_expected = 6.0) {
  std::vector<UnbalancedPoint> out;
  opt.tracked_group = 0;
  opt.single_group = false;
  opt.multi_group = false;
  for (double lv : levels) {
    SimConfig cfg = base;
    cfg.group_expected.assign(static_cast<std::size_t>(cfg.G), lv);
    cfg.group_expected[0] = fixed_expected;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s-others%g", base.name.c_str(), lv);
    cfg.name = buf;
    out.push_back({lv, run_coverage(cfg, opt)});
  }
  return out;
}

inline SimConfig unbalanced_base() {
  SimConfig c;
  c.name = "unbalanced";
  c.G = 5;
  c.p_f = 0.05;
  c.p_delta = 0.5;
  c.tp_interval = {4.0, 8.0};
  c.sigma_interval = {0.50, 0.75};
  return c;
}

inline std::vector<double> unbalanced_levels() {
  return {4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55};
}

// ---------------------------------------------------------------------------
// Presets.

inline std::string scenario_name(const SimConfig& c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "G%d-Er%g-pf%.2f-pd%.2f-tp%g_%g-s%.2f_%.2f", c.G, c.expected_r, c.p_f, c.p_delta,
                c.tp_interval.lower, c.tp_interval.upper, c.sigma_interval.lower, c.sigma_interval.upper);
  return buf;
}

/// The full factor grid (320 scenarios).
inline std::vector<SimConfig> paper_grid() {
  std::vector<SimConfig> out;
  for (int G : {5, 10}) {
    for (int k = 1; k <= 5; ++k) {
      for (double pf : {0.01, 0.05, 0.10, 0.20}) {
        for (double pd : {0.10, 0.20}) {
          for (Interval95 tp : {Interval95{4, 8}, Interval95{10, 14}}) {
            for (Interval95 sg : {Interval95{0.15, 0.40}, Interval95{0.50, 0.75}}) {
              SimConfig c;
              c.G = G;
              c.expected_r = (G == 5 ? 25.0 : 50.0) * k;
              c.p_f = pf;
              c.p_delta = pd;
              c.tp_interval = tp;
              c.sigma_interval = sg;
              c.name = scenario_name(c);
              out.push_back(c);
            }
          }
        }
      }
    }
  }
  return out;
}

/// Named scenarios: "G5-baseline", "unbalanced", or any paper_grid() name.
/// `scale` is "desk" (100 datasets) or "paper" (300).
inline SimConfig sim_preset(const std::string& name, const std::string& scale = "desk") {
  SimConfig c;
  if (name == "G5-baseline") {
    c.name = name;
  } else if (name == "unbalanced") {
    c = unbalanced_base();
  } else {
    bool found = false;
    for (const auto& g : paper_grid())
      if (g.name == name) c = g, found = true;
    if (!found) fail(ErrorCategory::config, "unknown simulation preset '" + name + "'");
  }
  if (scale == "desk")
    c.n_datasets = 100;
  else if (scale == "paper")
    c.n_datasets = 300;
  else
    fail(ErrorCategory::config, "unknown preset scale '" + scale + "' (desk|paper)");
  return c;
}

inline void write_coverage_header(std::ostream& os) {
  os << "scenario,scope,side,level,coverage,mc_se,n_datasets,excluded,t_c,t_w,n_g\n";
}

inline void write_coverage_rows(std::ostream& os, const CoverageReport& r) {
  std::string ng;
  for (std::size_t g = 0; g < r.n_g.size(); ++g) ng += (g ? ";" : "") + std::to_string(r.n_g[g]);
  for (const auto& c : r.cells) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.2f,%.6f,%.6f,%zu,%zu,%.10g,%.10g,%s\n", r.scenario.c_str(),
                  c.scope.c_str(), std::string(side_name(c.side)).c_str(), c.level, c.coverage, c.mc_se, r.n_datasets,
                  r.excluded, r.times.t_c, r.times.t_w, ng.c_str());
    os << buf;
  }
}

}  // namespace fieldpred
