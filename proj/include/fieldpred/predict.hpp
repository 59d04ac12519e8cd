#pragma once

// Predictive distributions for the number of failures among units still at
// risk, mixed over posterior draws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fieldpred/discrete.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/likelihood.hpp"
#include "fieldpred/sampler.hpp"

namespace fieldpred {

struct RiskSetEntry {
  std::string unit_id;
  std::string group_id;
  double t_c = 0.0;  // operating age at the start of the window
  bool in_service = true;
};

struct PredictionWindow {
  double delta_t = 1.0;

  void validate() const {
    if (!(delta_t > 0.0) || !std::isfinite(delta_t)) fail(ErrorCategory::domain, "prediction window must be > 0");
  }
};

enum class PredictMethod { exact, poisson, automatic };

inline std::string_view method_name(PredictMethod m) {
  switch (m) {
    case PredictMethod::exact: return "exact";
    case PredictMethod::poisson: return "poisson";
    case PredictMethod::automatic: return "auto";
  }
  return "?";
}

inline PredictMethod parse_method(std::string_view s) {
  if (s == "exact") return PredictMethod::exact;
  if (s == "poisson") return PredictMethod::poisson;
  if (s == "auto") return PredictMethod::automatic;
  fail(ErrorCategory::config, "unknown prediction method '" + std::string(s) + "'");
}

/// Exact convolution up to this many units under the automatic method.
inline constexpr std::size_t kExactUnitLimit = 10000;

inline PredictMethod resolve_method(PredictMethod m, std::size_t n_units) {
  if (m != PredictMethod::automatic) return m;
  return n_units <= kExactUnitLimit ? PredictMethod::exact : PredictMethod::poisson;
}

/// A single group, or every group.
struct Scope {
  std::optional<std::string> group;

  static Scope all() { return {}; }
  static Scope single(std::string g) { return {std::move(g)}; }
  bool contains(const std::string& g) const { return !group || *group == g; }
  std::string name() const { return group ? *group : "all"; }
};

struct PredictiveDistribution {
  CountDistribution dist;
  std::size_t draws = 0;  // B
  double delta_t = 0.0;
  std::string scope;
  PredictMethod method = PredictMethod::exact;
  std::size_t n_units = 0;
  std::size_t excluded_units = 0;  // units with F(t_c) = 1 under at least one draw
};

/// Conditional probability of failing in (t_c, t_w] given survival to t_c.
template <Lifetime D>
double cond_fail_prob(const D& dist, double t_c, double t_w) {
  if (!(t_c >= 0.0 && t_w >= t_c)) fail(ErrorCategory::domain, "need 0 <= t_c <= t_w");
  if (t_w == t_c) return 0.0;
  const double ls_c = t_c > 0.0 ? dist.logsf(t_c) : 0.0;
  if (ls_c == -detail::kInf) fail(ErrorCategory::exhausted_risk, "unit cannot survive to its current age");
  const double ls_w = dist.logsf(t_w);
  const double rho = -std::expm1(ls_w - ls_c);
  return std::clamp(rho, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Mixture core shared by the lifetime-model and covariate-model paths.

/// `count` units sharing one conditional failure probability.
struct Cohort {
  std::size_t count = 0;
  double rho = 0.0;
};

namespace detail {

inline void add_single_draw(std::vector<double>& acc, std::span<const Cohort> cohorts, PredictMethod m) {
  const std::size_t n = acc.size() - 1;
  if (m == PredictMethod::poisson) {
    double lambda = 0.0;
    for (const auto& c : cohorts) lambda += static_cast<double>(c.count) * c.rho;
    const auto p = poisson_pmf_capped(lambda, n);
    for (std::size_t k = 0; k <= n; ++k)
      if (p[k] != 0.0) acc[k] += p[k];
    return;
  }
  TrimmedPmf pmf;
  for (const auto& c : cohorts) pmf = convolve(pmf, binomial_trimmed(c.count, c.rho));
  for (std::size_t i = 0; i < pmf.p.size() && pmf.offset + i <= n; ++i) acc[pmf.offset + i] += pmf.p[i];
}

}  // namespace detail

/// J(y) = (1/B) sum_j J(y; theta_j). `cohorts_for(j, out)` fills the cohorts of
/// draw j; their counts must not exceed `n_units` in total.
template <class CohortFn>
CountDistribution mixture_distribution(std::size_t n_units, std::size_t n_draws, CohortFn&& cohorts_for,
                                       PredictMethod method) {
  if (n_draws == 0) fail(ErrorCategory::domain, "predictive distribution needs at least one draw");
  const PredictMethod m = resolve_method(method, n_units);
  std::vector<double> acc(n_units + 1, 0.0);
  std::vector<Cohort> cohorts;
  for (std::size_t j = 0; j < n_draws; ++j) {
    cohorts.clear();
    cohorts_for(j, cohorts);
    detail::add_single_draw(acc, cohorts, m);
  }
  for (auto& v : acc) v /= static_cast<double>(n_draws);
  return CountDistribution::from_pmf(acc);
}

// ---------------------------------------------------------------------------
// Lifetime-model path.

/// Models that hand out a per-group lifetime for a constrained draw.
template <class M>
concept GroupLifetimeModel = requires(const M& m, std::span<const double> theta, std::size_t g, const std::string& s) {
  { m.group_index(s) } -> std::convertible_to<std::size_t>;
  m.group_lifetime(theta, g);
};

namespace detail {

struct AgeCohort {
  std::size_t group = 0;
  double t_c = 0.0;
  std::size_t count = 0;
  std::string group_id;
};

template <GroupLifetimeModel M>
std::vector<AgeCohort> age_cohorts(const M& model, std::span<const RiskSetEntry> risk, const Scope& scope) {
  std::map<std::pair<std::string, double>, std::size_t> counts;
  for (const auto& r : risk) {
    if (!r.in_service || !scope.contains(r.group_id)) continue;
    if (!(r.t_c >= 0.0)) fail(ErrorCategory::domain, "risk-set ages must be >= 0");
    ++counts[{r.group_id, r.t_c}];
  }
  std::vector<AgeCohort> out;
  for (const auto& [key, n] : counts) out.push_back({model.group_index(key.first), key.second, n, key.first});
  return out;
}

/// rho[j][c] for every draw j and cohort c; NaN marks an exhausted cohort.
template <GroupLifetimeModel M>
std::vector<std::vector<double>> cohort_rhos(const M& model, const PosteriorDraws& draws,
                                             std::span<const AgeCohort> cohorts, double delta_t) {
  std::vector<std::vector<double>> rho(draws.size(), std::vector<double>(cohorts.size()));
  using Life = decltype(model.group_lifetime(std::span<const double>{}, std::size_t{0}));
  std::map<std::size_t, std::size_t> slot;
  for (const auto& c : cohorts) slot.emplace(c.group, slot.size());
  std::vector<std::size_t> group_of(slot.size());
  for (const auto& [g, k] : slot) group_of[k] = g;
  std::vector<std::size_t> cslot;
  for (const auto& c : cohorts) cslot.push_back(slot[c.group]);
  std::vector<Life> life;
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const auto theta = draws.draw(j);
    life.clear();
    for (std::size_t g : group_of) life.push_back(model.group_lifetime(theta, g));
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
      try {
        rho[j][c] = cond_fail_prob(life[cslot[c]], cohorts[c].t_c, cohorts[c].t_c + delta_t);
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::exhausted_risk) throw;
        rho[j][c] = std::nan("");
      }
    }
  }
  return rho;
}

}  // namespace detail

template <GroupLifetimeModel M>
PredictiveDistribution predictive_cdf(const M& model, const PosteriorDraws& draws, std::span<const RiskSetEntry> risk,
                                      const PredictionWindow& window, const Scope& scope,
                                      PredictMethod method = PredictMethod::automatic) {
  window.validate();
  if (scope.group) model.group_index(*scope.group);
  const auto cohorts = detail::age_cohorts(model, risk, scope);
  std::size_t n = 0;
  for (const auto& c : cohorts) n += c.count;
  const auto rho = detail::cohort_rhos(model, draws, cohorts, window.delta_t);

  std::vector<bool> exhausted(cohorts.size(), false);
  PredictiveDistribution pd;
  pd.dist = mixture_distribution(
      n, draws.size(),
      [&](std::size_t j, std::vector<Cohort>& out) {
        for (std::size_t c = 0; c < cohorts.size(); ++c) {
          if (std::isnan(rho[j][c])) {
            exhausted[c] = true;
            continue;
          }
          out.push_back({cohorts[c].count, rho[j][c]});
        }
      },
      method);
  pd.draws = draws.size();
  pd.delta_t = window.delta_t;
  pd.scope = scope.name();
  pd.method = resolve_method(method, n);
  pd.n_units = n;
  for (std::size_t c = 0; c < cohorts.size(); ++c)
    if (exhausted[c]) pd.excluded_units += cohorts[c].count;
  return pd;
}

/// Same as predictive_cdf from a single fixed parameter vector.
template <GroupLifetimeModel M>
PredictiveDistribution predictive_cdf_at(const M& model, std::span<const double> theta,
                                         std::span<const RiskSetEntry> risk, const PredictionWindow& window,
                                         const Scope& scope, PredictMethod method = PredictMethod::automatic) {
  PosteriorDraws one;
  one.values.assign(theta.begin(), theta.end());
  one.names.resize(theta.size());
  one.chain = {0};
  one.iteration = {0};
  one.n_chains = 1;
  return predictive_cdf(model, one, risk, window, scope, method);
}

// ---------------------------------------------------------------------------
// Reading the predictive distribution.

/// Equal-tailed interval (q(alpha/2), q(1 - alpha/2)).
inline std::pair<std::size_t, std::size_t> prediction_interval(const CountDistribution& d, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCategory::domain, "alpha must lie in (0,1)");
  return {count_quantile(d, alpha / 2.0), count_quantile(d, 1.0 - alpha / 2.0)};
}
inline std::pair<std::size_t, std::size_t> prediction_interval(const PredictiveDistribution& pd, double alpha) {
  return prediction_interval(pd.dist, alpha);
}

/// One-sided lower bound at confidence `level`: the (1 - level) quantile.
inline std::size_t lower_bound(const CountDistribution& d, double level) { return count_quantile(d, 1.0 - level); }
/// One-sided upper bound at confidence `level`: the `level` quantile.
inline std::size_t upper_bound(const CountDistribution& d, double level) { return count_quantile(d, level); }

struct PointPrediction {
  std::size_t median = 0;
  double mean = 0.0;
};

inline PointPrediction point_prediction(const CountDistribution& d) { return {count_quantile(d, 0.5), d.mean()}; }
inline PointPrediction point_prediction(const PredictiveDistribution& pd) { return point_prediction(pd.dist); }

// ---------------------------------------------------------------------------
// Simulation-based predictand: one simulated count per draw.

template <GroupLifetimeModel M>
PredictiveDistribution simulate_predictand(const M& model, const PosteriorDraws& draws,
                                           std::span<const RiskSetEntry> risk, const PredictionWindow& window,
                                           const Scope& scope, std::uint64_t seed) {
  window.validate();
  if (draws.size() == 0) fail(ErrorCategory::domain, "predictive distribution needs at least one draw");
  const auto cohorts = detail::age_cohorts(model, risk, scope);
  std::size_t n = 0;
  for (const auto& c : cohorts) n += c.count;
  const auto rho = detail::cohort_rhos(model, draws, cohorts, window.delta_t);
  std::mt19937_64 rng(detail::stream_seed(seed, 0x5157ULL));
  std::vector<double> pmf(n + 1, 0.0);
  PredictiveDistribution pd;
  std::vector<bool> exhausted(cohorts.size(), false);
  for (std::size_t j = 0; j < draws.size(); ++j) {
    std::size_t y = 0;
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
      if (std::isnan(rho[j][c])) {
        exhausted[c] = true;
        continue;
      }
      std::binomial_distribution<std::size_t> bin(cohorts[c].count, rho[j][c]);
      y += bin(rng);
    }
    pmf[y] += 1.0;
  }
  for (auto& v : pmf) v /= static_cast<double>(draws.size());
  pd.dist = CountDistribution::from_pmf(pmf);
  pd.draws = draws.size();
  pd.delta_t = window.delta_t;
  pd.scope = scope.name();
  pd.n_units = n;
  for (std::size_t c = 0; c < cohorts.size(); ++c)
    if (exhausted[c]) pd.excluded_units += cohorts[c].count;
  return pd;
}

// ---------------------------------------------------------------------------
// Risk-set bookkeeping between windows.

enum class EventKind { failure, retirement };

struct RiskEvent {
  std::string unit_id;
  EventKind kind = EventKind::failure;
};

struct RollResult {
  std::vector<RiskSetEntry> risk;
  std::size_t repeated_removals = 0;  // events naming units already out of service
};

/// Removes failed/retired units, then ages the remaining ones by `elapsed`.
inline RollResult roll_risk_set(std::span<const RiskSetEntry> risk, std::span<const RiskEvent> events, double elapsed) {
  if (!(elapsed >= 0.0)) fail(ErrorCategory::domain, "elapsed time must be >= 0");
  RollResult out;
  out.risk.assign(risk.begin(), risk.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.risk.size(); ++i) index.emplace(out.risk[i].unit_id, i);
  for (const auto& e : events) {
    const auto it = index.find(e.unit_id);
    if (it == index.end()) fail(ErrorCategory::inconsistency, "event for unknown unit '" + e.unit_id + "'");
    auto& entry = out.risk[it->second];
    if (!entry.in_service) {
      ++out.repeated_removals;
      continue;
    }
    entry.in_service = false;
  }
  for (auto& r : out.risk)
    if (r.in_service) r.t_c += elapsed;
  return out;
}

inline std::size_t in_service_count(std::span<const RiskSetEntry> risk) {
  std::size_t n = 0;
  for (const auto& r : risk) n += r.in_service ? 1 : 0;
  return n;
}

// ---------------------------------------------------------------------------
// CSV rows.

struct PredictionRow {
  std::string scope;
  double window_start = 0.0;
  double window_end = 0.0;
  std::size_t lower = 0;
  std::size_t median = 0;
  double mean = 0.0;
  std::size_t upper = 0;
  double alpha = 0.05;
  PredictMethod method = PredictMethod::exact;
  std::size_t draws = 0;
};

inline PredictionRow summarize(const PredictiveDistribution& pd, double alpha, double window_start) {
  const auto [lo, hi] = prediction_interval(pd, alpha);
  const auto pp = point_prediction(pd);
  return {pd.scope, window_start, window_start + pd.delta_t, lo, pp.median, pp.mean, hi, alpha, pd.method, pd.draws};
}

inline void write_prediction_header(std::ostream& os) {
  os << "scope,window_start,window_end,lower,median,mean,upper,alpha,method,B\n";
}

inline void write_prediction_row(std::ostream& os, const PredictionRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%zu,%zu,%.10g,%zu,%.6g,%s,%zu\n", r.scope.c_str(), r.window_start,
                r.window_end, r.lower, r.median, r.mean, r.upper, r.alpha, std::string(method_name(r.method)).c_str(),
                r.draws);
  os << buf;
}

}  // namespace fieldpred
