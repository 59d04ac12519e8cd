#pragma once

// Seasonal warranty-return models with day-level covariates:
//   zeta(s) = alpha * canada + beta[month(s)]
// Cumulative damage (CD): a unit is returned once u(d) = sum_{s<=d} exp(zeta(s))
// passes a Frechet(0, sigma0) threshold.
// Proportional hazards (PH): hazard lambda0(d) exp(zeta(d)) with a Frechet
// baseline.
//
// Service day s (s = 1, 2, ...) is the calendar date entry + s - 1; a unit
// observed through date `end` has d_n = end - entry completed days.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/predict.hpp"
#include "fieldpred/priors.hpp"
#include "fieldpred/sampler.hpp"

namespace fieldpred {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) fail(ErrorCategory::parse, "invalid calendar date");
  return Date{ymd};
}

/// Parses YYYY-MM-DD.
inline Date parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    fail(ErrorCategory::parse, "expected a YYYY-MM-DD date, got '" + s + "'");
  return make_date(y, m, d);
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

inline long days_between(Date from, Date to) { return (to - from).count(); }

/// Calendar month (1..12) of a date.
inline int month_of(Date d) { return static_cast<int>(static_cast<unsigned>(std::chrono::year_month_day{d}.month())); }

/// Maximal stretch of consecutive service days in one calendar month.
struct MonthRun {
  int month = 1;
  long first_day = 1;  // inclusive service-day index
  long last_day = 1;   // inclusive
  long days() const { return last_day - first_day + 1; }
};

struct CovariateHistory {
  bool canada = false;
  Date entry{};
  long d_n = 0;
  // z[0]: Canada indicator; z[m]: service days falling in calendar month m.
  std::array<double, 13> z{};

  static CovariateHistory build(bool canada, Date entry, Date end) {
    CovariateHistory h;
    h.canada = canada;
    h.entry = entry;
    h.d_n = days_between(entry, end);
    if (h.d_n < 0) fail(ErrorCategory::domain, "observation end precedes entry date");
    h.z[0] = canada ? 1.0 : 0.0;
    for (const auto& r : h.runs(1, h.d_n)) h.z[static_cast<std::size_t>(r.month)] += static_cast<double>(r.days());
    return h;
  }

  Date date_of_day(long s) const { return entry + std::chrono::days{s - 1}; }
  int month_of_day(long s) const { return month_of(date_of_day(s)); }

  /// Month runs covering service days first..last (may extend past d_n).
  std::vector<MonthRun> runs(long first, long last) const {
    std::vector<MonthRun> out;
    long s = first;
    while (s <= last) {
      const Date d = date_of_day(s);
      const std::chrono::year_month_day ymd{d};
      const Date month_end = Date{ymd.year() / ymd.month() / std::chrono::last};
      const long run_last = std::min(last, s + days_between(d, month_end));
      out.push_back({month_of(d), s, run_last});
      s = run_last + 1;
    }
    return out;
  }
};

struct SeasonalParams {
  double alpha = 0.0;
  std::array<double, 12> beta{};  // beta[m - 1] for calendar month m
  double sigma0 = 1.0;

  double zeta(bool canada, int month) const {
    return (canada ? alpha : 0.0) + beta[static_cast<std::size_t>(month - 1)];
  }
};

/// The threshold / baseline distribution: Frechet with mu0 = 0.
inline LlsDistribution baseline(const SeasonalParams& p) { return {Family::lev, LlsParams{0.0, p.sigma0}}; }

// ---------------------------------------------------------------------------
// Cumulative damage

/// u = exp(alpha z0) * sum_m exp(beta_m) z_m, the day-count form of the daily sum.
inline double damage(const CovariateHistory& h, const SeasonalParams& p) {
  double s = 0.0;
  for (int m = 1; m <= 12; ++m) s += std::exp(p.beta[static_cast<std::size_t>(m - 1)]) * h.z[static_cast<std::size_t>(m)];
  return std::exp(p.alpha * h.z[0]) * s;
}

/// Same quantity summed day by day.
inline double damage_daily(const CovariateHistory& h, const SeasonalParams& p) {
  double s = 0.0;
  for (long d = 1; d <= h.d_n; ++d) s += std::exp(p.zeta(h.canada, h.month_of_day(d)));
  return s;
}

/// Damage accumulated over service days first..last.
inline double damage_between(const CovariateHistory& h, const SeasonalParams& p, long first, long last) {
  double s = 0.0;
  for (const auto& r : h.runs(first, last)) s += static_cast<double>(r.days()) * std::exp(p.zeta(h.canada, r.month));
  return s;
}

struct WarrantyUnit {
  std::string unit_id;
  std::string cluster;
  CovariateHistory hist;
  bool returned = false;  // delta
};

inline double cd_unit_loglik(const WarrantyUnit& u, const SeasonalParams& p) {
  const double dmg = damage(u.hist, p);
  if (!(dmg > 0.0)) fail(ErrorCategory::domain, "cumulative damage must be > 0 (unit '" + u.unit_id + "')");
  const auto f0 = baseline(p);
  if (u.returned) return p.zeta(u.hist.canada, u.hist.month_of_day(u.hist.d_n)) + f0.logpdf(dmg);
  return f0.logsf(dmg);
}

inline double cd_loglik(std::span<const WarrantyUnit> units, const SeasonalParams& p) {
  double s = 0.0;
  for (const auto& u : units) s += cd_unit_loglik(u, p);
  return s;
}

inline double cd_loglik(std::span<const WarrantyUnit> units, const std::map<std::string, SeasonalParams>& by_cluster) {
  double s = 0.0;
  for (const auto& u : units) {
    const auto it = by_cluster.find(u.cluster);
    if (it == by_cluster.end()) fail(ErrorCategory::missing_group, "no parameters for cluster '" + u.cluster + "'");
    s += cd_unit_loglik(u, it->second);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Proportional hazards

namespace detail {

/// Baseline cumulative hazard Lambda0(d) = -log S0(d), Lambda0(0) = 0.
inline double base_cumhaz(const LlsDistribution& f0, long d) {
  if (d <= 0) return 0.0;
  const double ls = f0.logsf(static_cast<double>(d));
  if (ls == -kInf) fail(ErrorCategory::hazard_overflow, "baseline survival is zero at day " + std::to_string(d));
  return -ls;
}

}  // namespace detail

inline double ph_hazard(long day, const CovariateHistory& h, const SeasonalParams& p) {
  if (day < 1) fail(ErrorCategory::domain, "hazard is defined for service days >= 1");
  const auto f0 = baseline(p);
  const double t = static_cast<double>(day);
  const double ls = f0.logsf(t);
  if (ls == -detail::kInf) fail(ErrorCategory::hazard_overflow, "baseline survival is zero at day " + std::to_string(day));
  return std::exp(f0.logpdf(t) - ls + p.zeta(h.canada, h.month_of_day(day)));
}

/// Cumulative hazard over service days first..last: each day contributes
/// exp(zeta(s)) times the baseline cumulative hazard accrued during that day.
inline double ph_cum_hazard_between(const CovariateHistory& h, const SeasonalParams& p, long first, long last) {
  const auto f0 = baseline(p);
  double s = 0.0;
  for (const auto& r : h.runs(first, last))
    s += std::exp(p.zeta(h.canada, r.month)) *
         (detail::base_cumhaz(f0, r.last_day) - detail::base_cumhaz(f0, r.first_day - 1));
  return s;
}

inline double ph_cum_hazard(long day, const CovariateHistory& h, const SeasonalParams& p) {
  return ph_cum_hazard_between(h, p, 1, day);
}

inline double ph_unit_loglik(const WarrantyUnit& u, const SeasonalParams& p) {
  if (u.hist.d_n < 1) fail(ErrorCategory::domain, "unit '" + u.unit_id + "' has no service days");
  double v = -ph_cum_hazard(u.hist.d_n, u.hist, p);
  if (u.returned) v += std::log(ph_hazard(u.hist.d_n, u.hist, p));
  return v;
}

inline double ph_loglik(std::span<const WarrantyUnit> units, const SeasonalParams& p) {
  double s = 0.0;
  for (const auto& u : units) s += ph_unit_loglik(u, p);
  return s;
}

inline double ph_loglik(std::span<const WarrantyUnit> units, const std::map<std::string, SeasonalParams>& by_cluster) {
  double s = 0.0;
  for (const auto& u : units) {
    const auto it = by_cluster.find(u.cluster);
    if (it == by_cluster.end()) fail(ErrorCategory::missing_group, "no parameters for cluster '" + u.cluster + "'");
    s += ph_unit_loglik(u, it->second);
  }
  return s;
}

// ---------------------------------------------------------------------------
// One cluster's posterior target.

enum class SeasonalKind { cd, ph };

inline std::string_view seasonal_name(SeasonalKind k) { return k == SeasonalKind::cd ? "cd" : "ph"; }

struct SeasonalModelSpec {
  SeasonalKind kind = SeasonalKind::cd;
  // mu0 = 0 already fixes the damage scale; pinning beta_1 = 0 as well removes it.
  bool pin_first_month = false;
  PriorSpec coef_prior = PriorSpec::normal(0.0, 10.0);
  PriorSpec sigma0_prior = PriorSpec::lognormal_interval(0.02, 51.2);
};

class SeasonalModel {
 public:
  SeasonalModel(SeasonalModelSpec spec, std::vector<WarrantyUnit> units)
      : spec_(std::move(spec)), units_(std::move(units)) {
    names_.push_back("alpha");
    for (int m = spec_.pin_first_month ? 2 : 1; m <= 12; ++m) names_.push_back("beta[" + std::to_string(m) + "]");
    names_.push_back("sigma0");
  }

  std::size_t dim() const { return names_.size(); }
  std::vector<std::string> parameter_names() const { return names_; }
  const SeasonalModelSpec& spec() const { return spec_; }
  const std::vector<WarrantyUnit>& units() const { return units_; }

  SeasonalParams unpack(std::span<const double> theta) const {
    if (theta.size() != dim()) fail(ErrorCategory::domain, "parameter vector has wrong dimension");
    SeasonalParams p;
    p.alpha = theta[0];
    const std::size_t first = spec_.pin_first_month ? 1 : 0;
    for (std::size_t m = first; m < 12; ++m) p.beta[m] = theta[1 + m - first];
    p.sigma0 = theta.back();
    return p;
  }

  std::vector<double> constrain(std::span<const double> u) const {
    std::vector<double> out(u.begin(), u.end());
    out.back() = std::exp(u.back());
    return out;
  }

  double log_prior(std::span<const double> theta) const {
    double lp = spec_.sigma0_prior.log_density(theta.back());
    for (std::size_t i = 0; i + 1 < theta.size(); ++i) lp += spec_.coef_prior.log_density(theta[i]);
    return lp;
  }

  double log_likelihood(std::span<const double> theta) const {
    const auto p = unpack(theta);
    return spec_.kind == SeasonalKind::cd ? cd_loglik(units_, p) : ph_loglik(units_, p);
  }

  double log_density(std::span<const double> u) const {
    const auto theta = constrain(u);
    if (!(theta.back() > 0.0) || !std::isfinite(theta.back())) return -detail::kInf;
    const double lp = log_prior(theta);
    if (!std::isfinite(lp)) return -detail::kInf;
    try {
      const double ll = log_likelihood(theta);
      if (std::isnan(ll)) return -detail::kInf;
      return lp + ll + u.back();
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::hazard_overflow) return -detail::kInf;
      throw;
    }
  }

  /// Chains start around the best common month level and sigma0 on a coarse
  /// grid; the prior medians (all coefficients 0) sit far out in the tail when
  /// daily damage is small.
  std::vector<double> initial_point() const {
    std::vector<double> u(dim(), spec_.coef_prior.median());
    u.back() = std::log(spec_.sigma0_prior.median());
    if (units_.empty()) return u;
    double best = log_density(u);
    std::vector<double> best_u = u;
    const std::size_t first = spec_.pin_first_month ? 1 : 0;
    for (double level = -15.0; level <= 5.0; level += 0.5) {
      for (double ls = -2.0; ls <= 2.0; ls += 0.25) {
        for (std::size_t m = first; m < 12; ++m) u[1 + m - first] = level;
        u.back() = ls;
        const double v = log_density(u);
        if (v > best) best = v, best_u = u;
      }
    }
    return best_u;
  }

 private:
  SeasonalModelSpec spec_;
  std::vector<WarrantyUnit> units_;
  std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Calendar-window prediction.

struct SeasonalRiskUnit {
  std::string unit_id;
  bool canada = false;
  Date entry{};
  std::optional<Date> expiry;  // warranty contract end: no returns counted after it
  bool in_service = true;
};

/// Conditional return probability over [window_start, window_end) for one unit.
inline double seasonal_rho(SeasonalKind kind, const SeasonalRiskUnit& u, const SeasonalParams& p, Date window_start,
                           Date window_end) {
  if (!u.in_service) return 0.0;
  Date end = window_end;
  if (u.expiry && *u.expiry < end) end = *u.expiry;
  const Date start = std::max(window_start, u.entry);
  if (end <= start) return 0.0;
  CovariateHistory h;
  h.canada = u.canada;
  h.entry = u.entry;
  const long d_c = days_between(u.entry, start);
  const long d_w = days_between(u.entry, end);
  if (kind == SeasonalKind::ph) {
    const double dh = ph_cum_hazard_between(h, p, d_c + 1, d_w);
    return -std::expm1(-dh);
  }
  const auto f0 = baseline(p);
  const double u_c = d_c > 0 ? damage_between(h, p, 1, d_c) : 0.0;
  const double u_w = u_c + damage_between(h, p, d_c + 1, d_w);
  return cond_fail_prob(f0, u_c, u_w);
}

/// One cluster's fitted model, its draws and its units at risk.
struct SeasonalFit {
  const SeasonalModel* model = nullptr;
  const PosteriorDraws* draws = nullptr;
  std::span<const SeasonalRiskUnit> risk;
};

/// Predictive distribution of the number of returns in [window_start, window_end)
/// summed over clusters. Clusters are fitted independently, so draw j of every
/// cluster together form one joint draw.
inline PredictiveDistribution seasonal_predict_joint(std::span<const SeasonalFit> fits, Date window_start,
                                                     Date window_end, PredictMethod method = PredictMethod::automatic,
                                                     const std::string& scope = "all") {
  if (window_end < window_start) fail(ErrorCategory::domain, "window end precedes window start");
  if (fits.empty()) fail(ErrorCategory::domain, "prediction needs at least one cluster");
  const std::size_t B = fits[0].draws->size();
  struct Active {
    const SeasonalRiskUnit* unit;
    std::size_t fit;
  };
  std::vector<Active> active;
  std::vector<std::vector<SeasonalParams>> params(fits.size());
  for (std::size_t f = 0; f < fits.size(); ++f) {
    if (fits[f].draws->size() != B) fail(ErrorCategory::inconsistency, "clusters have different numbers of draws");
    for (const auto& u : fits[f].risk)
      if (u.in_service && (!u.expiry || *u.expiry > window_start) && u.entry < window_end) active.push_back({&u, f});
    params[f].reserve(B);
    for (std::size_t j = 0; j < B; ++j) params[f].push_back(fits[f].model->unpack(fits[f].draws->draw(j)));
  }

  PredictiveDistribution pd;
  std::vector<char> exhausted(active.size(), 0);
  pd.dist = mixture_distribution(
      active.size(), B,
      [&](std::size_t j, std::vector<Cohort>& out) {
        for (std::size_t i = 0; i < active.size(); ++i) {
          const auto& a = active[i];
          try {
            const double r =
                seasonal_rho(fits[a.fit].model->spec().kind, *a.unit, params[a.fit][j], window_start, window_end);
            if (r > 0.0) out.push_back({1, r});
          } catch (const Error& e) {
            if (e.category() != ErrorCategory::exhausted_risk && e.category() != ErrorCategory::hazard_overflow) throw;
            exhausted[i] = 1;
          }
        }
      },
      method);
  pd.draws = B;
  pd.delta_t = static_cast<double>(days_between(window_start, window_end));
  pd.scope = scope;
  pd.method = resolve_method(method, active.size());
  pd.n_units = active.size();
  pd.excluded_units = static_cast<std::size_t>(std::count(exhausted.begin(), exhausted.end(), 1));
  return pd;
}

/// Single-cluster form of seasonal_predict_joint.
inline PredictiveDistribution seasonal_predict(const SeasonalModel& model, const PosteriorDraws& draws,
                                               std::span<const SeasonalRiskUnit> risk, Date window_start,
                                               Date window_end, PredictMethod method = PredictMethod::automatic,
                                               const std::string& scope = "all") {
  const SeasonalFit fit{&model, &draws, risk};
  return seasonal_predict_joint(std::span<const SeasonalFit>(&fit, 1), window_start, window_end, method, scope);
}

}  // namespace fieldpred
