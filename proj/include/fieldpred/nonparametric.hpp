#pragma once

// Product-limit estimates and probability-plot coordinates.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/likelihood.hpp"
#include "fieldpred/predict.hpp"
#include "fieldpred/sampler.hpp"

namespace fieldpred {

struct KmStep {
  double time = 0.0;
  double n_risk = 0.0;
  double events = 0.0;
  double censored = 0.0;  // censorings at this time (counted after the events)
  double surv = 1.0;
  double lower = 1.0;
  double upper = 1.0;
};

struct KaplanMeier {
  std::vector<KmStep> steps;  // one per distinct event time
  double level = 0.90;
  bool truncation_adjusted = false;  // risk sets adjusted for delayed entry

  /// Right-continuous step function.
  double surv_at(double t) const {
    double s = 1.0;
    for (const auto& st : steps) {
      if (st.time > t) break;
      s = st.surv;
    }
    return s;
  }
};

/// Product-limit estimate from EXACT/RIGHT records (left truncation allowed)
/// with Greenwood log-scale pointwise intervals.
inline KaplanMeier kaplan_meier(std::span<const LifetimeRecord> records, double level = 0.90) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCategory::domain, "interval level must lie in (0,1)");
  struct Ev {
    double entry, time;
    bool event;
    double m;
  };
  std::vector<Ev> ev;
  KaplanMeier km;
  km.level = level;
  for (const auto& r : records) {
    if (r.censor != CensorCode::exact && r.censor != CensorCode::right)
      fail(ErrorCategory::unsupported, "Kaplan-Meier needs exact or right-censored records only");
    r.validate();
    const double entry = r.trunc_left.value_or(0.0);
    if (entry > 0.0) km.truncation_adjusted = true;
    ev.push_back({entry, r.time, r.censor == CensorCode::exact, static_cast<double>(r.multiplicity)});
  }
  std::map<double, std::pair<double, double>> at;  // time -> (events, censored)
  for (const auto& e : ev) (e.event ? at[e.time].first : at[e.time].second) += e.m;

  const double z = detail::norm_quantile(0.5 + level / 2.0);
  double s = 1.0, gw = 0.0;
  for (const auto& [t, dc] : at) {
    const double d = dc.first;
    if (d == 0.0) continue;
    double n = 0.0;
    for (const auto& e : ev)
      if (e.entry < t && e.time >= t) n += e.m;
    s *= 1.0 - d / n;
    KmStep st{t, n, d, dc.second, s, 0.0, 0.0};
    if (n > d) {
      gw += d / (n * (n - d));
      const double half = z * std::sqrt(gw);
      st.lower = s * std::exp(-half);
      st.upper = std::min(1.0, s * std::exp(half));
    }
    km.steps.push_back(st);
  }
  return km;
}

// ---------------------------------------------------------------------------
// Probability plotting: y = Phi^{-1}(F) against log t, where Phi is the
// standard cdf of the plotting family (linear for that family).

inline double probability_scale(double F, Family f) { return std_quantile(F, f); }

struct ProbPoint {
  double time = 0.0;
  double log_time = 0.0;
  double F = 0.0;
  double y = 0.0;
};

/// Nonparametric points at each KM step; F in {0, 1} has no coordinate and is skipped.
inline std::vector<ProbPoint> probability_points(const KaplanMeier& km, Family f) {
  std::vector<ProbPoint> out;
  for (const auto& st : km.steps) {
    const double F = 1.0 - st.surv;
    if (!(F > 0.0 && F < 1.0)) continue;
    out.push_back({st.time, std::log(st.time), F, probability_scale(F, f)});
  }
  return out;
}

/// Coordinates of a parametric cdf on a time grid.
template <Lifetime D>
std::vector<ProbPoint> probability_curve(const D& dist, std::span<const double> grid, Family f) {
  std::vector<ProbPoint> out;
  for (double t : grid) {
    const double F = dist.cdf(t);
    if (!(F > 0.0 && F < 1.0)) continue;
    out.push_back({t, std::log(t), F, probability_scale(F, f)});
  }
  return out;
}

struct BandRow {
  double time = 0.0;
  double log_time = 0.0;
  double lower = 0.0;  // cdf
  double median = 0.0;
  double upper = 0.0;
};

namespace detail {

inline double sorted_quantile(const std::vector<double>& x, double q) {
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < x.size() ? x[i] + frac * (x[i + 1] - x[i]) : x[i];
}

}  // namespace detail

/// Posterior median cdf and pointwise credible band for one group.
template <GroupLifetimeModel M>
std::vector<BandRow> posterior_cdf_band(const M& model, const PosteriorDraws& draws, const std::string& group,
                                        std::span<const double> grid, double level = 0.90) {
  if (draws.size() == 0) fail(ErrorCategory::domain, "credible band needs at least one draw");
  const std::size_t g = model.group_index(group);
  std::vector<std::vector<double>> F(grid.size(), std::vector<double>(draws.size()));
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const auto theta = draws.draw(j);
    const auto dist = model.group_lifetime(theta, g);
    for (std::size_t i = 0; i < grid.size(); ++i) F[i][j] = dist.cdf(grid[i]);
  }
  std::vector<BandRow> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& v = F[i];
    std::sort(v.begin(), v.end());
    out.push_back({grid[i], std::log(grid[i]), detail::sorted_quantile(v, 0.5 - level / 2.0),
                   detail::sorted_quantile(v, 0.5), detail::sorted_quantile(v, 0.5 + level / 2.0)});
  }
  return out;
}

/// Geometric grid of n points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) fail(ErrorCategory::domain, "grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

// ---------------------------------------------------------------------------
// CSV emission.

inline void write_km_csv(std::ostream& os, const KaplanMeier& km, Family f) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "# kaplan-meier level=%.2f truncation_adjusted=%s\n", km.level,
                km.truncation_adjusted ? "yes" : "no");
  os << buf << "time,n_risk,events,censored,surv,lower,upper,log_time,prob_scale\n";
  for (const auto& st : km.steps) {
    const double F = 1.0 - st.surv;
    const bool ok = F > 0.0 && F < 1.0;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,", st.time, st.n_risk, st.events,
                  st.censored, st.surv, st.lower, st.upper, std::log(st.time));
    os << buf;
    if (ok) {
      std::snprintf(buf, sizeof buf, "%.10g", probability_scale(F, f));
      os << buf;
    }
    os << "\n";
  }
}

inline void write_band_csv(std::ostream& os, const std::vector<BandRow>& band, Family f) {
  os << "time,log_time,cdf_lower,cdf_median,cdf_upper,y_lower,y_median,y_upper\n";
  char buf[256];
  auto y = [&](double F) {
    if (!(F > 0.0 && F < 1.0)) return std::string();
    std::snprintf(buf, sizeof buf, "%.10g", probability_scale(F, f));
    return std::string(buf);
  };
  for (const auto& r : band) {
    char head[160];
    std::snprintf(head, sizeof head, "%.10g,%.10g,%.10g,%.10g,%.10g,", r.time, r.log_time, r.lower, r.median, r.upper);
    os << head << y(r.lower) << "," << y(r.median) << "," << y(r.upper) << "\n";
  }
}

}  // namespace fieldpred
