#pragma once

// Per-record and per-dataset log-likelihood for exact, right-, left- and
// interval-censored lifetimes, optionally left truncated.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"

namespace fieldpred {

enum class CensorCode { exact, right, left, interval };

inline std::string_view censor_name(CensorCode c) {
  switch (c) {
    case CensorCode::exact: return "exact";
    case CensorCode::right: return "right";
    case CensorCode::left: return "left";
    case CensorCode::interval: return "interval";
  }
  return "?";
}

inline std::optional<CensorCode> parse_censor(std::string_view s) {
  if (s == "exact") return CensorCode::exact;
  if (s == "right") return CensorCode::right;
  if (s == "left") return CensorCode::left;
  if (s == "interval") return CensorCode::interval;
  return std::nullopt;
}

/// One unit's observed outcome, in operating time.
///
/// EXACT/RIGHT use `time`; LEFT is (0, t1]; INTERVAL is (t0, t1].
struct LifetimeRecord {
  std::string unit_id;
  std::string group_id;
  CensorCode censor = CensorCode::right;
  double time = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::optional<double> trunc_left;
  std::uint64_t multiplicity = 1;

  static LifetimeRecord exact(std::string group, double t, std::uint64_t m = 1) {
    LifetimeRecord r;
    r.group_id = std::move(group);
    r.censor = CensorCode::exact;
    r.time = t;
    r.multiplicity = m;
    return r;
  }
  static LifetimeRecord right(std::string group, double t, std::uint64_t m = 1) {
    LifetimeRecord r = exact(std::move(group), t, m);
    r.censor = CensorCode::right;
    return r;
  }
  static LifetimeRecord left(std::string group, double upper, std::uint64_t m = 1) {
    LifetimeRecord r;
    r.group_id = std::move(group);
    r.censor = CensorCode::left;
    r.t1 = upper;
    r.multiplicity = m;
    return r;
  }
  static LifetimeRecord interval(std::string group, double lower, double upper, std::uint64_t m = 1) {
    LifetimeRecord r = left(std::move(group), upper, m);
    r.censor = CensorCode::interval;
    r.t0 = lower;
    return r;
  }

  /// Largest time at which the unit is known to have been alive and observed.
  double last_time() const {
    return (censor == CensorCode::exact || censor == CensorCode::right) ? time : t1;
  }

  void validate() const {
    if (multiplicity == 0) fail(ErrorCategory::domain, "record multiplicity must be >= 1");
    switch (censor) {
      case CensorCode::exact:
      case CensorCode::right:
        if (!(time > 0.0)) fail(ErrorCategory::domain, "exact/right record requires time > 0");
        break;
      case CensorCode::left:
        if (!(t1 > 0.0)) fail(ErrorCategory::domain, "left-censored record requires t1 > 0");
        break;
      case CensorCode::interval:
        if (!(t0 >= 0.0 && t0 < t1)) fail(ErrorCategory::domain, "interval record requires 0 <= t0 < t1");
        break;
    }
    if (trunc_left) {
      if (!(*trunc_left >= 0.0)) fail(ErrorCategory::domain, "truncation time must be >= 0");
      if (!(*trunc_left < last_time()))
        fail(ErrorCategory::domain, "truncation time must precede the record's observed time");
    }
  }
};

template <class D>
concept Lifetime = requires(const D& d, double t) {
  { d.cdf(t) } -> std::convertible_to<double>;
  { d.logcdf(t) } -> std::convertible_to<double>;
  { d.logsf(t) } -> std::convertible_to<double>;
  { d.logpdf(t) } -> std::convertible_to<double>;
};

/// Wraps a bare (cdf, logpdf) pair so it satisfies `Lifetime`.
template <class Cdf, class LogPdf>
struct FunctionLifetime {
  Cdf cdf_fn;
  LogPdf logpdf_fn;
  double cdf(double t) const { return cdf_fn(t); }
  double logcdf(double t) const { return std::log(cdf_fn(t)); }
  double logsf(double t) const { return std::log1p(-cdf_fn(t)); }
  double logpdf(double t) const { return logpdf_fn(t); }
};

struct RecordLogLik {
  double value = 0.0;
  bool degenerate_interval = false;
};

namespace detail {

template <Lifetime D>
double logcdf_at(const D& d, double t) {
  return t <= 0.0 ? -kInf : d.logcdf(t);
}
template <Lifetime D>
double logsf_at(const D& d, double t) {
  return t <= 0.0 ? 0.0 : d.logsf(t);
}

/// log(F(b) - F(a)), a < b. Uses survivor differences once F(a) > 1/2.
template <Lifetime D>
RecordLogLik log_interval_mass(const D& d, double a, double b) {
  if (a > 0.0 && d.cdf(a) > 0.5) {
    const double ls_a = d.logsf(a);
    const double ls_b = d.logsf(b);
    if (!(ls_b < ls_a)) return {-kInf, true};
    return {ls_a + log1mexp(ls_b - ls_a), false};
  }
  const double lc_b = logcdf_at(d, b);
  const double lc_a = logcdf_at(d, a);
  if (!(lc_a < lc_b)) return {-kInf, true};
  return {lc_b + log1mexp(lc_a - lc_b), false};
}

}  // namespace detail

/// Log-likelihood contribution of one record, multiplied by its multiplicity.
///
/// Left truncation divides by S(t_L). For LEFT/INTERVAL records the lower
/// bound is raised to t_L, since survival past t_L is known.
template <Lifetime D>
RecordLogLik record_loglik(const LifetimeRecord& rec, const D& dist) {
  RecordLogLik out;
  const double tl = rec.trunc_left.value_or(0.0);
  switch (rec.censor) {
    case CensorCode::exact: out.value = dist.logpdf(rec.time); break;
    case CensorCode::right: out.value = dist.logsf(rec.time); break;
    case CensorCode::left:
      out = tl > 0.0 ? detail::log_interval_mass(dist, tl, rec.t1)
                     : RecordLogLik{detail::logcdf_at(dist, rec.t1), false};
      break;
    case CensorCode::interval: out = detail::log_interval_mass(dist, std::max(rec.t0, tl), rec.t1); break;
  }
  if (tl > 0.0) {
    const double ls_tl = dist.logsf(tl);
    if (ls_tl == -detail::kInf)
      fail(ErrorCategory::invalid_truncation, "survival probability at the truncation time is zero");
    out.value -= ls_tl;
  }
  if (rec.multiplicity != 1) out.value *= static_cast<double>(rec.multiplicity);
  return out;
}

template <class Cdf, class LogPdf>
  requires std::invocable<Cdf, double> && std::invocable<LogPdf, double>
RecordLogLik record_loglik(const LifetimeRecord& rec, Cdf cdf, LogPdf logpdf) {
  return record_loglik(rec, FunctionLifetime<Cdf, LogPdf>{std::move(cdf), std::move(logpdf)});
}

/// Sum of contributions of records that all share one parameter vector.
template <Lifetime D>
double loglik_sum(std::span<const LifetimeRecord> records, const D& dist) {
  double total = 0.0;
  for (const auto& r : records) total += record_loglik(r, dist).value;
  return total;
}

template <Lifetime D>
double dataset_loglik(std::span<const LifetimeRecord> records, const std::map<std::string, D>& group_params) {
  double total = 0.0;
  for (const auto& r : records) {
    const auto it = group_params.find(r.group_id);
    if (it == group_params.end()) fail(ErrorCategory::missing_group, "no parameters for group '" + r.group_id + "'");
    total += record_loglik(r, it->second).value;
  }
  return total;
}

/// Merges records with identical group, censoring and times into one record
/// carrying the summed multiplicity. Unit ids are dropped.
inline std::vector<LifetimeRecord> compress_records(std::span<const LifetimeRecord> records) {
  using Key = std::tuple<std::string, int, double, double, double, double>;
  std::map<Key, std::size_t> index;
  std::vector<LifetimeRecord> out;
  for (const auto& r : records) {
    const Key key{r.group_id, static_cast<int>(r.censor), r.time, r.t0, r.t1, r.trunc_left.value_or(-1.0)};
    const auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) {
      out.push_back(r);
      out.back().unit_id.clear();
    } else {
      out[it->second].multiplicity += r.multiplicity;
    }
  }
  return out;
}

}  // namespace fieldpred
