#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"

namespace fieldpred {

/// 0.975 standard normal quantile.
inline constexpr double kZ975 = 1.959963984540054;

struct LogLocationScale {
  double location = 0.0;  // mean of log X
  double scale = 1.0;     // sd of log X
};

/// Lognormal whose central 95% interval is (lower, upper).
inline LogLocationScale interval_to_lognormal(double lower, double upper) {
  if (!(lower > 0.0 && lower < upper)) fail(ErrorCategory::domain, "lognormal interval requires 0 < lower < upper");
  const double ll = std::log(lower);
  const double lu = std::log(upper);
  return {0.5 * (ll + lu), (lu - ll) / (2.0 * kZ975)};
}

inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - detail::kLogSqrt2Pi - std::log(sd);
}

inline double lognormal_logpdf(double x, double location, double scale) {
  if (!(x > 0.0)) return -detail::kInf;
  return normal_logpdf(std::log(x), location, scale) - std::log(x);
}

inline double student_t_logpdf(double x, double df) {
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi) -
         0.5 * (df + 1.0) * std::log1p(x * x / df);
}

/// Parameter support, which fixes the unconstrained transform.
enum class Support { real, positive, unit };

inline double constrain(double u, Support s) {
  switch (s) {
    case Support::real: return u;
    case Support::positive: return std::exp(u);
    case Support::unit: return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  }
  return u;
}

inline double unconstrain(double x, Support s) {
  switch (s) {
    case Support::real: return x;
    case Support::positive: return std::log(x);
    case Support::unit: return std::log(x) - std::log1p(-x);
  }
  return x;
}

/// log |d constrain / du|.
inline double log_jacobian(double u, Support s) {
  switch (s) {
    case Support::real: return 0.0;
    case Support::positive: return u;
    case Support::unit: return -std::abs(u) - 2.0 * std::log1p(std::exp(-std::abs(u)));
  }
  return 0.0;
}

enum class PriorKind { lognormal_interval, normal, half_t, half_cauchy, lognormal_trunc01, logit_normal };

/// A fixed prior. Two numbers whose meaning depends on `kind`:
///   lognormal_interval / lognormal_trunc01: central 95% interval (lower, upper)
///   normal / logit_normal: (mean, sd) on the real / logit scale
///   half_t: (df, scale); half_cauchy: (scale, unused)
struct PriorSpec {
  PriorKind kind = PriorKind::normal;
  double a = 0.0;
  double b = 1.0;

  static PriorSpec lognormal_interval(double lower, double upper) {
    interval_to_lognormal(lower, upper);
    return {PriorKind::lognormal_interval, lower, upper};
  }
  static PriorSpec normal(double mean, double sd) {
    if (!(sd > 0.0)) fail(ErrorCategory::domain, "normal prior sd must be > 0");
    return {PriorKind::normal, mean, sd};
  }
  static PriorSpec half_t(double df, double scale) {
    if (!(df > 0.0 && scale > 0.0)) fail(ErrorCategory::domain, "half-t prior requires df > 0 and scale > 0");
    return {PriorKind::half_t, df, scale};
  }
  static PriorSpec half_cauchy(double scale) {
    if (!(scale > 0.0)) fail(ErrorCategory::domain, "half-Cauchy prior scale must be > 0");
    return {PriorKind::half_cauchy, scale, 0.0};
  }
  static PriorSpec lognormal_trunc01(double lower, double upper) {
    interval_to_lognormal(lower, upper);
    return {PriorKind::lognormal_trunc01, lower, upper};
  }
  static PriorSpec logit_normal(double mean, double sd) {
    if (!(sd > 0.0)) fail(ErrorCategory::domain, "logit-normal prior sd must be > 0");
    return {PriorKind::logit_normal, mean, sd};
  }

  Support support() const {
    switch (kind) {
      case PriorKind::normal: return Support::real;
      case PriorKind::lognormal_trunc01:
      case PriorKind::logit_normal: return Support::unit;
      default: return Support::positive;
    }
  }

  double log_density(double x) const {
    switch (kind) {
      case PriorKind::lognormal_interval: {
        const auto ls = interval_to_lognormal(a, b);
        return lognormal_logpdf(x, ls.location, ls.scale);
      }
      case PriorKind::normal: return normal_logpdf(x, a, b);
      case PriorKind::half_t:
        if (!(x > 0.0)) return -detail::kInf;
        return std::numbers::ln2 + student_t_logpdf(x / b, a) - std::log(b);
      case PriorKind::half_cauchy:
        if (!(x > 0.0)) return -detail::kInf;
        return std::numbers::ln2 + student_t_logpdf(x / a, 1.0) - std::log(a);
      case PriorKind::lognormal_trunc01: {
        if (!(x > 0.0 && x < 1.0)) return -detail::kInf;
        const auto ls = interval_to_lognormal(a, b);
        return lognormal_logpdf(x, ls.location, ls.scale) - detail::norm_logcdf(-ls.location / ls.scale);
      }
      case PriorKind::logit_normal: {
        if (!(x > 0.0 && x < 1.0)) return -detail::kInf;
        return normal_logpdf(std::log(x) - std::log1p(-x), a, b) - std::log(x) - std::log1p(-x);
      }
    }
    return -detail::kInf;
  }

  double median() const {
    switch (kind) {
      case PriorKind::lognormal_interval: return std::sqrt(a * b);
      case PriorKind::normal: return a;
      case PriorKind::half_t: return b * boost::math::quantile(boost::math::students_t(a), 0.75);
      case PriorKind::half_cauchy: return a;
      case PriorKind::lognormal_trunc01: {
        const auto ls = interval_to_lognormal(a, b);
        const double mass = detail::norm_cdf(-ls.location / ls.scale);
        return std::exp(ls.location + ls.scale * detail::norm_quantile(0.5 * mass));
      }
      case PriorKind::logit_normal: return 1.0 / (1.0 + std::exp(-a));
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind) {
      case PriorKind::lognormal_interval: return "lognormal<" + std::to_string(a) + "," + std::to_string(b) + ">";
      case PriorKind::normal: return "normal(" + std::to_string(a) + "," + std::to_string(b) + ")";
      case PriorKind::half_t: return "half_t(" + std::to_string(a) + "," + std::to_string(b) + ")";
      case PriorKind::half_cauchy: return "half_cauchy(" + std::to_string(a) + ")";
      case PriorKind::lognormal_trunc01: return "lognormal_trunc01<" + std::to_string(a) + "," + std::to_string(b) + ">";
      case PriorKind::logit_normal: return "logit_normal(" + std::to_string(a) + "," + std::to_string(b) + ")";
    }
    return "?";
  }
};

}  // namespace fieldpred
