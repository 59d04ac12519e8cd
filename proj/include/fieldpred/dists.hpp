#pragma once

// Log-location-scale lifetime kernels (Weibull/SEV, Frechet/LEV, lognormal)
// with quantile reparameterization, and the two-mode GLFP mixture.
//
// Everything is evaluated in log space where it matters: survivor terms
// dominate heavily censored likelihoods, so 1 - F is never formed by
// subtraction when a log1p/expm1 form exists.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

#include "fieldpred/errors.hpp"

namespace fieldpred {

enum class Family { sev, lev, normal };

inline Family parse_family(std::string_view name) {
  if (name == "weibull" || name == "sev") return Family::sev;
  if (name == "frechet" || name == "lev") return Family::lev;
  if (name == "lognormal" || name == "normal") return Family::normal;
  fail(ErrorCategory::config, "unknown distribution family '" + std::string(name) + "'");
}

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::sev: return "weibull";
    case Family::lev: return "frechet";
    case Family::normal: return "lognormal";
  }
  return "?";
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// log(1 - exp(a)) for a <= 0.
inline double log1mexp(double a) {
  if (a > -std::numbers::ln2) return std::log(-std::expm1(a));
  return std::log1p(-std::exp(a));
}

/// log(exp(a) + exp(b)) with -inf handled.
inline double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double norm_logcdf(double z) {
  if (z > -37.0) return std::log(norm_cdf(z));
  // Mills-ratio asymptote once erfc underflows.
  const double z2 = z * z;
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

inline double norm_quantile(double q) {
  // Acklam's rational approximation (|rel err| < 1.2e-9), then one Halley step
  // against erfc, which takes it to ~1e-15.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (q < p_low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  } else if (q <= 1.0 - p_low) {
    const double s = q - 0.5;
    const double r = s * s;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double r = std::sqrt(-2.0 * std::log1p(-q));
    x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  const double e = (q <= 0.5) ? norm_cdf(x) - q : (1.0 - q) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = e * std::exp(kLogSqrt2Pi + 0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

inline void require_finite(double z, const char* what) {
  if (!std::isfinite(z)) fail(ErrorCategory::domain, std::string(what) + ": argument must be finite");
}

inline void require_positive_time(double t, const char* what) {
  if (!(t > 0.0)) fail(ErrorCategory::domain, std::string(what) + ": time must be > 0");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standardized kernels on the real line.

inline double std_cdf(double z, Family f) {
  detail::require_finite(z, "std_cdf");
  switch (f) {
    case Family::sev: return -std::expm1(-std::exp(z));
    case Family::lev: return std::exp(-std::exp(-z));
    case Family::normal: return detail::norm_cdf(z);
  }
  return 0.0;
}

inline double std_sf(double z, Family f) {
  switch (f) {
    case Family::sev: return std::exp(-std::exp(z));
    case Family::lev: return -std::expm1(-std::exp(-z));
    case Family::normal: return detail::norm_cdf(-z);
  }
  return 0.0;
}

inline double std_logcdf(double z, Family f) {
  switch (f) {
    case Family::sev: return detail::log1mexp(-std::exp(z));
    case Family::lev: return -std::exp(-z);
    case Family::normal: return detail::norm_logcdf(z);
  }
  return 0.0;
}

inline double std_logsf(double z, Family f) {
  switch (f) {
    case Family::sev: return -std::exp(z);
    // Upper tail: log(1 - exp(-w)) = log w - w/2 + O(w^2), w = exp(-z).
    case Family::lev: return z > 30.0 ? -z - 0.5 * std::exp(-z) : detail::log1mexp(-std::exp(-z));
    case Family::normal: return detail::norm_logcdf(-z);
  }
  return 0.0;
}

inline double std_logpdf(double z, Family f) {
  switch (f) {
    case Family::sev: return z - std::exp(z);
    case Family::lev: return -z - std::exp(-z);
    case Family::normal: return -0.5 * z * z - detail::kLogSqrt2Pi;
  }
  return 0.0;
}

/// Closed form for SEV/LEV; refined rational approximation for the normal.
inline double std_quantile(double q, Family f) {
  if (!(q > 0.0 && q < 1.0)) fail(ErrorCategory::domain, "quantile level must lie in (0,1)");
  switch (f) {
    case Family::sev: return std::log(-std::log1p(-q));
    case Family::lev: return -std::log(-std::log(q));
    case Family::normal: return detail::norm_quantile(q);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Log-location-scale parameterizations.

struct LlsParams {
  double mu = 0.0;     // location of log T
  double sigma = 1.0;  // scale of log T, > 0

  /// Weibull (eta, beta) view; only meaningful for the SEV family.
  static LlsParams from_weibull(double eta, double beta) { return {std::log(eta), 1.0 / beta}; }
  double weibull_eta() const { return std::exp(mu); }
  double weibull_beta() const { return 1.0 / sigma; }
};

/// Scale parameter replaced by the p quantile t_p.
struct QuantileParam {
  double p = 0.05;
  double tp = 1.0;
  double sigma = 1.0;
};

inline LlsParams mu_from_quantile(const QuantileParam& qp, Family f) {
  return {std::log(qp.tp) - qp.sigma * std_quantile(qp.p, f), qp.sigma};
}

class LlsDistribution {
 public:
  LlsDistribution() = default;
  LlsDistribution(Family f, LlsParams params) : family_(f), mu_(params.mu), sigma_(params.sigma) {
    if (!(sigma_ > 0.0)) fail(ErrorCategory::domain, "scale parameter sigma must be > 0");
  }
  LlsDistribution(Family f, const QuantileParam& qp) : LlsDistribution(f, mu_from_quantile(qp, f)) {}

  Family family() const { return family_; }
  LlsParams params() const { return {mu_, sigma_}; }

  double standardize(double t) const { return (std::log(t) - mu_) / sigma_; }

  double cdf(double t) const {
    detail::require_positive_time(t, "lls_cdf");
    if (t == detail::kInf) return 1.0;
    return std_cdf(standardize(t), family_);
  }
  double sf(double t) const {
    detail::require_positive_time(t, "lls_sf");
    if (t == detail::kInf) return 0.0;
    return std_sf(standardize(t), family_);
  }
  double logcdf(double t) const {
    detail::require_positive_time(t, "lls_logcdf");
    if (t == detail::kInf) return 0.0;
    return std_logcdf(standardize(t), family_);
  }
  double logsf(double t) const {
    detail::require_positive_time(t, "lls_logsf");
    if (t == detail::kInf) return -detail::kInf;
    return std_logsf(standardize(t), family_);
  }
  double logpdf(double t) const {
    detail::require_positive_time(t, "lls_logpdf");
    const double lt = std::log(t);
    return std_logpdf((lt - mu_) / sigma_, family_) - std::log(sigma_) - lt;
  }
  double pdf(double t) const { return std::exp(logpdf(t)); }
  double quantile(double q) const { return std::exp(mu_ + sigma_ * std_quantile(q, family_)); }

 private:
  Family family_ = Family::sev;
  double mu_ = 0.0;
  double sigma_ = 1.0;
};

inline double lls_cdf(double t, const LlsParams& p, Family f) { return LlsDistribution(f, p).cdf(t); }
inline double lls_logpdf(double t, const LlsParams& p, Family f) { return LlsDistribution(f, p).logpdf(t); }
inline double lls_quantile(double q, const LlsParams& p, Family f) { return LlsDistribution(f, p).quantile(q); }

// ---------------------------------------------------------------------------
// Generalized limited failure population: a fraction pi of units is exposed to
// an early (defect) mode on top of the wearout mode, both Weibull.
//
//   F(t) = 1 - (1 - pi F1(t)) (1 - F2(t))
//   f(t) = pi f1(t) (1 - F2(t)) + f2(t) (1 - pi F1(t))

struct GlfpParams {
  double pi = 0.0;
  QuantileParam early{0.5, 1.0, 1.0};
  QuantileParam wearout{0.2, 1.0, 1.0};
};

class GlfpDistribution {
 public:
  GlfpDistribution() = default;
  explicit GlfpDistribution(const GlfpParams& p)
      : pi_(p.pi), early_(Family::sev, p.early), wearout_(Family::sev, p.wearout) {
    if (!(pi_ >= 0.0 && pi_ <= 1.0)) fail(ErrorCategory::domain, "GLFP proportion pi must lie in [0,1]");
  }
  GlfpDistribution(double pi, LlsDistribution early, LlsDistribution wearout)
      : pi_(pi), early_(early), wearout_(wearout) {}

  double pi() const { return pi_; }
  const LlsDistribution& early() const { return early_; }
  const LlsDistribution& wearout() const { return wearout_; }

  double logsf(double t) const {
    detail::require_positive_time(t, "glfp_logsf");
    return std::log1p(-pi_ * early_.cdf(t)) + wearout_.logsf(t);
  }
  double sf(double t) const { return std::exp(logsf(t)); }
  double cdf(double t) const { return -std::expm1(logsf(t)); }
  double logcdf(double t) const { return detail::log1mexp(logsf(t)); }
  double logpdf(double t) const {
    detail::require_positive_time(t, "glfp_logpdf");
    const double early_term =
        pi_ > 0.0 ? std::log(pi_) + early_.logpdf(t) + wearout_.logsf(t) : -detail::kInf;
    const double wear_term = wearout_.logpdf(t) + std::log1p(-pi_ * early_.cdf(t));
    return detail::logaddexp(early_term, wear_term);
  }
  double pdf(double t) const { return std::exp(logpdf(t)); }

 private:
  double pi_ = 0.0;
  LlsDistribution early_;
  LlsDistribution wearout_;
};

inline double glfp_cdf(double t, const GlfpParams& p) { return GlfpDistribution(p).cdf(t); }
inline double glfp_logpdf(double t, const GlfpParams& p) { return GlfpDistribution(p).logpdf(t); }

}  // namespace fieldpred
