#pragma once

// Count distributions for the number of future failures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fieldpred/errors.hpp"

namespace fieldpred {

/// Distribution on {0, ..., n} held as its cdf.
struct CountDistribution {
  std::vector<double> cdf;

  std::size_t support_max() const { return cdf.empty() ? 0 : cdf.size() - 1; }

  double pmf(std::size_t k) const {
    if (k >= cdf.size()) return 0.0;
    return k == 0 ? cdf[0] : cdf[k] - cdf[k - 1];
  }

  double mean() const {
    // E[Y] = sum_{k>=1} P(Y >= k)
    double m = 0.0;
    for (std::size_t k = 1; k < cdf.size(); ++k) m += 1.0 - cdf[k - 1];
    return m;
  }

  static CountDistribution point_mass(std::size_t k) {
    CountDistribution d;
    d.cdf.assign(k + 1, 0.0);
    d.cdf[k] = 1.0;
    return d;
  }

  /// Builds the cdf from a pmf; the last entry is pinned to 1 once the
  /// accumulated mass is within 1e-9 of it.
  static CountDistribution from_pmf(std::span<const double> pmf) {
    CountDistribution d;
    d.cdf.resize(pmf.empty() ? 1 : pmf.size());
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      s += pmf[k];
      d.cdf[k] = std::min(s, 1.0);
    }
    if (pmf.empty()) d.cdf[0] = 1.0;
    if (std::abs(d.cdf.back() - 1.0) < 1e-9) d.cdf.back() = 1.0;
    for (std::size_t k = 1; k < d.cdf.size(); ++k) d.cdf[k] = std::max(d.cdf[k], d.cdf[k - 1]);
    return d;
  }
};

/// Smallest y with cdf[y] >= q. A tolerance of 1e-12 absorbs rounding in
/// cdf values that equal q in exact arithmetic.
inline std::size_t count_quantile(const CountDistribution& d, double q) {
  if (!(q > 0.0 && q < 1.0)) fail(ErrorCategory::domain, "quantile level must lie in (0,1)");
  const auto it = std::lower_bound(d.cdf.begin(), d.cdf.end(), q - 1e-12);
  if (it == d.cdf.end()) return d.support_max();
  return static_cast<std::size_t>(it - d.cdf.begin());
}

namespace detail {

inline void require_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCategory::domain, std::string(what) + " must lie in [0,1]");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binomial

/// Binomial(n, rho) pmf over its full support.
inline std::vector<double> binomial_pmf(std::size_t n, double rho) {
  detail::require_prob(rho, "binomial probability");
  std::vector<double> p(n + 1, 0.0);
  if (rho == 0.0) {
    p[0] = 1.0;
    return p;
  }
  if (rho == 1.0) {
    p[n] = 1.0;
    return p;
  }
  const double lr = std::log(rho), lq = std::log1p(-rho);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    p[k] = std::exp(lgn - std::lgamma(kk + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) + kk * lr +
                    static_cast<double>(n - k) * lq);
  }
  return p;
}

inline CountDistribution binomial_cdf(std::size_t n, double rho) { return CountDistribution::from_pmf(binomial_pmf(n, rho)); }

inline std::size_t binomial_quantile(double q, std::size_t n, double rho) {
  return count_quantile(binomial_cdf(n, rho), q);
}

// ---------------------------------------------------------------------------
// Poisson-binomial

/// Exact distribution of a sum of independent Bernoulli(rho_i), by direct
/// convolution.
inline CountDistribution poisson_binomial_cdf(std::span<const double> rhos) {
  std::vector<double> pmf(rhos.size() + 1, 0.0);
  pmf[0] = 1.0;
  std::size_t top = 0;
  for (double r : rhos) {
    detail::require_prob(r, "Bernoulli probability");
    ++top;
    for (std::size_t k = top; k > 0; --k) pmf[k] = pmf[k] * (1.0 - r) + pmf[k - 1] * r;
    pmf[0] *= 1.0 - r;
  }
  return CountDistribution::from_pmf(pmf);
}

// ---------------------------------------------------------------------------
// Poisson

/// Poisson(lambda) pmf on {0, ..., n} with the upper tail folded into n.
inline std::vector<double> poisson_pmf_capped(double lambda, std::size_t n) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCategory::domain, "Poisson mean must be finite and >= 0");
  std::vector<double> p(n + 1, 0.0);
  if (lambda == 0.0) {
    p[0] = 1.0;
    return p;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    p[k] = std::exp(kk * std::log(lambda) - lambda - std::lgamma(kk + 1.0));
    s += p[k];
    if (kk > lambda && p[k] < 1e-300) break;
  }
  p[n] = std::max(0.0, 1.0 - s);
  return p;
}

/// Smallest y with Poisson(lambda) cdf >= q.
inline std::size_t poisson_quantile(double q, double lambda) {
  if (!(q > 0.0 && q < 1.0)) fail(ErrorCategory::domain, "quantile level must lie in (0,1)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCategory::domain, "Poisson mean must be finite and >= 0");
  if (lambda == 0.0) return 0;
  double term = std::exp(-lambda);
  double cdf = term;
  std::size_t k = 0;
  if (term > 0.0) {
    while (cdf < q - 1e-12) {
      ++k;
      term *= lambda / static_cast<double>(k);
      cdf += term;
    }
    return k;
  }
  // Large lambda: accumulate in log space from the mode.
  auto logp = [&](double kk) { return kk * std::log(lambda) - lambda - std::lgamma(kk + 1.0); };
  cdf = 0.0;
  for (k = 0;; ++k) {
    cdf += std::exp(logp(static_cast<double>(k)));
    if (cdf >= q - 1e-12) return k;
  }
}

inline std::pair<std::size_t, std::size_t> poisson_approx_quantiles(std::span<const double> rhos, double q_lo,
                                                                    double q_hi) {
  if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0)) fail(ErrorCategory::domain, "need 0 < q_lo < q_hi < 1");
  double lambda = 0.0;
  for (double r : rhos) {
    detail::require_prob(r, "Bernoulli probability");
    lambda += r;
  }
  return {poisson_quantile(q_lo, lambda), poisson_quantile(q_hi, lambda)};
}

// ---------------------------------------------------------------------------
// Trimmed pmfs for fast convolution of many binomial cohorts.

/// pmf on {offset, ..., offset + p.size() - 1}; mass outside is below the
/// trimming threshold.
struct TrimmedPmf {
  std::size_t offset = 0;
  std::vector<double> p{1.0};
};

/// Binomial(n, rho) pmf restricted to the span where terms exceed `eps`
/// relative to the mode.
inline TrimmedPmf binomial_trimmed(std::size_t n, double rho, double eps = 1e-20) {
  detail::require_prob(rho, "binomial probability");
  TrimmedPmf out;
  if (n == 0 || rho == 0.0) return out;
  if (rho == 1.0) {
    out.offset = n;
    return out;
  }
  const double nn = static_cast<double>(n);
  const auto mode = static_cast<std::size_t>(std::min(nn, std::floor((nn + 1.0) * rho)));
  const double lr = std::log(rho), lq = std::log1p(-rho);
  const double md = static_cast<double>(mode);
  const double at_mode =
      std::exp(std::lgamma(nn + 1.0) - std::lgamma(md + 1.0) - std::lgamma(nn - md + 1.0) + md * lr + (nn - md) * lq);
  const double odds = rho / (1.0 - rho);
  std::vector<double> up{at_mode};
  for (std::size_t k = mode; k < n; ++k) {
    const double next = up.back() * static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
    if (next < eps) break;
    up.push_back(next);
  }
  std::vector<double> down;
  double cur = at_mode;
  for (std::size_t k = mode; k > 0; --k) {
    cur = cur * static_cast<double>(k) / (static_cast<double>(n - k + 1) * odds);
    if (cur < eps) break;
    down.push_back(cur);
  }
  out.offset = mode - down.size();
  out.p.assign(down.rbegin(), down.rend());
  out.p.insert(out.p.end(), up.begin(), up.end());
  return out;
}

inline TrimmedPmf convolve(const TrimmedPmf& a, const TrimmedPmf& b, double eps = 1e-20) {
  if (a.p.size() == 1 && a.p[0] == 1.0) return {a.offset + b.offset, b.p};
  if (b.p.size() == 1 && b.p[0] == 1.0) return {a.offset + b.offset, a.p};
  std::vector<double> c(a.p.size() + b.p.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.p.size(); ++i) {
    const double ai = a.p[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < b.p.size(); ++j) c[i + j] += ai * b.p[j];
  }
  std::size_t lo = 0, hi = c.size();
  while (lo + 1 < hi && c[lo] < eps) ++lo;
  while (hi > lo + 1 && c[hi - 1] < eps) --hi;
  return {a.offset + b.offset + lo, std::vector<double>(c.begin() + static_cast<std::ptrdiff_t>(lo),
                                                        c.begin() + static_cast<std::ptrdiff_t>(hi))};
}

}  // namespace fieldpred
