#pragma once

// Hierarchical lifetime models on an unconstrained parameter vector.
//
// LlsModel:  per-group (t_p, sigma) for any log-location-scale family, either
//            drawn from lognormal hierarchies or given fixed priors.
// GlfpModel: shared early mode (t_p1, sigma_1); per-group (pi, t_p2, sigma_2)
//            with logit-normal / lognormal / (0,1)-truncated lognormal
//            hierarchies.

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/likelihood.hpp"
#include "fieldpred/priors.hpp"

namespace fieldpred {

struct ParamInfo {
  std::string name;
  Support support = Support::real;
};

using PriorMap = std::map<std::string, PriorSpec>;

inline const PriorSpec& prior_for(const PriorMap& priors, const std::string& key) {
  const auto it = priors.find(key);
  if (it == priors.end()) fail(ErrorCategory::config, "no prior specified for parameter '" + key + "'");
  return it->second;
}

/// Sorted distinct group labels of a record set.
inline std::vector<std::string> group_labels(std::span<const LifetimeRecord> records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.group_id);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// Hierarchical Weibull (or any LLS family) parameters.

struct HierWeibullParams {
  std::vector<double> tp;
  std::vector<double> sigma;
  double eta_tp = 1.0;  // median of the t_p lognormal
  double tau_tp = 1.0;
  double eta_sigma = 1.0;  // median of the sigma lognormal
  double tau_sigma = 1.0;
};

/// Heat-exchanger style defaults: weak prior on eta_sigma, half-t(4, 1) on taus.
inline PriorMap default_lls_priors(bool hierarchical) {
  if (!hierarchical)
    return {{"tp", PriorSpec::lognormal_interval(0.63, 31.78)}, {"sigma", PriorSpec::lognormal_interval(0.08, 4.0)}};
  return {{"eta_tp", PriorSpec::lognormal_interval(0.63, 31.78)},
          {"tau_tp", PriorSpec::half_t(4.0, 1.0)},
          {"eta_sigma", PriorSpec::lognormal_interval(0.08, 4.0)},
          {"tau_sigma", PriorSpec::half_t(4.0, 1.0)}};
}

inline double log_prior(const HierWeibullParams& th, const PriorMap& priors) {
  double lp = prior_for(priors, "eta_tp").log_density(th.eta_tp) + prior_for(priors, "tau_tp").log_density(th.tau_tp) +
              prior_for(priors, "eta_sigma").log_density(th.eta_sigma) +
              prior_for(priors, "tau_sigma").log_density(th.tau_sigma);
  if (lp == -detail::kInf) return lp;
  const double loc_tp = std::log(th.eta_tp);
  const double loc_sigma = std::log(th.eta_sigma);
  for (std::size_t g = 0; g < th.tp.size(); ++g) {
    lp += lognormal_logpdf(th.tp[g], loc_tp, th.tau_tp);
    lp += lognormal_logpdf(th.sigma[g], loc_sigma, th.tau_sigma);
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Hierarchical GLFP parameters.

struct HierGlfpParams {
  double tp1 = 1.0;
  double sigma1 = 1.0;
  std::vector<double> pi;
  std::vector<double> tp2;
  std::vector<double> sigma2;
  double eta_pi = 0.0;  // logit-scale location
  double tau_pi = 1.0;
  double eta_sigma2 = 0.0;  // log-scale location
  double tau_sigma2 = 1.0;
  double eta_tp2 = 0.0;  // log-scale location
  double tau_tp2 = 1.0;
};

/// Disk-drive style defaults.
inline PriorMap default_glfp_priors(bool hierarchical) {
  PriorMap m{{"tp1", PriorSpec::lognormal_interval(22.0, 5.5e4)}, {"sigma1", PriorSpec::lognormal_interval(0.14, 7.1)}};
  if (hierarchical) {
    m.emplace("eta_pi", PriorSpec::normal(-3.0, 1.0));
    m.emplace("tau_pi", PriorSpec::half_cauchy(1.0));
    m.emplace("eta_sigma2", PriorSpec::normal(0.0, 2.0));
    m.emplace("tau_sigma2", PriorSpec::half_cauchy(1.0));
    m.emplace("eta_tp2", PriorSpec::normal(9.0, 2.0));
    m.emplace("tau_tp2", PriorSpec::half_cauchy(1.0));
  } else {
    m.emplace("pi", PriorSpec::logit_normal(-3.0, 1.0));
    m.emplace("sigma2", PriorSpec::lognormal_trunc01(0.05, 0.99));
    m.emplace("tp2", PriorSpec::lognormal_interval(160.0, 4.0e5));
  }
  return m;
}

inline double log_prior(const HierGlfpParams& th, const PriorMap& priors) {
  double lp = prior_for(priors, "tp1").log_density(th.tp1) + prior_for(priors, "sigma1").log_density(th.sigma1) +
              prior_for(priors, "eta_pi").log_density(th.eta_pi) + prior_for(priors, "tau_pi").log_density(th.tau_pi) +
              prior_for(priors, "eta_sigma2").log_density(th.eta_sigma2) +
              prior_for(priors, "tau_sigma2").log_density(th.tau_sigma2) +
              prior_for(priors, "eta_tp2").log_density(th.eta_tp2) +
              prior_for(priors, "tau_tp2").log_density(th.tau_tp2);
  if (lp == -detail::kInf) return lp;
  // Mass of the sigma_2 lognormal on (0, 1).
  const double log_mass01 = detail::norm_logcdf(-th.eta_sigma2 / th.tau_sigma2);
  for (std::size_t g = 0; g < th.pi.size(); ++g) {
    const double p = th.pi[g];
    if (!(p > 0.0 && p < 1.0) || !(th.sigma2[g] > 0.0 && th.sigma2[g] < 1.0)) return -detail::kInf;
    lp += normal_logpdf(std::log(p) - std::log1p(-p), th.eta_pi, th.tau_pi) - std::log(p) - std::log1p(-p);
    lp += lognormal_logpdf(th.sigma2[g], th.eta_sigma2, th.tau_sigma2) - log_mass01;
    lp += lognormal_logpdf(th.tp2[g], th.eta_tp2, th.tau_tp2);
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Shared plumbing for models that live on an unconstrained vector.

namespace detail {

inline std::vector<std::vector<LifetimeRecord>> bucket_by_group(std::span<const LifetimeRecord> records,
                                                                const std::vector<std::string>& groups) {
  std::map<std::string, std::size_t> index;
  for (std::size_t g = 0; g < groups.size(); ++g) index.emplace(groups[g], g);
  std::vector<std::vector<LifetimeRecord>> out(groups.size());
  for (const auto& r : records) {
    r.validate();
    const auto it = index.find(r.group_id);
    if (it == index.end()) fail(ErrorCategory::missing_group, "record refers to unknown group '" + r.group_id + "'");
    out[it->second].push_back(r);
  }
  for (auto& b : out) b = compress_records(b);
  return out;
}

inline std::size_t find_group(const std::vector<std::string>& groups, const std::string& g) {
  const auto it = std::find(groups.begin(), groups.end(), g);
  if (it == groups.end()) fail(ErrorCategory::missing_group, "unknown group '" + g + "'");
  return static_cast<std::size_t>(it - groups.begin());
}

}  // namespace detail

/// Transforms and Jacobian bookkeeping shared by the concrete models.
class UnconstrainedLayout {
 public:
  const std::vector<ParamInfo>& parameters() const { return params_; }
  std::size_t dim() const { return params_.size(); }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.name);
    return out;
  }

  std::vector<double> constrain(std::span<const double> u) const {
    check_dim(u.size());
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = fieldpred::constrain(u[i], params_[i].support);
    return out;
  }

  std::vector<double> unconstrain(std::span<const double> theta) const {
    check_dim(theta.size());
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) out[i] = fieldpred::unconstrain(theta[i], params_[i].support);
    return out;
  }

  double log_jacobian(std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += fieldpred::log_jacobian(u[i], params_[i].support);
    return s;
  }

  /// Checks the constrained vector honors every parameter's support.
  bool in_support(std::span<const double> theta) const {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double x = theta[i];
      switch (params_[i].support) {
        case Support::real:
          if (!std::isfinite(x)) return false;
          break;
        case Support::positive:
          if (!(x > 0.0) || !std::isfinite(x)) return false;
          break;
        case Support::unit:
          if (!(x > 0.0 && x < 1.0)) return false;
          break;
      }
    }
    return true;
  }

 protected:
  void add(std::string name, Support s) { params_.push_back({std::move(name), s}); }
  void check_dim(std::size_t n) const {
    if (n != params_.size()) fail(ErrorCategory::domain, "parameter vector has wrong dimension");
  }

 private:
  std::vector<ParamInfo> params_;
};

// ---------------------------------------------------------------------------

struct LlsModelSpec {
  Family family = Family::sev;
  double p = 0.05;
  bool hierarchical = true;
  std::vector<std::string> groups;  // empty: taken from the records
};

class LlsModel : public UnconstrainedLayout {
 public:
  LlsModel(LlsModelSpec spec, std::span<const LifetimeRecord> records, PriorMap priors)
      : spec_(std::move(spec)), priors_(std::move(priors)) {
    if (!(spec_.p > 0.0 && spec_.p < 1.0)) fail(ErrorCategory::config, "quantile level p must lie in (0,1)");
    if (spec_.groups.empty()) spec_.groups = group_labels(records);
    if (spec_.groups.empty()) fail(ErrorCategory::config, "model needs at least one group");
    data_ = detail::bucket_by_group(records, spec_.groups);
    for (const auto& g : spec_.groups) {
      add("tp[" + g + "]", Support::positive);
      add("sigma[" + g + "]", Support::positive);
    }
    if (spec_.hierarchical) {
      for (const char* k : {"eta_tp", "tau_tp", "eta_sigma", "tau_sigma"}) add(k, Support::positive);
      for (const char* k : {"eta_tp", "tau_tp", "eta_sigma", "tau_sigma"}) prior_for(priors_, k);
    } else {
      prior_for(priors_, "tp");
      prior_for(priors_, "sigma");
    }
  }

  const LlsModelSpec& spec() const { return spec_; }
  const PriorMap& priors() const { return priors_; }
  const std::vector<std::string>& groups() const { return spec_.groups; }
  std::size_t group_index(const std::string& g) const { return detail::find_group(spec_.groups, g); }

  /// Sampler blocks: (tp, sigma) per group, the hyperparameters, then everything jointly.
  std::vector<std::vector<std::size_t>> default_blocks() const {
    std::vector<std::vector<std::size_t>> out;
    const std::size_t G = spec_.groups.size();
    for (std::size_t g = 0; g < G; ++g) out.push_back({2 * g, 2 * g + 1});
    if (spec_.hierarchical) out.push_back({2 * G, 2 * G + 1, 2 * G + 2, 2 * G + 3});
    if (out.size() > 1) {
      out.emplace_back(dim());
      std::iota(out.back().begin(), out.back().end(), std::size_t{0});
    }
    return out;
  }

  HierWeibullParams unpack(std::span<const double> theta) const {
    check_dim(theta.size());
    const std::size_t G = spec_.groups.size();
    HierWeibullParams h;
    h.tp.resize(G);
    h.sigma.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
      h.tp[g] = theta[2 * g];
      h.sigma[g] = theta[2 * g + 1];
    }
    if (spec_.hierarchical) {
      h.eta_tp = theta[2 * G];
      h.tau_tp = theta[2 * G + 1];
      h.eta_sigma = theta[2 * G + 2];
      h.tau_sigma = theta[2 * G + 3];
    }
    return h;
  }

  std::vector<double> pack(const HierWeibullParams& h) const {
    std::vector<double> theta;
    for (std::size_t g = 0; g < spec_.groups.size(); ++g) {
      theta.push_back(h.tp.at(g));
      theta.push_back(h.sigma.at(g));
    }
    if (spec_.hierarchical) theta.insert(theta.end(), {h.eta_tp, h.tau_tp, h.eta_sigma, h.tau_sigma});
    return theta;
  }

  LlsDistribution group_lifetime(std::span<const double> theta, std::size_t g) const {
    return LlsDistribution(spec_.family, QuantileParam{spec_.p, theta[2 * g], theta[2 * g + 1]});
  }

  double log_prior(std::span<const double> theta) const {
    if (spec_.hierarchical) return fieldpred::log_prior(unpack(theta), priors_);
    const auto& ptp = prior_for(priors_, "tp");
    const auto& psig = prior_for(priors_, "sigma");
    double lp = 0.0;
    for (std::size_t g = 0; g < spec_.groups.size(); ++g)
      lp += ptp.log_density(theta[2 * g]) + psig.log_density(theta[2 * g + 1]);
    return lp;
  }

  double log_likelihood(std::span<const double> theta) const {
    double ll = 0.0;
    for (std::size_t g = 0; g < data_.size(); ++g) {
      if (data_[g].empty()) continue;
      ll += loglik_sum(data_[g], group_lifetime(theta, g));
    }
    return ll;
  }

  /// Unconstrained log posterior: log-Jacobian + log prior + log likelihood.
  double log_density(std::span<const double> u) const {
    const auto theta = constrain(u);
    if (!in_support(theta)) return -detail::kInf;
    const double lp = log_prior(theta);
    if (!std::isfinite(lp)) return -detail::kInf;
    const double ll = log_likelihood(theta);
    if (std::isnan(ll)) return -detail::kInf;
    return log_jacobian(u) + lp + ll;
  }

  /// Unconstrained image of the prior medians.
  std::vector<double> initial_point() const {
    HierWeibullParams h;
    const std::size_t G = spec_.groups.size();
    if (spec_.hierarchical) {
      h.eta_tp = prior_for(priors_, "eta_tp").median();
      h.tau_tp = prior_for(priors_, "tau_tp").median();
      h.eta_sigma = prior_for(priors_, "eta_sigma").median();
      h.tau_sigma = prior_for(priors_, "tau_sigma").median();
      h.tp.assign(G, h.eta_tp);
      h.sigma.assign(G, h.eta_sigma);
    } else {
      h.tp.assign(G, prior_for(priors_, "tp").median());
      h.sigma.assign(G, prior_for(priors_, "sigma").median());
    }
    return unconstrain(pack(h));
  }

 private:
  LlsModelSpec spec_;
  PriorMap priors_;
  std::vector<std::vector<LifetimeRecord>> data_;
};

// ---------------------------------------------------------------------------

struct GlfpModelSpec {
  double p1 = 0.5;
  double p2 = 0.2;
  bool hierarchical = true;
  std::vector<std::string> groups;
};

class GlfpModel : public UnconstrainedLayout {
 public:
  GlfpModel(GlfpModelSpec spec, std::span<const LifetimeRecord> records, PriorMap priors)
      : spec_(std::move(spec)), priors_(std::move(priors)) {
    if (!(spec_.p1 > 0.0 && spec_.p1 < 1.0 && spec_.p2 > 0.0 && spec_.p2 < 1.0))
      fail(ErrorCategory::config, "quantile levels p1, p2 must lie in (0,1)");
    if (spec_.groups.empty()) spec_.groups = group_labels(records);
    if (spec_.groups.empty()) fail(ErrorCategory::config, "model needs at least one group");
    data_ = detail::bucket_by_group(records, spec_.groups);
    add("tp1", Support::positive);
    add("sigma1", Support::positive);
    for (const auto& g : spec_.groups) {
      add("pi[" + g + "]", Support::unit);
      add("tp2[" + g + "]", Support::positive);
      add("sigma2[" + g + "]", Support::unit);
    }
    prior_for(priors_, "tp1");
    prior_for(priors_, "sigma1");
    if (spec_.hierarchical) {
      add("eta_pi", Support::real);
      add("tau_pi", Support::positive);
      add("eta_sigma2", Support::real);
      add("tau_sigma2", Support::positive);
      add("eta_tp2", Support::real);
      add("tau_tp2", Support::positive);
      for (const char* k : {"eta_pi", "tau_pi", "eta_sigma2", "tau_sigma2", "eta_tp2", "tau_tp2"}) prior_for(priors_, k);
    } else {
      for (const char* k : {"pi", "tp2", "sigma2"}) prior_for(priors_, k);
    }
  }

  const GlfpModelSpec& spec() const { return spec_; }
  const PriorMap& priors() const { return priors_; }
  const std::vector<std::string>& groups() const { return spec_.groups; }
  std::size_t group_index(const std::string& g) const { return detail::find_group(spec_.groups, g); }

  /// Sampler blocks: the shared early mode, (pi, tp2, sigma2) per group, the
  /// hyperparameters, then everything jointly.
  std::vector<std::vector<std::size_t>> default_blocks() const {
    std::vector<std::vector<std::size_t>> out{{0, 1}};
    const std::size_t G = spec_.groups.size();
    for (std::size_t g = 0; g < G; ++g) out.push_back({2 + 3 * g, 3 + 3 * g, 4 + 3 * g});
    if (spec_.hierarchical) {
      out.emplace_back(6);
      std::iota(out.back().begin(), out.back().end(), 2 + 3 * G);
    }
    out.emplace_back(dim());
    std::iota(out.back().begin(), out.back().end(), std::size_t{0});
    return out;
  }

  HierGlfpParams unpack(std::span<const double> theta) const {
    check_dim(theta.size());
    const std::size_t G = spec_.groups.size();
    HierGlfpParams h;
    h.tp1 = theta[0];
    h.sigma1 = theta[1];
    h.pi.resize(G);
    h.tp2.resize(G);
    h.sigma2.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
      h.pi[g] = theta[2 + 3 * g];
      h.tp2[g] = theta[3 + 3 * g];
      h.sigma2[g] = theta[4 + 3 * g];
    }
    if (spec_.hierarchical) {
      const std::size_t o = 2 + 3 * G;
      h.eta_pi = theta[o];
      h.tau_pi = theta[o + 1];
      h.eta_sigma2 = theta[o + 2];
      h.tau_sigma2 = theta[o + 3];
      h.eta_tp2 = theta[o + 4];
      h.tau_tp2 = theta[o + 5];
    }
    return h;
  }

  std::vector<double> pack(const HierGlfpParams& h) const {
    std::vector<double> theta{h.tp1, h.sigma1};
    for (std::size_t g = 0; g < spec_.groups.size(); ++g) theta.insert(theta.end(), {h.pi.at(g), h.tp2.at(g), h.sigma2.at(g)});
    if (spec_.hierarchical)
      theta.insert(theta.end(), {h.eta_pi, h.tau_pi, h.eta_sigma2, h.tau_sigma2, h.eta_tp2, h.tau_tp2});
    return theta;
  }

  GlfpDistribution group_lifetime(std::span<const double> theta, std::size_t g) const {
    GlfpParams gp;
    gp.pi = theta[2 + 3 * g];
    gp.early = {spec_.p1, theta[0], theta[1]};
    gp.wearout = {spec_.p2, theta[3 + 3 * g], theta[4 + 3 * g]};
    return GlfpDistribution(gp);
  }

  double log_prior(std::span<const double> theta) const {
    if (spec_.hierarchical) return fieldpred::log_prior(unpack(theta), priors_);
    const auto h = unpack(theta);
    double lp = prior_for(priors_, "tp1").log_density(h.tp1) + prior_for(priors_, "sigma1").log_density(h.sigma1);
    for (std::size_t g = 0; g < h.pi.size(); ++g)
      lp += prior_for(priors_, "pi").log_density(h.pi[g]) + prior_for(priors_, "tp2").log_density(h.tp2[g]) +
            prior_for(priors_, "sigma2").log_density(h.sigma2[g]);
    return lp;
  }

  double log_likelihood(std::span<const double> theta) const {
    double ll = 0.0;
    for (std::size_t g = 0; g < data_.size(); ++g) {
      if (data_[g].empty()) continue;
      ll += loglik_sum(data_[g], group_lifetime(theta, g));
    }
    return ll;
  }

  double log_density(std::span<const double> u) const {
    const auto theta = constrain(u);
    if (!in_support(theta)) return -detail::kInf;
    const double lp = log_prior(theta);
    if (!std::isfinite(lp)) return -detail::kInf;
    const double ll = log_likelihood(theta);
    if (std::isnan(ll)) return -detail::kInf;
    return log_jacobian(u) + lp + ll;
  }

  std::vector<double> initial_point() const {
    HierGlfpParams h;
    const std::size_t G = spec_.groups.size();
    h.tp1 = prior_for(priors_, "tp1").median();
    h.sigma1 = prior_for(priors_, "sigma1").median();
    if (spec_.hierarchical) {
      h.eta_pi = prior_for(priors_, "eta_pi").median();
      h.tau_pi = prior_for(priors_, "tau_pi").median();
      h.eta_sigma2 = prior_for(priors_, "eta_sigma2").median();
      h.tau_sigma2 = prior_for(priors_, "tau_sigma2").median();
      h.eta_tp2 = prior_for(priors_, "eta_tp2").median();
      h.tau_tp2 = prior_for(priors_, "tau_tp2").median();
      const double mass = detail::norm_cdf(-h.eta_sigma2 / h.tau_sigma2);
      h.pi.assign(G, 1.0 / (1.0 + std::exp(-h.eta_pi)));
      h.tp2.assign(G, std::exp(h.eta_tp2));
      h.sigma2.assign(G, std::exp(h.eta_sigma2 + h.tau_sigma2 * detail::norm_quantile(0.5 * mass)));
    } else {
      h.pi.assign(G, prior_for(priors_, "pi").median());
      h.tp2.assign(G, prior_for(priors_, "tp2").median());
      h.sigma2.assign(G, prior_for(priors_, "sigma2").median());
    }
    return unconstrain(pack(h));
  }

 private:
  GlfpModelSpec spec_;
  PriorMap priors_;
  std::vector<std::vector<LifetimeRecord>> data_;
};

/// Free-function form of the unconstrained log posterior.
template <class Model>
double log_posterior_unconstrained(std::span<const double> u, const Model& model) {
  return model.log_density(u);
}

}  // namespace fieldpred
