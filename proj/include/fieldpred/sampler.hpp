#pragma once

// Adaptive random-walk Metropolis on an unconstrained vector, plus
// split-chain R-hat and effective sample size.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fieldpred/errors.hpp"

namespace fieldpred {

enum class Algorithm { adaptive_rwm, gradient_hmc };

struct SamplerConfig {
  std::size_t chains = 4;
  std::size_t warmup = 2500;
  std::size_t keep = 2500;
  std::size_t thin = 1;
  std::uint64_t seed = 20240101;
  Algorithm algorithm = Algorithm::adaptive_rwm;
  // Index blocks updated one after another each iteration; empty means one
  // joint block.
  std::vector<std::vector<std::size_t>> blocks;
  bool parallel = true;
  // Spread of the N(center, spread^2 I) initialization draws.
  double init_spread = 1.0;

  void validate() const {
    if (chains < 1) fail(ErrorCategory::config, "sampler needs at least one chain");
    if (warmup < 1 || keep < 1) fail(ErrorCategory::config, "warmup and keep must be >= 1");
    if (thin < 1) fail(ErrorCategory::config, "thin must be >= 1");
    if (algorithm == Algorithm::gradient_hmc)
      fail(ErrorCategory::unsupported, "gradient HMC is not built into this engine; use adaptive_rwm");
  }
};

/// Anything the sampler can run on.
template <class T>
concept SamplingTarget = requires(const T& t, std::span<const double> u) {
  { t.dim() } -> std::convertible_to<std::size_t>;
  { t.log_density(u) } -> std::convertible_to<double>;
  { t.constrain(u) } -> std::convertible_to<std::vector<double>>;
  { t.parameter_names() } -> std::convertible_to<std::vector<std::string>>;
  { t.initial_point() } -> std::convertible_to<std::vector<double>>;
};

/// A bare log-density on R^d with the identity transform.
class FunctionTarget {
 public:
  FunctionTarget(std::size_t dim, std::function<double(std::span<const double>)> f,
                 std::vector<double> center = {}, std::vector<std::string> names = {})
      : dim_(dim), f_(std::move(f)), center_(std::move(center)), names_(std::move(names)) {
    if (center_.empty()) center_.assign(dim_, 0.0);
    if (names_.empty())
      for (std::size_t i = 0; i < dim_; ++i) names_.push_back("x" + std::to_string(i));
  }
  std::size_t dim() const { return dim_; }
  double log_density(std::span<const double> u) const { return f_(u); }
  std::vector<double> constrain(std::span<const double> u) const { return {u.begin(), u.end()}; }
  std::vector<std::string> parameter_names() const { return names_; }
  std::vector<double> initial_point() const { return center_; }

 private:
  std::size_t dim_;
  std::function<double(std::span<const double>)> f_;
  std::vector<double> center_;
  std::vector<std::string> names_;
};

/// Retained draws in constrained space, row-major (B x P), ordered by chain
/// then iteration.
struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<std::size_t> chain;
  std::vector<std::size_t> iteration;
  std::vector<double> acceptance;  // per chain, post-warmup
  std::size_t n_chains = 0;

  std::size_t size() const { return chain.size(); }
  std::size_t dim() const { return names.size(); }
  std::span<const double> draw(std::size_t i) const { return {values.data() + i * dim(), dim()}; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = values[i * dim() + j];
    return out;
  }

  std::size_t index_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) fail(ErrorCategory::config, "no parameter named '" + name + "' in draws");
    return static_cast<std::size_t>(it - names.begin());
  }

  /// Draws from one chain, for one parameter, in iteration order.
  std::vector<double> chain_column(std::size_t c, std::size_t j) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (chain[i] == c) out.push_back(values[i * dim() + j]);
    return out;
  }

  /// Appends another draw set with the same parameter names, renumbering its chains.
  void append(const PosteriorDraws& other) {
    if (names.empty()) names = other.names;
    if (other.names != names) fail(ErrorCategory::inconsistency, "cannot merge draws with different parameters");
    values.insert(values.end(), other.values.begin(), other.values.end());
    for (auto c : other.chain) chain.push_back(c + n_chains);
    iteration.insert(iteration.end(), other.iteration.begin(), other.iteration.end());
    acceptance.insert(acceptance.end(), other.acceptance.begin(), other.acceptance.end());
    n_chains += other.n_chains;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5DEECE66DULL));
}

struct Block {
  std::vector<std::size_t> idx;
  Eigen::MatrixXd chol;  // lower Cholesky factor of the proposal covariance
  double log_scale = 0.0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

// Warmup schedule. An opening phase of one-coordinate-at-a-time updates learns
// per-coordinate step sizes; joint proposals then use the empirical covariance
// of the recent half of all warmup draws, refreshed at the end of doubling
// windows; a closing phase tunes the scale only.
struct WarmupPlan {
  std::size_t opening = 0;      // componentwise iterations
  std::vector<std::size_t> ends;  // covariance refresh points
};

inline WarmupPlan warmup_plan(std::size_t warmup) {
  WarmupPlan plan;
  if (warmup < 150) return plan;
  const std::size_t term = 50;
  plan.opening = std::max<std::size_t>(75, warmup / 5);
  std::size_t start = plan.opening, width = 25;
  const std::size_t stop = warmup - term;
  while (start < stop) {
    std::size_t end = start + width;
    if (end + 2 * width > stop) end = stop;
    plan.ends.push_back(end);
    start = end;
    width *= 2;
  }
  return plan;
}

template <SamplingTarget T>
std::vector<double> initialize_chain(const T& target, const SamplerConfig& cfg, std::size_t c,
                                     std::string* report = nullptr) {
  const std::size_t d = target.dim();
  const auto center = target.initial_point();
  std::mt19937_64 rng(stream_seed(cfg.seed, 1000003ULL * (c + 1)));
  std::normal_distribution<double> z;
  std::vector<double> x(d);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (std::size_t i = 0; i < d; ++i) x[i] = center[i] + cfg.init_spread * z(rng);
    const double lp = target.log_density(x);
    if (std::isfinite(lp)) return x;
  }
  if (report) *report = "chain " + std::to_string(c) + ": 100 initialization attempts gave a non-finite log density";
  return {};
}

template <SamplingTarget T>
PosteriorDraws run_chain(const T& target, const SamplerConfig& cfg, std::size_t c, std::vector<double> x) {
  const std::size_t d = target.dim();
  std::mt19937_64 rng(stream_seed(cfg.seed, c));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Block> blocks;
  if (cfg.blocks.empty()) {
    Block b;
    b.idx.resize(d);
    std::iota(b.idx.begin(), b.idx.end(), std::size_t{0});
    blocks.push_back(std::move(b));
  } else {
    for (const auto& idx : cfg.blocks) {
      for (auto i : idx)
        if (i >= d) fail(ErrorCategory::config, "sampler block index out of range");
      blocks.push_back(Block{idx, {}, 0.0, 0, 0});
    }
  }
  for (auto& b : blocks) {
    b.chol = Eigen::MatrixXd::Identity(b.idx.size(), b.idx.size());
    b.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(b.idx.size())));
  }

  const auto plan = warmup_plan(cfg.warmup);
  std::vector<double> coord_log_scale(d, 0.0);
  std::size_t next_window = 0;
  std::vector<std::vector<double>> stored;
  std::size_t rm_step = 0;

  PosteriorDraws out;
  out.names = target.parameter_names();
  out.n_chains = 1;
  std::size_t post_prop = 0, post_acc = 0;

  double lp = target.log_density(x);
  std::vector<double> prop(d);
  Eigen::VectorXd zv;
  auto metropolis = [&](double lp_new) {
    const double log_alpha = std::isnan(lp_new) ? -std::numeric_limits<double>::infinity() : lp_new - lp;
    const bool accept = std::log(unif(rng)) < log_alpha;
    if (accept) {
      x.swap(prop);
      lp = lp_new;
    }
    return std::pair{accept, std::min(1.0, std::exp(log_alpha))};
  };

  const std::size_t total = cfg.warmup + cfg.keep * cfg.thin;
  for (std::size_t it = 0; it < total; ++it) {
    const bool warm = it < cfg.warmup;
    if (warm) ++rm_step;
    const double gain = std::pow(static_cast<double>(rm_step), -0.6);

    if (it < plan.opening) {
      for (std::size_t i = 0; i < d; ++i) {
        prop = x;
        prop[i] += std::exp(coord_log_scale[i]) * normal(rng);
        const auto [accept, a] = metropolis(target.log_density(prop));
        coord_log_scale[i] += gain * (a - 0.44);
      }
    } else {
      for (auto& b : blocks) {
        const std::size_t k = b.idx.size();
        zv.resize(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) zv[static_cast<Eigen::Index>(i)] = normal(rng);
        Eigen::VectorXd step = b.chol.template triangularView<Eigen::Lower>() * zv;
        step *= std::exp(b.log_scale);
        prop = x;
        for (std::size_t i = 0; i < k; ++i) prop[b.idx[i]] += step[static_cast<Eigen::Index>(i)];
        const auto [accept, a] = metropolis(target.log_density(prop));
        if (warm) {
          b.log_scale += gain * (a - 0.234);
        } else {
          ++post_prop;
          post_acc += accept ? 1 : 0;
        }
      }
    }

    if (warm && plan.opening > 0) {
      if (it + 1 == plan.opening) {
        // Hand over: diagonal proposal from the learned coordinate scales.
        for (auto& b : blocks) {
          for (std::size_t i = 0; i < b.idx.size(); ++i)
            b.chol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                std::exp(coord_log_scale[b.idx[i]]) * std::sqrt(static_cast<double>(b.idx.size())) / 2.38;
        }
        rm_step = 0;
      }
      if (it >= plan.opening / 2) stored.push_back(x);
      if (next_window < plan.ends.size() && it + 1 == plan.ends[next_window]) {
        const std::size_t n = stored.size() - stored.size() / 2;
        const std::size_t first = stored.size() / 2;
        for (auto& b : blocks) {
          const std::size_t k = b.idx.size();
          const auto K = static_cast<Eigen::Index>(k);
          Eigen::VectorXd mean = Eigen::VectorXd::Zero(K);
          for (std::size_t s = first; s < stored.size(); ++s)
            for (std::size_t i = 0; i < k; ++i) mean[static_cast<Eigen::Index>(i)] += stored[s][b.idx[i]];
          mean /= static_cast<double>(n);
          Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
          Eigen::VectorXd dv(K);
          for (std::size_t s = first; s < stored.size(); ++s) {
            for (std::size_t i = 0; i < k; ++i)
              dv[static_cast<Eigen::Index>(i)] = stored[s][b.idx[i]] - mean[static_cast<Eigen::Index>(i)];
            cov.noalias() += dv * dv.transpose();
          }
          cov /= static_cast<double>(n > 1 ? n - 1 : 1);
          // Shrink toward a small diagonal while few draws are available.
          const double nn = static_cast<double>(n);
          cov = (nn / (nn + 5.0)) * cov;
          cov.diagonal().array() += 1e-3 * (5.0 / (nn + 5.0)) + 1e-6;
          Eigen::LLT<Eigen::MatrixXd> llt(cov);
          if (llt.info() == Eigen::Success) {
            b.chol = llt.matrixL();
            b.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(k)));
          }
        }
        rm_step = 0;
        ++next_window;
      }
    }

    if (!warm && (it - cfg.warmup + 1) % cfg.thin == 0) {
      const auto theta = target.constrain(x);
      out.values.insert(out.values.end(), theta.begin(), theta.end());
      out.chain.push_back(0);
      out.iteration.push_back((it - cfg.warmup) / cfg.thin);
    }
  }
  out.acceptance.push_back(post_prop ? static_cast<double>(post_acc) / static_cast<double>(post_prop) : 0.0);
  return out;
}

}  // namespace detail

/// One start point per chain, drawn around the target's initial point.
template <SamplingTarget T>
std::vector<std::vector<double>> initialize_chains(const T& target, const SamplerConfig& cfg) {
  std::vector<std::vector<double>> starts;
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    std::string report;
    auto x = detail::initialize_chain(target, cfg, c, &report);
    if (x.empty()) fail(ErrorCategory::initialization, report);
    starts.push_back(std::move(x));
  }
  return starts;
}

/// Blocks to use: the configured ones, else the target's own suggestion, else
/// a single joint block.
template <SamplingTarget T>
std::vector<std::vector<std::size_t>> resolve_blocks(const T& target, const SamplerConfig& cfg) {
  if (!cfg.blocks.empty()) return cfg.blocks;
  if constexpr (requires { target.default_blocks(); }) return target.default_blocks();
  return {};
}

template <SamplingTarget T>
PosteriorDraws sample(const T& target, const SamplerConfig& config) {
  config.validate();
  SamplerConfig cfg = config;
  cfg.blocks = resolve_blocks(target, config);
  const auto starts = initialize_chains(target, cfg);
  std::vector<PosteriorDraws> per_chain(cfg.chains);
  if (cfg.parallel && cfg.chains > 1) {
    std::vector<std::future<PosteriorDraws>> jobs;
    for (std::size_t c = 0; c < cfg.chains; ++c)
      jobs.push_back(std::async(std::launch::async, [&, c] { return detail::run_chain(target, cfg, c, starts[c]); }));
    for (std::size_t c = 0; c < cfg.chains; ++c) per_chain[c] = jobs[c].get();
  } else {
    for (std::size_t c = 0; c < cfg.chains; ++c) per_chain[c] = detail::run_chain(target, cfg, c, starts[c]);
  }
  PosteriorDraws out;
  out.names = target.parameter_names();
  for (const auto& pc : per_chain) out.append(pc);
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

namespace detail {

inline void check_diagnosable(const PosteriorDraws& d) {
  if (d.n_chains < 2) fail(ErrorCategory::diagnostic_unavailable, "R-hat needs at least two chains");
  for (std::size_t c = 0; c < d.n_chains; ++c)
    if (d.chain_column(c, 0).size() < 10)
      fail(ErrorCategory::diagnostic_unavailable, "R-hat needs at least 10 draws per chain");
}

inline std::vector<std::vector<double>> split_chains(const PosteriorDraws& d, std::size_t j) {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < d.n_chains; ++c) {
    const auto x = d.chain_column(c, j);
    const std::size_t h = x.size() / 2;
    out.emplace_back(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h));
    out.emplace_back(x.end() - static_cast<std::ptrdiff_t>(h), x.end());
  }
  return out;
}

inline double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace detail

/// Split-chain Gelman-Rubin statistic for every parameter.
inline std::vector<double> rhat(const PosteriorDraws& d) {
  detail::check_diagnosable(d);
  std::vector<double> out(d.dim());
  for (std::size_t j = 0; j < d.dim(); ++j) {
    const auto chains = detail::split_chains(d, j);
    const double n = static_cast<double>(chains.front().size());
    const double m = static_cast<double>(chains.size());
    std::vector<double> means;
    double w = 0.0;
    for (const auto& c : chains) {
      means.push_back(detail::mean_of(c));
      w += detail::var_of(c);
    }
    w /= m;
    const double b = n * detail::var_of(means);
    if (w < 1e-12) {
      out[j] = b < 1e-12 ? 1.0 : std::numeric_limits<double>::infinity();
      continue;
    }
    const double var_plus = (n - 1.0) / n * w + b / n;
    out[j] = std::sqrt(var_plus / w);
  }
  return out;
}

/// Multi-chain effective sample size (Geyer initial monotone sequence).
inline std::vector<double> ess(const PosteriorDraws& d) {
  detail::check_diagnosable(d);
  std::vector<double> out(d.dim());
  for (std::size_t j = 0; j < d.dim(); ++j) {
    std::vector<std::vector<double>> chains;
    for (std::size_t c = 0; c < d.n_chains; ++c) chains.push_back(d.chain_column(c, j));
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    const double m = static_cast<double>(chains.size());
    std::vector<double> means, vars;
    for (auto& c : chains) {
      c.resize(n);
      means.push_back(detail::mean_of(c));
      vars.push_back(detail::var_of(c));
    }
    const double w = detail::mean_of(vars);
    const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + detail::var_of(means);
    if (!(w > 1e-12)) {
      out[j] = m * static_cast<double>(n);
      continue;
    }
    auto rho = [&](std::size_t lag) {
      double acov = 0.0;
      for (std::size_t c = 0; c < chains.size(); ++c) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += (chains[c][t] - means[c]) * (chains[c][t + lag] - means[c]);
        acov += s / static_cast<double>(n);
      }
      acov /= m;
      return 1.0 - (w - acov) / var_plus;
    };
    double tau = -1.0;  // sum over pairs of 2*Gamma_k minus the lag-0 term
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < n; k += 2) {
      double pair = rho(k) + rho(k + 1);
      if (pair <= 0.0) break;
      pair = std::min(pair, prev_pair);
      prev_pair = pair;
      tau += 2.0 * pair;
    }
    out[j] = m * static_cast<double>(n) / std::max(tau, 1.0 / std::log10(m * static_cast<double>(n)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_draws_csv(std::ostream& os, const PosteriorDraws& d) {
  os << "chain,iteration";
  for (const auto& n : d.names) os << ',' << n;
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << d.chain[i] << ',' << d.iteration[i];
    for (double v : d.draw(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

inline PosteriorDraws read_draws_csv(std::istream& is) {
  PosteriorDraws d;
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCategory::parse, "draws file is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> header;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration")
      fail(ErrorCategory::parse, "draws header must start with chain,iteration");
    d.names.assign(header.begin() + 2, header.end());
  }
  std::size_t max_chain = 0;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != d.names.size() + 2)
      fail(ErrorCategory::parse, "draws row " + std::to_string(row) + " has the wrong number of fields");
    try {
      const auto c = static_cast<std::size_t>(std::stoull(cells[0]));
      d.chain.push_back(c);
      d.iteration.push_back(static_cast<std::size_t>(std::stoull(cells[1])));
      max_chain = std::max(max_chain, c);
      for (std::size_t k = 2; k < cells.size(); ++k) d.values.push_back(std::stod(cells[k]));
    } catch (const std::logic_error&) {
      fail(ErrorCategory::parse, "draws row " + std::to_string(row) + " has a non-numeric field");
    }
  }
  d.n_chains = d.chain.empty() ? 0 : max_chain + 1;
  return d;
}

}  // namespace fieldpred
