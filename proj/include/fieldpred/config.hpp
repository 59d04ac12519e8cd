#pragma once

// Run configuration read from JSON. Unknown keys are errors at every level.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldpred/covmodels.hpp"
#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/hier.hpp"
#include "fieldpred/predict.hpp"
#include "fieldpred/priors.hpp"
#include "fieldpred/sampler.hpp"

namespace fieldpred {

using Json = nlohmann::json;

enum class ModelKind { lls, glfp, seasonal };

struct ModelConfig {
  ModelKind kind = ModelKind::lls;
  Family family = Family::sev;
  double p = 0.05;
  bool hierarchical = true;
  double p1 = 0.5;
  double p2 = 0.2;
  SeasonalKind seasonal = SeasonalKind::cd;
  bool pin_first_month = false;
};

struct PredictionConfig {
  // Horizons measured from the freeze point, each predicted as (0, h].
  std::vector<double> horizons{365.0};
  std::vector<std::string> scopes{"all"};
  double alpha = 0.05;
  PredictMethod method = PredictMethod::automatic;
  // Report the first horizon whose lower bound exceeds this count.
  std::optional<std::size_t> lower_exceeds;
  // Seasonal models: number of consecutive calendar months to predict.
  std::size_t months = 12;
};

struct RollConfig {
  std::optional<std::size_t> steps;  // default 26 fixed steps, or 12 months for seasonal models
  double step = 7.0;                 // window length; seasonal models roll by calendar month instead
  std::string schedule;  // CSV of (step, unit_id, kind); empty means none
};

struct RunConfig {
  ModelConfig model;
  std::map<std::string, PriorSpec> priors;  // overrides of the model defaults
  SamplerConfig sampler;
  PredictionConfig prediction;
  RollConfig roll;
  std::string data;
  std::string freeze_date;
  std::string out_dir = "out";
  std::string time_unit = "days";
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCategory::config, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(ErrorCategory::config, "unknown key '" + k + "' in " + where);
}

template <class T>
T get(const Json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCategory::config, where + "." + key + " has the wrong type");
  }
}

template <class T>
void read_opt(const Json& j, const std::string& key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

inline PriorSpec parse_prior(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("family")) fail(ErrorCategory::config, where + " needs a 'family'");
  const auto fam = get<std::string>(j, "family", where);
  auto num = [&](const char* k) { return get<double>(j, k, where); };
  try {
    if (fam == "lognormal" || fam == "lognormal_trunc01") {
      check_keys(j, {"family", "lower", "upper"}, where);
      return fam == "lognormal" ? PriorSpec::lognormal_interval(num("lower"), num("upper"))
                                : PriorSpec::lognormal_trunc01(num("lower"), num("upper"));
    }
    if (fam == "normal" || fam == "logit_normal") {
      check_keys(j, {"family", "mean", "sd"}, where);
      return fam == "normal" ? PriorSpec::normal(num("mean"), num("sd")) : PriorSpec::logit_normal(num("mean"), num("sd"));
    }
    if (fam == "half_t") {
      check_keys(j, {"family", "df", "scale"}, where);
      return PriorSpec::half_t(num("df"), num("scale"));
    }
    if (fam == "half_cauchy") {
      check_keys(j, {"family", "scale"}, where);
      return PriorSpec::half_cauchy(num("scale"));
    }
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::config) throw;
    fail(ErrorCategory::config, where + ": " + e.what());
  }
  fail(ErrorCategory::config, where + ": unknown prior family '" + fam + "'");
}

}  // namespace detail

inline std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::lls: return "lls";
    case ModelKind::glfp: return "glfp";
    case ModelKind::seasonal: return "seasonal";
  }
  return "?";
}

inline RunConfig parse_run_config(const Json& j) {
  using detail::check_keys;
  using detail::read_opt;
  RunConfig c;
  check_keys(j, {"model", "priors", "sampler", "prediction", "roll", "data", "freeze_date", "output", "seed"}, "config");
  if (j.contains("model")) {
    const auto& m = j["model"];
    check_keys(m, {"kind", "family", "p", "hierarchical", "p1", "p2", "seasonal", "pin_first_month"}, "model");
    std::string kind = "lls";
    read_opt(m, "kind", kind, "model");
    if (kind == "lls")
      c.model.kind = ModelKind::lls;
    else if (kind == "glfp")
      c.model.kind = ModelKind::glfp;
    else if (kind == "seasonal")
      c.model.kind = ModelKind::seasonal;
    else
      fail(ErrorCategory::config, "model.kind must be lls, glfp or seasonal");
    if (m.contains("family")) {
      try {
        c.model.family = parse_family(detail::get<std::string>(m, "family", "model"));
      } catch (const Error& e) {
        fail(ErrorCategory::config, std::string("model.family: ") + e.what());
      }
    }
    read_opt(m, "p", c.model.p, "model");
    read_opt(m, "hierarchical", c.model.hierarchical, "model");
    read_opt(m, "p1", c.model.p1, "model");
    read_opt(m, "p2", c.model.p2, "model");
    if (m.contains("seasonal")) {
      const auto s = detail::get<std::string>(m, "seasonal", "model");
      if (s != "cd" && s != "ph") fail(ErrorCategory::config, "model.seasonal must be cd or ph");
      c.model.seasonal = s == "cd" ? SeasonalKind::cd : SeasonalKind::ph;
    }
    read_opt(m, "pin_first_month", c.model.pin_first_month, "model");
  }
  if (j.contains("priors")) {
    if (!j["priors"].is_object()) fail(ErrorCategory::config, "priors must be an object");
    for (const auto& [k, v] : j["priors"].items()) c.priors[k] = detail::parse_prior(v, "priors." + k);
  }
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    check_keys(s, {"chains", "warmup", "keep", "thin", "seed", "algorithm", "parallel"}, "sampler");
    read_opt(s, "chains", c.sampler.chains, "sampler");
    read_opt(s, "warmup", c.sampler.warmup, "sampler");
    read_opt(s, "keep", c.sampler.keep, "sampler");
    read_opt(s, "thin", c.sampler.thin, "sampler");
    read_opt(s, "seed", c.sampler.seed, "sampler");
    read_opt(s, "parallel", c.sampler.parallel, "sampler");
    if (s.contains("algorithm")) {
      const auto a = detail::get<std::string>(s, "algorithm", "sampler");
      if (a == "adaptive_rwm")
        c.sampler.algorithm = Algorithm::adaptive_rwm;
      else if (a == "gradient_hmc")
        c.sampler.algorithm = Algorithm::gradient_hmc;
      else
        fail(ErrorCategory::config, "sampler.algorithm must be adaptive_rwm or gradient_hmc");
    }
  }
  if (j.contains("seed")) c.sampler.seed = detail::get<std::uint64_t>(j, "seed", "config");
  if (j.contains("prediction")) {
    const auto& p = j["prediction"];
    check_keys(p, {"horizons", "scopes", "alpha", "method", "lower_exceeds", "months"}, "prediction");
    read_opt(p, "horizons", c.prediction.horizons, "prediction");
    read_opt(p, "scopes", c.prediction.scopes, "prediction");
    read_opt(p, "alpha", c.prediction.alpha, "prediction");
    read_opt(p, "months", c.prediction.months, "prediction");
    if (p.contains("method")) c.prediction.method = parse_method(detail::get<std::string>(p, "method", "prediction"));
    if (p.contains("lower_exceeds")) c.prediction.lower_exceeds = detail::get<std::size_t>(p, "lower_exceeds", "prediction");
  }
  if (j.contains("roll")) {
    const auto& r = j["roll"];
    check_keys(r, {"steps", "step", "schedule"}, "roll");
    if (r.contains("steps")) c.roll.steps = detail::get<std::size_t>(r, "steps", "roll");
    read_opt(r, "step", c.roll.step, "roll");
    read_opt(r, "schedule", c.roll.schedule, "roll");
  }
  read_opt(j, "data", c.data, "config");
  read_opt(j, "freeze_date", c.freeze_date, "config");
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, {"dir", "time_unit"}, "output");
    read_opt(o, "dir", c.out_dir, "output");
    read_opt(o, "time_unit", c.time_unit, "output");
  }

  for (double h : c.prediction.horizons)
    if (!(h > 0.0)) fail(ErrorCategory::config, "prediction horizons must be > 0");
  if (!(c.prediction.alpha > 0.0 && c.prediction.alpha < 1.0))
    fail(ErrorCategory::config, "prediction.alpha must lie in (0,1)");
  if (!(c.roll.step > 0.0) || c.roll.steps == std::size_t{0}) fail(ErrorCategory::config, "roll needs step > 0 and steps >= 1");
  try {
    c.sampler.validate();
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::unsupported) throw;
    fail(ErrorCategory::config, e.what());
  }
  return c;
}

inline RunConfig parse_run_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);  // comments allowed
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::config, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

/// Relative input paths in the file (data, roll.schedule) are taken relative
/// to the config's own directory.
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto c = parse_run_config(ss.str());
  const auto base = std::filesystem::path(path).parent_path();
  for (auto* p : {&c.data, &c.roll.schedule})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return c;
}

/// Model defaults with the configured overrides applied. An override that
/// names no prior of the model is an error, so each parameter gets one prior.
inline PriorMap resolve_priors(const RunConfig& c) {
  PriorMap m;
  switch (c.model.kind) {
    case ModelKind::lls: m = default_lls_priors(c.model.hierarchical); break;
    case ModelKind::glfp: m = default_glfp_priors(c.model.hierarchical); break;
    case ModelKind::seasonal: {
      const SeasonalModelSpec d;
      m = {{"coef", d.coef_prior}, {"sigma0", d.sigma0_prior}};
      break;
    }
  }
  for (const auto& [k, v] : c.priors) {
    const auto it = m.find(k);
    if (it == m.end()) fail(ErrorCategory::config, "prior '" + k + "' matches no parameter of this model");
    if (v.support() != it->second.support())
      fail(ErrorCategory::config, "prior '" + k + "' has the wrong support for its parameter");
    it->second = v;
  }
  return m;
}

}  // namespace fieldpred
