// fieldpred: fit / predict / roll / simulate / diagnose.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fieldpred/fieldpred.hpp"

using namespace fieldpred;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config, data, freeze, out, preset, method, draws;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool pin_first_month = false;
  bool strict = false;
  // simulate
  std::string scale = "desk";
  std::optional<std::size_t> n_datasets;
  std::vector<double> levels;
  std::size_t workers = 0;
  bool oracle = false;
};

RunConfig effective_config(const Options& o, bool sampler_preset_flag) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.data.empty()) c.data = o.data;
  if (!o.freeze.empty()) c.freeze_date = o.freeze;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.seed) c.sampler.seed = *o.seed;
  if (!o.method.empty()) c.prediction.method = parse_method(o.method);
  if (o.alpha) {
    if (!(*o.alpha > 0.0 && *o.alpha < 1.0)) fail(ErrorCategory::config, "--alpha must lie in (0,1)");
    c.prediction.alpha = *o.alpha;
  }
  if (o.pin_first_month) c.model.pin_first_month = true;
  if (sampler_preset_flag && !o.preset.empty()) {
    const auto s = sampler_preset(o.preset);
    c.sampler.warmup = s.warmup;
    c.sampler.keep = s.keep;
    c.sampler.thin = s.thin;
  }
  if (c.data.empty()) fail(ErrorCategory::config, "no data file (--data or \"data\" in the config)");
  return c;
}

FreezePoint freeze_of(const RunConfig& c) { return c.freeze_date.empty() ? FreezePoint{} : FreezePoint::parse(c.freeze_date); }

Date calendar_freeze(const RunConfig& c) {
  const auto f = freeze_of(c);
  if (!f.date) fail(ErrorCategory::config, "seasonal models need a calendar --freeze-date (YYYY-MM-DD)");
  return *f.date;
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (auto& ch : out)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  return out;
}

// Output files are buffered and written only after the command succeeds, so
// a failed run leaves no partial files behind.
class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {}
  std::ostream& operator[](const std::string& name) { return files_[name]; }

  void commit() const {
    try {
      fs::create_directories(dir_);
    } catch (const fs::filesystem_error& e) {
      fail(ErrorCategory::io, "cannot create output directory '" + dir_ + "': " + e.what());
    }
    for (const auto& [name, text] : files_) {
      const auto p = fs::path(dir_) / name;
      std::ofstream os(p, std::ios::binary);
      os << text.str();
      if (!os) fail(ErrorCategory::io, "cannot write '" + p.string() + "'");
    }
  }

 private:
  std::string dir_;
  std::map<std::string, std::ostringstream> files_;
};

PosteriorDraws read_draws_file(const std::string& path) {
  auto in = open_input(path);
  return read_draws_csv(in);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Models

template <class Fn>
void with_lifetime_model(const RunConfig& c, std::span<const LifetimeRecord> recs, Fn&& fn) {
  const auto priors = resolve_priors(c);
  if (c.model.kind == ModelKind::lls) {
    const LlsModel m({c.model.family, c.model.p, c.model.hierarchical, {}}, recs, priors);
    fn(m);
  } else if (c.model.kind == ModelKind::glfp) {
    const GlfpModel m({c.model.p1, c.model.p2, c.model.hierarchical, {}}, recs, priors);
    fn(m);
  } else {
    fail(ErrorCategory::config, "internal: not a lifetime model");
  }
}

SeasonalModelSpec seasonal_spec(const RunConfig& c) {
  const auto priors = resolve_priors(c);
  SeasonalModelSpec s;
  s.kind = c.model.seasonal;
  s.pin_first_month = c.model.pin_first_month;
  s.coef_prior = priors.at("coef");
  s.sigma0_prior = priors.at("sigma0");
  return s;
}

struct ClusterData {
  std::string name;
  std::vector<WarrantyUnit> units;
  std::vector<SeasonalRiskUnit> risk;
};

std::vector<ClusterData> split_clusters(const WarrantyData& w) {
  std::vector<ClusterData> out;
  for (const auto& name : w.clusters) {
    ClusterData cd{name, {}, {}};
    for (const auto& u : w.units)
      if (u.cluster == name) cd.units.push_back(u);
    for (std::size_t i = 0; i < w.risk.size(); ++i)
      if (w.risk_cluster[i] == name) cd.risk.push_back(w.risk[i]);
    out.push_back(std::move(cd));
  }
  return out;
}

template <class M>
void check_draws_match(const M& model, const PosteriorDraws& d, const std::string& what) {
  if (d.names != model.parameter_names())
    fail(ErrorCategory::inconsistency, what + " does not match the model's parameters");
  if (d.size() == 0) fail(ErrorCategory::inconsistency, what + " holds no draws");
}

// ---------------------------------------------------------------------------
// fit

double write_diagnostics(std::ostream& os, const std::string& model, const PosteriorDraws& d) {
  std::vector<double> rh(d.dim(), std::nan("")), es(d.dim(), std::nan(""));
  try {
    rh = rhat(d);
    es = ess(d);
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::diagnostic_unavailable) throw;
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < d.dim(); ++j) {
    auto col = d.column(j);
    double m = 0.0, v = 0.0;
    for (double x : col) m += x;
    m /= static_cast<double>(col.size());
    for (double x : col) v += (x - m) * (x - m);
    const double sd = col.size() > 1 ? std::sqrt(v / static_cast<double>(col.size() - 1)) : 0.0;
    std::sort(col.begin(), col.end());
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%.8g,%.8g,%.8g,%.8g,%.8g,%.6g,%.6g\n", model.c_str(), d.names[j].c_str(), m,
                  sd, detail::sorted_quantile(col, 0.025), detail::sorted_quantile(col, 0.5),
                  detail::sorted_quantile(col, 0.975), rh[j], es[j]);
    os << buf;
    if (std::isfinite(rh[j])) worst = std::max(worst, rh[j]);
  }
  return worst;
}

constexpr const char* kDiagHeader = "model,parameter,mean,sd,q025,q500,q975,rhat,ess\n";

void report_convergence(double worst, bool strict) {
  std::cout << "max rhat " << fmt("%.4f", worst) << '\n';
  if (worst > 1.05) {
    const std::string msg = "max rhat " + fmt("%.4f", worst) + " exceeds 1.05";
    if (strict) fail(ErrorCategory::convergence, msg);
    std::cerr << "warning: convergence: " << msg << '\n';
  }
}

int cmd_fit(const Options& o) {
  const auto c = effective_config(o, true);
  Outputs out(c.out_dir);
  if (c.model.kind == ModelKind::seasonal) {
    const auto w = load_warranty_units(c.data);
    auto& diag = out["diagnostics.csv"];
    diag << kDiagHeader;
    double worst = 0.0;
    const auto clusters = split_clusters(w);
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const SeasonalModel model(seasonal_spec(c), clusters[k].units);
      SamplerConfig sc = c.sampler;
      sc.seed = detail::stream_seed(c.sampler.seed, k);
      const auto draws = sample(model, sc);
      auto& os = out["draws_" + file_safe(clusters[k].name) + ".csv"];
      write_draws_csv(os, draws);
      worst = std::max(worst, write_diagnostics(diag, clusters[k].name, draws));
      std::cout << "cluster " << clusters[k].name << ": " << clusters[k].units.size() << " units, " << draws.size()
                << " draws\n";
    }
    out.commit();
    report_convergence(worst, o.strict);
    return 0;
  }

  const auto data = load_records(c.data, freeze_of(c));
  {
    auto& os = out["load_summary.csv"];
    write_load_summary(os, data.summary);
  }
  double worst = 0.0;
  with_lifetime_model(c, data.records, [&](const auto& model) {
    const auto draws = sample(model, c.sampler);
    auto& os = out["draws.csv"];
    write_draws_csv(os, draws);
    auto& diag = out["diagnostics.csv"];
    diag << kDiagHeader;
    worst = write_diagnostics(diag, std::string(model_kind_name(c.model.kind)), draws);
    std::cout << "fit " << model_kind_name(c.model.kind) << ": " << model.groups().size() << " groups, "
              << data.summary.total << " units, " << draws.size() << " draws\n";
  });
  out.commit();
  report_convergence(worst, o.strict);
  return 0;
}

// ---------------------------------------------------------------------------
// predict / roll

void warn_excluded(const PredictiveDistribution& pd) {
  if (pd.excluded_units > 0)
    std::cerr << "warning: exhausted-risk: " << pd.excluded_units << " unit(s) in scope " << pd.scope
              << " cannot survive to their current age and were excluded\n";
}

void write_time_unit(std::ostream& os, const RunConfig& c) { os << "# time_unit=" << c.time_unit << '\n'; }

Scope scope_of(const std::string& s) { return s == "all" ? Scope::all() : Scope::single(s); }

struct SeasonalSetup {
  std::vector<ClusterData> clusters;
  std::vector<SeasonalModel> models;
  std::vector<PosteriorDraws> draws;
};

SeasonalSetup seasonal_setup(const RunConfig& c, const Options& o) {
  SeasonalSetup s;
  s.clusters = split_clusters(load_warranty_units(c.data));
  const std::string dir = o.draws.empty() ? c.out_dir : o.draws;
  for (const auto& cl : s.clusters) {
    s.models.emplace_back(seasonal_spec(c), cl.units);
    s.draws.push_back(read_draws_file((fs::path(dir) / ("draws_" + file_safe(cl.name) + ".csv")).string()));
    check_draws_match(s.models.back(), s.draws.back(), "draws for cluster " + cl.name);
  }
  return s;
}

std::vector<SeasonalFit> fits_for(const SeasonalSetup& s, const std::string& scope,
                                  const std::vector<std::vector<SeasonalRiskUnit>>& risk) {
  std::vector<SeasonalFit> fits;
  for (std::size_t k = 0; k < s.clusters.size(); ++k)
    if (scope == "all" || scope == s.clusters[k].name) fits.push_back({&s.models[k], &s.draws[k], risk[k]});
  if (fits.empty()) fail(ErrorCategory::missing_group, "unknown cluster '" + scope + "'");
  return fits;
}

Date next_month_start(Date d) {
  const std::chrono::year_month_day ymd{d};
  return Date{(ymd.year() / ymd.month() / std::chrono::day{1}) + std::chrono::months{1}};
}

PredictionRow seasonal_row(const PredictiveDistribution& pd, double alpha, Date freeze, Date start, Date end) {
  auto r = summarize(pd, alpha, static_cast<double>(days_between(freeze, start)));
  r.window_end = static_cast<double>(days_between(freeze, end));
  return r;
}

int cmd_predict(const Options& o) {
  const auto c = effective_config(o, false);
  Outputs out(c.out_dir);
  const auto& pc = c.prediction;
  auto& os = out["predictions.csv"];
  write_time_unit(os, c);
  write_prediction_header(os);

  if (c.model.kind == ModelKind::seasonal) {
    const Date freeze = calendar_freeze(c);
    const auto s = seasonal_setup(c, o);
    std::vector<std::vector<SeasonalRiskUnit>> risk;
    for (const auto& cl : s.clusters) risk.push_back(cl.risk);
    for (const auto& scope : pc.scopes) {
      const auto fits = fits_for(s, scope, risk);
      Date start = freeze;
      for (std::size_t k = 0; k < pc.months; ++k) {
        const Date end = next_month_start(start);
        const auto pd = seasonal_predict_joint(fits, start, end, pc.method, scope);
        warn_excluded(pd);
        write_prediction_row(os, seasonal_row(pd, pc.alpha, freeze, start, end));
        start = end;
      }
    }
    out.commit();
    return 0;
  }

  const auto data = load_records(c.data, freeze_of(c));
  const auto draws = read_draws_file(o.draws.empty() ? (fs::path(c.out_dir) / "draws.csv").string() : o.draws);
  with_lifetime_model(c, data.records, [&](const auto& model) {
    check_draws_match(model, draws, "draws file");
    for (const auto& scope : pc.scopes) {
      std::optional<double> first;
      for (double h : pc.horizons) {
        const auto pd = predictive_cdf(model, draws, data.risk, {h}, scope_of(scope), pc.method);
        warn_excluded(pd);
        const auto row = summarize(pd, pc.alpha, 0.0);
        write_prediction_row(os, row);
        if (pc.lower_exceeds && !first && row.lower > *pc.lower_exceeds) first = h;
      }
      if (pc.lower_exceeds) {
        std::cout << "scope " << scope << ": lower bound first exceeds " << *pc.lower_exceeds << " at horizon "
                  << (first ? fmt("%.10g", *first) : std::string("none")) << '\n';
      }
    }
  });
  out.commit();
  return 0;
}

std::vector<std::vector<RiskEvent>> events_by_step(const RunConfig& c, std::size_t steps) {
  std::vector<std::vector<RiskEvent>> out(steps + 1);
  if (c.roll.schedule.empty()) return out;
  for (const auto& e : load_schedule(c.roll.schedule)) {
    if (e.step > steps) continue;
    out[e.step].push_back(e.event);
  }
  return out;
}

// Each step predicts the next window from the current risk set, then applies
// that step's events. Rows named "cumulative:<scope>" predict (freeze, end of
// step] for the units never removed before that step.
int cmd_roll(const Options& o) {
  const auto c = effective_config(o, false);
  Outputs out(c.out_dir);
  const auto& pc = c.prediction;
  auto& os = out["roll.csv"];
  write_time_unit(os, c);
  write_prediction_header(os);
  auto& sizes = out["risk_sizes.csv"];
  sizes << "step,scope,in_service\n";

  if (c.model.kind == ModelKind::seasonal) {
    const std::size_t steps = c.roll.steps.value_or(12);
    const auto events = events_by_step(c, steps);
    const Date freeze = calendar_freeze(c);
    const auto s = seasonal_setup(c, o);
    std::vector<std::vector<SeasonalRiskUnit>> risk;
    for (const auto& cl : s.clusters) risk.push_back(cl.risk);
    std::map<std::string, std::pair<std::size_t, std::size_t>> where;
    for (std::size_t k = 0; k < risk.size(); ++k)
      for (std::size_t i = 0; i < risk[k].size(); ++i) where[risk[k][i].unit_id] = {k, i};

    Date start = freeze;
    for (std::size_t step = 1; step <= steps; ++step) {
      const Date end = next_month_start(start);
      for (const auto& scope : pc.scopes) {
        const auto fits = fits_for(s, scope, risk);
        std::size_t n = 0;
        for (const auto& f : fits)
          for (const auto& u : f.risk) n += u.in_service ? 1 : 0;
        sizes << step << ',' << scope << ',' << n << '\n';
        auto pd = seasonal_predict_joint(fits, start, end, pc.method, scope);
        warn_excluded(pd);
        write_prediction_row(os, seasonal_row(pd, pc.alpha, freeze, start, end));
        pd = seasonal_predict_joint(fits, freeze, end, pc.method, "cumulative:" + scope);
        write_prediction_row(os, seasonal_row(pd, pc.alpha, freeze, freeze, end));
      }
      for (const auto& e : events[step]) {
        const auto it = where.find(e.unit_id);
        if (it == where.end()) fail(ErrorCategory::inconsistency, "event for unknown unit '" + e.unit_id + "'");
        auto& u = risk[it->second.first][it->second.second];
        if (!u.in_service) std::cerr << "warning: inconsistency: unit " << e.unit_id << " removed twice\n";
        u.in_service = false;
      }
      start = end;
    }
    out.commit();
    return 0;
  }

  const std::size_t steps = c.roll.steps.value_or(26);
  const auto events = events_by_step(c, steps);
  const auto data = load_records(c.data, freeze_of(c));
  const auto draws = read_draws_file(o.draws.empty() ? (fs::path(c.out_dir) / "draws.csv").string() : o.draws);
  with_lifetime_model(c, data.records, [&](const auto& model) {
    check_draws_match(model, draws, "draws file");
    std::vector<RiskSetEntry> current = data.risk;
    std::vector<RiskSetEntry> original = data.risk;  // ages at the freeze, removals mirrored
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < original.size(); ++i) index.emplace(original[i].unit_id, i);
    for (std::size_t step = 1; step <= steps; ++step) {
      const double start = c.roll.step * static_cast<double>(step - 1);
      for (const auto& scope : pc.scopes) {
        std::size_t n = 0;
        for (const auto& r : current) n += (r.in_service && scope_of(scope).contains(r.group_id)) ? 1 : 0;
        sizes << step << ',' << scope << ',' << n << '\n';
        auto pd = predictive_cdf(model, draws, current, {c.roll.step}, scope_of(scope), pc.method);
        warn_excluded(pd);
        write_prediction_row(os, summarize(pd, pc.alpha, start));
        pd = predictive_cdf(model, draws, original, {start + c.roll.step}, scope_of(scope), pc.method);
        pd.scope = "cumulative:" + scope;
        write_prediction_row(os, summarize(pd, pc.alpha, 0.0));
      }
      const auto rolled = roll_risk_set(current, events[step], c.roll.step);
      if (rolled.repeated_removals > 0)
        std::cerr << "warning: inconsistency: " << rolled.repeated_removals << " event(s) named removed units\n";
      current = rolled.risk;
      for (const auto& e : events[step]) original[index.at(e.unit_id)].in_service = false;
    }
  });
  out.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const Options& o) {
  const std::string name = o.preset.empty() ? "G5-baseline" : o.preset;
  Outputs out(o.out.empty() ? RunConfig{}.out_dir : o.out);
  SimConfig sim = sim_preset(name, o.scale);
  if (o.seed) sim.seed = *o.seed;
  if (o.n_datasets) sim.n_datasets = *o.n_datasets;
  CoverageOptions opt;
  opt.sampler = sampler_preset(o.scale);
  opt.oracle = o.oracle;
  opt.workers = o.workers;
  if (!o.method.empty()) opt.method = parse_method(o.method);

  auto& os = out["coverage.csv"];
  write_coverage_header(os);
  auto report = [&](const CoverageReport& r) {
    write_coverage_rows(os, r);
    std::cout << r.scenario << ": " << r.n_datasets << " datasets used, " << r.excluded << " excluded\n";
  };
  if (name == "unbalanced") {
    const auto levels = o.levels.empty() ? unbalanced_levels() : o.levels;
    for (const auto& p : run_unbalanced(sim, levels, opt)) report(p.report);
  } else {
    report(run_coverage(sim, opt));
  }
  out.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

void diagnose_group(const RunConfig& c, Outputs& out, const std::string& group, std::span<const LifetimeRecord> recs,
                    const std::function<void(const std::vector<double>&)>& band) {
  const auto km = kaplan_meier(recs);
  auto& os = out["km_" + file_safe(group) + ".csv"];
  write_km_csv(os, km, c.model.family);
  double lo = 0.0, hi = 0.0;
  for (const auto& r : recs) {
    const double t = r.last_time();
    if (lo == 0.0 || t < lo) lo = t;
    hi = std::max(hi, t);
  }
  if (hi > 0.0) band(log_grid(lo / 2.0, hi * 2.0, 60));
}

int cmd_diagnose(const Options& o) {
  const auto c = effective_config(o, false);
  Outputs out(c.out_dir);
  if (c.model.kind == ModelKind::seasonal) {
    if (!o.draws.empty()) fail(ErrorCategory::unsupported, "credible bands are available for lifetime models only");
    const auto w = load_warranty_units(c.data);
    for (const auto& cl : split_clusters(w)) {
      std::vector<LifetimeRecord> recs;
      for (const auto& u : cl.units) {
        if (u.hist.d_n < 1) continue;
        auto r = u.returned ? LifetimeRecord::exact(cl.name, static_cast<double>(u.hist.d_n))
                            : LifetimeRecord::right(cl.name, static_cast<double>(u.hist.d_n));
        r.unit_id = u.unit_id;
        recs.push_back(std::move(r));
      }
      diagnose_group(c, out, cl.name, recs, [](const std::vector<double>&) {});
    }
    out.commit();
    return 0;
  }

  const auto data = load_records(c.data, freeze_of(c));
  const auto groups = group_labels(data.records);
  std::optional<PosteriorDraws> draws;
  if (!o.draws.empty()) draws = read_draws_file(o.draws);
  with_lifetime_model(c, data.records, [&](const auto& model) {
    if (draws) check_draws_match(model, *draws, "draws file");
    for (const auto& g : groups) {
      std::vector<LifetimeRecord> recs;
      for (const auto& r : data.records)
        if (r.group_id == g) recs.push_back(r);
      diagnose_group(c, out, g, recs, [&](const std::vector<double>& grid) {
        if (!draws) return;
        auto& os = out["band_" + file_safe(g) + ".csv"];
        write_band_csv(os, posterior_cdf_band(model, *draws, g, grid), c.model.family);
      });
    }
  });
  out.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian within-sample failure prediction for field reliability data"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("--config", o.config, "JSON run configuration");
      sub->add_option("--data", o.data, "input CSV (overrides the config)");
      sub->add_option("--freeze-date", o.freeze, "data-freeze date YYYY-MM-DD (or a number on the entry_time clock)");
    }
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "random seed");
  };

  auto* fit = app.add_subcommand("fit", "sample the posterior and write draws plus diagnostics");
  common(fit, true);
  fit->add_option("--preset", o.preset, "sampler preset: desk | paper");
  fit->add_flag("--pin-first-month", o.pin_first_month, "seasonal models: fix beta[1] = 0");
  fit->add_flag("--strict", o.strict, "fail when any rhat exceeds 1.05");

  auto* predict = app.add_subcommand("predict", "prediction intervals per scope and horizon");
  common(predict, true);
  predict->add_option("--draws", o.draws, "draws CSV (seasonal: directory of draws_<cluster>.csv)");
  predict->add_option("--method", o.method, "exact | poisson | auto");
  predict->add_option("--alpha", o.alpha, "two-sided interval is (alpha/2, 1 - alpha/2)");
  predict->add_flag("--pin-first-month", o.pin_first_month, "seasonal models: fix beta[1] = 0");

  auto* roll = app.add_subcommand("roll", "rolling window predictions with risk-set updates");
  common(roll, true);
  roll->add_option("--draws", o.draws, "draws CSV (seasonal: directory of draws_<cluster>.csv)");
  roll->add_option("--method", o.method, "exact | poisson | auto");
  roll->add_option("--alpha", o.alpha, "two-sided interval is (alpha/2, 1 - alpha/2)");
  roll->add_flag("--pin-first-month", o.pin_first_month, "seasonal models: fix beta[1] = 0");

  auto* simulate = app.add_subcommand("simulate", "coverage simulation for a scenario preset");
  common(simulate, false);
  simulate->add_option("--preset", o.preset, "G5-baseline | unbalanced | a grid scenario name");
  simulate->add_option("--scale", o.scale, "desk | paper");
  simulate->add_option("--n-datasets", o.n_datasets, "override the number of simulated datasets");
  simulate->add_option("--levels", o.levels, "unbalanced: expected failures in the other groups");
  simulate->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  simulate->add_option("--method", o.method, "exact | poisson | auto");
  simulate->add_flag("--oracle", o.oracle, "use the true parameters instead of fitting");

  auto* diagnose = app.add_subcommand("diagnose", "Kaplan-Meier and probability-plot coordinates");
  common(diagnose, true);
  diagnose->add_option("--draws", o.draws, "draws CSV for posterior cdf bands");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return exit_code(ErrorCategory::config);
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*predict) return cmd_predict(o);
    if (*roll) return cmd_roll(o);
    if (*simulate) return cmd_simulate(o);
    if (*diagnose) return cmd_diagnose(o);
  } catch (const Error& e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
