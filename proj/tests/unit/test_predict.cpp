#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fieldpred/hier.hpp"
#include "fieldpred/predict.hpp"

using namespace fieldpred;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Lifetime with F(t) = min(1, r t): starting at age 0 over a unit window the
// conditional failure probability is exactly r.
struct LinearCdf {
  double r;
  double cdf(double t) const { return std::min(1.0, r * t); }
  double logcdf(double t) const { return std::log(cdf(t)); }
  double logsf(double t) const { return std::log1p(-cdf(t)); }
  double logpdf(double t) const { return r * t < 1.0 ? std::log(r) : -INFINITY; }
};

// theta[g] is group g's r.
struct LinearModel {
  std::vector<std::string> groups;
  std::size_t group_index(const std::string& g) const {
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (groups[i] == g) return i;
    fail(ErrorCategory::missing_group, g);
  }
  LinearCdf group_lifetime(std::span<const double> theta, std::size_t g) const { return {theta[g]}; }
};

PosteriorDraws rows(std::vector<std::vector<double>> r) {
  PosteriorDraws d;
  d.names.resize(r.front().size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    d.values.insert(d.values.end(), r[i].begin(), r[i].end());
    d.chain.push_back(0);
    d.iteration.push_back(i);
  }
  d.n_chains = 1;
  return d;
}

std::vector<RiskSetEntry> fleet(const std::string& g, std::size_t n, double t_c, std::size_t first_id = 0) {
  std::vector<RiskSetEntry> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({g + "-" + std::to_string(first_id + i), g, t_c, true});
  return out;
}

}  // namespace

TEST_CASE("conditional failure probability") {
  const LlsDistribution expo(Family::sev, LlsParams{0.0, 1.0});
  CHECK(cond_fail_prob(expo, 1.5, 1.5) == 0.0);
  CHECK_THAT(cond_fail_prob(expo, 0.0, 2.0), WithinAbs(expo.cdf(2.0), 1e-15));
  CHECK_THAT(cond_fail_prob(expo, 1.0, 2.0), WithinAbs(1.0 - std::exp(-1.0), 1e-15));
  CHECK_THAT(cond_fail_prob(expo, 1.0, 2.0), WithinAbs(0.6321, 1e-4));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 50.0);
  for (int i = 0; i < 100; ++i) {
    const double eta = u(rng), tc = u(rng), dt = u(rng);
    const LlsDistribution e(Family::sev, LlsParams::from_weibull(eta, 1.0));
    CHECK_THAT(cond_fail_prob(e, tc, tc + dt), WithinAbs(-std::expm1(-dt / eta), 1e-12));
  }
  try {
    cond_fail_prob(LinearCdf{1.0}, 2.0, 3.0);
    FAIL("expected exhausted risk");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::exhausted_risk);
  }
}

TEST_CASE("mixture of single-draw distributions") {
  const LinearModel m{{"g"}};
  const auto risk = fleet("g", 1, 0.0);
  const auto pd = predictive_cdf(m, rows({{0.2}, {0.4}}), risk, {1.0}, Scope::all());
  CHECK_THAT(pd.dist.cdf[0], WithinAbs(0.7, 1e-15));
  CHECK(pd.draws == 2);

  // B = 1 reduces to the single-theta distribution.
  const auto risk3 = [] {
    std::vector<RiskSetEntry> r{{"a", "g1", 0.0, true}, {"b", "g2", 0.0, true}, {"c", "g3", 0.0, true}};
    return r;
  }();
  const LinearModel m3{{"g1", "g2", "g3"}};
  const auto one = predictive_cdf(m3, rows({{0.1, 0.2, 0.3}}), risk3, {1.0}, Scope::all(), PredictMethod::exact);
  const auto pb = poisson_binomial_cdf(std::vector<double>{0.1, 0.2, 0.3});
  for (std::size_t k = 0; k < 4; ++k) CHECK_THAT(one.dist.cdf[k], WithinAbs(pb.cdf[k], 1e-15));
  const auto pp = point_prediction(one);
  CHECK(pp.median == 0);
  CHECK_THAT(pp.mean, WithinAbs(0.6, 1e-14));

  // Degenerate window
  const LlsModel w({Family::sev, 0.05, false, {"g"}}, std::vector<LifetimeRecord>{}, default_lls_priors(false));
  const auto tiny = predictive_cdf(w, rows({{3.0, 0.5}}), fleet("g", 50, 2.0), {1e-300}, Scope::all());
  CHECK(prediction_interval(tiny, 0.05) == std::pair<std::size_t, std::size_t>{0, 0});
}

TEST_CASE("interval and point readouts") {
  const auto pm = CountDistribution::point_mass(3);
  CHECK(prediction_interval(pm, 0.05) == std::pair<std::size_t, std::size_t>{3, 3});
  CHECK(point_prediction(pm).median == 3);
  const auto b = binomial_cdf(10, 0.5);
  CHECK(prediction_interval(b, 0.05) == std::pair<std::size_t, std::size_t>{2, 8});
  CHECK(point_prediction(b).median == 5);
  for (double a : {0.01, 0.1, 0.3, 0.9}) {
    const auto [lo, hi] = prediction_interval(b, a);
    CHECK(lo <= point_prediction(b).median);
    CHECK(point_prediction(b).median <= hi);
  }
  CHECK(lower_bound(b, 0.95) == count_quantile(b, 0.05));
  CHECK(upper_bound(b, 0.95) == count_quantile(b, 0.95));
}

TEST_CASE("binomial shortcut agrees with the mixture path under a common age") {
  const LlsModel w({Family::sev, 0.05, false, {"g"}}, std::vector<LifetimeRecord>{}, default_lls_priors(false));
  const std::vector<double> theta{3.0, 0.5};
  const auto pd = predictive_cdf(w, rows({theta}), fleet("g", 40, 5.0), {2.0}, Scope::all(), PredictMethod::exact);
  const double rho = cond_fail_prob(w.group_lifetime(theta, 0), 5.0, 7.0);
  const auto bin = binomial_cdf(40, rho);
  for (std::size_t k = 0; k <= 40; ++k) CHECK_THAT(pd.dist.cdf[k], WithinAbs(bin.cdf[k], 1e-12));
}

TEST_CASE("mixture linearity over concatenated draws") {
  const LlsModel w({Family::sev, 0.05, false, {"a", "b"}}, std::vector<LifetimeRecord>{}, default_lls_priors(false));
  std::vector<RiskSetEntry> risk = fleet("a", 30, 4.0);
  auto more = fleet("b", 20, 9.0);
  risk.insert(risk.end(), more.begin(), more.end());
  risk.push_back({"odd", "a", 1.0, true});
  const auto d1 = rows({{3.0, 0.5, 7.0, 0.8}, {2.5, 0.6, 6.0, 0.9}});
  const auto d2 = rows({{3.5, 0.4, 8.0, 0.7}, {4.0, 0.5, 5.0, 1.0}, {2.0, 0.3, 9.0, 0.5}});
  auto both = d1;
  both.append(d2);
  for (auto m : {PredictMethod::exact, PredictMethod::poisson}) {
    const auto j1 = predictive_cdf(w, d1, risk, {3.0}, Scope::all(), m);
    const auto j2 = predictive_cdf(w, d2, risk, {3.0}, Scope::all(), m);
    const auto j = predictive_cdf(w, both, risk, {3.0}, Scope::all(), m);
    for (std::size_t k = 0; k < j.dist.cdf.size(); ++k)
      CHECK_THAT(j.dist.cdf[k], WithinAbs((2 * j1.dist.cdf[k] + 3 * j2.dist.cdf[k]) / 5, 1e-14));
  }
}

TEST_CASE("scope additivity of means and exact-vs-Poisson coherence") {
  const LlsModel w({Family::sev, 0.05, false, {"a", "b", "c"}}, std::vector<LifetimeRecord>{},
                   default_lls_priors(false));
  std::vector<RiskSetEntry> risk;
  for (auto [g, n, t] : {std::tuple{"a", 300, 2.0}, {"b", 150, 6.0}, {"c", 80, 1.0}}) {
    auto f = fleet(g, n, t);
    risk.insert(risk.end(), f.begin(), f.end());
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tp(15.0, 40.0), sg(0.4, 0.9);
  std::vector<std::vector<double>> r;
  for (int j = 0; j < 30; ++j) r.push_back({tp(rng), sg(rng), tp(rng), sg(rng), tp(rng), sg(rng)});
  const auto draws = rows(r);
  const PredictionWindow win{1.0};
  const double total = predictive_cdf(w, draws, risk, win, Scope::all(), PredictMethod::exact).dist.mean();
  double parts = 0.0;
  for (const char* g : {"a", "b", "c"})
    parts += predictive_cdf(w, draws, risk, win, Scope::single(g), PredictMethod::exact).dist.mean();
  CHECK_THAT(total, WithinRel(parts, 1e-10));

  // Check the expected counts sit in the small-lambda regime of the coherence property.
  for (std::size_t j = 0; j < draws.size(); ++j) {
    double lam = 0.0;
    const auto th = draws.draw(j);
    for (const auto& u : risk) {
      const auto g = w.group_index(u.group_id);
      lam += cond_fail_prob(w.group_lifetime(th, g), u.t_c, u.t_c + 1.0);
    }
    REQUIRE(lam <= 5.0);
  }
  const auto ex = predictive_cdf(w, draws, risk, win, Scope::all(), PredictMethod::exact);
  const auto po = predictive_cdf(w, draws, risk, win, Scope::all(), PredictMethod::poisson);
  const auto [a_lo, a_hi] = prediction_interval(ex, 0.05);
  const auto [b_lo, b_hi] = prediction_interval(po, 0.05);
  CHECK(std::abs(static_cast<long>(a_lo) - static_cast<long>(b_lo)) <= 1);
  CHECK(std::abs(static_cast<long>(a_hi) - static_cast<long>(b_hi)) <= 1);
  CHECK(resolve_method(PredictMethod::automatic, 10000) == PredictMethod::exact);
  CHECK(resolve_method(PredictMethod::automatic, 10001) == PredictMethod::poisson);
}

TEST_CASE("exhausted units are excluded with a count") {
  const LinearModel m{{"g"}};
  std::vector<RiskSetEntry> risk{{"ok", "g", 0.0, true}, {"stale", "g", 20.0, true}};
  const auto pd = predictive_cdf(m, rows({{0.1}}), risk, {1.0}, Scope::all());
  CHECK(pd.excluded_units == 1);
  CHECK_THAT(pd.dist.cdf[0], WithinAbs(0.9, 1e-15));
}

TEST_CASE("simulation-based predictand") {
  const LinearModel m{{"g"}};
  const auto risk = fleet("g", 7, 0.0);
  const auto zero = simulate_predictand(m, rows({{0.0}, {0.0}, {0.0}}), risk, {1.0}, Scope::all(), 1);
  CHECK(zero.dist.cdf[0] == 1.0);
  const auto all = simulate_predictand(m, rows({{1.0}, {1.0}}), risk, {1.0}, Scope::all(), 1);
  CHECK(count_quantile(all.dist, 0.01) == 7);

  // B = 1,500 draws of a single-group Binomial(20, 0.1).
  const auto r20 = fleet("g", 20, 0.0);
  const auto draws = rows(std::vector<std::vector<double>>(1500, {0.1}));
  const auto direct = prediction_interval(predictive_cdf(m, draws, r20, {1.0}, Scope::all()), 0.05);
  int within = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto sim = prediction_interval(simulate_predictand(m, draws, r20, {1.0}, Scope::all(), s), 0.05);
    within += (std::abs(static_cast<long>(sim.first) - static_cast<long>(direct.first)) <= 1 &&
               std::abs(static_cast<long>(sim.second) - static_cast<long>(direct.second)) <= 1);
  }
  CHECK(within >= 95);
}

TEST_CASE("rolling the risk set") {
  auto risk = fleet("g", 10, 3.0);
  auto r = roll_risk_set(risk, {}, 2.0);
  CHECK(r.risk.size() == 10);
  for (const auto& u : r.risk) CHECK(u.t_c == 5.0);

  // a then b equals a + b with no events in between
  const auto ab = roll_risk_set(roll_risk_set(risk, {}, 1.25).risk, {}, 0.5).risk;
  const auto once = roll_risk_set(risk, {}, 1.75).risk;
  for (std::size_t i = 0; i < risk.size(); ++i) CHECK(ab[i].t_c == once[i].t_c);

  std::vector<RiskEvent> ev{{"g-0", EventKind::failure}, {"g-1", EventKind::retirement}};
  r = roll_risk_set(risk, ev, 1.0);
  CHECK(in_service_count(r.risk) == 8);
  CHECK(r.risk[0].t_c == 3.0);  // removed units stop aging
  CHECK(r.risk[2].t_c == 4.0);
  const auto again = roll_risk_set(r.risk, std::vector<RiskEvent>{{"g-0", EventKind::failure}}, 1.0);
  CHECK(again.repeated_removals == 1);
  CHECK(in_service_count(again.risk) == 8);
  try {
    roll_risk_set(risk, std::vector<RiskEvent>{{"nope", EventKind::failure}}, 1.0);
    FAIL("expected inconsistency");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::inconsistency);
  }

  std::vector<RiskEvent> everyone;
  for (const auto& u : risk) everyone.push_back({u.unit_id, EventKind::retirement});
  const auto empty = roll_risk_set(risk, everyone, 1.0);
  const LinearModel m{{"g"}};
  CHECK(predictive_cdf(m, rows({{0.5}}), empty.risk, {1.0}, Scope::all()).dist.cdf[0] == 1.0);
}

TEST_CASE("staged retirements over weekly rolls") {
  auto risk = fleet("d", 4000, 100.0);
  std::vector<std::size_t> schedule;
  std::size_t next = 0, expected = 4000;
  for (int week = 0; week < 26; ++week) {
    const std::size_t k = week < 20 ? 150 : 25 * (week - 19);
    std::vector<RiskEvent> ev;
    for (std::size_t i = 0; i < k; ++i) ev.push_back({risk[next++].unit_id, EventKind::retirement});
    auto r = roll_risk_set(risk, ev, 7.0);
    risk = std::move(r.risk);
    expected -= k;
    CHECK(in_service_count(risk) == expected);
  }
  CHECK(expected < 500);
}
