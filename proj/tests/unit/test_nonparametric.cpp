#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "fieldpred/hier.hpp"
#include "fieldpred/nonparametric.hpp"

using namespace fieldpred;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("product-limit worked example") {
  const std::vector<LifetimeRecord> recs{LifetimeRecord::exact("a", 1), LifetimeRecord::right("a", 2),
                                         LifetimeRecord::exact("a", 3), LifetimeRecord::right("a", 4)};
  const auto km = kaplan_meier(recs);
  REQUIRE(km.steps.size() == 2);
  CHECK_THAT(km.surv_at(3.0), WithinAbs(0.375, 1e-15));
  CHECK_THAT(km.surv_at(1.5), WithinAbs(0.75, 1e-15));
  CHECK(km.surv_at(0.5) == 1.0);
  CHECK(km.steps[1].n_risk == 2.0);
  CHECK_FALSE(km.truncation_adjusted);

  // Greenwood, log scale: var(log S) = sum d / (n (n - d)).
  const double v = 1.0 / (4 * 3) + 1.0 / (2 * 1);
  const double z = 1.6448536269514722;
  CHECK_THAT(km.steps[1].lower, WithinRel(0.375 * std::exp(-z * std::sqrt(v)), 1e-12));
  CHECK_THAT(km.steps[1].upper, WithinRel(std::min(1.0, 0.375 * std::exp(z * std::sqrt(v))), 1e-12));
  for (const auto& st : km.steps) {
    CHECK(st.lower <= st.surv);
    CHECK(st.surv <= st.upper);
  }
}

TEST_CASE("uncensored and all-censored samples") {
  std::vector<LifetimeRecord> recs;
  for (int i = 1; i <= 5; ++i) recs.push_back(LifetimeRecord::exact("a", i * 1.5));
  const auto km = kaplan_meier(recs);
  REQUIRE(km.steps.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK_THAT(km.steps[i].surv, WithinAbs(1.0 - (i + 1) / 5.0, 1e-15));

  std::vector<LifetimeRecord> cens{LifetimeRecord::right("a", 3, 10), LifetimeRecord::right("a", 7)};
  const auto none = kaplan_meier(cens);
  CHECK(none.steps.empty());
  CHECK(none.surv_at(100.0) == 1.0);

  // Multiplicity equals repeated records.
  const auto a = kaplan_meier(std::vector<LifetimeRecord>{LifetimeRecord::exact("a", 2, 3), LifetimeRecord::right("a", 5, 2)});
  const auto b = kaplan_meier(std::vector<LifetimeRecord>{
      LifetimeRecord::exact("a", 2), LifetimeRecord::exact("a", 2), LifetimeRecord::exact("a", 2),
      LifetimeRecord::right("a", 5), LifetimeRecord::right("a", 5)});
  CHECK(a.steps.size() == b.steps.size());
  CHECK(a.steps[0].surv == b.steps[0].surv);
}

TEST_CASE("delayed entry adjusts risk sets") {
  auto late = LifetimeRecord::exact("a", 5);
  late.trunc_left = 4.0;
  const std::vector<LifetimeRecord> recs{LifetimeRecord::exact("a", 2), LifetimeRecord::right("a", 6), late};
  const auto km = kaplan_meier(recs);
  CHECK(km.truncation_adjusted);
  // At t = 2 the late unit has not entered: 2 at risk.
  CHECK(km.steps[0].n_risk == 2.0);
  CHECK_THAT(km.steps[0].surv, WithinAbs(0.5, 1e-15));
  CHECK(km.steps[1].n_risk == 2.0);
  CHECK_THAT(km.steps[1].surv, WithinAbs(0.25, 1e-15));
}

TEST_CASE("interval or left censoring is rejected") {
  const std::vector<LifetimeRecord> recs{LifetimeRecord::exact("a", 2), LifetimeRecord::interval("a", 1, 3)};
  try {
    kaplan_meier(recs);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::unsupported);
  }
}

TEST_CASE("probability scales") {
  // An exact Weibull cdf is a straight line on Weibull paper with slope 1/sigma.
  const LlsDistribution w(Family::sev, LlsParams{1.3, 0.7});
  const auto grid = log_grid(0.1, 40.0, 30);
  const auto pts = probability_curve(w, grid, Family::sev);
  REQUIRE(pts.size() >= 25);
  // Near F = 1 the cdf itself has lost digits; check the body of the curve.
  for (const auto& p : pts)
    if (p.F < 0.99) CHECK_THAT(p.y, WithinAbs((p.log_time - 1.3) / 0.7, 1e-9));
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].F < 0.99) CHECK_THAT((pts[i].y - pts[i - 1].y) / (pts[i].log_time - pts[i - 1].log_time), WithinRel(1.0 / 0.7, 1e-8));

  const LlsDistribution ln(Family::normal, LlsParams{0.2, 1.1});
  for (const auto& p : probability_curve(ln, grid, Family::normal))
    CHECK_THAT(p.y, WithinAbs((p.log_time - 0.2) / 1.1, 1e-9));

  // KM points with F = 0 or 1 are dropped.
  std::vector<LifetimeRecord> recs;
  for (int i = 1; i <= 4; ++i) recs.push_back(LifetimeRecord::exact("a", i));
  const auto km = kaplan_meier(recs);
  const auto kp = probability_points(km, Family::sev);
  CHECK(kp.size() == 3);
  CHECK_THAT(kp[0].y, WithinAbs(std::log(-std::log(0.75)), 1e-12));
}

TEST_CASE("posterior credible band") {
  const std::vector<LifetimeRecord> recs{LifetimeRecord::exact("a", 3.0), LifetimeRecord::right("a", 5.0, 20)};
  LlsModel model({Family::sev, 0.05, false, {}}, recs, default_lls_priors(false));
  const std::vector<double> th{2.0, 0.8};
  PosteriorDraws two;
  two.names = model.parameter_names();
  two.values = {2.0, 0.8, 2.0, 0.8};
  two.chain = {0, 0};
  two.iteration = {0, 1};
  two.n_chains = 1;
  const auto grid = log_grid(0.5, 50.0, 20);
  const auto band = posterior_cdf_band(model, two, "a", grid);
  const auto d = model.group_lifetime(th, 0);
  for (std::size_t i = 0; i < band.size(); ++i) {
    CHECK(band[i].lower == band[i].median);
    CHECK(band[i].upper == band[i].median);
    CHECK_THAT(band[i].median, WithinAbs(d.cdf(grid[i]), 1e-15));
  }

  SamplerConfig cfg;
  cfg.warmup = 500;
  cfg.keep = 250;
  const auto draws = sample(model, cfg);
  for (const auto& r : posterior_cdf_band(model, draws, "a", grid)) {
    CHECK(r.lower <= r.median);
    CHECK(r.median <= r.upper);
  }
  CHECK_THROWS_AS(posterior_cdf_band(model, draws, "zz", grid), Error);

  std::ostringstream os;
  write_band_csv(os, band, Family::sev);
  CHECK(os.str().rfind("time,log_time,cdf_lower", 0) == 0);
}
