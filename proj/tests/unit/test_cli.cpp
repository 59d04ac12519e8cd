// Runs the fieldpred binary end to end in a scratch directory.

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fieldpred/io.hpp"

namespace fs = std::filesystem;
using namespace fieldpred;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "fieldpred_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd =
      "cd '" + scratch().string() + "' && '" FIELDPRED_CLI "' " + args + " >>cli.log 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(scratch() / p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_lines(const std::string& text) {
  std::size_t n = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++n;
  return n - 1;  // header
}

// Two groups of Weibull lifetimes on a numeric entry clock, freeze at 1000.
void write_small_data() {
  static bool done = false;
  if (done) return;
  done = true;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ofstream os(scratch() / "small.csv");
  os << "unit_id,group_id,entry_time,censor,event_time\n";
  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < 150; ++i) {
      const double entry = 1000.0 * u(rng);
      const double age = 1000.0 - entry;
      const double t = (g == 0 ? 1500.0 : 2500.0) * std::pow(-std::log(u(rng)), 1.0 / 1.5);
      os << 'g' << g << '-' << i << ",g" << g << ',' << entry << ',';
      if (t <= age)
        os << "exact," << t << '\n';
      else
        os << "right,\n";
    }
  }
  std::ofstream cfg(scratch() / "small.json");
  cfg << R"({
    "data": "small.csv", "freeze_date": "1000",
    "model": {"kind": "lls", "family": "sev", "p": 0.1, "hierarchical": false},
    "priors": {"tp": {"family": "lognormal", "lower": 100, "upper": 20000},
               "sigma": {"family": "lognormal", "lower": 0.2, "upper": 5}},
    "sampler": {"chains": 4, "warmup": 500, "keep": 2500, "thin": 1, "seed": 5},
    "prediction": {"horizons": [100, 200], "scopes": ["g0", "all"], "method": "poisson"},
    "roll": {"steps": 4, "step": 50}
  })";
}

std::vector<std::vector<std::string>> rows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) out.push_back(detail::split_csv(line));
    header = false;
  }
  return out;
}

}  // namespace

TEST_CASE("fit, predict, roll and diagnose are byte reproducible") {
  write_small_data();
  REQUIRE(run("fit --config small.json --out a") == 0);
  REQUIRE(run("fit --config small.json --out b") == 0);
  const auto draws = slurp("a/draws.csv");
  CHECK(draws == slurp("b/draws.csv"));
  CHECK(slurp("a/diagnostics.csv") == slurp("b/diagnostics.csv"));
  CHECK(data_lines(draws) == 4 * 2500);
  CHECK(rows(slurp("a/load_summary.csv")).back().back() == "300");

  REQUIRE(run("fit --config small.json --out c --seed 6") == 0);
  CHECK(slurp("c/draws.csv") != draws);

  // Prediction from a copied draws file matches prediction from the original.
  fs::copy_file(scratch() / "a/draws.csv", scratch() / "copy.csv", fs::copy_options::overwrite_existing);
  REQUIRE(run("predict --config small.json --out a") == 0);
  REQUIRE(run("predict --config small.json --out b --draws copy.csv") == 0);
  const auto pred = slurp("a/predictions.csv");
  CHECK(pred == slurp("b/predictions.csv"));
  const auto pr = rows(pred);
  REQUIRE(pr.size() == 4);
  for (const auto& r : pr) {
    CHECK(std::stoul(r[3]) <= std::stoul(r[4]));
    CHECK(std::stoul(r[4]) <= std::stoul(r[6]));
    CHECK(r[9] == "10000");
  }

  REQUIRE(run("roll --config small.json --out a") == 0);
  REQUIRE(run("roll --config small.json --out b") == 0);
  const auto roll = slurp("a/roll.csv");
  CHECK(roll == slurp("b/roll.csv"));
  CHECK(slurp("a/risk_sizes.csv") == slurp("b/risk_sizes.csv"));
  // With no schedule the cumulative bounds never decrease.
  std::map<std::string, std::vector<std::size_t>> cum;
  for (const auto& r : rows(roll))
    if (r[0].rfind("cumulative:", 0) == 0) cum[r[0]].push_back(std::stoul(r[6]) * 100000 + std::stoul(r[3]));
  REQUIRE(cum.size() == 2);
  for (const auto& [scope, v] : cum) {
    REQUIRE(v.size() == 4);
    for (std::size_t i = 1; i < v.size(); ++i) {
      CHECK(v[i] / 100000 >= v[i - 1] / 100000);
      CHECK(v[i] % 100000 >= v[i - 1] % 100000);
    }
  }

  REQUIRE(run("diagnose --config small.json --out a --draws a/draws.csv") == 0);
  REQUIRE(run("diagnose --config small.json --out b --draws a/draws.csv") == 0);
  for (const char* f : {"km_g0.csv", "km_g1.csv", "band_g0.csv", "band_g1.csv"})
    CHECK(slurp(fs::path("a") / f) == slurp(fs::path("b") / f));
}

TEST_CASE("simulate is byte reproducible") {
  REQUIRE(run("simulate --preset G5-baseline --n-datasets 3 --out s1") == 0);
  REQUIRE(run("simulate --preset G5-baseline --n-datasets 3 --out s2") == 0);
  const auto cov = slurp("s1/coverage.csv");
  CHECK(cov == slurp("s2/coverage.csv"));
  CHECK(data_lines(cov) == 8);
}

TEST_CASE("errors map to categorized exit codes") {
  write_small_data();
  {
    std::ofstream os(scratch() / "typo.json");
    os << R"({"data": "small.csv", "sampler": {"chain": 2}})";
  }
  CHECK(run("fit --config typo.json --out e1") == 12);
  CHECK(run("fit --data missing.csv --out e2") == 13);
  CHECK(run("fit --config small.json --preset huge --out e3") == 12);
  CHECK(run("predict --config small.json --out e4 --draws nowhere.csv") == 13);
  CHECK(run("diagnose --data '" FIELDPRED_SAMPLES "/heat_exchanger.csv' --out e5") == 21);
  CHECK(run("predict --config small.json --out e6 --draws a/draws.csv --alpha 2") == 12);
  CHECK(run("frobnicate") == 12);
  // Failed runs leave nothing behind.
  for (const char* d : {"e1", "e2", "e3", "e4", "e5", "e6"}) CHECK_FALSE(fs::exists(scratch() / d));

  std::ofstream os(scratch() / "bad.csv");
  os << "unit_id,group_id,censor,event_time\nu1,a,exact,-1\n";
  os.close();
  CHECK(run("fit --data bad.csv --out e7") == 11);
  CHECK(slurp("cli.log").find("error: parse: line 2") != std::string::npos);
}
