// Writes synthetic inputs for the CLI walkthrough into a directory:
//   fleet.csv           two drive models with staggered entry dates
//   fleet_schedule.csv  weekly retirements after the freeze date
//   warranty.csv        two clusters of units with seasonal damage
//
// usage: make_sample_data <dir> [seed]

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "fieldpred/fieldpred.hpp"

using namespace fieldpred;

namespace {

constexpr const char* kFleetFreeze = "2016-06-30";
constexpr const char* kWarrantyFreeze = "2017-01-01";

struct DriveModel {
  const char* name;
  int units;
  double tp;  // 0.05 quantile, days
  double sigma;
};

void write_fleet(const std::filesystem::path& dir, std::mt19937_64& rng) {
  const Date freeze = parse_date(kFleetFreeze);
  const Date first = parse_date("2013-01-01");
  const long span = days_between(first, parse_date("2016-03-31"));
  std::uniform_int_distribution<long> entry_day(0, span);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::ofstream data(dir / "fleet.csv");
  std::ofstream sched(dir / "fleet_schedule.csv");
  data << "unit_id,group_id,entry_date,censor,event_time\n";
  sched << "step,unit_id,kind\n";
  const DriveModel models[] = {{"model-A", 2000, 600.0, 0.8}, {"model-B", 1500, 900.0, 0.6}};
  for (const auto& m : models) {
    const LlsDistribution life(Family::sev, QuantileParam{0.05, m.tp, m.sigma});
    std::vector<std::string> survivors;
    for (int i = 0; i < m.units; ++i) {
      const Date entry = first + std::chrono::days{entry_day(rng)};
      const double age = static_cast<double>(days_between(entry, freeze));
      const double t = std::ceil(life.quantile(u01(rng)));
      char id[32];
      std::snprintf(id, sizeof id, "%c%05d", m.name[6], i + 1);
      data << id << ',' << m.name << ',' << format_date(entry) << ',';
      if (t <= age) {
        data << "exact," << t << '\n';
      } else {
        data << "right,\n";
        survivors.push_back(id);
      }
    }
    // model-A is migrated out in weeks 15-20; model-B loses a few drives a week.
    std::shuffle(survivors.begin(), survivors.end(), rng);
    std::size_t next = 0;
    for (int week = 1; week <= 26; ++week) {
      const std::size_t n = m.name[6] == 'A' ? (week >= 15 && week <= 20 ? 250 : 0) : 3;
      for (std::size_t k = 0; k < n && next < survivors.size(); ++k)
        sched << week << ',' << survivors[next++] << ",retirement\n";
    }
  }
}

void write_warranty(const std::filesystem::path& dir, std::mt19937_64& rng) {
  const Date freeze = parse_date(kWarrantyFreeze);
  const Date first = parse_date("2015-01-01");
  const long span = days_between(first, parse_date("2016-06-30"));
  std::uniform_int_distribution<long> entry_day(0, span);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::ofstream out(dir / "warranty.csv");
  out << "unit_id,cluster,country,entry_date,event_date_or_censor_date,delta,expiry_date\n";
  struct Cluster {
    const char* name;
    double canada_share;
    double level;  // common log-damage rate
  };
  const Cluster clusters[] = {{"north", 0.3, -7.2}, {"south", 0.15, -6.9}};
  for (const auto& c : clusters) {
    SeasonalParams p;
    p.alpha = std::log(1.5);
    p.sigma0 = 1.0;
    for (int m = 1; m <= 12; ++m) p.beta[m - 1] = c.level + 0.6 * std::sin(2.0 * std::numbers::pi * (m - 4) / 12.0);
    for (int i = 0; i < 1500; ++i) {
      const bool canada = u01(rng) < c.canada_share;
      const Date entry = first + std::chrono::days{entry_day(rng)};
      const Date expiry = entry + std::chrono::days{365};
      const Date stop = std::min(freeze, expiry);
      // Threshold U ~ Frechet(0, sigma0); the unit returns on the first day its damage reaches U.
      const double threshold = std::exp(p.sigma0 * -std::log(-std::log(u01(rng))));
      CovariateHistory h;
      h.canada = canada;
      h.entry = entry;
      double damage = 0.0;
      long day = 0;
      const long last = days_between(entry, stop);
      bool returned = false;
      while (day < last) {
        ++day;
        damage += std::exp(p.zeta(canada, h.month_of_day(day)));
        if (damage >= threshold) {
          returned = true;
          break;
        }
      }
      const Date end = returned ? entry + std::chrono::days{day} : stop;
      out << c.name[0] << i + 1 << ',' << c.name << ',' << (canada ? "CA" : "US") << ',' << format_date(entry) << ','
          << format_date(end) << ',' << (returned ? 1 : 0) << ',' << format_date(expiry) << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_sample_data <dir> [seed]\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(argc > 2 ? std::stoull(argv[2]) : 7);
  write_fleet(dir, rng);
  write_warranty(dir, rng);
  std::cout << "fleet freeze date " << kFleetFreeze << ", warranty freeze date " << kWarrantyFreeze << '\n';
  return 0;
}
