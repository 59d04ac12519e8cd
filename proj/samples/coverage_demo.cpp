// Coverage of one-sided prediction bounds for a small simulated scenario,
// first with the true parameters plugged in, then with fitted posteriors.
//
// usage: coverage_demo [n_datasets]

#include <cstdlib>
#include <iostream>

#include "fieldpred/fieldpred.hpp"

using namespace fieldpred;

int main(int argc, char** argv) {
  SimConfig sim = sim_preset("G5-baseline");
  sim.n_datasets = argc > 1 ? static_cast<std::size_t>(std::atoi(argv[1])) : 20;

  CoverageOptions oracle;
  oracle.oracle = true;
  CoverageOptions fitted;
  fitted.sampler = sampler_preset("desk");

  write_coverage_header(std::cout);
  write_coverage_rows(std::cout, run_coverage(sim, oracle));
  write_coverage_rows(std::cout, run_coverage(sim, fitted));
  return 0;
}
