// Benchmark: serial vs OpenMP branch execution of the mixture solver on an
// exp1-style workload. The parallel path must produce bit-identical results
// (branches are merged in index order), so this also doubles as a check that
// threading never changes the answer.

#include <chrono>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gmcs/mixture.hpp"
#include "gmcs/synth.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double run_once(const gmcs::StateEstimate& init,
                const std::vector<gmcs::MixtureConstraint>& constraints,
                gmcs::SolverConfig config, int threads,
                gmcs::StateEstimate& out) {
  config.threads = threads;
  const auto start = Clock::now();
  out = gmcs::solve_multicomponent(init, constraints, config).state;
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  const int cycles = argc > 2 ? std::atoi(argv[2]) : 5;

  const auto truth = gmcs::generate_ground_truth(21, seed);
  gmcs::ExperimentSpec spec = gmcs::exp1_spec(seed);
  const auto synth = gmcs::synthesize_constraints(truth, spec);

  gmcs::SolverConfig config;
  config.rng_seed = seed;
  config.max_cycles = cycles;
  // mirror the pipeline's refinement phase, where branch work dominates
  config.initial_variance = config.refine_variance;
  config.reheat_always = true;

  const auto init = gmcs::warm_start(synth.constraints,
                                     gmcs::random_start(21, config), config);

#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif

  gmcs::StateEstimate serial_state;
  const double serial_s =
      run_once(init, synth.constraints, config, 1, serial_state);
  std::cout << "serial:   " << serial_s << " s (" << cycles << " cycles)\n";

  gmcs::StateEstimate parallel_state;
  const double parallel_s =
      run_once(init, synth.constraints, config, max_threads, parallel_state);
  std::cout << "parallel: " << parallel_s << " s (" << max_threads
            << " threads)\n";
  std::cout << "speedup:  " << serial_s / parallel_s << "x\n";

  const bool identical = serial_state.mean == parallel_state.mean &&
                         serial_state.cov == parallel_state.cov;
  std::cout << "results bit-identical: " << (identical ? "yes" : "NO") << "\n";
  return identical ? 0 : 1;
}
