#include "solve_driver.hpp"

#include <limits>

#include "gmcs/metrics.hpp"

namespace gmcs::detail {

SolveResult run_cycles(const StateEstimate& init,
                       const std::vector<MixtureConstraint>& constraints,
                       const SolverConfig& config, const Coordinates* reference,
                       const IntroduceCycle& introduce) {
  config.validate();
  init.validate();
  if (constraints.empty())
    throw std::invalid_argument("solve: constraint list is empty");
  for (const auto& c : constraints) c.validate(init.n_points);
  if (reference && static_cast<int>(reference->size()) != init.n_points)
    throw std::invalid_argument("solve: reference size does not match state");

  StateEstimate state = init;
  SolveResult result;
  double best_avg = std::numeric_limits<double>::infinity();
  double prev_avg = std::numeric_limits<double>::infinity();

  for (int cycle = 0; cycle < config.max_cycles; ++cycle) {
    const auto ordered = reorder_constraints(state, constraints);
    state = introduce(state, ordered);

    const ErrorSummary errs = error_summary(state, constraints);
    TraceRow row;
    row.cycle = cycle;
    row.avg_error_sd = errs.average;
    row.max_error_sd = errs.maximum;
    if (reference)
      row.rmsd_angstrom = rmsd_superposed(state.coordinates(), *reference).rmsd;

    if (errs.average < best_avg) {
      best_avg = errs.average;
      result.state = state;
    }

    const bool stalled =
        cycle > 0 && prev_avg - errs.average < config.convergence_tol;
    const bool hot = errs.average > config.reheat_threshold;
    if (hot && (config.reheat_always || stalled) && cycle + 1 < config.max_cycles) {
      state = reheat(state, config);
      row.reheated = true;
    }
    result.trace.rows.push_back(row);
    prev_avg = errs.average;
    if (stalled && !row.reheated) break;
  }
  return result;
}

}  // namespace gmcs::detail
