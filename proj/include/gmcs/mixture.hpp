#pragma once

#include <vector>

#include "gmcs/ekf.hpp"
#include "gmcs/model.hpp"

namespace gmcs {

// One path through a fan stage: a component choice per constraint in the
// group, its prior weight (product of the chosen component weights), and the
// state produced by updating the stage-entry estimate along that path.
struct Branch {
  double prior_weight = 1.0;
  std::vector<int> assignment;  // component index per constraint in the group
  StateEstimate state;
  bool failed = false;
};

// Per-stage record for the optional debug log.
struct StageRecord {
  int cycle = 0;
  int stage = 0;
  int branch_count = 0;
  std::vector<double> prior_weights;
  std::vector<double> posterior_weights;
  bool underflow_fallback = false;
  int dropped_branches = 0;
};

struct MixtureSolveResult {
  StateEstimate state;
  ConvergenceTrace trace;
  std::vector<StageRecord> stages;  // populated only when requested
};

// Number of constraints, starting at `start`, that the next fan stage takes:
// the maximal prefix whose product of component counts stays within
// branch_cap and whose length stays within batch_size. Always at least one,
// so a single constraint with more components than the cap fans fully.
std::size_t fan_group_size(const std::vector<MixtureConstraint>& pending,
                           std::size_t start, int branch_cap, int batch_size);

// Cartesian product of component choices across the group. Prior weights are
// the products of the chosen component weights and sum to 1. Branch states
// are left empty.
std::vector<Branch> fan(const std::vector<MixtureConstraint>& group, int branch_cap);

// How well the state's predicted measurement for constraint c agrees with
// component `component_index`: the predicted-measurement density (Gaussian
// with mean h(x) and variance H C H^T) evaluated at the component mean,
// damped by exp(-0.5 * component_variance / predicted_variance).
double branch_fit_likelihood(const StateEstimate& state, const MixtureConstraint& c,
                             int component_index);
double branch_fit_log_likelihood(const StateEstimate& state,
                                 const MixtureConstraint& c, int component_index);

// Bayes posterior over the branches of one fan stage, evaluated against the
// state that entered the stage. Normalized to sum to 1. When every branch
// likelihood underflows to zero the prior weights are returned instead and
// *underflow_fallback (if given) is set.
std::vector<double> posterior_weights(const StateEstimate& prior_state,
                                      const std::vector<Branch>& branches,
                                      const std::vector<MixtureConstraint>& group,
                                      bool* underflow_fallback = nullptr);

// Moment-matched single Gaussian over the branch states: mean = sum w_i m_i,
// cov = sum w_i (C_i + (m_i - m)(m_i - m)^T). A single branch is returned
// unchanged.
StateEstimate recombine(const std::vector<StateEstimate>& states,
                        const std::vector<double>& weights);

// Branch-and-recombine solver for mixture constraints. Branches within a fan
// stage are independent; with config.threads > 1 they run in parallel and
// are merged in branch-index order, so the result is identical to the serial
// path.
MixtureSolveResult solve_multicomponent(const StateEstimate& init,
                                        const std::vector<MixtureConstraint>& constraints,
                                        const SolverConfig& config,
                                        const Coordinates* reference = nullptr,
                                        bool record_stages = false);

// Collapse every mixture to its moment-matched Gaussian and run the unimodal
// solver; returns its best state. Used to get within the mixture solver's
// radius of convergence before branching.
StateEstimate warm_start(const std::vector<MixtureConstraint>& constraints,
                         const StateEstimate& init, const SolverConfig& config);

// Full two-phase solve: a unimodal warm start on the collapsed constraints
// (warm_cycles of the budget; <= 0 means half of config.max_cycles), then
// mixture refinement over the remaining cycles. The warm phase keeps the
// large initial_variance -- it has to move points against the very wide
// collapsed Gaussians -- while the refinement phase resets the covariance to
// refine_variance every cycle it is still hot, keeping the Kalman gains near
// unity without drowning out the component discrimination in the branch
// posteriors. The returned trace concatenates both phases.
MixtureSolveResult solve_pipeline(const StateEstimate& init,
                                  const std::vector<MixtureConstraint>& constraints,
                                  const SolverConfig& config,
                                  const Coordinates* reference = nullptr,
                                  bool record_stages = false,
                                  int warm_cycles = 0);

}  // namespace gmcs
