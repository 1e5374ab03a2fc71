#pragma once

#include <functional>

#include "gmcs/ekf.hpp"

namespace gmcs::detail {

// One cycle's worth of constraint introduction: takes the state entering the
// cycle and the reordered constraint list, returns the updated state.
using IntroduceCycle = std::function<StateEstimate(
    const StateEstimate&, const std::vector<MixtureConstraint>&)>;

// Shared outer loop for both solvers: reorder, introduce, score, reheat when
// stalled above the threshold, stop when stalled below it or out of cycles.
// Keeps the best-average-error state. The unimodal and mixture solvers must
// go through this one driver so that the mixture path reduces bit-exactly to
// the unimodal path when every constraint has a single component.
SolveResult run_cycles(const StateEstimate& init,
                       const std::vector<MixtureConstraint>& constraints,
                       const SolverConfig& config, const Coordinates* reference,
                       const IntroduceCycle& introduce);

}  // namespace gmcs::detail
