#pragma once

#include <optional>
#include <vector>

#include "gmcs/model.hpp"

namespace gmcs {

struct TraceRow {
  int cycle = 0;
  double avg_error_sd = 0.0;
  double max_error_sd = 0.0;
  std::optional<double> rmsd_angstrom;
  bool reheated = false;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;
};

struct SolveResult {
  StateEstimate state;  // best average error seen, not merely the last
  ConvergenceTrace trace;
};

// Linear-Gaussian measurement update: mean += K * innovation,
// cov -= K H cov, K = cov H^T (H cov H^T + diag(noise_var))^-1.
// The innovation matrix must be positive definite; otherwise throws
// NumericalError. The returned covariance is symmetrized and PSD-floored.
StateEstimate gaussian_update(const StateEstimate& state, const Matrix& H,
                              const Vector& innovation, const Vector& noise_var);

// Simultaneous EKF update for a batch of unimodal distance constraints,
// linearized at the current mean. Degenerate pairs (closer than the
// distance floor) are skipped for this batch.
StateEstimate kalman_update(const StateEstimate& state,
                            const std::vector<MixtureConstraint>& batch);

// Stable sort, least satisfied first (descending satisfaction error; mixture
// constraints are scored by their nearest component).
std::vector<MixtureConstraint> reorder_constraints(
    const StateEstimate& state, const std::vector<MixtureConstraint>& constraints);

// Keep the mean, reset the covariance to initial_variance * I.
StateEstimate reheat(const StateEstimate& state, const SolverConfig& config);

// Iterated solver for single-component constraints: cycles of
// reorder -> batched updates, with reheating when progress stalls while the
// average error is still above reheat_threshold.
SolveResult solve_unimodal(const StateEstimate& init,
                           const std::vector<MixtureConstraint>& constraints,
                           const SolverConfig& config,
                           const Coordinates* reference = nullptr);

}  // namespace gmcs
