#include "gmcs/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "solve_driver.hpp"

namespace gmcs {

StateEstimate gaussian_update(const StateEstimate& state, const Matrix& H,
                              const Vector& innovation, const Vector& noise_var) {
  state.validate();
  const auto k = H.rows();
  if (H.cols() != state.mean.size() || innovation.size() != k || noise_var.size() != k)
    throw std::invalid_argument("gaussian_update: dimension mismatch");

  const Matrix cross = state.cov * H.transpose();  // C H^T, 3N x k
  Matrix innov_cov = H * cross;                    // H C H^T
  innov_cov.diagonal() += noise_var;

  Eigen::LLT<Matrix> llt(innov_cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gaussian_update: innovation matrix of size " +
                         std::to_string(k) + " is not positive definite");

  const Matrix gain = llt.solve(cross.transpose()).transpose();  // C H^T S^-1

  StateEstimate out = state;
  out.mean = state.mean + gain * innovation;
  out.cov = state.cov - gain * cross.transpose();
  symmetrize_psd(out.cov);
  return out;
}

StateEstimate kalman_update(const StateEstimate& state,
                            const std::vector<MixtureConstraint>& batch) {
  if (batch.empty()) throw std::invalid_argument("kalman_update: empty batch");
  for (const auto& c : batch) {
    c.validate(state.n_points);
    if (!c.unimodal())
      throw std::invalid_argument("kalman_update: batch contains a mixture constraint");
  }

  // Linearize every constraint at the mean current at the start of the batch.
  std::vector<Vector> rows;
  std::vector<double> innovations;
  std::vector<double> variances;
  rows.reserve(batch.size());
  for (const auto& c : batch) {
    if (distance_h(state.mean, c.i, c.j) < kDegenerateDistance) continue;  // skipped
    rows.push_back(distance_jacobian(state.mean, c.i, c.j));
    innovations.push_back(c.components[0].mean - distance_h(state.mean, c.i, c.j));
    variances.push_back(c.components[0].variance);
  }
  if (rows.empty()) return state;

  const auto k = static_cast<Eigen::Index>(rows.size());
  Matrix H(k, state.mean.size());
  Vector y(k);
  Vector r(k);
  for (Eigen::Index m = 0; m < k; ++m) {
    H.row(m) = rows[static_cast<std::size_t>(m)];
    y(m) = innovations[static_cast<std::size_t>(m)];
    r(m) = variances[static_cast<std::size_t>(m)];
  }
  return gaussian_update(state, H, y, r);
}

std::vector<MixtureConstraint> reorder_constraints(
    const StateEstimate& state, const std::vector<MixtureConstraint>& constraints) {
  std::vector<std::size_t> order(constraints.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> errors(constraints.size());
  for (std::size_t n = 0; n < constraints.size(); ++n)
    errors[n] = multicomponent_error(state, constraints[n]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
  std::vector<MixtureConstraint> out;
  out.reserve(constraints.size());
  for (std::size_t n : order) out.push_back(constraints[n]);
  return out;
}

StateEstimate reheat(const StateEstimate& state, const SolverConfig& config) {
  StateEstimate out = state;
  out.cov = config.initial_variance *
            Matrix::Identity(state.mean.size(), state.mean.size());
  return out;
}

SolveResult solve_unimodal(const StateEstimate& init,
                           const std::vector<MixtureConstraint>& constraints,
                           const SolverConfig& config, const Coordinates* reference) {
  for (const auto& c : constraints)
    if (!c.unimodal())
      throw std::invalid_argument("solve_unimodal: constraint is not unimodal");

  auto introduce = [&](const StateEstimate& state,
                       const std::vector<MixtureConstraint>& ordered) {
    StateEstimate current = state;
    for (std::size_t start = 0; start < ordered.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(ordered.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<MixtureConstraint> batch(ordered.begin() + static_cast<std::ptrdiff_t>(start),
                                                 ordered.begin() + static_cast<std::ptrdiff_t>(stop));
      current = kalman_update(current, batch);
    }
    return current;
  };
  return detail::run_cycles(init, constraints, config, reference, introduce);
}

}  // namespace gmcs
