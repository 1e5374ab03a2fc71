#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace gmcs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Coordinates = std::vector<Eigen::Vector3d>;

// Linear algebra failed in a way that cannot be recovered (e.g. an
// innovation matrix that is not positive definite).
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degenerate geometry: two points closer than the distance floor have no
// defined Jacobian row.
class DegenerateGeometryError : public NumericalError {
  using NumericalError::NumericalError;
};

inline constexpr double kVarianceFloor = 1e-6;       // A^2
inline constexpr double kDegenerateDistance = 1e-8;  // A

// One Gaussian branch of a constraint's noise density.
struct GaussianComponent {
  double weight;    // in (0, 1]
  double mean;      // A
  double variance;  // A^2, floored at kVarianceFloor

  GaussianComponent(double w, double mu, double var);
};

// A noisy pairwise-distance measurement between points i and j whose noise
// density is a weighted sum of Gaussians. m == 1 is the unimodal case.
struct MixtureConstraint {
  int i = 0;
  int j = 0;
  std::vector<GaussianComponent> components;

  bool unimodal() const { return components.size() == 1; }
  void validate(int n_points) const;
};

// Belief about the structure: mean coordinate vector (interleaved
// x1 y1 z1 ... xN yN zN) and full covariance.
struct StateEstimate {
  Vector mean;   // 3N, A
  Matrix cov;    // 3N x 3N, A^2
  int n_points = 0;

  Eigen::Vector3d point(int k) const { return mean.segment<3>(3 * k); }
  Coordinates coordinates() const;
  void validate() const;
};

StateEstimate make_state(const Coordinates& coords, double diagonal_variance);

struct SolverConfig {
  int batch_size = 20;             // constraints per simultaneous update
  int branch_cap = 64;             // max live branches per fan stage
  int max_cycles = 40;
  double convergence_tol = 1e-3;   // SD, min change in average error
  double reheat_threshold = 0.5;   // SD
  double initial_variance = 100.0; // A^2
  double refine_variance = 4.0;    // A^2, covariance reset in the refinement phase
  double coordinate_range = 100.0; // A
  std::uint64_t rng_seed = 1;
  int threads = 1;                 // branch-level parallelism degree

  // Reset the covariance at every cycle boundary where the average error is
  // still above reheat_threshold, instead of only when progress has stalled.
  // The mixture refinement phase runs this way: each cycle then re-solves
  // from the current mean with a mobile covariance. With a large reset
  // variance this is destructive -- the predicted-measurement variance
  // swamps every component variance and the branch posteriors collapse to
  // the priors -- which is why the refinement phase pairs it with the
  // moderate refine_variance.
  bool reheat_always = false;

  void validate() const;
};

// Euclidean distance between points i and j of the mean vector.
double distance_h(const Vector& mean, int i, int j);

// Row of the measurement Jacobian for the (i, j) distance: zero except the
// six entries for the two points. Throws DegenerateGeometryError when the
// points are closer than kDegenerateDistance.
Vector distance_jacobian(const Vector& mean, int i, int j);

// Moment-matched single-Gaussian replacement for a mixture constraint:
// mean = sum a_i mu_i, variance = sum a_i (var_i + mu_i^2) - mean^2.
MixtureConstraint collapse_mixture(const MixtureConstraint& c);

// Satisfaction error of a unimodal constraint, in SD units.
double constraint_error(const StateEstimate& state, const MixtureConstraint& c);

// Satisfaction error of a mixture constraint: minimum over components of
// |mu_i - h(x)| / sd_i. Equals constraint_error when m == 1.
double multicomponent_error(const StateEstimate& state, const MixtureConstraint& c);

// Symmetrize (C + C^T)/2 and clamp negative eigenvalues to zero.
void symmetrize_psd(Matrix& cov);

}  // namespace gmcs
