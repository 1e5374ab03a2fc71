#pragma once

#include <vector>

#include "gmcs/model.hpp"

namespace gmcs {

struct ErrorSummary {
  double average = 0.0;  // SD
  double maximum = 0.0;  // SD
  std::vector<double> per_constraint;
};

// Satisfaction errors of every constraint against the state's mean; mixture
// constraints are scored by their nearest component.
ErrorSummary error_summary(const StateEstimate& state,
                           const std::vector<MixtureConstraint>& constraints);

struct RmsdResult {
  double rmsd = 0.0;  // A
  bool mirrored = false;
};

// RMSD after centroid alignment and least-squares orthogonal superposition.
// With allow_reflection, the best improper (mirror) superposition is also
// evaluated and the smaller RMSD returned with the flag set; distance-only
// data cannot fix chirality.
RmsdResult rmsd_superposed(const Coordinates& a, const Coordinates& b,
                           bool allow_reflection = true);

// Fraction of constraints whose nearest component (per the state) is the
// answer key's real component. Unimodal constraints count as identified.
double component_identification_rate(const StateEstimate& state,
                                     const std::vector<MixtureConstraint>& constraints,
                                     const std::vector<int>& answer_key);

// Per-point uncertainty ellipsoid at 2-SD scaling, from the 3x3 diagonal
// blocks of the covariance.
struct EllipsoidAxis {
  double length = 0.0;  // 2 * sqrt(eigenvalue), A
  Eigen::Vector3d direction;
};
struct Ellipsoid {
  int point = 0;
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov_block;
  std::vector<EllipsoidAxis> axes;
};
std::vector<Ellipsoid> ellipsoid_report(const StateEstimate& state);

}  // namespace gmcs
