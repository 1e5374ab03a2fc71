#pragma once

#include <cstdint>
#include <vector>

#include "gmcs/model.hpp"

namespace gmcs {

struct GroundTruth {
  enum class Provenance { generated_chain, loaded_file };
  Coordinates coords;
  Provenance provenance = Provenance::generated_chain;
  std::uint64_t seed = 0;
};

struct ExperimentSpec {
  double real_weight_min = 0.5;
  double real_weight_max = 1.0;
  double real_variance = 0.1;     // A^2
  int noise_count_min = 0;
  int noise_count_max = 3;
  double noise_mean_lo = 0.0;     // A
  double noise_mean_hi = 50.0;
  double noise_variance_lo = 0.0; // A^2, floored at the component floor
  double noise_variance_hi = 10.0;
  std::uint64_t seed = 1;

  void validate() const;
};

ExperimentSpec exp1_spec(std::uint64_t seed);
ExperimentSpec exp2a_spec(std::uint64_t seed);
ExperimentSpec exp2b_spec(std::uint64_t seed);

// Self-avoiding random-walk chain: consecutive points 3.8 A apart, no
// non-adjacent pair closer than 2.0 A. Deterministic for a given seed.
GroundTruth generate_ground_truth(int n_points, std::uint64_t seed);

struct SynthesisOutput {
  std::vector<MixtureConstraint> constraints;  // one per unordered pair
  std::vector<int> answer_key;                 // real-component index per constraint
};

// One mixture constraint per pair: a real component at the true distance
// plus 0..k noise components sharing the leftover weight equally, in
// shuffled order.
SynthesisOutput synthesize_constraints(const GroundTruth& truth,
                                       const ExperimentSpec& spec);

// One exact unimodal constraint per pair at the given (small) variance.
std::vector<MixtureConstraint> exact_constraints(const GroundTruth& truth,
                                                 double variance);

// Uniform random coordinates in [0, coordinate_range]^3 with a diagonal
// initial covariance.
StateEstimate random_start(int n_points, const SolverConfig& config);

}  // namespace gmcs
