#include "gmcs/synth.hpp"

#include <cmath>
#include <string>

#include "gmcs/rng.hpp"

namespace gmcs {

namespace {

constexpr double kBondLength = 3.8;     // A
constexpr double kClashDistance = 2.0;  // A
constexpr int kMaxStepAttempts = 10000;

// substream ids, one per independent draw role
enum Stream : std::uint64_t {
  kStructure = 0,
  kWeights = 1,
  kNoise = 2,
  kShuffle = 3,
  kStart = 4,
};

Eigen::Vector3d random_unit(rng::Engine& g) {
  const double z = rng::uniform(g, -1.0, 1.0);
  const double phi = rng::uniform(g, 0.0, 2.0 * 3.141592653589793);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace

void ExperimentSpec::validate() const {
  if (!(real_weight_min > 0.0) || real_weight_min > real_weight_max ||
      real_weight_max > 1.0)
    throw std::invalid_argument("experiment spec: bad real weight range");
  if (noise_count_min < 0 || noise_count_min > noise_count_max)
    throw std::invalid_argument("experiment spec: bad noise count range");
  if (noise_mean_lo > noise_mean_hi || noise_variance_lo > noise_variance_hi)
    throw std::invalid_argument("experiment spec: empty noise parameter range");
  if (!(real_variance > 0.0))
    throw std::invalid_argument("experiment spec: real variance must be > 0");
}

ExperimentSpec exp1_spec(std::uint64_t seed) {
  ExperimentSpec s;
  s.seed = seed;
  return s;  // defaults are the exp1 parameters
}

ExperimentSpec exp2a_spec(std::uint64_t seed) {
  ExperimentSpec s = exp1_spec(seed);
  s.real_weight_min = 0.3;
  return s;
}

ExperimentSpec exp2b_spec(std::uint64_t seed) {
  ExperimentSpec s = exp1_spec(seed);
  s.real_weight_min = 0.1;
  return s;
}

GroundTruth generate_ground_truth(int n_points, std::uint64_t seed) {
  if (n_points < 2)
    throw std::invalid_argument("generate_ground_truth: need at least 2 points");
  auto g = rng::make_engine(seed, kStructure);

  GroundTruth truth;
  truth.seed = seed;
  truth.coords.push_back(Eigen::Vector3d::Zero());
  while (static_cast<int>(truth.coords.size()) < n_points) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxStepAttempts; ++attempt) {
      const Eigen::Vector3d candidate =
          truth.coords.back() + kBondLength * random_unit(g);
      bool clash = false;
      for (std::size_t k = 0; k + 1 < truth.coords.size(); ++k) {
        if ((candidate - truth.coords[k]).norm() < kClashDistance) {
          clash = true;
          break;
        }
      }
      if (!clash) {
        truth.coords.push_back(candidate);
        placed = true;
        break;
      }
    }
    if (!placed)
      throw std::runtime_error("generate_ground_truth: chain stuck at point " +
                               std::to_string(truth.coords.size()));
  }
  return truth;
}

SynthesisOutput synthesize_constraints(const GroundTruth& truth,
                                       const ExperimentSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(truth.coords.size());
  auto weight_rng = rng::make_engine(spec.seed, kWeights);
  auto noise_rng = rng::make_engine(spec.seed, kNoise);
  auto shuffle_rng = rng::make_engine(spec.seed, kShuffle);

  SynthesisOutput out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double true_distance = (truth.coords[static_cast<std::size_t>(i)] -
                                    truth.coords[static_cast<std::size_t>(j)])
                                       .norm();
      const double drawn_weight =
          rng::uniform(weight_rng, spec.real_weight_min, spec.real_weight_max);
      const int noise_count =
          rng::uniform_int(noise_rng, spec.noise_count_min, spec.noise_count_max);
      const double real_weight = noise_count == 0 ? 1.0 : drawn_weight;

      MixtureConstraint c;
      c.i = i;
      c.j = j;
      c.components.emplace_back(real_weight, true_distance, spec.real_variance);
      for (int k = 0; k < noise_count; ++k) {
        const double mu =
            rng::uniform(noise_rng, spec.noise_mean_lo, spec.noise_mean_hi);
        const double var =
            rng::uniform(noise_rng, spec.noise_variance_lo, spec.noise_variance_hi);
        c.components.emplace_back((1.0 - real_weight) / noise_count, mu, var);
      }

      // Fisher-Yates so the real component is not positionally identifiable
      int real_index = 0;
      for (int k = static_cast<int>(c.components.size()) - 1; k > 0; --k) {
        const int swap_with = rng::uniform_int(shuffle_rng, 0, k);
        std::swap(c.components[static_cast<std::size_t>(k)],
                  c.components[static_cast<std::size_t>(swap_with)]);
        if (real_index == k)
          real_index = swap_with;
        else if (real_index == swap_with)
          real_index = k;
      }
      out.constraints.push_back(std::move(c));
      out.answer_key.push_back(real_index);
    }
  }
  return out;
}

std::vector<MixtureConstraint> exact_constraints(const GroundTruth& truth,
                                                 double variance) {
  const int n = static_cast<int>(truth.coords.size());
  std::vector<MixtureConstraint> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      MixtureConstraint c;
      c.i = i;
      c.j = j;
      c.components.emplace_back(1.0,
                                (truth.coords[static_cast<std::size_t>(i)] -
                                 truth.coords[static_cast<std::size_t>(j)])
                                    .norm(),
                                variance);
      out.push_back(std::move(c));
    }
  }
  return out;
}

StateEstimate random_start(int n_points, const SolverConfig& config) {
  if (n_points < 1) throw std::invalid_argument("random_start: need >= 1 point");
  config.validate();
  auto g = rng::make_engine(config.rng_seed, kStart);

  StateEstimate s;
  s.n_points = n_points;
  s.mean.resize(3 * n_points);
  for (Eigen::Index k = 0; k < s.mean.size(); ++k)
    s.mean(k) = rng::uniform(g, 0.0, config.coordinate_range);
  s.cov =
      config.initial_variance * Matrix::Identity(3 * n_points, 3 * n_points);
  return s;
}

}  // namespace gmcs
