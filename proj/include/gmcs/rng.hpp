#pragma once

#include <cstdint>
#include <random>

namespace gmcs::rng {

using Engine = std::mt19937_64;

// Independent substream of a master seed. Draw helpers avoid the standard
// distributions, whose output is implementation-defined; these are
// reproducible across platforms.
inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// inclusive on both ends
inline int uniform_int(Engine& g, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t r;
  do {
    r = g();
  } while (r >= limit);
  return lo + static_cast<int>(r % span);
}

inline double normal(Engine& g, double mean, double sd) {
  // Box-Muller; one value per call keeps the stream position predictable
  const double u1 = uniform01(g);
  const double u2 = uniform01(g);
  const double z =
      std::sqrt(-2.0 * std::log(u1 + 1e-300)) * std::cos(6.283185307179586 * u2);
  return mean + sd * z;
}

}  // namespace gmcs::rng
