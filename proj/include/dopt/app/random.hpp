#pragma once

// Seeded instance generator for benchmarks.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniforms take the top 53 bits of one engine draw scaled by
// 2^-53, so they are bit-identical on every conforming platform. Normals use
// the Box-Muller transform on two uniforms and cache the second variate;
// they depend on the platform's log/sqrt/cos/sin only.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace dopt::app {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal(double sigma) {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return sigma * z;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    return sigma * r * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace dopt::app
