#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace qcart {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Rng = std::mt19937_64;

// Invalid configuration detected before or at model construction. CLI exit 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical fault during a run. CLI exit 3.
class RuntimeFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A measurement outcome whose Kraus weight annihilated the state.
class MeasurementFault : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

// Singular innovation covariance in a Kalman update.
class EstimatorFault : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

// Riccati iteration failed to converge or the pair is not stabilizable.
class GainFault : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

// The remote agent went away mid-episode.
class SessionLost : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

/// SplitMix64 finalizer; used to derive independent per-episode seeds from a
/// master seed so results do not depend on how episodes are scheduled.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace qcart
