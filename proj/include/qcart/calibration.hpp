#pragma once

#include "qcart/grid.hpp"
#include "qcart/params.hpp"
#include "qcart/surrogate.hpp"

#include <cstdint>
#include <string>

namespace qcart {

/// Running mean/covariance with the pairwise (count, mean, M2) merge rule.
template <int N>
class CovarianceAccumulator {
 public:
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  void add(const Vec& x) {
    ++count_;
    const Vec delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_).transpose();
  }

  void merge(const CovarianceAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const Vec delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    m2_ += other.m2_ + delta * delta.transpose() * (na * nb / n);
    count_ += other.count_;
  }

  std::uint64_t count() const { return count_; }
  const Vec& mean() const { return mean_; }
  Mat covariance() const {
    if (count_ < 2) return Mat::Zero();
    Mat c = m2_ / static_cast<double>(count_ - 1);
    return 0.5 * (c + c.transpose());
  }

 private:
  std::uint64_t count_ = 0;
  Vec mean_ = Vec::Zero();
  Mat m2_ = Mat::Zero();
};

/// Force schedule used while extracting noise from the quantum simulator.
///   kUniform:    F ~ U[-F_max, F_max] every inner step.
///   kDithered:   a truth-feedback stabilizer plus U[-dither, dither]; keeps
///                episodes alive past the burn-in window.
enum class CalibrationForcing { kUniform, kDithered };

struct CalibrationOptions {
  std::uint64_t n_steps = 1'000'000;  // retained samples requested
  std::uint64_t burn_in = 300;        // per-episode transient discarded
  std::uint64_t min_samples = 1000;
  CalibrationForcing forcing = CalibrationForcing::kDithered;
  double dither = 0.0;  // <= 0 selects F_max / 8
  int shards = 8;       // fixed so results do not depend on thread count
  std::uint64_t max_inner_steps = 0;  // 0: 50 * n_steps safety cap
  Integrator integrator = Integrator::kStrang;
  std::size_t grid_points = Grid::kDefaultPoints;
  double grid_half_width = Grid::kDefaultHalfWidth;
};

struct CalibrationResult {
  NoiseModel noise;
  std::uint64_t samples = 0;
  std::uint64_t episodes = 0;
  std::uint64_t inner_steps = 0;
};

/// Runs the quantum loop, pairs each measurement's noise v_t = y_t - s_t
/// (s_t the pre-measurement expectation values) with the transition residual
/// w_t = s_{t+1} - f(s_t, u_{t+1}), and returns their sample covariances.
CalibrationResult calibrate_noise(const PotentialSpec& potential,
                                  const SimParams& params, std::uint64_t seed,
                                  const CalibrationOptions& options = {});

// Plain-text key/value artifact, 17 significant digits, round-trip exact.
struct NoiseArtifact {
  int format_version = 1;
  PotentialSpec potential;
  SimParams params;
  Integrator integrator = Integrator::kStrang;
  NoiseModel noise;
  LinearModel model;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
};

std::string format_noise_artifact(const NoiseArtifact& artifact);
NoiseArtifact parse_noise_artifact(const std::string& text);
void write_noise_artifact(const std::string& path, const NoiseArtifact& a);
NoiseArtifact read_noise_artifact(const std::string& path);

}  // namespace qcart
