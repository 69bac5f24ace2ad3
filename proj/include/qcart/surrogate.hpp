#pragma once

#include "qcart/params.hpp"
#include "qcart/types.hpp"

#include <Eigen/Dense>

namespace qcart {

/// Discretization of one inner step (kick by u, then evolve dt).
///   kStrang: kick, half force step, drift, half force step. Reproduces the
///            split-operator Ehrenfest map exactly for the quadratic potential.
///   kSymplecticEuler: x' = x + p dt/m, p' = p - V'(x) dt + u.
enum class Integrator { kStrang, kSymplecticEuler };

struct LinearModel {
  Mat2 A = Mat2::Identity();
  Vec2 B = Vec2(0.0, 1.0);
  Mat2 C = Mat2::Identity();
};

/// Deterministic surrogate dynamics f(s, u) for s = (x, p) and its
/// linearizations. For the quadratic potential f(s, u) = A s + B u exactly.
class StateSpaceModel {
 public:
  StateSpaceModel(const PotentialSpec& potential, const SimParams& params,
                  Integrator integrator = Integrator::kStrang);

  Vec2 f(const Vec2& s, double u) const;
  LinearModel linearize(const Vec2& s, double u) const;
  const LinearModel& linear() const { return origin_; }

  /// n inner steps with u held; returns the end state.
  Vec2 propagate(const Vec2& s, double u, int n) const;
  /// Linearization of the n-step map along the trajectory from s.
  LinearModel block(const Vec2& s, double u, int n) const;

  const PotentialSpec& potential() const { return potential_; }
  const SimParams& params() const { return params_; }
  Integrator integrator() const { return integrator_; }

 private:
  Vec2 f_nonlinear(const Vec2& s, double u) const;

  PotentialSpec potential_;
  SimParams params_;
  Integrator integrator_;
  LinearModel origin_;
};

LinearModel build_model(const PotentialSpec& potential, const SimParams& params,
                        Integrator integrator = Integrator::kStrang);

/// Second-order noise description in state units.
///   process: covariance of w (state noise, back-action)
///   meas:    covariance of v (measurement noise)
///   cross:   E[w v^T]
struct NoiseModel {
  Mat2 meas = Mat2::Zero();
  Mat2 process = Mat2::Zero();
  Mat2 cross = Mat2::Zero();

  Eigen::Matrix4d joint() const;
  /// Throws ConfigError unless meas, process and the joint block matrix are
  /// symmetric positive semidefinite (to a relative tolerance).
  void validate() const;

  /// Noise seen by a filter that runs once per block of n inner steps and
  /// treats the block-averaged measurement as an observation of the last
  /// state. A is the one-step transition.
  NoiseModel for_block(const Mat2& A, int n) const;

  static NoiseModel isotropic(double sigma_meas, double sigma_process);
  /// Uncorrelated surrogate noise with sigma_meas on the pointer scale (so the
  /// scaled readout has std sigma_meas / coupling) and sigma_dyn in state
  /// units.
  static NoiseModel classical(double sigma_meas, double sigma_dyn,
                              double coupling);
};

// Matches the calibrated quantum back-action at default parameters.
inline constexpr double kDefaultSigmaDyn = 0.2;

/// Draws (w, v) jointly Gaussian with NoiseModel::joint().
class JointNoiseSampler {
 public:
  explicit JointNoiseSampler(const NoiseModel& noise);
  std::pair<Vec2, Vec2> draw(Rng& rng) const;

 private:
  Eigen::Matrix4d factor_;
};

/// Surrogate state. `pending` is the back-action of the latest measurement,
/// which enters the next transition: s_{t+1} = f(s_t, u) + w_t while
/// y_t = s_t + v_t, with w_t and v_t correlated.
struct ClassicalState {
  Vec2 s = Vec2::Zero();
  Vec2 pending = Vec2::Zero();

  double x() const { return s(0); }
  double p() const { return s(1); }
};

struct ClassicalStep {
  ClassicalState next;
  Vec2 y;
};

/// One inner step: transition with force u, then a noisy observation of the
/// new state.
ClassicalStep step(const ClassicalState& state, double u,
                   const StateSpaceModel& model,
                   const JointNoiseSampler& noise, Rng& rng);

ClassicalState init_classical(const SimParams& params, Rng& rng);

}  // namespace qcart
