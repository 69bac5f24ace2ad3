#pragma once

#include "qcart/params.hpp"
#include "qcart/surrogate.hpp"
#include "qcart/types.hpp"

#include <optional>

namespace qcart {

/// A-posteriori estimate. `last_measurement` is the observation consumed by
/// the latest update; the decorrelated filters feed it into the next
/// prediction.
struct EstimatorState {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
  std::optional<Vec2> last_measurement;
};

/// s0 = 0, P0 = diag(sigma_system^2, sigma_p_init^2).
EstimatorState initial_estimate(const SimParams& params);

struct FilterStep {
  EstimatorState state;
  Vec2 innovation = Vec2::Zero();  // y - C s_prior
  // y_t - C (A s_{t-1} + B u_t): one-step prediction error of the linear
  // model, the estimator-training reward signal.
  Vec2 prediction_error = Vec2::Zero();
};

/// Transformed system with uncorrelated noise:
///   s_{t+1} = A* s_t + B u_t + T y_t + w*_t,  A* = A - T C,
///   T = S R^-1,  Q* = Q - S R^-1 S'.
struct DecorrelatedModel {
  LinearModel original;
  Mat2 A_star = Mat2::Identity();
  Mat2 T = Mat2::Zero();
  Mat2 process_star = Mat2::Zero();
  // Untransformed Q, used when no previous observation exists to pair with.
  Mat2 process = Mat2::Zero();
  Mat2 meas = Mat2::Identity();

  /// B u + T y.
  Vec2 shifted_input(double u, const Vec2& y) const;
};

DecorrelatedModel decorrelate(const LinearModel& model, const NoiseModel& noise);

/// Standard predict/update, ignoring any cross-covariance in `noise`.
FilterStep kf_step(const EstimatorState& est, const Vec2& y, double u,
                   const LinearModel& model, const NoiseModel& noise);

/// Kalman step on the decorrelated system. The prediction consumes the
/// previous observation through T; the first step (no previous observation)
/// predicts with the untransformed model.
FilterStep kf_step(const EstimatorState& est, const Vec2& y, double u,
                   const DecorrelatedModel& model);

/// Extended Kalman step over n_inner surrogate steps with u held: the
/// prediction iterates f and the covariance uses the product of Jacobians
/// along that path. With `use_cross`, the back-action correlation is removed
/// as in the decorrelated filter.
FilterStep ekf_step(const EstimatorState& est, const Vec2& y, double u,
                    const StateSpaceModel& model, const NoiseModel& noise,
                    int n_inner = 1, bool use_cross = false);

/// Symmetrize and clip negative eigenvalues to zero.
Mat2 nearest_psd(const Mat2& m);

}  // namespace qcart
