#include "qcart/estimators.hpp"

#include <cmath>

namespace qcart {
namespace {

struct Prior {
  Vec2 mean;
  Mat2 cov;
};

FilterStep update(const EstimatorState& prev, const Prior& prior,
                  const Vec2& y, const Mat2& C, const Mat2& R,
                  const Vec2& linear_prediction) {
  const Vec2 z = y - C * prior.mean;
  const Mat2 S = C * prior.cov * C.transpose() + R;
  Eigen::FullPivLU<Mat2> lu(S);
  if (!lu.isInvertible() || !S.allFinite()) {
    throw EstimatorFault("innovation covariance is singular");
  }
  const Mat2 K = prior.cov * C.transpose() * lu.inverse();
  FilterStep out;
  out.state.mean = prior.mean + K * z;
  const Mat2 P = (Mat2::Identity() - K * C) * prior.cov;
  out.state.cov = nearest_psd(P);
  out.state.last_measurement = y;
  out.innovation = z;
  out.prediction_error = y - C * linear_prediction;
  (void)prev;
  return out;
}

}  // namespace

EstimatorState initial_estimate(const SimParams& params) {
  EstimatorState est;
  est.mean = Vec2::Zero();
  est.cov = Mat2::Zero();
  est.cov(0, 0) = params.sigma_system * params.sigma_system;
  est.cov(1, 1) = params.sigma_p_init * params.sigma_p_init;
  return est;
}

Mat2 nearest_psd(const Mat2& m) {
  const Mat2 sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat2> eig(sym);
  if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
  const Vec2 clipped = eig.eigenvalues().cwiseMax(0.0);
  Mat2 out = eig.eigenvectors() * clipped.asDiagonal() *
             eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Vec2 DecorrelatedModel::shifted_input(double u, const Vec2& y) const {
  return original.B * u + T * y;
}

DecorrelatedModel decorrelate(const LinearModel& model,
                              const NoiseModel& noise) {
  Eigen::FullPivLU<Mat2> lu(noise.meas);
  if (!lu.isInvertible()) {
    throw ConfigError("measurement covariance is singular; cannot decorrelate");
  }
  DecorrelatedModel out;
  out.original = model;
  const Mat2 R_inv = lu.inverse();
  out.T = noise.cross * R_inv;
  out.A_star = model.A - out.T * model.C;
  out.process_star =
      nearest_psd(noise.process - noise.cross * R_inv * noise.cross.transpose());
  out.process = noise.process;
  out.meas = noise.meas;
  return out;
}

FilterStep kf_step(const EstimatorState& est, const Vec2& y, double u,
                   const LinearModel& model, const NoiseModel& noise) {
  const Vec2 linear_prediction = model.A * est.mean + model.B * u;
  Prior prior{linear_prediction,
              model.A * est.cov * model.A.transpose() + noise.process};
  return update(est, prior, y, model.C, noise.meas, linear_prediction);
}

FilterStep kf_step(const EstimatorState& est, const Vec2& y, double u,
                   const DecorrelatedModel& dm) {
  const LinearModel& m = dm.original;
  const Vec2 linear_prediction = m.A * est.mean + m.B * u;
  Prior prior;
  if (est.last_measurement) {
    prior.mean = dm.A_star * est.mean + dm.shifted_input(u, *est.last_measurement);
    prior.cov = dm.A_star * est.cov * dm.A_star.transpose() + dm.process_star;
  } else {
    prior.mean = linear_prediction;
    prior.cov = m.A * est.cov * m.A.transpose() + dm.process;
  }
  return update(est, prior, y, m.C, dm.meas, linear_prediction);
}

FilterStep ekf_step(const EstimatorState& est, const Vec2& y, double u,
                    const StateSpaceModel& model, const NoiseModel& noise,
                    int n_inner, bool use_cross) {
  const int n = std::max(1, n_inner);
  const LinearModel lin = model.block(est.mean, u, n);
  const Mat2 A_one = model.linearize(est.mean, u).A;
  const NoiseModel block_noise = noise.for_block(A_one, n);
  const Mat2& C = lin.C;

  Prior prior;
  prior.mean = model.propagate(est.mean, u, n);
  Mat2 A = lin.A;
  Mat2 Q = block_noise.process;
  if (use_cross && est.last_measurement) {
    Eigen::FullPivLU<Mat2> lu(block_noise.meas);
    if (!lu.isInvertible()) {
      throw ConfigError("measurement covariance is singular; cannot decorrelate");
    }
    const Mat2 R_inv = lu.inverse();
    const Mat2 T = block_noise.cross * R_inv;
    prior.mean += T * (*est.last_measurement - C * est.mean);
    A = A - T * C;
    Q = nearest_psd(Q - block_noise.cross * R_inv * block_noise.cross.transpose());
  }
  prior.cov = A * est.cov * A.transpose() + Q;
  const Vec2 linear_prediction = lin.A * est.mean + lin.B * u;
  return update(est, prior, y, C, block_noise.meas, linear_prediction);
}

}  // namespace qcart
