#pragma once

#include "qcart/params.hpp"
#include "qcart/surrogate.hpp"
#include "qcart/types.hpp"

#include <optional>

namespace qcart {

// Floor applied to the position weight so flat-top potentials keep W1 > 0.
inline constexpr double kWeightFloor = 1e-6;

/// Which scalar the position weight of the nonlinear potentials is evaluated
/// at: the estimated position, or the norm of the whole estimated state.
enum class WeightArgument { kPosition, kStateNorm };

struct LqrWeights {
  Mat2 W1 = Mat2::Identity();
  double W2 = 0.0;
};

struct LqrGain {
  Eigen::RowVector2d K = Eigen::RowVector2d::Zero();
  Mat2 P = Mat2::Zero();
  int iterations = 0;
};

struct RiccatiOptions {
  double tolerance = 1e-10;
  int max_iterations = 100'000;
};

/// Energy weights: s^T W1 s equals the (inverted) energy at the evaluation
/// point. quadratic: diag(k/2, 1/2m); cosine: diag(V(x)/x^2, 1/2m) up to sign,
/// with its x -> 0 limit; quartic: diag(k x^2, 1/2m). The position entry is
/// floored at kWeightFloor.
LqrWeights weights_for(const PotentialSpec& potential, const Vec2& s,
                       double mass,
                       WeightArgument argument = WeightArgument::kPosition);

/// One application of the discrete Riccati map
/// P <- W1 + A'PA - A'PB (W2 + B'PB)^-1 B'PA.
Mat2 riccati_map(const Mat2& P, const LinearModel& model,
                 const LqrWeights& weights);

/// K = (W2 + B'PB)^-1 B'PA.
Eigen::RowVector2d gain_from(const Mat2& P, const LinearModel& model,
                             const LqrWeights& weights);

/// Stationary solution of the Riccati map. With W2 = 0 and a single input the
/// map collapses onto a one-parameter family P = W1 + g g' gamma whose fixed
/// point is the positive root of a quadratic; otherwise value iteration
/// (optionally warm-started) until ||dP||_inf < tolerance. Throws GainFault
/// when (A, B) is not stabilizable or iteration does not converge.
LqrGain solve_gain(const LinearModel& model, const LqrWeights& weights,
                   const std::optional<Mat2>& warm_start = std::nullopt,
                   const RiccatiOptions& options = {});

/// Plain value iteration from `start` (W1 if empty); exposed for comparison.
LqrGain solve_gain_iterative(const LinearModel& model,
                             const LqrWeights& weights,
                             const std::optional<Mat2>& start = std::nullopt,
                             const RiccatiOptions& options = {});

/// u = clamp(-K s, -f_max, f_max).
double control(const LqrGain& gain, const Vec2& s, double f_max);

double spectral_radius(const Mat2& m);

}  // namespace qcart
