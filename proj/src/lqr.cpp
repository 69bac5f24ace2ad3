#include "qcart/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace qcart {

LqrWeights weights_for(const PotentialSpec& potential, const Vec2& s,
                       double mass, WeightArgument argument) {
  const double z = argument == WeightArgument::kPosition ? s(0) : s.norm();
  double wx = 0.0;
  switch (potential.kind) {
    case PotentialKind::kQuadratic:
      wx = 0.5 * potential.k;
      break;
    case PotentialKind::kCosine: {
      // |V(z)| / z^2; the removable singularity at z = 0 is k1 pi^2 / (2 k2^2).
      const double w = std::numbers::pi / potential.k2;
      const double t = w * z;
      if (std::abs(t) < 1e-4) {
        const double t2 = t * t;
        wx = 0.5 * potential.k1 * w * w * (1.0 - t2 / 12.0 + t2 * t2 / 360.0);
      } else {
        wx = potential.k1 * (1.0 - std::cos(t)) / (z * z);
      }
      break;
    }
    case PotentialKind::kQuartic:
      wx = potential.k * z * z;
      break;
  }
  LqrWeights out;
  out.W1 << std::max(wx, kWeightFloor), 0.0, 0.0, 1.0 / (2.0 * mass);
  out.W2 = 0.0;
  return out;
}

Mat2 riccati_map(const Mat2& P, const LinearModel& model,
                 const LqrWeights& weights) {
  const Mat2& A = model.A;
  const Vec2& B = model.B;
  const Vec2 PB = P * B;
  const double denom = weights.W2 + B.dot(PB);
  const Eigen::RowVector2d BtPA = PB.transpose() * A;
  Mat2 next = weights.W1 + A.transpose() * P * A -
              BtPA.transpose() * BtPA / denom;
  return 0.5 * (next + next.transpose());
}

Eigen::RowVector2d gain_from(const Mat2& P, const LinearModel& model,
                             const LqrWeights& weights) {
  const Vec2 PB = P * model.B;
  const double denom = weights.W2 + model.B.dot(PB);
  if (!(denom > 0.0)) throw GainFault("W2 + B'PB is not positive");
  return (PB.transpose() * model.A) / denom;
}

LqrGain solve_gain_iterative(const LinearModel& model,
                             const LqrWeights& weights,
                             const std::optional<Mat2>& start,
                             const RiccatiOptions& options) {
  LqrGain out;
  Mat2 P = start.value_or(weights.W1);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Mat2 next = riccati_map(P, model, weights);
    if (!next.allFinite()) break;
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (delta < options.tolerance) {
      out.P = P;
      out.K = gain_from(P, model, weights);
      out.iterations = it;
      return out;
    }
  }
  throw GainFault("Riccati value iteration did not converge");
}

namespace {

// W2 = 0, one input: A'(P - PBB'P / B'PB)A = gamma(P) g g' with g = A' J B,
// J the quarter turn and gamma(P) = det(P) / B'PB. Hence every iterate is
// W1 + gamma g g' and the fixed point solves
//   h^2 gamma^2 + (beta - a) gamma - d = 0,
// with d = det W1, beta = B'W1B, a = g' adj(W1) g, h = B'g.
std::optional<Mat2> cheap_control_fixed_point(const LinearModel& model,
                                              const Mat2& W1) {
  Mat2 J;
  J << 0.0, -1.0, 1.0, 0.0;
  const Vec2& b = model.B;
  const Vec2 g = model.A.transpose() * (J * b);
  Mat2 adj;
  adj << W1(1, 1), -W1(0, 1), -W1(1, 0), W1(0, 0);
  const double d = W1.determinant();
  const double beta = b.dot(W1 * b);
  const double a = g.dot(adj * g);
  const double h = b.dot(g);
  const double scale = std::max({std::abs(beta), std::abs(a), 1e-300});
  double gamma = 0.0;
  if (h * h <= 1e-14 * scale) {
    if (beta - a <= 1e-12 * scale) return std::nullopt;
    gamma = d / (beta - a);
  } else {
    const double lin = beta - a;
    const double disc = lin * lin + 4.0 * h * h * d;
    // Stable form of the positive root.
    gamma = lin > 0.0 ? 2.0 * d / (lin + std::sqrt(disc))
                      : (-lin + std::sqrt(disc)) / (2.0 * h * h);
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) return std::nullopt;
  return Mat2(W1 + gamma * g * g.transpose());
}

}  // namespace

LqrGain solve_gain(const LinearModel& model, const LqrWeights& weights,
                   const std::optional<Mat2>& warm_start,
                   const RiccatiOptions& options) {
  if (weights.W2 < 0.0) throw GainFault("W2 must be non-negative");
  if (weights.W2 == 0.0) {
    const auto P = cheap_control_fixed_point(model, weights.W1);
    if (!P) throw GainFault("(A, B) is not stabilizable for these weights");
    LqrGain out;
    out.P = *P;
    out.K = gain_from(out.P, model, weights);
    const Mat2 A_cl = model.A - model.B * out.K;
    if (!(spectral_radius(A_cl) < 1.0)) {
      throw GainFault("closed loop is not stable");
    }
    return out;
  }
  return solve_gain_iterative(model, weights, warm_start, options);
}

double control(const LqrGain& gain, const Vec2& s, double f_max) {
  const double u = -gain.K.dot(s);
  if (!std::isfinite(u)) return 0.0;
  return std::clamp(u, -f_max, f_max);
}

double spectral_radius(const Mat2& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
  return std::max(std::abs(0.5 * (tr + disc)), std::abs(0.5 * (tr - disc)));
}

}  // namespace qcart
