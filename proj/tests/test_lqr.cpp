#include "qcart/lqr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace qcart {
namespace {

constexpr double kPi = std::numbers::pi;
const SimParams kParams;

PotentialSpec cosine() { return PotentialSpec::cosine(67.0, std::sqrt(67.0 * kPi)); }

TEST(Weights, QuadraticDefaults) {
  const LqrWeights w = weights_for(PotentialSpec::quadratic(), Vec2(3.0, 1.0), kParams.mass);
  EXPECT_NEAR(w.W1(0, 0), kPi / 2.0, 1e-15);
  EXPECT_NEAR(w.W1(1, 1), kPi / 2.0, 1e-14);
  EXPECT_EQ(w.W1(0, 1), 0.0);
  EXPECT_EQ(w.W2, 0.0);
}

TEST(Weights, QuarticFlatTopIsFloored) {
  const LqrWeights w = weights_for(PotentialSpec::quartic(), Vec2(0.0, 2.0), kParams.mass);
  EXPECT_EQ(w.W1(0, 0), kWeightFloor);
  const LqrWeights far = weights_for(PotentialSpec::quartic(), Vec2(2.0, 0.0), kParams.mass);
  EXPECT_NEAR(far.W1(0, 0), kPi / 100.0 * 4.0, 1e-15);
}

TEST(Weights, CosineLimitIsContinuous) {
  const PotentialSpec v = cosine();
  const double at0 = weights_for(v, Vec2::Zero(), kParams.mass).W1(0, 0);
  const double near = weights_for(v, Vec2(1e-6, 0.0), kParams.mass).W1(0, 0);
  EXPECT_NEAR(at0, 67.0 * kPi * kPi / (2.0 * v.k2 * v.k2), 1e-12);
  EXPECT_NEAR(near / at0, 1.0, 1e-6);
  // Either side of the series switch.
  const double z = 0.99e-4 * v.k2 / kPi, z2 = 1.01e-4 * v.k2 / kPi;
  EXPECT_NEAR(weights_for(v, Vec2(z, 0.0), kParams.mass).W1(0, 0) /
                  weights_for(v, Vec2(z2, 0.0), kParams.mass).W1(0, 0),
              1.0, 1e-8);
  // At x = k2 the well depth is 2 k1.
  EXPECT_NEAR(weights_for(v, Vec2(v.k2, 0.0), kParams.mass).W1(0, 0),
              2.0 * 67.0 / (v.k2 * v.k2), 1e-12);
}

TEST(Weights, StateNormArgument) {
  const Vec2 s(0.0, 2.0);
  const LqrWeights pos = weights_for(PotentialSpec::quartic(), s, kParams.mass);
  const LqrWeights norm = weights_for(PotentialSpec::quartic(), s, kParams.mass,
                                      WeightArgument::kStateNorm);
  EXPECT_EQ(pos.W1(0, 0), kWeightFloor);
  EXPECT_NEAR(norm.W1(0, 0), kPi / 100.0 * 4.0, 1e-15);
}

LinearModel quadratic_model() { return build_model(PotentialSpec::quadratic(), kParams); }

// Value iteration crawls when W1 is (nearly) singular in x: the free particle
// and the floored quartic flat top. The closed form still has to be a fixed
// point there.
TEST(SolveGain, ClosedFormMatchesValueIteration) {
  int compared = 0;
  for (const PotentialSpec& v : {PotentialSpec::quadratic(), PotentialSpec::free(),
                                 PotentialSpec::quartic(), cosine()}) {
    for (const Vec2& s : {Vec2(0.0, 0.0), Vec2(2.0, 0.5)}) {
      const StateSpaceModel model(v, kParams);
      const LinearModel lin = model.linearize(s, 0.0);
      const LqrWeights w = weights_for(v, s, kParams.mass);
      const LqrGain fast = solve_gain(lin, w);
      EXPECT_LT((riccati_map(fast.P, lin, w) - fast.P).cwiseAbs().maxCoeff(),
                1e-8 * (1.0 + fast.P.norm()));
      EXPECT_LT(spectral_radius(lin.A - lin.B * fast.K), 1.0);
      if (w.W1(0, 0) < 1e-3) continue;
      const LqrGain slow = solve_gain_iterative(lin, w);
      EXPECT_LT((fast.K - slow.K).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + fast.K.norm()));
      ++compared;
    }
  }
  EXPECT_EQ(compared, 5);
}

// Cheap control on the quadratic lands within O(dt^2) of K = (1, 1).
TEST(SolveGain, QuadraticGainIsNearUnit) {
  const LqrGain g = solve_gain(quadratic_model(), weights_for(PotentialSpec::quadratic(),
                                                               Vec2::Zero(), kParams.mass));
  EXPECT_NEAR(g.K(0), 1.0, 1e-6);
  EXPECT_NEAR(g.K(1), 1.0, 1e-6);
}

TEST(SolveGain, MatchesFiniteHorizonDynamicProgramming) {
  const LinearModel lin = quadratic_model();
  const LqrWeights w = weights_for(PotentialSpec::quadratic(), Vec2::Zero(), kParams.mass);
  Mat2 P = w.W1;
  Eigen::RowVector2d K0;
  for (int k = 0; k < 1000; ++k) {
    K0 = gain_from(P, lin, w);
    P = riccati_map(P, lin, w);
  }
  const LqrGain inf = solve_gain(lin, w);
  EXPECT_LT((inf.K - K0).cwiseAbs().maxCoeff(), 1e-6);

  // Same check with a control cost, which uses value iteration.
  LqrWeights costly = w;
  costly.W2 = 0.5;
  Mat2 Pc = costly.W1;
  for (int k = 0; k < 1000; ++k) Pc = riccati_map(Pc, lin, costly);
  EXPECT_LT((solve_gain(lin, costly).K - gain_from(Pc, lin, costly)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveGain, ScaleInvariantWithoutControlCost) {
  const LinearModel lin = quadratic_model();
  const LqrWeights w = weights_for(PotentialSpec::quadratic(), Vec2::Zero(), kParams.mass);
  const LqrGain base = solve_gain(lin, w);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    LqrWeights scaled = w;
    scaled.W1 *= c;
    EXPECT_LT((solve_gain(lin, scaled).K - base.K).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SolveGain, IdentityDynamicsIsNotStabilizable) {
  // With A = I and an impulse on p only, x never feels the input.
  LinearModel lin;
  LqrWeights w;
  EXPECT_THROW(solve_gain(lin, w), GainFault);
  RiccatiOptions opt;
  opt.max_iterations = 2000;
  EXPECT_THROW(solve_gain_iterative(lin, w, std::nullopt, opt), GainFault);
}

TEST(SolveGain, NonConvergenceFaults) {
  LqrWeights w = weights_for(PotentialSpec::quadratic(), Vec2::Zero(), kParams.mass);
  w.W2 = 1.0;
  RiccatiOptions opt;
  opt.max_iterations = 1;
  EXPECT_THROW(solve_gain_iterative(quadratic_model(), w, std::nullopt, opt), GainFault);
  w.W2 = -1.0;
  EXPECT_THROW(solve_gain(quadratic_model(), w), GainFault);
}

TEST(SolveGain, FreeParticleIsStabilizable) {
  const LinearModel lin = build_model(PotentialSpec::free(), kParams);
  const LqrGain g = solve_gain(lin, weights_for(PotentialSpec::free(), Vec2::Zero(), kParams.mass));
  EXPECT_LT(spectral_radius(lin.A - lin.B * g.K), 1.0);
}

TEST(SolveGain, QuarticGainIsContinuousInPosition) {
  const PotentialSpec v = PotentialSpec::quartic();
  const StateSpaceModel model(v, kParams);
  std::optional<Mat2> warm;
  double prev = -1.0;
  for (int i = 0; i <= 800; ++i) {
    const Vec2 s(0.01 * i, 0.0);
    const LqrGain g = solve_gain(model.linearize(s, 0.0), weights_for(v, s, kParams.mass), warm);
    warm = g.P;
    const double n = g.K.norm();
    if (prev > 0.0) {
      EXPECT_LT(std::max(n / prev, prev / n), 10.0) << "x = " << s(0);
    }
    prev = n;
  }
}

TEST(Control, ZeroClampAndSign) {
  const LqrGain g = solve_gain(quadratic_model(), weights_for(PotentialSpec::quadratic(),
                                                               Vec2::Zero(), kParams.mass));
  EXPECT_EQ(control(g, Vec2::Zero(), kParams.f_max), 0.0);
  LqrGain big;
  big.K << 100.0, 0.0;
  EXPECT_EQ(control(big, Vec2(1.0, 0.0), 8.0 * kPi), -8.0 * kPi);
  EXPECT_LT(control(g, Vec2(1.0, 0.0), kParams.f_max), 0.0);
}

TEST(Control, NoiselessRolloutConverges) {
  const StateSpaceModel model(PotentialSpec::quadratic(), kParams);
  const LqrGain g = solve_gain(model.linear(), weights_for(PotentialSpec::quadratic(),
                                                            Vec2::Zero(), kParams.mass));
  Vec2 s(1.0, 0.0);
  int steps = 0;
  while (s.norm() >= 1e-3 && steps < 1000) {
    s = model.f(s, control(g, s, kParams.f_max));
    ++steps;
  }
  EXPECT_LT(s.norm(), 1e-3);
}

}  // namespace
}  // namespace qcart
