#include "qcart/measurement.hpp"
#include "qcart/quantum.hpp"
#include "oracles.hpp"
#include "stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace qcart {
namespace {

using test::ks_statistic;
using test::mean_of;
using test::normal_cdf;
using test::variance_of;

const MeasurementConfig kX{0.05, 0.7, Observable::kPosition};
const MeasurementConfig kP{0.05, 0.7, Observable::kMomentum};

Wavefunction double_peaked(const GridPtr& grid) {
  const Wavefunction a = gaussian_wavepacket(grid, 0.8, -3.0, 0.5);
  const Wavefunction b = gaussian_wavepacket(grid, 0.8, 2.5, -1.0);
  std::vector<cplx> amps(grid->size());
  for (std::size_t i = 0; i < amps.size(); ++i) {
    amps[i] = 0.6 * a.amplitudes()[i] + 0.8 * b.amplitudes()[i];
  }
  Wavefunction psi(grid, amps);
  psi.normalize();
  return psi;
}

TEST(MeasurementConfig, RejectsNonPositiveParameters) {
  EXPECT_THROW((MeasurementConfig{0.0, 0.7, Observable::kPosition}.validate()), ConfigError);
  EXPECT_THROW((MeasurementConfig{0.05, -1.0, Observable::kPosition}.validate()), ConfigError);
}

TEST(SampleOutcome, MeanTracksExpectation) {
  const Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 2.0, 0.0);
  Rng rng(11);
  std::vector<double> q;
  for (int i = 0; i < 100000; ++i) q.push_back(sample_outcome(psi, kX, rng).raw);
  const double sd_q = std::sqrt(0.7 * 0.7 + 0.05 * 0.05 * 1.0);
  EXPECT_NEAR(mean_of(q), 0.05 * 2.0, 3.0 * sd_q / std::sqrt(1e5));
}

TEST(SampleOutcome, ScaledOutcomeIsRawOverCoupling) {
  const Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 0.0, 0.0);
  Rng rng(1);
  const MeasurementOutcome o = sample_outcome(psi, kX, rng);
  EXPECT_DOUBLE_EQ(o.scaled, o.raw / 0.05);
}

TEST(SampleOutcome, StrongLimitRecoversPositionVariance) {
  const Wavefunction psi = gaussian_wavepacket(make_grid(), 1.3, 0.5, 0.0);
  const MeasurementConfig strong{1.0, 1e-6, Observable::kPosition};
  Rng rng(5);
  std::vector<double> q;
  for (int i = 0; i < 100000; ++i) q.push_back(sample_outcome(psi, strong, rng).raw);
  const double var_x = observables(psi).var_x;
  EXPECT_NEAR(variance_of(q) / var_x, 1.0, 0.02);
}

TEST(SampleOutcome, DeltaStateGivesPointerNoise) {
  const GridPtr grid = make_grid();
  std::vector<cplx> amps(grid->size(), 0.0);
  amps[grid->size() / 2] = 1.0 / std::sqrt(grid->dx());
  ASSERT_DOUBLE_EQ(grid->x(grid->size() / 2), 0.0);
  const Wavefunction psi(grid, amps);
  Rng rng(99);
  std::vector<double> q;
  for (int i = 0; i < 20000; ++i) q.push_back(sample_outcome(psi, kX, rng).raw);
  const double d = ks_statistic(q, [](double v) { return normal_cdf(v, 0.0, 0.7); });
  EXPECT_LT(d, 1.63 / std::sqrt(20000.0));  // 1% critical value
  // Variance follows the Kraus operator: sigma^2, not 2 sigma^2.
  EXPECT_NEAR(variance_of(q), 0.49, 0.02 * 0.49);
}

TEST(SampleOutcome, MatchesQuadratureOfOutcomeDensity) {
  const GridPtr grid = make_grid();
  const Wavefunction psi = double_peaked(grid);
  for (const MeasurementConfig& cfg : {kX, kP}) {
    Rng rng(7);
    std::vector<double> q;
    for (int i = 0; i < 100000; ++i) q.push_back(sample_outcome(psi, cfg, rng).raw);
    const test::QuadratureCdf cdf(psi, cfg, -6.0, 6.0, 1000);
    EXPECT_NEAR(cdf.total(), 1.0, 1e-3);
    EXPECT_LT(ks_statistic(q, cdf), 0.01);
  }
}

TEST(SampleOutcome, UnbiasedOnDoublePeakedState) {
  const GridPtr grid = make_grid();
  const Wavefunction psi = double_peaked(grid);
  const Moments m = observables(psi);
  for (const MeasurementConfig& cfg : {kX, kP}) {
    Rng rng(13);
    std::vector<double> q;
    for (int i = 0; i < 100000; ++i) q.push_back(sample_outcome(psi, cfg, rng).scaled);
    const double truth = cfg.observable == Observable::kPosition ? m.mean_x : m.mean_p;
    const double se = std::sqrt(variance_of(q) / q.size());
    EXPECT_NEAR(mean_of(q), truth, 3.5 * se);
  }
}

TEST(Backaction, WideAncillaLeavesStateUntouched) {
  const Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 0.4, 0.3);
  Wavefunction out = psi;
  apply_backaction(out, 0.05 * 0.4 + 0.3, {0.05, 1e6, Observable::kPosition});
  apply_backaction(out, 0.05 * 0.3 - 0.2, {0.05, 1e6, Observable::kMomentum});
  const Moments a = observables(psi), b = observables(out);
  EXPECT_NEAR(a.mean_x, b.mean_x, 1e-8);
  EXPECT_NEAR(a.mean_p, b.mean_p, 1e-8);
  EXPECT_NEAR(a.var_x, b.var_x, 1e-8);
  EXPECT_NEAR(a.var_p, b.var_p, 1e-8);
}

// |psi|^2 is Gaussian with variance s2; the Kraus weight squared is Gaussian
// in x with variance sigma^2 / lambda^2, so the posterior variance is the
// harmonic combination.
TEST(Backaction, GaussianPosteriorVariance) {
  const Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 0.0, 0.0);
  Wavefunction out = psi;
  apply_backaction(out, 0.0, kX);
  const double expected = 1.0 / (1.0 + 0.05 * 0.05 / (0.7 * 0.7));
  const Moments m = observables(out);
  EXPECT_NEAR(m.mean_x, 0.0, 1e-12);
  EXPECT_NEAR(m.var_x, expected, 1e-6);
  EXPECT_LT(m.var_x, 1.0);
  EXPECT_NEAR(out.norm(), 1.0, 1e-12);
}

TEST(Backaction, RepeatedPositionReadoutsSqueeze) {
  Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 0.0, 0.0);
  Moments last = observables(psi);
  double expected = 1.0;
  for (int i = 0; i < 20; ++i) {
    apply_backaction(psi, 0.05 * mean_position(psi), kX);
    const Moments m = observables(psi);
    expected = 1.0 / (1.0 / expected + 0.05 * 0.05 / (0.7 * 0.7));
    EXPECT_LT(m.var_x, last.var_x);
    EXPECT_GT(m.var_p, last.var_p);
    EXPECT_NEAR(m.var_x, expected, 1e-6);
    last = m;
  }
}

TEST(Backaction, ImpossibleOutcomeFaults) {
  Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 0.0, 0.0);
  EXPECT_THROW(apply_backaction(psi, 1e4, {1.0, 1e-3, Observable::kPosition}),
               MeasurementFault);
}

TEST(Backaction, ContractsVarianceOnAverage) {
  const GridPtr grid = make_grid();
  const Wavefunction psi = double_peaked(grid);
  const double prior = observables(psi).var_x;
  Rng rng(21);
  std::vector<double> post;
  for (int i = 0; i < 10000; ++i) {
    Wavefunction w = psi;
    measure(w, kX, rng);
    post.push_back(observables(w).var_x);
  }
  const double se = std::sqrt(variance_of(post) / post.size());
  EXPECT_LT(mean_of(post) + 2.33 * se, prior);
}

TEST(Measure, ComposesSamplerAndBackaction) {
  const Wavefunction psi = gaussian_wavepacket(make_grid(), 1.0, 0.7, -0.4);
  for (const MeasurementConfig& cfg : {kX, kP}) {
    Rng r1(42), r2(42);
    Wavefunction a = psi;
    const MeasurementOutcome o = measure(a, cfg, r1);
    const MeasurementOutcome s = sample_outcome(psi, cfg, r2);
    Wavefunction b = psi;
    apply_backaction(b, s.raw, cfg);
    EXPECT_EQ(o.raw, s.raw);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      EXPECT_EQ(a.amplitudes()[i], b.amplitudes()[i]);
    }
    Rng r3(42);
    const auto [q, c] = measured(psi, cfg, r3);
    EXPECT_EQ(q, o.scaled);
    EXPECT_NEAR(observables(c).var_x, observables(a).var_x, 0.0);
  }
}

// N weak readouts interleaved with evolution differ from one readout carrying
// the same information (coupling sqrt(N) lambda) after the evolution.
TEST(Measure, SequentialReadoutsDifferFromOneStrongerReadout) {
  const SimParams params;
  const GridPtr grid = make_grid();
  const Propagator prop(grid, PotentialSpec::quadratic(), params);
  const int n = 200;
  Wavefunction a = gaussian_wavepacket(grid, 1.0, 0.0, 0.0);
  Wavefunction b = a;
  for (int i = 0; i < n; ++i) {
    prop.step(a);
    apply_backaction(a, kX.coupling * mean_position(a), kX);
    prop.step(b);
  }
  const MeasurementConfig stronger{kX.coupling * std::sqrt(double(n)), kX.sigma_ancilla,
                                   Observable::kPosition};
  apply_backaction(b, stronger.coupling * mean_position(b), stronger);
  const double va = observables(a).var_x, vb = observables(b).var_x;
  EXPECT_GT(std::abs(va - vb), 1e-3 * va);
}

}  // namespace
}  // namespace qcart
