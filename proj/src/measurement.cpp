#include "qcart/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qcart {
namespace {

constexpr double kMinKrausNorm = 1e-12;

// Eigenvalues and Born weights of the measured observable.
struct Spectrum {
  std::span<const double> values;
  std::vector<double> weights;
};

Spectrum spectrum_of(const Wavefunction& psi, Observable obs) {
  if (obs == Observable::kPosition) {
    auto w = psi.position_weights();
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return {psi.grid().positions(), std::move(w)};
  }
  return {psi.grid().momenta(), psi.momentum_weights()};
}

std::size_t sample_index(const std::vector<double>& weights, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double target = u01(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (target < cumulative) return i;
  }
  // Rounding left target above the final partial sum; take the last
  // non-empty cell.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

void multiply_gaussian(std::span<cplx> amps, std::span<const double> values,
                       double raw, const MeasurementConfig& cfg) {
  const double inv4s2 = 1.0 / (4.0 * cfg.sigma_ancilla * cfg.sigma_ancilla);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double d = raw - cfg.coupling * values[i];
    amps[i] *= std::exp(-d * d * inv4s2);
  }
}

}  // namespace

void MeasurementConfig::validate() const {
  if (!(coupling > 0.0)) throw ConfigError("measurement coupling must be > 0");
  if (!(sigma_ancilla > 0.0)) {
    throw ConfigError("ancilla width must be > 0");
  }
}

MeasurementOutcome sample_outcome(const Wavefunction& psi,
                                  const MeasurementConfig& cfg, Rng& rng) {
  const Spectrum spec = spectrum_of(psi, cfg.observable);
  const double eigenvalue = spec.values[sample_index(spec.weights, rng)];
  std::normal_distribution<double> pointer(0.0, cfg.sigma_ancilla);
  const double raw = cfg.coupling * eigenvalue + pointer(rng);
  return {raw, raw / cfg.coupling};
}

void apply_backaction(Wavefunction& psi, double raw,
                      const MeasurementConfig& cfg) {
  const double before = psi.norm();
  if (cfg.observable == Observable::kPosition) {
    multiply_gaussian(psi.amplitudes(), psi.grid().positions(), raw, cfg);
  } else {
    auto phi = psi.momentum_amplitudes();
    multiply_gaussian(phi, psi.grid().momenta(), raw, cfg);
    psi.set_from_momentum(phi);
  }
  const double after = psi.norm();
  if (!(after >= kMinKrausNorm * before)) {
    throw MeasurementFault("Kraus weight vanished for outcome q = " +
                           std::to_string(raw));
  }
  psi.normalize();
}

MeasurementOutcome measure(Wavefunction& psi, const MeasurementConfig& cfg,
                           Rng& rng) {
  const MeasurementOutcome out = sample_outcome(psi, cfg, rng);
  apply_backaction(psi, out.raw, cfg);
  return out;
}

std::pair<double, Wavefunction> measured(const Wavefunction& psi,
                                         const MeasurementConfig& cfg,
                                         Rng& rng) {
  Wavefunction out = psi;
  const double scaled = measure(out, cfg, rng).scaled;
  return {scaled, std::move(out)};
}

double outcome_density(const Wavefunction& psi, const MeasurementConfig& cfg,
                       double q) {
  const Spectrum spec = spectrum_of(psi, cfg.observable);
  const double s = cfg.sigma_ancilla;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * s * s);
  double density = 0.0;
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    const double d = q - cfg.coupling * spec.values[i];
    density += spec.weights[i] * std::exp(-d * d / (2.0 * s * s));
  }
  return density * norm;
}

}  // namespace qcart
