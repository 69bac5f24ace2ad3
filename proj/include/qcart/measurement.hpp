#pragma once

#include "qcart/types.hpp"
#include "qcart/wavefunction.hpp"

#include <utility>

namespace qcart {

enum class Observable { kPosition, kMomentum };

struct MeasurementConfig {
  double coupling = 0.05;       // lambda
  double sigma_ancilla = 0.7;   // pointer width
  Observable observable = Observable::kPosition;

  void validate() const;
};

struct MeasurementOutcome {
  double raw = 0.0;     // ancilla pointer reading q
  double scaled = 0.0;  // q / lambda, in units of the observable
};

/// Draws q from P(q) = sum_a |psi(a)|^2 N(q; lambda a, sigma^2): an eigenvalue
/// a is sampled from the Born weights in the observable's basis, then Gaussian
/// pointer noise is added.
MeasurementOutcome sample_outcome(const Wavefunction& psi,
                                  const MeasurementConfig& cfg, Rng& rng);

/// Applies the Kraus operator M_q = sum_a exp(-(q - lambda a)^2 / 4 sigma^2)
/// |a><a| and renormalizes. Throws MeasurementFault when the weighted norm
/// underflows (an outcome the state could not have produced).
void apply_backaction(Wavefunction& psi, double raw,
                      const MeasurementConfig& cfg);

MeasurementOutcome measure(Wavefunction& psi, const MeasurementConfig& cfg,
                           Rng& rng);

/// Non-mutating variant returning (q_scaled, psi').
std::pair<double, Wavefunction> measured(const Wavefunction& psi,
                                         const MeasurementConfig& cfg,
                                         Rng& rng);

/// Density of the outcome distribution at q, by direct summation over the
/// grid (the same eigenbasis the sampler uses).
double outcome_density(const Wavefunction& psi, const MeasurementConfig& cfg,
                       double q);

}  // namespace qcart
