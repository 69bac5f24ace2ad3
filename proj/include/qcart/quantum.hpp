#pragma once

#include "qcart/params.hpp"
#include "qcart/types.hpp"
#include "qcart/wavefunction.hpp"

#include <vector>

namespace qcart {

struct Moments {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;
};

/// Normalized Gaussian with position width sigma centred at x0, carrying a
/// plane-wave phase exp(i p0 x).
Wavefunction gaussian_wavepacket(GridPtr grid, double sigma, double x0,
                                 double p0);

/// Initial state of an episode: Gaussian of width sigma_system at the origin
/// with p0 drawn uniformly with standard deviation sigma_p_init.
Wavefunction init_wavepacket(GridPtr grid, const SimParams& params, Rng& rng);

/// Uniform momentum draw shared by the quantum and classical initializers.
double draw_initial_momentum(const SimParams& params, Rng& rng);

/// Symmetric (Strang) split-operator step for H = p^2/2m + V(x):
/// half potential phase, kinetic phase in the spectral basis, half potential
/// phase. Phase tables are built once per (grid, V, params).
class Propagator {
 public:
  Propagator(GridPtr grid, const PotentialSpec& potential,
             const SimParams& params);

  void step(Wavefunction& psi) const;
  void step(Wavefunction& psi, std::vector<cplx>& scratch) const;

 private:
  GridPtr grid_;
  std::vector<cplx> half_potential_;
  std::vector<cplx> kinetic_;
};

Wavefunction evolve(const Wavefunction& psi, const PotentialSpec& potential,
                    const SimParams& params);

/// Multiply by exp(-i F x); shifts <p> by -F.
void apply_kick(Wavefunction& psi, double force);
Wavefunction kicked(const Wavefunction& psi, double force);

Moments observables(const Wavefunction& psi);
double mean_position(const Wavefunction& psi);
double mean_momentum(const Wavefunction& psi);

/// Probability mass with |x| > x_th.
double prob_outside(const Wavefunction& psi, double x_threshold);

/// Momentum-lattice probability with |p| beyond (1 - band) of the lattice
/// edge. Non-negligible values mean the state is about to alias.
double momentum_edge_weight(const Wavefunction& psi, double band = 0.1);

inline bool has_failed(const Wavefunction& psi, double x_threshold) {
  return prob_outside(psi, x_threshold) >= 0.5;
}

}  // namespace qcart
