#pragma once

#include "qcart/grid.hpp"

#include <span>
#include <vector>

namespace qcart {

/// Complex amplitudes of psi(x) sampled on a Grid. Norm is sum |psi_i|^2 dx.
class Wavefunction {
 public:
  Wavefunction(GridPtr grid, std::vector<cplx> amplitudes);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const cplx> amplitudes() const { return amps_; }
  std::span<cplx> amplitudes() { return amps_; }
  std::size_t size() const { return amps_.size(); }

  double norm() const;
  void normalize();

  // |psi_i|^2 dx per grid point (sums to the norm).
  std::vector<double> position_weights() const;
  // Momentum-lattice probabilities (sum to 1), FFT order.
  std::vector<double> momentum_weights() const;
  std::vector<cplx> momentum_amplitudes() const;
  void set_from_momentum(std::span<const cplx> phi);

  // Largest single-cell probability at either edge of the periodic domain.
  double boundary_weight() const;

 private:
  GridPtr grid_;
  std::vector<cplx> amps_;
};

}  // namespace qcart
