#include "qcart/wavefunction.hpp"

#include "qcart/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qcart {

Wavefunction::Wavefunction(GridPtr grid, std::vector<cplx> amplitudes)
    : grid_(std::move(grid)), amps_(std::move(amplitudes)) {
  if (!grid_ || amps_.size() != grid_->size()) {
    throw ConfigError("wavefunction size does not match its grid");
  }
}

double Wavefunction::norm() const {
  double sum = 0.0;
  for (const auto& a : amps_) sum += std::norm(a);
  return sum * grid_->dx();
}

void Wavefunction::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw RuntimeFault("cannot normalize a zero wavefunction");
  const double scale = 1.0 / std::sqrt(n);
  for (auto& a : amps_) a *= scale;
}

std::vector<double> Wavefunction::position_weights() const {
  std::vector<double> w(amps_.size());
  const double dx = grid_->dx();
  std::transform(amps_.begin(), amps_.end(), w.begin(),
                 [dx](const cplx& a) { return std::norm(a) * dx; });
  return w;
}

std::vector<cplx> Wavefunction::momentum_amplitudes() const {
  std::vector<cplx> phi(amps_.size());
  grid_->forward(amps_, phi);
  return phi;
}

std::vector<double> Wavefunction::momentum_weights() const {
  const auto phi = momentum_amplitudes();
  std::vector<double> w(phi.size());
  double total = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    w[k] = std::norm(phi[k]);
    total += w[k];
  }
  for (auto& v : w) v /= total;
  return w;
}

void Wavefunction::set_from_momentum(std::span<const cplx> phi) {
  grid_->inverse(phi, amps_);
}

double Wavefunction::boundary_weight() const {
  const double dx = grid_->dx();
  return std::max(std::norm(amps_.front()), std::norm(amps_.back())) * dx;
}

}  // namespace qcart
