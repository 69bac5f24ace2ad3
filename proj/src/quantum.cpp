#include "qcart/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qcart {
namespace {

constexpr cplx kI{0.0, 1.0};

}  // namespace

Wavefunction gaussian_wavepacket(GridPtr grid, double sigma, double x0,
                                 double p0) {
  if (!(sigma > 0.0)) throw ConfigError("wavepacket width must be positive");
  if (grid->dx() > sigma / 4.0) {
    throw ConfigError("grid too coarse for wavepacket width (dx > sigma/4)");
  }
  std::vector<cplx> amps(grid->size());
  const double inv4s2 = 1.0 / (4.0 * sigma * sigma);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double x = grid->x(i);
    const double d = x - x0;
    amps[i] = std::exp(-d * d * inv4s2) * std::exp(kI * (p0 * x));
  }
  Wavefunction psi(std::move(grid), std::move(amps));
  psi.normalize();
  return psi;
}

double draw_initial_momentum(const SimParams& params, Rng& rng) {
  // Uniform on [-a, a] has standard deviation a / sqrt(3).
  const double half_width = params.sigma_p_init * std::sqrt(3.0);
  if (half_width == 0.0) return 0.0;
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  return dist(rng);
}

Wavefunction init_wavepacket(GridPtr grid, const SimParams& params, Rng& rng) {
  const double p0 = draw_initial_momentum(params, rng);
  return gaussian_wavepacket(std::move(grid), params.sigma_system, 0.0, p0);
}

Propagator::Propagator(GridPtr grid, const PotentialSpec& potential,
                       const SimParams& params)
    : grid_(std::move(grid)) {
  const std::size_t n = grid_->size();
  half_potential_.resize(n);
  kinetic_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    half_potential_[i] =
        std::exp(-kI * (0.5 * params.dt * potential.value(grid_->x(i))));
    const double p = grid_->p(i);
    kinetic_[i] = std::exp(-kI * (params.dt * p * p / (2.0 * params.mass)));
  }
}

void Propagator::step(Wavefunction& psi) const {
  std::vector<cplx> scratch(psi.size());
  step(psi, scratch);
}

void Propagator::step(Wavefunction& psi, std::vector<cplx>& scratch) const {
  auto amps = psi.amplitudes();
  const std::size_t n = amps.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) amps[i] *= half_potential_[i];
  grid_->forward(amps, scratch);
  for (std::size_t i = 0; i < n; ++i) scratch[i] *= kinetic_[i];
  grid_->inverse(scratch, amps);
  for (std::size_t i = 0; i < n; ++i) amps[i] *= half_potential_[i];
}

Wavefunction evolve(const Wavefunction& psi, const PotentialSpec& potential,
                    const SimParams& params) {
  Wavefunction out = psi;
  Propagator(psi.grid_ptr(), potential, params).step(out);
  return out;
}

void apply_kick(Wavefunction& psi, double force) {
  if (force == 0.0) return;
  const auto& grid = psi.grid();
  auto amps = psi.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    amps[i] *= std::exp(-kI * (force * grid.x(i)));
  }
}

Wavefunction kicked(const Wavefunction& psi, double force) {
  Wavefunction out = psi;
  apply_kick(out, force);
  return out;
}

double mean_position(const Wavefunction& psi) {
  const auto& grid = psi.grid();
  const auto amps = psi.amplitudes();
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double w = std::norm(amps[i]);
    m0 += w;
    m1 += w * grid.x(i);
  }
  return m1 / m0;
}

double mean_momentum(const Wavefunction& psi) {
  const auto w = psi.momentum_weights();
  const auto p = psi.grid().momenta();
  double m1 = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) m1 += w[k] * p[k];
  return m1;
}

Moments observables(const Wavefunction& psi) {
  Moments m;
  {
    const auto x = psi.grid().positions();
    const auto amps = psi.amplitudes();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
      const double w = std::norm(amps[i]);
      m0 += w;
      m1 += w * x[i];
      m2 += w * x[i] * x[i];
    }
    m.mean_x = m1 / m0;
    m.var_x = m2 / m0 - m.mean_x * m.mean_x;
  }
  {
    const auto w = psi.momentum_weights();
    const auto p = psi.grid().momenta();
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m1 += w[k] * p[k];
      m2 += w[k] * p[k] * p[k];
    }
    m.mean_p = m1;
    m.var_p = m2 - m1 * m1;
  }
  return m;
}

double prob_outside(const Wavefunction& psi, double x_threshold) {
  // Each sample represents the cell [x - dx/2, x + dx/2]; cells straddling
  // the threshold contribute the fraction lying outside.
  const auto& grid = psi.grid();
  const auto amps = psi.amplitudes();
  const double dx = grid.dx();
  double outside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double w = std::norm(amps[i]);
    total += w;
    const double ax = std::abs(grid.x(i));
    const double frac =
        std::clamp((ax + 0.5 * dx - x_threshold) / dx, 0.0, 1.0);
    outside += frac * w;
  }
  return std::clamp(outside / total, 0.0, 1.0);
}

double momentum_edge_weight(const Wavefunction& psi, double band) {
  const std::vector<double> w = psi.momentum_weights();
  const auto momenta = psi.grid().momenta();
  double p_max = 0.0;
  for (double p : momenta) p_max = std::max(p_max, std::abs(p));
  const double cut = (1.0 - band) * p_max;
  double edge = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (std::abs(momenta[k]) > cut) edge += w[k];
  }
  return edge;
}

}  // namespace qcart
