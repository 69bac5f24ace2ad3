#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace qcart {

using cplx = std::complex<double>;

/// Uniform periodic grid on [-L, L) with its discrete-Fourier momentum
/// lattice. Owns the FFT plans; copies share them.
class Grid {
 public:
  static constexpr std::size_t kDefaultPoints = 1024;
  static constexpr double kDefaultHalfWidth = 20.0;

  Grid(std::size_t n_points = kDefaultPoints,
       double half_width = kDefaultHalfWidth);

  std::size_t size() const { return n_; }
  double half_width() const { return half_width_; }
  double dx() const { return dx_; }
  double dp() const;
  double x(std::size_t i) const { return positions_[i]; }
  double p(std::size_t k) const { return momenta_[k]; }
  std::span<const double> positions() const { return positions_; }
  // FFT ordering: 0, dp, ..., -dp.
  std::span<const double> momenta() const { return momenta_; }

  // Unnormalized forward DFT; inverse() divides by n so inverse(forward(f)) == f.
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  void inverse(std::span<const cplx> in, std::span<cplx> out) const;

  bool operator==(const Grid& other) const {
    return n_ == other.n_ && half_width_ == other.half_width_;
  }

 private:
  struct Plans;

  std::size_t n_;
  double half_width_;
  double dx_;
  std::vector<double> positions_;
  std::vector<double> momenta_;
  std::shared_ptr<const Plans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(std::size_t n_points = Grid::kDefaultPoints,
                         double half_width = Grid::kDefaultHalfWidth) {
  return std::make_shared<const Grid>(n_points, half_width);
}

}  // namespace qcart
