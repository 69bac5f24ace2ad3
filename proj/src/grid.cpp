#include "qcart/grid.hpp"

#include "qcart/types.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>

namespace qcart {
namespace {

// The FFTW planner is not reentrant; execution with the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

struct Grid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Plans(std::size_t n) {
    std::vector<cplx> a(n), b(n);
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int len = static_cast<int>(n);
    forward = fftw_plan_dft_1d(len, as_fftw(a.data()), as_fftw(b.data()),
                               FFTW_FORWARD, flags);
    backward = fftw_plan_dft_1d(len, as_fftw(a.data()), as_fftw(b.data()),
                                FFTW_BACKWARD, flags);
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

Grid::Grid(std::size_t n_points, double half_width)
    : n_(n_points), half_width_(half_width) {
  if (n_points < 16 || !std::has_single_bit(n_points)) {
    throw ConfigError("grid size must be a power of two >= 16");
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw ConfigError("grid half-width must be positive");
  }
  dx_ = 2.0 * half_width_ / static_cast<double>(n_);
  positions_.resize(n_);
  momenta_.resize(n_);
  const double step_p = dp();
  const auto half = static_cast<std::ptrdiff_t>(n_ / 2);
  for (std::size_t i = 0; i < n_; ++i) {
    positions_[i] = -half_width_ + dx_ * static_cast<double>(i);
    auto k = static_cast<std::ptrdiff_t>(i);
    if (k >= half) k -= static_cast<std::ptrdiff_t>(n_);
    momenta_[i] = step_p * static_cast<double>(k);
  }
  plans_ = std::make_shared<const Plans>(n_);
}

double Grid::dp() const { return std::numbers::pi / half_width_; }

void Grid::forward(std::span<const cplx> in, std::span<cplx> out) const {
  fftw_execute_dft(plans_->forward, as_fftw(const_cast<cplx*>(in.data())),
                   as_fftw(out.data()));
}

void Grid::inverse(std::span<const cplx> in, std::span<cplx> out) const {
  fftw_execute_dft(plans_->backward, as_fftw(const_cast<cplx*>(in.data())),
                   as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : out) v *= scale;
}

}  // namespace qcart
