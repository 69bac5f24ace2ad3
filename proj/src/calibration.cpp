#include "qcart/calibration.hpp"

#include "qcart/lqr.hpp"
#include "qcart/measurement.hpp"
#include "qcart/quantum.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace qcart {
namespace {

using Acc4 = CovarianceAccumulator<4>;

struct ShardResult {
  Acc4 acc;
  std::uint64_t episodes = 0;
  std::uint64_t inner_steps = 0;
};

ShardResult run_shard(const PotentialSpec& potential, const SimParams& params,
                      const CalibrationOptions& opt, std::uint64_t target,
                      std::uint64_t seed) {
  ShardResult out;
  Rng rng(seed);
  const GridPtr grid = make_grid(opt.grid_points, opt.grid_half_width);
  const Propagator propagator(grid, potential, params);
  const StateSpaceModel model(potential, params, opt.integrator);
  const MeasurementConfig mx{params.coupling, params.sigma_ancilla,
                             Observable::kPosition};
  const MeasurementConfig mp{params.coupling, params.sigma_ancilla,
                             Observable::kMomentum};
  const double dither = opt.dither > 0.0 ? opt.dither : params.f_max / 8.0;
  const std::uint64_t cap =
      opt.max_inner_steps > 0 ? opt.max_inner_steps : 50 * target + 100'000;

  std::optional<LqrGain> stabilizer;
  if (opt.forcing == CalibrationForcing::kDithered) {
    stabilizer = solve_gain(model.linear(),
                            weights_for(potential, Vec2::Zero(), params.mass));
  }
  std::uniform_real_distribution<double> uniform_full(-params.f_max,
                                                      params.f_max);
  std::uniform_real_distribution<double> uniform_dither(-dither, dither);
  std::vector<cplx> scratch;

  while (out.acc.count() < target && out.inner_steps < cap) {
    Wavefunction psi = init_wavepacket(grid, params, rng);
    ++out.episodes;
    Vec2 s_prev = Vec2::Zero();
    Vec2 v_prev = Vec2::Zero();
    bool have_prev = false;
    std::uint64_t t = 0;
    while (out.acc.count() < target && out.inner_steps < cap) {
      double u = 0.0;
      if (opt.forcing == CalibrationForcing::kUniform) {
        u = uniform_full(rng);
      } else {
        const Vec2 ref = have_prev ? s_prev : Vec2::Zero();
        u = std::clamp(control(*stabilizer, ref, params.f_max) +
                           uniform_dither(rng),
                       -params.f_max, params.f_max);
      }
      apply_kick(psi, -u);
      propagator.step(psi, scratch);
      ++t;
      ++out.inner_steps;
      const Vec2 s(mean_position(psi), mean_momentum(psi));
      const double x_meas = measure(psi, mx, rng).scaled;
      const double p_meas = measure(psi, mp, rng).scaled;
      const Vec2 y(x_meas, p_meas);
      if (have_prev && t > opt.burn_in + 1) {
        Eigen::Vector4d wv;
        wv << s - model.f(s_prev, u), v_prev;
        out.acc.add(wv);
      }
      s_prev = s;
      v_prev = y - s;
      have_prev = true;
      if (has_failed(psi, params.x_threshold)) break;
    }
  }
  return out;
}

}  // namespace

CalibrationResult calibrate_noise(const PotentialSpec& potential,
                                  const SimParams& params, std::uint64_t seed,
                                  const CalibrationOptions& options) {
  potential.validate();
  params.validate();
  const int shards = std::max(1, options.shards);
  std::vector<ShardResult> results(static_cast<std::size_t>(shards));
  const std::uint64_t per_shard =
      (options.n_steps + static_cast<std::uint64_t>(shards) - 1) /
      static_cast<std::uint64_t>(shards);

#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < shards; ++i) {
    results[static_cast<std::size_t>(i)] =
        run_shard(potential, params, options, per_shard,
                  mix_seed(seed, static_cast<std::uint64_t>(i)));
  }

  ShardResult merged;
  for (const auto& r : results) {
    merged.acc.merge(r.acc);
    merged.episodes += r.episodes;
    merged.inner_steps += r.inner_steps;
  }
  if (merged.acc.count() < options.min_samples) {
    throw RuntimeFault("calibration retained only " +
                       std::to_string(merged.acc.count()) + " samples");
  }
  const Eigen::Matrix4d cov = merged.acc.covariance();
  CalibrationResult out;
  out.noise.process = cov.topLeftCorner<2, 2>();
  out.noise.cross = cov.topRightCorner<2, 2>();
  out.noise.meas = cov.bottomRightCorner<2, 2>();
  out.samples = merged.acc.count();
  out.episodes = merged.episodes;
  out.inner_steps = merged.inner_steps;
  return out;
}

}  // namespace qcart
