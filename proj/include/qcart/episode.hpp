#pragma once

#include "qcart/estimators.hpp"
#include "qcart/grid.hpp"
#include "qcart/lqr.hpp"
#include "qcart/measurement.hpp"
#include "qcart/params.hpp"
#include "qcart/quantum.hpp"
#include "qcart/surrogate.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qcart {

enum class SystemKind { kQuantum, kClassical };
enum class ControllerKind { kLqr, kAgent, kRandom, kZero };
enum class EstimatorKind { kNone, kKalman, kKalmanDecorrelated, kEkf, kAgent };
enum class TerminatedBy { kThreshold, kMaxSteps, kAborted };

std::string_view to_string(SystemKind v);
std::string_view to_string(ControllerKind v);
std::string_view to_string(EstimatorKind v);
std::string_view to_string(TerminatedBy v);
SystemKind parse_system_kind(std::string_view s);
ControllerKind parse_controller_kind(std::string_view s);
EstimatorKind parse_estimator_kind(std::string_view s);

struct ControllerBinding {
  ControllerKind controller = ControllerKind::kLqr;
  EstimatorKind estimator = EstimatorKind::kNone;
  int n_meas = 1;
  std::uint64_t max_steps = 10'000;  // inner steps

  void validate() const;
};

struct LoopOptions {
  bool measure_position_first = true;
  // false: the failure condition is only evaluated after each full block.
  bool check_every_inner_step = true;
  // EKF removes the back-action correlation like the decorrelated KF.
  bool ekf_use_cross = true;
  // Filters treat the block average as one observation with covariance
  // R / n_meas; false keeps R (ablation).
  bool scale_meas_by_nmeas = true;
  // Abort (RuntimeFault) once more than this much probability sits in the
  // outer tenth of the momentum lattice; <= 0 disables the check.
  double aliasing_tolerance = 1e-3;
  WeightArgument weight_argument = WeightArgument::kPosition;
  Integrator integrator = Integrator::kStrang;
  std::size_t grid_points = Grid::kDefaultPoints;
  double grid_half_width = Grid::kDefaultHalfWidth;
  bool trace = false;
};

struct EnvConfig {
  SystemKind system = SystemKind::kQuantum;
  PotentialSpec potential = PotentialSpec::quadratic();
  SimParams params;
  ControllerBinding binding;
  std::optional<NoiseModel> noise;  // classical dynamics, and Kalman paths
  LoopOptions options;

  void validate() const;
};

/// One inner step. Expectation values are taken after both measurements.
struct TraceRecord {
  std::uint64_t t = 0;
  int outer = 0;
  int inner = 0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double x_meas = 0.0;
  double p_meas = 0.0;
  Vec2 s_hat = Vec2::Zero();  // estimate available when the force was chosen
  double force = 0.0;
};

struct EpisodeResult {
  std::uint64_t t_termination = 0;
  TerminatedBy terminated_by = TerminatedBy::kMaxSteps;
  std::uint64_t seed = 0;
  std::uint64_t controller_calls = 0;
  std::vector<TraceRecord> trace;
  std::string abort_reason;
  // Final wavefunction, kept for quantum runs with trace enabled.
  std::optional<Wavefunction> final_state;
};

/// Outcome of one block of n_meas inner steps.
struct BlockResult {
  Vec2 y_mean = Vec2::Zero();
  int steps = 0;
  bool done = false;
  TerminatedBy terminated_by = TerminatedBy::kMaxSteps;
};

/// Steppable control loop: each call to advance() holds one force for
/// n_meas inner (kick, evolve, measure x, measure p) steps, averages the
/// scaled outcomes and runs the in-process estimator, if any, once.
class Environment {
 public:
  Environment(const EnvConfig& config, std::uint64_t seed);
  ~Environment();
  Environment(Environment&&) noexcept;
  Environment& operator=(Environment&&) noexcept;

  /// Runs the first block with F = 0.
  const BlockResult& reset();
  /// Clamps `force` to [-F_max, F_max] and runs one block.
  const BlockResult& advance(double force);

  bool done() const { return last_.done; }
  std::uint64_t t() const { return t_; }
  int outer() const { return outer_; }
  const BlockResult& last_block() const { return last_; }
  double last_force() const { return force_; }
  bool has_estimator() const;
  const EstimatorState& estimate() const { return estimate_; }
  const FilterStep& last_filter_step() const { return filter_; }
  const EnvConfig& config() const { return config_; }
  const StateSpaceModel& model() const { return model_; }

  /// Current expectation values (quantum) or state (classical).
  Vec2 truth() const;
  const Wavefunction* wavefunction() const;

  /// y - C (A s_prev + B u) with the block linearization at s_prev.
  Vec2 prediction_error(const Vec2& s_prev, double u) const;

  /// Estimate the controller sees in trace records (set by the caller).
  void note_estimate(const Vec2& s_hat) { noted_estimate_ = s_hat; }
  std::vector<TraceRecord> take_trace() { return std::move(trace_); }

 private:
  struct Quantum;
  struct Classical;

  void run_block(double force);
  void update_estimator();

  EnvConfig config_;
  StateSpaceModel model_;
  Rng rng_;
  std::unique_ptr<Quantum> quantum_;
  std::unique_ptr<Classical> classical_;
  std::optional<DecorrelatedModel> decorrelated_;
  std::optional<LinearModel> block_linear_;
  std::optional<NoiseModel> block_noise_;
  EstimatorState estimate_;
  FilterStep filter_;
  BlockResult last_;
  std::uint64_t t_ = 0;
  int outer_ = 0;
  double force_ = 0.0;
  Vec2 noted_estimate_ = Vec2::Zero();
  std::vector<TraceRecord> trace_;
};

/// In-process feedback law producing the force for the next block.
class Controller {
 public:
  Controller(const EnvConfig& config, std::uint64_t seed);
  double decide(const Vec2& state);
  const std::optional<LqrGain>& gain() const { return gain_; }

 private:
  EnvConfig config_;
  StateSpaceModel model_;
  Rng rng_;
  std::optional<LqrGain> gain_;
  bool gain_fixed_ = false;
};

/// Remote or scripted agent attached to an episode.
class ExternalAgent {
 public:
  virtual ~ExternalAgent() = default;
  virtual double decide_force(std::span<const double> observation) = 0;
  virtual Vec2 estimate_delta(std::span<const double> observation) = 0;
};

/// Runs one episode. Agent bindings need `agent`; otherwise ConfigError.
/// Runtime faults abort the episode (terminated_by = kAborted).
EpisodeResult run_episode(const EnvConfig& config, std::uint64_t seed,
                          ExternalAgent* agent = nullptr);

}  // namespace qcart
