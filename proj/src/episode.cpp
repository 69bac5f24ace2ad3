#include "qcart/episode.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace qcart {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<std::string_view, E> (&table)[N],
             std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::pair<std::string_view, SystemKind> kSystems[] = {
    {"quantum", SystemKind::kQuantum}, {"classical", SystemKind::kClassical}};
constexpr std::pair<std::string_view, ControllerKind> kControllers[] = {
    {"lqr", ControllerKind::kLqr},
    {"agent", ControllerKind::kAgent},
    {"random", ControllerKind::kRandom},
    {"zero", ControllerKind::kZero}};
constexpr std::pair<std::string_view, EstimatorKind> kEstimators[] = {
    {"none", EstimatorKind::kNone},
    {"kf", EstimatorKind::kKalman},
    {"kf-decorr", EstimatorKind::kKalmanDecorrelated},
    {"ekf", EstimatorKind::kEkf},
    {"agent", EstimatorKind::kAgent}};

template <class E, std::size_t N>
std::string_view name_of(E v, const std::pair<std::string_view, E> (&table)[N]) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

// Largest tolerated single-cell probability at the periodic boundary.
constexpr double kBoundaryLeakage = 1e-8;

bool builtin_filter(EstimatorKind e) {
  return e == EstimatorKind::kKalman ||
         e == EstimatorKind::kKalmanDecorrelated || e == EstimatorKind::kEkf;
}

}  // namespace

std::string_view to_string(SystemKind v) { return name_of(v, kSystems); }
std::string_view to_string(ControllerKind v) { return name_of(v, kControllers); }
std::string_view to_string(EstimatorKind v) { return name_of(v, kEstimators); }
std::string_view to_string(TerminatedBy v) {
  switch (v) {
    case TerminatedBy::kThreshold: return "threshold";
    case TerminatedBy::kMaxSteps: return "max_steps";
    case TerminatedBy::kAborted: return "aborted";
  }
  return "?";
}
SystemKind parse_system_kind(std::string_view s) {
  return parse_enum(s, kSystems, "system");
}
ControllerKind parse_controller_kind(std::string_view s) {
  return parse_enum(s, kControllers, "controller");
}
EstimatorKind parse_estimator_kind(std::string_view s) {
  return parse_enum(s, kEstimators, "estimator");
}

void ControllerBinding::validate() const {
  if (n_meas < 1) throw ConfigError("n_meas must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

void EnvConfig::validate() const {
  potential.validate();
  params.validate();
  binding.validate();
  if (noise) noise->validate();
  if (system == SystemKind::kClassical && !noise) {
    throw ConfigError("classical system requires a noise model");
  }
  if (builtin_filter(binding.estimator) && !noise) {
    throw ConfigError("estimator '" + std::string(to_string(binding.estimator)) +
                      "' requires a noise model");
  }
}

struct Environment::Quantum {
  GridPtr grid;
  Propagator propagator;
  Wavefunction psi;
  MeasurementConfig mx;
  MeasurementConfig mp;
  std::vector<cplx> scratch;

  Quantum(const EnvConfig& c, Rng& rng)
      : grid(make_grid(c.options.grid_points, c.options.grid_half_width)),
        propagator(grid, c.potential, c.params),
        psi(init_wavepacket(grid, c.params, rng)) {
    mx = {c.params.coupling, c.params.sigma_ancilla, Observable::kPosition};
    mp = {c.params.coupling, c.params.sigma_ancilla, Observable::kMomentum};
  }
};

struct Environment::Classical {
  JointNoiseSampler sampler;
  ClassicalState state;

  Classical(const EnvConfig& c, Rng& rng)
      : sampler(*c.noise), state(init_classical(c.params, rng)) {}
};

Environment::Environment(const EnvConfig& config, std::uint64_t seed)
    : config_(config),
      model_(config.potential, config.params, config.options.integrator),
      rng_(mix_seed(seed, 0)) {
  config_.validate();
  if (config_.system == SystemKind::kQuantum) {
    quantum_ = std::make_unique<Quantum>(config_, rng_);
  } else {
    classical_ = std::make_unique<Classical>(config_, rng_);
  }
  estimate_ = initial_estimate(config_.params);
  filter_.state = estimate_;

  const EstimatorKind e = config_.binding.estimator;
  if (e == EstimatorKind::kKalman || e == EstimatorKind::kKalmanDecorrelated) {
    const int n = config_.binding.n_meas;
    block_linear_ = model_.block(Vec2::Zero(), 0.0, n);
    NoiseModel bn = config_.noise->for_block(model_.linear().A, n);
    if (!config_.options.scale_meas_by_nmeas) bn.meas = config_.noise->meas;
    block_noise_ = bn;
    if (e == EstimatorKind::kKalmanDecorrelated) {
      decorrelated_ = decorrelate(*block_linear_, bn);
    }
  }
}

Environment::~Environment() = default;
Environment::Environment(Environment&&) noexcept = default;
Environment& Environment::operator=(Environment&&) noexcept = default;

bool Environment::has_estimator() const {
  return builtin_filter(config_.binding.estimator);
}

Vec2 Environment::truth() const {
  if (quantum_) {
    return {mean_position(quantum_->psi), mean_momentum(quantum_->psi)};
  }
  return classical_->state.s;
}

const Wavefunction* Environment::wavefunction() const {
  return quantum_ ? &quantum_->psi : nullptr;
}

Vec2 Environment::prediction_error(const Vec2& s_prev, double u) const {
  const LinearModel lin = model_.block(s_prev, u, config_.binding.n_meas);
  return last_.y_mean - lin.C * (lin.A * s_prev + lin.B * u);
}

const BlockResult& Environment::reset() {
  if (outer_ != 0) throw ConfigError("environment already reset");
  run_block(0.0);
  return last_;
}

const BlockResult& Environment::advance(double force) {
  if (outer_ == 0) throw ConfigError("advance() before reset()");
  if (last_.done) throw ConfigError("advance() after termination");
  if (!std::isfinite(force)) throw ConfigError("force is not finite");
  const double f_max = config_.params.f_max;
  run_block(std::clamp(force, -f_max, f_max));
  return last_;
}

void Environment::run_block(double force) {
  force_ = force;
  const int n = config_.binding.n_meas;
  const bool every = config_.options.check_every_inner_step;
  const double x_th = config_.params.x_threshold;
  BlockResult block;
  Vec2 sum = Vec2::Zero();
  bool failed = false;

  for (int i = 0; i < n; ++i) {
    Vec2 y;
    if (quantum_) {
      Quantum& q = *quantum_;
      apply_kick(q.psi, -force);
      q.propagator.step(q.psi, q.scratch);
      if (config_.options.aliasing_tolerance > 0.0 &&
          momentum_edge_weight(q.psi) > config_.options.aliasing_tolerance) {
        throw RuntimeFault(
            "momentum reached the edge of the grid lattice; increase grid_points");
      }
      if (q.psi.boundary_weight() > kBoundaryLeakage) {
        throw RuntimeFault("probability reached the spatial grid boundary");
      }
      const MeasurementConfig& first =
          config_.options.measure_position_first ? q.mx : q.mp;
      const MeasurementConfig& second =
          config_.options.measure_position_first ? q.mp : q.mx;
      const double a = measure(q.psi, first, rng_).scaled;
      const double b = measure(q.psi, second, rng_).scaled;
      y = config_.options.measure_position_first ? Vec2(a, b) : Vec2(b, a);
    } else {
      Classical& c = *classical_;
      const ClassicalStep st = step(c.state, force, model_, c.sampler, rng_);
      c.state = st.next;
      y = st.y;
    }
    ++t_;
    sum += y;
    ++block.steps;

    if (config_.options.trace) {
      TraceRecord r;
      r.t = t_;
      r.outer = outer_;
      r.inner = i;
      const Vec2 s = truth();
      r.mean_x = s(0);
      r.mean_p = s(1);
      r.x_meas = y(0);
      r.p_meas = y(1);
      r.s_hat = noted_estimate_;
      r.force = force;
      trace_.push_back(r);
    }

    if (every || i + 1 == n) {
      failed = quantum_ ? has_failed(quantum_->psi, x_th)
                        : std::abs(classical_->state.x()) > x_th;
      if (failed) break;
    }
    if (t_ >= config_.binding.max_steps) break;
  }

  block.y_mean = sum / static_cast<double>(block.steps);
  if (failed) {
    block.done = true;
    block.terminated_by = TerminatedBy::kThreshold;
  } else if (t_ >= config_.binding.max_steps) {
    block.done = true;
    block.terminated_by = TerminatedBy::kMaxSteps;
  }
  last_ = block;
  ++outer_;
  if (!block.done) update_estimator();
}

void Environment::update_estimator() {
  const Vec2& y = last_.y_mean;
  switch (config_.binding.estimator) {
    case EstimatorKind::kKalman:
      filter_ = kf_step(estimate_, y, force_, *block_linear_, *block_noise_);
      break;
    case EstimatorKind::kKalmanDecorrelated:
      filter_ = kf_step(estimate_, y, force_, *decorrelated_);
      break;
    case EstimatorKind::kEkf:
    {
      // ekf_step divides R by n_meas itself.
      NoiseModel noise = *config_.noise;
      if (!config_.options.scale_meas_by_nmeas) {
        noise.meas *= static_cast<double>(config_.binding.n_meas);
      }
      filter_ = ekf_step(estimate_, y, force_, model_, noise,
                         config_.binding.n_meas, config_.options.ekf_use_cross);
    }
      break;
    default:
      return;
  }
  estimate_ = filter_.state;
}

Controller::Controller(const EnvConfig& config, std::uint64_t seed)
    : config_(config),
      model_(config.potential, config.params, config.options.integrator),
      rng_(mix_seed(seed, 1)) {}

double Controller::decide(const Vec2& state) {
  const double f_max = config_.params.f_max;
  switch (config_.binding.controller) {
    case ControllerKind::kZero:
      return 0.0;
    case ControllerKind::kRandom:
      return std::uniform_real_distribution<double>(-f_max, f_max)(rng_);
    case ControllerKind::kLqr:
      break;
    case ControllerKind::kAgent:
      throw ConfigError("agent controller is driven externally");
  }
  if (!gain_fixed_) {
    const int n = config_.binding.n_meas;
    const LqrWeights w = weights_for(config_.potential, state,
                                     config_.params.mass,
                                     config_.options.weight_argument);
    const bool linear = config_.potential.is_linear();
    const LinearModel lin = model_.block(linear ? Vec2::Zero() : state, 0.0, n);
    try {
      const std::optional<Mat2> warm =
          gain_ ? std::optional<Mat2>(gain_->P) : std::nullopt;
      gain_ = solve_gain(lin, w, warm);
    } catch (const GainFault&) {
      if (!gain_) throw;
    }
    gain_fixed_ = linear;
  }
  return control(*gain_, state, f_max);
}

namespace {

std::vector<double> controller_observation(const Environment& env,
                                           const Vec2& s_hat) {
  const Vec2& y = env.last_block().y_mean;
  std::vector<double> obs{y(0), y(1)};
  if (env.has_estimator()) {
    obs.push_back(s_hat(0));
    obs.push_back(s_hat(1));
  }
  return obs;
}

}  // namespace

EpisodeResult run_episode(const EnvConfig& config, std::uint64_t seed,
                          ExternalAgent* agent) {
  const ControllerBinding& b = config.binding;
  const bool needs_agent = b.controller == ControllerKind::kAgent ||
                           b.estimator == EstimatorKind::kAgent;
  if (needs_agent && agent == nullptr) {
    throw ConfigError("agent binding requires an attached agent session");
  }

  EpisodeResult result;
  result.seed = seed;
  Environment env(config, seed);
  std::optional<Controller> controller;
  if (b.controller != ControllerKind::kAgent) controller.emplace(config, seed);

  Vec2 agent_estimate = Vec2::Zero();
  try {
    env.reset();
    while (!env.done()) {
      Vec2 s_hat;
      if (b.estimator == EstimatorKind::kAgent) {
        const Vec2& y = env.last_block().y_mean;
        const double obs[] = {agent_estimate(0), agent_estimate(1), y(0), y(1),
                              env.last_force()};
        agent_estimate += agent->estimate_delta(obs);
        s_hat = agent_estimate;
      } else if (env.has_estimator()) {
        s_hat = env.estimate().mean;
      } else {
        s_hat = env.last_block().y_mean;
      }
      double force;
      if (controller) {
        force = controller->decide(s_hat);
      } else {
        const std::vector<double> obs = controller_observation(env, s_hat);
        force = agent->decide_force(obs);
      }
      ++result.controller_calls;
      env.note_estimate(s_hat);
      env.advance(force);
    }
    result.t_termination = env.t();
    result.terminated_by = env.last_block().terminated_by;
  } catch (const RuntimeFault& e) {
    result.t_termination = env.t();
    result.terminated_by = TerminatedBy::kAborted;
    result.abort_reason = e.what();
  }
  if (config.options.trace) {
    result.trace = env.take_trace();
    if (const Wavefunction* psi = env.wavefunction()) result.final_state = *psi;
  }
  return result;
}

}  // namespace qcart
