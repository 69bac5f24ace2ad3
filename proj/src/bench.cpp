#include "qcart/bench.hpp"

#include "qcart/calibration.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qcart {

using nlohmann::json;

namespace {

// Stream tag for the per-sigma calibration seeds.
constexpr std::uint64_t kCalibrationStream = 0xca11b4a7e0000000ULL;

std::string_view integrator_name(Integrator i) {
  return i == Integrator::kStrang ? "strang" : "symplectic-euler";
}

Integrator parse_integrator(std::string_view s) {
  if (s == "strang") return Integrator::kStrang;
  if (s == "symplectic-euler") return Integrator::kSymplecticEuler;
  throw ConfigError("unknown integrator '" + std::string(s) + "'");
}

std::string_view weight_argument_name(WeightArgument w) {
  return w == WeightArgument::kPosition ? "position" : "state-norm";
}

WeightArgument parse_weight_argument(std::string_view s) {
  if (s == "position") return WeightArgument::kPosition;
  if (s == "state-norm") return WeightArgument::kStateNorm;
  throw ConfigError("unknown weight_argument '" + std::string(s) + "'");
}

// Typed readers that reject wrong JSON types with a ConfigError naming the key.
class Reader {
 public:
  explicit Reader(const json& j) : j_(j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }

  bool has(const char* key) {
    used_.insert(key);
    return j_.contains(key);
  }

  double number(const char* key, double fallback) {
    if (!has(key)) return fallback;
    return as_number(j_.at(key), key);
  }

  std::uint64_t count(const char* key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      return v.get<std::uint64_t>();
    }
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  }

  bool flag(const char* key, bool fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) {
      throw ConfigError(std::string("'") + key + "' must be a boolean");
    }
    return j_.at(key).get<bool>();
  }

  std::string text(const char* key, std::string fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) {
      throw ConfigError(std::string("'") + key + "' must be a string");
    }
    return j_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) return {as_number(v, key)};
    std::vector<double> out;
    for (const json& e : v) out.push_back(as_number(e, key));
    return out;
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) {
        throw ConfigError("unknown config key '" + it.key() + "'");
      }
    }
  }

 private:
  static double as_number(const json& v, const char* key) {
    if (!v.is_number()) {
      throw ConfigError(std::string("'") + key + "' must be a number");
    }
    return v.get<double>();
  }

  const json& j_;
  std::set<std::string, std::less<>> used_;
};

}  // namespace

void BenchmarkConfig::validate() const {
  potential.validate();
  params.validate();
  binding.validate();
  if (n_meas.empty() || sigma_ancilla.empty() || sigma_meas.empty()) {
    throw ConfigError("sweep axes must not be empty");
  }
  for (int n : n_meas) {
    if (n < 1) throw ConfigError("n_meas entries must be >= 1");
  }
  for (double s : sigma_ancilla) {
    if (!(std::isfinite(s) && s > 0.0)) {
      throw ConfigError("sigma_ancilla entries must be positive");
    }
  }
  for (double s : sigma_meas) {
    if (!(std::isfinite(s) && s >= 0.0)) {
      throw ConfigError("sigma_meas entries must be >= 0");
    }
  }
  if (!(std::isfinite(sigma_dyn) && sigma_dyn >= 0.0)) {
    throw ConfigError("sigma_dyn must be >= 0");
  }
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (options.grid_points < 16) throw ConfigError("grid_points must be >= 16");
  if (binding.controller == ControllerKind::kAgent ||
      binding.estimator == EstimatorKind::kAgent) {
    throw ConfigError("agent bindings are only available through 'serve'");
  }
}

json BenchmarkConfig::to_json() const {
  json j;
  j["system"] = to_string(system);
  j["potential"] = to_string(potential.kind);
  if (potential.kind == PotentialKind::kCosine) {
    j["k1"] = potential.k1;
    j["k2"] = potential.k2;
  } else {
    j["k"] = potential.k;
  }
  j["controller"] = to_string(binding.controller);
  j["estimator"] = to_string(binding.estimator);
  j["max_steps"] = binding.max_steps;
  j["n_meas"] = n_meas;
  j["sigma_ancilla"] = sigma_ancilla;
  j["sigma_meas"] = sigma_meas;
  j["sigma_dyn"] = sigma_dyn;
  j["episodes"] = episodes;
  j["seed"] = seed;
  j["calibration_steps"] = calibration_steps;
  j["noise_file"] = noise_file;
  j["histogram_steps"] = histogram_steps;
  j["burn_in"] = burn_in;
  j["agent_mode"] = to_string(agent_mode);
  j["obs_source"] = to_string(obs_source);
  j["dt"] = params.dt;
  j["mass"] = params.mass;
  j["coupling"] = params.coupling;
  j["sigma_system"] = params.sigma_system;
  j["sigma_p_init"] = params.sigma_p_init;
  j["x_threshold"] = params.x_threshold;
  j["f_max"] = params.f_max;
  j["integrator"] = integrator_name(options.integrator);
  j["grid_points"] = options.grid_points;
  j["grid_half_width"] = options.grid_half_width;
  j["check_every_inner_step"] = options.check_every_inner_step;
  j["scale_meas_by_nmeas"] = options.scale_meas_by_nmeas;
  j["ekf_use_cross"] = options.ekf_use_cross;
  j["measure_position_first"] = options.measure_position_first;
  j["weight_argument"] = weight_argument_name(options.weight_argument);
  j["aliasing_tolerance"] = options.aliasing_tolerance;
  return j;
}

BenchmarkConfig BenchmarkConfig::from_json(const json& in) {
  const json& j = in.is_object() && in.contains("config") && in.contains("config_hash")
                      ? in.at("config")
                      : in;
  Reader r(j);
  BenchmarkConfig c;
  c.system = parse_system_kind(r.text("system", "quantum"));
  const PotentialKind kind = parse_potential_kind(r.text("potential", "quadratic"));
  if (kind == PotentialKind::kCosine) {
    if (!r.has("k1") || !r.has("k2")) {
      throw ConfigError("cosine potential requires k1 and k2");
    }
    c.potential = PotentialSpec::cosine(r.number("k1", 0.0), r.number("k2", 0.0));
    if (r.has("k")) throw ConfigError("'k' does not apply to the cosine potential");
  } else {
    if (r.has("k1") || r.has("k2")) {
      throw ConfigError("'k1'/'k2' only apply to the cosine potential");
    }
    c.potential = kind == PotentialKind::kQuadratic
                      ? PotentialSpec::quadratic(r.number("k", std::numbers::pi))
                      : PotentialSpec::quartic(r.number("k", std::numbers::pi / 100.0));
  }
  c.binding.controller = parse_controller_kind(r.text("controller", "lqr"));
  c.binding.estimator = parse_estimator_kind(r.text("estimator", "none"));
  c.binding.max_steps = r.count("max_steps", c.binding.max_steps);
  c.n_meas.clear();
  for (double n : r.numbers("n_meas", {1.0})) {
    if (n != std::floor(n) || n < 1 || n > 1e6) {
      throw ConfigError("n_meas entries must be positive integers");
    }
    c.n_meas.push_back(static_cast<int>(n));
  }
  c.sigma_ancilla = r.numbers("sigma_ancilla", c.sigma_ancilla);
  c.sigma_meas = r.numbers("sigma_meas", c.sigma_meas);
  c.sigma_dyn = r.number("sigma_dyn", c.sigma_dyn);
  c.episodes = r.count("episodes", c.episodes);
  c.seed = r.count("seed", c.seed);
  c.calibration_steps = r.count("calibration_steps", c.calibration_steps);
  c.noise_file = r.text("noise_file", "");
  c.histogram_steps = r.count("histogram_steps", c.histogram_steps);
  c.burn_in = r.count("burn_in", c.burn_in);
  c.agent_mode = parse_agent_mode(r.text("agent_mode", "controller"));
  c.obs_source = parse_obs_source(r.text("obs_source", "raw"));
  c.params.dt = r.number("dt", c.params.dt);
  c.params.mass = r.number("mass", c.params.mass);
  c.params.coupling = r.number("coupling", c.params.coupling);
  c.params.sigma_system = r.number("sigma_system", c.params.sigma_system);
  c.params.sigma_p_init = r.number("sigma_p_init", c.params.sigma_p_init);
  c.params.x_threshold = r.number("x_threshold", c.params.x_threshold);
  c.params.f_max = r.number("f_max", c.params.f_max);
  c.options.integrator = parse_integrator(r.text("integrator", "strang"));
  c.options.grid_points = r.count("grid_points", c.options.grid_points);
  c.options.grid_half_width = r.number("grid_half_width", c.options.grid_half_width);
  c.options.check_every_inner_step =
      r.flag("check_every_inner_step", c.options.check_every_inner_step);
  c.options.scale_meas_by_nmeas =
      r.flag("scale_meas_by_nmeas", c.options.scale_meas_by_nmeas);
  c.options.ekf_use_cross = r.flag("ekf_use_cross", c.options.ekf_use_cross);
  c.options.measure_position_first =
      r.flag("measure_position_first", c.options.measure_position_first);
  c.options.weight_argument =
      parse_weight_argument(r.text("weight_argument", "position"));
  c.options.aliasing_tolerance =
      r.number("aliasing_tolerance", c.options.aliasing_tolerance);
  r.reject_unknown();
  c.params.sigma_ancilla = c.sigma_ancilla.front();
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const BenchmarkConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.to_json().dump())));
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

EnvConfig cell_config(const BenchmarkConfig& config, int n_meas,
                      double sigma_ancilla, double sigma_meas,
                      const std::optional<NoiseModel>& noise) {
  EnvConfig c;
  c.system = config.system;
  c.potential = config.potential;
  c.params = config.params;
  c.params.sigma_ancilla = sigma_ancilla;
  c.binding = config.binding;
  c.binding.n_meas = n_meas;
  c.options = config.options;
  if (config.system == SystemKind::kClassical) {
    c.noise = NoiseModel::classical(sigma_meas, config.sigma_dyn,
                                    config.params.coupling);
  } else {
    c.noise = noise;
  }
  return c;
}

bool needs_quantum_noise(const BenchmarkConfig& c) {
  const EstimatorKind e = c.binding.estimator;
  return c.system == SystemKind::kQuantum &&
         (e == EstimatorKind::kKalman || e == EstimatorKind::kKalmanDecorrelated ||
          e == EstimatorKind::kEkf);
}

std::optional<NoiseModel> quantum_noise(const BenchmarkConfig& c,
                                        double sigma_ancilla,
                                        std::size_t index) {
  if (!needs_quantum_noise(c)) return std::nullopt;
  if (!c.noise_file.empty()) {
    const NoiseArtifact a = read_noise_artifact(c.noise_file);
    if (a.potential.kind != c.potential.kind ||
        std::abs(a.params.sigma_ancilla - sigma_ancilla) > 1e-12 ||
        std::abs(a.params.coupling - c.params.coupling) > 1e-12) {
      throw ConfigError("noise file does not match the potential, coupling or "
                        "sigma_ancilla of the run");
    }
    return a.noise;
  }
  SimParams p = c.params;
  p.sigma_ancilla = sigma_ancilla;
  CalibrationOptions o;
  o.n_steps = c.calibration_steps;
  o.integrator = c.options.integrator;
  o.grid_points = c.options.grid_points;
  o.grid_half_width = c.options.grid_half_width;
  return calibrate_noise(c.potential, p,
                         mix_seed(c.seed ^ kCalibrationStream, index), o)
      .noise;
}

std::vector<SweepCell> run_sweep(const BenchmarkConfig& config) {
  config.validate();
  std::vector<std::optional<NoiseModel>> noise;
  for (std::size_t i = 0; i < config.sigma_ancilla.size(); ++i) {
    noise.push_back(quantum_noise(config, config.sigma_ancilla[i], i));
  }
  std::vector<SweepCell> cells;
  for (int n : config.n_meas) {
    for (std::size_t i = 0; i < config.sigma_ancilla.size(); ++i) {
      for (double sm : config.sigma_meas) {
        SweepCell cell{n, config.sigma_ancilla[i], sm, {}};
        const EnvConfig env = cell_config(config, n, cell.sigma_ancilla, sm, noise[i]);
        cell.summary = run_batch(env, config.episodes, config.seed);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "n_meas,sigma_ancilla,sigma_meas,episodes,mean,median,std_error,"
         "censored_fraction,aborted\n";
  for (const SweepCell& c : cells) {
    const BatchSummary& s = c.summary;
    out << c.n_meas << ',' << format_double(c.sigma_ancilla) << ','
        << format_double(c.sigma_meas) << ',' << s.episodes << ','
        << format_double(s.mean) << ',' << format_double(s.median) << ','
        << format_double(s.std_error) << ','
        << format_double(s.censored_fraction) << ',' << s.aborted << '\n';
  }
  return out.str();
}

std::vector<RatioCell> ratio_cells(const std::vector<SweepCell>& cells,
                                   const std::vector<SweepCell>& baseline) {
  if (cells.size() != baseline.size()) {
    throw ConfigError("ratio: configurations have different sweep axes");
  }
  std::vector<RatioCell> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& a = cells[i];
    const SweepCell& b = baseline[i];
    if (a.n_meas != b.n_meas || a.sigma_ancilla != b.sigma_ancilla ||
        a.sigma_meas != b.sigma_meas) {
      throw ConfigError("ratio: configurations have different sweep axes");
    }
    RatioCell r;
    r.n_meas = a.n_meas;
    r.sigma_ancilla = a.sigma_ancilla;
    r.sigma_meas = a.sigma_meas;
    r.mean = a.summary.mean;
    r.baseline_mean = b.summary.mean;
    r.available = std::isfinite(r.mean) && std::isfinite(r.baseline_mean) &&
                  r.baseline_mean != 0.0;
    if (r.available) {
      r.ratio = r.mean / r.baseline_mean;
      const double ra = r.mean != 0.0 ? a.summary.std_error / r.mean : 0.0;
      const double rb = b.summary.std_error / r.baseline_mean;
      r.std_error = std::abs(r.ratio) * std::sqrt(ra * ra + rb * rb);
    } else {
      r.ratio = r.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(r);
  }
  return out;
}

std::string ratio_csv(const std::vector<RatioCell>& cells) {
  std::ostringstream out;
  out << "n_meas,sigma_ancilla,sigma_meas,mean,baseline_mean,ratio,std_error,"
         "available\n";
  for (const RatioCell& c : cells) {
    out << c.n_meas << ',' << format_double(c.sigma_ancilla) << ','
        << format_double(c.sigma_meas) << ',' << format_double(c.mean) << ','
        << format_double(c.baseline_mean) << ',';
    if (c.available) {
      out << format_double(c.ratio) << ',' << format_double(c.std_error) << ",1\n";
    } else {
      out << ",,0\n";
    }
  }
  return out.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "center,mass\n";
  const double total = static_cast<double>(h.total());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double mass = total > 0 ? static_cast<double>(h.counts[i]) / total : 0.0;
    out << format_double(h.center(i)) << ',' << format_double(mass) << '\n';
  }
  return out.str();
}

json manifest(std::string_view command, const BenchmarkConfig& config,
              const std::vector<std::string>& outputs, const json& extra) {
  json m;
  m["command"] = command;
  m["config"] = config.to_json();
  m["config_hash"] = config_hash(config);
  m["seed"] = config.seed;
  m["outputs"] = outputs;
  m["protocol_version"] = kProtocolVersion;
  if (!extra.is_null()) m["results"] = extra;
  return m;
}

void check_writable(const std::string& path) {
  std::ofstream f(path, std::ios::app);
  if (!f) throw ConfigError("cannot write to '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw RuntimeFault("cannot write to '" + path + "'");
  f << text;
  if (!f) throw RuntimeFault("write failed for '" + path + "'");
}

}  // namespace qcart
