// Command-line front end: sweep, ratio, calibrate, histogram, serve.
#include "qcart/bench.hpp"
#include "qcart/calibration.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <type_traits>

namespace {

using nlohmann::json;
using namespace qcart;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Flags shared by every subcommand; each maps onto a config-file key and is
// only applied when given on the command line.
struct CommonFlags {
  std::string config;
  std::string system, potential, controller, estimator, integrator, noise_file;
  double k = 0, k1 = 0, k2 = 0, sigma_dyn = 0;
  std::vector<int> n_meas;
  std::vector<double> sigma_ancilla, sigma_meas;
  std::uint64_t episodes = 0, seed = 0, max_steps = 0, calibration_steps = 0;
  std::size_t grid_points = 0;
  std::string out;
  std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> setters;

  template <class T>
  void add(CLI::App* app, const std::string& flag, T& target, const char* key,
           const std::string& help) {
    CLI::Option* opt = app->add_option(flag, target, help);
    if constexpr (!std::is_same_v<T, std::string> &&
                  requires { target.push_back(target.front()); }) {
      opt->delimiter(',');
    }
    setters.emplace_back(opt, [&target, key](json& j) { j[key] = target; });
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file or run manifest");
    add(app, "--system", system, "system", "quantum | classical");
    add(app, "--potential", potential, "potential", "quadratic | cosine | quartic");
    add(app, "--k", k, "k", "quadratic/quartic constant");
    add(app, "--k1", k1, "k1", "cosine amplitude (required for cosine)");
    add(app, "--k2", k2, "k2", "cosine length scale (required for cosine)");
    add(app, "--controller", controller, "controller", "lqr | random | zero");
    add(app, "--estimator", estimator, "estimator", "none | kf | kf-decorr | ekf");
    add(app, "--nmeas", n_meas, "n_meas", "measurements per decision (list)");
    add(app, "--sigma-ancilla", sigma_ancilla, "sigma_ancilla", "pointer width (list)");
    add(app, "--sigma-meas", sigma_meas, "sigma_meas",
        "classical measurement noise, pointer scale (list)");
    add(app, "--sigma-dyn", sigma_dyn, "sigma_dyn", "classical process noise");
    add(app, "--episodes", episodes, "episodes", "episodes per cell");
    add(app, "--seed", seed, "seed", "master seed");
    add(app, "--max-steps", max_steps, "max_steps", "inner-step cap per episode");
    add(app, "--calibration-steps", calibration_steps, "calibration_steps",
        "retained calibration steps");
    add(app, "--noise", noise_file, "noise_file", "calibrated noise artifact");
    add(app, "--integrator", integrator, "integrator", "strang | symplectic-euler");
    add(app, "--grid-points", grid_points, "grid_points", "spatial grid size");
    app->add_option("--out", out, "output path");
  }

  json merged() const {
    json j = json::object();
    if (!config.empty()) {
      std::ifstream f(config);
      if (!f) throw ConfigError("cannot read config '" + config + "'");
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        throw ConfigError("config '" + config + "': " + e.what());
      }
      if (j.is_object() && j.contains("config") && j.contains("config_hash")) {
        j = j["config"];
      }
      if (!j.is_object()) throw ConfigError("config must be a JSON object");
    }
    for (const auto& [opt, set] : setters) {
      if (opt->count() > 0) set(j);
    }
    return j;
  }

  BenchmarkConfig load() const { return BenchmarkConfig::from_json(merged()); }
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

void write_manifest(const std::string& out, const json& m) {
  if (!out.empty()) write_text(out + ".manifest.json", m.dump(2) + "\n");
}

int run_sweep_cmd(const CommonFlags& f) {
  const BenchmarkConfig c = f.load();
  c.validate();
  if (!f.out.empty()) check_writable(f.out);
  const auto cells = run_sweep(c);
  emit(f.out, sweep_csv(cells));
  write_manifest(f.out, manifest("sweep", c, {f.out}));
  return 0;
}

int run_ratio_cmd(const CommonFlags& f, const std::string& baseline_file,
                  const std::string& base_controller,
                  const std::string& base_estimator) {
  const json main = f.merged();
  json base;
  if (!baseline_file.empty()) {
    std::ifstream in(baseline_file);
    if (!in) throw ConfigError("cannot read baseline '" + baseline_file + "'");
    try {
      base = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("baseline: ") + e.what());
    }
  } else {
    base = main;
    base["controller"] = base_controller;
    base["estimator"] = base_estimator;
  }
  const BenchmarkConfig a = BenchmarkConfig::from_json(main);
  const BenchmarkConfig b = BenchmarkConfig::from_json(base);
  a.validate();
  b.validate();
  if (a.n_meas != b.n_meas || a.sigma_ancilla != b.sigma_ancilla ||
      a.sigma_meas != b.sigma_meas) {
    throw ConfigError("ratio: configurations have different sweep axes");
  }
  if (!f.out.empty()) check_writable(f.out);
  const auto cells = ratio_cells(run_sweep(a), run_sweep(b));
  emit(f.out, ratio_csv(cells));
  json extra;
  extra["baseline_config"] = b.to_json();
  extra["baseline_config_hash"] = config_hash(b);
  write_manifest(f.out, manifest("ratio", a, {f.out}, extra));
  return 0;
}

int run_calibrate_cmd(const CommonFlags& f, const std::string& forcing) {
  BenchmarkConfig c = f.load();
  c.validate();
  if (!f.out.empty()) check_writable(f.out);
  CalibrationOptions o;
  o.n_steps = c.calibration_steps;
  o.integrator = c.options.integrator;
  o.grid_points = c.options.grid_points;
  o.grid_half_width = c.options.grid_half_width;
  if (forcing == "uniform") {
    o.forcing = CalibrationForcing::kUniform;
  } else if (forcing != "dithered") {
    throw ConfigError("unknown forcing '" + forcing + "'");
  }
  const CalibrationResult r = calibrate_noise(c.potential, c.params, c.seed, o);
  NoiseArtifact a;
  a.potential = c.potential;
  a.params = c.params;
  a.integrator = c.options.integrator;
  a.noise = r.noise;
  a.model = StateSpaceModel(c.potential, c.params, c.options.integrator).linear();
  a.seed = c.seed;
  a.samples = r.samples;
  emit(f.out, format_noise_artifact(a));
  json extra;
  extra["forcing"] = forcing;
  extra["samples"] = r.samples;
  extra["episodes"] = r.episodes;
  write_manifest(f.out, manifest("calibrate", c, {f.out}, extra));
  return 0;
}

int run_histogram_cmd(const CommonFlags& f, std::uint64_t steps,
                      std::uint64_t burn_in, bool steps_given, bool burn_given) {
  json j = f.merged();
  if (steps_given) j["histogram_steps"] = steps;
  if (burn_given) j["burn_in"] = burn_in;
  const BenchmarkConfig c = BenchmarkConfig::from_json(j);
  c.validate();
  if (f.out.empty()) throw ConfigError("histogram needs --out PREFIX");
  const std::string xs = f.out + ".x.csv";
  const std::string ps = f.out + ".p.csv";
  check_writable(xs);
  check_writable(ps);
  const std::optional<NoiseModel> noise =
      quantum_noise(c, c.sigma_ancilla.front(), 0);
  const EnvConfig env = cell_config(c, c.n_meas.front(), c.sigma_ancilla.front(),
                                    c.sigma_meas.front(), noise);
  HistogramOptions ho;
  ho.samples = c.histogram_steps;
  ho.burn_in = c.burn_in;
  const StateHistograms h = collect_histograms(env, c.seed, ho);
  write_text(xs, histogram_csv(h.x));
  write_text(ps, histogram_csv(h.p));
  json extra;
  extra["episodes"] = h.episodes;
  extra["retained"] = h.x_samples.size();
  extra["x"] = {{"mean", h.x_stats.mean}, {"skewness", h.x_stats.skewness},
                {"iqr", h.x_stats.iqr}};
  extra["p"] = {{"mean", h.p_stats.mean}, {"skewness", h.p_stats.skewness},
                {"iqr", h.p_stats.iqr}};
  write_text(f.out + ".manifest.json",
             manifest("histogram", c, {xs, ps}, extra).dump(2) + "\n");
  return 0;
}

int run_serve_cmd(const CommonFlags& f, bool use_stdio, int port,
                  const std::string& mode, const std::string& obs_source,
                  int max_connections, bool mode_given, bool obs_given) {
  json j = f.merged();
  if (mode_given) j["agent_mode"] = mode;
  if (obs_given) j["obs_source"] = obs_source;
  BenchmarkConfig c = BenchmarkConfig::from_json(j);
  if (c.agent_mode == AgentMode::kEstimator && !j.contains("controller")) {
    c.binding.controller = ControllerKind::kRandom;
  }
  c.validate();
  if (use_stdio == (port > 0)) throw ConfigError("serve needs exactly one of --stdio or --port");
  const std::optional<NoiseModel> noise =
      quantum_noise(c, c.sigma_ancilla.front(), 0);
  SessionConfig s;
  s.env = cell_config(c, c.n_meas.front(), c.sigma_ancilla.front(),
                      c.sigma_meas.front(), noise);
  s.mode = c.agent_mode;
  s.obs_source = c.obs_source;
  s.master_seed = c.seed;
  s.validate();
  if (use_stdio) {
    const std::uint64_t aborted = serve_stream(s, std::cin, std::cout);
    if (aborted > 0) {
      std::cerr << "qcart: " << aborted << " episode(s) left unfinished\n";
    }
  } else {
    serve_tcp(s, port, max_connections);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum cartpole benchmark engine"};
  app.require_subcommand(1);

  CommonFlags sweep_f, ratio_f, cal_f, hist_f, serve_f;
  auto* sweep = app.add_subcommand("sweep", "mean termination time per sweep cell");
  sweep_f.attach(sweep);

  auto* ratio = app.add_subcommand("ratio", "per-cell ratio against a baseline binding");
  ratio_f.attach(ratio);
  std::string baseline_file, base_controller = "lqr", base_estimator = "kf-decorr";
  ratio->add_option("--baseline", baseline_file, "baseline config file");
  ratio->add_option("--baseline-controller", base_controller, "baseline controller when no --baseline file");
  ratio->add_option("--baseline-estimator", base_estimator, "baseline estimator when no --baseline file");

  auto* cal = app.add_subcommand("calibrate", "estimate the surrogate noise model");
  cal_f.attach(cal);
  std::string forcing = "dithered";
  std::uint64_t cal_steps = 0;
  auto* cal_steps_opt = cal->add_option("--steps", cal_steps, "retained samples");
  cal->add_option("--forcing", forcing, "dithered | uniform");

  auto* hist = app.add_subcommand("histogram", "state histograms of the controlled loop");
  hist_f.attach(hist);
  std::uint64_t hist_steps = 0, burn_in = 0;
  auto* hist_steps_opt = hist->add_option("--steps", hist_steps, "retained steps");
  auto* burn_opt = hist->add_option("--burn-in", burn_in, "discarded steps per episode");

  auto* serve = app.add_subcommand("serve", "expose the environment to an external agent");
  serve_f.attach(serve);
  bool use_stdio = false;
  int port = 0, max_connections = 0;
  std::string mode = "controller", obs_source = "raw";
  serve->add_flag("--stdio", use_stdio, "serve one session on stdin/stdout");
  serve->add_option("--port", port, "serve on 127.0.0.1:PORT");
  auto* mode_opt = serve->add_option("--mode", mode, "controller | estimator");
  auto* obs_opt = serve->add_option("--obs-source", obs_source, "raw | estimate | both");
  serve->add_option("--max-connections", max_connections, "stop after N connections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "qcart: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*sweep) return run_sweep_cmd(sweep_f);
    if (*ratio) return run_ratio_cmd(ratio_f, baseline_file, base_controller, base_estimator);
    if (*cal) {
      if (cal_steps_opt->count() > 0) {
        cal_f.setters.emplace_back(cal_steps_opt, [&](json& j) {
          j["calibration_steps"] = cal_steps;
        });
      }
      return run_calibrate_cmd(cal_f, forcing);
    }
    if (*hist) {
      return run_histogram_cmd(hist_f, hist_steps, burn_in,
                               hist_steps_opt->count() > 0, burn_opt->count() > 0);
    }
    if (*serve) {
      return run_serve_cmd(serve_f, use_stdio, port, mode, obs_source,
                           max_connections, mode_opt->count() > 0,
                           obs_opt->count() > 0);
    }
  } catch (const ConfigError& e) {
    std::cerr << "qcart: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RuntimeFault& e) {
    std::cerr << "qcart: runtime fault: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "qcart: runtime fault: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
