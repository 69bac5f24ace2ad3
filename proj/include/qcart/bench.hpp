#pragma once

#include "qcart/batch.hpp"
#include "qcart/protocol.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qcart {

/// Everything a benchmark command needs. Serializes to a canonical JSON object
/// (sorted keys) whose FNV-1a hash identifies the run.
struct BenchmarkConfig {
  SystemKind system = SystemKind::kQuantum;
  PotentialSpec potential = PotentialSpec::quadratic();
  SimParams params;
  ControllerBinding binding;
  LoopOptions options;
  std::vector<int> n_meas{1};
  std::vector<double> sigma_ancilla{0.7};
  std::vector<double> sigma_meas{0.8};  // classical, pointer scale
  double sigma_dyn = kDefaultSigmaDyn;  // classical, state units
  std::uint64_t episodes = 100;
  std::uint64_t seed = 0;
  // Quantum runs with a Kalman-type estimator calibrate their noise model
  // per sigma_ancilla with this many retained steps, unless noise_file is set.
  std::uint64_t calibration_steps = 100'000;
  std::string noise_file;
  // Histogram command.
  std::uint64_t histogram_steps = 100'000;
  std::uint64_t burn_in = 300;
  // Serve command.
  AgentMode agent_mode = AgentMode::kController;
  ObsSource obs_source = ObsSource::kRaw;

  void validate() const;
  nlohmann::json to_json() const;
  /// Strict: unknown keys and wrong types raise ConfigError. Missing keys
  /// keep their defaults. Accepts a run manifest (uses its "config").
  static BenchmarkConfig from_json(const nlohmann::json& j);
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string config_hash(const BenchmarkConfig& config);

/// Shortest round-trip decimal text.
std::string format_double(double v);

struct SweepCell {
  int n_meas = 1;
  double sigma_ancilla = 0.0;
  double sigma_meas = 0.0;
  BatchSummary summary;
};

/// Episode configuration of one cell; `noise` is the calibrated or loaded
/// model for quantum filters (ignored otherwise).
EnvConfig cell_config(const BenchmarkConfig& config, int n_meas,
                      double sigma_ancilla, double sigma_meas,
                      const std::optional<NoiseModel>& noise);

/// True for quantum runs whose estimator needs a noise model.
bool needs_quantum_noise(const BenchmarkConfig& config);

/// Noise model for the quantum filters at one sigma_ancilla: loaded from
/// noise_file, or calibrated with a seed derived from (seed, index).
/// Empty when no filter needs it.
std::optional<NoiseModel> quantum_noise(const BenchmarkConfig& config,
                                        double sigma_ancilla, std::size_t index);

/// Cells in row-major order over (n_meas, sigma_ancilla, sigma_meas). Every
/// cell uses the same master seed, so cells share random streams.
std::vector<SweepCell> run_sweep(const BenchmarkConfig& config);

std::string sweep_csv(const std::vector<SweepCell>& cells);

struct RatioCell {
  int n_meas = 1;
  double sigma_ancilla = 0.0;
  double sigma_meas = 0.0;
  double mean = 0.0;
  double baseline_mean = 0.0;
  double ratio = 0.0;
  double std_error = 0.0;
  bool available = false;
};

/// Per-cell mean ratio with a delta-method standard error. Throws
/// ConfigError when the sweep axes differ.
std::vector<RatioCell> ratio_cells(const std::vector<SweepCell>& cells,
                                   const std::vector<SweepCell>& baseline);
std::string ratio_csv(const std::vector<RatioCell>& cells);

/// Two columns: bin center, probability mass.
std::string histogram_csv(const Histogram& h);

nlohmann::json manifest(std::string_view command, const BenchmarkConfig& config,
                        const std::vector<std::string>& outputs,
                        const nlohmann::json& extra = nullptr);

/// Throws ConfigError if `path` cannot be opened for writing.
void check_writable(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace qcart
