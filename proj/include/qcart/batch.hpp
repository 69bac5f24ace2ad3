#pragma once

#include "qcart/episode.hpp"

#include <cstdint>
#include <vector>

namespace qcart {

struct BatchSummary {
  std::uint64_t episodes = 0;
  std::uint64_t aborted = 0;
  std::uint64_t censored = 0;  // reached max_steps
  double mean = 0.0;           // over non-aborted episodes
  double median = 0.0;
  double std_error = 0.0;
  double censored_fraction = 0.0;
  std::vector<std::uint64_t> t_termination;  // episode order; aborted included
  std::vector<TerminatedBy> terminated_by;
};

BatchSummary summarize(const std::vector<EpisodeResult>& results);

/// Episode i uses seed mix_seed(master_seed, i). Results do not depend on the
/// worker count. workers <= 0 picks QCART_WORKERS or the OpenMP default.
BatchSummary run_batch(const EnvConfig& config, std::uint64_t episodes,
                       std::uint64_t master_seed, int workers = 0);

/// Single-threaded reference for run_batch.
BatchSummary run_batch_serial(const EnvConfig& config, std::uint64_t episodes,
                              std::uint64_t master_seed);

int default_workers();

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<std::uint64_t> counts;

  Histogram(double lo, double hi, double width);
  /// Values outside [lo, hi) land in the edge bins.
  void add(double v);
  double center(std::size_t i) const { return lo + (i + 0.5) * width; }
  std::uint64_t total() const;
};

struct SampleStats {
  double mean = 0.0;
  double skewness = 0.0;
  double iqr = 0.0;
};

SampleStats sample_stats(std::vector<double> values);

struct StateHistograms {
  Histogram x;
  Histogram p;
  std::vector<double> x_samples;
  std::vector<double> p_samples;
  std::uint64_t episodes = 0;
  SampleStats x_stats;
  SampleStats p_stats;
};

struct HistogramOptions {
  std::uint64_t samples = 1'000'000;
  std::uint64_t burn_in = 300;  // per episode, inner steps
  double x_bin = 0.1;
  double p_range = 4.0;
  double p_bin = 0.1;
  // Safety cap on the number of episodes.
  std::uint64_t max_episodes = 1'000'000;
};

/// Pools post-measurement expectation values (or classical states) of the
/// controlled loop across episodes until `samples` points are retained.
StateHistograms collect_histograms(const EnvConfig& config,
                                   std::uint64_t master_seed,
                                   const HistogramOptions& options = {});

}  // namespace qcart
