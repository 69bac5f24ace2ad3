#include "qcart/batch.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace qcart {

int default_workers() {
  if (const char* env = std::getenv("QCART_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("QCART_WORKERS must be a positive integer, got '") +
                      env + "'");
  }
  return omp_get_max_threads();
}

BatchSummary summarize(const std::vector<EpisodeResult>& results) {
  BatchSummary s;
  s.episodes = results.size();
  std::vector<double> kept;
  kept.reserve(results.size());
  for (const EpisodeResult& r : results) {
    s.t_termination.push_back(r.t_termination);
    s.terminated_by.push_back(r.terminated_by);
    if (r.terminated_by == TerminatedBy::kAborted) {
      ++s.aborted;
      continue;
    }
    if (r.terminated_by == TerminatedBy::kMaxSteps) ++s.censored;
    kept.push_back(static_cast<double>(r.t_termination));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (kept.empty()) {
    s.mean = s.median = s.std_error = nan;
    return s;
  }
  const double n = static_cast<double>(kept.size());
  double sum = 0.0;
  for (double v : kept) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : kept) ss += (v - s.mean) * (v - s.mean);
  s.std_error = kept.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  std::sort(kept.begin(), kept.end());
  const std::size_t m = kept.size() / 2;
  s.median = kept.size() % 2 ? kept[m] : 0.5 * (kept[m - 1] + kept[m]);
  s.censored_fraction = static_cast<double>(s.censored) / n;
  return s;
}

BatchSummary run_batch(const EnvConfig& config, std::uint64_t episodes,
                       std::uint64_t master_seed, int workers) {
  config.validate();
  const int threads = workers > 0 ? workers : default_workers();
  std::vector<EpisodeResult> results(episodes);
  const auto n = static_cast<std::int64_t>(episodes);
  std::exception_ptr error;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      results[i] = run_episode(config, mix_seed(master_seed, i));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(results);
}

BatchSummary run_batch_serial(const EnvConfig& config, std::uint64_t episodes,
                              std::uint64_t master_seed) {
  config.validate();
  std::vector<EpisodeResult> results;
  results.reserve(episodes);
  for (std::uint64_t i = 0; i < episodes; ++i) {
    results.push_back(run_episode(config, mix_seed(master_seed, i)));
  }
  return summarize(results);
}

Histogram::Histogram(double lo_, double hi, double width_)
    : lo(lo_), width(width_) {
  if (!(hi > lo) || !(width > 0.0)) throw ConfigError("bad histogram range");
  counts.assign(static_cast<std::size_t>(std::llround((hi - lo) / width)), 0);
}

void Histogram::add(double v) {
  const double k = std::floor((v - lo) / width);
  const auto last = static_cast<double>(counts.size() - 1);
  counts[static_cast<std::size_t>(std::clamp(k, 0.0, last))] += 1;
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

namespace {

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

SampleStats sample_stats(std::vector<double> values) {
  SampleStats st;
  if (values.empty()) return st;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - st.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  st.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  std::sort(values.begin(), values.end());
  st.iqr = quantile(values, 0.75) - quantile(values, 0.25);
  return st;
}

StateHistograms collect_histograms(const EnvConfig& config,
                                   std::uint64_t master_seed,
                                   const HistogramOptions& o) {
  EnvConfig cfg = config;
  cfg.options.trace = true;
  const double x_th = cfg.params.x_threshold;
  StateHistograms h{Histogram(-x_th, x_th, o.x_bin),
                    Histogram(-o.p_range, o.p_range, o.p_bin),
                    {}, {}, 0, {}, {}};
  h.x_samples.reserve(o.samples);
  h.p_samples.reserve(o.samples);
  for (std::uint64_t ep = 0;
       h.x_samples.size() < o.samples && ep < o.max_episodes; ++ep) {
    const EpisodeResult r = run_episode(cfg, mix_seed(master_seed, ep));
    ++h.episodes;
    if (r.terminated_by == TerminatedBy::kAborted) continue;
    for (const TraceRecord& rec : r.trace) {
      if (rec.t <= o.burn_in) continue;
      if (h.x_samples.size() >= o.samples) break;
      h.x.add(rec.mean_x);
      h.p.add(rec.mean_p);
      h.x_samples.push_back(rec.mean_x);
      h.p_samples.push_back(rec.mean_p);
    }
  }
  h.x_stats = sample_stats(h.x_samples);
  h.p_stats = sample_stats(h.p_samples);
  return h;
}

}  // namespace qcart
