#include "spml/kestim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spml/errors.hpp"

namespace spml {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
}

KEstimate summarize(std::vector<double> estimates, double k_full, std::size_t m, double level) {
  KEstimate out;
  out.k_full = k_full;
  out.sample_size = m;
  out.trials = estimates.size();
  out.level = level;
  out.k_hat = std::accumulate(estimates.begin(), estimates.end(), 0.0) /
              static_cast<double>(estimates.size());
  const double tail = 0.5 * (1.0 - level);
  std::sort(estimates.begin(), estimates.end());
  out.lo = percentile(estimates, tail);
  out.hi = percentile(std::move(estimates), 1.0 - tail);
  return out;
}

}  // namespace

double empirical_k(const FullLabels& full, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("empirical_k: empty sample");
  double total = 0.0;
  for (auto r : indices) {
    if (r >= full.rows()) throw DataError("empirical_k: index out of range");
    for (auto v : full.row(r)) total += v;
  }
  return total / static_cast<double>(indices.size());
}

double empirical_k(const FullLabels& full) {
  std::vector<std::size_t> all(full.rows());
  std::iota(all.begin(), all.end(), 0);
  return empirical_k(full, all);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile: q must lie in [0, 1]");
  if (!std::is_sorted(values.begin(), values.end())) std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const auto above = std::min(below + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return values[below] + frac * (values[above] - values[below]);
}

KEstimate k_confidence_interval(const FullLabels& full, std::size_t sample_size,
                                std::size_t trials, double level, Seed seed) {
  check_level(level);
  const std::size_t n = full.rows();
  if (sample_size < 1) throw ConfigError("k_confidence_interval: M must be at least 1");
  if (sample_size > n) {
    throw ConfigError("k_confidence_interval: M=" + std::to_string(sample_size) +
                      " exceeds N=" + std::to_string(n));
  }
  if (trials < 1) throw ConfigError("k_confidence_interval: T must be at least 1");

  const auto counts = row_positive_counts(full);
  const double k_full = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(n);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng = make_rng(seed);
  std::vector<double> estimates(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    // Partial Fisher-Yates: the first M slots become a uniform subset.
    double sum = 0.0;
    for (std::size_t i = 0; i < sample_size; ++i) {
      const auto j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
      std::swap(pool[i], pool[j]);
      sum += counts[pool[i]];
    }
    estimates[t] = sum / static_cast<double>(sample_size);
  }
  return summarize(std::move(estimates), k_full, sample_size, level);
}

KEstimate k_bootstrap_interval(const FullLabels& full, std::span<const std::size_t> sample,
                               std::size_t trials, double level, Seed seed) {
  check_level(level);
  if (sample.empty()) throw ConfigError("k_bootstrap_interval: empty sample");
  if (trials < 1) throw ConfigError("k_bootstrap_interval: T must be at least 1");
  std::vector<double> counts;
  counts.reserve(sample.size());
  for (auto r : sample) {
    if (r >= full.rows()) throw DataError("k_bootstrap_interval: index out of range");
    double c = 0.0;
    for (auto v : full.row(r)) c += v;
    counts.push_back(c);
  }
  const double k_sample = std::accumulate(counts.begin(), counts.end(), 0.0) /
                          static_cast<double>(counts.size());
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> draw(0, counts.size() - 1);
  std::vector<double> estimates(trials);
  for (auto& e : estimates) {
    double sum = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[draw(rng)];
    e = sum / static_cast<double>(counts.size());
  }
  KEstimate out = summarize(std::move(estimates), k_sample, sample.size(), level);
  return out;
}

}  // namespace spml
