#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spml/dataset.hpp"
#include "spml/rng.hpp"

namespace spml {

struct KEstimate {
  double k_full = 0.0;  // mean positives per row over the rows resampled from
  double k_hat = 0.0;   // mean of the resampled estimates
  std::size_t sample_size = 0;
  std::size_t trials = 0;
  double level = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Mean positives per row over the selected rows.
double empirical_k(const FullLabels& full, std::span<const std::size_t> indices);
// Mean positives per row over all rows.
double empirical_k(const FullLabels& full);

// Quantile q in [0, 1] with linear interpolation between the closest order
// statistics (position q * (n - 1) in the sorted sample).
double percentile(std::vector<double> values, double q);

// Distribution of the mean positive count over `trials` random size-M subsets
// drawn without replacement; returns the central `level` percentile interval.
// level = 0.9 gives the 5th/95th percentile interval.
KEstimate k_confidence_interval(const FullLabels& full, std::size_t sample_size,
                                std::size_t trials, double level, Seed seed);

// Percentile bootstrap interval for k from one labeled sample: resamples the
// given rows with replacement.
KEstimate k_bootstrap_interval(const FullLabels& full, std::span<const std::size_t> sample,
                               std::size_t trials, double level, Seed seed);

}  // namespace spml
