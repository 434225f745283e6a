#include "spml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spml/errors.hpp"
#include "spml/io.hpp"

namespace spml {
namespace {

std::vector<std::size_t> positives_in_row(const FullLabels& full, std::size_t r) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < full.cols(); ++c) {
    if (full(r, c)) out.push_back(c);
  }
  return out;
}

std::vector<std::size_t> negatives_in_row(const FullLabels& full, std::size_t r) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < full.cols(); ++c) {
    if (!full(r, c)) out.push_back(c);
  }
  return out;
}

std::size_t pick(Rng& rng, std::size_t count) {
  return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
}

// Threshold at upper-tail mass `rate` of the sorted (ascending) scores.
double upper_quantile(const std::vector<double>& sorted, double rate) {
  if (rate >= 1.0) return -std::numeric_limits<double>::infinity();
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  const auto n = sorted.size();
  auto idx = static_cast<std::size_t>(std::floor((1.0 - rate) * static_cast<double>(n)));
  idx = std::min(idx, n - 1);
  return sorted[idx];
}

struct LinearLabeler {
  Matrix<double> directions;  // L x d, unit rows
  std::vector<double> thresholds;

  std::size_t label_row(std::span<const float> x, std::span<std::uint8_t> y) const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < directions.rows(); ++i) {
      double s = 0.0;
      auto w = directions.row(i);
      for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * static_cast<double>(x[j]);
      y[i] = s >= thresholds[i] ? 1 : 0;
      count += y[i];
    }
    return count;
  }
};

std::optional<DatasetBundle> try_synthesize(std::size_t n, std::size_t d, std::size_t n_classes,
                                            double target_k, Seed seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  LinearLabeler labeler{Matrix<double>(n_classes, d), std::vector<double>(n_classes)};
  for (std::size_t i = 0; i < n_classes; ++i) {
    auto w = labeler.directions.row(i);
    double norm = 0.0;
    for (auto& v : w) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : w) v /= norm;
  }

  // Uneven per-class prevalence, rescaled by a common factor during calibration.
  std::vector<double> base_rates(n_classes);
  std::uniform_real_distribution<double> spread(0.5, 1.5);
  double total = 0.0;
  for (auto& r : base_rates) total += (r = spread(rng));
  for (auto& r : base_rates) r *= target_k / total;

  const std::size_t pool_size = std::max<std::size_t>(4 * n, 20000);
  FeatureMatrix pool(pool_size, d);
  for (auto& v : pool.values()) v = static_cast<float>(normal(rng));
  Matrix<double> pool_scores(pool_size, n_classes);
  std::vector<std::vector<double>> sorted_scores(n_classes, std::vector<double>(pool_size));
  for (std::size_t r = 0; r < pool_size; ++r) {
    auto x = pool.row(r);
    for (std::size_t i = 0; i < n_classes; ++i) {
      auto w = labeler.directions.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += w[j] * static_cast<double>(x[j]);
      pool_scores(r, i) = s;
      sorted_scores[i][r] = s;
    }
  }
  for (auto& s : sorted_scores) std::sort(s.begin(), s.end());

  auto set_scale = [&](double scale) {
    for (std::size_t i = 0; i < n_classes; ++i) {
      labeler.thresholds[i] = upper_quantile(sorted_scores[i], scale * base_rates[i]);
    }
  };
  // Mean positives per row among pool rows with at least one positive.
  auto conditional_mean = [&]() {
    std::size_t rows = 0, positives = 0;
    for (std::size_t r = 0; r < pool_size; ++r) {
      std::size_t c = 0;
      for (std::size_t i = 0; i < n_classes; ++i) c += pool_scores(r, i) >= labeler.thresholds[i];
      if (c) {
        ++rows;
        positives += c;
      }
    }
    return rows ? static_cast<double>(positives) / static_cast<double>(rows) : 0.0;
  };

  double lo = 0.0;
  double hi = 1.0 / *std::min_element(base_rates.begin(), base_rates.end());
  set_scale(hi);
  if (conditional_mean() < target_k) return std::nullopt;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    set_scale(mid);
    (conditional_mean() < target_k ? lo : hi) = mid;
  }
  set_scale(0.5 * (lo + hi));

  DatasetBundle bundle;
  bundle.features = FeatureMatrix(n, d);
  FullLabels full(n, n_classes);
  constexpr int kMaxRowDraws = 10000;
  for (std::size_t r = 0; r < n; ++r) {
    auto x = bundle.features.row(r);
    int draws = 0;
    do {
      if (++draws > kMaxRowDraws) return std::nullopt;
      for (auto& v : x) v = static_cast<float>(normal(rng));
    } while (labeler.label_row(x, full.row(r)) == 0);
  }

  const auto counts = row_positive_counts(full);
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(n);
  if (std::abs(mean - target_k) > 0.1 * target_k) return std::nullopt;

  bundle.observed_labels = observe_all(full);
  bundle.full_labels = std::move(full);
  return bundle;
}

}  // namespace

ObservedLabels observe_all(const FullLabels& full) {
  ObservedLabels z(full.rows(), full.cols());
  for (std::size_t i = 0; i < full.size(); ++i) {
    z.values()[i] = full.values()[i] ? Obs::Pos : Obs::Neg;
  }
  return z;
}

std::vector<double> row_positive_counts(const FullLabels& full) {
  std::vector<double> counts(full.rows(), 0.0);
  for (std::size_t r = 0; r < full.rows(); ++r) {
    for (auto v : full.row(r)) counts[r] += v;
  }
  return counts;
}

DatasetBundle load_dataset(const std::filesystem::path& features_path,
                           const std::filesystem::path& labels_path) {
  DatasetBundle bundle;
  bundle.features = io::read_binary_matrix_f32(features_path);
  if (bundle.features.rows() == 0 || bundle.features.cols() == 0) {
    throw DataError("empty feature matrix: " + features_path.string());
  }
  const auto raw = io::read_int_csv(labels_path);
  if (raw.rows() != bundle.features.rows()) {
    throw DataError("dimension mismatch: " + std::to_string(bundle.features.rows()) +
                    " feature rows vs " + std::to_string(raw.rows()) + " label rows");
  }
  bool has_unobserved = false;
  for (int v : raw.values()) {
    if (v < -1 || v > 1) {
      throw DataError("label value outside {-1,0,1}: " + std::to_string(v) + " in " +
                      labels_path.string());
    }
    has_unobserved |= v == -1;
  }
  if (has_unobserved) {
    bundle.observed_labels = ObservedLabels(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      bundle.observed_labels.values()[i] = static_cast<Obs>(raw.values()[i]);
    }
  } else {
    FullLabels full(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      full.values()[i] = static_cast<std::uint8_t>(raw.values()[i]);
    }
    bundle.observed_labels = observe_all(full);
    bundle.full_labels = std::move(full);
  }
  return bundle;
}

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& features_path,
                  const std::filesystem::path& labels_path) {
  io::write_binary_matrix(features_path, bundle.features);
  Matrix<int> out(bundle.observed_labels.rows(), bundle.observed_labels.cols());
  if (bundle.full_labels) {
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = bundle.full_labels->values()[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.values()[i] = static_cast<int>(bundle.observed_labels.values()[i]);
    }
  }
  io::write_int_csv(labels_path, out);
}

DatasetBundle synthesize_dataset(std::size_t n, std::size_t d, std::size_t n_classes,
                                 double target_k, Seed seed) {
  if (n == 0 || d == 0 || n_classes == 0) {
    throw ConfigError("synthesize_dataset: n, d and L must all be at least 1");
  }
  // Every row carries a positive, so the mean cannot drop below 1.
  if (!(target_k >= 1.0) || !(target_k < static_cast<double>(n_classes))) {
    throw ConfigError("synthesize_dataset: infeasible target_k " + std::to_string(target_k) +
                      " for L=" + std::to_string(n_classes) + " (need 1 <= target_k < L)");
  }
  constexpr int kAttempts = 8;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    if (auto b = try_synthesize(n, d, n_classes, target_k, derive_seed(seed, attempt))) return *b;
  }
  throw ConfigError("synthesize_dataset: calibration failed for target_k " +
                    std::to_string(target_k));
}

ObservedLabels corrupt_single_positive(const FullLabels& full, Seed seed) {
  Rng rng = make_rng(seed);
  ObservedLabels z(full.rows(), full.cols(), Obs::Unobserved);
  for (std::size_t r = 0; r < full.rows(); ++r) {
    const auto pos = positives_in_row(full, r);
    if (pos.empty()) {
      throw DataError("corrupt_single_positive: row " + std::to_string(r) + " has no positive");
    }
    z(r, pos[pick(rng, pos.size())]) = Obs::Pos;
  }
  return z;
}

ObservedLabels corrupt_partial(const FullLabels& full, PartialMode mode, Seed seed) {
  Rng rng = make_rng(seed);
  ObservedLabels z(full.rows(), full.cols(), Obs::Unobserved);
  for (std::size_t r = 0; r < full.rows(); ++r) {
    const auto pos = positives_in_row(full, r);
    const auto neg = negatives_in_row(full, r);
    if (pos.empty()) {
      throw DataError("corrupt_partial: row " + std::to_string(r) + " has no positive");
    }
    z(r, pos[pick(rng, pos.size())]) = Obs::Pos;
    if (mode == PartialMode::OnePosOneNeg) {
      if (neg.empty()) {
        throw DataError("corrupt_partial: row " + std::to_string(r) + " has no negative");
      }
      z(r, neg[pick(rng, neg.size())]) = Obs::Neg;
    } else {
      for (auto c : neg) z(r, c) = Obs::Neg;
    }
  }
  return z;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_partition(
    std::size_t n, std::size_t n_second, Seed seed) {
  if (n_second > n) throw ConfigError("random_partition: split larger than dataset");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> second(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_second));
  std::vector<std::size_t> first(perm.begin() + static_cast<std::ptrdiff_t>(n_second), perm.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

DatasetBundle subset(const DatasetBundle& bundle, std::span<const std::size_t> indices) {
  DatasetBundle out;
  out.features = gather_rows(bundle.features, indices);
  out.observed_labels = gather_rows(bundle.observed_labels, indices);
  if (bundle.full_labels) out.full_labels = gather_rows(*bundle.full_labels, indices);
  out.split_tag = bundle.split_tag;
  return out;
}

std::pair<DatasetBundle, DatasetBundle> split_train_val(const DatasetBundle& bundle,
                                                        double val_fraction, Seed seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split_train_val: val_fraction must lie in (0, 1)");
  }
  if (!bundle.full_labels) {
    throw DataError("split_train_val: validation split needs full labels");
  }
  const std::size_t n = bundle.n_examples();
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) {
    throw ConfigError("split_train_val: fraction " + std::to_string(val_fraction) + " on " +
                      std::to_string(n) + " examples leaves an empty split");
  }
  auto [train_idx, val_idx] = random_partition(n, n_val, seed);
  DatasetBundle train = subset(bundle, train_idx);
  DatasetBundle val = subset(bundle, val_idx);
  train.split_tag = SplitTag::Train;
  val.split_tag = SplitTag::Val;
  val.observed_labels = observe_all(*val.full_labels);
  return {std::move(train), std::move(val)};
}

void check_consistent(const ObservedLabels& observed, const FullLabels& full) {
  if (!observed.same_shape(full)) throw DataError("observed/full label shape mismatch");
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto z = observed.values()[i];
    const auto y = full.values()[i];
    if ((z == Obs::Pos && y == 0) || (z == Obs::Neg && y == 1)) {
      throw DataError("observed labels inconsistent with full labels at entry (" +
                      std::to_string(i / full.cols()) + ", " + std::to_string(i % full.cols()) +
                      ")");
    }
  }
}

}  // namespace spml
