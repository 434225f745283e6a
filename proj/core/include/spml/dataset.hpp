#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spml/matrix.hpp"
#include "spml/rng.hpp"

namespace spml {

// Observation state of one (example, class) entry. The integer values are the
// on-disk encoding used by label CSV files.
enum class Obs : std::int8_t { Unobserved = -1, Neg = 0, Pos = 1 };

using FeatureMatrix = Matrix<float>;
using FullLabels = Matrix<std::uint8_t>;
using ObservedLabels = Matrix<Obs>;

enum class SplitTag { Train, Val, Test };

struct DatasetBundle {
  FeatureMatrix features;
  std::optional<FullLabels> full_labels;
  ObservedLabels observed_labels;
  SplitTag split_tag = SplitTag::Train;

  std::size_t n_examples() const noexcept { return features.rows(); }
  std::size_t n_features() const noexcept { return features.cols(); }
  std::size_t n_classes() const noexcept { return observed_labels.cols(); }
};

enum class PartialMode { OnePosOneNeg, OnePosAllNeg };

// Observed labels that record every entry of `full` (the fully labeled regime).
ObservedLabels observe_all(const FullLabels& full);

// Loads a feature file (binary f32 plus `<path>.json` sidecar) and a label CSV.
// A label file containing -1 entries is treated as already-corrupted observed
// labels and the bundle carries no full labels; otherwise the file is the full
// label matrix and every entry is marked observed.
DatasetBundle load_dataset(const std::filesystem::path& features_path,
                           const std::filesystem::path& labels_path);

// Writes features (with sidecar) and labels (full labels when present,
// otherwise observed labels).
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& features_path,
                  const std::filesystem::path& labels_path);

// Random linear-threshold multi-label data. Every row has at least one
// positive and the mean positives per row is within 10% of target_k.
DatasetBundle synthesize_dataset(std::size_t n, std::size_t d, std::size_t n_classes,
                                 double target_k, Seed seed);

// Keeps one uniformly chosen positive per row; everything else is unobserved.
ObservedLabels corrupt_single_positive(const FullLabels& full, Seed seed);

ObservedLabels corrupt_partial(const FullLabels& full, PartialMode mode, Seed seed);

// Uniform random disjoint split; the validation part always keeps full labels.
std::pair<DatasetBundle, DatasetBundle> split_train_val(const DatasetBundle& bundle,
                                                        double val_fraction, Seed seed);

// Splits off exactly `n_second` rows (seeded uniform); returns (first, second).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_partition(
    std::size_t n, std::size_t n_second, Seed seed);

DatasetBundle subset(const DatasetBundle& bundle, std::span<const std::size_t> indices);

// Throws DataError if any Pos sits on a y=0 entry or any Neg on a y=1 entry.
void check_consistent(const ObservedLabels& observed, const FullLabels& full);

std::vector<double> row_positive_counts(const FullLabels& full);

}  // namespace spml
