#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spml/dataset.hpp"
#include "spml/eval.hpp"
#include "spml/trainer.hpp"

namespace spml {

enum class Corruption { None, SinglePositive, OnePosOneNeg, OnePosAllNeg };

std::string_view to_string(Corruption c);
Corruption parse_corruption(std::string_view name);

struct SyntheticSpec {
  std::size_t n = 3000;  // total rows, test rows included
  std::size_t n_test = 500;
  std::size_t d = 32;
  std::size_t n_classes = 10;
  double target_k = 2.0;
  Seed seed = 0;
};

struct FileSpec {
  std::filesystem::path train_features;
  std::filesystem::path train_labels;  // full labels
  std::filesystem::path test_features;
  std::filesystem::path test_labels;
  // Pre-computed corruption of the training labels (as written by `spml corrupt`).
  std::filesystem::path observed_labels;
  double test_fraction = 0.2;  // used when no test files are given
};

struct ExperimentConfig {
  std::string source = "synthetic";  // "synthetic" or "files"
  SyntheticSpec synthetic;
  FileSpec files;
  Corruption corruption = Corruption::SinglePositive;
  Seed corruption_seed = 1;
  double val_fraction = 0.2;
  Seed split_seed = 2;
  double train_fraction = 1.0;  // share of training images kept (budget sweeps)
  Seed subsample_seed = 3;
  TrainConfig train;
  std::optional<HyperGrid> grid;
  std::size_t histogram_bins = 10;
  bool recovery = true;
  std::filesystem::path output_dir;

  void validate() const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical JSON of everything except the output directory.
std::string config_hash(const ExperimentConfig& config);

struct PreparedData {
  DatasetBundle train;
  DatasetBundle val;
  DatasetBundle test;
};

// Load or synthesize, corrupt, split off validation, subsample the training set.
PreparedData prepare_data(const ExperimentConfig& config);

struct HistogramRow {
  std::size_t epoch = 0;
  HistogramBin bin;
};

struct ExperimentResult {
  EvalReport test;
  std::size_t best_epoch = 0;
  double best_val_map = 0.0;
  double k = 0.0;
  std::optional<double> recovery_map;
  std::optional<double> recovery_map_estimator;
  std::string config_hash;
  TrainConfig selected;
  std::vector<EpochMetrics> log;
  std::vector<GridPoint> grid_points;
  std::vector<HistogramRow> histogram;            // classifier, training set
  std::vector<HistogramRow> histogram_estimator;  // ROLE label estimates
  std::size_t n_train = 0;
  std::size_t n_observed_labels = 0;
};

// Runs the whole protocol. When `output_dir` is set it receives config.json,
// metrics.csv, results.json, histograms.csv, observed_labels.csv and checkpoints/.
// `threads` only parallelizes grid points; it never changes the results.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads = 1);

// results.json content for a finished run.
std::string results_json(const ExperimentResult& result);

struct SweepRow {
  LossMode loss = LossMode::AN;
  double fraction = 1.0;
  std::size_t n_train = 0;
  std::size_t n_observed_labels = 0;
  double test_map = 0.0;
};

// One run per (loss, fraction); writes sweep.csv into the output directory.
std::vector<SweepRow> run_budget_sweep(const ExperimentConfig& config,
                                       const std::vector<double>& fractions,
                                       const std::vector<LossMode>& losses);

struct KSweepRow {
  double k = 0.0;
  double test_map = 0.0;
};

// Test MAP as a function of the k handed to EPR/ROLE; writes k_sweep.csv.
std::vector<KSweepRow> run_k_sweep(const ExperimentConfig& config, const std::vector<double>& ks);

}  // namespace spml
