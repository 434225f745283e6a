#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spml/dataset.hpp"
#include "spml/losses.hpp"
#include "spml/model.hpp"
#include "spml/role.hpp"
#include "spml/rng.hpp"

namespace spml {

enum class LossMode { BCE, BCE_LS, IU, IUN, AN, WAN, AN_LS, AN_LS_ASYM, PR, EPR, ROLE };

std::string_view to_string(LossMode mode);
// Accepts the names produced by to_string, case-insensitive, '-' or '_'.
LossMode parse_loss_mode(std::string_view name);
std::span<const LossMode> all_loss_modes();

struct TrainConfig {
  LossMode loss_mode = LossMode::AN;
  double learning_rate = 1e-3;
  double phi_lr_multiplier = 10.0;
  std::size_t batch_size = 16;
  std::size_t epochs = 25;
  double lambda = 1.0;
  // Expected positives per example; unset means "mean row sum of the full
  // training labels".
  std::optional<double> k;
  LossParams loss_params;
  Seed seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

// Bias-corrected Adam. Throws NumericalError on a non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);

struct TrainState {
  LinearModel model;
  std::optional<LabelEstimatorState> estimator;  // ROLE only
  AdamState adam_weights;
  AdamState adam_bias;
  AdamState adam_phi;
  double k = 0.0;
};

TrainState make_train_state(const DatasetBundle& train, const TrainConfig& config);

struct BatchGradients {
  double loss = 0.0;
  LinearModelGrad model;
  MatrixD phi;  // d loss / d phi for the batch rows; empty unless ROLE
};

BatchGradients compute_batch_gradients(const TrainState& state, const DatasetBundle& train,
                                       const TrainConfig& config,
                                       std::span<const std::size_t> batch);

// Applies one combined optimizer step for a batch; theta and phi move together.
double train_step(TrainState& state, const DatasetBundle& train, const TrainConfig& config,
                  std::span<const std::size_t> batch);

// Seeded permutation of [0, n) used for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, Seed epoch_seed);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_map = 0.0;
  double wall_ms = 0.0;
  std::size_t steps = 0;
};

// Shuffles, iterates mini-batches (last partial batch kept) and returns the
// example-weighted mean training loss. `epoch` and `val_map` are left to the caller.
EpochMetrics train_epoch(TrainState& state, const DatasetBundle& train, const TrainConfig& config,
                         Seed epoch_seed);

using EpochObserver = std::function<void(const EpochMetrics&, const TrainState&)>;

struct FitResult {
  LinearModel best_model;
  std::optional<LabelEstimatorState> best_estimator;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_map = 0.0;
  double k = 0.0;
  std::vector<EpochMetrics> log;
};

// 1-based index of the maximum; ties resolve to the earliest epoch.
std::size_t select_best_epoch(std::span<const double> val_maps);

FitResult fit_with_validation(const DatasetBundle& train, const DatasetBundle& val,
                              const TrainConfig& config, const EpochObserver& observer = {});

struct HyperGrid {
  std::vector<double> learning_rates{1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<std::size_t> batch_sizes{8, 16};
  std::vector<double> lambdas;  // empty: keep the base config's lambda

  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct GridPoint {
  TrainConfig config;
  double best_val_map = 0.0;
  std::size_t best_epoch = 0;
};

struct GridResult {
  std::size_t best_index = 0;
  std::vector<GridPoint> points;
  FitResult best_fit;

  const TrainConfig& best_config() const { return points.at(best_index).config; }
};

// Runs every lattice point; the highest validation MAP wins (ties: first point).
// Points may run on `threads` workers; results do not depend on the count.
GridResult grid_search(const DatasetBundle& train, const DatasetBundle& val,
                       const TrainConfig& base, const HyperGrid& grid, std::size_t threads = 1);

}  // namespace spml
