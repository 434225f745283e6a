#include "spml/trainer.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <string>
#include <thread>

#include "spml/errors.hpp"
#include "spml/eval.hpp"
#include "spml/kestim.hpp"

namespace spml {
namespace {

constexpr std::array<std::pair<LossMode, std::string_view>, 11> kLossNames{{
    {LossMode::BCE, "bce"},
    {LossMode::BCE_LS, "bce_ls"},
    {LossMode::IU, "iu"},
    {LossMode::IUN, "iun"},
    {LossMode::AN, "an"},
    {LossMode::WAN, "wan"},
    {LossMode::AN_LS, "an_ls"},
    {LossMode::AN_LS_ASYM, "an_ls_asym"},
    {LossMode::PR, "pr"},
    {LossMode::EPR, "epr"},
    {LossMode::ROLE, "role"},
}};

constexpr std::array<LossMode, 11> kAllModes{LossMode::BCE, LossMode::BCE_LS,     LossMode::IU,
                                             LossMode::IUN, LossMode::AN,         LossMode::WAN,
                                             LossMode::AN_LS, LossMode::AN_LS_ASYM, LossMode::PR,
                                             LossMode::EPR, LossMode::ROLE};

std::optional<BceMode> bce_mode_for(LossMode mode) {
  switch (mode) {
    case LossMode::BCE: return BceMode::BCE;
    case LossMode::BCE_LS: return BceMode::BCE_LS;
    case LossMode::IU: return BceMode::IU;
    case LossMode::IUN: return BceMode::IUN;
    case LossMode::AN: return BceMode::AN;
    case LossMode::WAN: return BceMode::WAN;
    case LossMode::AN_LS: return BceMode::AN_LS;
    case LossMode::AN_LS_ASYM: return BceMode::AN_LS_ASYM;
    default: return std::nullopt;
  }
}

bool uses_k(LossMode mode) { return mode == LossMode::EPR || mode == LossMode::ROLE; }

}  // namespace

std::string_view to_string(LossMode mode) {
  for (const auto& [m, name] : kLossNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

LossMode parse_loss_mode(std::string_view name) {
  std::string norm(name);
  for (auto& ch : norm) {
    ch = ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  for (const auto& [m, n] : kLossNames) {
    if (n == norm) return m;
  }
  throw ConfigError("unknown loss mode: '" + std::string(name) + "'");
}

std::span<const LossMode> all_loss_modes() { return kAllModes; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(phi_lr_multiplier > 0.0)) throw ConfigError("phi_lr_multiplier must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (k && !(*k > 0.0)) throw ConfigError("k must be positive");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DataError("adam_step: shape mismatch");
  }
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericalError("adam_step: non-finite gradient at parameter " + std::to_string(i) +
                           " (step " + std::to_string(state.step + 1) + ")");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    params[i] -= lr * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
  }
}

TrainState make_train_state(const DatasetBundle& train, const TrainConfig& config) {
  config.validate();
  if (train.n_examples() == 0) throw DataError("training set is empty");
  TrainState state;
  state.model = init_linear_model(train.n_features(), train.n_classes(), derive_seed(config.seed, 1));
  state.adam_weights = AdamState(state.model.weights.size());
  state.adam_bias = AdamState(state.model.bias.size());
  if (config.loss_mode == LossMode::ROLE) {
    state.estimator = init_phi(train.observed_labels, derive_seed(config.seed, 2));
    state.adam_phi = AdamState(state.estimator->phi.size());
  }
  if (uses_k(config.loss_mode)) {
    if (config.k) {
      state.k = *config.k;
    } else if (train.full_labels) {
      state.k = empirical_k(*train.full_labels);
    } else {
      throw ConfigError("k is required when the training set has no full labels");
    }
  }
  return state;
}

BatchGradients compute_batch_gradients(const TrainState& state, const DatasetBundle& train,
                                       const TrainConfig& config,
                                       std::span<const std::size_t> batch) {
  const PredictionMatrix f = forward(state.model, train.features, batch);
  const ObservedLabels z = gather_rows(train.observed_labels, batch);
  BatchGradients out;
  MatrixD grad_f;

  if (auto bce = bce_mode_for(config.loss_mode)) {
    std::optional<FullLabels> y;
    if (train.full_labels) y = gather_rows(*train.full_labels, batch);
    auto result = weighted_bce(f, build_coefficients(*bce, z, y ? &*y : nullptr, config.loss_params));
    out.loss = result.value;
    grad_f = std::move(result.grad);
  } else if (config.loss_mode == LossMode::PR) {
    auto result = loss_pairwise_ranking(f, z);
    out.loss = result.value;
    grad_f = std::move(result.grad);
  } else if (config.loss_mode == LossMode::EPR) {
    auto result = loss_epr(f, z, state.k, config.lambda);
    out.loss = result.value;
    grad_f = std::move(result.grad);
  } else {
    if (!state.estimator) throw ConfigError("ROLE training needs a label estimator");
    const MatrixD raw = phi_rows_for_batch(*state.estimator, batch);
    MatrixD est(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.size(); ++i) est.values()[i] = clamp_probability(raw.values()[i]);
    auto result = loss_role(f, est, z, state.k, config.lambda);
    out.loss = result.value;
    grad_f = std::move(result.grad_predictions);
    out.phi = std::move(result.grad_estimates);
    // Chain rule through the sigmoid; clamped estimates pass no gradient.
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double s = raw.values()[i];
      const bool clamped = s < kProbClamp || s > 1.0 - kProbClamp;
      out.phi.values()[i] = clamped ? 0.0 : out.phi.values()[i] * s * (1.0 - s);
    }
  }
  if (!std::isfinite(out.loss)) throw NumericalError("non-finite training loss");
  out.model = backward(state.model, train.features, batch, grad_f);
  return out;
}

double train_step(TrainState& state, const DatasetBundle& train, const TrainConfig& config,
                  std::span<const std::size_t> batch) {
  BatchGradients g = compute_batch_gradients(state, train, config, batch);
  adam_step(state.model.weights.values(), g.model.weights.values(), state.adam_weights,
            config.learning_rate);
  adam_step(state.model.bias, g.model.bias, state.adam_bias, config.learning_rate);
  if (state.estimator) {
    auto& phi = state.estimator->phi;
    MatrixD dense(phi.rows(), phi.cols());
    for (std::size_t r = 0; r < batch.size(); ++r) {
      auto src = g.phi.row(r);
      std::copy(src.begin(), src.end(), dense.row(batch[r]).begin());
    }
    adam_step(phi.values(), dense.values(), state.adam_phi,
              config.learning_rate * config.phi_lr_multiplier);
  }
  return g.loss;
}

std::vector<std::size_t> epoch_order(std::size_t n, Seed epoch_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

EpochMetrics train_epoch(TrainState& state, const DatasetBundle& train, const TrainConfig& config,
                         Seed epoch_seed) {
  config.validate();
  const std::size_t n = train.n_examples();
  if (n == 0) throw DataError("train_epoch: empty training set");
  const auto order = epoch_order(n, epoch_seed);
  EpochMetrics m;
  double weighted = 0.0;
  for (std::size_t start = 0; start < n; start += config.batch_size) {
    const std::size_t len = std::min(config.batch_size, n - start);
    std::span<const std::size_t> batch(order.data() + start, len);
    weighted += train_step(state, train, config, batch) * static_cast<double>(len);
    ++m.steps;
  }
  m.train_loss = weighted / static_cast<double>(n);
  return m;
}

std::size_t select_best_epoch(std::span<const double> val_maps) {
  if (val_maps.empty()) throw DataError("select_best_epoch: no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_maps.size(); ++i) {
    if (val_maps[i] > val_maps[best]) best = i;
  }
  return best + 1;
}

FitResult fit_with_validation(const DatasetBundle& train, const DatasetBundle& val,
                              const TrainConfig& config, const EpochObserver& observer) {
  if (val.n_examples() == 0) throw DataError("fit_with_validation: empty validation set");
  if (!val.full_labels) throw DataError("fit_with_validation: validation set needs full labels");
  TrainState state = make_train_state(train, config);
  FitResult fit;
  fit.k = state.k;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics m = train_epoch(state, train, config, derive_seed(config.seed, 1000 + epoch));
    m.epoch = epoch;
    m.val_map = mean_average_precision(forward(state.model, val.features), *val.full_labels).map;
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (observer) observer(m, state);
    if (fit.log.empty() || m.val_map > fit.best_val_map) {
      fit.best_epoch = epoch;
      fit.best_val_map = m.val_map;
      fit.best_model = state.model;
      fit.best_estimator = state.estimator;
    }
    fit.log.push_back(m);
  }
  return fit;
}

std::vector<TrainConfig> HyperGrid::expand(const TrainConfig& base) const {
  std::vector<TrainConfig> out;
  const std::vector<double> lams = lambdas.empty() ? std::vector<double>{base.lambda} : lambdas;
  const std::vector<double> lrs = learning_rates.empty() ? std::vector<double>{base.learning_rate}
                                                         : learning_rates;
  const std::vector<std::size_t> bss =
      batch_sizes.empty() ? std::vector<std::size_t>{base.batch_size} : batch_sizes;
  for (double lr : lrs) {
    for (std::size_t bs : bss) {
      for (double lam : lams) {
        TrainConfig c = base;
        c.learning_rate = lr;
        c.batch_size = bs;
        c.lambda = lam;
        out.push_back(c);
      }
    }
  }
  return out;
}

GridResult grid_search(const DatasetBundle& train, const DatasetBundle& val,
                       const TrainConfig& base, const HyperGrid& grid, std::size_t threads) {
  const auto configs = grid.expand(base);
  if (configs.empty()) throw ConfigError("grid_search: empty grid");
  std::vector<std::optional<FitResult>> fits(configs.size());

  if (threads <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) fits[i] = fit_with_validation(train, val, configs[i]);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) {
        fits[i] = fit_with_validation(train, val, configs[i]);
      }
    };
    std::vector<std::future<void>> pool;
    for (std::size_t t = 0; t < std::min(threads, configs.size()); ++t) {
      pool.push_back(std::async(std::launch::async, worker));
    }
    for (auto& f : pool) f.get();
  }

  GridResult result;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    result.points.push_back({configs[i], fits[i]->best_val_map, fits[i]->best_epoch});
    if (fits[i]->best_val_map > fits[result.best_index]->best_val_map) result.best_index = i;
  }
  result.best_fit = std::move(*fits[result.best_index]);
  return result;
}

}  // namespace spml
