// spml: synthesize, corrupt, train, grid-search, sweep and estimate k.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spml/dataset.hpp"
#include "spml/errors.hpp"
#include "spml/experiment.hpp"
#include "spml/io.hpp"
#include "spml/kestim.hpp"

namespace {

using spml::ExperimentConfig;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// Flags that override config-file values; unset flags leave the file (or the
// built-in default) alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> source;
  std::optional<std::string> train_features, train_labels, test_features, test_labels,
      observed_labels;
  std::optional<std::size_t> synth_n, synth_n_test, synth_d, synth_classes;
  std::optional<double> synth_target_k;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::string> corruption;
  std::optional<std::uint64_t> corruption_seed, split_seed;
  std::optional<double> val_fraction;
  std::optional<std::string> loss;
  std::optional<double> lr, phi_lr_mult, lambda, k, gamma, eps, eps_p, eps_n;
  std::optional<std::size_t> batch_size, epochs, bins;
  std::optional<std::uint64_t> seed;
  bool no_recovery = false;
};

void add_experiment_options(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  app->add_option("-o,--out", o.out, "Run output directory");
  app->add_option("--source", o.source, "synthetic | files");
  app->add_option("--train-features", o.train_features, "Feature file (f32 + .json sidecar)");
  app->add_option("--train-labels", o.train_labels, "Full label CSV");
  app->add_option("--test-features", o.test_features);
  app->add_option("--test-labels", o.test_labels);
  app->add_option("--observed-labels", o.observed_labels, "Pre-corrupted training labels CSV");
  app->add_option("--synth-n", o.synth_n, "Synthetic rows including test rows");
  app->add_option("--synth-n-test", o.synth_n_test);
  app->add_option("--synth-d", o.synth_d);
  app->add_option("--synth-classes", o.synth_classes);
  app->add_option("--synth-target-k", o.synth_target_k);
  app->add_option("--synth-seed", o.synth_seed);
  app->add_option("--corruption", o.corruption,
                  "none | single_positive | one_pos_one_neg | one_pos_all_neg");
  app->add_option("--corruption-seed", o.corruption_seed);
  app->add_option("--val-fraction", o.val_fraction);
  app->add_option("--split-seed", o.split_seed);
  app->add_option("--loss", o.loss,
                  "bce | bce_ls | iu | iun | an | wan | an_ls | an_ls_asym | pr | epr | role");
  app->add_option("--lr", o.lr, "Learning rate");
  app->add_option("--phi-lr-multiplier", o.phi_lr_mult);
  app->add_option("--batch-size", o.batch_size);
  app->add_option("--epochs", o.epochs);
  app->add_option("--lambda", o.lambda, "EPR regularizer weight");
  app->add_option("--k", o.k, "Expected positives per example");
  app->add_option("--gamma", o.gamma, "WAN negative weight");
  app->add_option("--eps", o.eps, "Label smoothing");
  app->add_option("--eps-p", o.eps_p);
  app->add_option("--eps-n", o.eps_n);
  app->add_option("--seed", o.seed, "Training seed");
  app->add_option("--histogram-bins", o.bins);
  app->add_flag("--no-recovery", o.no_recovery, "Skip training-set label recovery");
}

template <typename T, typename U>
void apply(const std::optional<T>& v, U& target) {
  if (v) target = *v;
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : spml::load_config(o.config_path);
  apply(o.out, c.output_dir);
  apply(o.source, c.source);
  apply(o.train_features, c.files.train_features);
  apply(o.train_labels, c.files.train_labels);
  apply(o.test_features, c.files.test_features);
  apply(o.test_labels, c.files.test_labels);
  apply(o.observed_labels, c.files.observed_labels);
  if (o.train_features && !o.source) c.source = "files";
  apply(o.synth_n, c.synthetic.n);
  apply(o.synth_n_test, c.synthetic.n_test);
  apply(o.synth_d, c.synthetic.d);
  apply(o.synth_classes, c.synthetic.n_classes);
  apply(o.synth_target_k, c.synthetic.target_k);
  apply(o.synth_seed, c.synthetic.seed);
  if (o.corruption) c.corruption = spml::parse_corruption(*o.corruption);
  apply(o.corruption_seed, c.corruption_seed);
  apply(o.split_seed, c.split_seed);
  apply(o.val_fraction, c.val_fraction);
  if (o.loss) c.train.loss_mode = spml::parse_loss_mode(*o.loss);
  apply(o.lr, c.train.learning_rate);
  apply(o.phi_lr_mult, c.train.phi_lr_multiplier);
  apply(o.batch_size, c.train.batch_size);
  apply(o.epochs, c.train.epochs);
  apply(o.lambda, c.train.lambda);
  if (o.k) c.train.k = *o.k;
  if (o.gamma) c.train.loss_params.gamma = *o.gamma;
  apply(o.eps, c.train.loss_params.eps);
  apply(o.eps_p, c.train.loss_params.eps_p);
  apply(o.eps_n, c.train.loss_params.eps_n);
  apply(o.seed, c.train.seed);
  apply(o.bins, c.histogram_bins);
  if (o.no_recovery) c.recovery = false;
  c.validate();
  return c;
}

void print_summary(const spml::ExperimentResult& r) {
  std::cout << "test_map " << r.test.map << "  best_epoch " << r.best_epoch << "  val_map "
            << r.best_val_map;
  if (r.recovery_map) std::cout << "  recovery_map " << *r.recovery_map;
  if (r.recovery_map_estimator) std::cout << "  recovery_map_estimator " << *r.recovery_map_estimator;
  std::cout << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Single-positive multi-label learning toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic linear-threshold dataset");
  std::size_t s_n = 3000, s_d = 32, s_classes = 10;
  double s_k = 2.0;
  std::uint64_t s_seed = 0;
  std::string s_features, s_labels;
  synth->add_option("--n", s_n);
  synth->add_option("--d", s_d);
  synth->add_option("--classes", s_classes);
  synth->add_option("--target-k", s_k);
  synth->add_option("--seed", s_seed);
  synth->add_option("--features", s_features, "Output feature file")->required();
  synth->add_option("--labels", s_labels, "Output label CSV")->required();

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "Hide labels from a full label CSV");
  std::string c_labels, c_out, c_mode = "single_positive";
  std::uint64_t c_seed = 1;
  corrupt->add_option("--labels", c_labels, "Full label CSV")->required()->check(CLI::ExistingFile);
  corrupt->add_option("--mode", c_mode, "single_positive | one_pos_one_neg | one_pos_all_neg");
  corrupt->add_option("--seed", c_seed);
  corrupt->add_option("--out", c_out, "Observed label CSV (-1 = unobserved)")->required();

  // train
  Overrides train_o;
  auto* train = app.add_subcommand("train", "Train one configuration with validation selection");
  add_experiment_options(train, train_o);

  // grid
  Overrides grid_o;
  std::vector<double> g_lrs{1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<std::size_t> g_bs{8, 16};
  std::vector<double> g_lambdas;
  std::size_t g_threads = 1;
  auto* grid = app.add_subcommand("grid", "Hyperparameter grid search, then a full run");
  add_experiment_options(grid, grid_o);
  grid->add_option("--lrs", g_lrs)->delimiter(',');
  grid->add_option("--batch-sizes", g_bs)->delimiter(',');
  grid->add_option("--lambdas", g_lambdas)->delimiter(',');
  grid->add_option("--threads", g_threads);

  // kest
  auto* kest = app.add_subcommand("kest", "Resampled interval for the expected positive count");
  std::string k_labels;
  std::size_t k_m = 5, k_t = 100000;
  double k_level = 0.9;
  std::uint64_t k_seed = 0;
  kest->add_option("--labels", k_labels, "Full label CSV")->required()->check(CLI::ExistingFile);
  kest->add_option("--M", k_m, "Labeled examples per draw");
  kest->add_option("--T", k_t, "Number of draws");
  kest->add_option("--level", k_level, "Central mass of the interval (0.9 = 5th/95th)");
  kest->add_option("--seed", k_seed);

  // sweep
  Overrides sweep_o;
  std::vector<double> w_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::string> w_losses{"bce", "role"};
  std::vector<double> w_ks;
  auto* sweep = app.add_subcommand("sweep", "Label-budget sweep, or a k sweep with --k-values");
  add_experiment_options(sweep, sweep_o);
  sweep->add_option("--fractions", w_fractions)->delimiter(',');
  sweep->add_option("--losses", w_losses)->delimiter(',');
  sweep->add_option("--k-values", w_ks)->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*synth) {
    const auto b = spml::synthesize_dataset(s_n, s_d, s_classes, s_k, s_seed);
    spml::save_dataset(b, s_features, s_labels);
    std::cout << "wrote " << b.n_examples() << " x " << b.n_features() << " features, "
              << b.n_classes() << " classes, k = " << spml::empirical_k(*b.full_labels) << '\n';
  } else if (*corrupt) {
    const auto b = spml::io::read_int_csv(c_labels);
    spml::FullLabels full(b.rows(), b.cols());
    for (std::size_t i = 0; i < b.size(); ++i) {
      const int v = b.values()[i];
      if (v != 0 && v != 1) throw spml::DataError("corrupt: input must hold full 0/1 labels");
      full.values()[i] = static_cast<std::uint8_t>(v);
    }
    spml::ObservedLabels z;
    const auto mode = spml::parse_corruption(c_mode);
    if (mode == spml::Corruption::SinglePositive) {
      z = spml::corrupt_single_positive(full, c_seed);
    } else if (mode == spml::Corruption::OnePosOneNeg) {
      z = spml::corrupt_partial(full, spml::PartialMode::OnePosOneNeg, c_seed);
    } else if (mode == spml::Corruption::OnePosAllNeg) {
      z = spml::corrupt_partial(full, spml::PartialMode::OnePosAllNeg, c_seed);
    } else {
      throw spml::ConfigError("corrupt: mode 'none' writes nothing useful");
    }
    spml::Matrix<int> out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) out.values()[i] = static_cast<int>(z.values()[i]);
    spml::io::write_int_csv(c_out, out);
  } else if (*train) {
    print_summary(spml::run_experiment(resolve_config(train_o)));
  } else if (*grid) {
    auto cfg = resolve_config(grid_o);
    cfg.grid = spml::HyperGrid{g_lrs, g_bs, g_lambdas};
    print_summary(spml::run_experiment(cfg, g_threads));
  } else if (*kest) {
    const auto raw = spml::io::read_int_csv(k_labels);
    spml::FullLabels full(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const int v = raw.values()[i];
      if (v != 0 && v != 1) throw spml::DataError("kest: input must hold full 0/1 labels");
      full.values()[i] = static_cast<std::uint8_t>(v);
    }
    const auto est = spml::k_confidence_interval(full, k_m, k_t, k_level, k_seed);
    const nlohmann::json j = {{"k_hat_full", est.k_full}, {"M", est.sample_size},
                              {"T", est.trials},          {"level", est.level},
                              {"lo", est.lo},             {"hi", est.hi}};
    std::cout << j.dump() << '\n';
  } else if (*sweep) {
    const auto cfg = resolve_config(sweep_o);
    if (!w_ks.empty()) {
      for (const auto& row : spml::run_k_sweep(cfg, w_ks)) {
        std::cout << "k " << row.k << "  test_map " << row.test_map << '\n';
      }
    } else {
      std::vector<spml::LossMode> losses;
      for (const auto& l : w_losses) losses.push_back(spml::parse_loss_mode(l));
      for (const auto& row : spml::run_budget_sweep(cfg, w_fractions, losses)) {
        std::cout << spml::to_string(row.loss) << "  fraction " << row.fraction << "  labels "
                  << row.n_observed_labels << "  test_map " << row.test_map << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const spml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const spml::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const spml::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
