#include "spml/experiment.hpp"

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "spml/errors.hpp"
#include "spml/io.hpp"
#include "spml/kestim.hpp"
#include "spml/model.hpp"

namespace spml {
namespace {

using json = nlohmann::json;

// Prefixes errors with the pipeline stage that raised them, keeping the type.
template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json train_to_json(const TrainConfig& t) {
  return {
      {"loss", std::string(to_string(t.loss_mode))},
      {"learning_rate", t.learning_rate},
      {"phi_lr_multiplier", t.phi_lr_multiplier},
      {"batch_size", t.batch_size},
      {"epochs", t.epochs},
      {"lambda", t.lambda},
      {"k", optional_number(t.k)},
      {"gamma", optional_number(t.loss_params.gamma)},
      {"eps", t.loss_params.eps},
      {"eps_p", t.loss_params.eps_p},
      {"eps_n", t.loss_params.eps_n},
      {"seed", t.seed},
  };
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void read_optional(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<double>();
  }
}

TrainConfig train_from_json(const json& j, TrainConfig t) {
  if (j.contains("loss")) t.loss_mode = parse_loss_mode(j.at("loss").get<std::string>());
  read_if(j, "learning_rate", t.learning_rate);
  read_if(j, "phi_lr_multiplier", t.phi_lr_multiplier);
  read_if(j, "batch_size", t.batch_size);
  read_if(j, "epochs", t.epochs);
  read_if(j, "lambda", t.lambda);
  read_optional(j, "k", t.k);
  read_optional(j, "gamma", t.loss_params.gamma);
  read_if(j, "eps", t.loss_params.eps);
  read_if(j, "eps_p", t.loss_params.eps_p);
  read_if(j, "eps_n", t.loss_params.eps_n);
  read_if(j, "seed", t.seed);
  return t;
}

json config_to_json_object(const ExperimentConfig& c, bool include_output) {
  json j;
  j["source"] = c.source;
  j["synthetic"] = {{"n", c.synthetic.n},       {"n_test", c.synthetic.n_test},
                    {"d", c.synthetic.d},       {"n_classes", c.synthetic.n_classes},
                    {"target_k", c.synthetic.target_k}, {"seed", c.synthetic.seed}};
  j["files"] = {{"train_features", c.files.train_features.string()},
                {"train_labels", c.files.train_labels.string()},
                {"test_features", c.files.test_features.string()},
                {"test_labels", c.files.test_labels.string()},
                {"observed_labels", c.files.observed_labels.string()},
                {"test_fraction", c.files.test_fraction}};
  j["corruption"] = std::string(to_string(c.corruption));
  j["corruption_seed"] = c.corruption_seed;
  j["val_fraction"] = c.val_fraction;
  j["split_seed"] = c.split_seed;
  j["train_fraction"] = c.train_fraction;
  j["subsample_seed"] = c.subsample_seed;
  j["train"] = train_to_json(c.train);
  if (c.grid) {
    j["grid"] = {{"learning_rates", c.grid->learning_rates},
                 {"batch_sizes", c.grid->batch_sizes},
                 {"lambdas", c.grid->lambdas}};
  } else {
    j["grid"] = nullptr;
  }
  j["eval"] = {{"histogram_bins", c.histogram_bins}, {"recovery", c.recovery}};
  if (include_output) j["output_dir"] = c.output_dir.string();
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t count_observed(const ObservedLabels& z) {
  std::size_t n = 0;
  for (auto v : z.values()) n += v != Obs::Unobserved;
  return n;
}

bool uses_full_labels(LossMode m) { return m == LossMode::BCE || m == LossMode::BCE_LS; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<HistogramRow>& rows) {
  std::ostringstream os;
  os << "epoch,bin_lo,bin_hi,mass\n";
  for (const auto& r : rows) {
    os << r.epoch << ',' << fmt(r.bin.lo) << ',' << fmt(r.bin.hi) << ',' << fmt(r.bin.mass) << '\n';
  }
  io::write_text(path, os.str());
}

void append_histogram(std::vector<HistogramRow>& out, std::size_t epoch,
                      const std::vector<HistogramBin>& bins) {
  for (const auto& b : bins) out.push_back({epoch, b});
}

bool has_unobserved_positive(const DatasetBundle& train) {
  if (!train.full_labels) return false;
  for (std::size_t i = 0; i < train.observed_labels.size(); ++i) {
    if (train.full_labels->values()[i] && train.observed_labels.values()[i] == Obs::Unobserved) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(Corruption c) {
  switch (c) {
    case Corruption::None: return "none";
    case Corruption::SinglePositive: return "single_positive";
    case Corruption::OnePosOneNeg: return "one_pos_one_neg";
    case Corruption::OnePosAllNeg: return "one_pos_all_neg";
  }
  return "unknown";
}

Corruption parse_corruption(std::string_view name) {
  for (auto c : {Corruption::None, Corruption::SinglePositive, Corruption::OnePosOneNeg,
                 Corruption::OnePosAllNeg}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown corruption mode: '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (source != "synthetic" && source != "files") {
    throw ConfigError("source must be 'synthetic' or 'files'");
  }
  if (source == "synthetic" && synthetic.n_test >= synthetic.n) {
    throw ConfigError("synthetic.n_test must be smaller than synthetic.n");
  }
  if (source == "files") {
    if (files.train_features.empty() || files.train_labels.empty()) {
      throw ConfigError("files.train_features and files.train_labels are required");
    }
    for (const auto* p : {&files.train_features, &files.train_labels, &files.test_features,
                          &files.test_labels, &files.observed_labels}) {
      if (!p->empty() && !std::filesystem::exists(*p)) {
        throw ConfigError("path does not exist: " + p->string());
      }
    }
    if (files.test_features.empty() != files.test_labels.empty()) {
      throw ConfigError("give both files.test_features and files.test_labels, or neither");
    }
  }
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1]");
  }
  if (histogram_bins < 2) throw ConfigError("eval.histogram_bins must be at least 2");
  train.validate();
}

std::string config_to_json(const ExperimentConfig& config) {
  return config_to_json_object(config, true).dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    read_if(j, "source", c.source);
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      read_if(s, "n", c.synthetic.n);
      read_if(s, "n_test", c.synthetic.n_test);
      read_if(s, "d", c.synthetic.d);
      read_if(s, "n_classes", c.synthetic.n_classes);
      read_if(s, "target_k", c.synthetic.target_k);
      read_if(s, "seed", c.synthetic.seed);
    }
    if (j.contains("files")) {
      const auto& f = j.at("files");
      std::string p;
      auto path = [&](const char* key, std::filesystem::path& out) {
        p.clear();
        read_if(f, key, p);
        out = p;
      };
      path("train_features", c.files.train_features);
      path("train_labels", c.files.train_labels);
      path("test_features", c.files.test_features);
      path("test_labels", c.files.test_labels);
      path("observed_labels", c.files.observed_labels);
      read_if(f, "test_fraction", c.files.test_fraction);
    }
    if (j.contains("corruption")) c.corruption = parse_corruption(j.at("corruption").get<std::string>());
    read_if(j, "corruption_seed", c.corruption_seed);
    read_if(j, "val_fraction", c.val_fraction);
    read_if(j, "split_seed", c.split_seed);
    read_if(j, "train_fraction", c.train_fraction);
    read_if(j, "subsample_seed", c.subsample_seed);
    if (j.contains("train")) c.train = train_from_json(j.at("train"), c.train);
    if (j.contains("grid") && !j.at("grid").is_null()) {
      HyperGrid g;
      const auto& gj = j.at("grid");
      read_if(gj, "learning_rates", g.learning_rates);
      read_if(gj, "batch_sizes", g.batch_sizes);
      read_if(gj, "lambdas", g.lambdas);
      c.grid = g;
    }
    if (j.contains("eval")) {
      read_if(j.at("eval"), "histogram_bins", c.histogram_bins);
      read_if(j.at("eval"), "recovery", c.recovery);
    }
    std::string out;
    read_if(j, "output_dir", out);
    c.output_dir = out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(text);
}

std::string config_hash(const ExperimentConfig& config) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0')
     << fnv1a(config_to_json_object(config, false).dump());
  return os.str();
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData data;
  DatasetBundle pool = stage("load", [&] {
    if (config.source == "synthetic") {
      const auto& s = config.synthetic;
      DatasetBundle all = synthesize_dataset(s.n, s.d, s.n_classes, s.target_k, s.seed);
      auto [rest, test] = random_partition(all.n_examples(), s.n_test, derive_seed(s.seed, 77));
      data.test = subset(all, test);
      return subset(all, rest);
    }
    DatasetBundle all = load_dataset(config.files.train_features, config.files.train_labels);
    if (!all.full_labels) throw DataError("training label file must hold full labels");
    if (!config.files.test_features.empty()) {
      data.test = load_dataset(config.files.test_features, config.files.test_labels);
      if (!data.test.full_labels) throw DataError("test label file must hold full labels");
      if (data.test.n_features() != all.n_features() || data.test.n_classes() != all.n_classes()) {
        throw DataError("test set shape differs from training set");
      }
    } else {
      const auto n_test = static_cast<std::size_t>(
          std::llround(config.files.test_fraction * static_cast<double>(all.n_examples())));
      if (n_test == 0 || n_test >= all.n_examples()) throw ConfigError("test split would be empty");
      auto [rest, test] = random_partition(all.n_examples(), n_test, derive_seed(config.split_seed, 77));
      data.test = subset(all, test);
      all = subset(all, rest);
    }
    return all;
  });
  data.test.split_tag = SplitTag::Test;
  data.test.observed_labels = observe_all(*data.test.full_labels);

  stage("corrupt", [&] {
    if (config.source == "files" && !config.files.observed_labels.empty()) {
      const auto raw = io::read_int_csv(config.files.observed_labels);
      if (config.files.test_features.empty()) {
        throw ConfigError("files.observed_labels requires explicit test files");
      }
      if (raw.rows() != pool.n_examples() || raw.cols() != pool.n_classes()) {
        throw DataError("observed label file shape does not match training labels");
      }
      ObservedLabels z(raw.rows(), raw.cols());
      for (std::size_t i = 0; i < raw.size(); ++i) {
        const int v = raw.values()[i];
        if (v < -1 || v > 1) throw DataError("observed label value outside {-1,0,1}");
        z.values()[i] = static_cast<Obs>(v);
      }
      check_consistent(z, *pool.full_labels);
      pool.observed_labels = std::move(z);
      return;
    }
    switch (config.corruption) {
      case Corruption::None:
        pool.observed_labels = observe_all(*pool.full_labels);
        break;
      case Corruption::SinglePositive:
        pool.observed_labels = corrupt_single_positive(*pool.full_labels, config.corruption_seed);
        break;
      case Corruption::OnePosOneNeg:
        pool.observed_labels =
            corrupt_partial(*pool.full_labels, PartialMode::OnePosOneNeg, config.corruption_seed);
        break;
      case Corruption::OnePosAllNeg:
        pool.observed_labels =
            corrupt_partial(*pool.full_labels, PartialMode::OnePosAllNeg, config.corruption_seed);
        break;
    }
  });

  stage("split", [&] {
    auto [train, val] = split_train_val(pool, config.val_fraction, config.split_seed);
    if (config.train_fraction < 1.0) {
      const auto keep = static_cast<std::size_t>(
          std::llround(config.train_fraction * static_cast<double>(train.n_examples())));
      if (keep == 0) throw ConfigError("train_fraction leaves no training examples");
      auto [dropped, kept] = random_partition(train.n_examples(), keep, config.subsample_seed);
      train = subset(train, kept);
    }
    data.train = std::move(train);
    data.val = std::move(val);
  });
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& input, std::size_t threads) {
  ExperimentConfig config = input;
  PreparedData data = prepare_data(config);
  ExperimentResult result;
  result.config_hash = config_hash(input);
  result.n_train = data.train.n_examples();
  result.n_observed_labels = uses_full_labels(config.train.loss_mode)
                                 ? data.train.n_examples() * data.train.n_classes()
                                 : count_observed(data.train.observed_labels);

  const bool write = !config.output_dir.empty();
  if (write) {
    std::filesystem::create_directories(config.output_dir / "checkpoints");
    io::write_text(config.output_dir / "config.json", config_to_json(input));
    Matrix<int> z(data.train.observed_labels.rows(), data.train.observed_labels.cols());
    for (std::size_t i = 0; i < z.size(); ++i) {
      z.values()[i] = static_cast<int>(data.train.observed_labels.values()[i]);
    }
    io::write_int_csv(config.output_dir / "observed_labels.csv", z);
  }

  if (config.grid) {
    GridResult grid = stage("grid", [&] {
      return grid_search(data.train, data.val, config.train, *config.grid, threads);
    });
    result.grid_points = grid.points;
    config.train = grid.best_config();
    if (write) {
      std::ostringstream os;
      os << "loss,learning_rate,batch_size,lambda,best_val_map,best_epoch\n";
      for (const auto& p : grid.points) {
        os << to_string(p.config.loss_mode) << ',' << fmt(p.config.learning_rate) << ','
           << p.config.batch_size << ',' << fmt(p.config.lambda) << ',' << fmt(p.best_val_map)
           << ',' << p.best_epoch << '\n';
      }
      io::write_text(config.output_dir / "grid.csv", os.str());
    }
  }
  result.selected = config.train;

  const bool histograms = has_unobserved_positive(data.train);
  EpochObserver observer = [&](const EpochMetrics& m, const TrainState& state) {
    if (!histograms) return;
    const auto preds = forward(state.model, data.train.features);
    append_histogram(result.histogram, m.epoch,
                     unobserved_positive_histogram(preds, *data.train.full_labels,
                                                   data.train.observed_labels,
                                                   config.histogram_bins));
    if (state.estimator) {
      MatrixD est = state.estimator->readout();
      append_histogram(result.histogram_estimator, m.epoch,
                       unobserved_positive_histogram(est, *data.train.full_labels,
                                                     data.train.observed_labels,
                                                     config.histogram_bins));
    }
  };
  FitResult fit = stage("train", [&] {
    return fit_with_validation(data.train, data.val, config.train, observer);
  });
  result.log = fit.log;
  result.best_epoch = fit.best_epoch;
  result.best_val_map = fit.best_val_map;
  result.k = fit.k;

  stage("evaluate", [&] {
    result.test = mean_average_precision(forward(fit.best_model, data.test.features),
                                         *data.test.full_labels);
    if (config.recovery && data.train.full_labels) {
      result.recovery_map =
          label_recovery_map(forward(fit.best_model, data.train.features), data.train.full_labels).map;
      if (fit.best_estimator) {
        result.recovery_map_estimator =
            label_recovery_map(fit.best_estimator->readout(), data.train.full_labels).map;
      }
    }
  });

  if (write) {
    stage("write", [&] {
      std::ostringstream metrics;
      metrics << "epoch,train_loss,val_map,wall_ms\n";
      for (const auto& m : fit.log) {
        metrics << m.epoch << ',' << fmt(m.train_loss) << ',' << fmt(m.val_map) << ','
                << fmt(m.wall_ms) << '\n';
      }
      io::write_text(config.output_dir / "metrics.csv", metrics.str());
      io::write_text(config.output_dir / "results.json", results_json(result));
      write_histogram_csv(config.output_dir / "histograms.csv", result.histogram);
      if (!result.histogram_estimator.empty()) {
        write_histogram_csv(config.output_dir / "histograms_estimator.csv",
                            result.histogram_estimator);
      }
      const json meta = {{"seed", config.train.seed},
                         {"epoch", fit.best_epoch},
                         {"loss", std::string(to_string(config.train.loss_mode))}};
      save_model(config.output_dir / "checkpoints" / "model", fit.best_model, meta.dump());
      if (fit.best_estimator) {
        io::write_binary_matrix(config.output_dir / "checkpoints" / "phi.bin",
                                fit.best_estimator->phi, meta.dump());
      }
    });
  }
  return result;
}

std::string results_json(const ExperimentResult& r) {
  json per_class = json::array();
  for (const auto& ap : r.test.per_class_ap) per_class.push_back(ap ? json(*ap) : json(nullptr));
  json j = {
      {"test_map", r.test.map},
      {"per_class_ap", per_class},
      {"excluded_classes", r.test.excluded_classes()},
      {"best_epoch", r.best_epoch},
      {"best_val_map", r.best_val_map},
      {"config_hash", r.config_hash},
      {"selected", train_to_json(r.selected)},
      {"k", r.k},
      {"n_train", r.n_train},
      {"n_observed_labels", r.n_observed_labels},
  };
  if (r.recovery_map) j["recovery_map"] = *r.recovery_map;
  if (r.recovery_map_estimator) j["recovery_map_estimator"] = *r.recovery_map_estimator;
  return j.dump(2) + "\n";
}

std::vector<SweepRow> run_budget_sweep(const ExperimentConfig& config,
                                       const std::vector<double>& fractions,
                                       const std::vector<LossMode>& losses) {
  if (fractions.empty() || losses.empty()) throw ConfigError("sweep: need fractions and losses");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sweep: fractions must lie in (0, 1]");
  }
  std::vector<SweepRow> rows;
  for (LossMode loss : losses) {
    for (double f : fractions) {
      ExperimentConfig c = config;
      c.train.loss_mode = loss;
      c.train_fraction = f;
      if (!config.output_dir.empty()) {
        std::ostringstream name;
        name << to_string(loss) << "_f" << fmt(f);
        c.output_dir = config.output_dir / "sweep" / name.str();
      }
      const ExperimentResult r = run_experiment(c);
      rows.push_back({loss, f, r.n_train, r.n_observed_labels, r.test.map});
    }
  }
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    std::ostringstream os;
    os << "loss,fraction,n_train,n_observed_labels,test_map\n";
    for (const auto& r : rows) {
      os << to_string(r.loss) << ',' << fmt(r.fraction) << ',' << r.n_train << ','
         << r.n_observed_labels << ',' << fmt(r.test_map) << '\n';
    }
    io::write_text(config.output_dir / "sweep.csv", os.str());
  }
  return rows;
}

std::vector<KSweepRow> run_k_sweep(const ExperimentConfig& config, const std::vector<double>& ks) {
  if (ks.empty()) throw ConfigError("k sweep: no k values");
  if (config.train.loss_mode != LossMode::EPR && config.train.loss_mode != LossMode::ROLE) {
    throw ConfigError("k sweep: loss must be epr or role");
  }
  std::vector<KSweepRow> rows;
  for (double k : ks) {
    ExperimentConfig c = config;
    c.train.k = k;
    if (!config.output_dir.empty()) c.output_dir = config.output_dir / "k_sweep" / ("k" + fmt(k));
    rows.push_back({k, run_experiment(c).test.map});
  }
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    std::ostringstream os;
    os << "k,test_map\n";
    for (const auto& r : rows) os << fmt(r.k) << ',' << fmt(r.test_map) << '\n';
    io::write_text(config.output_dir / "k_sweep.csv", os.str());
  }
  return rows;
}

}  // namespace spml
