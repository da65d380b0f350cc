// rmesn command line: dataset utilities, training, scoring and experiments.

#include "rmesn/dataset.hpp"
#include "rmesn/error.hpp"
#include "rmesn/model_io.hpp"
#include "rmesn/parallel.hpp"
#include "rmesn/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace rmesn;

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string out;
  std::vector<std::string> set;  // key=value overrides
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "Configuration file (key = value lines)");
    cmd->add_option("--set", c.set, "Override a configuration key, e.g. --set dimred.components=50");
  }
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--out", c.out, "Output file (default: stdout for tables)");
}

PipelineConfig resolve_config(const Common& c) {
  PipelineConfig config = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) config.seed = *c.seed;
  config.validate();
  return with_seed(config, config.seed);
}

/// Output stream for tables: the --out file or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InvalidInput("cannot write '" + path + "'");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::pair<Dataset, Dataset> resolve_data(const PipelineConfig& config, const std::string& train_flag,
                                         const std::string& test_flag, bool need_test) {
  const std::string train_path = train_flag.empty() ? config.train_path : train_flag;
  const std::string test_path = test_flag.empty() ? config.test_path : test_flag;
  if (!train_path.empty()) {
    Dataset train = load_dataset(train_path);
    Dataset test;
    if (!test_path.empty()) {
      test = load_dataset(test_path);
    } else if (need_test) {
      throw InvalidArgument("no test set given (--test or data.test)");
    }
    return {std::move(train), std::move(test)};
  }
  if (config.synthetic) {
    const Dataset all = generate_synthetic(*config.synthetic);
    if (!need_test) return {all, Dataset{}};
    // Every class must reach the training part; re-draw with the next seed otherwise.
    for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
      auto parts = split(all, config.split_fraction, config.synthetic->seed + attempt);
      std::vector<bool> seen(all.num_classes, false);
      for (int y : parts.first.labels) seen[static_cast<std::size_t>(y)] = true;
      if (std::find(seen.begin(), seen.end(), false) == seen.end()) return parts;
    }
    throw InvalidInput("could not draw a split containing every class");
  }
  throw InvalidArgument("no training data given (--train, data.train or data.synthetic)");
}

void write_metrics(std::ostream& out, const Metrics& m, const std::vector<std::string>& names) {
  out << "metric,value\n";
  out << "accuracy," << g6(m.accuracy) << '\n';
  out << "macro_f1," << g6(m.macro_f1) << '\n';
  for (std::size_t c = 0; c < m.per_class_f1.size(); ++c) {
    out << "f1_" << (c < names.size() ? names[c] : std::to_string(c)) << ',' << g6(m.per_class_f1[c]) << '\n';
  }
  out << "seconds," << g6(m.seconds) << '\n';
  out << "seed," << m.seed << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Reservoir model-space classification of multivariate time series"};
  app.require_subcommand(1);

  // synth
  Common synth_c;
  SyntheticSpec spec;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  add_common(synth, synth_c, false);
  synth->add_option("--classes", spec.classes, "Number of classes")->capture_default_str();
  synth->add_option("--per-class", spec.per_class, "Samples per class")->capture_default_str();
  synth->add_option("--length", spec.length, "Steps per sample")->capture_default_str();
  synth->add_option("--features", spec.features, "Variables per step")->capture_default_str();
  synth->add_option("--noise", spec.noise, "Gaussian noise std")->capture_default_str();

  // convert
  Common conv_c;
  std::string conv_in, conv_format = "auto", conv_layout = "dim", conv_label = "first";
  std::size_t conv_dims = 1;
  auto* conv = app.add_subcommand("convert", "Convert .ts or delimited exports to the native format");
  add_common(conv, conv_c, false);
  conv->add_option("input", conv_in, "Input file")->required();
  conv->add_option("--format", conv_format, "auto, ts or delimited")->check(CLI::IsMember({"auto", "ts", "delimited"}));
  conv->add_option("--dims", conv_dims, "Variables per sample (delimited)")->capture_default_str();
  conv->add_option("--layout", conv_layout, "time (x1 x2 .. per step) or dim (whole series per variable)")
      ->check(CLI::IsMember({"time", "dim"}));
  conv->add_option("--label", conv_label, "Label column: first or last")->check(CLI::IsMember({"first", "last"}));

  // fit
  Common fit_c;
  std::string fit_train;
  auto* fit = app.add_subcommand("fit", "Train a model and save it");
  add_common(fit, fit_c);
  fit->add_option("--train", fit_train, "Training set");

  // eval
  Common eval_c;
  std::string eval_model, eval_test, eval_pred;
  auto* eval = app.add_subcommand("eval", "Score a saved model on a labelled set");
  add_common(eval, eval_c, false);
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--test", eval_test, "Labelled dataset")->required();
  eval->add_option("--predictions", eval_pred, "Also write predicted labels (one per line)");

  // trials
  Common trials_c;
  std::string trials_train, trials_test;
  std::optional<std::size_t> trials_runs;
  auto* trials = app.add_subcommand("trials", "Repeat train/test over independent seeds");
  add_common(trials, trials_c);
  trials->add_option("--train", trials_train, "Training set");
  trials->add_option("--test", trials_test, "Test set");
  trials->add_option("--runs", trials_runs, "Number of seeds (default: config trials)");

  // dsweep
  Common sweep_c;
  std::string sweep_data, sweep_partition;
  std::vector<std::size_t> sweep_d;
  std::optional<std::size_t> sweep_k;
  auto* sweep = app.add_subcommand("dsweep", "Cross-validated accuracy and time versus D");
  add_common(sweep, sweep_c);
  sweep->add_option("--data", sweep_data, "Dataset (default: training set of the config)");
  sweep->add_option("--d", sweep_d, "Component counts (default: sweep.components)")->delimiter(',');
  sweep->add_option("--folds", sweep_k, "Number of folds (default: sweep.folds)");
  sweep->add_option("--partition", sweep_partition, "Write the fold partition (fold,index)");

  // repr
  Common repr_c;
  std::string repr_model, repr_data;
  auto* repr = app.add_subcommand("repr", "Export the representation matrix as CSV");
  add_common(repr, repr_c);
  repr->add_option("--model", repr_model, "Fitted model (otherwise fit on --data)");
  repr->add_option("--data", repr_data, "Dataset to represent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const auto apply_threads = [](const Common& c) { set_num_threads(c.threads); };

  if (*synth) {
    apply_threads(synth_c);
    if (synth_c.seed) spec.seed = *synth_c.seed;
    const Dataset ds = generate_synthetic(spec);
    if (synth_c.out.empty()) {
      write_dataset(ds, std::cout);
    } else {
      save_dataset(ds, synth_c.out);
    }
    return kOk;
  }

  if (*conv) {
    Dataset ds;
    const bool is_ts = conv_format == "ts" ||
                       (conv_format == "auto" && std::filesystem::path(conv_in).extension() == ".ts");
    if (is_ts) {
      ds = import_ts(conv_in);
    } else {
      DelimitedOptions opt;
      opt.dims = conv_dims;
      opt.layout = conv_layout == "time" ? DelimitedOptions::Layout::TimeMajor : DelimitedOptions::Layout::DimMajor;
      opt.label_column = conv_label == "first" ? DelimitedOptions::LabelColumn::First
                                               : DelimitedOptions::LabelColumn::Last;
      ds = import_delimited(conv_in, opt);
    }
    if (conv_c.out.empty()) {
      write_dataset(ds, std::cout);
    } else {
      save_dataset(ds, conv_c.out);
    }
    std::cerr << "converted " << ds.size() << " samples, " << ds.feature_dim << " variables, " << ds.num_classes
              << " classes, T_max " << ds.t_max() << '\n';
    return kOk;
  }

  if (*fit) {
    apply_threads(fit_c);
    if (fit_c.out.empty()) throw InvalidArgument("fit needs --out for the model file");
    const auto config = resolve_config(fit_c);
    const Dataset train = resolve_data(config, fit_train, "", false).first;
    const FittedModel model = fit_model(config, train);
    save_model(model, fit_c.out);
    std::cerr << "model written to " << fit_c.out << '\n';
    return kOk;
  }

  if (*eval) {
    apply_threads(eval_c);
    const FittedModel model = load_model(eval_model);
    const Dataset test = load_dataset(eval_test);
    const auto start = std::chrono::steady_clock::now();
    const auto predicted = predict(model, test);
    Metrics m = compute_metrics(test.labels, predicted, model.classes);
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.seed = model.config.seed;
    Sink sink(eval_c.out);
    write_metrics(sink.get(), m, model.class_names);
    if (!eval_pred.empty()) {
      std::ofstream p(eval_pred);
      if (!p) throw InvalidInput("cannot write '" + eval_pred + "'");
      for (int y : predicted) p << y << '\n';
    }
    return kOk;
  }

  if (*trials) {
    apply_threads(trials_c);
    const auto config = resolve_config(trials_c);
    const auto [train, test] = resolve_data(config, trials_train, trials_test, true);
    const auto summary = repeat_trials(config, train, test, trials_runs.value_or(config.trials));
    Sink sink(trials_c.out);
    auto& out = sink.get();
    out << "run,seed,accuracy,macro_f1,seconds\n";
    for (std::size_t i = 0; i < summary.runs.size(); ++i) {
      const auto& r = summary.runs[i];
      out << i << ',' << r.seed << ',' << g6(r.accuracy) << ',' << g6(r.macro_f1) << ',' << g6(r.seconds) << '\n';
    }
    out << "mean,," << g6(summary.mean_accuracy) << ',' << g6(summary.mean_f1) << ',' << g6(summary.mean_seconds)
        << '\n';
    out << "std,," << g6(summary.std_accuracy) << ',' << g6(summary.std_f1) << ',' << g6(summary.std_seconds) << '\n';
    return kOk;
  }

  if (*sweep) {
    apply_threads(sweep_c);
    const auto config = resolve_config(sweep_c);
    const Dataset ds = sweep_data.empty() ? resolve_data(config, "", "", false).first : load_dataset(sweep_data);
    const auto d_values = sweep_d.empty() ? config.sweep_components : sweep_d;
    const auto result = crossval_d_sweep(config, ds, d_values, sweep_k.value_or(config.folds));
    Sink sink(sweep_c.out);
    auto& out = sink.get();
    out << "components,mean_accuracy,std_accuracy,seconds,encode_seconds\n";
    for (const auto& row : result.rows) {
      out << row.components << ',' << g6(row.mean_accuracy) << ',' << g6(row.std_accuracy) << ','
          << g6(row.seconds) << ',' << g6(row.encode_seconds) << '\n';
    }
    if (!sweep_partition.empty()) {
      std::ofstream p(sweep_partition);
      if (!p) throw InvalidInput("cannot write '" + sweep_partition + "'");
      p << "fold,index\n";
      for (std::size_t f = 0; f < result.folds.size(); ++f) {
        for (auto i : result.folds[f]) p << f << ',' << i << '\n';
      }
    }
    return kOk;
  }

  if (*repr) {
    apply_threads(repr_c);
    Representation reps;
    Dataset ds;
    if (!repr_model.empty()) {
      const FittedModel model = load_model(repr_model);
      if (repr_data.empty()) throw InvalidArgument("repr with --model needs --data");
      ds = load_dataset(repr_data);
      reps = transform(model, ds);
    } else {
      const auto config = resolve_config(repr_c);
      ds = repr_data.empty() ? resolve_data(config, "", "", false).first : load_dataset(repr_data);
      const FittedModel model = fit_model(config, ds);
      reps = transform(model, ds, kTrainStreams);
    }
    Sink sink(repr_c.out);
    auto& out = sink.get();
    out << "label";
    for (std::size_t j = 0; j < reps.dim(); ++j) out << ",r" << j;
    out << '\n';
    for (std::size_t n = 0; n < reps.size(); ++n) {
      out << ds.labels[n];
      for (std::size_t j = 0; j < reps.dim(); ++j) {
        out << ',' << g6(reps.vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)));
      }
      out << '\n';
    }
    return kOk;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rmesn::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const rmesn::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const rmesn::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const rmesn::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
