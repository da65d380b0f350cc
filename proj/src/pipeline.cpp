#include "rmesn/pipeline.hpp"

#include "rmesn/error.hpp"
#include "rmesn/model_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace rmesn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Runs `body`, prefixing any library error with the stage name.
template <typename F>
decltype(auto) stage(const char* name, F&& body) {
  try {
    return body();
  } catch (Error& e) {
    e.add_context(name);
    throw;
  }
}

Dataset normalized(const FittedModel& m, const Dataset& ds) {
  if (ds.feature_dim != m.feature_dim) {
    throw InvalidArgument("dataset has " + std::to_string(ds.feature_dim) + " variables, model expects " +
                          std::to_string(m.feature_dim));
  }
  return m.normalization ? zscore_apply(ds, *m.normalization) : ds;
}

StateTensor encode(const FittedModel& m, const Dataset& inputs, std::uint64_t stream_base) {
  return stage("encode", [&] { return encode_dataset(*m.reservoir, inputs, stream_base); });
}

Representation represent(const FittedModel& m, const StateTensor& states, const Dataset& inputs) {
  const StateTensor* source = &states;
  StateTensor reduced;
  if (m.projection) {
    reduced = stage("dimred", [&] { return apply_projection(states, *m.projection); });
    source = &reduced;
  }
  return stage("representation", [&] {
    switch (m.config.representation) {
      case RepresentationKind::LastState: return last_state(*source);
      case RepresentationKind::OutputModel: return output_model(*source, inputs, m.config.model_lambda);
      case RepresentationKind::ReservoirModel:
        return source->bidirectional ? reservoir_model_bidirectional(*source, m.config.model_lambda)
                                     : reservoir_model(*source, m.config.model_lambda);
    }
    throw InvalidArgument("unknown representation");
  });
}

/// Fits projection, representation and readout on encoded training states.
void fit_head(FittedModel& m, const StateTensor& states, const Dataset& inputs) {
  m.projection.reset();
  if (m.config.uses_projection()) {
    const std::size_t d = m.config.dimred.components * (states.bidirectional ? 2 : 1);
    m.projection = stage("dimred", [&] {
      return fit_projection(states, d, m.config.dimred.mode, m.config.dimred.centered);
    });
  }
  const Representation reps = represent(m, states, inputs);
  stage("readout", [&] {
    if (m.config.readout == ReadoutKind::Ridge) {
      m.ridge = fit_ridge_classifier(reps, inputs.labels, m.classes, m.config.readout_lambda);
    } else {
      m.mlp = fit_mlp(reps, inputs.labels, m.classes, m.config.mlp);
    }
  });
}

std::vector<int> predict_head(const FittedModel& m, const StateTensor& states, const Dataset& inputs) {
  const Representation reps = represent(m, states, inputs);
  return stage("readout", [&] {
    return m.config.readout == ReadoutKind::Ridge ? predict_ridge(m.ridge, reps) : predict_mlp(m.mlp, reps);
  });
}

/// Model with everything up to the reservoir fitted.
FittedModel fit_encoder(const PipelineConfig& config, const Dataset& train) {
  stage("config", [&] { config.validate(); });
  stage("data", [&] {
    train.validate();
    if (train.size() == 0) throw InvalidInput("training set is empty");
  });
  FittedModel m;
  m.config = config;
  m.feature_dim = train.feature_dim;
  m.classes = train.num_classes;
  m.class_names = train.class_names;
  if (config.normalize) m.normalization = stage("normalize", [&] { return zscore_fit(train); });
  m.reservoir = stage("reservoir", [&] { return build_reservoir(config.reservoir, train.feature_dim); });
  return m;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(xs.size()));
  return out;
}

}  // namespace

FittedModel fit_model(const PipelineConfig& config, const Dataset& train) {
  FittedModel m = fit_encoder(config, train);
  const Dataset inputs = stage("normalize", [&] { return normalized(m, train); });
  const StateTensor states = encode(m, inputs, kTrainStreams);
  fit_head(m, states, inputs);
  return m;
}

Representation transform(const FittedModel& model, const Dataset& ds, std::uint64_t stream_base) {
  if (!model.reservoir) throw InvalidArgument("model has no reservoir");
  const Dataset inputs = stage("normalize", [&] { return normalized(model, ds); });
  return represent(model, encode(model, inputs, stream_base), inputs);
}

std::vector<int> predict(const FittedModel& model, const Dataset& ds) {
  if (!model.reservoir) throw InvalidArgument("model has no reservoir");
  const Dataset inputs = stage("normalize", [&] { return normalized(model, ds); });
  return predict_head(model, encode(model, inputs, kTestStreams), inputs);
}

Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) throw InvalidArgument("truth and prediction sizes differ");
  if (truth.empty()) throw InvalidInput("cannot score an empty set");
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw InvalidLabel("label outside [0, " + std::to_string(classes) + ")");
    }
    if (t == p) {
      ++correct;
      ++tp[static_cast<std::size_t>(t)];
    } else {
      ++fn[static_cast<std::size_t>(t)];
      ++fp[static_cast<std::size_t>(p)];
    }
  }
  Metrics out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  out.per_class_f1.assign(classes, 0.0);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    out.per_class_f1[c] = 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    sum += out.per_class_f1[c];
    ++present;
  }
  out.macro_f1 = sum / static_cast<double>(present);
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, const Dataset& train, const Dataset& test) {
  stage("data", [&] { test.validate(); });
  const auto start = Clock::now();
  const FittedModel model = fit_model(config, train);
  PipelineResult result;
  result.predictions = predict(model, test);
  const double elapsed = seconds_since(start);
  result.metrics = compute_metrics(test.labels, result.predictions, model.classes);
  result.metrics.seconds = elapsed;
  result.metrics.seed = config.seed;
  result.model_bytes = serialize_model(model);
  return result;
}

PipelineConfig with_seed(PipelineConfig config, std::uint64_t seed) {
  config.seed = seed;
  config.reservoir.seed = seed;
  config.mlp.seed = seed;
  return config;
}

TrialSummary repeat_trials(const PipelineConfig& config, const Dataset& train, const Dataset& test,
                           std::size_t n_runs) {
  if (n_runs < 1) throw InvalidArgument("repeat_trials needs at least one run");
  TrialSummary out;
  for (auto seed : config.trial_seeds(n_runs)) {
    out.runs.push_back(run_pipeline(with_seed(config, seed), train, test).metrics);
  }
  std::vector<double> acc, f1, secs;
  for (const auto& r : out.runs) {
    acc.push_back(r.accuracy);
    f1.push_back(r.macro_f1);
    secs.push_back(r.seconds);
  }
  const auto a = mean_std(acc), f = mean_std(f1), s = mean_std(secs);
  out.mean_accuracy = a.mean;
  out.std_accuracy = a.std;
  out.mean_f1 = f.mean;
  out.std_f1 = f.std;
  out.mean_seconds = s.mean;
  out.std_seconds = s.std;
  return out;
}

SweepResult crossval_d_sweep(const PipelineConfig& config, const Dataset& ds,
                             const std::vector<std::size_t>& d_values, std::size_t k) {
  if (d_values.empty()) throw InvalidArgument("d-sweep needs at least one component count");
  for (auto d : d_values) {
    if (d < 1 || d > config.reservoir.units) {
      throw InvalidArgument("component count " + std::to_string(d) + " outside [1, reservoir.units]");
    }
  }
  PipelineConfig base = with_seed(config, config.seed);
  base.dimred.enabled = true;
  base.dimred.components = d_values.front();
  SweepResult result;
  result.folds = stage("folds", [&] { return kfold_indices(ds.size(), k, config.seed); });

  std::vector<std::vector<double>> acc(d_values.size()), secs(d_values.size());
  std::vector<double> encode_secs;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train_idx.insert(train_idx.end(), result.folds[g].begin(), result.folds[g].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    const Dataset train = subset(ds, train_idx);
    const Dataset test = subset(ds, result.folds[f]);

    const auto enc_start = Clock::now();
    FittedModel m = fit_encoder(base, train);
    const Dataset train_in = normalized(m, train);
    const Dataset test_in = normalized(m, test);
    const StateTensor train_states = encode(m, train_in, kTrainStreams);
    const StateTensor test_states = encode(m, test_in, kTestStreams);
    encode_secs.push_back(seconds_since(enc_start));

    for (std::size_t i = 0; i < d_values.size(); ++i) {
      m.config.dimred.components = d_values[i];
      const auto start = Clock::now();
      fit_head(m, train_states, train_in);
      const auto predicted = predict_head(m, test_states, test_in);
      secs[i].push_back(seconds_since(start));
      acc[i].push_back(compute_metrics(test.labels, predicted, m.classes).accuracy);
    }
  }
  const double enc = mean_std(encode_secs).mean;
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    const auto a = mean_std(acc[i]);
    result.rows.push_back({d_values[i], a.mean, a.std, mean_std(secs[i]).mean, enc});
  }
  return result;
}

}  // namespace rmesn
