#include "rmesn/dataset.hpp"
#include "rmesn/error.hpp"
#include "rmesn/linalg.hpp"
#include "rmesn/model_io.hpp"
#include "rmesn/parallel.hpp"
#include "rmesn/pipeline.hpp"
#include "rmesn/reservoir.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace rmesn;

namespace {

PipelineConfig config_from(const py::object& obj) {
  if (obj.is_none()) return PipelineConfig{};
  if (py::isinstance<PipelineConfig>(obj)) return obj.cast<PipelineConfig>();
  PipelineConfig config;
  for (auto item : obj.cast<py::dict>()) {
    set_config_value(config, py::str(item.first).cast<std::string>(), py::str(item.second).cast<std::string>());
  }
  config.validate();
  return config;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["macro_f1"] = m.macro_f1;
  d["per_class_f1"] = m.per_class_f1;
  d["seconds"] = m.seconds;
  d["seed"] = m.seed;
  return d;
}

Dataset make_dataset(const std::vector<Matrix>& samples, const std::vector<int>& labels,
                     std::optional<std::size_t> num_classes) {
  Dataset ds;
  for (const auto& s : samples) ds.samples.emplace_back(s);
  ds.labels = labels;
  ds.feature_dim = samples.empty() ? 0 : static_cast<std::size_t>(samples.front().cols());
  std::size_t classes = 0;
  for (int y : labels) classes = std::max(classes, static_cast<std::size_t>(std::max(y, 0)) + 1);
  ds.num_classes = num_classes.value_or(classes);
  ds.validate();
  return ds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reservoir computing classifiers for multivariate time series";

  // Translators are tried newest first, so subclasses are registered after the base.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());

  m.def("set_num_threads", &set_num_threads, py::arg("threads"));
  m.def("num_threads", &num_threads);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("samples"), py::arg("labels"), py::arg("num_classes") = py::none(),
           "Build from a list of (T, F) arrays and integer labels.")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("feature_dim", [](const Dataset& d) { return d.feature_dim; })
      .def_property_readonly("num_classes", [](const Dataset& d) { return d.num_classes; })
      .def_property_readonly("t_max", &Dataset::t_max)
      .def_property_readonly("labels", [](const Dataset& d) { return d.labels; })
      .def_property_readonly("class_names", [](const Dataset& d) { return d.class_names; })
      .def_property_readonly("lengths",
                             [](const Dataset& d) {
                               std::vector<std::size_t> out;
                               for (const auto& s : d.samples) out.push_back(s.length);
                               return out;
                             })
      .def("sample", [](const Dataset& d, std::size_t i) {
        if (i >= d.size()) throw py::index_error("sample index out of range");
        return Matrix(d.samples[i].values.topRows(static_cast<Eigen::Index>(d.samples[i].length)));
      })
      .def("__len__", &Dataset::size)
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("load_dataset", [](const std::string& path) { return load_dataset(path); }, py::arg("path"));
  m.def("save_dataset", [](const Dataset& ds, const std::string& path) { save_dataset(ds, path); },
        py::arg("dataset"), py::arg("path"));
  m.def("import_ts", [](const std::string& path) { return import_ts(path); }, py::arg("path"));
  m.def(
      "generate_synthetic",
      [](std::size_t classes, std::size_t per_class, std::size_t length, std::size_t features, double noise,
         std::uint64_t seed) { return generate_synthetic({classes, per_class, length, features, noise, seed}); },
      py::arg("classes") = 2, py::arg("per_class") = 50, py::arg("length") = 100, py::arg("features") = 3,
      py::arg("noise") = 0.1, py::arg("seed") = 0);
  m.def(
      "split",
      [](const Dataset& ds, double fraction, std::uint64_t seed) { return split(ds, fraction, seed); },
      py::arg("dataset"), py::arg("fraction"), py::arg("seed") = 0);

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init([](const py::object& values) { return config_from(values); }), py::arg("values") = py::none(),
           "Defaults, optionally overridden by a dict of configuration keys.")
      .def_static("from_string",
                  [](const std::string& text) {
                    std::istringstream in(text);
                    return parse_config(in);
                  })
      .def("set",
           [](PipelineConfig& c, const std::string& key, const py::object& value) {
             set_config_value(c, key, py::str(value).cast<std::string>());
           })
      .def("validate", &PipelineConfig::validate)
      .def("with_seed", [](const PipelineConfig& c, std::uint64_t seed) { return with_seed(c, seed); })
      .def("__str__", &config_to_string)
      .def("__eq__", [](const PipelineConfig& a, const PipelineConfig& b) { return a == b; });

  py::class_<FittedModel>(m, "Model")
      .def_property_readonly("classes", [](const FittedModel& f) { return f.classes; })
      .def_property_readonly("feature_dim", [](const FittedModel& f) { return f.feature_dim; })
      .def_property_readonly("config", [](const FittedModel& f) { return f.config; })
      .def("predict", [](const FittedModel& f, const Dataset& ds) { return predict(f, ds); }, py::arg("dataset"))
      .def(
          "transform",
          [](const FittedModel& f, const Dataset& ds, bool training_noise) {
            return transform(f, ds, training_noise ? kTrainStreams : kTestStreams).vectors;
          },
          py::arg("dataset"), py::arg("training_noise") = false, "Representation matrix (N x dim).")
      .def("to_bytes",
           [](const FittedModel& f) {
             const auto bytes = serialize_model(f);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_static("from_bytes",
                  [](const py::bytes& b) {
                    const std::string s = b;
                    return deserialize_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def("save", [](const FittedModel& f, const std::string& path) { save_model(f, path); }, py::arg("path"));

  m.def("load_model", [](const std::string& path) { return load_model(path); }, py::arg("path"));
  m.def(
      "fit",
      [](const py::object& config, const Dataset& train) {
        const PipelineConfig c = config_from(config);
        py::gil_scoped_release release;
        return fit_model(c, train);
      },
      py::arg("config"), py::arg("train"));
  m.def(
      "compute_metrics",
      [](const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes) {
        return metrics_dict(compute_metrics(truth, predicted, classes));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("classes"));
  m.def(
      "run_pipeline",
      [](const py::object& config, const Dataset& train, const Dataset& test) {
        PipelineResult r;
        const PipelineConfig c = config_from(config);
        {
          py::gil_scoped_release release;
          r = run_pipeline(c, train, test);
        }
        py::dict d = metrics_dict(r.metrics);
        d["predictions"] = r.predictions;
        d["model_bytes"] = py::bytes(reinterpret_cast<const char*>(r.model_bytes.data()), r.model_bytes.size());
        return d;
      },
      py::arg("config"), py::arg("train"), py::arg("test"));
  m.def(
      "repeat_trials",
      [](const py::object& config, const Dataset& train, const Dataset& test, std::size_t runs) {
        TrialSummary s;
        const PipelineConfig c = config_from(config);
        {
          py::gil_scoped_release release;
          s = repeat_trials(c, train, test, runs);
        }
        py::dict d;
        py::list run_list;
        for (const auto& r : s.runs) run_list.append(metrics_dict(r));
        d["runs"] = run_list;
        d["mean_accuracy"] = s.mean_accuracy;
        d["std_accuracy"] = s.std_accuracy;
        d["mean_f1"] = s.mean_f1;
        d["std_f1"] = s.std_f1;
        d["mean_seconds"] = s.mean_seconds;
        d["std_seconds"] = s.std_seconds;
        return d;
      },
      py::arg("config"), py::arg("train"), py::arg("test"), py::arg("runs"));
  m.def(
      "crossval_d_sweep",
      [](const py::object& config, const Dataset& ds, const std::vector<std::size_t>& d_values, std::size_t k) {
        SweepResult r;
        const PipelineConfig c = config_from(config);
        {
          py::gil_scoped_release release;
          r = crossval_d_sweep(c, ds, d_values, k);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["components"] = row.components;
          d["mean_accuracy"] = row.mean_accuracy;
          d["std_accuracy"] = row.std_accuracy;
          d["seconds"] = row.seconds;
          d["encode_seconds"] = row.encode_seconds;
          rows.append(d);
        }
        return py::make_tuple(rows, r.folds);
      },
      py::arg("config"), py::arg("dataset"), py::arg("d_values"), py::arg("k"));

  // Numerical kernels.
  m.def(
      "ridge_solve",
      [](const Matrix& x, const Matrix& y, double lambda) {
        auto s = ridge_solve(x, y, lambda);
        return py::make_tuple(s.weights, s.bias);
      },
      py::arg("design"), py::arg("targets"), py::arg("lam"), "Returns (weights, bias).");
  m.def(
      "reservoir_states",
      [](const Matrix& inputs, std::size_t units, double spectral_radius, double connectivity, double input_scaling,
         double noise, std::uint64_t seed, bool bidirectional) {
        ReservoirConfig c{units, spectral_radius, connectivity, input_scaling, noise, seed, bidirectional};
        const Reservoir res = build_reservoir(c, static_cast<std::size_t>(inputs.cols()));
        return bidirectional ? run_states_bidirectional(res, inputs) : run_states(res, inputs);
      },
      py::arg("inputs"), py::arg("units") = 800, py::arg("spectral_radius") = 0.99, py::arg("connectivity") = 0.25,
      py::arg("input_scaling") = 0.15, py::arg("noise") = 0.01, py::arg("seed") = 0, py::arg("bidirectional") = false,
      "States of a freshly built reservoir driven by a (T, F) input.");
}
