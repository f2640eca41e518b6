#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <string>

#include "bsf/core/error.hpp"
#include "bsf/filter/bsf_layer.hpp"
#include "bsf/lab/lab_run.hpp"
#include "bsf/lab/regression_lab.hpp"
#include "bsf/net/checkpoint.hpp"
#include "bsf/net/train.hpp"
#include "bsf/pipeline/dataset.hpp"
#include "bsf/pipeline/report.hpp"
#include "bsf/pipeline/synth.hpp"
#include "bsf/pipeline/workflows.hpp"
#include "bsf/prune/pruner.hpp"

namespace py = pybind11;
using namespace bsf;

namespace {

using InArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const InArray& a) {
  Tensor::Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::object to_python(const pipeline::Json& j) {
  return py::module_::import("json").attr("loads")(pipeline::dump(j));
}

std::vector<int> to_labels(const py::array_t<int, py::array::c_style | py::array::forcecast>& y) {
  if (y.ndim() != 1) throw ShapeError("labels must be one-dimensional");
  return {y.data(), y.data() + y.size()};
}

pipeline::Dataset make_dataset(const InArray& x, const py::array_t<int, py::array::c_style | py::array::forcecast>& y) {
  if (x.ndim() != 2) throw ShapeError("x must be two-dimensional");
  pipeline::Dataset d;
  d.x = to_tensor(x);
  d.y = to_labels(y);
  if (d.y.size() != d.rows()) throw ShapeError("x and y disagree on the number of rows");
  for (int label : d.y)
    if (label < 0) throw DomainError("labels must be non-negative");
  d.n_classes = d.y.empty() ? 0 : static_cast<std::size_t>(*std::max_element(d.y.begin(), d.y.end())) + 1;
  for (std::size_t j = 0; j < d.features(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t c = 0; c < d.n_classes; ++c) d.class_names.push_back(std::to_string(c));
  return d;
}

filter::BsfLayer make_layer(const std::vector<double>& p, double tau) {
  auto layer = filter::BsfLayer::make(filter::GroupMap::identity(p.size()), tau);
  layer.p = p;
  layer.validate();
  return layer;
}

}  // namespace

PYBIND11_MODULE(_bsfilter, m) {
  m.doc() = "Binary stochastic filters: gates, workflows and the regression lab";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<StructureError>(m, "StructureError", PyExc_RuntimeError);
  py::register_exception<DegenerateModelError>(m, "DegenerateModelError", PyExc_RuntimeError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.attr("DEFAULT_TAU") = filter::kDefaultThreshold;

  // Gate primitives on identity-grouped inputs.
  m.def(
      "forward_infer",
      [](const InArray& x, const std::vector<double>& p, double tau) {
        return to_array(filter::forward_infer(to_tensor(x), make_layer(p, tau)));
      },
      py::arg("x"), py::arg("p"), py::arg("tau") = filter::kDefaultThreshold);
  m.def(
      "forward_train",
      [](const InArray& x, const std::vector<double>& p, std::uint64_t seed, bool per_sample) {
        auto layer = make_layer(p, filter::kDefaultThreshold);
        if (per_sample) layer.mask_mode = filter::MaskMode::per_sample;
        RngStream rng(seed);
        auto out = filter::forward_train(to_tensor(x), layer, rng);
        Tensor r({out.mask.rows, out.mask.gates}, out.mask.r);
        return py::make_tuple(to_array(out.y), to_array(r));
      },
      py::arg("x"), py::arg("p"), py::arg("seed") = 0, py::arg("per_sample") = false,
      "Returns (y, r) with r of shape [1 or batch, gates].");

  // Regression lab.
  py::class_<lab::ObjectiveInstance>(m, "ObjectiveInstance")
      .def(py::init([](const InArray& x, const std::vector<double>& y, bool center) {
             return lab::ObjectiveInstance(to_tensor(x), y,
                                           center ? lab::Centering::center : lab::Centering::as_given);
           }),
           py::arg("x"), py::arg("y"), py::arg("center") = true)
      .def_static(
          "random",
          [](std::size_t n, std::size_t d, std::uint64_t seed) {
            RngStream rng(seed);
            return lab::ObjectiveInstance::random(n, d, rng);
          },
          py::arg("n"), py::arg("d"), py::arg("seed") = 0)
      .def_property_readonly("x", [](const lab::ObjectiveInstance& i) { return to_array(i.x()); })
      .def_property_readonly("y", &lab::ObjectiveInstance::y)
      .def_property_readonly("gamma", &lab::ObjectiveInstance::gamma);

  m.def(
      "analytic_objective",
      [](const lab::ObjectiveInstance& i, const std::vector<double>& w, const std::vector<double>& p, double lambda) {
        return lab::analytic_objective(i, w, p, lambda);
      },
      py::arg("instance"), py::arg("w"), py::arg("p"), py::arg("lam") = 0.0);
  m.def(
      "brute_force_objective",
      [](const lab::ObjectiveInstance& i, const std::vector<double>& w, const std::vector<double>& p, double lambda) {
        return lab::brute_force_objective(i, w, p, lambda);
      },
      py::arg("instance"), py::arg("w"), py::arg("p"), py::arg("lam") = 0.0);
  m.def(
      "monte_carlo_objective",
      [](const lab::ObjectiveInstance& i, const std::vector<double>& w, const std::vector<double>& p, double lambda,
         std::size_t draws, std::uint64_t seed) {
        RngStream rng(seed);
        const auto e = lab::monte_carlo_objective(i, w, p, lambda, draws, rng);
        return py::make_tuple(e.estimate, e.standard_error);
      },
      py::arg("instance"), py::arg("w"), py::arg("p"), py::arg("lam") = 0.0, py::arg("draws") = 100000,
      py::arg("seed") = 0, "Returns (estimate, standard_error).");
  m.def(
      "analytic_gradient_p",
      [](const lab::ObjectiveInstance& i, const std::vector<double>& w, const std::vector<double>& p, double lambda) {
        return lab::analytic_gradient_p(i, w, p, lambda);
      },
      py::arg("instance"), py::arg("w"), py::arg("p"), py::arg("lam") = 0.0);
  m.def(
      "run_lab",
      [](std::size_t rows, std::size_t features, double lambda, std::size_t draws, std::uint64_t seed) {
        lab::LabConfig cfg{rows, features, lambda, draws, seed};
        return to_python(pipeline::to_json(lab::run_lab(cfg)));
      },
      py::arg("rows") = 8, py::arg("features") = 6, py::arg("lam") = 0.0, py::arg("draws") = 200000,
      py::arg("seed") = 0);

  // Data.
  py::class_<pipeline::Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("x"), py::arg("y"))
      .def_property_readonly("x", [](const pipeline::Dataset& d) { return to_array(d.x); })
      .def_property_readonly("y", [](const pipeline::Dataset& d) { return py::array_t<int>(d.y.size(), d.y.data()); })
      .def_readonly("n_classes", &pipeline::Dataset::n_classes)
      .def_readonly("feature_names", &pipeline::Dataset::feature_names)
      .def_readonly("class_names", &pipeline::Dataset::class_names)
      .def_readonly("rejected_rows", &pipeline::Dataset::rejected_rows)
      .def_property_readonly("rows", &pipeline::Dataset::rows)
      .def_property_readonly("features", &pipeline::Dataset::features)
      .def("to_csv", [](const pipeline::Dataset& d) { return pipeline::to_csv(d); });

  m.def(
      "load_csv",
      [](const std::filesystem::path& path, const std::string& label_column) {
        return pipeline::load_csv(path, {label_column, ','});
      },
      py::arg("path"), py::arg("label_column") = "");
  m.def(
      "make_informative",
      [](std::size_t n, std::size_t d, std::size_t informative, double class_sep, std::size_t classes,
         std::uint64_t seed) {
        auto g = pipeline::make_informative_classification({n, d, informative, class_sep, classes, seed});
        return py::make_tuple(std::move(g.data), g.informative);
      },
      py::arg("n") = 1000, py::arg("d") = 20, py::arg("informative") = 5, py::arg("class_sep") = 3.0,
      py::arg("classes") = 2, py::arg("seed") = 0, "Returns (dataset, informative feature indices).");
  m.def(
      "make_spectra",
      [](std::size_t n, std::size_t length, std::size_t classes, double noise, std::uint64_t seed) {
        auto spec = pipeline::default_spectra_layout(length, classes);
        spec.n = n;
        spec.noise = noise;
        spec.seed = seed;
        auto g = pipeline::make_synthetic_spectra(spec);
        return py::make_tuple(std::move(g.data), g.region_mask);
      },
      py::arg("n") = 400, py::arg("length") = 256, py::arg("classes") = 2, py::arg("noise") = 0.05,
      py::arg("seed") = 0, "Returns (dataset, region mask).");

  // Configuration.
  py::enum_<net::OptimizerKind>(m, "Optimizer")
      .value("sgd", net::OptimizerKind::sgd)
      .value("adam", net::OptimizerKind::adam);
  py::enum_<filter::GradientEstimator>(m, "Estimator")
      .value("plain", filter::GradientEstimator::plain)
      .value("scaled", filter::GradientEstimator::scaled);
  py::enum_<filter::MaskMode>(m, "MaskMode")
      .value("per_batch", filter::MaskMode::per_batch)
      .value("per_sample", filter::MaskMode::per_sample);

  py::class_<net::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &net::TrainConfig::learning_rate)
      .def_readwrite("optimizer", &net::TrainConfig::optimizer)
      .def_readwrite("batch_size", &net::TrainConfig::batch_size)
      .def_readwrite("max_epochs", &net::TrainConfig::max_epochs)
      .def_readwrite("patience", &net::TrainConfig::patience)
      .def_readwrite("validation_fraction", &net::TrainConfig::validation_fraction)
      .def_readwrite("seed", &net::TrainConfig::seed);

  py::class_<pipeline::ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("train", &pipeline::ExperimentConfig::train)
      .def_readwrite("tau", &pipeline::ExperimentConfig::tau)
      .def_readwrite("folds", &pipeline::ExperimentConfig::folds)
      .def_readwrite("fold_limit", &pipeline::ExperimentConfig::fold_limit)
      .def_readwrite("standardize", &pipeline::ExperimentConfig::standardize)
      .def_readwrite("seed", &pipeline::ExperimentConfig::seed)
      .def_readwrite("estimator", &pipeline::ExperimentConfig::estimator)
      .def_readwrite("mask_mode", &pipeline::ExperimentConfig::mask_mode)
      .def_readwrite("threads", &pipeline::ExperimentConfig::threads);

  py::class_<pipeline::FeatureSelectionConfig>(m, "SelectionConfig")
      .def(py::init<>())
      .def_readwrite("experiment", &pipeline::FeatureSelectionConfig::experiment)
      .def_readwrite("lambdas", &pipeline::FeatureSelectionConfig::lambdas)
      .def_readwrite("hidden", &pipeline::FeatureSelectionConfig::hidden)
      .def_readwrite("informative", &pipeline::FeatureSelectionConfig::informative);

  py::class_<pipeline::PruningConfig>(m, "PruningConfig")
      .def(py::init<>())
      .def_readwrite("experiment", &pipeline::PruningConfig::experiment)
      .def_readwrite("base_lambdas", &pipeline::PruningConfig::base_lambdas)
      .def_readwrite("hidden", &pipeline::PruningConfig::hidden);

  py::class_<pipeline::RegionConfig>(m, "RegionConfig")
      .def(py::init<>())
      .def_readwrite("experiment", &pipeline::RegionConfig::experiment)
      .def_readwrite("lam", &pipeline::RegionConfig::lambda)
      .def_readwrite("channels", &pipeline::RegionConfig::channels)
      .def_readwrite("kernel", &pipeline::RegionConfig::kernel)
      .def_readwrite("ground_truth", &pipeline::RegionConfig::ground_truth);

  m.def("geometric_grid", &pipeline::geometric_grid, py::arg("lo"), py::arg("hi"), py::arg("points"));
  m.def("default_lambda_grid", &pipeline::default_lambda_grid);

  // Workflows return the same JSON reports as the command line tool, as dicts.
  m.def(
      "select_features",
      [](const pipeline::Dataset& d, const pipeline::FeatureSelectionConfig& cfg) {
        pipeline::FeatureSelectionReport r;
        {
          py::gil_scoped_release release;
          r = pipeline::run_feature_selection(d, cfg);
        }
        return to_python(pipeline::to_json(r));
      },
      py::arg("data"), py::arg("config"));
  m.def(
      "prune_sweep",
      [](const pipeline::Dataset& d, const pipeline::PruningConfig& cfg) {
        pipeline::PruningReport r;
        {
          py::gil_scoped_release release;
          r = pipeline::run_pruning_experiment(d, cfg);
        }
        return to_python(pipeline::to_json(r));
      },
      py::arg("data"), py::arg("config"));
  m.def(
      "select_regions",
      [](const pipeline::Dataset& d, const pipeline::RegionConfig& cfg) {
        pipeline::RegionReport r;
        {
          py::gil_scoped_release release;
          r = pipeline::run_region_selection(d, cfg);
        }
        return to_python(pipeline::to_json(r));
      },
      py::arg("data"), py::arg("config"));

  // Networks and checkpoints.
  py::class_<net::Network>(m, "Network")
      .def_static(
          "mlp",
          [](std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes, bool gated,
             std::uint64_t seed) {
            pipeline::ExperimentConfig ex;
            auto n = gated ? pipeline::make_prunable_mlp(inputs, hidden, classes, ex)
                           : pipeline::make_mlp(inputs, hidden, classes);
            n.init(seed);
            return n;
          },
          py::arg("inputs"), py::arg("hidden"), py::arg("classes"), py::arg("gated") = false, py::arg("seed") = 0,
          "Dense/ReLU stack; with gated=True every hidden layer is followed by a gate.")
      .def_static("from_checkpoint", &net::from_checkpoint_string, py::arg("text"))
      .def_static("load", py::overload_cast<const std::filesystem::path&>(&net::load_checkpoint), py::arg("path"))
      .def("to_checkpoint", [](const net::Network& n) { return net::to_checkpoint_string(n); })
      .def("save", [](const net::Network& n, const std::filesystem::path& p) { net::save_checkpoint(n, p); },
           py::arg("path"))
      .def("predict", [](const net::Network& n, const InArray& x) { return to_array(n.predict(to_tensor(x))); },
           py::arg("x"))
      .def("predict_labels", [](const net::Network& n, const InArray& x) {
        return net::predict_labels(n, to_tensor(x));
      })
      .def("set_penalties", [](net::Network& n, const std::vector<double>& l) { n.set_penalties(l); })
      .def("train",
           [](net::Network& n, const InArray& x, const std::vector<int>& y, const net::TrainConfig& cfg) {
             net::History h;
             {
               py::gil_scoped_release release;
               h = net::train(n, to_tensor(x), y, cfg);
             }
             py::dict out;
             out["epochs"] = h.epochs.size();
             out["best_epoch"] = h.best_epoch;
             out["best_validation_loss"] = h.best_validation_loss;
             out["stopped_early"] = h.stopped_early;
             return out;
           },
           py::arg("x"), py::arg("y"), py::arg("config"))
      .def_property_readonly("gate_indices", &net::Network::gate_indices)
      .def("gate_values", [](const net::Network& n, std::size_t i) { return n.gate_at(i).p; }, py::arg("layer"))
      .def("set_gate_values",
           [](net::Network& n, std::size_t i, const std::vector<double>& p) {
             auto& g = n.gate_at(i);
             if (p.size() != g.p.size()) throw ShapeError("gate count mismatch");
             g.p = p;
             g.validate();
           },
           py::arg("layer"), py::arg("p"))
      .def_property_readonly("weight_count", &net::Network::weight_count)
      .def_property_readonly("input_shape", &net::Network::input_shape)
      .def_property_readonly("output_shape", &net::Network::output_shape)
      .def("__len__", &net::Network::size)
      .def("__eq__", [](const net::Network& a, const net::Network& b) { return a == b; });

  m.def(
      "prune",
      [](const net::Network& n) {
        auto result = prune::prune(n);
        return py::make_tuple(std::move(result.pruned), to_python(pipeline::to_json(result.report)));
      },
      py::arg("network"), "Returns (pruned network, report dict).");
}
