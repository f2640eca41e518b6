#include "bsf/pipeline/report.hpp"

#include <cstdio>
#include <fstream>

#include "bsf/core/error.hpp"

namespace bsf::pipeline {
namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json header(const char* workflow) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["workflow"] = workflow;
  return j;
}

Json optional_real(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json dataset_json(std::size_t rows, std::size_t features, std::size_t classes) {
  return Json{{"rows", rows}, {"features", features}, {"classes", classes}};
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  const auto& t = c.train;
  Json train{
      {"optimizer", t.optimizer == net::OptimizerKind::adam ? "adam" : "sgd"},
      {"learning_rate", t.learning_rate},
      {"beta1", t.beta1},
      {"beta2", t.beta2},
      {"epsilon", t.epsilon},
      {"batch_size", t.batch_size},
      {"max_epochs", t.max_epochs},
      {"patience", t.patience},
      {"validation_fraction", t.validation_fraction},
  };
  return Json{
      {"tau", c.tau},
      {"folds", c.folds},
      {"folds_run", c.active_folds()},
      {"standardize", c.standardize},
      {"seed", c.seed},
      {"estimator", c.estimator == filter::GradientEstimator::scaled ? "scaled" : "plain"},
      {"mask_mode", c.mask_mode == filter::MaskMode::per_batch ? "per_batch" : "per_sample"},
      {"f1_average", "macro"},
      {"train", train},
  };
}

Json to_json(const FeatureSelectionReport& r) {
  Json j = header("select");
  Json config = to_json(r.config.experiment);
  config["lambdas"] = r.config.lambdas;
  config["hidden"] = r.config.hidden;
  j["config"] = config;
  Json dataset = dataset_json(r.rows, r.features, r.classes);
  dataset["informative"] = r.config.informative ? Json(*r.config.informative) : Json(nullptr);
  j["dataset"] = dataset;
  Json runs = Json::array();
  for (const auto& run : r.runs) {
    Json folds = Json::array();
    for (const auto& f : run.folds) {
      folds.push_back(Json{
          {"fold", f.fold},
          {"failed", f.failed},
          {"diagnostic", f.diagnostic},
          {"f1_ref", f.f1_ref},
          {"f1_fs", f.f1_fs},
          {"delta_f1", f.delta_f1},
          {"selected_indices", f.selected},
          {"gate_values", f.gate_values},
      });
    }
    runs.push_back(Json{
        {"lambda", run.lambda},
        {"mean_delta_f1", run.mean_delta_f1},
        {"mean_selected", run.mean_selected},
        {"consensus_indices", run.consensus},
        {"precision", optional_real(run.precision)},
        {"recall", optional_real(run.recall)},
        {"folds", folds},
    });
  }
  j["results"] = Json{{"runs", runs}};
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

Json to_json(const PruningReport& r) {
  Json j = header("prune");
  Json config = to_json(r.config.experiment);
  config["base_lambdas"] = r.config.base_lambdas;
  config["hidden"] = r.config.hidden;
  j["config"] = config;
  j["dataset"] = dataset_json(r.rows, r.features, r.classes);
  Json points = Json::array();
  for (const auto& p : r.points) {
    points.push_back(Json{
        {"base_lambda", p.base_lambda},
        {"fold", p.fold},
        {"failed", p.failed},
        {"diagnostic", p.diagnostic},
        {"f1_ref", p.f1_ref},
        {"f1_pruned", p.f1_pruned},
        {"delta_f1", p.delta_f1},
        {"kept_fraction", p.kept_fraction},
        {"kept_units", p.kept_units},
    });
  }
  Json curve = Json::array();
  for (const auto& c : r.curve) {
    curve.push_back(Json{
        {"base_lambda", c.base_lambda},
        {"succeeded", c.succeeded},
        {"mean_kept_fraction", c.mean_kept_fraction},
        {"mean_delta_f1", c.mean_delta_f1},
    });
  }
  j["results"] = Json{
      {"points", points},
      {"curve", curve},
      {"monotonicity",
       Json{{"violations", r.monotonicity_violations},
            {"tolerance", r.monotonicity_tolerance},
            {"allowed_violations", 1},
            {"note", "a violation is a grid step where the mean kept fraction rises by more than the tolerance"}}},
  };
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

Json to_json(const RegionReport& r) {
  Json j = header("regions");
  Json config = to_json(r.config.experiment);
  config["lambda"] = r.config.lambda;
  config["channels"] = r.config.channels;
  config["kernel"] = r.config.kernel;
  j["config"] = config;
  Json dataset = dataset_json(r.rows, r.length, r.classes);
  dataset["length"] = r.length;
  j["dataset"] = dataset;
  Json regions = Json::array();
  for (const auto& reg : r.regions) regions.push_back(Json{{"start", reg.start}, {"end", reg.end}});
  j["results"] = Json{
      {"failed", r.failed},
      {"diagnostic", r.diagnostic},
      {"f1_test", r.f1_test},
      {"iou", optional_real(r.iou)},
      {"selected_positions", r.selected_positions},
      {"regions", regions},
      {"gate_values", r.gate_values},
  };
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

Json to_json(const lab::LabRecord& r) {
  Json j = header("lab");
  j["config"] = Json{{"rows", r.config.rows},
                     {"features", r.config.features},
                     {"lambda", r.config.lambda},
                     {"draws", r.config.draws},
                     {"seed", r.config.seed}};
  j["results"] = Json{
      {"analytic", r.analytic},
      {"brute_force", optional_real(r.brute_force)},
      {"monte_carlo", r.monte_carlo},
      {"stderr", r.standard_error},
      {"max_discrepancy", r.max_discrepancy},
      {"monte_carlo_z", r.monte_carlo_z},
      {"w", r.w},
      {"p", r.p},
  };
  return j;
}

Json to_json(const prune::PruneReport& r) {
  Json j = header("prune_checkpoint");
  Json gates = Json::array();
  for (const auto& g : r.gates) {
    gates.push_back(Json{{"layer", g.layer},
                         {"kept_units", g.kept_units},
                         {"total_units", g.total_units},
                         {"gate_values", g.gate_values}});
  }
  j["results"] = Json{
      {"gates", gates},
      {"original_weights", r.original_weights},
      {"kept_weights", r.kept_weights},
      {"weights_kept_fraction", r.weights_kept_fraction},
      {"input_shape", r.original_input_shape},
      {"input_channels_kept", r.input_channels_kept},
  };
  return j;
}

std::string plot_csv(const FeatureSelectionReport& r) {
  std::string out = "lambda,fold,feature,gate_value\n";
  for (const auto& run : r.runs)
    for (const auto& f : run.folds)
      for (std::size_t i = 0; i < f.gate_values.size(); ++i)
        out += real(run.lambda) + ',' + std::to_string(f.fold) + ',' + std::to_string(i) + ',' +
               real(f.gate_values[i]) + '\n';
  return out;
}

std::string plot_csv(const PruningReport& r) {
  std::string out = "kept_fraction,delta_f1,base_lambda,fold\n";
  for (const auto& p : r.points)
    if (!p.failed)
      out += real(p.kept_fraction) + ',' + real(p.delta_f1) + ',' + real(p.base_lambda) + ',' +
             std::to_string(p.fold) + '\n';
  return out;
}

std::string plot_csv(const RegionReport& r) {
  std::vector<bool> selected(r.gate_values.size(), false);
  for (std::size_t i : r.selected_positions) selected[i] = true;
  std::string out = "position,gate_value,selected,ground_truth\n";
  for (std::size_t i = 0; i < r.gate_values.size(); ++i) {
    std::string truth;
    if (r.config.ground_truth && i < r.config.ground_truth->size()) truth = (*r.config.ground_truth)[i] ? "1" : "0";
    out += std::to_string(i) + ',' + real(r.gate_values[i]) + ',' + (selected[i] ? "1" : "0") + ',' + truth + '\n';
  }
  return out;
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << text;
  if (!os) throw InputError("failed writing " + path.string());
}

}  // namespace bsf::pipeline
