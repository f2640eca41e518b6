#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bsf/lab/lab_run.hpp"
#include "bsf/prune/pruner.hpp"
#include "bsf/pipeline/workflows.hpp"

namespace bsf::pipeline {

using Json = nlohmann::ordered_json;

// Every report is an object with `schema_version`, `workflow`, `config`,
// `dataset` (where applicable), `results` and `wall_time_seconds`. The
// timing field is the only one that may differ between identical runs.
Json to_json(const ExperimentConfig& config);
Json to_json(const FeatureSelectionReport& report);
Json to_json(const PruningReport& report);
Json to_json(const RegionReport& report);
Json to_json(const lab::LabRecord& record);
Json to_json(const prune::PruneReport& report);

// Plot data, one CSV per workflow:
//   selection: lambda,fold,feature,gate_value
//   pruning:   kept_fraction,delta_f1,base_lambda,fold   (successful points only)
//   regions:   position,gate_value,selected,ground_truth
std::string plot_csv(const FeatureSelectionReport& report);
std::string plot_csv(const PruningReport& report);
std::string plot_csv(const RegionReport& report);

// Serialized with two-space indentation and a trailing newline.
std::string dump(const Json& json);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace bsf::pipeline
