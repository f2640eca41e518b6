#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsf/filter/bsf_layer.hpp"
#include "bsf/net/network.hpp"
#include "bsf/net/train.hpp"
#include "bsf/pipeline/dataset.hpp"

namespace bsf::pipeline {

inline constexpr int kReportSchemaVersion = 1;

// Geometric grid lo, ..., hi with `points` entries (lo and hi included).
std::vector<double> geometric_grid(double lo, double hi, std::size_t points);
// Default penalty sweep: 1e-5 ... 1e-1, 9 points.
std::vector<double> default_lambda_grid();

// Settings shared by the three workflows.
struct ExperimentConfig {
  net::TrainConfig train;
  double tau = filter::kDefaultThreshold;
  std::size_t folds = 10;
  // Run only the first `fold_limit` folds (0 runs all of them).
  std::size_t fold_limit = 0;
  bool standardize = true;
  std::uint64_t seed = 0;
  filter::GradientEstimator estimator = filter::GradientEstimator::scaled;
  filter::MaskMode mask_mode = filter::MaskMode::per_batch;
  // Worker threads for independent folds / grid points.
  std::size_t threads = 1;

  std::size_t active_folds() const noexcept { return fold_limit == 0 ? folds : std::min(folds, fold_limit); }
  // Training seed of fold f; the same for the reference and the gated model.
  std::uint64_t fold_seed(std::size_t fold) const noexcept;
};

// ---------------------------------------------------------------------------
// Feature selection.

struct FeatureSelectionConfig {
  ExperimentConfig experiment;
  std::vector<double> lambdas{1e-2};
  std::vector<std::size_t> hidden{64};
  // Optional ground truth, used only for reporting precision / recall.
  std::optional<IndexList> informative;
};

struct SelectionFold {
  std::size_t fold = 0;
  bool failed = false;
  std::string diagnostic;
  double f1_ref = 0.0;
  double f1_fs = 0.0;
  double delta_f1 = 0.0;
  IndexList selected;
  std::vector<double> gate_values;
};

struct SelectionRun {
  double lambda = 0.0;
  std::vector<SelectionFold> folds;
  double mean_delta_f1 = 0.0;
  double mean_selected = 0.0;
  // Features selected in more than half of the successful folds.
  IndexList consensus;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct FeatureSelectionReport {
  FeatureSelectionConfig config;
  std::size_t rows = 0, features = 0, classes = 0;
  std::vector<SelectionRun> runs;
  double wall_time_seconds = 0.0;
};

/**
 * Per fold: train the reference network, train the same network behind an
 * input gate with penalty λ, keep the features whose gate passes, retrain the
 * reference architecture on those features and record ΔF1 = F1_fs − F1_ref on
 * the held-out fold. An empty selection marks the fold as failed.
 */
FeatureSelectionReport run_feature_selection(const Dataset& data, const FeatureSelectionConfig& config);

// Reference classifier: dense/ReLU stack with the given hidden widths.
net::Network make_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes);
// The same stack behind an input gate.
net::Network make_gated_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes,
                            const ExperimentConfig& experiment, double lambda);

// ---------------------------------------------------------------------------
// Structural pruning.

struct PruningConfig {
  ExperimentConfig experiment;
  std::vector<double> base_lambdas = default_lambda_grid();
  std::vector<std::size_t> hidden{256, 256};
};

struct PrunePoint {
  double base_lambda = 0.0;
  std::size_t fold = 0;
  bool failed = false;
  std::string diagnostic;
  double f1_ref = 0.0;
  double f1_pruned = 0.0;
  double delta_f1 = 0.0;
  double kept_fraction = 1.0;
  std::vector<std::size_t> kept_units;
};

struct PruneCurvePoint {
  double base_lambda = 0.0;
  std::size_t succeeded = 0;
  double mean_kept_fraction = 0.0;
  double mean_delta_f1 = 0.0;
};

struct PruningReport {
  PruningConfig config;
  std::size_t rows = 0, features = 0, classes = 0;
  std::vector<PrunePoint> points;
  std::vector<PruneCurvePoint> curve;
  // Grid steps where the mean kept fraction grew with λ by more than the
  // tolerance; up to one such step is treated as training noise.
  std::size_t monotonicity_violations = 0;
  double monotonicity_tolerance = 0.02;
  double wall_time_seconds = 0.0;
};

/**
 * Hidden layers are each followed by a gate with per-layer penalty
 * base_λ / width. For every grid value and fold: train, prune, evaluate the
 * pruned network as-is and compare with the gate-free reference.
 */
PruningReport run_pruning_experiment(const Dataset& data, const PruningConfig& config);

// Dense stack with a gate after every hidden ReLU.
net::Network make_prunable_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes,
                               const ExperimentConfig& experiment);

// ---------------------------------------------------------------------------
// Region selection.

struct RegionConfig {
  ExperimentConfig experiment;
  double lambda = 1e-2;
  std::vector<std::size_t> channels{8, 8};
  std::size_t kernel = 7;
  std::optional<std::vector<bool>> ground_truth;

  RegionConfig() { experiment.standardize = false; experiment.folds = 5; experiment.fold_limit = 1; }
};

struct Region {
  std::size_t start = 0;  // first position
  std::size_t end = 0;    // one past the last position
};

struct RegionReport {
  RegionConfig config;
  std::size_t rows = 0, length = 0, classes = 0;
  std::vector<double> gate_values;
  IndexList selected_positions;
  std::vector<Region> regions;
  std::optional<double> iou;
  double f1_test = 0.0;
  bool failed = false;
  std::string diagnostic;
  double wall_time_seconds = 0.0;
};

// Maximal runs of consecutive selected positions.
std::vector<Region> find_regions(const std::vector<bool>& selected);
double intersection_over_union(const std::vector<bool>& a, const std::vector<bool>& b);

/**
 * Convolutional stack with one gate per spatial position shared by every
 * channel, trained on the complement of the first fold and evaluated on it.
 * Samples are the rows of data.x, read as single-channel signals.
 */
RegionReport run_region_selection(const Dataset& data, const RegionConfig& config);

net::Network make_region_net(std::size_t length, const RegionConfig& config, std::size_t classes);

}  // namespace bsf::pipeline
