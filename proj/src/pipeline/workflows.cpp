#include "bsf/pipeline/workflows.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

#include "bsf/core/error.hpp"
#include "bsf/pipeline/metrics.hpp"
#include "bsf/prune/pruner.hpp"

namespace bsf::pipeline {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs task(i) for i in [0, n). Tasks write to disjoint slots, so results do
// not depend on the thread count.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct FoldData {
  Tensor x_train, x_test;
  std::vector<int> y_train, y_test;
};

FoldData make_fold(const Dataset& data, const IndexList& test, bool standardize) {
  const IndexList train = complement(test, data.rows());
  FoldData f;
  if (standardize) {
    const Standardizer s = Standardizer::fit(data.x, train);
    f.x_train = s.apply(take_rows(data.x, train));
    f.x_test = s.apply(take_rows(data.x, test));
  } else {
    f.x_train = take_rows(data.x, train);
    f.x_test = take_rows(data.x, test);
  }
  for (std::size_t i : train) f.y_train.push_back(data.y[i]);
  for (std::size_t i : test) f.y_test.push_back(data.y[i]);
  return f;
}

net::TrainConfig fold_train_config(const ExperimentConfig& ex, std::size_t fold) {
  net::TrainConfig cfg = ex.train;
  cfg.seed = ex.fold_seed(fold);
  cfg.record_gates = false;
  return cfg;
}

double fit_and_score(net::Network& model, const Tensor& x_train, const std::vector<int>& y_train,
                     const Tensor& x_test, const std::vector<int>& y_test, std::size_t classes,
                     const net::TrainConfig& cfg) {
  model.init(cfg.seed);
  net::train(model, x_train, y_train, cfg);
  return macro_f1(y_test, net::predict_labels(model, x_test), classes);
}

void check_dataset(const Dataset& data, const ExperimentConfig& ex) {
  if (data.rows() == 0) throw InputError("dataset is empty");
  if (data.n_classes < 2) throw InputError("need at least two classes");
  if (!(ex.tau > 0.0 && ex.tau < 1.0)) throw InputError("threshold must lie in (0, 1)");
}

filter::BsfLayer configured_gate(filter::GroupMap groups, const ExperimentConfig& ex, double lambda) {
  auto layer = filter::BsfLayer::make(std::move(groups), ex.tau, lambda);
  layer.estimator = ex.estimator;
  layer.mask_mode = ex.mask_mode;
  return layer;
}

}  // namespace

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0 && hi >= lo) || points == 0) throw InputError("geometric grid needs 0 < lo <= hi and points > 0");
  if (points == 1) return {lo};
  std::vector<double> grid(points);
  const double ratio = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo * std::exp(ratio * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

std::vector<double> default_lambda_grid() { return geometric_grid(1e-5, 1e-1, 9); }

std::uint64_t ExperimentConfig::fold_seed(std::size_t fold) const noexcept {
  return RngStream(seed, 0xF5EED).split(fold).next_u64();
}

net::Network make_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes) {
  net::Network model({inputs});
  std::size_t width = inputs;
  for (std::size_t h : hidden) {
    model.dense(width, h).relu();
    width = h;
  }
  model.dense(width, classes);
  return model;
}

net::Network make_gated_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes,
                            const ExperimentConfig& experiment, double lambda) {
  net::Network model({inputs});
  model.add(net::Gate(configured_gate(filter::GroupMap::identity(inputs), experiment, lambda)));
  std::size_t width = inputs;
  for (std::size_t h : hidden) {
    model.dense(width, h).relu();
    width = h;
  }
  model.dense(width, classes);
  return model;
}

net::Network make_prunable_mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes,
                               const ExperimentConfig& experiment) {
  net::Network model({inputs});
  std::size_t width = inputs;
  for (std::size_t h : hidden) {
    model.dense(width, h).relu();
    model.add(net::Gate(configured_gate(filter::GroupMap::identity(h), experiment, 0.0)));
    width = h;
  }
  model.dense(width, classes);
  return model;
}

FeatureSelectionReport run_feature_selection(const Dataset& data, const FeatureSelectionConfig& config) {
  const auto start = Clock::now();
  const ExperimentConfig& ex = config.experiment;
  check_dataset(data, ex);
  if (config.lambdas.empty()) throw InputError("no penalty coefficient given");
  const auto folds = stratified_kfold(data, ex.folds, ex.seed);
  const std::size_t n_folds = ex.active_folds();
  const std::size_t d = data.features();

  // results[fold][lambda]
  std::vector<std::vector<SelectionFold>> results(n_folds, std::vector<SelectionFold>(config.lambdas.size()));
  parallel_for(n_folds, ex.threads, [&](std::size_t f) {
    const FoldData fd = make_fold(data, folds[f], ex.standardize);
    const net::TrainConfig cfg = fold_train_config(ex, f);
    net::Network reference = make_mlp(d, config.hidden, data.n_classes);
    const double f1_ref = fit_and_score(reference, fd.x_train, fd.y_train, fd.x_test, fd.y_test, data.n_classes, cfg);
    for (std::size_t li = 0; li < config.lambdas.size(); ++li) {
      SelectionFold& out = results[f][li];
      out.fold = f;
      out.f1_ref = f1_ref;
      net::Network gated = make_gated_mlp(d, config.hidden, data.n_classes, ex, config.lambdas[li]);
      gated.init(cfg.seed);
      net::train(gated, fd.x_train, fd.y_train, cfg);
      const auto& gate = gated.gate_at(0);
      out.gate_values = gate.p;
      out.selected = filter::selected_indices(gate);
      if (out.selected.empty()) {
        out.failed = true;
        out.diagnostic = "no feature passed the threshold; the penalty is too large";
        continue;
      }
      net::Network refit = make_mlp(out.selected.size(), config.hidden, data.n_classes);
      out.f1_fs = fit_and_score(refit, take_columns(fd.x_train, out.selected), fd.y_train,
                                take_columns(fd.x_test, out.selected), fd.y_test, data.n_classes, cfg);
      out.delta_f1 = out.f1_fs - out.f1_ref;
    }
  });

  FeatureSelectionReport report;
  report.config = config;
  report.rows = data.rows();
  report.features = d;
  report.classes = data.n_classes;
  for (std::size_t li = 0; li < config.lambdas.size(); ++li) {
    SelectionRun run;
    run.lambda = config.lambdas[li];
    std::vector<std::size_t> votes(d, 0);
    std::size_t ok = 0;
    for (std::size_t f = 0; f < n_folds; ++f) {
      const SelectionFold& sf = results[f][li];
      run.folds.push_back(sf);
      if (sf.failed) continue;
      ++ok;
      run.mean_delta_f1 += sf.delta_f1;
      run.mean_selected += static_cast<double>(sf.selected.size());
      for (std::size_t j : sf.selected) ++votes[j];
    }
    if (ok) {
      run.mean_delta_f1 /= static_cast<double>(ok);
      run.mean_selected /= static_cast<double>(ok);
    }
    for (std::size_t j = 0; j < d; ++j)
      if (ok && 2 * votes[j] > ok) run.consensus.push_back(j);
    if (config.informative) {
      const auto& truth = *config.informative;
      std::size_t hit = 0;
      for (std::size_t j : run.consensus) hit += std::binary_search(truth.begin(), truth.end(), j);
      run.precision = run.consensus.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(run.consensus.size());
      run.recall = truth.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(truth.size());
    }
    report.runs.push_back(std::move(run));
  }
  report.wall_time_seconds = seconds_since(start);
  return report;
}

PruningReport run_pruning_experiment(const Dataset& data, const PruningConfig& config) {
  const auto start = Clock::now();
  const ExperimentConfig& ex = config.experiment;
  check_dataset(data, ex);
  if (config.hidden.empty()) throw InputError("pruning needs at least one hidden layer");
  if (config.base_lambdas.empty()) throw InputError("empty penalty grid");
  const auto folds = stratified_kfold(data, ex.folds, ex.seed);
  const std::size_t n_folds = ex.active_folds();
  const std::size_t n_grid = config.base_lambdas.size();
  const std::size_t d = data.features();

  std::vector<double> f1_ref(n_folds);
  std::vector<FoldData> fold_data(n_folds);
  parallel_for(n_folds, ex.threads, [&](std::size_t f) {
    fold_data[f] = make_fold(data, folds[f], ex.standardize);
    net::Network reference = make_mlp(d, config.hidden, data.n_classes);
    f1_ref[f] = fit_and_score(reference, fold_data[f].x_train, fold_data[f].y_train, fold_data[f].x_test,
                              fold_data[f].y_test, data.n_classes, fold_train_config(ex, f));
  });

  std::vector<PrunePoint> points(n_grid * n_folds);
  parallel_for(points.size(), ex.threads, [&](std::size_t task) {
    const std::size_t li = task / n_folds, f = task % n_folds;
    PrunePoint& pt = points[task];
    pt.base_lambda = config.base_lambdas[li];
    pt.fold = f;
    pt.f1_ref = f1_ref[f];
    const FoldData& fd = fold_data[f];
    const net::TrainConfig cfg = fold_train_config(ex, f);
    net::Network model = make_prunable_mlp(d, config.hidden, data.n_classes, ex);
    const auto lambdas = prune::normalized_penalties(model, pt.base_lambda);
    model.set_penalties(lambdas);
    model.init(cfg.seed);
    net::train(model, fd.x_train, fd.y_train, cfg);
    try {
      auto [pruned, rep] = prune::prune(model);
      pt.kept_fraction = rep.weights_kept_fraction;
      for (const auto& g : rep.gates) pt.kept_units.push_back(g.kept_units);
      const auto pred = net::predict_labels(pruned, prune::restrict_input(fd.x_test, rep));
      pt.f1_pruned = macro_f1(fd.y_test, pred, data.n_classes);
      pt.delta_f1 = pt.f1_pruned - pt.f1_ref;
    } catch (const DegenerateModelError& e) {
      pt.failed = true;
      pt.diagnostic = e.what();
      pt.kept_fraction = 0.0;
    }
  });

  PruningReport report;
  report.config = config;
  report.rows = data.rows();
  report.features = d;
  report.classes = data.n_classes;
  report.points = points;
  for (std::size_t li = 0; li < n_grid; ++li) {
    PruneCurvePoint cp;
    cp.base_lambda = config.base_lambdas[li];
    for (std::size_t f = 0; f < n_folds; ++f) {
      const PrunePoint& pt = points[li * n_folds + f];
      if (pt.failed) continue;
      ++cp.succeeded;
      cp.mean_kept_fraction += pt.kept_fraction;
      cp.mean_delta_f1 += pt.delta_f1;
    }
    if (cp.succeeded) {
      cp.mean_kept_fraction /= static_cast<double>(cp.succeeded);
      cp.mean_delta_f1 /= static_cast<double>(cp.succeeded);
    }
    report.curve.push_back(cp);
  }
  std::vector<PruneCurvePoint> ordered;
  for (const auto& cp : report.curve)
    if (cp.succeeded) ordered.push_back(cp);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.base_lambda < b.base_lambda; });
  for (std::size_t i = 1; i < ordered.size(); ++i)
    if (ordered[i].mean_kept_fraction > ordered[i - 1].mean_kept_fraction + report.monotonicity_tolerance)
      ++report.monotonicity_violations;
  report.wall_time_seconds = seconds_since(start);
  return report;
}

std::vector<Region> find_regions(const std::vector<bool>& selected) {
  std::vector<Region> regions;
  for (std::size_t i = 0; i < selected.size();) {
    if (!selected[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < selected.size() && selected[j]) ++j;
    regions.push_back({i, j});
    i = j;
  }
  return regions;
}

double intersection_over_union(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) throw ShapeError("IoU of masks with different lengths");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

net::Network make_region_net(std::size_t length, const RegionConfig& config, std::size_t classes) {
  if (config.channels.empty()) throw InputError("region network needs at least one conv layer");
  net::Network model({1, length});
  std::size_t in = 1;
  for (std::size_t c : config.channels) {
    model.conv1d(in, c, config.kernel).relu();
    in = c;
  }
  model.add(net::Gate(configured_gate(filter::GroupMap::shared_across_channels(in, length), config.experiment,
                                      config.lambda)));
  model.flatten().dense(in * length, classes);
  return model;
}

RegionReport run_region_selection(const Dataset& data, const RegionConfig& config) {
  const auto start = Clock::now();
  const ExperimentConfig& ex = config.experiment;
  check_dataset(data, ex);
  const std::size_t length = data.features();
  if (config.ground_truth && config.ground_truth->size() != length)
    throw InputError("ground-truth mask length differs from the spectrum length");
  const auto folds = stratified_kfold(data, ex.folds, ex.seed);
  FoldData fd = make_fold(data, folds[0], ex.standardize);
  fd.x_train = fd.x_train.reshaped({fd.x_train.dim(0), 1, length});
  fd.x_test = fd.x_test.reshaped({fd.x_test.dim(0), 1, length});

  RegionReport report;
  report.config = config;
  report.rows = data.rows();
  report.length = length;
  report.classes = data.n_classes;

  const net::TrainConfig cfg = fold_train_config(ex, 0);
  net::Network model = make_region_net(length, config, data.n_classes);
  model.init(cfg.seed);
  net::train(model, fd.x_train, fd.y_train, cfg);
  const auto& gate = model.gate_at(model.gate_indices().front());
  report.gate_values = gate.p;
  report.selected_positions = filter::selected_indices(gate);
  std::vector<bool> selected(length, false);
  for (std::size_t i : report.selected_positions) selected[i] = true;
  report.regions = find_regions(selected);
  if (config.ground_truth) report.iou = intersection_over_union(selected, *config.ground_truth);
  if (report.selected_positions.empty()) {
    report.failed = true;
    report.diagnostic = "no position passed the threshold; the penalty is too large";
  }
  report.f1_test = macro_f1(fd.y_test, net::predict_labels(model, fd.x_test), data.n_classes);
  report.wall_time_seconds = seconds_since(start);
  return report;
}

}  // namespace bsf::pipeline
