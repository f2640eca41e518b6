#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "bsf/core/error.hpp"
#include "bsf/net/checkpoint.hpp"
#include "bsf/pipeline/config.hpp"
#include "bsf/pipeline/report.hpp"

using namespace bsf;
using namespace bsf::pipeline;

namespace {

struct CommonOptions {
  std::string data;
  std::string label_col;
  std::string config;
  std::string out;
  std::string plot_data;
  std::string truth;
  std::string lambda;
  std::uint64_t seed = 0;
  double tau = 0.25;
  std::size_t folds = 10;
  std::size_t fold_limit = 0;
  std::size_t threads = 1;
  std::string hidden;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* fold_limit_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_data) {
  if (with_data) {
    app->add_option("--data", o.data, "Input CSV with a header row");
    app->add_option("--label-col", o.label_col, "Label column name (default: last column)");
    app->add_option("--truth", o.truth, "Ground-truth JSON written by `bsf synth`");
    o.folds_opt = app->add_option("--folds", o.folds, "Cross-validation folds (default 10)");
    o.fold_limit_opt = app->add_option("--fold-limit", o.fold_limit, "Run only the first N folds");
    o.threads_opt = app->add_option("--threads", o.threads, "Worker threads");
    o.tau_opt = app->add_option("--tau", o.tau, "Gate threshold (default 0.25)");
  }
  app->add_option("--config", o.config, "Configuration file");
  o.seed_opt = app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--out", o.out, "Report path (default: stdout)");
}

ConfigFile read_config(const CommonOptions& o) {
  return o.config.empty() ? ConfigFile{} : ConfigFile::load(o.config);
}

void override_experiment(const CommonOptions& o, ExperimentConfig& ex) {
  if (*o.seed_opt) ex.seed = o.seed;
  if (*o.tau_opt) ex.tau = o.tau;
  if (*o.folds_opt) ex.folds = o.folds;
  if (*o.fold_limit_opt) ex.fold_limit = o.fold_limit;
  if (*o.threads_opt) ex.threads = o.threads;
}

Dataset read_data(const CommonOptions& o) {
  if (o.data.empty()) throw InputError("--data is required");
  CsvOptions csv;
  csv.label_column = o.label_col;
  return load_csv(o.data, csv);
}

Json read_truth(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void emit(const CommonOptions& o, Json report, const Dataset* data) {
  if (data) report["dataset"]["rejected_rows"] = data->rejected_rows;
  const std::string text = dump(report);
  if (o.out.empty()) std::cout << text;
  else write_text(o.out, text);
}

void emit_plot(const CommonOptions& o, const std::string& csv) {
  if (!o.plot_data.empty()) write_text(o.plot_data, csv);
}

int run_select(const CommonOptions& o) {
  FeatureSelectionConfig cfg;
  read_config(o).apply(cfg);
  override_experiment(o, cfg.experiment);
  if (!o.lambda.empty()) cfg.lambdas = parse_lambda_list(o.lambda);
  if (!o.hidden.empty()) cfg.hidden = parse_size_list(o.hidden, "hidden");
  const Dataset data = read_data(o);
  if (!o.truth.empty()) {
    const Json t = read_truth(o.truth);
    if (!t.contains("informative")) throw InputError(o.truth + ": no 'informative' entry");
    cfg.informative = t["informative"].get<IndexList>();
  }
  const auto report = run_feature_selection(data, cfg);
  emit(o, to_json(report), &data);
  emit_plot(o, plot_csv(report));
  return 0;
}

int run_prune_experiment(const CommonOptions& o) {
  PruningConfig cfg;
  read_config(o).apply(cfg);
  override_experiment(o, cfg.experiment);
  if (!o.lambda.empty()) cfg.base_lambdas = parse_lambda_list(o.lambda);
  if (!o.hidden.empty()) cfg.hidden = parse_size_list(o.hidden, "hidden");
  const Dataset data = read_data(o);
  const auto report = run_pruning_experiment(data, cfg);
  emit(o, to_json(report), &data);
  emit_plot(o, plot_csv(report));
  return 0;
}

int run_prune_checkpoint(const CommonOptions& o, const std::string& checkpoint, const std::string& pruned_path) {
  net::Network net = net::load_checkpoint(checkpoint);
  if (*o.tau_opt)
    for (std::size_t g : net.gate_indices()) net.gate_at(g).tau = o.tau;
  const auto result = prune::prune(net);
  if (!pruned_path.empty()) net::save_checkpoint(result.pruned, pruned_path);
  emit(o, to_json(result.report), nullptr);
  return 0;
}

int run_regions(const CommonOptions& o, const std::string& channels, std::optional<std::size_t> kernel) {
  RegionConfig cfg;
  read_config(o).apply(cfg);
  override_experiment(o, cfg.experiment);
  if (!o.lambda.empty()) {
    const auto values = parse_lambda_list(o.lambda);
    if (values.size() != 1) throw InputError("region selection takes a single lambda");
    cfg.lambda = values[0];
  }
  if (!channels.empty()) cfg.channels = parse_size_list(channels, "channels");
  if (kernel) cfg.kernel = *kernel;
  const Dataset data = read_data(o);
  if (!o.truth.empty()) {
    const Json t = read_truth(o.truth);
    if (!t.contains("region_mask")) throw InputError(o.truth + ": no 'region_mask' entry");
    std::vector<bool> mask;
    for (const auto& v : t["region_mask"]) mask.push_back(v.get<int>() != 0);
    cfg.ground_truth = mask;
  }
  const auto report = run_region_selection(data, cfg);
  emit(o, to_json(report), &data);
  emit_plot(o, plot_csv(report));
  return 0;
}

struct LabOptions {
  std::optional<std::size_t> rows, features, draws;
  std::optional<double> lambda;
};

int run_lab_command(const CommonOptions& o, const LabOptions& l) {
  lab::LabConfig cfg;
  read_config(o).apply(cfg);
  if (*o.seed_opt) cfg.seed = o.seed;
  if (l.rows) cfg.rows = *l.rows;
  if (l.features) cfg.features = *l.features;
  if (l.draws) cfg.draws = *l.draws;
  if (l.lambda) cfg.lambda = *l.lambda;
  emit(o, to_json(lab::run_lab(cfg)), nullptr);
  return 0;
}

struct SynthOptions {
  std::string kind, truth_out;
  std::optional<std::size_t> rows, features, informative, classes, length;
  std::optional<double> class_sep, noise;
};

int run_synth(const CommonOptions& o, const SynthOptions& s) {
  SynthConfig cfg;
  apply_synth(read_config(o), cfg);
  if (!s.kind.empty()) {
    if (s.kind != "informative" && s.kind != "spectra") throw InputError("--kind must be informative or spectra");
    cfg.kind = s.kind;
  }
  if (s.classes) {
    cfg.informative.n_classes = *s.classes;
    const auto layout = default_spectra_layout(cfg.spectra.length, *s.classes);
    cfg.spectra.n_classes = *s.classes;
    cfg.spectra.class_peaks = layout.class_peaks;
    cfg.spectra.nuisance_peaks = layout.nuisance_peaks;
  }
  if (s.length) {
    const auto layout = default_spectra_layout(*s.length, cfg.spectra.n_classes);
    cfg.spectra.length = *s.length;
    cfg.spectra.class_peaks = layout.class_peaks;
    cfg.spectra.nuisance_peaks = layout.nuisance_peaks;
  }
  if (s.rows) cfg.informative.n = cfg.spectra.n = *s.rows;
  if (s.features) cfg.informative.d = *s.features;
  if (s.informative) cfg.informative.informative = *s.informative;
  if (s.class_sep) cfg.informative.class_sep = *s.class_sep;
  if (s.noise) cfg.spectra.noise = *s.noise;
  if (*o.seed_opt) cfg.informative.seed = cfg.spectra.seed = o.seed;
  if (o.out.empty()) throw InputError("--out is required for synth");

  Json truth{{"kind", cfg.kind}};
  if (cfg.kind == "informative") {
    const auto g = make_informative_classification(cfg.informative);
    write_csv(g.data, o.out);
    truth["informative"] = g.informative;
  } else {
    const auto g = make_synthetic_spectra(cfg.spectra);
    write_csv(g.data, o.out);
    Json mask = Json::array();
    for (bool b : g.region_mask) mask.push_back(b ? 1 : 0);
    truth["region_mask"] = mask;
  }
  if (!s.truth_out.empty()) write_text(s.truth_out, dump(truth));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary stochastic filtering: feature selection, pruning and region selection"};
  app.require_subcommand(1);

  CommonOptions select_o, prune_o, regions_o, lab_o, synth_o;

  auto* select = app.add_subcommand("select", "Feature selection with cross-validation");
  add_common(select, select_o, true);
  select->add_option("--lambda", select_o.lambda, "Penalty: value, comma list, 'grid' or geom:lo:hi:n");
  select->add_option("--hidden", select_o.hidden, "Hidden widths, comma separated");
  select->add_option("--plot-data", select_o.plot_data, "Gate values CSV");

  std::string checkpoint, pruned;
  auto* prune_cmd = app.add_subcommand("prune", "Pruning sweep on a dataset, or pruning of a checkpoint");
  add_common(prune_cmd, prune_o, true);
  prune_cmd->add_option("--lambda", prune_o.lambda, "Base penalty: value, comma list, 'grid' or geom:lo:hi:n");
  prune_cmd->add_option("--hidden", prune_o.hidden, "Hidden widths, comma separated");
  prune_cmd->add_option("--plot-data", prune_o.plot_data, "Trade-off curve CSV");
  auto* ckpt_opt = prune_cmd->add_option("--checkpoint", checkpoint, "Prune this trained network instead");
  prune_cmd->add_option("--pruned", pruned, "Where to write the pruned checkpoint")->needs(ckpt_opt);

  std::string channels;
  std::optional<std::size_t> kernel;
  auto* regions = app.add_subcommand("regions", "Region selection on spectra-like rows");
  add_common(regions, regions_o, true);
  regions->add_option("--lambda", regions_o.lambda, "Penalty");
  regions->add_option("--channels", channels, "Conv channel counts, comma separated");
  regions->add_option("--kernel", kernel, "Conv kernel size");
  regions->add_option("--plot-data", regions_o.plot_data, "Per-position gate values CSV");

  LabOptions lab_opts;
  auto* lab_cmd = app.add_subcommand("lab", "Expected-objective identity on a random instance");
  add_common(lab_cmd, lab_o, false);
  lab_cmd->add_option("--rows", lab_opts.rows, "Instance rows");
  lab_cmd->add_option("--features", lab_opts.features, "Instance features");
  lab_cmd->add_option("--draws", lab_opts.draws, "Monte Carlo draws");
  lab_cmd->add_option("--lambda", lab_opts.lambda, "Penalty");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and its ground truth");
  add_common(synth, synth_o, false);
  synth->add_option("--kind", synth_opts.kind, "informative or spectra");
  synth->add_option("--truth", synth_opts.truth_out, "Ground-truth JSON output");
  synth->add_option("--rows", synth_opts.rows, "Samples");
  synth->add_option("--features", synth_opts.features, "Features (informative)");
  synth->add_option("--informative", synth_opts.informative, "Informative features");
  synth->add_option("--class-sep", synth_opts.class_sep, "Class separation");
  synth->add_option("--classes", synth_opts.classes, "Classes");
  synth->add_option("--length", synth_opts.length, "Spectrum length");
  synth->add_option("--noise", synth_opts.noise, "Spectrum noise level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*select) return run_select(select_o);
    if (*prune_cmd)
      return checkpoint.empty() ? run_prune_experiment(prune_o) : run_prune_checkpoint(prune_o, checkpoint, pruned);
    if (*regions) return run_regions(regions_o, channels, kernel);
    if (*lab_cmd) return run_lab_command(lab_o, lab_opts);
    if (*synth) return run_synth(synth_o, synth_opts);
  } catch (const InputError& e) {
    std::fprintf(stderr, "bsf: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bsf: %s\n", e.what());
    return 1;
  }
  return 0;
}
