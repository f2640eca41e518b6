// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "bsf/filter/bsf_layer.hpp"
#include "bsf/lab/regression_lab.hpp"
#include "bsf/net/loss.hpp"
#include "bsf/net/train.hpp"
#include "bsf/pipeline/report.hpp"
#include "bsf/pipeline/synth.hpp"
#include "bsf/pipeline/workflows.hpp"
#include "bsf/prune/pruner.hpp"
#include "oracles.hpp"

using namespace bsf;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome objective_identity() {
  const auto start = Clock::now();
  RngStream rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(8), d = 1 + rng.below(8);
    const auto inst = lab::ObjectiveInstance::random(n, d, rng);
    std::vector<double> w(d), p(d);
    for (auto& v : w) v = rng.normal();
    for (auto& v : p) v = rng.uniform();
    for (double lambda : {0.0, 0.1})
      worst = std::max(worst, std::abs(lab::analytic_objective(inst, w, p, lambda) -
                                       lab::brute_force_objective(inst, w, p, lambda)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-10 && secs < 10.0, fmt("max |analytic - brute force| = %.3g, %.2f s", worst, secs)};
}

Outcome monte_carlo_consistency() {
  const auto start = Clock::now();
  RngStream rng(1002);
  double worst_z = 0.0;
  bool ok = true;
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 1 + rng.below(8), d = 1 + rng.below(8);
    const auto inst = lab::ObjectiveInstance::random(n, d, rng);
    std::vector<double> w(d), p(d);
    for (auto& v : w) v = rng.normal();
    for (auto& v : p) v = rng.uniform();
    const double lambda = t % 2 ? 0.1 : 0.0;
    RngStream draws = rng.split(static_cast<std::uint64_t>(t));
    const auto mc = lab::monte_carlo_objective(inst, w, p, lambda, 200000, draws);
    const double gap = std::abs(mc.estimate - lab::analytic_objective(inst, w, p, lambda));
    ok &= gap <= 4.0 * mc.standard_error;
    if (mc.standard_error > 0) worst_z = std::max(worst_z, gap / mc.standard_error);
  }
  const double secs = seconds_since(start);
  return {ok && secs < 30.0, fmt("worst |z| = %.2f (limit 4), %.2f s", worst_z, secs)};
}

// Worst relative error between backprop and central differences over the
// weights and biases of an MLP and two conv nets with a fixed gate mask.
double parameter_gradient_error() {
  RngStream rng(1003);
  double worst = 0.0;
  const auto check = [&](net::Network& model, const Tensor& x, const std::vector<int>& labels) {
    std::vector<filter::BsfMask> masks(model.size());
    for (std::size_t g : model.gate_indices()) {
      const auto& gate = model.gate_at(g);
      filter::BsfMask m{std::vector<double>(gate.n_gates()), 1, gate.n_gates()};
      for (double& v : m.r) v = rng.uniform() < 0.7 ? 1.0 : 0.0;
      masks[g] = m;
    }
    const auto loss = [&] { return net::softmax_cross_entropy(model.replay(x, masks).output(), labels).loss; };
    const auto trace = model.replay(x, masks);
    model.zero_grad();
    model.backward(trace, net::softmax_cross_entropy(trace.output(), labels).grad);
    auto params = model.parameters();
    std::vector<std::vector<double>> analytic;
    for (auto& v : params) analytic.emplace_back(v.grad.begin(), v.grad.end());
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (params[k].is_gate) continue;
      for (std::size_t i = 0; i < params[k].value.size(); ++i) {
        const double fd = oracle::central_difference(loss, &params[k].value[i], 1e-5);
        worst = std::max(worst, oracle::relative_error(analytic[k][i], fd, 1e-4));
      }
    }
  };
  const auto randomize = [&](net::Network& model) {
    for (auto& v : model.parameters())
      for (double& x : v.value) x = v.is_gate ? rng.uniform(0.3, 0.9) : rng.uniform(-0.8, 0.8);
  };
  {
    net::Network model({6});
    model.gate().dense(6, 5).relu().gate().dense(5, 4).relu().dense(4, 3);
    randomize(model);
    check(model, oracle::random_tensor({7, 6}, rng, -2, 2), {0, 1, 2, 0, 1, 2, 1});
  }
  for (std::size_t stride : {1u, 2u}) {
    const std::size_t out_len = (9 + stride - 1) / stride;
    net::Network model({2, 9});
    model.conv1d(2, 3, 4, stride).relu().gate(filter::GroupMap::shared_across_channels(3, out_len));
    model.conv1d(3, 2, 3).flatten().dense(2 * out_len, 2);
    randomize(model);
    check(model, oracle::random_tensor({3, 2, 9}, rng, -2, 2), {0, 1, 1});
  }
  return worst;
}

double objective_gradient_error() {
  RngStream rng(1004);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.below(8), d = 1 + rng.below(8);
    const auto inst = lab::ObjectiveInstance::random(n, d, rng);
    std::vector<double> w(d), p(d);
    for (auto& v : w) v = rng.normal();
    for (auto& v : p) v = rng.uniform(0.02, 0.98);
    const double lambda = t % 2 ? 0.1 : 0.0;
    const auto g = lab::analytic_gradient_p(inst, w, p, lambda);
    for (std::size_t j = 0; j < d; ++j) {
      const double fd =
          oracle::central_difference([&] { return lab::analytic_objective(inst, w, p, lambda); }, &p[j], 1e-6);
      worst = std::max(worst, oracle::relative_error(g[j], fd, 1e-3));
    }
  }
  return worst;
}

struct EstimatorGap {
  double vs_analytic = 0.0;
  double vs_data_term = 0.0;
};

// One-layer model: gate followed by a bias-free linear unit with weights w,
// squared loss against the centred targets of a random instance. Mean of the
// unscaled gate gradient over 1e5 independent masks, compared relative to the
// largest component of the reference.
EstimatorGap plain_estimator_gap() {
  RngStream rng(1005);
  const std::size_t n = 6, d = 4, draws = 100000;
  const auto inst = lab::ObjectiveInstance::random(n, d, rng);
  std::vector<double> w(d), p(d);
  for (auto& v : w) v = rng.normal();
  for (auto& v : p) v = rng.uniform();

  net::Network model({d});
  model.gate().dense(d, 1);
  auto& gate = model.gate_at(0);
  gate.p = p;
  gate.estimator = filter::GradientEstimator::plain;
  auto& dense = std::get<net::Dense>(model.layers()[1]);
  for (std::size_t j = 0; j < d; ++j) dense.weight[j] = w[j];
  const Tensor target({n, 1}, inst.y());
  std::vector<double> mean(d, 0.0);
  const RngStream root(7);
  for (std::size_t t = 0; t < draws; ++t) {
    RngStream r = root.split(t);
    const auto trace = model.forward(inst.x(), &r);
    model.zero_grad();
    model.backward(trace, net::squared_error(trace.output(), target).grad);
    const auto& g = std::get<net::Gate>(model.layers()[0]).grad_p;
    for (std::size_t j = 0; j < d; ++j) mean[j] += g[j] / static_cast<double>(draws);
  }
  const auto gap = [&](const std::vector<double>& ref) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      scale = std::max(scale, std::abs(ref[j]));
      diff = std::max(diff, std::abs(mean[j] - ref[j]));
    }
    return diff / scale;
  };
  return {gap(lab::analytic_gradient_p(inst, w, p, 0.0)), gap(lab::data_term_gradient_p(inst, w, p))};
}

Outcome gradient_suite() {
  const double param = parameter_gradient_error();
  const double objective = objective_gradient_error();
  const auto est = plain_estimator_gap();
  const bool ok = param <= 1e-6 && objective <= 1e-6 && est.vs_analytic <= 0.01;
  return {ok, fmt("params rel %.2g, analytic_gradient_p rel %.2g, plain estimator mean vs analytic_gradient_p "
                  "%.2f%% (vs data term %.2f%%)",
                  param, objective, 100 * est.vs_analytic, 100 * est.vs_data_term)};
}

Outcome expectation_identity() {
  RngStream rng(1006);
  const std::size_t draws = 100000;
  std::size_t outside = 0, checked = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + rng.below(8);
    auto layer = filter::BsfLayer::make(filter::GroupMap::identity(d));
    Tensor x({d});
    for (std::size_t j = 0; j < d; ++j) {
      layer.p[j] = rng.uniform();
      x[j] = rng.uniform(-3, 3);
    }
    std::vector<double> mean(d, 0.0);
    RngStream draw = rng.split(static_cast<std::uint64_t>(t));
    for (std::size_t k = 0; k < draws; ++k) {
      const auto y = filter::forward_train(x, layer, draw).y;
      for (std::size_t j = 0; j < d; ++j) mean[j] += y[j] / static_cast<double>(draws);
    }
    for (std::size_t j = 0; j < d; ++j) {
      ++checked;
      if (std::abs(mean[j] - x[j] * layer.p[j]) > oracle::binomial_bound(layer.p[j], x[j], draws)) ++outside;
    }
  }
  return {outside == 0, fmt("%zu of %zu coordinates outside the 4 sigma bound", outside, checked)};
}

Outcome pruning_exactness() {
  RngStream rng(1007);
  std::size_t mismatched = 0, archs = 0;
  const auto closed_gates = [&](net::Network& model) {
    for (std::size_t g : model.gate_indices()) {
      auto& p = model.gate_at(g).p;
      for (double& v : p) v = rng.uniform() < 0.4 ? rng.uniform(0.0, 0.25) : rng.uniform(0.26, 1.0);
      p[rng.below(p.size())] = 1.0;
    }
  };
  for (int t = 0; t < 10; ++t, ++archs) {
    const std::size_t in = 3 + rng.below(8), h1 = 4 + rng.below(20), h2 = 2 + rng.below(12);
    net::Network model({in});
    model.gate().dense(in, h1).relu().gate().dense(h1, h2).relu().gate().dense(h2, 3);
    model.init(static_cast<std::uint64_t>(t));
    closed_gates(model);
    const auto result = prune::prune(model);
    const Tensor x = oracle::random_tensor({1000, in}, rng, -3, 3);
    mismatched += max_abs_diff(result.pruned.predict(prune::restrict_input(x, result.report)), model.predict(x)) != 0.0;
  }
  for (int t = 0; t < 10; ++t, ++archs) {
    const std::size_t len = 8 + rng.below(12), c1 = 2 + rng.below(5), c2 = 2 + rng.below(5);
    const std::size_t k1 = 1 + rng.below(5), stride = 1 + rng.below(2);
    net::Network model({2, len});
    model.gate(filter::GroupMap::per_channel(2, len)).conv1d(2, c1, k1, stride).relu();
    const std::size_t l1 = model.output_shape()[1];
    model.gate(filter::GroupMap::per_channel(c1, l1)).conv1d(c1, c2, 3).relu();
    model.gate(filter::GroupMap::per_channel(c2, l1)).flatten().dense(c2 * l1, 3);
    model.init(100 + static_cast<std::uint64_t>(t));
    closed_gates(model);
    const auto result = prune::prune(model);
    const Tensor x = oracle::random_tensor({1000, 2, len}, rng, -2, 2);
    mismatched += max_abs_diff(result.pruned.predict(prune::restrict_input(x, result.report)), model.predict(x)) != 0.0;
  }
  return {mismatched == 0, fmt("%zu of %zu architectures differ (10 dense, 10 conv-channel)", mismatched, archs)};
}

Outcome feature_recovery() {
  int good = 0;
  double slowest = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto start = Clock::now();
    pipeline::InformativeSpec spec;
    spec.n = 2000;
    spec.d = 20;
    spec.informative = 5;
    spec.class_sep = 3.0;
    spec.seed = seed;
    const auto gen = pipeline::make_informative_classification(spec);
    pipeline::FeatureSelectionConfig cfg;
    cfg.experiment.seed = seed;
    cfg.experiment.folds = 5;
    cfg.experiment.train.max_epochs = 100;
    cfg.experiment.train.patience = 15;
    cfg.experiment.train.learning_rate = 1e-2;
    cfg.lambdas = {3e-3};
    cfg.hidden = {16};
    cfg.informative = gen.informative;
    const auto report = pipeline::run_feature_selection(gen.data, cfg);
    const double secs = seconds_since(start);
    slowest = std::max(slowest, secs);
    const auto& run = report.runs[0];
    const double precision = run.precision.value_or(0.0), recall = run.recall.value_or(0.0);
    const bool ok = precision >= 0.8 && recall >= 0.8 && secs < 120.0;
    good += ok;
    per_seed += fmt(" s%llu:P=%.2f/R=%.2f", static_cast<unsigned long long>(seed), precision, recall);
  }
  return {good >= 4, fmt("%d/5 seeds with precision and recall >= 0.8, slowest run %.1f s;%s", good, slowest,
                         per_seed.c_str())};
}

Outcome pruning_tradeoff() {
  pipeline::InformativeSpec spec;
  spec.n = 1000;
  spec.d = 20;
  spec.informative = 5;
  spec.class_sep = 3.0;
  spec.seed = 11;
  const auto gen = pipeline::make_informative_classification(spec);
  pipeline::PruningConfig cfg;
  cfg.experiment.seed = 11;
  cfg.experiment.folds = 5;
  cfg.experiment.fold_limit = 1;
  cfg.experiment.train.max_epochs = 60;
  cfg.experiment.train.patience = 10;
  cfg.experiment.train.learning_rate = 1e-3;
  cfg.hidden = {256, 256};
  cfg.base_lambdas = pipeline::geometric_grid(1e-3, 10.0, 9);
  const auto report = pipeline::run_pruning_experiment(gen.data, cfg);
  bool found = false;
  double best_kept = 1.0, best_delta = 0.0;
  for (const auto& pt : report.points) {
    if (pt.failed) continue;
    if (pt.kept_fraction <= 0.2 && pt.delta_f1 >= -0.05) {
      if (!found || pt.kept_fraction < best_kept) {
        best_kept = pt.kept_fraction;
        best_delta = pt.delta_f1;
      }
      found = true;
    }
  }
  std::string curve;
  for (const auto& c : report.curve) curve += fmt(" %.0e:%.3f/%+.3f", c.base_lambda, c.mean_kept_fraction, c.mean_delta_f1);
  const std::string tail = fmt("; monotonicity violations %zu; curve%s", report.monotonicity_violations, curve.c_str());
  return {found, (found ? fmt("kept fraction %.4f with dF1 %+.4f", best_kept, best_delta)
                        : std::string("no point with kept <= 0.2 and dF1 >= -0.05")) + tail};
}

Outcome region_recovery() {
  int good = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto spec = pipeline::default_spectra_layout(256, 2);
    spec.n = 400;
    spec.noise = 0.05;
    spec.seed = seed;
    const auto s = pipeline::make_synthetic_spectra(spec);
    pipeline::RegionConfig cfg;
    cfg.experiment.seed = seed;
    cfg.experiment.train.max_epochs = 300;
    cfg.experiment.train.patience = 40;
    cfg.experiment.train.learning_rate = 3e-3;
    cfg.lambda = 3e-4;
    cfg.channels = {8};
    cfg.kernel = 7;
    cfg.ground_truth = s.region_mask;
    const auto report = pipeline::run_region_selection(s.data, cfg);
    const double iou = report.iou.value_or(0.0);
    std::size_t inside = 0;
    for (std::size_t i : report.selected_positions) inside += s.region_mask[i];
    good += !report.failed && iou >= 0.5;
    per_seed += fmt(" s%llu:IoU=%.2f(%zu/%zu selected in mask)", static_cast<unsigned long long>(seed), iou, inside,
                    report.selected_positions.size());
  }
  return {good >= 4, fmt("%d/5 seeds with IoU >= 0.5;%s", good, per_seed.c_str())};
}

Outcome transparency() {
  pipeline::InformativeSpec spec;
  spec.n = 600;
  spec.d = 10;
  spec.informative = 4;
  spec.seed = 21;
  const auto gen = pipeline::make_informative_classification(spec);
  net::Network plain({10});
  plain.dense(10, 32).relu().dense(32, 32).relu().dense(32, 2);
  net::Network gated({10});
  gated.gate(0.25, 0.0).dense(10, 32).relu().gate(0.25, 0.0).dense(32, 32).relu().gate(0.25, 0.0).dense(32, 2);
  for (std::size_t g : gated.gate_indices()) gated.gate_at(g).trainable = false;
  plain.init(21);
  gated.init(21);
  net::TrainConfig cfg;
  cfg.seed = 21;
  cfg.max_epochs = 200;
  cfg.patience = 20;
  const auto a = net::train(plain, gen.data.x, gen.data.y, cfg);
  const auto b = net::train(gated, gen.data.x, gen.data.y, cfg);

  bool identical = a.epochs.size() == b.epochs.size() && a.best_epoch == b.best_epoch;
  for (std::size_t e = 0; identical && e < a.epochs.size(); ++e)
    identical = a.epochs[e].train_loss == b.epochs[e].train_loss &&
                a.epochs[e].validation_loss == b.epochs[e].validation_loss;
  identical = identical && plain.predict(gen.data.x) == gated.predict(gen.data.x);

  bool finite = true;
  std::size_t argmin = 0;
  for (const auto& e : b.epochs) {
    finite &= std::isfinite(e.validation_loss) && std::isfinite(e.train_loss);
    if (e.validation_loss < b.epochs[argmin].validation_loss) argmin = e.epoch;
  }
  const bool tracked = b.best_epoch == argmin && b.best_validation_loss == b.epochs[argmin].validation_loss &&
                       (!b.stopped_early || b.epochs.size() == argmin + 1 + cfg.patience);
  return {identical && finite && tracked,
          fmt("%zu epochs, identical=%s, finite=%s, best epoch %zu tracked=%s", b.epochs.size(),
              identical ? "yes" : "no", finite ? "yes" : "no", b.best_epoch, tracked ? "yes" : "no")};
}

std::string read_stripped(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  static const std::regex timing("\"wall_time_seconds\": [^\n,}]*");
  return std::regex_replace(ss.str(), timing, "\"wall_time_seconds\": 0");
}

Outcome determinism() {
#ifdef BSF_CLI_PATH
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bsf_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream ini(dir / "run.ini");
    ini << "[train]\nmax_epochs = 10\npatience = 5\nlearning_rate = 0.01\n"
           "[experiment]\nfolds = 3\nthreads = 2\n"
           "[select]\nlambda = geom:1e-3:1e-1:3\nhidden = 8\n"
           "[prune]\nlambda = 0, 0.01, 0.1\nhidden = 16, 16\n"
           "[regions]\nlambda = 0.01\nchannels = 2\nkernel = 5\n"
           "[lab]\nrows = 6\nfeatures = 5\ndraws = 5000\n";
  }
  const std::string cli = BSF_CLI_PATH;
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  const auto sh = [](const std::string& cmd) { return std::system((cmd + " 2>/dev/null").c_str()) == 0; };
  bool ok = sh(q(cli) + " synth --kind informative --rows 150 --features 8 --informative 3 --seed 3 --out " +
               q(dir / "tab.csv") + " --truth " + q(dir / "tab.json"));
  ok &= sh(q(cli) + " synth --kind spectra --rows 60 --length 64 --seed 3 --out " + q(dir / "spec.csv") +
           " --truth " + q(dir / "spec.json"));
  const std::vector<std::pair<std::string, std::string>> commands{
      {"select", "--data " + q(dir / "tab.csv") + " --truth " + q(dir / "tab.json")},
      {"prune", "--data " + q(dir / "tab.csv")},
      {"regions", "--data " + q(dir / "spec.csv") + " --truth " + q(dir / "spec.json")},
      {"lab", ""},
  };
  std::size_t same = 0;
  for (const auto& [name, args] : commands) {
    for (int i = 0; i < 2; ++i) {
      const fs::path out = dir / (name + std::to_string(i) + ".json");
      ok &= sh(q(cli) + " " + name + " --config " + q(dir / "run.ini") + " --seed 5 " + args + " --out " + q(out));
    }
    const auto a = read_stripped(dir / (name + "0.json")), b = read_stripped(dir / (name + "1.json"));
    same += !a.empty() && a == b;
  }
  ok &= same == commands.size();
  return {ok, fmt("%zu of %zu workflows byte-identical across reruns", same, commands.size())};
#else
  return {false, "CLI not built"};
#endif
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "objective identity", objective_identity},
      {2, "Monte Carlo consistency", monte_carlo_consistency},
      {3, "gradient suite", gradient_suite},
      {4, "expectation identity", expectation_identity},
      {5, "pruning exactness", pruning_exactness},
      {6, "feature recovery", feature_recovery},
      {7, "pruning trade-off", pruning_tradeoff},
      {8, "region recovery", region_recovery},
      {9, "transparency", transparency},
      {10, "determinism", determinism},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
