#include "bsf/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bsf/core/error.hpp"
#include "bsf/core/stratify.hpp"
#include "bsf/net/loss.hpp"

namespace bsf::net {
namespace {

constexpr std::size_t kEvalChunk = 256;

// Stream ids for the independent consumers of TrainConfig::seed.
constexpr std::uint64_t kHoldoutStream = 0xA1;
constexpr std::uint64_t kShuffleStream = 0xB2;
constexpr std::uint64_t kGateStream = 0xC3;

void check_finite(double value, const char* what, std::size_t epoch, double lr) {
  if (std::isfinite(value)) return;
  std::ostringstream os;
  os << what << " became non-finite in epoch " << epoch << " (learning rate " << lr
     << "); lower the learning rate or standardize the inputs";
  throw TrainingError(os.str());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (batch_size == 0) throw InputError("batch size must be positive");
  if (max_epochs > 0 && patience > max_epochs) throw InputError("early-stop patience exceeds max epochs");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InputError("validation fraction must lie in [0, 1)");
  if (optimizer == OptimizerKind::adam && !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
    throw InputError("invalid Adam coefficients");
}

void Optimizer::step(Network& net) {
  auto params = net.parameters();
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), 0.0);
      v_.emplace_back(p.value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw StateError("optimizer bound to a different network layout");
  ++t_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    if (p.frozen) continue;
    if (config_.optimizer == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
    } else {
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      }
    }
    if (p.is_gate)
      for (double& v : p.value) v = std::clamp(v, 0.0, 1.0);
  }
}

double evaluate_loss(const Network& net, const Tensor& x, std::span<const int> labels) {
  const std::size_t n = x.dim(0);
  if (n == 0) throw InputError("evaluate_loss on an empty dataset");
  double total = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t stop = std::min(n, start + kEvalChunk);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), start);
    const Tensor logits = net.predict(take_rows(x, rows));
    total += softmax_cross_entropy(logits, labels.subspan(start, stop - start)).loss * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(n);
}

std::vector<int> predict_labels(const Network& net, const Tensor& x) {
  std::vector<int> out;
  out.reserve(x.dim(0));
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < x.dim(0); start += kEvalChunk) {
    const std::size_t stop = std::min(x.dim(0), start + kEvalChunk);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto part = argmax_rows(net.predict(take_rows(x, rows)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

History train(Network& net, const Tensor& x, std::span<const int> labels, const TrainConfig& config) {
  config.validate();
  if (x.rank() < 2 || x.dim(0) == 0) throw InputError("training data is empty");
  if (labels.size() != x.dim(0)) throw ShapeError("label count differs from sample count");
  History history;
  if (config.max_epochs == 0) {
    net.set_mode(Mode::infer);
    return history;
  }
  net.set_penalties(config.bsf_lambda);

  const Holdout split = stratified_holdout(labels, config.validation_fraction, RngStream(config.seed, kHoldoutStream));
  const Tensor x_train = take_rows(x, split.train);
  std::vector<int> y_train(split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) y_train[i] = labels[split.train[i]];
  const bool has_validation = !split.validation.empty();
  const Tensor x_val = has_validation ? take_rows(x, split.validation) : x_train;
  std::vector<int> y_val = y_train;
  if (has_validation) {
    y_val.resize(split.validation.size());
    for (std::size_t i = 0; i < split.validation.size(); ++i) y_val[i] = labels[split.validation[i]];
  }

  const RngStream shuffle_root(config.seed, kShuffleStream);
  const RngStream gate_root(config.seed, kGateStream);
  Optimizer optimizer(config);
  Network best = net;
  std::size_t wait = 0;
  std::uint64_t step = 0;
  std::vector<std::size_t> order(x_train.dim(0));
  std::vector<std::size_t> rows;
  std::vector<int> batch_labels;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    net.set_mode(Mode::train);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_root.split(epoch).shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
      batch_labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) batch_labels[i] = y_train[rows[i]];
      RngStream gate_rng = gate_root.split(step++);
      const Trace trace = net.forward(take_rows(x_train, rows), &gate_rng);
      const LossResult ce = softmax_cross_entropy(trace.output(), batch_labels);
      const double objective = ce.loss + net.penalty();
      check_finite(objective, "training loss", epoch, config.learning_rate);
      net.zero_grad();
      net.backward(trace, ce.grad);
      optimizer.step(net);
      epoch_loss += objective * static_cast<double>(rows.size());
    }
    net.set_mode(Mode::infer);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(order.size());
    record.validation_loss = evaluate_loss(net, x_val, y_val) + net.penalty();
    check_finite(record.validation_loss, "validation loss", epoch, config.learning_rate);
    if (config.record_gates)
      for (std::size_t g : net.gate_indices()) record.gates.push_back(net.gate_at(g).p);
    const double val = record.validation_loss;
    history.epochs.push_back(std::move(record));

    if (val < history.best_validation_loss) {
      history.best_validation_loss = val;
      history.best_epoch = epoch;
      best = net;
      wait = 0;
    } else if (++wait >= config.patience) {
      history.stopped_early = true;
      break;
    }
  }
  net = std::move(best);
  net.set_mode(Mode::infer);
  return history;
}

}  // namespace bsf::net
