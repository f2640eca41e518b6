#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bsf/core/tensor.hpp"
#include "bsf/net/network.hpp"

namespace bsf::net {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  // Stop after this many epochs without validation improvement.
  std::size_t patience = 20;
  // Empty keeps the penalties stored in the gates; one value applies to every
  // gate; otherwise one value per gate layer in order.
  std::vector<double> bsf_lambda;
  // Stratified share of the training data held out for early stopping. Zero
  // monitors the training objective instead.
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  bool record_gates = true;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  // p of every gate layer at the end of the epoch.
  std::vector<std::vector<double>> gates;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
};

// Plain SGD or Adam over Network::parameters(). Gate probabilities are
// projected back onto [0, 1] after every step; frozen gates are skipped.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) {}
  void step(Network& net);

 private:
  TrainConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/**
 * Mini-batch training with softmax cross-entropy plus the gate penalties.
 *
 * The validation objective is the infer-mode cross-entropy plus the gate
 * penalties, evaluated after every epoch. The parameters of the epoch with the
 * lowest validation objective are restored at the end. The network is left in
 * infer mode. Throws TrainingError when a loss becomes non-finite.
 */
History train(Network& net, const Tensor& x, std::span<const int> labels, const TrainConfig& config);

// Infer-mode mean cross-entropy over a dataset, evaluated in chunks.
double evaluate_loss(const Network& net, const Tensor& x, std::span<const int> labels);
std::vector<int> predict_labels(const Network& net, const Tensor& x);

}  // namespace bsf::net
