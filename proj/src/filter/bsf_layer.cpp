#include "bsf/filter/bsf_layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsf/core/error.hpp"

namespace bsf::filter {

GroupMap GroupMap::identity(std::size_t positions) {
  GroupMap g;
  g.gate_of.resize(positions);
  for (std::size_t i = 0; i < positions; ++i) g.gate_of[i] = i;
  g.n_gates = positions;
  return g;
}

GroupMap GroupMap::shared_across_channels(std::size_t channels, std::size_t length) {
  GroupMap g;
  g.gate_of.resize(channels * length);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t l = 0; l < length; ++l) g.gate_of[c * length + l] = l;
  g.n_gates = length;
  return g;
}

GroupMap GroupMap::per_channel(std::size_t channels, std::size_t length) {
  GroupMap g;
  g.gate_of.resize(channels * length);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t l = 0; l < length; ++l) g.gate_of[c * length + l] = c;
  g.n_gates = channels;
  return g;
}

GroupMap GroupMap::single(std::size_t positions) {
  GroupMap g;
  g.gate_of.assign(positions, 0);
  g.n_gates = 1;
  return g;
}

bool GroupMap::is_identity() const noexcept {
  if (n_gates != gate_of.size()) return false;
  for (std::size_t i = 0; i < gate_of.size(); ++i)
    if (gate_of[i] != i) return false;
  return true;
}

void GroupMap::validate() const {
  std::vector<bool> used(n_gates, false);
  for (std::size_t g : gate_of) {
    if (g >= n_gates) throw ShapeError("group map refers to gate " + std::to_string(g) + " of " + std::to_string(n_gates));
    used[g] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) throw ShapeError("group map leaves a gate without positions");
}

BsfLayer BsfLayer::make(GroupMap groups, double tau, double lambda) {
  BsfLayer layer;
  layer.p.assign(groups.n_gates, 1.0);
  layer.tau = tau;
  layer.lambda = lambda;
  layer.groups = std::move(groups);
  layer.validate();
  return layer;
}

void BsfLayer::clamp() noexcept {
  for (double& v : p) v = std::clamp(v, 0.0, 1.0);
}

void BsfLayer::validate() const {
  groups.validate();
  if (p.size() != groups.n_gates) throw ShapeError("gate vector size differs from group map gate count");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("gate probability " + std::to_string(v) + " outside [0,1]");
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("threshold must lie in (0,1), got " + std::to_string(tau));
  if (!(lambda >= 0.0)) throw DomainError("penalty coefficient must be non-negative");
}

std::size_t batch_size_of(const Tensor& x, std::size_t positions) {
  if (x.rank() == 1 && x.size() == positions) return 1;
  if (x.rank() < 2 || x.row_size() != positions) {
    throw ShapeError("bsf: input " + shape_string(x.shape()) + " does not match " + std::to_string(positions) +
                     " gated positions per sample");
  }
  return x.dim(0);
}

TrainOutput forward_train(const Tensor& x, const BsfLayer& layer, RngStream& rng) {
  const std::size_t batch = batch_size_of(x, layer.positions());
  const std::size_t rows = layer.mask_mode == MaskMode::per_batch ? 1 : batch;
  BsfMask mask{std::vector<double>(rows * layer.n_gates()), rows, layer.n_gates()};
  for (std::size_t r = 0; r < rows; ++r) {
    const auto draw = bernoulli_sample(layer.p, rng);
    std::copy(draw.begin(), draw.end(), mask.r.begin() + static_cast<std::ptrdiff_t>(r * mask.gates));
  }
  Tensor y = forward_with_mask(x, layer, mask);
  return {std::move(y), std::move(mask)};
}

namespace {

void check_mask(const BsfMask& mask, const BsfLayer& layer, std::size_t batch) {
  if (mask.empty()) throw StateError("bsf: missing mask; run a training forward pass first");
  if (mask.gates != layer.n_gates() || (mask.rows != 1 && mask.rows != batch) ||
      mask.r.size() != mask.rows * mask.gates) {
    throw StateError("bsf: mask does not belong to this layer/batch");
  }
}

}  // namespace

Tensor forward_with_mask(const Tensor& x, const BsfLayer& layer, const BsfMask& mask) {
  const std::size_t positions = layer.positions();
  const std::size_t batch = batch_size_of(x, positions);
  check_mask(mask, layer, batch);
  Tensor y(x.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < positions; ++i)
      y[b * positions + i] = x[b * positions + i] * mask.at(b, layer.groups.gate_of[i]);
  return y;
}

Tensor forward_infer(const Tensor& x, const BsfLayer& layer) {
  const std::size_t positions = layer.positions();
  const std::size_t batch = batch_size_of(x, positions);
  const auto pass = passing_positions(layer);
  Tensor y(x.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < positions; ++i)
      y[b * positions + i] = pass[i] ? x[b * positions + i] : 0.0;
  return y;
}

Gradients backward(const Tensor& upstream, const Tensor& x, const BsfMask& mask, const BsfLayer& layer) {
  const std::size_t positions = layer.positions();
  const std::size_t batch = batch_size_of(x, positions);
  if (upstream.shape() != x.shape()) throw ShapeError("bsf backward: upstream and input shapes differ");
  check_mask(mask, layer, batch);
  Gradients g{Tensor(x.shape()), std::vector<double>(layer.n_gates(), 0.0)};
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < positions; ++i) {
      const std::size_t k = b * positions + i;
      const std::size_t gate = layer.groups.gate_of[i];
      g.grad_x[k] = upstream[k] * mask.at(b, gate);
      g.grad_p[gate] += upstream[k] * x[k];
    }
  }
  if (layer.estimator == GradientEstimator::scaled)
    for (std::size_t j = 0; j < g.grad_p.size(); ++j) g.grad_p[j] *= layer.p[j];
  return g;
}

Penalty l1_penalty(const BsfLayer& layer) {
  Penalty pen{0.0, std::vector<double>(layer.n_gates(), 0.0)};
  for (std::size_t i = 0; i < layer.n_gates(); ++i) {
    const double v = layer.p[i];
    pen.value += std::abs(v);
    pen.grad[i] = v > 0.0 ? layer.lambda : (v < 0.0 ? -layer.lambda : 0.0);
  }
  pen.value *= layer.lambda;
  return pen;
}

IndexList selected_indices(const BsfLayer& layer) {
  IndexList keep;
  for (std::size_t i = 0; i < layer.n_gates(); ++i)
    if (layer.passes(i)) keep.push_back(i);
  return keep;
}

std::vector<bool> passing_positions(const BsfLayer& layer) {
  std::vector<bool> pass(layer.positions());
  for (std::size_t i = 0; i < pass.size(); ++i) pass[i] = layer.passes(layer.groups.gate_of[i]);
  return pass;
}

}  // namespace bsf::filter
