#pragma once

#include <cstddef>
#include <vector>

#include "bsf/core/rng.hpp"
#include "bsf/core/stratify.hpp"
#include "bsf/core/tensor.hpp"

namespace bsf::filter {

// Threshold used for inference-time gating unless configured otherwise.
inline constexpr double kDefaultThreshold = 0.25;

/**
 * Assignment of the positions of one sample to gates.
 *
 * gate_of[i] is the gate that controls flattened position i. Every gate must
 * own at least one position, so the map is surjective onto [0, n_gates).
 */
struct GroupMap {
  std::vector<std::size_t> gate_of;
  std::size_t n_gates = 0;

  // One gate per position.
  static GroupMap identity(std::size_t positions);
  // Sample layout [channels, length]; gate l is shared by every channel at
  // spatial position l. Used to select regions of a spectrum.
  static GroupMap shared_across_channels(std::size_t channels, std::size_t length);
  // Sample layout [channels, length]; gate c switches a whole channel.
  static GroupMap per_channel(std::size_t channels, std::size_t length);
  // Single gate for everything.
  static GroupMap single(std::size_t positions);

  std::size_t positions() const noexcept { return gate_of.size(); }
  bool is_identity() const noexcept;
  // Throws ShapeError if some gate index is out of range or unused.
  void validate() const;

  friend bool operator==(const GroupMap&, const GroupMap&) = default;
};

enum class GradientEstimator {
  plain,   // d bsf / d p = x
  scaled,  // d bsf / d p = x · p
};

enum class MaskMode {
  per_batch,   // one draw per gate per forward call
  per_sample,  // one draw per gate per sample
};

struct BsfLayer {
  std::vector<double> p;
  double tau = kDefaultThreshold;
  double lambda = 0.0;
  GroupMap groups;
  GradientEstimator estimator = GradientEstimator::scaled;
  MaskMode mask_mode = MaskMode::per_batch;
  // Frozen gates keep p fixed during training.
  bool trainable = true;

  // Gates start open (p = 1).
  static BsfLayer make(GroupMap groups, double tau = kDefaultThreshold, double lambda = 0.0);

  std::size_t n_gates() const noexcept { return p.size(); }
  std::size_t positions() const noexcept { return groups.positions(); }
  bool passes(std::size_t gate) const noexcept { return p[gate] > tau; }
  // Project p back onto [0, 1].
  void clamp() noexcept;
  // Throws on inconsistent sizes, p outside [0,1], tau outside (0,1) or negative lambda.
  void validate() const;
};

// Gate draws for one forward call: `rows` is 1 (per-batch) or the batch size.
struct BsfMask {
  std::vector<double> r;
  std::size_t rows = 0;
  std::size_t gates = 0;

  bool empty() const noexcept { return r.empty(); }
  double at(std::size_t sample, std::size_t gate) const noexcept {
    return r[(rows == 1 ? 0 : sample) * gates + gate];
  }
};

struct TrainOutput {
  Tensor y;
  BsfMask mask;
};

struct Gradients {
  Tensor grad_x;
  std::vector<double> grad_p;
};

struct Penalty {
  double value = 0.0;
  std::vector<double> grad;
};

// Number of samples in x for a layer gating `positions` values per sample. A
// rank-1 tensor of exactly `positions` entries is a single sample.
std::size_t batch_size_of(const Tensor& x, std::size_t positions);

// y = x ∘ broadcast(r), r ~ Bernoulli(p).
TrainOutput forward_train(const Tensor& x, const BsfLayer& layer, RngStream& rng);
// y = x ∘ broadcast(mask). Replays a recorded mask; the mask entries are not
// required to be binary, which lets tests evaluate the mean-field surrogate
// x ∘ p through the same code path.
Tensor forward_with_mask(const Tensor& x, const BsfLayer& layer, const BsfMask& mask);
// y_i = x_i if p_g(i) > tau else 0. Consumes no randomness, never rescales.
Tensor forward_infer(const Tensor& x, const BsfLayer& layer);

// grad_x = upstream ∘ broadcast(r)
// grad_p[g] = Σ_{i in g} upstream_i · x_i · (p_g if scaled else 1), summed over the batch.
// The L1 term is not included; see l1_penalty.
Gradients backward(const Tensor& upstream, const Tensor& x, const BsfMask& mask, const BsfLayer& layer);

// λ·Σ p_i and its subgradient λ·sign(p_i), with sign(0) = 0.
Penalty l1_penalty(const BsfLayer& layer);

// Gates with p > tau, ascending.
IndexList selected_indices(const BsfLayer& layer);

// Per-position pass flags at inference (broadcast of p > tau through the group map).
std::vector<bool> passing_positions(const BsfLayer& layer);

}  // namespace bsf::filter
