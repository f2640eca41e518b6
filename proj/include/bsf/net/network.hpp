#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bsf/core/rng.hpp"
#include "bsf/core/tensor.hpp"
#include "bsf/filter/bsf_layer.hpp"

namespace bsf::net {

using Shape = Tensor::Shape;

enum class Mode { train, infer };

// Fully connected layer, y = x·W + b with W stored [in, out].
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  Tensor weight;
  Tensor bias;
  Tensor grad_weight;
  Tensor grad_bias;

  Dense() = default;
  Dense(std::size_t in, std::size_t out);
};

struct Relu {};

// 1-D convolution over [channels, length] samples with "same" zero padding:
// output length is ceil(length / stride). Weight layout [out, in, kernel].
struct Conv1d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  Tensor weight;
  Tensor bias;
  Tensor grad_weight;
  Tensor grad_bias;

  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1);

  std::size_t output_length(std::size_t length) const noexcept { return (length + stride - 1) / stride; }
  std::size_t pad_left(std::size_t length) const noexcept;
};

// [channels, length] -> [channels · length].
struct Flatten {};

// Binary stochastic filter hosted in the network.
struct Gate {
  filter::BsfLayer bsf;
  std::vector<double> grad_p;

  Gate() = default;
  explicit Gate(filter::BsfLayer layer);
};

using Layer = std::variant<Dense, Relu, Conv1d, Flatten, Gate>;

std::string layer_name(const Layer& layer);

// Outputs of every layer for one forward call. values[0] is the input batch,
// values[i + 1] the output of layer i. masks[i] is non-empty only for gates
// evaluated in train mode.
struct Trace {
  Mode mode = Mode::infer;
  std::vector<Tensor> values;
  std::vector<filter::BsfMask> masks;

  const Tensor& output() const { return values.back(); }
};

// Trainable storage of one layer, exposed to optimizers.
struct ParamView {
  std::span<double> value;
  std::span<double> grad;
  bool is_gate = false;
  bool frozen = false;
};

/**
 * Ordered stack of layers over a fixed per-sample input shape.
 *
 * Batches carry a leading batch axis: [batch, input_shape...]. Dense layers
 * take rank-1 samples, conv layers [channels, length] samples. Shapes are
 * checked when a layer is added.
 */
class Network {
 public:
  explicit Network(Shape input_shape);

  Network& add(Layer layer);
  Network& dense(std::size_t in, std::size_t out) { return add(Dense(in, out)); }
  Network& relu() { return add(Relu{}); }
  Network& conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1) {
    return add(Conv1d(in_channels, out_channels, kernel, stride));
  }
  Network& flatten() { return add(Flatten{}); }
  // Gate over the current output with the given group map (identity if omitted).
  Network& gate(double tau = filter::kDefaultThreshold, double lambda = 0.0);
  Network& gate(filter::GroupMap groups, double tau = filter::kDefaultThreshold, double lambda = 0.0);

  const Shape& input_shape() const noexcept { return input_shape_; }
  // Per-sample shape after layer i (i = size() gives the output shape).
  const Shape& shape_before(std::size_t i) const { return shapes_.at(i); }
  const Shape& output_shape() const noexcept { return shapes_.back(); }

  std::size_t size() const noexcept { return layers_.size(); }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<std::size_t> gate_indices() const;
  filter::BsfLayer& gate_at(std::size_t layer_index);
  const filter::BsfLayer& gate_at(std::size_t layer_index) const;

  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode mode) noexcept { mode_ = mode; }

  // He-uniform weights, zero biases. Layer k with weights draws from stream k
  // of `seed`, counting only weighted layers, so inserting gates or
  // activations does not change the initialization of the others.
  void init(std::uint64_t seed);

  // Forward pass in the current mode. Train mode needs `rng` whenever the
  // network contains gates; each gate draws from rng.split(layer index).
  Trace forward(const Tensor& batch, RngStream* rng = nullptr) const;
  // Train-mode pass replaying recorded gate masks (one per layer; entries for
  // non-gate layers are ignored).
  Trace replay(const Tensor& batch, std::span<const filter::BsfMask> masks) const;
  // Deterministic prediction (infer semantics, independent of mode()).
  Tensor predict(const Tensor& batch) const;

  void zero_grad();
  // Accumulates d loss / d param for every parameter from a matching trace;
  // gate gradients also receive λ·sign(p). Returns d loss / d input.
  Tensor backward(const Trace& trace, const Tensor& loss_grad);

  // Σ over gates of λ·Σ p.
  double penalty() const;
  // Assigns per-gate-layer penalties: one value for all gates or one per gate.
  void set_penalties(std::span<const double> lambdas);

  std::vector<ParamView> parameters();
  // Dense and conv weights + biases; gate probabilities are not counted.
  std::size_t weight_count() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  Trace run(const Tensor& batch, Mode mode, RngStream* rng, std::span<const filter::BsfMask> masks) const;

  Shape input_shape_;
  std::vector<Shape> shapes_;
  std::vector<Layer> layers_;
  Mode mode_ = Mode::train;
};

// Index of the largest logit per row; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace bsf::net
