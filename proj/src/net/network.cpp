#include "bsf/net/network.hpp"

#include <algorithm>
#include <cmath>

#include "bsf/core/error.hpp"

namespace bsf::net {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Shape sample_shape(const Tensor& batch) {
  if (batch.rank() < 2) throw ShapeError("batch must have a leading batch axis, got " + shape_string(batch.shape()));
  return Shape(batch.shape().begin() + 1, batch.shape().end());
}

Shape with_batch(std::size_t batch, const Shape& sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

Shape infer_shape(const Layer& layer, const Shape& in) {
  return std::visit(
      overloaded{
          [&](const Dense& d) -> Shape {
            if (in.size() != 1 || in[0] != d.in)
              throw ShapeError("dense(" + std::to_string(d.in) + "->" + std::to_string(d.out) + ") cannot take " +
                               shape_string(in));
            return {d.out};
          },
          [&](const Relu&) -> Shape { return in; },
          [&](const Conv1d& c) -> Shape {
            if (in.size() != 2 || in[0] != c.in_channels)
              throw ShapeError("conv1d with " + std::to_string(c.in_channels) + " input channels cannot take " +
                               shape_string(in));
            return {c.out_channels, c.output_length(in[1])};
          },
          [&](const Flatten&) -> Shape { return {shape_product(in)}; },
          [&](const Gate& g) -> Shape {
            if (g.bsf.positions() != shape_product(in))
              throw ShapeError("gate with " + std::to_string(g.bsf.positions()) + " positions cannot take " +
                               shape_string(in));
            return in;
          },
      },
      layer);
}

void dense_forward(const Dense& d, const Tensor& x, Tensor& y, std::size_t batch) {
  const double* w = d.weight.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x.data().data() + b * d.in;
    double* yr = y.data().data() + b * d.out;
    for (std::size_t k = 0; k < d.in; ++k) {
      const double xv = xr[k];
      const double* wr = w + k * d.out;
      for (std::size_t j = 0; j < d.out; ++j) yr[j] += xv * wr[j];
    }
    for (std::size_t j = 0; j < d.out; ++j) yr[j] += d.bias[j];
  }
}

void dense_backward(Dense& d, const Tensor& x, const Tensor& g, Tensor& dx, std::size_t batch) {
  const double* w = d.weight.data().data();
  double* gw = d.grad_weight.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x.data().data() + b * d.in;
    const double* gr = g.data().data() + b * d.out;
    double* dxr = dx.data().data() + b * d.in;
    for (std::size_t k = 0; k < d.in; ++k) {
      const double xv = xr[k];
      const double* wr = w + k * d.out;
      double* gwr = gw + k * d.out;
      double acc = 0.0;
      for (std::size_t j = 0; j < d.out; ++j) {
        gwr[j] += xv * gr[j];
        acc += wr[j] * gr[j];
      }
      dxr[k] = acc;
    }
    for (std::size_t j = 0; j < d.out; ++j) d.grad_bias[j] += gr[j];
  }
}

void conv_forward(const Conv1d& c, const Tensor& x, Tensor& y, std::size_t batch, std::size_t length) {
  const std::size_t out_len = c.output_length(length);
  const auto pad = static_cast<std::ptrdiff_t>(c.pad_left(length));
  const auto len = static_cast<std::ptrdiff_t>(length);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < c.out_channels; ++co) {
      double* yr = y.data().data() + (b * c.out_channels + co) * out_len;
      for (std::size_t ci = 0; ci < c.in_channels; ++ci) {
        const double* xr = x.data().data() + (b * c.in_channels + ci) * length;
        const double* wr = c.weight.data().data() + (co * c.in_channels + ci) * c.kernel;
        for (std::size_t t = 0; t < out_len; ++t) {
          const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t * c.stride) - pad;
          double acc = yr[t];
          for (std::size_t k = 0; k < c.kernel; ++k) {
            const std::ptrdiff_t pos = base + static_cast<std::ptrdiff_t>(k);
            if (pos >= 0 && pos < len) acc += wr[k] * xr[pos];
          }
          yr[t] = acc;
        }
      }
      for (std::size_t t = 0; t < out_len; ++t) yr[t] += c.bias[co];
    }
  }
}

void conv_backward(Conv1d& c, const Tensor& x, const Tensor& g, Tensor& dx, std::size_t batch, std::size_t length) {
  const std::size_t out_len = c.output_length(length);
  const auto pad = static_cast<std::ptrdiff_t>(c.pad_left(length));
  const auto len = static_cast<std::ptrdiff_t>(length);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < c.out_channels; ++co) {
      const double* gr = g.data().data() + (b * c.out_channels + co) * out_len;
      for (std::size_t t = 0; t < out_len; ++t) c.grad_bias[co] += gr[t];
      for (std::size_t ci = 0; ci < c.in_channels; ++ci) {
        const double* xr = x.data().data() + (b * c.in_channels + ci) * length;
        double* dxr = dx.data().data() + (b * c.in_channels + ci) * length;
        const double* wr = c.weight.data().data() + (co * c.in_channels + ci) * c.kernel;
        double* gwr = c.grad_weight.data().data() + (co * c.in_channels + ci) * c.kernel;
        for (std::size_t t = 0; t < out_len; ++t) {
          const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t * c.stride) - pad;
          const double gv = gr[t];
          for (std::size_t k = 0; k < c.kernel; ++k) {
            const std::ptrdiff_t pos = base + static_cast<std::ptrdiff_t>(k);
            if (pos < 0 || pos >= len) continue;
            gwr[k] += gv * xr[pos];
            dxr[pos] += wr[k] * gv;
          }
        }
      }
    }
  }
}

void he_uniform(Tensor& w, std::size_t fan_in, RngStream rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : w.data()) v = rng.uniform(-limit, limit);
}

}  // namespace

Dense::Dense(std::size_t in_units, std::size_t out_units)
    : in(in_units), out(out_units), weight({in_units, out_units}), bias({out_units}),
      grad_weight({in_units, out_units}), grad_bias({out_units}) {
  if (in == 0 || out == 0) throw ShapeError("dense layer needs positive sizes");
}

Conv1d::Conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel_width, std::size_t stride_len)
    : in_channels(in_ch), out_channels(out_ch), kernel(kernel_width), stride(stride_len),
      weight({out_ch, in_ch, kernel_width}), bias({out_ch}), grad_weight({out_ch, in_ch, kernel_width}),
      grad_bias({out_ch}) {
  if (in_ch == 0 || out_ch == 0 || kernel_width == 0 || stride_len == 0)
    throw ShapeError("conv1d needs positive channels, kernel and stride");
}

std::size_t Conv1d::pad_left(std::size_t length) const noexcept {
  const std::size_t out_len = output_length(length);
  const std::size_t span = (out_len - 1) * stride + kernel;
  return span > length ? (span - length) / 2 : 0;
}

Gate::Gate(filter::BsfLayer layer) : bsf(std::move(layer)), grad_p(bsf.n_gates(), 0.0) { bsf.validate(); }

std::string layer_name(const Layer& layer) {
  static constexpr const char* names[] = {"dense", "relu", "conv1d", "flatten", "bsf"};
  return names[layer.index()];
}

Network::Network(Shape input_shape) : input_shape_(std::move(input_shape)), shapes_{input_shape_} {
  if (input_shape_.empty() || shape_product(input_shape_) == 0) throw ShapeError("network input shape must be non-empty");
}

Network& Network::add(Layer layer) {
  Shape next = infer_shape(layer, shapes_.back());
  layers_.push_back(std::move(layer));
  shapes_.push_back(std::move(next));
  return *this;
}

Network& Network::gate(double tau, double lambda) {
  return gate(filter::GroupMap::identity(shape_product(shapes_.back())), tau, lambda);
}

Network& Network::gate(filter::GroupMap groups, double tau, double lambda) {
  return add(Gate(filter::BsfLayer::make(std::move(groups), tau, lambda)));
}

std::vector<std::size_t> Network::gate_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (std::holds_alternative<Gate>(layers_[i])) idx.push_back(i);
  return idx;
}

filter::BsfLayer& Network::gate_at(std::size_t i) {
  auto* g = std::get_if<Gate>(&layers_.at(i));
  if (!g) throw StructureError("layer " + std::to_string(i) + " is not a gate");
  return g->bsf;
}

const filter::BsfLayer& Network::gate_at(std::size_t i) const {
  const auto* g = std::get_if<Gate>(&layers_.at(i));
  if (!g) throw StructureError("layer " + std::to_string(i) + " is not a gate");
  return g->bsf;
}

void Network::init(std::uint64_t seed) {
  const RngStream root(seed, 0x1417);
  std::uint64_t ordinal = 0;
  for (auto& layer : layers_) {
    if (auto* d = std::get_if<Dense>(&layer)) {
      he_uniform(d->weight, d->in, root.split(ordinal++));
      d->bias.fill(0.0);
    } else if (auto* c = std::get_if<Conv1d>(&layer)) {
      he_uniform(c->weight, c->in_channels * c->kernel, root.split(ordinal++));
      c->bias.fill(0.0);
    }
  }
}

Trace Network::forward(const Tensor& batch, RngStream* rng) const { return run(batch, mode_, rng, {}); }

Trace Network::replay(const Tensor& batch, std::span<const filter::BsfMask> masks) const {
  if (masks.size() != layers_.size()) throw StateError("replay needs one mask slot per layer");
  return run(batch, Mode::train, nullptr, masks);
}

Tensor Network::predict(const Tensor& batch) const { return run(batch, Mode::infer, nullptr, {}).values.back(); }

Trace Network::run(const Tensor& batch, Mode mode, RngStream* rng, std::span<const filter::BsfMask> masks) const {
  if (sample_shape(batch) != input_shape_) {
    throw ShapeError("network expects samples of shape " + shape_string(input_shape_) + ", got batch " +
                     shape_string(batch.shape()));
  }
  const std::size_t n = batch.dim(0);
  Trace trace;
  trace.mode = mode;
  trace.values.reserve(layers_.size() + 1);
  trace.values.push_back(batch);
  trace.masks.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Tensor& x = trace.values.back();
    const Shape& in_shape = shapes_[i];
    Tensor y(with_batch(n, shapes_[i + 1]));
    std::visit(overloaded{
                   [&](const Dense& d) { dense_forward(d, x, y, n); },
                   [&](const Relu&) {
                     for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] > 0.0 ? x[k] : 0.0;
                   },
                   [&](const Conv1d& c) { conv_forward(c, x, y, n, in_shape[1]); },
                   [&](const Flatten&) { y = x.reshaped(y.shape()); },
                   [&](const Gate& g) {
                     if (mode == Mode::infer) {
                       y = filter::forward_infer(x, g.bsf);
                     } else if (!masks.empty()) {
                       y = filter::forward_with_mask(x, g.bsf, masks[i]);
                       trace.masks[i] = masks[i];
                     } else {
                       if (!rng) throw StateError("train-mode forward through a gate needs a random stream");
                       RngStream local = rng->split(i);
                       auto out = filter::forward_train(x, g.bsf, local);
                       y = std::move(out.y);
                       trace.masks[i] = std::move(out.mask);
                     }
                   },
               },
               layers_[i]);
    trace.values.push_back(std::move(y));
  }
  return trace;
}

void Network::zero_grad() {
  for (auto& layer : layers_) {
    std::visit(overloaded{
                   [](Dense& d) {
                     d.grad_weight.fill(0.0);
                     d.grad_bias.fill(0.0);
                   },
                   [](Conv1d& c) {
                     c.grad_weight.fill(0.0);
                     c.grad_bias.fill(0.0);
                   },
                   [](Gate& g) { std::fill(g.grad_p.begin(), g.grad_p.end(), 0.0); },
                   [](auto&) {},
               },
               layer);
  }
}

Tensor Network::backward(const Trace& trace, const Tensor& loss_grad) {
  if (trace.values.size() != layers_.size() + 1 || trace.masks.size() != layers_.size())
    throw StateError("trace was not produced by this network");
  if (loss_grad.shape() != trace.values.back().shape())
    throw ShapeError("loss gradient shape " + shape_string(loss_grad.shape()) + " differs from network output " +
                     shape_string(trace.values.back().shape()));
  const std::size_t n = trace.values.front().dim(0);
  Tensor upstream = loss_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Tensor& x = trace.values[i];
    const Tensor& y = trace.values[i + 1];
    if (y.shape() != upstream.shape() || x.shape() != with_batch(n, shapes_[i]))
      throw StateError("trace does not match the network layout at layer " + std::to_string(i));
    Tensor dx(x.shape());
    std::visit(overloaded{
                   [&](Dense& d) { dense_backward(d, x, upstream, dx, n); },
                   [&](Relu&) {
                     for (std::size_t k = 0; k < x.size(); ++k) dx[k] = x[k] > 0.0 ? upstream[k] : 0.0;
                   },
                   [&](Conv1d& c) { conv_backward(c, x, upstream, dx, n, shapes_[i][1]); },
                   [&](Flatten&) { dx = upstream.reshaped(x.shape()); },
                   [&](Gate& g) {
                     filter::BsfMask mask = trace.masks[i];
                     if (trace.mode == Mode::infer) {
                       // Thresholded pass acts as a fixed 0/1 mask.
                       mask = {std::vector<double>(g.bsf.n_gates()), 1, g.bsf.n_gates()};
                       for (std::size_t j = 0; j < mask.gates; ++j) mask.r[j] = g.bsf.passes(j) ? 1.0 : 0.0;
                     }
                     auto grads = filter::backward(upstream, x, mask, g.bsf);
                     const auto pen = filter::l1_penalty(g.bsf);
                     for (std::size_t j = 0; j < g.grad_p.size(); ++j) g.grad_p[j] += grads.grad_p[j] + pen.grad[j];
                     dx = std::move(grads.grad_x);
                   },
               },
               layers_[i]);
    upstream = std::move(dx);
  }
  return upstream;
}

double Network::penalty() const {
  double total = 0.0;
  for (const auto& layer : layers_)
    if (const auto* g = std::get_if<Gate>(&layer)) total += filter::l1_penalty(g->bsf).value;
  return total;
}

void Network::set_penalties(std::span<const double> lambdas) {
  const auto gates = gate_indices();
  if (lambdas.empty()) return;
  if (lambdas.size() != 1 && lambdas.size() != gates.size())
    throw InputError("expected 1 or " + std::to_string(gates.size()) + " penalty coefficients, got " +
                     std::to_string(lambdas.size()));
  for (std::size_t k = 0; k < gates.size(); ++k) {
    const double v = lambdas.size() == 1 ? lambdas[0] : lambdas[k];
    if (!(v >= 0.0)) throw DomainError("penalty coefficient must be non-negative");
    gate_at(gates[k]).lambda = v;
  }
}

std::vector<ParamView> Network::parameters() {
  std::vector<ParamView> views;
  for (auto& layer : layers_) {
    if (auto* d = std::get_if<Dense>(&layer)) {
      views.push_back({d->weight.data(), d->grad_weight.data()});
      views.push_back({d->bias.data(), d->grad_bias.data()});
    } else if (auto* c = std::get_if<Conv1d>(&layer)) {
      views.push_back({c->weight.data(), c->grad_weight.data()});
      views.push_back({c->bias.data(), c->grad_bias.data()});
    } else if (auto* g = std::get_if<Gate>(&layer)) {
      views.push_back({g->bsf.p, g->grad_p, true, !g->bsf.trainable});
    }
  }
  return views;
}

std::size_t Network::weight_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<Dense>(&layer)) total += d->weight.size() + d->bias.size();
    if (const auto* c = std::get_if<Conv1d>(&layer)) total += c->weight.size() + c->bias.size();
  }
  return total;
}

bool operator==(const Network& a, const Network& b) {
  if (a.input_shape_ != b.input_shape_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const Layer& la = a.layers_[i];
    const Layer& lb = b.layers_[i];
    if (la.index() != lb.index()) return false;
    const bool same = std::visit(
        overloaded{
            [&](const Dense& d) {
              const auto& e = std::get<Dense>(lb);
              return d.weight == e.weight && d.bias == e.bias;
            },
            [&](const Conv1d& c) {
              const auto& e = std::get<Conv1d>(lb);
              return c.stride == e.stride && c.weight == e.weight && c.bias == e.bias;
            },
            [&](const Gate& g) {
              const auto& e = std::get<Gate>(lb).bsf;
              return g.bsf.p == e.p && g.bsf.tau == e.tau && g.bsf.lambda == e.lambda && g.bsf.groups == e.groups &&
                     g.bsf.estimator == e.estimator && g.bsf.mask_mode == e.mask_mode &&
                     g.bsf.trainable == e.trainable;
            },
            [](const auto&) { return true; },
        },
        la);
    if (!same) return false;
  }
  return true;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("argmax_rows expects [n, classes]");
  std::vector<int> out(logits.dim(0));
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace bsf::net
