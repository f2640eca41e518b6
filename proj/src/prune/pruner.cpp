#include "bsf/prune/pruner.hpp"

#include <algorithm>
#include <string>
#include <variant>

#include "bsf/core/error.hpp"

namespace bsf::prune {
namespace {

using net::Conv1d;
using net::Dense;
using net::Flatten;
using net::Gate;
using net::Layer;
using net::Relu;

IndexList kept_of(const std::vector<bool>& keep) {
  IndexList idx;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) idx.push_back(i);
  return idx;
}

void drop_dense_outputs(Dense& d, const std::vector<bool>& keep) {
  const IndexList cols = kept_of(keep);
  Dense out(d.in, cols.size());
  for (std::size_t k = 0; k < d.in; ++k)
    for (std::size_t j = 0; j < cols.size(); ++j) out.weight.at(k, j) = d.weight.at(k, cols[j]);
  for (std::size_t j = 0; j < cols.size(); ++j) out.bias[j] = d.bias[cols[j]];
  d = std::move(out);
}

void drop_dense_inputs(Dense& d, const std::vector<bool>& keep) {
  const IndexList rows = kept_of(keep);
  Dense out(rows.size(), d.out);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < d.out; ++j) out.weight.at(r, j) = d.weight.at(rows[r], j);
  out.bias = d.bias;
  d = std::move(out);
}

void drop_conv_outputs(Conv1d& c, const std::vector<bool>& keep) {
  const IndexList chans = kept_of(keep);
  Conv1d out(c.in_channels, chans.size(), c.kernel, c.stride);
  const std::size_t block = c.in_channels * c.kernel;
  for (std::size_t o = 0; o < chans.size(); ++o) {
    std::copy_n(c.weight.data().begin() + static_cast<std::ptrdiff_t>(chans[o] * block), block,
                out.weight.data().begin() + static_cast<std::ptrdiff_t>(o * block));
    out.bias[o] = c.bias[chans[o]];
  }
  c = std::move(out);
}

void drop_conv_inputs(Conv1d& c, const std::vector<bool>& keep) {
  const IndexList chans = kept_of(keep);
  Conv1d out(chans.size(), c.out_channels, c.kernel, c.stride);
  for (std::size_t o = 0; o < c.out_channels; ++o)
    for (std::size_t i = 0; i < chans.size(); ++i)
      for (std::size_t k = 0; k < c.kernel; ++k)
        out.weight[(o * chans.size() + i) * c.kernel + k] = c.weight[(o * c.in_channels + chans[i]) * c.kernel + k];
  out.bias = c.bias;
  c = std::move(out);
}

// Channel layout of a per-sample shape: rank 1 -> n channels of 1 position,
// rank 2 -> [channels, length].
struct Channels {
  std::size_t count;
  std::size_t length;
};

Channels channels_of(const net::Shape& s, std::size_t gate_layer) {
  if (s.size() == 1) return {s[0], 1};
  if (s.size() == 2) return {s[0], s[1]};
  throw StructureError("gate at layer " + std::to_string(gate_layer) + " acts on an unsupported shape");
}

}  // namespace

PruneResult prune(const net::Network& net) {
  std::vector<Layer> layers = net.layers();
  PruneReport report;
  report.original_input_shape = net.input_shape();
  report.original_weights = net.weight_count();

  const Channels input_ch = channels_of(net.input_shape(), 0);
  std::vector<bool> input_keep(input_ch.count, true);

  for (std::size_t g : net.gate_indices()) {
    const auto& bsf = net.gate_at(g);
    const net::Shape& shape = net.shape_before(g);
    const Channels ch = channels_of(shape, g);
    const auto pass = filter::passing_positions(bsf);

    // Channel c survives iff one of its positions passes; a channel that is
    // only partly dropped cannot be removed structurally.
    std::vector<bool> keep(ch.count, false);
    for (std::size_t c = 0; c < ch.count; ++c) {
      std::size_t passed = 0;
      for (std::size_t l = 0; l < ch.length; ++l) passed += pass[c * ch.length + l];
      if (passed != 0 && passed != ch.length)
        throw StructureError("gate at layer " + std::to_string(g) +
                             " drops part of a channel; only whole channels or units can be pruned");
      keep[c] = passed == ch.length;
    }
    const std::size_t kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    report.gates.push_back({g, kept, ch.count, bsf.p});
    if (kept == 0)
      throw DegenerateModelError("gate at layer " + std::to_string(g) +
                                 " keeps no unit; the penalty is too large for this model");

    // Producer side.
    std::size_t j = g;
    while (j > 0 && std::holds_alternative<Relu>(layers[j - 1])) --j;
    if (j == 0) {
      for (std::size_t c = 0; c < ch.count; ++c) input_keep[c] = input_keep[c] && keep[c];
    } else if (auto* d = std::get_if<Dense>(&layers[j - 1])) {
      drop_dense_outputs(*d, keep);
    } else if (auto* c = std::get_if<Conv1d>(&layers[j - 1])) {
      drop_conv_outputs(*c, keep);
    } else {
      throw StructureError("gate at layer " + std::to_string(g) + " follows a " + net::layer_name(layers[j - 1]) +
                           " layer, which cannot be pruned");
    }

    // Consumer side.
    std::size_t k = g + 1;
    bool flattened = false;
    while (k < layers.size() && (std::holds_alternative<Relu>(layers[k]) || std::holds_alternative<Flatten>(layers[k]))) {
      flattened = flattened || std::holds_alternative<Flatten>(layers[k]);
      ++k;
    }
    if (k == layers.size())
      throw StructureError("gate at layer " + std::to_string(g) + " has no dense or conv layer after it");
    if (auto* d = std::get_if<Dense>(&layers[k])) {
      std::vector<bool> rows(ch.count * ch.length);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = keep[i / ch.length];
      drop_dense_inputs(*d, rows);
    } else if (auto* c = std::get_if<Conv1d>(&layers[k]); c && !flattened) {
      drop_conv_inputs(*c, keep);
    } else {
      throw StructureError("gate at layer " + std::to_string(g) + " feeds a " + net::layer_name(layers[k]) +
                           " layer, which cannot be pruned");
    }
  }

  report.input_channels_kept = kept_of(input_keep);
  if (report.input_channels_kept.empty()) throw DegenerateModelError("pruning removed every input feature");
  net::Shape input = net.input_shape();
  input[0] = report.input_channels_kept.size();

  net::Network pruned(input);
  for (auto& layer : layers)
    if (!std::holds_alternative<Gate>(layer)) pruned.add(std::move(layer));
  pruned.set_mode(net::Mode::infer);
  report.kept_weights = pruned.weight_count();
  report.weights_kept_fraction = report.original_weights == 0
                                     ? 1.0
                                     : static_cast<double>(report.kept_weights) /
                                           static_cast<double>(report.original_weights);
  return {std::move(pruned), std::move(report)};
}

Tensor restrict_input(const Tensor& batch, const PruneReport& report) {
  const auto& shape = report.original_input_shape;
  if (batch.rank() != shape.size() + 1 || !std::equal(shape.begin(), shape.end(), batch.shape().begin() + 1))
    throw ShapeError("batch does not have the original input layout " + shape_string(shape));
  const std::size_t n = batch.dim(0);
  const std::size_t length = shape.size() == 2 ? shape[1] : 1;
  const auto& kept = report.input_channels_kept;
  net::Shape out_shape = batch.shape();
  out_shape[1] = kept.size();
  Tensor out(out_shape);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < kept.size(); ++c)
      for (std::size_t l = 0; l < length; ++l)
        out[(b * kept.size() + c) * length + l] = batch[(b * shape[0] + kept[c]) * length + l];
  return out;
}

std::vector<double> normalized_penalties(const net::Network& net, double base_lambda) {
  if (!(base_lambda >= 0.0)) throw DomainError("base penalty must be non-negative");
  std::vector<double> out;
  for (std::size_t g : net.gate_indices()) out.push_back(base_lambda / static_cast<double>(net.gate_at(g).n_gates()));
  return out;
}

}  // namespace bsf::prune
