#pragma once

#include <cstddef>
#include <vector>

#include "bsf/core/stratify.hpp"
#include "bsf/net/network.hpp"

namespace bsf::prune {

struct GatePruneStats {
  // Index of the gate in the original network.
  std::size_t layer = 0;
  std::size_t kept_units = 0;
  std::size_t total_units = 0;
  std::vector<double> gate_values;
};

struct PruneReport {
  std::vector<GatePruneStats> gates;
  std::size_t original_weights = 0;
  std::size_t kept_weights = 0;
  double weights_kept_fraction = 1.0;
  // Input channels (features, for rank-1 inputs) the pruned network still
  // reads, ascending. Feed pruned networks with restrict_input().
  IndexList input_channels_kept;
  net::Shape original_input_shape;
};

struct PruneResult {
  net::Network pruned;
  PruneReport report;
};

/**
 * Removes every gate and the units it switches off.
 *
 * A gate must read from the network input, a dense layer or a conv layer
 * (optionally through ReLUs), and feed a dense layer (optionally through
 * ReLUs and a flatten) or a conv layer. Units with p <= tau are deleted: the
 * producer loses the corresponding outputs (dense columns, conv output
 * channels, input features) and the consumer the corresponding inputs (dense
 * rows, conv input channels). Dropped positions must cover whole channels.
 * Only terms multiplied by an exact zero disappear, so the pruned network
 * reproduces the thresholded predictions of the original bit for bit.
 *
 * Throws StructureError for unsupported neighbourhoods and
 * DegenerateModelError if some layer would keep no unit. `net` is not modified.
 */
PruneResult prune(const net::Network& net);

// Selects the input channels kept by a pruning from an original-layout batch.
Tensor restrict_input(const Tensor& batch, const PruneReport& report);

// base_lambda divided by the number of gates of each gate layer, in order.
std::vector<double> normalized_penalties(const net::Network& net, double base_lambda);

}  // namespace bsf::prune
