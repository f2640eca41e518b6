#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "bsf/net/network.hpp"

namespace bsf::net {

inline constexpr int kCheckpointVersion = 1;

/*
 * Plain-text checkpoint, whitespace separated, one record per line:
 *
 *   bsfnet <version>
 *   input <rank> <extents...>
 *   layers <count>
 *   dense <in> <out>
 *   weight <in*out values, row-major [in, out]>
 *   bias <out values>
 *   relu
 *   conv1d <in_channels> <out_channels> <kernel> <stride>
 *   weight <values, row-major [out, in, kernel]>
 *   bias <out values>
 *   flatten
 *   bsf <gates> <positions> <tau> <lambda> <plain|scaled> <per_batch|per_sample> <trainable 0|1>
 *   groups <positions gate indices>
 *   p <gates values>
 *   end
 *
 * Reals are written as C99 hexadecimal floats, so a save/load round trip is
 * bit-exact. Optimizer state and gradients are not stored.
 */
void save_checkpoint(const Network& net, std::ostream& os);
Network load_checkpoint(std::istream& is);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

std::string to_checkpoint_string(const Network& net);
Network from_checkpoint_string(const std::string& text);

}  // namespace bsf::net
