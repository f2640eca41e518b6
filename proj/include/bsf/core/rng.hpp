#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace bsf {

/**
 * Counter-based random stream keyed by (seed, stream id).
 *
 * Draw number k of a stream is a pure function of (seed, stream id, k): the
 * SplitMix64 finalizer applied to key + (k + 1)·γ. Sequences are therefore
 * identical across runs and platforms. Independent workers get their own
 * stream through split(); a stream is never shared between threads.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller (one value per call).
  double normal() noexcept;
  // Uniform integer in [0, n); n must be positive.
  std::size_t below(std::size_t n) noexcept;

  // Child stream for an independent consumer. Does not advance this stream.
  RngStream split(std::uint64_t child) const noexcept;

  template <typename T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// r_i ~ Bernoulli(p_i), each entry 0 or 1. Throws DomainError if some p_i is
// outside [0, 1].
std::vector<std::uint8_t> bernoulli_sample(std::span<const double> p, RngStream& rng);

}  // namespace bsf
