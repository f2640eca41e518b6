#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsf/core/rng.hpp"

namespace bsf {

using IndexList = std::vector<std::size_t>;

// Number of distinct classes implied by labels (max + 1). Labels must be >= 0.
std::size_t count_classes(std::span<const int> labels);

/**
 * Stratified k-fold partition of [0, labels.size()).
 *
 * Each class is shuffled with `rng` and dealt round-robin over the folds; the
 * dealing position carries over from one class to the next so fold sizes
 * differ by at most one. Returns the held-out indices of each fold, sorted.
 * Throws InputError if k < 2 or some present class has fewer than k members.
 */
std::vector<IndexList> stratified_folds(std::span<const int> labels, std::size_t k, RngStream rng);

struct Holdout {
  IndexList train;
  IndexList validation;
};

// Per-class proportional holdout; round(fraction · n_c) members of each class
// go to validation, but never all of them. Both lists are sorted.
Holdout stratified_holdout(std::span<const int> labels, double fraction, RngStream rng);

// Complement of `held_out` in [0, n), sorted.
IndexList complement(std::span<const std::size_t> held_out, std::size_t n);

}  // namespace bsf
