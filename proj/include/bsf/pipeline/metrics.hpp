#pragma once

#include <cstddef>
#include <span>

namespace bsf::pipeline {

/**
 * Unweighted mean of per-class F1 = 2PR / (P + R).
 *
 * A class that occurs neither in y_true nor in y_pred is left out of the
 * mean; a class with P + R = 0 scores 0. Returns 0 when no class is present.
 */
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes);

}  // namespace bsf::pipeline
