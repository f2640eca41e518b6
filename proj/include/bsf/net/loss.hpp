#pragma once

#include <span>

#include "bsf/core/tensor.hpp"

namespace bsf::net {

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Mean cross-entropy of softmax(logits) against integer labels, with
// grad = (softmax - onehot) / n. Throws DomainError for labels outside [0, c).
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Σ‖prediction - target‖² with gradient 2·(prediction - target).
LossResult squared_error(const Tensor& prediction, const Tensor& target);

double accuracy(std::span<const int> truth, std::span<const int> predicted);

}  // namespace bsf::net
