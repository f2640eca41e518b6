#include "bsf/net/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsf/core/error.hpp"

namespace bsf::net {

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy expects [n, classes] logits");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) throw ShapeError("label count differs from logit rows");
  if (n == 0) throw ShapeError("softmax_cross_entropy on an empty batch");
  LossResult out{0.0, Tensor(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= c)
      throw DomainError("label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
    const auto row = logits.row(r);
    const double hi = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - hi);
    const double log_z = hi + std::log(z);
    out.loss += log_z - row[static_cast<std::size_t>(label)];
    auto g = out.grad.row(r);
    for (std::size_t j = 0; j < c; ++j) g[j] = std::exp(row[j] - log_z) * inv_n;
    g[static_cast<std::size_t>(label)] -= inv_n;
  }
  out.loss *= inv_n;
  return out;
}

LossResult squared_error(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) throw ShapeError("squared_error: shape mismatch");
  LossResult out{0.0, Tensor(prediction.shape())};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    out.loss += d * d;
    out.grad[i] = 2.0 * d;
  }
  return out;
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace bsf::net
