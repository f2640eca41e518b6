#include "bsf/core/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsf/core/error.hpp"

namespace bsf {
namespace {

std::vector<IndexList> group_by_class(std::span<const int> labels) {
  std::vector<IndexList> by_class(count_classes(labels));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  return by_class;
}

}  // namespace

std::size_t count_classes(std::span<const int> labels) {
  int hi = -1;
  for (int l : labels) {
    if (l < 0) throw DomainError("negative class label " + std::to_string(l));
    hi = std::max(hi, l);
  }
  return static_cast<std::size_t>(hi + 1);
}

std::vector<IndexList> stratified_folds(std::span<const int> labels, std::size_t k, RngStream rng) {
  if (k < 2) throw InputError("stratified k-fold needs k >= 2, got " + std::to_string(k));
  auto by_class = group_by_class(labels);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty() && by_class[c].size() < k) {
      throw InputError("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                       " members, fewer than k = " + std::to_string(k));
    }
  }
  std::vector<IndexList> folds(k);
  std::size_t slot = 0;
  for (auto& members : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) {
      folds[slot].push_back(idx);
      slot = (slot + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

Holdout stratified_holdout(std::span<const int> labels, double fraction, RngStream rng) {
  Holdout h;
  if (!(fraction > 0.0)) {
    h.train.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) h.train[i] = i;
    return h;
  }
  auto by_class = group_by_class(labels);
  for (auto& members : by_class) {
    if (members.empty()) continue;
    rng.shuffle(std::span<std::size_t>(members));
    auto n_val = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    n_val = std::min(n_val, members.size() - 1);
    h.validation.insert(h.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    h.train.insert(h.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(h.train.begin(), h.train.end());
  std::sort(h.validation.begin(), h.validation.end());
  return h;
}

IndexList complement(std::span<const std::size_t> held_out, std::size_t n) {
  std::vector<bool> out(n, false);
  for (std::size_t i : held_out) out.at(i) = true;
  IndexList rest;
  rest.reserve(n - held_out.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!out[i]) rest.push_back(i);
  return rest;
}

}  // namespace bsf
