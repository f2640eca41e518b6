#include "bsf/lab/regression_lab.hpp"

#include <cmath>
#include <string>

#include "bsf/core/error.hpp"

namespace bsf::lab {
namespace {

void check_args(const ObjectiveInstance& inst, std::span<const double> w, std::span<const double> p, double lambda) {
  const std::size_t d = inst.features();
  if (w.size() != d || p.size() != d)
    throw ShapeError("objective: expected " + std::to_string(d) + " weights and gates, got " +
                     std::to_string(w.size()) + " and " + std::to_string(p.size()));
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("gate probability outside [0,1]");
  if (!(lambda >= 0.0)) throw DomainError("penalty coefficient must be non-negative");
}

double l1(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += std::abs(v);
  return s;
}

// Residuals y − X(w∘p).
std::vector<double> mean_residuals(const ObjectiveInstance& inst, std::span<const double> w, std::span<const double> p) {
  std::vector<double> r(inst.rows());
  for (std::size_t i = 0; i < inst.rows(); ++i) {
    double pred = 0.0;
    for (std::size_t j = 0; j < inst.features(); ++j) pred += inst.x().at(i, j) * w[j] * p[j];
    r[i] = inst.y()[i] - pred;
  }
  return r;
}

}  // namespace

ObjectiveInstance::ObjectiveInstance(Tensor x, std::vector<double> y, Centering centering)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rank() != 2) throw ShapeError("objective instance needs a data matrix");
  if (y_.size() != x_.dim(0)) throw ShapeError("target length differs from row count");
  const std::size_t n = x_.dim(0), d = x_.dim(1);
  gamma_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    if (centering == Centering::center) {
      for (std::size_t i = 0; i < n; ++i) mean += x_.at(i, j);
      mean /= static_cast<double>(n);
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x_.at(i, j) -= mean;
      ss += x_.at(i, j) * x_.at(i, j);
    }
    gamma_[j] = std::sqrt(ss);
  }
}

ObjectiveInstance ObjectiveInstance::random(std::size_t n, std::size_t d, RngStream& rng) {
  Tensor x({n, d});
  for (double& v : x.data()) v = rng.normal();
  std::vector<double> y(n);
  for (double& v : y) v = rng.normal();
  return ObjectiveInstance(std::move(x), std::move(y));
}

double analytic_objective(const ObjectiveInstance& inst, std::span<const double> w, std::span<const double> p,
                          double lambda) {
  check_args(inst, w, p, lambda);
  double data = 0.0;
  for (double r : mean_residuals(inst, w, p)) data += r * r;
  double ridge = 0.0;
  for (std::size_t j = 0; j < inst.features(); ++j) {
    const double t = inst.gamma()[j] * w[j] * std::sqrt(p[j] * (1.0 - p[j]));
    ridge += t * t;
  }
  return data + ridge + lambda * l1(p);
}

double brute_force_objective(const ObjectiveInstance& inst, std::span<const double> w, std::span<const double> p,
                             double lambda) {
  check_args(inst, w, p, lambda);
  const std::size_t d = inst.features();
  if (d > kMaxEnumeratedFeatures)
    throw CapacityError("brute force enumeration is limited to " + std::to_string(kMaxEnumeratedFeatures) +
                        " features, got " + std::to_string(d));
  const std::size_t patterns = std::size_t{1} << d;
  std::vector<double> prob(patterns);
  for (std::size_t m = 0; m < patterns; ++m) {
    double pr = 1.0;
    for (std::size_t j = 0; j < d; ++j) pr *= (m >> j) & 1U ? p[j] : 1.0 - p[j];
    prob[m] = pr;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < inst.rows(); ++i) {
    double row_expectation = 0.0;
    for (std::size_t m = 0; m < patterns; ++m) {
      if (prob[m] == 0.0) continue;
      double pred = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        if ((m >> j) & 1U) pred += inst.x().at(i, j) * w[j];
      const double r = inst.y()[i] - pred;
      row_expectation += prob[m] * r * r;
    }
    total += row_expectation;
  }
  return total + lambda * l1(p);
}

MonteCarloEstimate monte_carlo_objective(const ObjectiveInstance& inst, std::span<const double> w,
                                         std::span<const double> p, double lambda, std::size_t draws,
                                         RngStream& rng) {
  check_args(inst, w, p, lambda);
  if (draws < 2) throw InputError("monte carlo estimate needs at least 2 draws");
  const std::size_t n = inst.rows(), d = inst.features();
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = bernoulli_sample(p, rng);
      double pred = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        if (r[j]) pred += inst.x().at(i, j) * w[j];
      const double res = inst.y()[i] - pred;
      value += res * res;
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (value - mean);
  }
  const double var = m2 / static_cast<double>(draws - 1);
  return {mean + lambda * l1(p), std::sqrt(var / static_cast<double>(draws))};
}

std::vector<double> data_term_gradient_p(const ObjectiveInstance& inst, std::span<const double> w,
                                         std::span<const double> p) {
  check_args(inst, w, p, 0.0);
  const auto res = mean_residuals(inst, w, p);
  std::vector<double> g(inst.features(), 0.0);
  for (std::size_t j = 0; j < inst.features(); ++j) {
    double xtr = 0.0;
    for (std::size_t i = 0; i < inst.rows(); ++i) xtr += inst.x().at(i, j) * res[i];
    g[j] = -2.0 * xtr * w[j];
  }
  return g;
}

std::vector<double> analytic_gradient_p(const ObjectiveInstance& inst, std::span<const double> w,
                                        std::span<const double> p, double lambda) {
  check_args(inst, w, p, lambda);
  auto g = data_term_gradient_p(inst, w, p);
  for (std::size_t j = 0; j < inst.features(); ++j) {
    const double gw = inst.gamma()[j] * w[j];
    g[j] += gw * gw * (1.0 - 2.0 * p[j]);
    g[j] += p[j] > 0.0 ? lambda : (p[j] < 0.0 ? -lambda : 0.0);
  }
  return g;
}

}  // namespace bsf::lab
