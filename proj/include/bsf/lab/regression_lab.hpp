#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsf/core/rng.hpp"
#include "bsf/core/tensor.hpp"

namespace bsf::lab {

/**
 * Linear-regression data (X, y) for studying the gated objective
 *
 *   E_R ‖y − (R∘X)w‖² + λ‖p‖₁,   R_ij ~ Bernoulli(p_j) i.i.d.
 *
 * Columns of X are centered on construction unless `centering` says
 * otherwise. gamma_j = sqrt(Σ_i X_ij²), the square root of the diagonal of
 * XᵀX of the stored (possibly centered) matrix. The expectation identity
 * holds either way.
 */
enum class Centering { center, as_given };

class ObjectiveInstance {
 public:
  ObjectiveInstance(Tensor x, std::vector<double> y, Centering centering = Centering::center);

  // Standard normal X (then centered) and y.
  static ObjectiveInstance random(std::size_t n, std::size_t d, RngStream& rng);

  const Tensor& x() const noexcept { return x_; }
  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<double>& gamma() const noexcept { return gamma_; }
  std::size_t rows() const noexcept { return x_.dim(0); }
  std::size_t features() const noexcept { return x_.dim(1); }

 private:
  Tensor x_;
  std::vector<double> y_;
  std::vector<double> gamma_;
};

// ‖y − X(w∘p)‖² + ‖Γ(w∘√(p∘(1−p)))‖² + λ‖p‖₁
double analytic_objective(const ObjectiveInstance& inst, std::span<const double> w, std::span<const double> p,
                          double lambda);

// Exact expectation by enumerating, for every row, all 2^d gate patterns with
// probability Π p_j^r_j (1−p_j)^(1−r_j). Throws CapacityError for d > 20.
double brute_force_objective(const ObjectiveInstance& inst, std::span<const double> w, std::span<const double> p,
                             double lambda);

inline constexpr std::size_t kMaxEnumeratedFeatures = 20;

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Sample mean and standard error over `draws` independent gate matrices.
// The penalty λ‖p‖₁ is added to the mean after averaging.
MonteCarloEstimate monte_carlo_objective(const ObjectiveInstance& inst, std::span<const double> w,
                                         std::span<const double> p, double lambda, std::size_t draws,
                                         RngStream& rng);

// ∂/∂p of analytic_objective:
//   −2·(Xᵀy − XᵀX(w∘p))∘w + Γ²∘w²∘(1−2p) + λ·sign(p)
std::vector<double> analytic_gradient_p(const ObjectiveInstance& inst, std::span<const double> w,
                                        std::span<const double> p, double lambda);

// ∂/∂p of the data term ‖y − X(w∘p)‖² alone: −2·(Xᵀy − XᵀX(w∘p))∘w. This is
// the mean of the plain gate-gradient estimator for a linear model; it differs
// from analytic_gradient_p (λ = 0) by Γ²∘w²∘(1−2p).
std::vector<double> data_term_gradient_p(const ObjectiveInstance& inst, std::span<const double> w,
                                         std::span<const double> p);

}  // namespace bsf::lab
