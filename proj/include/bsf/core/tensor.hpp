#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bsf {

/**
 * Dense row-major array of doubles.
 *
 * The last axis is contiguous. A default-constructed tensor has rank 0 and a
 * single element, which keeps product(shape) == size() without a special case.
 */
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  // Rank-2 element access.
  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

  // Number of elements per leading-axis slice.
  std::size_t row_size() const noexcept;
  std::span<double> row(std::size_t r) noexcept;
  std::span<const double> row(std::size_t r) const noexcept;

  Tensor reshaped(Shape shape) const;
  void fill(double value) noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const Tensor::Shape& shape) noexcept;
std::string shape_string(const Tensor::Shape& shape);

// C = A·B for rank-2 operands. For every output element the products are
// accumulated in increasing inner-index order, so the result is identical to
// the naive triple loop, including when zero terms are dropped from the sum.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Gather slices along axis 0.
Tensor take_rows(const Tensor& a, std::span<const std::size_t> rows);
// Gather columns of a rank-2 tensor.
Tensor take_columns(const Tensor& a, std::span<const std::size_t> cols);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace bsf
