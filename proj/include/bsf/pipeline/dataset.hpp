#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bsf/core/stratify.hpp"
#include "bsf/core/tensor.hpp"

namespace bsf::pipeline {

// Labelled tabular data: x is [n, d], labels are contiguous class ids.
struct Dataset {
  Tensor x{Tensor::Shape{0, 0}};
  std::vector<int> y;
  std::size_t n_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  // Rows dropped while loading because a cell was missing or unparsable.
  std::size_t rejected_rows = 0;

  std::size_t rows() const noexcept { return x.dim(0); }
  std::size_t features() const noexcept { return x.dim(1); }

  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset select_features(std::span<const std::size_t> columns) const;
};

struct CsvOptions {
  // Empty selects the last column.
  std::string label_column;
  char delimiter = ',';
};

/**
 * Reads a headed CSV file. Every column except the label must be numeric.
 * Labels are treated as categories and mapped to 0..k-1 in sorted order
 * (numeric order when every label parses as a number). Rows with a wrong
 * field count, an empty cell, an unparsable or non-finite number are skipped
 * and counted in rejected_rows. Throws InputError when nothing is left.
 */
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset parse_csv(const std::string& text, const CsvOptions& options = {});

// Writes features then the label column (class names), reals with 17
// significant digits so that load_csv reproduces x exactly.
void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& label_column = "label");
std::string to_csv(const Dataset& data, const std::string& label_column = "label");

// Per-feature z-scoring fitted on a subset of rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  // Zero-variance features get scale 1.
  static Standardizer fit(const Tensor& x, std::span<const std::size_t> rows);
  Tensor apply(const Tensor& x) const;
};

// Stratified folds of the dataset, deterministic in `seed`.
std::vector<IndexList> stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed);

}  // namespace bsf::pipeline
