#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsf/core/stratify.hpp"
#include "bsf/pipeline/dataset.hpp"

namespace bsf::pipeline {

struct InformativeSpec {
  std::size_t n = 1000;
  std::size_t d = 20;
  std::size_t informative = 5;
  double class_sep = 3.0;
  std::size_t n_classes = 2;
  std::uint64_t seed = 0;
};

struct InformativeData {
  Dataset data;
  IndexList informative;
};

/**
 * Gaussian classes on hypercube vertices.
 *
 * `informative` feature positions are chosen at random. Class c has centroid
 * (class_sep / 2)·s_c on those features, s_c a sign vector (for two classes
 * s_1 = −s_0); the informative features of a sample are its centroid plus
 * unit Gaussian noise. The other features are independent N(0, 1) and carry
 * no information about the label. Labels cycle 0, 1, ..., n_classes − 1.
 */
InformativeData make_informative_classification(const InformativeSpec& spec);

struct SpectraSpec {
  std::size_t n = 400;
  std::size_t length = 256;
  std::size_t n_classes = 2;
  // Centres of the discriminative peaks of each class.
  std::vector<std::vector<double>> class_peaks;
  // Peaks present in every class with random amplitude.
  std::vector<double> nuisance_peaks;
  double peak_width = 3.0;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

struct SpectraData {
  // [n, length]; reshape to [n, 1, length] for convolutional models.
  Dataset data;
  // Positions within 2·peak_width of a discriminative peak.
  std::vector<bool> region_mask;
};

/**
 * Spectrum = smooth linear baseline + class peaks (amplitude U(0.8, 1.2)) +
 * nuisance peaks (amplitude U(0.5, 1.5)) + N(0, noise²) per position. Peaks
 * are Gaussian with standard deviation peak_width. Throws DomainError for
 * peak centres outside [0, length).
 */
SpectraData make_synthetic_spectra(const SpectraSpec& spec);

// Evenly spread default layout: one discriminative peak per class at
// (c + 1)·length / (n_classes + 1) and nuisance peaks between them.
SpectraSpec default_spectra_layout(std::size_t length, std::size_t n_classes);

}  // namespace bsf::pipeline
