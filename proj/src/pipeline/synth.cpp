#include "bsf/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bsf/core/error.hpp"

namespace bsf::pipeline {
namespace {

double gaussian(double t, double centre, double width) {
  const double z = (t - centre) / width;
  return std::exp(-0.5 * z * z);
}

void name_columns(Dataset& data, std::size_t d, std::size_t n_classes, const char* prefix) {
  data.feature_names.clear();
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back(prefix + std::to_string(j));
  data.class_names.clear();
  for (std::size_t c = 0; c < n_classes; ++c) data.class_names.push_back(std::to_string(c));
  data.n_classes = n_classes;
}

}  // namespace

InformativeData make_informative_classification(const InformativeSpec& spec) {
  if (spec.informative > spec.d) throw InputError("more informative features than features");
  if (spec.n_classes < 2) throw InputError("need at least two classes");
  if (spec.n == 0 || spec.d == 0) throw InputError("empty synthetic dataset requested");
  RngStream rng(spec.seed, 0x5E1EC7);

  IndexList cols(spec.d);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(cols));
  IndexList informative(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(spec.informative));
  std::sort(informative.begin(), informative.end());

  const double half = spec.class_sep / 2.0;
  std::vector<std::vector<double>> centroid(spec.n_classes, std::vector<double>(spec.informative));
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    for (std::size_t j = 0; j < spec.informative; ++j) {
      if (spec.n_classes == 2 && c == 1) {
        centroid[1][j] = -centroid[0][j];
      } else {
        centroid[c][j] = rng.uniform() < 0.5 ? -half : half;
      }
    }
  }

  InformativeData out;
  Dataset& data = out.data;
  data.x = Tensor({spec.n, spec.d});
  data.y.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto label = i % spec.n_classes;
    data.y[i] = static_cast<int>(label);
    for (std::size_t j = 0; j < spec.d; ++j) data.x.at(i, j) = rng.normal();
    for (std::size_t j = 0; j < spec.informative; ++j) data.x.at(i, informative[j]) += centroid[label][j];
  }
  name_columns(data, spec.d, spec.n_classes, "f");
  out.informative = std::move(informative);
  return out;
}

SpectraData make_synthetic_spectra(const SpectraSpec& spec) {
  if (spec.class_peaks.size() != spec.n_classes)
    throw InputError("need one peak list per class (" + std::to_string(spec.n_classes) + ")");
  if (spec.n == 0 || spec.length == 0) throw InputError("empty synthetic spectra requested");
  const auto length = static_cast<double>(spec.length);
  auto check = [&](double pos) {
    if (!(pos >= 0.0 && pos < length))
      throw DomainError("peak centre " + std::to_string(pos) + " outside [0, " + std::to_string(spec.length) + ")");
  };
  for (const auto& peaks : spec.class_peaks) std::for_each(peaks.begin(), peaks.end(), check);
  std::for_each(spec.nuisance_peaks.begin(), spec.nuisance_peaks.end(), check);

  RngStream rng(spec.seed, 0x5BEC7A);
  SpectraData out;
  Dataset& data = out.data;
  data.x = Tensor({spec.n, spec.length});
  data.y.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto label = i % spec.n_classes;
    data.y[i] = static_cast<int>(label);
    const double offset = rng.uniform(0.0, 0.2);
    const double slope = rng.uniform(-0.1, 0.1);
    std::vector<double> amp_class;
    for (std::size_t k = 0; k < spec.class_peaks[label].size(); ++k) amp_class.push_back(rng.uniform(0.8, 1.2));
    std::vector<double> amp_nuisance;
    for (std::size_t k = 0; k < spec.nuisance_peaks.size(); ++k) amp_nuisance.push_back(rng.uniform(0.5, 1.5));
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double pos = static_cast<double>(t);
      double v = offset + slope * pos / length;
      for (std::size_t k = 0; k < amp_class.size(); ++k)
        v += amp_class[k] * gaussian(pos, spec.class_peaks[label][k], spec.peak_width);
      for (std::size_t k = 0; k < amp_nuisance.size(); ++k)
        v += amp_nuisance[k] * gaussian(pos, spec.nuisance_peaks[k], spec.peak_width);
      data.x.at(i, t) = v + spec.noise * rng.normal();
    }
  }
  name_columns(data, spec.length, spec.n_classes, "x");

  out.region_mask.assign(spec.length, false);
  for (const auto& peaks : spec.class_peaks)
    for (double centre : peaks)
      for (std::size_t t = 0; t < spec.length; ++t)
        if (std::abs(static_cast<double>(t) - centre) <= 2.0 * spec.peak_width) out.region_mask[t] = true;
  return out;
}

SpectraSpec default_spectra_layout(std::size_t length, std::size_t n_classes) {
  SpectraSpec spec;
  spec.length = length;
  spec.n_classes = n_classes;
  const double step = static_cast<double>(length) / static_cast<double>(n_classes + 1);
  spec.class_peaks.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) spec.class_peaks[c] = {std::round(step * static_cast<double>(c + 1))};
  spec.nuisance_peaks.push_back(std::round(step * 0.5));
  for (std::size_t c = 1; c < n_classes; ++c) spec.nuisance_peaks.push_back(std::round(step * (static_cast<double>(c) + 0.5)));
  spec.nuisance_peaks.push_back(std::round(step * (static_cast<double>(n_classes) + 0.5)));
  return spec;
}

}  // namespace bsf::pipeline
