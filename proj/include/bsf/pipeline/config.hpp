#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bsf/lab/lab_run.hpp"
#include "bsf/pipeline/synth.hpp"
#include "bsf/pipeline/workflows.hpp"

namespace bsf::pipeline {

/*
 * Experiment configuration file.
 *
 *   file    := { line }
 *   line    := blank | comment | section | entry
 *   comment := ('#' | ';') any text
 *   section := '[' name ']'
 *   entry   := key '=' value
 *
 * Whitespace around names, keys and values is ignored. Every entry belongs to
 * the last section header above it. Sections and their keys:
 *
 *   [train]      learning_rate optimizer(sgd|adam) beta1 beta2 epsilon
 *                batch_size max_epochs patience validation_fraction
 *   [experiment] tau folds fold_limit standardize(true|false) seed
 *                estimator(scaled|plain) mask_mode(per_batch|per_sample) threads
 *   [select]     lambda hidden
 *   [prune]      lambda hidden
 *   [regions]    lambda channels kernel
 *   [lab]        rows features lambda draws seed
 *   [synth]      kind(informative|spectra) rows features informative
 *                class_sep classes length noise peak_width seed
 *                class_peaks nuisance_peaks
 *
 * Lists are comma separated. `lambda` also accepts `grid` (1e-5 ... 1e-1, nine
 * geometric points) and `geom:<lo>:<hi>:<points>`. `class_peaks` separates
 * classes with '|', e.g. `85 | 171`. Unknown sections or keys, entries
 * outside a section and repeated keys are errors.
 */
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& section) const { return sections_.count(section) != 0; }
  const std::map<std::string, std::string>& section(const std::string& name) const;

  void apply(net::TrainConfig& cfg) const;
  void apply(ExperimentConfig& cfg) const;
  void apply(FeatureSelectionConfig& cfg) const;
  void apply(PruningConfig& cfg) const;
  void apply(RegionConfig& cfg) const;
  void apply(lab::LabConfig& cfg) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Parsers for single values, shared with the CLI.
double parse_double(const std::string& text, const std::string& what);
std::size_t parse_size(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);
std::vector<double> parse_lambda_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what);

struct SynthConfig {
  std::string kind = "informative";
  InformativeSpec informative;
  SpectraSpec spectra = default_spectra_layout(256, 2);
};
void apply_synth(const ConfigFile& file, SynthConfig& cfg);

}  // namespace bsf::pipeline
