#include "bsf/pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bsf/core/error.hpp"

namespace bsf::pipeline {
namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"train",
       {"learning_rate", "optimizer", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "patience",
        "validation_fraction"}},
      {"experiment", {"tau", "folds", "fold_limit", "standardize", "seed", "estimator", "mask_mode", "threads"}},
      {"select", {"lambda", "hidden"}},
      {"prune", {"lambda", "hidden"}},
      {"regions", {"lambda", "channels", "kernel"}},
      {"lab", {"rows", "features", "lambda", "draws", "seed"}},
      {"synth",
       {"kind", "rows", "features", "informative", "class_sep", "classes", "length", "noise", "peak_width", "seed",
        "class_peaks", "nuisance_peaks"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(text, ','))
    if (!item.empty()) out.push_back(parse_double(item, what));
  return out;
}

template <typename F>
void with(const std::map<std::string, std::string>& sec, const std::string& key, F&& f) {
  if (const auto it = sec.find(key); it != sec.end()) f(it->second);
}

}  // namespace

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw InputError(what + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw InputError(what + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  return static_cast<std::size_t>(parse_u64(text, what));
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw InputError(what + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_lambda_list(const std::string& text) {
  const std::string t = trim(text);
  if (t == "grid") return default_lambda_grid();
  if (t.rfind("geom:", 0) == 0) {
    const auto parts = split(t.substr(5), ':');
    if (parts.size() != 3) throw InputError("lambda grid must look like geom:<lo>:<hi>:<points>");
    return geometric_grid(parse_double(parts[0], "lambda"), parse_double(parts[1], "lambda"),
                          parse_size(parts[2], "lambda"));
  }
  auto values = parse_double_list(t, "lambda");
  if (values.empty()) throw InputError("lambda: no value given");
  for (double v : values)
    if (v < 0.0) throw InputError("lambda must be non-negative");
  return values;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& item : split(text, ','))
    if (!item.empty()) out.push_back(parse_size(item, what));
  return out;
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string raw;
  std::string current;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(where + "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!known_keys().count(current)) throw InputError(where + "unknown section [" + current + "]");
      cfg.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(where + "expected key = value");
    if (current.empty()) throw InputError(where + "entry outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().at(current).count(key))
      throw InputError(where + "unknown key '" + key + "' in [" + current + "]");
    if (!cfg.sections_[current].emplace(key, value).second)
      throw InputError(where + "key '" + key + "' repeated in [" + current + "]");
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

const std::map<std::string, std::string>& ConfigFile::section(const std::string& name) const {
  static const std::map<std::string, std::string> empty;
  const auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

void ConfigFile::apply(net::TrainConfig& cfg) const {
  const auto& s = section("train");
  with(s, "learning_rate", [&](const auto& v) { cfg.learning_rate = parse_double(v, "learning_rate"); });
  with(s, "optimizer", [&](const auto& v) {
    if (v == "adam") cfg.optimizer = net::OptimizerKind::adam;
    else if (v == "sgd") cfg.optimizer = net::OptimizerKind::sgd;
    else throw InputError("optimizer must be adam or sgd");
  });
  with(s, "beta1", [&](const auto& v) { cfg.beta1 = parse_double(v, "beta1"); });
  with(s, "beta2", [&](const auto& v) { cfg.beta2 = parse_double(v, "beta2"); });
  with(s, "epsilon", [&](const auto& v) { cfg.epsilon = parse_double(v, "epsilon"); });
  with(s, "batch_size", [&](const auto& v) { cfg.batch_size = parse_size(v, "batch_size"); });
  with(s, "max_epochs", [&](const auto& v) { cfg.max_epochs = parse_size(v, "max_epochs"); });
  with(s, "patience", [&](const auto& v) { cfg.patience = parse_size(v, "patience"); });
  with(s, "validation_fraction",
       [&](const auto& v) { cfg.validation_fraction = parse_double(v, "validation_fraction"); });
}

void ConfigFile::apply(ExperimentConfig& cfg) const {
  apply(cfg.train);
  const auto& s = section("experiment");
  with(s, "tau", [&](const auto& v) { cfg.tau = parse_double(v, "tau"); });
  with(s, "folds", [&](const auto& v) { cfg.folds = parse_size(v, "folds"); });
  with(s, "fold_limit", [&](const auto& v) { cfg.fold_limit = parse_size(v, "fold_limit"); });
  with(s, "standardize", [&](const auto& v) { cfg.standardize = parse_bool(v, "standardize"); });
  with(s, "seed", [&](const auto& v) { cfg.seed = parse_u64(v, "seed"); });
  with(s, "estimator", [&](const auto& v) {
    if (v == "scaled") cfg.estimator = filter::GradientEstimator::scaled;
    else if (v == "plain") cfg.estimator = filter::GradientEstimator::plain;
    else throw InputError("estimator must be scaled or plain");
  });
  with(s, "mask_mode", [&](const auto& v) {
    if (v == "per_batch") cfg.mask_mode = filter::MaskMode::per_batch;
    else if (v == "per_sample") cfg.mask_mode = filter::MaskMode::per_sample;
    else throw InputError("mask_mode must be per_batch or per_sample");
  });
  with(s, "threads", [&](const auto& v) { cfg.threads = parse_size(v, "threads"); });
}

void ConfigFile::apply(FeatureSelectionConfig& cfg) const {
  apply(cfg.experiment);
  const auto& s = section("select");
  with(s, "lambda", [&](const auto& v) { cfg.lambdas = parse_lambda_list(v); });
  with(s, "hidden", [&](const auto& v) { cfg.hidden = parse_size_list(v, "hidden"); });
}

void ConfigFile::apply(PruningConfig& cfg) const {
  apply(cfg.experiment);
  const auto& s = section("prune");
  with(s, "lambda", [&](const auto& v) { cfg.base_lambdas = parse_lambda_list(v); });
  with(s, "hidden", [&](const auto& v) { cfg.hidden = parse_size_list(v, "hidden"); });
}

void ConfigFile::apply(RegionConfig& cfg) const {
  apply(cfg.experiment);
  const auto& s = section("regions");
  with(s, "lambda", [&](const auto& v) {
    const auto values = parse_lambda_list(v);
    if (values.size() != 1) throw InputError("region selection takes a single lambda");
    cfg.lambda = values[0];
  });
  with(s, "channels", [&](const auto& v) { cfg.channels = parse_size_list(v, "channels"); });
  with(s, "kernel", [&](const auto& v) { cfg.kernel = parse_size(v, "kernel"); });
}

void ConfigFile::apply(lab::LabConfig& cfg) const {
  const auto& s = section("lab");
  with(s, "rows", [&](const auto& v) { cfg.rows = parse_size(v, "rows"); });
  with(s, "features", [&](const auto& v) { cfg.features = parse_size(v, "features"); });
  with(s, "lambda", [&](const auto& v) { cfg.lambda = parse_double(v, "lambda"); });
  with(s, "draws", [&](const auto& v) { cfg.draws = parse_size(v, "draws"); });
  with(s, "seed", [&](const auto& v) { cfg.seed = parse_u64(v, "seed"); });
}

void apply_synth(const ConfigFile& file, SynthConfig& cfg) {
  const auto& s = file.section("synth");
  with(s, "kind", [&](const auto& v) {
    if (v != "informative" && v != "spectra") throw InputError("synth kind must be informative or spectra");
    cfg.kind = v;
  });
  with(s, "classes", [&](const auto& v) {
    const std::size_t c = parse_size(v, "classes");
    cfg.informative.n_classes = c;
    const auto layout = default_spectra_layout(cfg.spectra.length, c);
    cfg.spectra.n_classes = c;
    cfg.spectra.class_peaks = layout.class_peaks;
    cfg.spectra.nuisance_peaks = layout.nuisance_peaks;
  });
  with(s, "length", [&](const auto& v) {
    const std::size_t len = parse_size(v, "length");
    const auto layout = default_spectra_layout(len, cfg.spectra.n_classes);
    cfg.spectra.length = len;
    cfg.spectra.class_peaks = layout.class_peaks;
    cfg.spectra.nuisance_peaks = layout.nuisance_peaks;
  });
  with(s, "rows", [&](const auto& v) { cfg.informative.n = cfg.spectra.n = parse_size(v, "rows"); });
  with(s, "features", [&](const auto& v) { cfg.informative.d = parse_size(v, "features"); });
  with(s, "informative", [&](const auto& v) { cfg.informative.informative = parse_size(v, "informative"); });
  with(s, "class_sep", [&](const auto& v) { cfg.informative.class_sep = parse_double(v, "class_sep"); });
  with(s, "noise", [&](const auto& v) { cfg.spectra.noise = parse_double(v, "noise"); });
  with(s, "peak_width", [&](const auto& v) { cfg.spectra.peak_width = parse_double(v, "peak_width"); });
  with(s, "seed", [&](const auto& v) { cfg.informative.seed = cfg.spectra.seed = parse_u64(v, "seed"); });
  with(s, "class_peaks", [&](const auto& v) {
    cfg.spectra.class_peaks.clear();
    for (const auto& part : split(v, '|')) cfg.spectra.class_peaks.push_back(parse_double_list(part, "class_peaks"));
  });
  with(s, "nuisance_peaks", [&](const auto& v) { cfg.spectra.nuisance_peaks = parse_double_list(v, "nuisance_peaks"); });
}

}  // namespace bsf::pipeline
