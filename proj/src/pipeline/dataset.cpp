#include "bsf/pipeline/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bsf/core/error.hpp"

namespace bsf::pipeline {
namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset d = *this;
  d.x = take_rows(x, rows);
  d.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) d.y[i] = y.at(rows[i]);
  return d;
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const {
  Dataset d = *this;
  d.x = take_columns(x, columns);
  d.feature_names.clear();
  for (std::size_t c : columns)
    d.feature_names.push_back(c < feature_names.size() ? feature_names[c] : "f" + std::to_string(c));
  return d;
}

Dataset parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw InputError("csv: missing header row");
  const auto header = split_line(line, options.delimiter);
  std::size_t label_col = header.size() - 1;
  if (!options.label_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), options.label_column);
    if (it == header.end()) throw InputError("csv: no column named '" + options.label_column + "'");
    label_col = static_cast<std::size_t>(it - header.begin());
  }
  if (header.size() < 2) throw InputError("csv: need at least one feature and a label column");

  Dataset data;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col) data.feature_names.push_back(header[c]);
  const std::size_t d = data.feature_names.size();

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::vector<double> row(d);
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_line(line, options.delimiter);
    bool ok = fields.size() == header.size() && !fields[label_col].empty();
    for (std::size_t c = 0, k = 0; ok && c < fields.size(); ++c) {
      if (c == label_col) continue;
      ok = parse_real(fields[c], row[k++]);
    }
    if (!ok) {
      ++data.rejected_rows;
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    raw_labels.push_back(fields[label_col]);
  }
  if (raw_labels.empty()) throw InputError("csv: no valid rows");

  std::vector<std::string> names = raw_labels;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<double> numeric(names.size());
  const bool all_numeric =
      std::all_of(names.begin(), names.end(), [&](const std::string& s) { return parse_real(s, numeric[&s - names.data()]); });
  if (all_numeric) {
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return numeric[a] < numeric[b]; });
    std::vector<std::string> sorted;
    for (std::size_t i : order) sorted.push_back(names[i]);
    names = std::move(sorted);
  }
  std::map<std::string, int> id;
  for (std::size_t i = 0; i < names.size(); ++i) id[names[i]] = static_cast<int>(i);

  const std::size_t n = raw_labels.size();
  data.x = Tensor({n, d}, std::move(values));
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.y[i] = id[raw_labels[i]];
  data.n_classes = names.size();
  data.class_names = std::move(names);
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_csv(buf.str(), options);
}

std::string to_csv(const Dataset& data, const std::string& label_column) {
  std::ostringstream os;
  for (std::size_t c = 0; c < data.features(); ++c)
    os << (c < data.feature_names.size() ? data.feature_names[c] : "f" + std::to_string(c)) << ',';
  os << label_column << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.features(); ++c) os << format_real(data.x.at(r, c)) << ',';
    const auto label = static_cast<std::size_t>(data.y[r]);
    os << (label < data.class_names.size() ? data.class_names[label] : std::to_string(label)) << '\n';
  }
  return os.str();
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& label_column) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os << to_csv(data, label_column);
}

Standardizer Standardizer::fit(const Tensor& x, std::span<const std::size_t> rows) {
  if (x.rank() != 2) throw ShapeError("standardizer expects [n, d] data");
  if (rows.empty()) throw InputError("standardizer fitted on no rows");
  const std::size_t d = x.dim(1);
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const double n = static_cast<double>(rows.size());
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += x.at(r, c);
  for (double& m : s.mean) m /= n;
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = x.at(r, c) - s.mean[c];
      s.scale[c] += dv * dv;
    }
  for (double& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

Tensor Standardizer::apply(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != mean.size()) throw ShapeError("standardizer: feature count mismatch");
  Tensor out(x.shape());
  for (std::size_t r = 0; r < x.dim(0); ++r)
    for (std::size_t c = 0; c < x.dim(1); ++c) out.at(r, c) = (x.at(r, c) - mean[c]) / scale[c];
  return out;
}

std::vector<IndexList> stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed) {
  return stratified_folds(data.y, k, RngStream(seed, 0xF01D));
}

}  // namespace bsf::pipeline
