// Copyright 2026 The Shiftguard Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shiftguard/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace shiftguard {

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv_mix_u64(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '"' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      return out;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
}

bool is_missing_token(const std::string& cell) { return cell.empty() || cell == "?"; }

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string read_canonical(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string raw = ss.str();
  if (raw.size() >= 3 && static_cast<unsigned char>(raw[0]) == 0xEF &&
      static_cast<unsigned char>(raw[1]) == 0xBB && static_cast<unsigned char>(raw[2]) == 0xBF) {
    raw.erase(0, 3);
  }
  std::string out;
  out.reserve(raw.size() + 1);
  for (char c : raw) {
    if (c != '\r') out.push_back(c);
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  out.push_back('\n');
  return out;
}

std::size_t infer_classes(const std::vector<std::size_t>& labels) {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t v) {
  static const char* kDigits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Matrix(0, dim());
  out.features.data().reserve(indices.size() * dim());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("subset index out of range");
    out.features.append_row(features.row(i));
    if (has_labels()) out.labels.push_back(labels[i]);
  }
  out.num_classes = num_classes;
  out.name = name;
  out.refresh_fingerprint();
  return out;
}

Dataset Dataset::without_labels() const {
  Dataset out = *this;
  out.labels.clear();
  out.refresh_fingerprint();
  return out;
}

void Dataset::refresh_fingerprint() {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv_mix_u64(h, size());
  h = fnv_mix_u64(h, dim());
  for (double v : features.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = fnv_mix_u64(h, bits);
  }
  h = fnv_mix_u64(h, labels.size());
  for (std::size_t y : labels) h = fnv_mix_u64(h, y);
  fingerprint = h;
}

WeightedDataset WeightedDataset::from(const Dataset& d, double weight) {
  if (!d.has_labels() && d.size() > 0) throw std::invalid_argument("training data must be labeled");
  WeightedDataset out;
  out.features = d.features;
  out.labels = d.labels;
  out.weights.assign(d.size(), weight);
  out.num_classes = d.num_classes;
  return out;
}

void WeightedDataset::append(std::span<const double> x, std::size_t label, double weight) {
  if (features.cols() == 0 && features.rows() == 0) features = Matrix(0, x.size());
  features.append_row(x);
  labels.push_back(label);
  weights.push_back(weight);
  num_classes = std::max(num_classes, label + 1);
}

Vector column_medians(const Matrix& x, std::span<const std::size_t> rows) {
  Vector med(x.cols(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> buf;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    buf.clear();
    for (std::size_t r : rows) {
      const double v = x(r, c);
      if (std::isfinite(v)) buf.push_back(v);
    }
    if (buf.empty()) continue;
    std::sort(buf.begin(), buf.end());
    const std::size_t n = buf.size();
    med[c] = n % 2 == 1 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
  }
  return med;
}

void impute_missing(Matrix& x, std::span<const double> medians) {
  if (medians.size() != x.cols()) throw std::invalid_argument("median width mismatch");
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (std::isfinite(x(r, c))) continue;
      if (!std::isfinite(medians[c])) {
        throw std::runtime_error("column " + std::to_string(c) + " has no observed values to impute from");
      }
      x(r, c) = medians[c];
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("file not found: " + path.string());
  const std::string text = read_canonical(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw std::runtime_error(path.string() + ": missing header row");
  }
  const std::vector<std::string> header = split_fields(line);

  std::ptrdiff_t label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.label_column) label_col = static_cast<std::ptrdiff_t>(i);
  }
  if (schema.require_label && label_col < 0) {
    throw std::runtime_error(path.string() + ": missing label column '" + schema.label_column + "'");
  }

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) != label_col) feature_cols.push_back(i);
    }
  } else {
    for (const std::string& name : schema.feature_columns) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw std::runtime_error(path.string() + ": no column named '" + name + "'");
      feature_cols.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }
  if (feature_cols.empty()) throw std::runtime_error(path.string() + ": no feature columns");

  Dataset d;
  d.features = Matrix(0, feature_cols.size());
  std::vector<double> row(feature_cols.size());
  std::size_t line_no = 1;
  bool any_missing = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_fields(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, expected " +
                               std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& cell = cells[feature_cols[j]];
      if (is_missing_token(cell)) {
        if (schema.missing == MissingPolicy::kError) {
          throw std::runtime_error(path.string() + ": missing value at row " + std::to_string(line_no) +
                                   ", column '" + header[feature_cols[j]] + "'");
        }
        row[j] = std::numeric_limits<double>::quiet_NaN();
        any_missing = true;
        continue;
      }
      if (!parse_double(cell, row[j])) {
        throw std::runtime_error(path.string() + ": cannot parse '" + cell + "' at row " +
                                 std::to_string(line_no) + ", column '" + header[feature_cols[j]] + "'");
      }
    }
    if (label_col >= 0) {
      const std::string& cell = cells[static_cast<std::size_t>(label_col)];
      std::size_t y = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), y);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw std::runtime_error(path.string() + ": invalid label '" + cell + "' at row " +
                                 std::to_string(line_no) + ", column '" + schema.label_column + "'");
      }
      d.labels.push_back(y);
    }
    d.features.append_row(row);
  }

  if (any_missing) {
    std::vector<std::size_t> fit_rows = schema.impute_fit_rows;
    if (fit_rows.empty()) {
      fit_rows.resize(d.size());
      std::iota(fit_rows.begin(), fit_rows.end(), std::size_t{0});
    }
    for (std::size_t r : fit_rows) {
      if (r >= d.size()) throw std::out_of_range("imputation row index out of range");
    }
    impute_missing(d.features, column_medians(d.features, fit_rows));
  }

  d.num_classes = infer_classes(d.labels);
  d.name = path.filename().string();
  std::uint64_t h = fnv1a64(text);
  std::string schema_text = schema.label_column + (schema.missing == MissingPolicy::kError ? "|error" : "|median");
  for (std::size_t c : feature_cols) schema_text += "|" + std::to_string(c);
  for (std::size_t r : schema.impute_fit_rows) schema_text += "," + std::to_string(r);
  h = fnv1a64(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(schema_text.data()),
                                             schema_text.size()),
              h);
  d.fingerprint = h;
  return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::vector<std::string>& column_names) {
  if (!column_names.empty() && column_names.size() != d.dim()) {
    throw std::invalid_argument("column name count does not match dataset width");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t c = 0; c < d.dim(); ++c) {
    if (c) out << ',';
    out << (column_names.empty() ? "x" + std::to_string(c) : column_names[c]);
  }
  if (d.has_labels()) out << ",y";
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < d.dim(); ++c) {
      if (c) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d.features(r, c));
      out.write(buf, ptr - buf);
    }
    if (d.has_labels()) out << ',' << d.labels[r];
    out << '\n';
  }
}

Partition partition(const Dataset& p, const PartitionFractions& f, RngStream& rng) {
  if (!(f.train > 0 && f.val > 0 && f.holdout > 0)) {
    throw std::invalid_argument("partition fractions must be positive");
  }
  if (std::abs(f.train + f.val + f.holdout - 1.0) > 1e-9) {
    throw std::invalid_argument("partition fractions must sum to 1");
  }
  const std::size_t n = p.size();
  const std::size_t classes = p.has_labels() ? std::max<std::size_t>(p.num_classes, infer_classes(p.labels)) : 1;
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) by_class[p.has_labels() ? p.labels[i] : 0].push_back(i);
  for (std::size_t c = 0; c < classes; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < 3) {
      throw std::invalid_argument("class " + std::to_string(c) + " has fewer than 3 samples and cannot be stratified");
    }
  }

  // Each class is spread evenly over [0,1) after a shuffle; cutting the merged
  // order at the global sizes keeps every class within one row of its quota.
  struct Keyed {
    double key;
    double tie;
    std::size_t row;
  };
  std::vector<Keyed> order;
  order.reserve(n);
  for (std::size_t c = 0; c < classes; ++c) {
    auto& rows = by_class[c];
    const std::vector<std::size_t> perm = rng.permutation(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      order.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(rows.size()), rng.uniform(),
                       rows[perm[i]]});
    }
  }
  std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.tie != b.tie) return a.tie < b.tie;
    return a.row < b.row;
  });

  const auto n_train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(n)));
  const auto n_train_val =
      std::min(n, static_cast<std::size_t>(std::llround((f.train + f.val) * static_cast<double>(n))));

  Partition out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      out.train_rows.push_back(order[i].row);
    } else if (i < n_train_val) {
      out.val_rows.push_back(order[i].row);
    } else {
      out.holdout_rows.push_back(order[i].row);
    }
  }
  out.train = p.subset(out.train_rows);
  out.val = p.subset(out.val_rows);
  out.holdout = p.subset(out.holdout_rows);
  return out;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t d = x.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (x.rows() == 0) return s;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += x(r, c);
  }
  for (double& m : s.mean) m /= static_cast<double>(x.rows());
  Vector var(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = x(r, c) - s.mean[c];
      var[c] += dv * dv;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(x.rows()));
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  if (empty()) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
}

std::string to_string(ShiftGenerator g) {
  switch (g) {
    case ShiftGenerator::kNullResample:
      return "null_resample";
    case ShiftGenerator::kGaussMeanShift:
      return "gauss_mean_shift";
    case ShiftGenerator::kBoundaryRotation:
      return "boundary_rotation";
  }
  return "unknown";
}

ShiftGenerator shift_generator_from_string(const std::string& name) {
  if (name == "null_resample") return ShiftGenerator::kNullResample;
  if (name == "gauss_mean_shift") return ShiftGenerator::kGaussMeanShift;
  if (name == "boundary_rotation") return ShiftGenerator::kBoundaryRotation;
  throw std::invalid_argument("unknown generator '" + name + "'");
}

namespace {
constexpr double kDefaultLabelNoise = 0.1;
}  // namespace

double ShiftTaskSpec::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void ShiftTaskSpec::validate() const {
  if (n_source == 0) throw std::invalid_argument("n_source must be positive");
  for (const auto& [k, v] : params) {
    if (!std::isfinite(v)) throw std::invalid_argument("parameter '" + k + "' is not finite");
  }
  const double noise = param("label_noise", kDefaultLabelNoise);
  if (!(noise >= 0.0 && noise < 0.5)) throw std::invalid_argument("label_noise must be in [0, 0.5)");
  const double dim = param("dim", generator == ShiftGenerator::kBoundaryRotation ? 2 : 4);
  if (dim < 2 || dim != std::floor(dim)) throw std::invalid_argument("dim must be an integer >= 2");
  switch (generator) {
    case ShiftGenerator::kNullResample:
      if (param("delta", 0.0) != 0.0 || param("theta", 0.0) != 0.0) {
        throw std::invalid_argument("null_resample takes no shift parameters");
      }
      break;
    case ShiftGenerator::kGaussMeanShift:
      if (!params.contains("delta")) throw std::invalid_argument("gauss_mean_shift needs delta");
      if (param("delta", 0.0) < 0.0) throw std::invalid_argument("delta must be non-negative");
      if (param("mu", 2.0) <= 0.0) throw std::invalid_argument("mu must be positive");
      break;
    case ShiftGenerator::kBoundaryRotation:
      if (!params.contains("theta")) throw std::invalid_argument("boundary_rotation needs theta");
      if (param("theta", 0.0) < 0.0) throw std::invalid_argument("theta must be non-negative");
      if (param("noise", 0.15) < 0.0) throw std::invalid_argument("noise must be non-negative");
      break;
  }
}

namespace {

// Two Gaussian blobs at +-mu on the first axis. Labels follow x1 > curvature * x2^2
// for source and target alike, so moving x2 changes p(x) but never p(y|x).
struct GaussWorld {
  double mu, curvature;
  std::size_t dim;

  std::size_t draw(RngStream& rng, double x2_offset, std::span<double> x) const {
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    x[0] = sign * mu + rng.normal();
    for (std::size_t j = 1; j < dim; ++j) x[j] = rng.normal();
    x[1] += x2_offset;
    return x[0] > curvature * x[1] * x[1] ? 1 : 0;
  }
};

// Two interleaved half circles centred on the origin. The label is the half circle
// a point was drawn from, so it turns with the point.
struct MoonsWorld {
  double noise;
  std::size_t dim;
  static constexpr double kCx = 0.5, kCy = 0.25;

  std::size_t draw(RngStream& rng, double theta, std::span<double> x) const {
    const double t = std::numbers::pi * rng.uniform();
    const std::size_t moon = rng.bernoulli(0.5) ? 1 : 0;
    double px, py;
    if (moon == 1) {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    } else {
      px = std::cos(t);
      py = std::sin(t);
    }
    px += noise * rng.normal() - kCx;
    py += noise * rng.normal() - kCy;
    const double c = std::cos(theta), s = std::sin(theta);
    x[0] = c * px - s * py;
    x[1] = s * px + c * py;
    for (std::size_t j = 2; j < dim; ++j) x[j] = rng.normal();
    return moon;
  }
};

// Each label is flipped with probability label_noise, independently of x.
template <typename Draw>
void fill(std::size_t n, std::size_t dim, double label_noise, RngStream& rng, Dataset& d,
          std::vector<std::size_t>& labels, Draw draw) {
  d.features = Matrix(n, dim);
  labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = draw(rng, d.features.row(i));
    if (rng.uniform() < label_noise) labels[i] = 1 - labels[i];
  }
}

}  // namespace

SynthTask synth_generate(const ShiftTaskSpec& spec) {
  spec.validate();
  SynthTask task;
  RngStream source_rng = rng_stream(spec.seed, 0x50u);
  RngStream target_rng = rng_stream(spec.seed, 0x51u);
  std::vector<std::size_t> source_labels;
  const double noise = spec.param("label_noise", kDefaultLabelNoise);

  if (spec.generator == ShiftGenerator::kBoundaryRotation) {
    const MoonsWorld world{spec.param("noise", 0.15), static_cast<std::size_t>(spec.param("dim", 2))};
    const double theta = spec.param("theta", 0.0);
    fill(spec.n_source, world.dim, noise, source_rng, task.source, source_labels,
         [&](RngStream& r, std::span<double> x) { return world.draw(r, 0.0, x); });
    fill(spec.n_target, world.dim, noise, target_rng, task.target, task.target_labels,
         [&](RngStream& r, std::span<double> x) { return world.draw(r, theta, x); });
    task.target_is_shifted = theta != 0.0;
  } else {
    const GaussWorld world{spec.param("mu", 2.0), spec.param("curvature", 0.25),
                           static_cast<std::size_t>(spec.param("dim", 4))};
    const double delta = spec.generator == ShiftGenerator::kGaussMeanShift ? spec.param("delta", 0.0) : 0.0;
    fill(spec.n_source, world.dim, noise, source_rng, task.source, source_labels,
         [&](RngStream& r, std::span<double> x) { return world.draw(r, 0.0, x); });
    fill(spec.n_target, world.dim, noise, target_rng, task.target, task.target_labels,
         [&](RngStream& r, std::span<double> x) { return world.draw(r, delta, x); });
    task.target_is_shifted = delta != 0.0;
  }

  task.source.labels = std::move(source_labels);
  task.source.num_classes = 2;
  task.source.name = to_string(spec.generator) + "/source";
  task.source.refresh_fingerprint();
  task.target.num_classes = 2;
  task.target.name = to_string(spec.generator) + "/target";
  task.target.refresh_fingerprint();
  return task;
}

namespace {

constexpr const char* kUciFiles[] = {"processed.cleveland.data", "processed.hungarian.data",
                                     "processed.switzerland.data", "processed.va.data"};
constexpr std::size_t kUciRawColumns = 14;
constexpr std::size_t kUciFeatures = 9;  // first nine raw columns
constexpr std::size_t kUciLabelColumn = 13;

void read_uci_file(const std::filesystem::path& path, Matrix& x, std::vector<std::size_t>& y) {
  const std::string text = read_canonical(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row(kUciFeatures);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_fields(line);
    if (cells.size() != kUciRawColumns) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, expected 14");
    }
    for (std::size_t j = 0; j < kUciFeatures; ++j) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!is_missing_token(cells[j]) && !parse_double(cells[j], v)) {
        throw std::runtime_error(path.string() + ": cannot parse '" + cells[j] + "' at row " +
                                 std::to_string(line_no) + ", column " + std::to_string(j + 1));
      }
      // Zero resting blood pressure or cholesterol is a placeholder for "not measured".
      if ((j == 3 || j == 4) && v == 0.0) v = std::numeric_limits<double>::quiet_NaN();
      row[j] = v;
    }
    double status = 0;
    if (!parse_double(cells[kUciLabelColumn], status) || status < 0) {
      throw std::runtime_error(path.string() + ": invalid diagnosis at row " + std::to_string(line_no));
    }
    x.append_row(row);
    y.push_back(status > 0 ? 1 : 0);
  }
}

}  // namespace

UciTask uci_prepare(const std::filesystem::path& raw_dir) {
  std::vector<std::string> missing;
  for (const char* f : kUciFiles) {
    if (!std::filesystem::exists(raw_dir / f)) missing.emplace_back(f);
  }
  if (!missing.empty()) {
    std::string msg = "missing UCI files in " + raw_dir.string() + ":";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  UciTask task;
  task.feature_names = {"age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang"};
  task.source.features = Matrix(0, kUciFeatures);
  task.target.features = Matrix(0, kUciFeatures);
  read_uci_file(raw_dir / kUciFiles[0], task.source.features, task.source.labels);
  read_uci_file(raw_dir / kUciFiles[1], task.source.features, task.source.labels);
  read_uci_file(raw_dir / kUciFiles[2], task.target.features, task.target.labels);
  read_uci_file(raw_dir / kUciFiles[3], task.target.features, task.target.labels);

  std::vector<std::size_t> source_rows(task.source.size());
  std::iota(source_rows.begin(), source_rows.end(), std::size_t{0});
  const Vector medians = column_medians(task.source.features, source_rows);
  impute_missing(task.source.features, medians);
  impute_missing(task.target.features, medians);

  task.source.num_classes = task.target.num_classes = 2;
  task.source.name = "uci_heart/source";
  task.target.name = "uci_heart/target";
  task.source.refresh_fingerprint();
  task.target.refresh_fingerprint();
  return task;
}

}  // namespace shiftguard
