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

#ifndef SHIFTGUARD_DATASET_H_
#define SHIFTGUARD_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftguard/numerics.h"
#include "shiftguard/rng.h"

namespace shiftguard {

// Fixed-width numeric rows with optional integer labels in [0, num_classes).
struct Dataset {
  Matrix features;
  std::vector<std::size_t> labels;  // empty when unlabeled
  std::size_t num_classes = 0;
  std::string name;
  std::uint64_t fingerprint = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labeled() const { return !labels.empty() || size() == 0; }
  bool has_labels() const { return !labels.empty(); }
  std::span<const double> row(std::size_t i) const { return features.row(i); }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset without_labels() const;
  // Recomputes the content fingerprint from features and labels.
  void refresh_fingerprint();
};

// Labeled rows with per-row positive weights; the learners' training input.
struct WeightedDataset {
  Matrix features;
  std::vector<std::size_t> labels;
  std::vector<double> weights;
  std::size_t num_classes = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  static WeightedDataset from(const Dataset& d, double weight = 1.0);
  void append(std::span<const double> x, std::size_t label, double weight);
};

// FNV-1a 64-bit, the hash used for fingerprints and config hashes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t v);

enum class MissingPolicy { kError, kMedianImpute };

struct CsvSchema {
  // Empty selects every column other than the label column.
  std::vector<std::string> feature_columns;
  std::string label_column = "y";
  bool require_label = false;
  MissingPolicy missing = MissingPolicy::kError;
  // Rows whose observed values define the imputation medians; empty means all rows.
  std::vector<std::size_t> impute_fit_rows;
};

// Reads a header-first, comma-separated UTF-8 file. Empty cells and "?" are missing.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::vector<std::string>& column_names = {});

struct Partition {
  Dataset train;
  Dataset val;
  Dataset holdout;  // P*
  // Row indices of each part in the source dataset.
  std::vector<std::size_t> train_rows, val_rows, holdout_rows;
};

struct PartitionFractions {
  double train = 0.6;
  double val = 0.2;
  double holdout = 0.2;
};

// Disjoint, exhaustive, label-stratified split.
Partition partition(const Dataset& p, const PartitionFractions& fractions, RngStream& rng);

// Per-column mean and standard deviation.
struct Standardizer {
  Vector mean;
  Vector scale;
  static Standardizer fit(const Matrix& x);
  void apply(std::span<const double> in, std::span<double> out) const;
  bool empty() const { return mean.empty(); }
};

// Column medians over observed (finite) values of the chosen rows.
Vector column_medians(const Matrix& x, std::span<const std::size_t> rows);
void impute_missing(Matrix& x, std::span<const double> medians);

enum class ShiftGenerator { kNullResample, kGaussMeanShift, kBoundaryRotation };

std::string to_string(ShiftGenerator g);
ShiftGenerator shift_generator_from_string(const std::string& name);

struct ShiftTaskSpec {
  ShiftGenerator generator = ShiftGenerator::kNullResample;
  // gauss_mean_shift: mu, delta, curvature, dim. boundary_rotation: theta, noise, dim.
  // Every generator also takes label_noise (default 0.1).
  std::map<std::string, double> params;
  std::size_t n_source = 1000;
  std::size_t n_target = 1000;
  std::uint64_t seed = 0;

  double param(const std::string& key, double fallback) const;
  void validate() const;
};

struct SynthTask {
  Dataset source;                             // labeled
  Dataset target;                             // unlabeled
  std::vector<std::size_t> target_labels;     // withheld ground truth
  bool target_is_shifted = false;
};

SynthTask synth_generate(const ShiftTaskSpec& spec);

struct UciTask {
  Dataset source;  // Cleveland + Hungary
  Dataset target;  // Switzerland + VA Long Beach, labels kept for evaluation only
  std::vector<std::string> feature_names;
};

// Reads processed.{cleveland,hungarian,switzerland,va}.data from raw_dir.
UciTask uci_prepare(const std::filesystem::path& raw_dir);

}  // namespace shiftguard

#endif  // SHIFTGUARD_DATASET_H_
