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


#ifndef SHIFTGUARD_TOOLS_CLI_CONFIG_H_
#define SHIFTGUARD_TOOLS_CLI_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shiftguard/cdc.h"
#include "shiftguard/dataset.h"
#include "shiftguard/learners.h"

namespace shiftguard::cli {

// Parse and validation errors carry the 1-based position they refer to; line 0
// means the error is about the file as a whole.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
  std::size_t key_column = 0;
  std::size_t value_column = 0;
};

// "[section]" headers, "key = value" lines, and comment lines starting with # or ;.
// Keys before the first header, duplicate keys and malformed lines are errors.
std::vector<IniEntry> parse_ini(const std::string& text, const std::string& origin);

enum class DataKind { kSynthetic, kCsv, kUci };

struct DataConfig {
  DataKind kind = DataKind::kSynthetic;
  ShiftTaskSpec synth;
  bool synth_seed_set = false;
  std::filesystem::path source_csv;
  std::filesystem::path target_csv;
  std::string label_column = "y";
  std::filesystem::path uci_dir;
};

struct RunConfig {
  DataConfig data;
  PartitionFractions fractions;
  LearnerConfig learner;
  CdcTrainSpec cdc;
  std::size_t calibration_runs = 100;
  double alpha = 0.05;
  std::size_t sample_size = 50;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "shiftguard-results";
  std::vector<std::string> detectors{"detectron"};
  std::size_t jobs = 1;
  std::vector<std::size_t> sample_sizes{10, 20, 50};
  std::size_t trials = 100;
  std::size_t psi_runs = 0;
  std::size_t psi_steps = 50;
  std::size_t ensemble_size = 10;
  std::size_t reference_size = 1000;

  // Everything a calibration depends on, one "key = value" per line.
  std::string calibration_canonical() const;
  // calibration_canonical() plus detector and benchmark settings. Seed, jobs and
  // output directory are excluded; result files carry the seed in their name.
  std::string canonical() const;
};

// Relative paths inside the file resolve against the file's directory.
RunConfig parse_run_config(const std::string& text, const std::string& origin,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace shiftguard::cli

#endif  // SHIFTGUARD_TOOLS_CLI_CONFIG_H_
