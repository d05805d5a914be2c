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


#include "config.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "shiftguard/detectron.h"

namespace shiftguard::cli {

namespace {

std::string located(const std::string& origin, std::size_t line, std::size_t column, const std::string& what) {
  if (line == 0) return origin + ": " + what;
  return origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what;
}

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    if (lead) *lead = s.size();
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  if (lead) *lead = b;
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

// Parses one value and reports failures at the value's position.
class ValueParser {
 public:
  ValueParser(const IniEntry& e, const std::string& origin) : e_(e), origin_(origin) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin_, e_.line, e_.value_column, "[" + e_.section + "] " + e_.key + ": " + what);
  }

  double real() const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(e_.value.data(), e_.value.data() + e_.value.size(), v);
    if (ec != std::errc() || p != e_.value.data() + e_.value.size() || e_.value.empty()) {
      fail("expected a number, got '" + e_.value + "'");
    }
    return v;
  }

  std::uint64_t count() const { return whole(e_.value); }

  const std::string& text() const { return e_.value; }

  bool boolean() const {
    if (e_.value == "true") return true;
    if (e_.value == "false") return false;
    fail("expected true or false, got '" + e_.value + "'");
  }

  std::vector<std::string> list() const {
    std::vector<std::string> out;
    std::stringstream s(e_.value);
    std::string item;
    while (std::getline(s, item, ',')) {
      item = trim(item);
      if (item.empty()) fail("empty list item");
      out.push_back(item);
    }
    if (out.empty()) fail("expected a comma-separated list");
    return out;
  }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    for (const std::string& item : list()) out.push_back(whole(item));
    return out;
  }

  template <typename F>
  auto named(F&& convert) const {
    try {
      return convert(e_.value);
    } catch (const std::exception& ex) {
      fail(ex.what());
    }
  }

 private:
  std::uint64_t whole(const std::string& text) const {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || text.empty()) {
      fail("expected a non-negative integer, got '" + text + "'");
    }
    return v;
  }

  const IniEntry& e_;
  const std::string& origin_;
};

using Setter = std::function<void(RunConfig&, const ValueParser&)>;

const std::set<std::string>& generator_params() {
  static const std::set<std::string> names{"mu", "delta", "curvature", "dim", "theta", "noise", "label_noise"};
  return names;
}

std::map<std::string, Setter> setters(const std::filesystem::path& base) {
  auto path = [base](const ValueParser& v, const std::string& raw) {
    const std::filesystem::path p(raw);
    if (raw.empty()) v.fail("empty path");
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  std::map<std::string, Setter> m;
  m["data.source"] = [](RunConfig& c, const ValueParser& v) {
    c.data.kind = v.named([](const std::string& s) {
      if (s == "synthetic") return DataKind::kSynthetic;
      if (s == "csv") return DataKind::kCsv;
      if (s == "uci") return DataKind::kUci;
      throw std::invalid_argument("expected synthetic, csv or uci, got '" + s + "'");
    });
  };
  m["data.generator"] = [](RunConfig& c, const ValueParser& v) {
    c.data.synth.generator = v.named(shift_generator_from_string);
  };
  m["data.n_source"] = [](RunConfig& c, const ValueParser& v) { c.data.synth.n_source = v.count(); };
  m["data.n_target"] = [](RunConfig& c, const ValueParser& v) { c.data.synth.n_target = v.count(); };
  m["data.seed"] = [](RunConfig& c, const ValueParser& v) {
    c.data.synth.seed = v.count();
    c.data.synth_seed_set = true;
  };
  for (const std::string& p : generator_params()) {
    m["data." + p] = [p](RunConfig& c, const ValueParser& v) { c.data.synth.params[p] = v.real(); };
  }
  m["data.source_csv"] = [path](RunConfig& c, const ValueParser& v) { c.data.source_csv = path(v, v.text()); };
  m["data.target_csv"] = [path](RunConfig& c, const ValueParser& v) { c.data.target_csv = path(v, v.text()); };
  m["data.uci_dir"] = [path](RunConfig& c, const ValueParser& v) { c.data.uci_dir = path(v, v.text()); };
  m["data.label_column"] = [](RunConfig& c, const ValueParser& v) { c.data.label_column = v.text(); };

  m["partition.train"] = [](RunConfig& c, const ValueParser& v) { c.fractions.train = v.real(); };
  m["partition.val"] = [](RunConfig& c, const ValueParser& v) { c.fractions.val = v.real(); };
  m["partition.holdout"] = [](RunConfig& c, const ValueParser& v) { c.fractions.holdout = v.real(); };

  m["learner.kind"] = [](RunConfig& c, const ValueParser& v) { c.learner.kind = v.named(learner_kind_from_string); };
  m["learner.metric"] = [](RunConfig& c, const ValueParser& v) {
    c.learner.metric = v.named(validation_metric_from_string);
  };

  m["gbt.eta"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.eta = v.real(); };
  m["gbt.max_depth"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.max_depth = v.count(); };
  m["gbt.num_rounds"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.num_rounds = v.count(); };
  m["gbt.subsample"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.subsample = v.real(); };
  m["gbt.colsample"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.colsample = v.real(); };
  m["gbt.min_child_weight"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.min_child_weight = v.real(); };
  m["gbt.reg_lambda"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.reg_lambda = v.real(); };
  m["gbt.rounds_per_epoch"] = [](RunConfig& c, const ValueParser& v) { c.learner.gbt.rounds_per_epoch = v.count(); };
  m["gbt.disagreement_scale"] = [](RunConfig& c, const ValueParser& v) {
    c.learner.gbt.disagreement_scale = v.real();
  };

  m["mlp.hidden_sizes"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.hidden_sizes = v.counts(); };
  m["mlp.dropout_rate"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.dropout_rate = v.real(); };
  m["mlp.learning_rate"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.learning_rate = v.real(); };
  m["mlp.max_epochs"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.max_epochs = v.count(); };
  m["mlp.batch_size"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.batch_size = v.count(); };
  m["mlp.l2"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.l2 = v.real(); };
  m["mlp.patience"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.patience = v.count(); };
  m["mlp.standardize"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.standardize = v.boolean(); };
  m["mlp.cdc_batch_size"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.cdc_batch_size = v.count(); };
  m["mlp.disagreement_scale"] = [](RunConfig& c, const ValueParser& v) {
    c.learner.mlp.disagreement_scale = v.real();
  };
  m["mlp.cdc_learning_rate"] = [](RunConfig& c, const ValueParser& v) { c.learner.mlp.cdc_learning_rate = v.real(); };

  m["cdc.ensemble_max"] = [](RunConfig& c, const ValueParser& v) { c.cdc.ensemble_max = v.count(); };
  m["cdc.val_tolerance"] = [](RunConfig& c, const ValueParser& v) { c.cdc.val_tolerance = v.real(); };
  m["cdc.max_epochs"] = [](RunConfig& c, const ValueParser& v) { c.cdc.max_epochs_per_cdc = v.count(); };

  m["detectron.calibration_runs"] = [](RunConfig& c, const ValueParser& v) { c.calibration_runs = v.count(); };
  m["detectron.alpha"] = [](RunConfig& c, const ValueParser& v) { c.alpha = v.real(); };
  m["detectron.sample_size"] = [](RunConfig& c, const ValueParser& v) { c.sample_size = v.count(); };

  m["run.seed"] = [](RunConfig& c, const ValueParser& v) { c.seed = v.count(); };
  m["run.output_dir"] = [path](RunConfig& c, const ValueParser& v) { c.output_dir = path(v, v.text()); };
  m["run.detectors"] = [](RunConfig& c, const ValueParser& v) {
    c.detectors = v.list();
    const std::vector<std::string> known = known_detectors();
    for (const std::string& d : c.detectors) {
      if (std::find(known.begin(), known.end(), d) == known.end()) v.fail("unknown detector '" + d + "'");
    }
  };
  m["run.jobs"] = [](RunConfig& c, const ValueParser& v) { c.jobs = v.count(); };

  m["benchmark.sample_sizes"] = [](RunConfig& c, const ValueParser& v) { c.sample_sizes = v.counts(); };
  m["benchmark.trials"] = [](RunConfig& c, const ValueParser& v) { c.trials = v.count(); };
  m["benchmark.psi_runs"] = [](RunConfig& c, const ValueParser& v) { c.psi_runs = v.count(); };
  m["benchmark.psi_steps"] = [](RunConfig& c, const ValueParser& v) { c.psi_steps = v.count(); };

  m["baselines.ensemble_size"] = [](RunConfig& c, const ValueParser& v) { c.ensemble_size = v.count(); };
  m["baselines.reference_size"] = [](RunConfig& c, const ValueParser& v) { c.reference_size = v.count(); };
  return m;
}

void validate(const RunConfig& c, const std::string& origin) {
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(origin, 0, 0, what);
  };
  try {
    c.learner.validate();
    c.cdc.validate();
    if (c.data.kind == DataKind::kSynthetic) c.data.synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin, 0, 0, e.what());
  }
  if (c.data.kind == DataKind::kCsv) check(!c.data.source_csv.empty() && !c.data.target_csv.empty(),
                                           "csv data needs source_csv and target_csv");
  if (c.data.kind == DataKind::kUci) check(!c.data.uci_dir.empty(), "uci data needs uci_dir");
  const double total = c.fractions.train + c.fractions.val + c.fractions.holdout;
  check(c.fractions.train > 0 && c.fractions.val > 0 && c.fractions.holdout > 0 && std::abs(total - 1.0) < 1e-9,
        "partition fractions must be positive and sum to 1");
  check(c.calibration_runs >= 20, "calibration_runs must be at least 20");
  check(c.alpha > 0.0 && c.alpha < 1.0, "alpha must be in (0,1)");
  check(c.sample_size > 0, "sample_size must be positive");
  check(c.jobs > 0, "jobs must be positive");
  check(c.trials >= 30, "trials must be at least 30");
  check(!c.detectors.empty(), "no detectors selected");
  for (std::size_t n : c.sample_sizes) check(n > 0, "sample sizes must be positive");
  check(c.psi_runs == 0 || c.psi_steps > 0, "psi_steps must be positive");
  check(c.ensemble_size >= 2, "baseline ensemble_size must be at least 2");
  check(c.reference_size > 0, "baseline reference_size must be positive");
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error(located(origin, line, column, what)), line_(line), column_(column) {}

std::vector<IniEntry> parse_ini(const std::string& text, const std::string& origin) {
  std::vector<IniEntry> out;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    std::size_t lead = 0;
    const std::string body = trim(raw, &lead);
    if (body.empty() || body[0] == '#' || body[0] == ';') continue;
    if (body[0] == '[') {
      if (body.back() != ']') throw ConfigError(origin, line, lead + 1, "unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) throw ConfigError(origin, line, lead + 2, "empty section name");
      continue;
    }
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, line, lead + 1, "expected 'key = value'");
    if (section.empty()) throw ConfigError(origin, line, lead + 1, "key outside of any [section]");
    IniEntry e;
    e.section = section;
    e.line = line;
    e.key = trim(raw.substr(0, eq));
    e.key_column = lead + 1;
    if (e.key.empty()) throw ConfigError(origin, line, lead + 1, "missing key before '='");
    std::size_t value_lead = 0;
    e.value = trim(raw.substr(eq + 1), &value_lead);
    e.value_column = eq + 2 + value_lead;
    if (!seen.insert(section + "." + e.key).second) {
      throw ConfigError(origin, line, e.key_column, "duplicate key '" + e.key + "' in [" + section + "]");
    }
    out.push_back(std::move(e));
  }
  return out;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir) {
  const auto table = setters(base_dir);
  RunConfig c;
  for (const IniEntry& e : parse_ini(text, origin)) {
    const auto it = table.find(e.section + "." + e.key);
    if (it == table.end()) {
      throw ConfigError(origin, e.line, e.key_column, "unknown key '" + e.key + "' in [" + e.section + "]");
    }
    it->second(c, ValueParser(e, origin));
  }
  validate(c, origin);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, 0, "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string(), path.parent_path());
}

std::string RunConfig::calibration_canonical() const {
  std::ostringstream s;
  switch (data.kind) {
    case DataKind::kSynthetic:
      s << "data.source = synthetic\n";
      s << "data.generator = " << to_string(data.synth.generator) << '\n';
      s << "data.n_source = " << data.synth.n_source << '\n';
      s << "data.n_target = " << data.synth.n_target << '\n';
      if (data.synth_seed_set) s << "data.seed = " << data.synth.seed << '\n';
      for (const auto& [k, v] : data.synth.params) s << "data." << k << " = " << num(v) << '\n';
      break;
    case DataKind::kCsv:
      s << "data.source = csv\n";
      s << "data.source_csv = " << data.source_csv.string() << '\n';
      s << "data.target_csv = " << data.target_csv.string() << '\n';
      s << "data.label_column = " << data.label_column << '\n';
      break;
    case DataKind::kUci:
      s << "data.source = uci\n";
      s << "data.uci_dir = " << data.uci_dir.string() << '\n';
      break;
  }
  s << "partition.train = " << num(fractions.train) << '\n';
  s << "partition.val = " << num(fractions.val) << '\n';
  s << "partition.holdout = " << num(fractions.holdout) << '\n';
  s << learner.canonical() << cdc.canonical();
  s << "detectron.calibration_runs = " << calibration_runs << '\n';
  s << "detectron.alpha = " << num(alpha) << '\n';
  s << "detectron.sample_size = " << sample_size << '\n';
  return s.str();
}

std::string RunConfig::canonical() const {
  std::ostringstream s;
  s << calibration_canonical();
  s << "run.detectors = " << join(detectors) << '\n';
  s << "benchmark.sample_sizes = " << join(sample_sizes) << '\n';
  s << "benchmark.trials = " << trials << '\n';
  s << "benchmark.psi_runs = " << psi_runs << '\n';
  s << "benchmark.psi_steps = " << psi_steps << '\n';
  s << "baselines.ensemble_size = " << ensemble_size << '\n';
  s << "baselines.reference_size = " << reference_size << '\n';
  return s.str();
}

}  // namespace shiftguard::cli
