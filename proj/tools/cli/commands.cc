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


#include "commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "config.h"
#include "json.hpp"
#include "shiftguard/detectron.h"

namespace shiftguard::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kCalibrateStream = 0xca1;
constexpr std::uint64_t kTestStream = 0x7e57;
constexpr std::uint64_t kBenchmarkStream = 0xbe7c;
constexpr std::uint64_t kPsiStream = 0x951;

// Reported as-is with exit code 1.
struct CommandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "run configuration file")->required();
  cmd->add_option("--seed", c.seed, "base seed; overrides [run] seed");
  cmd->add_option("--jobs", c.jobs, "worker threads for calibration runs");
}

struct Context {
  RunConfig cfg;
  std::uint64_t seed = 0;
};

Context resolve(const Common& c) {
  Context ctx{load_run_config(c.config), 0};
  if (c.seed) ctx.cfg.seed = c.seed;
  if (!ctx.cfg.seed) throw CommandError("no seed: set [run] seed in the config or pass --seed");
  ctx.seed = *ctx.cfg.seed;
  if (c.jobs) {
    if (*c.jobs == 0) throw CommandError("--jobs must be positive");
    ctx.cfg.jobs = *c.jobs;
  }
  if (ctx.cfg.data.kind == DataKind::kSynthetic && !ctx.cfg.data.synth_seed_set) ctx.cfg.data.synth.seed = ctx.seed;
  return ctx;
}

std::vector<std::string> csv_header(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) throw CommandError("cannot read header of " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cols;
  std::stringstream s(line);
  for (std::string c; std::getline(s, c, ',');) cols.push_back(c);
  return cols;
}

struct Loaded {
  Dataset source;
  Dataset target;
  std::optional<bool> target_shifted;
  std::vector<std::string> columns;  // feature columns expected in a Q file
};

Loaded load_data(const RunConfig& cfg) {
  Loaded l;
  switch (cfg.data.kind) {
    case DataKind::kSynthetic: {
      SynthTask t = synth_generate(cfg.data.synth);
      l.source = std::move(t.source);
      l.target = std::move(t.target);
      l.target_shifted = t.target_is_shifted;
      for (std::size_t c = 0; c < l.source.dim(); ++c) l.columns.push_back("x" + std::to_string(c));
      break;
    }
    case DataKind::kCsv: {
      for (const std::string& c : csv_header(cfg.data.source_csv)) {
        if (c != cfg.data.label_column) l.columns.push_back(c);
      }
      CsvSchema schema;
      schema.feature_columns = l.columns;
      schema.label_column = cfg.data.label_column;
      schema.require_label = true;
      l.source = load_csv(cfg.data.source_csv, schema);
      schema.require_label = false;
      l.target = load_csv(cfg.data.target_csv, schema);
      break;
    }
    case DataKind::kUci: {
      UciTask t = uci_prepare(cfg.data.uci_dir);
      l.source = std::move(t.source);
      l.target = std::move(t.target);
      l.target_shifted = true;
      l.columns = std::move(t.feature_names);
      break;
    }
  }
  return l;
}

ExperimentSetup build_setup(const Context& ctx, const Loaded& data) {
  const RunConfig& c = ctx.cfg;
  ExperimentSetup s = make_experiment(data.source, data.target, c.learner, c.cdc, c.fractions, ctx.seed);
  s.calibration_runs = c.calibration_runs;
  s.alpha = c.alpha;
  s.jobs = c.jobs;
  s.baselines.ensemble_size = c.ensemble_size;
  s.baselines.reference_size = c.reference_size;
  return s;
}

std::string hash_of(const std::string& canonical) { return hex64(fnv1a64(canonical)); }

fs::path cache_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("SHIFTGUARD_CACHE"); env && *env) return env;
  return cfg.output_dir / "cache";
}

fs::path default_calibration_path(const Context& ctx) {
  return cache_dir(ctx.cfg) /
         ("calibration-" + hash_of(ctx.cfg.calibration_canonical()) + "-" + std::to_string(ctx.seed) + ".json");
}

fs::path result_path(const Context& ctx, const std::string& kind, const std::string& ext) {
  return ctx.cfg.output_dir / (kind + "-" + hash_of(ctx.cfg.canonical()) + "-" + std::to_string(ctx.seed) + ext);
}

// Result files only ever grow.
void append_line(const fs::path& path, const std::string& line) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << '\n';
  if (!out) throw CommandError("cannot append to " + path.string());
}

std::string result_record(const std::string& config_hash, std::uint64_t seed, std::optional<bool> shifted,
                          const TestVerdict& v) {
  json j;
  j["format"] = "shiftguard.result";
  j["version"] = 1;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["target_shifted"] = shifted ? json(*shifted) : json(nullptr);
  j["verdict"] = json::parse(verdict_to_json(v));
  return j.dump();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 0.25 -> ".25", the compact layout of rate tables.
std::string compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

std::string rate_cell(double rate, double se) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate);
  return std::string(buf) + " ± " + compact(se);
}

// ---- calibrate ----

struct CalibrateArgs {
  Common common;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const Context ctx = resolve(a.common);
  const RunConfig& c = ctx.cfg;
  const ExperimentSetup s = build_setup(ctx, load_data(c));
  const CalibrationRecord r = calibrate(s.parts, s.learner, s.base, c.sample_size, c.calibration_runs, s.cdc, c.alpha,
                                        rng_stream(ctx.seed, kCalibrateStream), c.jobs);
  const fs::path path = a.out.empty() ? default_calibration_path(ctx) : fs::path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << calibration_to_json(r);
    if (!f) throw CommandError("cannot write " + path.string());
  }
  const double ms = elapsed_ms(t0);
  json j;
  j["format"] = "shiftguard.calibrate_summary";
  j["version"] = 1;
  j["calibration_file"] = path.string();
  j["config_hash"] = r.config_hash;
  j["seed"] = ctx.seed;
  j["sample_size"] = r.sample_size;
  j["runs"] = r.runs;
  j["alpha"] = r.alpha;
  j["tau_disagreement"] = r.tau_disagreement;
  j["tau_entropy"] = r.tau_entropy;
  j["wall_time_ms"] = ms;
  out << j.dump() << '\n';
  err << "calibrated " << r.runs << " null runs at N = " << r.sample_size << " in " << ms / 1000.0 << " s\n"
      << "  tau_disagreement = " << r.tau_disagreement << "\n  tau_entropy      = " << r.tau_entropy << "\n"
      << "  wrote " << path.string() << '\n';
  return kExitOk;
}

// ---- test ----

struct TestArgs {
  Common common;
  std::string q;
  std::string calibration;
  std::string which = "both";
  bool strict = false;
};

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const Context ctx = resolve(a.common);
  const RunConfig& c = ctx.cfg;
  const Loaded data = load_data(c);
  const ExperimentSetup s = build_setup(ctx, data);
  const fs::path calib_path = a.calibration.empty() ? default_calibration_path(ctx) : fs::path(a.calibration);
  if (!fs::exists(calib_path)) throw CommandError("no calibration at " + calib_path.string() + "; run calibrate first");
  const CalibrationRecord calib = calibration_from_json(read_text(calib_path));

  CsvSchema schema;
  schema.feature_columns = data.columns;
  schema.label_column = c.data.label_column;
  const Dataset q = load_csv(a.q, schema);
  if (q.size() != calib.sample_size) {
    throw CommandError("Q has " + std::to_string(q.size()) + " rows but the calibration expects " +
                       std::to_string(calib.sample_size));
  }

  RngStream rng = rng_stream(ctx.seed, kTestStream);
  const DetectronOutcome outcome = detectron_run(s.parts, q, calib, s.learner, s.base, s.cdc, rng);
  std::vector<TestVerdict> verdicts;
  if (a.which != "entropy") verdicts.push_back(disagreement_verdict(outcome.ensemble.phi(), calib));
  if (a.which != "disagreement") {
    RngStream entropy_rng = rng.split(1);
    verdicts.push_back(entropy_verdict(outcome.entropies, calib, entropy_rng));
  }
  const double ms = elapsed_ms(t0);
  const fs::path log = result_path(ctx, "verdicts", ".jsonl");
  bool detected = false;
  for (TestVerdict& v : verdicts) {
    v.base_seed = ctx.seed;
    v.stream_id = kTestStream;
    v.wall_time_ms = ms;
    v.config_hash = calib.config_hash;
    detected = detected || v.shift_detected;
    out << verdict_to_json(v) << '\n';
    append_line(log, result_record(hash_of(c.canonical()), ctx.seed, std::nullopt, v));
    err << v.detector << ": statistic " << v.statistic << (v.detect_when_greater ? " vs > " : " vs < ") << v.threshold
        << (v.shift_detected ? "  -> shift detected\n" : "  -> no shift detected\n");
  }
  return a.strict && detected ? kExitShift : kExitOk;
}

// ---- benchmark ----

int cmd_benchmark(const Common& a, std::ostream& out, std::ostream& err) {
  const Context ctx = resolve(a);
  const RunConfig& c = ctx.cfg;
  const Loaded data = load_data(c);
  const ExperimentSetup s = build_setup(ctx, data);
  const std::string hash = hash_of(c.canonical());
  const fs::path csv = result_path(ctx, "benchmark", ".csv");
  const fs::path log = result_path(ctx, "verdicts", ".jsonl");
  if (!fs::exists(csv)) append_line(csv, "detector,N,tpr,std_err,trials,seed");

  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::string>> table;
  const RngStream root = rng_stream(ctx.seed, kBenchmarkStream);
  for (std::size_t n : c.sample_sizes) {
    const auto t0 = Clock::now();
    const std::vector<PowerResult> results = evaluate_power(s, c.detectors, n, c.trials, root.split(n));
    err << "N = " << n << ": " << results.size() << " tests over " << c.trials << " draws in "
        << elapsed_ms(t0) / 1000.0 << " s\n";
    for (const PowerResult& r : results) {
      json j;
      j["format"] = "shiftguard.benchmark_row";
      j["version"] = 1;
      j["detector"] = r.detector;
      j["N"] = r.sample_size;
      j["tpr"] = r.tpr;
      j["std_err"] = r.std_err;
      j["trials"] = r.trials;
      j["seed"] = ctx.seed;
      j["config_hash"] = hash;
      out << j.dump() << '\n';
      char row[256];
      std::snprintf(row, sizeof row, "%s,%zu,%.17g,%.17g,%zu,%llu", r.detector.c_str(), r.sample_size, r.tpr,
                    r.std_err, r.trials, static_cast<unsigned long long>(ctx.seed));
      append_line(csv, row);
      for (const TestVerdict& v : r.verdicts) append_line(log, result_record(hash, ctx.seed, data.target_shifted, v));
      if (!table.contains(r.detector)) order.push_back(r.detector);
      table[r.detector][n] = rate_cell(r.tpr, r.std_err);
    }
  }

  err << "\nTPR at alpha = " << c.alpha << '\n' << "detector                  ";
  for (std::size_t n : c.sample_sizes) err << "  N = " << n << std::string(n < 10 ? 9 : n < 100 ? 8 : 7, ' ');
  err << '\n';
  for (const std::string& d : order) {
    err << d << std::string(d.size() < 26 ? 26 - d.size() : 1, ' ');
    for (std::size_t n : c.sample_sizes) err << "  " << table[d][n] << "    ";
    err << '\n';
  }

  if (c.psi_runs > 0) {
    const fs::path psi = result_path(ctx, "psi", ".jsonl");
    const RngStream psi_root = rng_stream(ctx.seed, kPsiStream);
    const Dataset holdout = s.parts.holdout.without_labels();
    if (holdout.size() < c.sample_size || s.target_pool.size() < c.sample_size) {
      throw CommandError("psi curves need at least sample_size rows in P* and in the target pool");
    }
    for (std::size_t i = 0; i < c.psi_runs; ++i) {
      RngStream rng = psi_root.split(i);
      const Dataset q = s.target_pool.subset(rng.sample_without_replacement(s.target_pool.size(), c.sample_size));
      const Dataset p = holdout.subset(rng.sample_without_replacement(holdout.size(), c.sample_size));
      RngStream rq = rng.split(1), rp = rng.split(2);
      json j;
      j["format"] = "shiftguard.psi_run";
      j["version"] = 1;
      j["config_hash"] = hash;
      j["seed"] = ctx.seed;
      j["run"] = i;
      j["sample_size"] = c.sample_size;
      j["phi_q"] = disagreement_curve(s, q, c.psi_steps, rq);
      j["phi_p"] = disagreement_curve(s, p, c.psi_steps, rp);
      append_line(psi, j.dump());
    }
    err << "wrote " << c.psi_runs << " disagreement curves to " << psi.string() << '\n';
  }
  err << "results in " << c.output_dir.string() << '\n';
  return kExitOk;
}

// ---- report ----

struct ReportArgs {
  std::string dir;
  std::string psi_dir;
};

json parse_line(const fs::path& file, std::size_t line_no, const std::string& line, const std::string& format) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CommandError(file.string() + ":" + std::to_string(line_no) + ": malformed JSON");
  }
  if (!j.is_object() || j.value("format", "") != format) {
    throw CommandError(file.string() + ":" + std::to_string(line_no) + ": expected a " + format + " record");
  }
  return j;
}

template <typename F>
void for_each_line(const fs::path& file, F&& f) {
  std::ifstream in(file);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty()) f(n, line);
  }
}

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir(a.dir);
  if (!fs::is_directory(dir)) throw CommandError("not a directory: " + dir.string());
  std::vector<fs::path> verdict_files, psi_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
    if (name.rfind("verdicts-", 0) == 0) verdict_files.push_back(entry.path());
    if (name.rfind("psi-", 0) == 0) psi_files.push_back(entry.path());
  }
  std::sort(verdict_files.begin(), verdict_files.end());
  std::sort(psi_files.begin(), psi_files.end());

  // (detector, N, measure) -> (trials, detections)
  std::map<std::tuple<std::string, std::size_t, std::string>, std::pair<std::size_t, std::size_t>> groups;
  std::size_t records = 0;
  for (const fs::path& f : verdict_files) {
    for_each_line(f, [&](std::size_t n, const std::string& line) {
      const json j = parse_line(f, n, line, "shiftguard.result");
      const json& v = j.at("verdict");
      const json& shifted = j.at("target_shifted");
      const std::string measure = shifted.is_null() ? "detection_rate" : shifted.get<bool>() ? "tpr" : "fpr";
      auto& g = groups[{v.at("detector").get<std::string>(), v.at("sample_size").get<std::size_t>(), measure}];
      ++g.first;
      g.second += v.at("shift_detected").get<bool>();
      ++records;
    });
  }
  if (records == 0 && psi_files.empty()) throw CommandError("no results in " + dir.string());

  if (records > 0) {
    err << "detector                  N     measure          rate          detections\n";
  }
  for (const auto& [key, counts] : groups) {
    const auto& [detector, n, measure] = key;
    const double rate = static_cast<double>(counts.second) / static_cast<double>(counts.first);
    const double se = std::sqrt(rate * (1.0 - rate) / static_cast<double>(counts.first));
    json j;
    j["format"] = "shiftguard.report_row";
    j["version"] = 1;
    j["detector"] = detector;
    j["N"] = n;
    j["measure"] = measure;
    j["trials"] = counts.first;
    j["detections"] = counts.second;
    j["rate"] = rate;
    j["std_err"] = se;
    out << j.dump() << '\n';
    char row[256];
    std::snprintf(row, sizeof row, "%-25s %-5zu %-16s %-13s %zu/%zu\n", detector.c_str(), n, measure.c_str(),
                  rate_cell(rate, se).c_str(), counts.second, counts.first);
    err << row;
  }

  const fs::path psi_dir = a.psi_dir.empty() ? dir : fs::path(a.psi_dir);
  for (const fs::path& f : psi_files) {
    std::vector<std::vector<double>> runs_q, runs_p;
    for_each_line(f, [&](std::size_t n, const std::string& line) {
      const json j = parse_line(f, n, line, "shiftguard.psi_run");
      runs_q.push_back(j.at("phi_q").get<std::vector<double>>());
      runs_p.push_back(j.at("phi_p").get<std::vector<double>>());
    });
    if (runs_q.empty()) continue;
    std::vector<PsiPoint> psi;
    try {
      psi = disagreement_statistic_psi(runs_q, runs_p);
    } catch (const std::invalid_argument& e) {
      throw CommandError(f.string() + ": " + e.what());
    }
    const std::size_t steps = psi.size();
    fs::create_directories(psi_dir);
    const fs::path csv = psi_dir / (f.stem().string() + ".csv");
    std::ofstream table(csv, std::ios::binary | std::ios::trunc);
    table << "budget,psi,std_err,mean_phi_q,mean_phi_p,runs\n";
    for (std::size_t t = 0; t < steps; ++t) {
      double mq = 0.0, mp = 0.0;
      for (std::size_t i = 0; i < runs_q.size(); ++i) {
        mq += runs_q[i][t];
        mp += runs_p[i][t];
      }
      mq /= static_cast<double>(runs_q.size());
      mp /= static_cast<double>(runs_q.size());
      char row[256];
      std::snprintf(row, sizeof row, "%zu,%.17g,%.17g,%.17g,%.17g,%zu\n", t + 1, psi[t].mean, psi[t].std_err, mq, mp,
                    runs_q.size());
      table << row;
    }
    if (!table) throw CommandError("cannot write " + csv.string());
    json j;
    j["format"] = "shiftguard.psi_table";
    j["version"] = 1;
    j["source"] = f.string();
    j["csv"] = csv.string();
    j["runs"] = runs_q.size();
    j["steps"] = steps;
    out << j.dump() << '\n';
    err << "psi over " << steps << " budget steps (" << runs_q.size() << " paired runs) -> " << csv.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect harmful covariate shift with constrained disagreement classifiers", "shiftguard"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "run null calibration and write a calibration file");
  add_common(calibrate_cmd, cal.common);
  calibrate_cmd->add_option("--out", cal.out, "calibration file to write (default: cache directory)");

  TestArgs test;
  CLI::App* test_cmd = app.add_subcommand("test", "test one unlabeled sample against a calibration");
  add_common(test_cmd, test.common);
  test_cmd->add_option("--q", test.q, "CSV file with the sample under test")->required();
  test_cmd->add_option("--calibration", test.calibration, "calibration file (default: cache directory)");
  test_cmd->add_option("--test", test.which, "disagreement, entropy or both")
      ->check(CLI::IsMember({"disagreement", "entropy", "both"}));
  test_cmd->add_flag("--strict-exit", test.strict, "exit with status 2 when shift is detected");

  Common bench;
  CLI::App* bench_cmd = app.add_subcommand("benchmark", "estimate detection rates over repeated draws");
  add_common(bench_cmd, bench);

  ReportArgs report;
  CLI::App* report_cmd = app.add_subcommand("report", "summarize a results directory");
  report_cmd->add_option("dir", report.dir, "results directory")->required();
  report_cmd->add_option("--psi-dir", report.psi_dir, "where psi tables are written (default: the results directory)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*calibrate_cmd) return cmd_calibrate(cal, out, err);
    if (*test_cmd) return cmd_test(test, out, err);
    if (*bench_cmd) return cmd_benchmark(bench, out, err);
    return cmd_report(report, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace shiftguard::cli
