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

// Model and ensemble files. Each record starts with a single-line JSON header
// that names the format, version and body length; the body that follows is a
// little-endian sequence of u64 / i32 / f64 values.

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "shiftguard/cdc.h"
#include "shiftguard/learners.h"

namespace shiftguard {

namespace {

constexpr int kModelVersion = 1;
constexpr int kEnsembleVersion = 1;

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int32_t i32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return static_cast<std::int32_t>(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t limit) {
    const std::uint64_t n = u64();
    if (n > limit) throw std::runtime_error("model body: implausible count");
    return static_cast<std::size_t>(n);
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw std::runtime_error("model body truncated");
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kMaxCount = std::size_t{1} << 28;

void write_body(Writer& w, const MlpModel& m) {
  w.u64(m.weights.size());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    w.u64(m.weights[l].rows());
    w.u64(m.weights[l].cols());
    w.f64s(m.weights[l].data());
    w.f64s(m.biases[l]);
  }
  w.u64(m.input.empty() ? 0 : 1);
  if (!m.input.empty()) {
    w.f64s(m.input.mean);
    w.f64s(m.input.scale);
  }
  w.f64(m.dropout_rate);
}

MlpModel read_mlp(Reader& r, std::size_t classes, std::size_t dim) {
  MlpModel m;
  m.num_classes = classes;
  m.feature_dim = dim;
  const std::size_t layers = r.count(1024);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = r.count(kMaxCount), cols = r.count(kMaxCount);
    Matrix w(rows, cols);
    for (double& v : w.data()) v = r.f64();
    Vector b(rows);
    for (double& v : b) v = r.f64();
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  if (r.u64() != 0) {
    m.input.mean.resize(dim);
    m.input.scale.resize(dim);
    for (double& v : m.input.mean) v = r.f64();
    for (double& v : m.input.scale) v = r.f64();
  }
  m.dropout_rate = r.f64();
  if (layers == 0 || m.weights.front().cols() != dim || m.weights.back().rows() != classes) {
    throw std::runtime_error("model body does not match header shape");
  }
  return m;
}

void write_body(Writer& w, const GbtModel& m) {
  w.f64s(m.base_margin);
  w.u64(m.trees.size());
  for (const Tree& t : m.trees) {
    w.u64(t.output);
    w.u64(t.nodes.size());
    for (const TreeNode& n : t.nodes) {
      w.i32(n.feature);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.threshold);
      w.f64(n.value);
    }
  }
}

GbtModel read_gbt(Reader& r, std::size_t classes, std::size_t dim) {
  GbtModel m;
  m.num_classes = classes;
  m.feature_dim = dim;
  m.base_margin.resize(classes);
  for (double& v : m.base_margin) v = r.f64();
  const std::size_t trees = r.count(kMaxCount);
  m.trees.resize(trees);
  for (Tree& t : m.trees) {
    t.output = r.count(classes - 1);
    t.nodes.resize(r.count(kMaxCount));
    for (TreeNode& n : t.nodes) {
      n.feature = r.i32();
      n.left = r.i32();
      n.right = r.i32();
      n.threshold = r.f64();
      n.value = r.f64();
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (n.feature >= static_cast<std::int32_t>(dim) ||
          (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))) {
        throw std::runtime_error("model body: malformed tree");
      }
    }
    if (t.nodes.empty()) throw std::runtime_error("model body: empty tree");
  }
  return m;
}

std::string read_header_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing header line");
  return line;
}

std::string read_exact(std::istream& in, std::size_t n) {
  std::string body(n, '\0');
  in.read(body.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw std::runtime_error("model body truncated");
  return body;
}

}  // namespace

void write_model(std::ostream& out, const Model& m) {
  Writer w;
  if (const auto* mlp = m.mlp()) {
    write_body(w, *mlp);
  } else if (const auto* gbt = m.gbt()) {
    write_body(w, *gbt);
  } else {
    throw std::invalid_argument("cannot serialize an empty model");
  }
  nlohmann::ordered_json h;
  h["format"] = "shiftguard.model";
  h["version"] = kModelVersion;
  h["kind"] = to_string(m.kind());
  h["num_classes"] = m.num_classes();
  h["feature_dim"] = m.feature_dim();
  h["training_seed"] = m.training_seed();
  if (std::isfinite(m.validation_score())) {
    h["validation_score"] = m.validation_score();
  } else {
    h["validation_score"] = nullptr;
  }
  h["body_bytes"] = w.bytes().size();
  out << h.dump() << '\n';
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw std::runtime_error("failed to write model");
}

Model read_model(std::istream& in) {
  const nlohmann::json h = nlohmann::json::parse(read_header_line(in));
  if (h.value("format", "") != "shiftguard.model") throw std::runtime_error("not a model file");
  if (h.value("version", 0) != kModelVersion) throw std::runtime_error("unsupported model version");
  const auto classes = h.at("num_classes").get<std::size_t>();
  const auto dim = h.at("feature_dim").get<std::size_t>();
  const auto seed = h.at("training_seed").get<std::uint64_t>();
  if (classes < 2 || dim == 0) throw std::runtime_error("model header has invalid shape");
  Reader r(read_exact(in, h.at("body_bytes").get<std::size_t>()));
  const LearnerKind kind = learner_kind_from_string(h.at("kind").get<std::string>());
  Model m = kind == LearnerKind::kMlp ? Model(read_mlp(r, classes, dim), seed) : Model(read_gbt(r, classes, dim), seed);
  if (!r.done()) throw std::runtime_error("model body has trailing bytes");
  if (!h.at("validation_score").is_null()) m.set_validation_score(h.at("validation_score").get<double>());
  return m;
}

void write_ensemble(std::ostream& out, const CdcEnsemble& e) {
  nlohmann::ordered_json h;
  h["format"] = "shiftguard.ensemble";
  h["version"] = kEnsembleVersion;
  h["members"] = e.members.size();
  h["target_size"] = e.target_size;
  h["per_round_phi"] = e.per_round_phi;
  h["surviving_indices"] = e.surviving_indices;
  out << h.dump() << '\n';
  write_model(out, e.base);
  for (const Model& m : e.members) write_model(out, m);
}

CdcEnsemble read_ensemble(std::istream& in) {
  const nlohmann::json h = nlohmann::json::parse(read_header_line(in));
  if (h.value("format", "") != "shiftguard.ensemble") throw std::runtime_error("not an ensemble file");
  if (h.value("version", 0) != kEnsembleVersion) throw std::runtime_error("unsupported ensemble version");
  CdcEnsemble e;
  e.target_size = h.at("target_size").get<std::size_t>();
  e.per_round_phi = h.at("per_round_phi").get<std::vector<double>>();
  e.surviving_indices = h.at("surviving_indices").get<std::vector<std::size_t>>();
  e.base = read_model(in);
  const auto members = h.at("members").get<std::size_t>();
  for (std::size_t i = 0; i < members; ++i) e.members.push_back(read_model(in));
  return e;
}

}  // namespace shiftguard
