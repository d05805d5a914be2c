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

#ifndef SHIFTGUARD_RNG_H_
#define SHIFTGUARD_RNG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace shiftguard {

// Philox-4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// SplitMix64 finalizer; used to derive child stream ids.
std::uint64_t mix64(std::uint64_t x);

// Counter-based random stream. The key is the base seed; the 128-bit counter
// holds (block index, stream id). Streams with equal (seed, id) produce equal
// sequences on every platform; a stream must not be shared between threads.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent child stream; the parent state is untouched.
  RngStream split(std::uint64_t child) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal (Box-Muller, second value cached).
  double normal();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Marsaglia-Tsang; shape > 0.
  double gamma(double shape);
  double beta(double a, double b);

  // k distinct indices from [0, n) in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  void refill();

  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// rng_stream(seed, id) from the module contract.
inline RngStream rng_stream(std::uint64_t base_seed, std::uint64_t stream_id) {
  return RngStream(base_seed, stream_id);
}

}  // namespace shiftguard

#endif  // SHIFTGUARD_RNG_H_
