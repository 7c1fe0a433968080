// Copyright 2026 The Piper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PIPER_RNG_H_
#define PIPER_RNG_H_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace piper {

// Seeded random stream. All draws are computed from raw engine output so the
// full state is the engine state: serializing it and restoring it continues
// the stream exactly, and results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream derived from a root seed and a stream name, e.g.
  // Rng::Stream(seed, "env").
  static Rng Stream(std::uint64_t root_seed, std::string_view name);

  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double low, double high) {
    return low + (high - low) * Uniform();
  }
  double Normal();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t UniformInt(std::uint64_t n);
  std::uint64_t NextU64() { return engine_(); }

  std::string SerializeState() const;
  void RestoreState(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive stream seeds.
std::uint64_t MixSeed(std::uint64_t value);

}  // namespace piper

#endif  // PIPER_RNG_H_
