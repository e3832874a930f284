// Copyright 2026 The privflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVFLOW_RNG_HPP_
#define PRIVFLOW_RNG_HPP_

#include <cstdint>

namespace privflow {

// Noise substream selector. Each protected quantity draws from its own
// stream so that editing one branch never shifts another branch's noise.
enum class NoiseChannel : std::uint32_t {
  kBranchSusceptance = 1,
  kBranchShuntSusceptance = 2,
  kLevelMeanG = 3,
  kLevelMeanB = 4,
  kLevelMeanBsh = 5,
};

struct StreamKey {
  NoiseChannel channel;
  std::uint64_t index;  // branch id, or the bit pattern of a level's kV
};

StreamKey branch_stream(NoiseChannel channel, int branch_id);
StreamKey level_stream(NoiseChannel channel, double level_kv);

class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  // One zero-mean Laplace draw with the given scale from the keyed stream.
  virtual double laplace(double scale, const StreamKey& key) = 0;
};

// Counter-based generator: (seed, key) is hashed through a SplitMix64-style
// avalanche mixer into a uniform deviate in (0,1). Stateless, so draws are
// reproducible regardless of evaluation order and safe to use in parallel.
class CounterNoise final : public NoiseSource {
 public:
  explicit CounterNoise(std::uint64_t seed) : seed_(seed) {}
  double laplace(double scale, const StreamKey& key) override;
  double uniform(const StreamKey& key) const;

 private:
  std::uint64_t seed_;
};

// Stub that always returns zero noise; used for fixed-point tests.
class ZeroNoise final : public NoiseSource {
 public:
  double laplace(double scale, const StreamKey& key) override;
};

// Inverse-CDF transform: u in (0,1) to Laplace(0, scale).
// u = 0.5 maps to exactly 0.
double laplace_from_uniform(double scale, double u);

// Draws one Laplace deviate, validating scale > 0.
double sample_laplace(double scale, NoiseSource& rng, const StreamKey& key);

}  // namespace privflow

#endif  // PRIVFLOW_RNG_HPP_
