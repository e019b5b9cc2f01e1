//
// Copyright 2026 The privmarket Authors
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
//

#ifndef PRIVMARKET_RNG_H_
#define PRIVMARKET_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace privmarket {

using Engine = std::mt19937_64;

// Well-known substream labels. Any label works; these are the ones the
// library itself draws from.
inline constexpr std::string_view kNoiseStream = "noise";
inline constexpr std::string_view kSensitivityStream = "sensitivities";
inline constexpr std::string_view kDataStream = "data";
inline constexpr std::string_view kMisreportStream = "misreport";
inline constexpr std::string_view kInitStream = "init";
inline constexpr std::string_view kSplitStream = "split";

// A seed plus the rule for deriving independent substreams from it. The same
// (seed, label, index) always yields the same engine state.
class RngSpec {
 public:
  constexpr explicit RngSpec(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Engine Stream(std::string_view label, std::uint64_t index = 0) const;

  // A child spec whose streams are disjoint from this one's; used to give
  // each experiment cell its own seed.
  RngSpec Derive(std::string_view label, std::uint64_t index) const;

 private:
  std::uint64_t seed_;
};

std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view text);

}  // namespace privmarket

#endif  // PRIVMARKET_RNG_H_
