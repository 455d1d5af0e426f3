// Copyright 2026 The TCT Authors
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

#pragma once

#include <cstdint>
#include <string_view>

namespace tct {

// Counter-based splittable generator. Each stream is a (key, counter)
// pair; fork("name") derives an independent stream keyed by the parent
// key and the label, so e.g. every model parameter draws from a stream
// determined solely by (seed, parameter name). No hidden global state,
// identical output on every platform with IEEE doubles.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  Rng fork(std::string_view label) const;
  Rng fork(uint64_t lane) const;

  uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double gaussian();                       // standard normal, Box-Muller
  // Unbiased integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

 private:
  Rng(uint64_t key, int);  // pre-mixed key
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace tct
