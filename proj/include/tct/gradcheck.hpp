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

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tct/tensor.hpp"

namespace tct {

// Central finite differences against the reverse-mode gradients. The
// differencing side never touches the tape, so it stays an independent
// check of every backward rule.

struct GradCheckEntry {
  std::string group;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst() const;
  bool pass(double tol = 1e-4) const { return worst() < tol; }
  void merge(const GradCheckReport& other, const std::string& prefix = "");
};

// loss_fn rebuilds the forward graph from the leaves' current values and
// must be deterministic call to call. Relative error per element is
// |analytic - numeric| / (|numeric| + 1e-8).
GradCheckReport gradcheck(const std::function<Tensor()>& loss_fn, const NamedParams& leaves,
                          double step = 1e-5);

// Canned suites behind the `gradcheck` CLI subcommand.
GradCheckReport gradcheck_primitives(uint64_t seed);
GradCheckReport gradcheck_attention(uint64_t seed);
GradCheckReport gradcheck_tct(uint64_t seed);
GradCheckReport gradcheck_model(uint64_t seed);

void print_report(std::ostream& os, const GradCheckReport& report, double tol = 1e-4);

}  // namespace tct
