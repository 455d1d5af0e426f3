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

#include <string>

#include "tct/tensor.hpp"

namespace tct {

// Flat binary archive of (name, shape, float64 little-endian data)
// records. Byte layout is fixed and documented in docs/formats.md;
// round-tripping reproduces parameter values bit for bit.

void save_checkpoint(const std::string& path, const NamedParams& params);

// Fills the given parameters in place. Every parameter must appear in the
// file with a matching shape and vice versa; mismatches raise ConfigError
// naming both sides.
void load_checkpoint(const std::string& path, NamedParams& params);

// Reads all records without needing a model.
NamedParams read_checkpoint(const std::string& path);

}  // namespace tct
