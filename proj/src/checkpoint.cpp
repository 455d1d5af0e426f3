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

#include "tct/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace tct {
namespace {

constexpr char kMagic[8] = {'T', 'C', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  put_u32(os, kVersion);
  put_u32(os, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(t.shape().size()));
    for (Index d : t.shape()) put_u64(os, static_cast<uint64_t>(d));
    for (Index i = 0; i < t.size(); ++i) put_f64(os, t.value()[i]);
  }
  if (!os) throw Error("write failed: " + path);
}

NamedParams read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error("not a checkpoint file: " + path);
  }
  uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  uint32_t count = get_u32(is);
  NamedParams out;
  out.reserve(count);
  for (uint32_t k = 0; k < count; ++k) {
    uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t rank = get_u32(is);
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<Index>(get_u64(is));
    Vec data(numel(shape));
    for (Index i = 0; i < data.size(); ++i) data[i] = get_f64(is);
    if (!is) throw Error("truncated checkpoint: " + path);
    Tensor t = make_tensor(std::move(shape), std::move(data), false);
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void load_checkpoint(const std::string& path, NamedParams& params) {
  NamedParams records = read_checkpoint(path);
  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : records) by_name.emplace(name, t);
  if (by_name.size() != params.size()) {
    throw ConfigError("checkpoint " + path + " holds " + std::to_string(by_name.size()) +
                      " parameters, model expects " + std::to_string(params.size()));
  }
  for (auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ConfigError("checkpoint " + path + " lacks parameter '" + name + "'");
    }
    if (it->second.shape() != t.shape()) {
      throw ConfigError("parameter '" + name + "': checkpoint shape " +
                        shape_str(it->second.shape()) + " vs model shape " +
                        shape_str(t.shape()));
    }
    t.value() = it->second.value();
  }
}

}  // namespace tct
