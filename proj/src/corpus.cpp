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

#include "tct/corpus.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>

namespace tct {
namespace {

using nlohmann::json;

constexpr char kFeatMagic[8] = {'T', 'C', 'T', 'F', 'E', 'A', 'T', '\0'};
constexpr uint32_t kFeatVersion = 1;

std::string sidecar_path(const std::string& corpus_path) { return corpus_path + ".feat"; }

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw CorpusError(path + ":" + std::to_string(line) + ": " + what);
}

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

void put_f32(std::ostream& os, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}

float get_f32(std::istream& is) {
  uint32_t v = get_u32(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

// field code 0 = visual, 1 = audio
void write_feature_file(const std::string& path,
                        const std::vector<std::tuple<std::string, int, const MatRM*>>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write feature file: " + path);
  os.write(kFeatMagic, 8);
  put_u32(os, kFeatVersion);
  put_u32(os, static_cast<uint32_t>(entries.size()));
  for (const auto& [id, field, m] : entries) {
    put_u32(os, static_cast<uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
    os.put(static_cast<char>(field));
    put_u64(os, static_cast<uint64_t>(m->rows()));
    put_u64(os, static_cast<uint64_t>(m->cols()));
    for (Index r = 0; r < m->rows(); ++r) {
      for (Index c = 0; c < m->cols(); ++c) put_f32(os, static_cast<float>((*m)(r, c)));
    }
  }
  if (!os) throw Error("write failed: " + path);
}

std::map<std::pair<std::string, int>, MatRM> read_feature_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open feature file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kFeatMagic, 8) != 0) {
    throw CorpusError("not a feature file: " + path);
  }
  uint32_t version = get_u32(is);
  if (version != kFeatVersion) {
    throw CorpusError("unsupported feature file version " + std::to_string(version));
  }
  uint32_t count = get_u32(is);
  std::map<std::pair<std::string, int>, MatRM> out;
  for (uint32_t k = 0; k < count; ++k) {
    uint32_t id_len = get_u32(is);
    std::string id(id_len, '\0');
    is.read(id.data(), id_len);
    int field = is.get();
    Index rows = static_cast<Index>(get_u64(is));
    Index cols = static_cast<Index>(get_u64(is));
    MatRM m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = static_cast<double>(get_f32(is));
    }
    if (!is) throw CorpusError("truncated feature file: " + path);
    out.emplace(std::make_pair(std::move(id), field), std::move(m));
  }
  return out;
}

MatRM parse_matrix(const json& j, const std::string& path, int line, const char* field) {
  if (!j.is_array()) fail(path, line, std::string("field '") + field + "' must be a 2-D array");
  Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  MatRM m;
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<size_t>(r)];
    if (!row.is_array()) fail(path, line, std::string("field '") + field + "' must be a 2-D array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols) {
      fail(path, line, std::string("field '") + field + "' is not rectangular");
    }
    for (Index c = 0; c < cols; ++c) {
      if (!row[static_cast<size_t>(c)].is_number()) {
        fail(path, line, std::string("field '") + field + "' holds a non-numeric entry");
      }
      m(r, c) = row[static_cast<size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace

std::vector<DialogueRecord> load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open corpus: " + path);
  std::string line;
  int lineno = 0;

  if (!std::getline(is, line)) throw CorpusError(path + ": empty corpus file");
  ++lineno;
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != "tct-corpus") {
    fail(path, lineno, "missing corpus header line");
  }
  if (header.value("version", 0) != 1) {
    fail(path, lineno, "unsupported corpus version");
  }

  std::map<std::pair<std::string, int>, MatRM> sidecar;
  bool sidecar_loaded = false;

  std::vector<DialogueRecord> records;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(path, lineno, "record is not a JSON object");
    DialogueRecord rec;
    if (!j.contains("id") || !j["id"].is_string()) fail(path, lineno, "field 'id' missing");
    rec.id = j["id"].get<std::string>();
    for (const char* field : {"question", "answer"}) {
      if (!j.contains(field) || !j[field].is_string()) {
        fail(path, lineno, std::string("field '") + field + "' missing");
      }
    }
    rec.question = j["question"].get<std::string>();
    rec.answer = j["answer"].get<std::string>();
    rec.caption = j.value("caption", "");
    rec.summary = j.value("summary", "");
    if (j.contains("history")) {
      if (!j["history"].is_array()) fail(path, lineno, "field 'history' must be a list");
      for (const auto& h : j["history"]) {
        if (!h.is_string()) fail(path, lineno, "field 'history' must hold strings");
        rec.history.push_back(h.get<std::string>());
      }
    }
    if (j.contains("answers")) {
      if (!j["answers"].is_array()) fail(path, lineno, "field 'answers' must be a list");
      for (const auto& a : j["answers"]) {
        if (!a.is_string()) fail(path, lineno, "field 'answers' must hold strings");
        rec.extra_answers.push_back(a.get<std::string>());
      }
    }
    if (j.contains("visual")) rec.visual = parse_matrix(j["visual"], path, lineno, "visual");
    if (j.contains("audio")) rec.audio = parse_matrix(j["audio"], path, lineno, "audio");
    if (j.value("features", "") == "sidecar") {
      if (!sidecar_loaded) {
        sidecar = read_feature_file(sidecar_path(path));
        sidecar_loaded = true;
      }
      auto v = sidecar.find({rec.id, 0});
      if (v != sidecar.end()) rec.visual = v->second;
      auto a = sidecar.find({rec.id, 1});
      if (a != sidecar.end()) rec.audio = a->second;
      if (v == sidecar.end() && a == sidecar.end()) {
        fail(path, lineno, "record '" + rec.id + "' references the sidecar but has no features");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_corpus(const std::string& path, const std::vector<DialogueRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write corpus: " + path);
  os << json{{"format", "tct-corpus"}, {"version", 1}}.dump() << '\n';
  std::vector<std::tuple<std::string, int, const MatRM*>> features;
  for (const DialogueRecord& rec : records) {
    json j;
    j["id"] = rec.id;
    j["history"] = rec.history;
    j["question"] = rec.question;
    j["caption"] = rec.caption;
    j["summary"] = rec.summary;
    j["answer"] = rec.answer;
    if (!rec.extra_answers.empty()) j["answers"] = rec.extra_answers;
    bool has_features = rec.visual.size() > 0 || rec.audio.size() > 0;
    if (has_features) {
      j["features"] = "sidecar";
      if (rec.visual.size() > 0) features.emplace_back(rec.id, 0, &rec.visual);
      if (rec.audio.size() > 0) features.emplace_back(rec.id, 1, &rec.audio);
    }
    os << j.dump() << '\n';
  }
  if (!os) throw Error("write failed: " + path);
  if (!features.empty()) write_feature_file(sidecar_path(path), features);
}

Vocabulary build_vocabulary(const std::vector<DialogueRecord>& records) {
  Vocabulary vocab;
  auto feed = [&](const std::string& text) {
    for (const std::string& t : tokenize_text(text)) vocab.add(t);
  };
  for (const DialogueRecord& r : records) {
    for (const std::string& h : r.history) feed(h);
    feed(r.question);
    feed(r.caption);
    feed(r.summary);
    feed(r.answer);
    for (const std::string& a : r.extra_answers) feed(a);
  }
  return vocab;
}

DialogueExample to_example(const DialogueRecord& record, const Vocabulary& vocab) {
  DialogueExample ex;
  ex.id = record.id;
  for (const std::string& h : record.history) ex.history.push_back(vocab.encode_text(h));
  ex.question = vocab.encode_text(record.question);
  ex.caption = vocab.encode_text(record.caption);
  ex.summary = vocab.encode_text(record.summary);
  ex.answer = vocab.encode_text(record.answer);
  if (record.visual.size() > 0) ex.visual = Tensor::from_matrix(record.visual);
  if (record.audio.size() > 0) ex.audio = Tensor::from_matrix(record.audio);
  return ex;
}

FeatureDims feature_dims(const std::vector<DialogueRecord>& records) {
  FeatureDims dims;
  for (const DialogueRecord& r : records) {
    if (r.visual.size() > 0) {
      if (dims.visual == 0) dims.visual = r.visual.cols();
      if (dims.visual != r.visual.cols()) {
        throw CorpusError("record '" + r.id + "': visual width " + std::to_string(r.visual.cols()) +
                          " differs from " + std::to_string(dims.visual));
      }
    }
    if (r.audio.size() > 0) {
      if (dims.audio == 0) dims.audio = r.audio.cols();
      if (dims.audio != r.audio.cols()) {
        throw CorpusError("record '" + r.id + "': audio width " + std::to_string(r.audio.cols()) +
                          " differs from " + std::to_string(dims.audio));
      }
    }
  }
  return dims;
}

}  // namespace tct
