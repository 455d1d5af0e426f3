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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tct/corpus.hpp"
#include "tct/synthetic.hpp"
#include "tct/vocab.hpp"

using namespace tct;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tct_data_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Mapping re-applied outside the generator: the independent oracle.
std::vector<std::string> oracle_map(const std::vector<std::string>& words,
                                    const std::vector<Index>& permutation,
                                    SyntheticSpec::Mapping mapping) {
  std::vector<std::string> out;
  for (const std::string& w : words) {
    Index idx = std::stol(w.substr(1));
    out.push_back("w" + std::to_string(permutation[static_cast<size_t>(idx)]));
  }
  if (mapping != SyntheticSpec::Mapping::Permutation) {
    std::reverse(out.begin(), out.end());
  }
  return out;
}

}  // namespace

TEST_CASE("tokenization and vocabulary lookups") {
  Vocabulary v;
  int a = v.add("a");
  int box = v.add("box");
  int of = v.add("of");
  int clothes = v.add("clothes");
  CHECK(v.encode_text("a box of clothes") == std::vector<int>{a, box, of, clothes, kEosId});
  CHECK(v.encode_text("") == std::vector<int>{kEosId});
  CHECK(v.encode_text("A Box OF CLOTHES") == std::vector<int>{a, box, of, clothes, kEosId});

  // Unknown tokens map to unk at inference, never an error.
  CHECK(v.encode_text("zebra") == std::vector<int>{kUnkId, kEosId});
  v.set_allow_unknown(false);
  CHECK_THROWS_AS(v.encode_text("zebra"), CorpusError);
  v.set_allow_unknown(true);

  CHECK(tokenize_text("What's here?") ==
        std::vector<std::string>{"what", "'", "s", "here", "?"});
}

TEST_CASE("tokenize round trip on random corpus lines") {
  Rng rng(801);
  std::vector<std::string> pool{"a",   "box", "of", "clothes", "man", "laughs", "?",
                                "the", ",",   "it", "video",   "ends"};
  Vocabulary v;
  for (const auto& w : pool) {
    if (w != "?" && w != ",") v.add(w);
  }
  v.add("?");
  v.add(",");
  for (int line = 0; line < 1000; ++line) {
    Rng lr = rng.fork(static_cast<uint64_t>(line));
    std::string text;
    int words = lr.uniform_int(0, 9);
    for (int w = 0; w < words; ++w) {
      if (w) text += lr.uniform() < 0.2 ? "  " : " ";
      text += pool[static_cast<size_t>(lr.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    }
    std::string normalized = join_tokens(tokenize_text(text));
    CHECK(v.decode_text(v.encode_text(text)) == normalized);
  }
}

TEST_CASE("vocabulary save and load round trip") {
  TempDir tmp;
  Vocabulary v;
  v.add("alpha");
  v.add("beta");
  v.save(tmp.file("vocab.txt"));
  Vocabulary loaded = Vocabulary::load(tmp.file("vocab.txt"));
  CHECK(loaded.size() == v.size());
  CHECK(loaded.id("beta") == v.id("beta"));
  CHECK(loaded.token(kUnkId) == "<unk>");
}

TEST_CASE("synthetic mappings are the stated bijections") {
  SyntheticSpec spec;
  spec.vocab_words = 12;
  spec.train_size = 30;
  spec.valid_size = 5;
  spec.test_size = 5;
  spec.seed = 7;

  SUBCASE("reversal") {
    spec.mapping = SyntheticSpec::Mapping::Reversal;
    SyntheticCorpus corpus = generate_synthetic(spec);
    for (Index i = 0; i < spec.vocab_words; ++i) {
      CHECK(corpus.permutation[static_cast<size_t>(i)] == i);  // identity table
    }
    for (const DialogueRecord& r : corpus.train) {
      std::vector<std::string> q = tokenize_text(r.question);
      std::vector<std::string> a = tokenize_text(r.answer);
      std::reverse(q.begin(), q.end());
      CHECK(q == a);
    }
  }
  SUBCASE("permutation applies tokenwise") {
    spec.mapping = SyntheticSpec::Mapping::Permutation;
    SyntheticCorpus corpus = generate_synthetic(spec);
    // Bijection on content words.
    std::set<Index> image(corpus.permutation.begin(), corpus.permutation.end());
    CHECK(image.size() == static_cast<size_t>(spec.vocab_words));
    for (const DialogueRecord& r : corpus.train) {
      CHECK(oracle_map(tokenize_text(r.question), corpus.permutation, spec.mapping) ==
            tokenize_text(r.answer));
    }
  }
}

TEST_CASE("synthetic oracle holds for every generated target field") {
  SyntheticSpec spec;
  spec.vocab_words = 20;
  spec.train_size = 200;
  spec.valid_size = 40;
  spec.test_size = 40;
  spec.mapping = SyntheticSpec::Mapping::PermutationReversal;
  spec.seed = 11;
  SyntheticCorpus corpus = generate_synthetic(spec);

  auto check_split = [&](const std::vector<DialogueRecord>& split) {
    for (const DialogueRecord& r : split) {
      CHECK(oracle_map(tokenize_text(r.question), corpus.permutation, spec.mapping) ==
            tokenize_text(r.answer));
      // Visual one-hot rows recover the source words: argmax undoes the
      // noise at sigma = 0.1.
      std::vector<std::string> visual_words;
      for (Index row = 0; row < r.visual.rows(); ++row) {
        Index arg;
        r.visual.row(row).maxCoeff(&arg);
        visual_words.push_back("w" + std::to_string(arg));
      }
      CHECK(oracle_map(visual_words, corpus.permutation, spec.mapping) ==
            tokenize_text(r.caption));
      REQUIRE(!r.history.empty());
      CHECK(oracle_map(tokenize_text(r.history.back()), corpus.permutation, spec.mapping) ==
            tokenize_text(r.summary));
    }
  };
  check_split(corpus.train);
  check_split(corpus.valid);
  check_split(corpus.test);
}

TEST_CASE("synthetic splits are disjoint on question sequences") {
  SyntheticSpec spec;
  spec.vocab_words = 50;
  spec.train_size = 800;
  spec.valid_size = 100;
  spec.test_size = 100;
  spec.seed = 13;
  SyntheticCorpus corpus = generate_synthetic(spec);
  std::set<std::string> seen;
  auto collect = [&](const std::vector<DialogueRecord>& split) {
    for (const DialogueRecord& r : split) {
      CHECK(seen.insert(r.question).second);  // no overlap anywhere
    }
  };
  collect(corpus.train);
  collect(corpus.valid);
  collect(corpus.test);
  CHECK(seen.size() == 1000);
}

TEST_CASE("same seed gives byte-identical corpus files") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.vocab_words = 15;
  spec.train_size = 40;
  spec.valid_size = 8;
  spec.test_size = 8;
  spec.seed = 99;
  SyntheticCorpus a = generate_synthetic(spec);
  SyntheticCorpus b = generate_synthetic(spec);
  write_corpus(tmp.file("a.jsonl"), a.train);
  write_corpus(tmp.file("b.jsonl"), b.train);
  CHECK(slurp(tmp.file("a.jsonl")) == slurp(tmp.file("b.jsonl")));
  CHECK(slurp(tmp.file("a.jsonl.feat")) == slurp(tmp.file("b.jsonl.feat")));
}

TEST_CASE("corpus write and load round trip") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.vocab_words = 10;
  spec.train_size = 12;
  spec.valid_size = 2;
  spec.test_size = 2;
  spec.seed = 3;
  SyntheticCorpus corpus = generate_synthetic(spec);
  write_corpus(tmp.file("train.jsonl"), corpus.train);
  std::vector<DialogueRecord> loaded = load_corpus(tmp.file("train.jsonl"));
  REQUIRE(loaded.size() == corpus.train.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == corpus.train[i].id);
    CHECK(loaded[i].question == corpus.train[i].question);
    CHECK(loaded[i].answer == corpus.train[i].answer);
    CHECK(loaded[i].history == corpus.train[i].history);
    REQUIRE(loaded[i].visual.rows() == corpus.train[i].visual.rows());
    // The sidecar stores float32; loading reproduces that rounding exactly.
    for (Index r = 0; r < loaded[i].visual.rows(); ++r) {
      for (Index c = 0; c < loaded[i].visual.cols(); ++c) {
        CHECK(loaded[i].visual(r, c) ==
              static_cast<double>(static_cast<float>(corpus.train[i].visual(r, c))));
      }
    }
  }
  FeatureDims dims = feature_dims(loaded);
  CHECK(dims.visual == 10);
  CHECK(dims.audio == 8);
}

TEST_CASE("loader errors carry the line number and field name") {
  TempDir tmp;
  auto write_lines = [&](const std::string& name, const std::vector<std::string>& lines) {
    std::ofstream os(tmp.file(name));
    for (const auto& l : lines) os << l << '\n';
    return tmp.file(name);
  };

  CHECK_THROWS_AS(load_corpus(write_lines("nohdr.jsonl", {R"({"id":"x"})"})), CorpusError);

  std::string hdr = R"({"format":"tct-corpus","version":1})";
  try {
    load_corpus(write_lines("missing.jsonl", {hdr, R"({"id":"e1","answer":"y"})"}));
    CHECK(false);
  } catch (const CorpusError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("question") != std::string::npos);
  }

  try {
    load_corpus(write_lines(
        "ragged.jsonl",
        {hdr, R"({"id":"e1","question":"q","answer":"a","visual":[[1,2],[3]]})"}));
    CHECK(false);
  } catch (const CorpusError& e) {
    std::string msg = e.what();
    CHECK(msg.find("visual") != std::string::npos);
    CHECK(msg.find("rectangular") != std::string::npos);
  }

  CHECK_THROWS_AS(load_corpus(write_lines("garbage.jsonl", {hdr, "not-json"})), CorpusError);
}

TEST_CASE("records convert to eos-terminated examples") {
  SyntheticSpec spec;
  spec.vocab_words = 10;
  spec.train_size = 5;
  spec.valid_size = 1;
  spec.test_size = 1;
  spec.seed = 21;
  SyntheticCorpus corpus = generate_synthetic(spec);
  Vocabulary vocab = build_vocabulary(corpus.train);
  DialogueExample ex = to_example(corpus.train[0], vocab);
  CHECK(ex.question.back() == kEosId);
  CHECK(ex.answer.back() == kEosId);
  CHECK(ex.caption.back() == kEosId);
  CHECK(ex.summary.back() == kEosId);
  for (const auto& turn : ex.history) CHECK(turn.back() == kEosId);
  CHECK(ex.visual.defined());
  CHECK(ex.visual.cols() == 10);

  // Vocabulary construction is deterministic.
  Vocabulary again = build_vocabulary(corpus.train);
  CHECK(again.size() == vocab.size());
  for (int i = 0; i < vocab.size(); ++i) CHECK(again.token(i) == vocab.token(i));
}
