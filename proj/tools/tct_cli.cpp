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

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "tct/checkpoint.hpp"
#include "tct/config.hpp"
#include "tct/corpus.hpp"
#include "tct/gradcheck.hpp"
#include "tct/metrics.hpp"
#include "tct/synthetic.hpp"
#include "tct/tasks.hpp"

namespace {

using namespace tct;
namespace fs = std::filesystem;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "seed",
      "task",
      "synth.vocab_words",
      "synth.min_len",
      "synth.max_len",
      "synth.mapping",
      "synth.noise_sigma",
      "synth.train",
      "synth.valid",
      "synth.test",
      "synth.max_history_turns",
      "synth.audio_dim",
      "data.train",
      "data.valid",
      "data.input",
      "data.vocab",
      "model.d_model",
      "model.heads",
      "model.tct_blocks",
      "model.decoder_layers",
      "model.autoencoder_layers",
      "model.use_visual",
      "model.use_audio",
      "train.alpha",
      "train.beta",
      "train.dropout",
      "train.batch_size",
      "train.max_steps",
      "train.warmup_steps",
      "train.validation_interval",
      "train.grad_clip",
      "train.zero_source",
      "decode.mode",
      "decode.beam_size",
      "decode.max_len",
      "translate.checkpoint",
      "eval.hyp",
      "eval.ref",
      "eval.refs",
  };
  return keys;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int64_t seed = -1;
};

void add_common_flags(CLI::App* cmd, CommonArgs* args, bool out_required) {
  cmd->add_option("--config", args->config_path, "key = value configuration file");
  auto* out = cmd->add_option("--out", args->out_dir, "output directory");
  if (out_required) out->required();
  cmd->add_option("--set", args->overrides, "override a config key (key=value, repeatable)");
  cmd->add_option("--seed", args->seed, "override the seed");
}

KeyValueConfig resolve_config(const CommonArgs& args) {
  KeyValueConfig cfg;
  if (!args.config_path.empty()) cfg = KeyValueConfig::load(args.config_path);
  for (const std::string& o : args.overrides) cfg.apply_override(o);
  if (args.seed >= 0) cfg.set("seed", std::to_string(args.seed));
  cfg.reject_unknown(known_keys());
  return cfg;
}

void write_snapshot(const KeyValueConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  cfg.save(out_dir + "/config.resolved");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const KeyValueConfig& cfg, const std::string& out_dir) {
  SyntheticSpec spec;
  spec.vocab_words = cfg.get_index("synth.vocab_words", spec.vocab_words);
  spec.min_len = cfg.get_index("synth.min_len", spec.min_len);
  spec.max_len = cfg.get_index("synth.max_len", spec.max_len);
  spec.mapping = parse_mapping(cfg.get("synth.mapping", "permutation-reversal"));
  spec.noise_sigma = cfg.get_double("synth.noise_sigma", spec.noise_sigma);
  spec.train_size = cfg.get_index("synth.train", spec.train_size);
  spec.valid_size = cfg.get_index("synth.valid", spec.valid_size);
  spec.test_size = cfg.get_index("synth.test", spec.test_size);
  spec.max_history_turns =
      static_cast<int>(cfg.get_index("synth.max_history_turns", spec.max_history_turns));
  spec.audio_dim = cfg.get_index("synth.audio_dim", spec.audio_dim);
  spec.seed = cfg.get_u64("seed", 1);

  SyntheticCorpus corpus = generate_synthetic(spec);
  write_snapshot(cfg, out_dir);
  write_corpus(out_dir + "/train.jsonl", corpus.train);
  write_corpus(out_dir + "/valid.jsonl", corpus.valid);
  write_corpus(out_dir + "/test.jsonl", corpus.test);

  std::vector<DialogueRecord> all = corpus.train;
  all.insert(all.end(), corpus.valid.begin(), corpus.valid.end());
  all.insert(all.end(), corpus.test.begin(), corpus.test.end());
  build_vocabulary(all).save(out_dir + "/vocab.txt");

  std::ofstream map(out_dir + "/mapping.txt", std::ios::trunc);
  map << "mapping " << mapping_name(spec.mapping) << "\n";
  for (size_t i = 0; i < corpus.permutation.size(); ++i) {
    map << "w" << i << " w" << corpus.permutation[i] << "\n";
  }
  std::cout << "gen-data: wrote " << corpus.train.size() << "/" << corpus.valid.size() << "/"
            << corpus.test.size() << " examples to " << out_dir << "\n";
  return 0;
}

// -------------------------------------------------------------------- train

struct LoadedCorpus {
  std::vector<DialogueRecord> records;
  std::vector<DialogueExample> examples;
};

LoadedCorpus load_examples(const std::string& path, const Vocabulary& vocab) {
  LoadedCorpus out;
  out.records = load_corpus(path);
  out.examples.reserve(out.records.size());
  for (const DialogueRecord& r : out.records) out.examples.push_back(to_example(r, vocab));
  return out;
}

ModelConfig model_config_from(const KeyValueConfig& cfg, const Vocabulary& vocab,
                              const FeatureDims& dims) {
  ModelConfig mc;
  mc.d_model = cfg.get_index("model.d_model", 32);
  mc.heads = static_cast<int>(cfg.get_index("model.heads", 4));
  mc.tct_blocks = static_cast<int>(cfg.get_index("model.tct_blocks", 1));
  mc.decoder_layers = static_cast<int>(cfg.get_index("model.decoder_layers", 2));
  mc.autoencoder_layers = static_cast<int>(cfg.get_index("model.autoencoder_layers", 2));
  mc.vocab_size = vocab.size();
  mc.visual_dim = dims.visual;
  mc.audio_dim = dims.audio;
  mc.use_visual = cfg.get_bool("model.use_visual", true);
  mc.use_audio = cfg.get_bool("model.use_audio", true);
  if (mc.use_visual && mc.visual_dim == 0) {
    throw CorpusError("visual modality enabled but the corpus has no visual features");
  }
  if (mc.use_audio && mc.audio_dim == 0) {
    throw CorpusError("audio modality enabled but the corpus has no audio features");
  }
  return mc;
}

TranslatorModelConfig translator_config_from(const KeyValueConfig& cfg, const Vocabulary& vocab) {
  TranslatorModelConfig tc;
  tc.d_model = cfg.get_index("model.d_model", 32);
  tc.heads = static_cast<int>(cfg.get_index("model.heads", 4));
  tc.blocks = static_cast<int>(cfg.get_index("model.tct_blocks", 1));
  tc.vocab_size = vocab.size();
  tc.zero_source = cfg.get_bool("train.zero_source", false);
  return tc;
}

TrainConfig train_config_from(const KeyValueConfig& cfg, Index d_model) {
  TrainConfig tc;
  tc.alpha = cfg.get_double("train.alpha", 1.0);
  tc.beta = cfg.get_double("train.beta", 1.0);
  tc.dropout = cfg.get_double("train.dropout", 0.0);
  tc.batch_size = static_cast<int>(cfg.get_index("train.batch_size", 16));
  tc.max_steps = cfg.get_index("train.max_steps", 2000);
  tc.warmup_steps = cfg.get_index("train.warmup_steps", 400);
  tc.validation_interval = cfg.get_index("train.validation_interval", 200);
  tc.grad_clip = cfg.get_double("train.grad_clip", 0.0);
  tc.seed = cfg.get_u64("seed", 1);
  tc.d_model = d_model;
  return tc;
}

int cmd_train(const KeyValueConfig& cfg, const std::string& out_dir) {
  write_snapshot(cfg, out_dir);
  Vocabulary vocab = Vocabulary::load(cfg.require("data.vocab"));
  LoadedCorpus train = load_examples(cfg.require("data.train"), vocab);
  LoadedCorpus valid = load_examples(cfg.require("data.valid"), vocab);
  std::string task_name = cfg.get("task", "mtn-tct");
  uint64_t seed = cfg.get_u64("seed", 1);

  TrainResult result;
  if (task_name == "mtn-tct") {
    ModelConfig mc = model_config_from(cfg, vocab, feature_dims(train.records));
    MtnTct model(mc, Rng(seed).fork("model"));
    DialogueTask task;
    task.model = &model;
    task.train = std::move(train.examples);
    task.valid = std::move(valid.examples);
    TrainConfig tc = train_config_from(cfg, mc.d_model);
    task.alpha = tc.alpha;
    task.beta = tc.beta;
    result = train_loop(task.hooks(), tc, out_dir);
  } else if (task_name == "translator") {
    TranslatorModelConfig tmc = translator_config_from(cfg, vocab);
    TranslatorModel model(tmc, Rng(seed).fork("model"));
    TranslatorTask task;
    task.model = &model;
    task.train = to_translator_pairs(train.examples);
    task.valid = to_translator_pairs(valid.examples);
    result = train_loop(task.hooks(), train_config_from(cfg, tmc.d_model), out_dir);
  } else {
    throw UsageError("unknown task '" + task_name + "' (expected mtn-tct or translator)");
  }

  if (result.aborted) {
    std::cerr << "train aborted: " << result.abort_reason << "\n";
    return 1;
  }
  std::cout << "train: best step=" << result.best_step
            << " perplexity=" << fmt(result.best_perplexity) << " checkpoint="
            << result.best_checkpoint << "\n";
  return 0;
}

// ---------------------------------------------------------------- translate

DecodeConfig decode_config_from(const KeyValueConfig& cfg) {
  DecodeConfig dc;
  std::string mode = cfg.get("decode.mode", "greedy");
  if (mode == "greedy") {
    dc.mode = DecodeConfig::Mode::Greedy;
  } else if (mode == "beam") {
    dc.mode = DecodeConfig::Mode::Beam;
    dc.beam_size = static_cast<int>(cfg.get_index("decode.beam_size", 4));
  } else {
    throw UsageError("unknown decode.mode '" + mode + "' (expected greedy or beam)");
  }
  dc.max_len = cfg.get_index("decode.max_len", 30);
  return dc;
}

int cmd_translate(const KeyValueConfig& cfg, const std::string& out_dir) {
  write_snapshot(cfg, out_dir);
  Vocabulary vocab = Vocabulary::load(cfg.require("data.vocab"));
  LoadedCorpus input = load_examples(cfg.require("data.input"), vocab);
  DecodeConfig decode = decode_config_from(cfg);
  std::string task_name = cfg.get("task", "mtn-tct");
  std::string ckpt = cfg.require("translate.checkpoint");
  uint64_t seed = cfg.get_u64("seed", 1);

  std::vector<GenerationResult> generated(input.examples.size());
  if (task_name == "mtn-tct") {
    ModelConfig mc = model_config_from(cfg, vocab, feature_dims(input.records));
    MtnTct model(mc, Rng(seed).fork("model"));
    NamedParams params = model.named_parameters();
    load_checkpoint(ckpt, params);
    for (size_t i = 0; i < input.examples.size(); ++i) {
      generated[i] = model.generate(input.examples[i], decode);
    }
  } else if (task_name == "translator") {
    TranslatorModelConfig tmc = translator_config_from(cfg, vocab);
    TranslatorModel model(tmc, Rng(seed).fork("model"));
    NamedParams params = model.named_parameters();
    load_checkpoint(ckpt, params);
    for (size_t i = 0; i < input.examples.size(); ++i) {
      generated[i] =
          model.generate(ModalitySequence::textual(input.examples[i].question), decode);
    }
  } else {
    throw UsageError("unknown task '" + task_name + "' (expected mtn-tct or translator)");
  }

  std::string out_path = out_dir + "/answers.jsonl";
  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw Error("cannot write: " + out_path);
  os << nlohmann::json{{"format", "tct-corpus"}, {"version", 1}}.dump() << '\n';
  for (size_t i = 0; i < input.records.size(); ++i) {
    nlohmann::json j;
    j["id"] = input.records[i].id;
    j["question"] = input.records[i].question;
    j["answer"] = vocab.decode_text(generated[i].tokens);
    if (generated[i].truncated) j["truncated"] = true;
    os << j.dump() << '\n';
  }
  std::cout << "translate: wrote " << input.records.size() << " answers to " << out_path << "\n";
  return 0;
}

// --------------------------------------------------------------------- eval

int cmd_eval(const KeyValueConfig& cfg, const std::string& out_dir) {
  std::string hyp = cfg.require("eval.hyp");
  std::string ref_list = cfg.require("eval.ref");
  std::vector<std::string> refs;
  size_t start = 0;
  while (start <= ref_list.size()) {
    size_t comma = ref_list.find(',', start);
    std::string piece = ref_list.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!piece.empty()) refs.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  int limit = static_cast<int>(cfg.get_index("eval.refs", 0));
  write_snapshot(cfg, out_dir);

  MetricReport report = evaluate_files(hyp, refs, limit);
  std::ofstream os(out_dir + "/report.txt", std::ios::trunc);
  write_report(os, report);
  write_report(std::cout, report);

  std::ofstream per(out_dir + "/per_example.tsv", std::ios::trunc);
  per << "id\tqtype\tbleu_1\tbleu_2\tbleu_3\tbleu_4\trouge_l\tmeteor\tcider\n";
  for (const ExampleScores& e : report.examples) {
    per << e.id << '\t' << question_type_name(e.question_type);
    for (double b : e.bleu) per << '\t' << fmt(b);
    per << '\t' << fmt(e.rouge_l) << '\t' << fmt(e.meteor) << '\t' << fmt(e.cider) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const KeyValueConfig& cfg, const std::string& scope,
                  const std::string& out_dir) {
  uint64_t seed = cfg.get_u64("seed", 1);
  GradCheckReport report;
  if (scope == "primitives") {
    report = gradcheck_primitives(seed);
  } else if (scope == "attention") {
    report = gradcheck_attention(seed);
  } else if (scope == "tct") {
    report = gradcheck_tct(seed);
  } else if (scope == "model") {
    report = gradcheck_model(seed);
  } else {
    throw UsageError("unknown gradcheck scope '" + scope +
                     "' (expected primitives, attention, tct, or model)");
  }
  if (!out_dir.empty()) write_snapshot(cfg, out_dir);
  print_report(std::cout, report);
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tct: cross-modal translator toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, translate_args, eval_args, grad_args;
  std::string eval_hyp, grad_scope;
  std::vector<std::string> eval_refs;
  int eval_limit = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic cross-modal corpus");
  add_common_flags(gen, &gen_args, true);

  CLI::App* train = app.add_subcommand("train", "train a model and keep the best checkpoint");
  add_common_flags(train, &train_args, true);

  CLI::App* translate = app.add_subcommand("translate", "generate answers for a corpus");
  add_common_flags(translate, &translate_args, true);

  CLI::App* eval = app.add_subcommand("eval", "score hypotheses against references");
  add_common_flags(eval, &eval_args, true);
  eval->add_option("--hyp", eval_hyp, "hypothesis corpus file");
  eval->add_option("--ref", eval_refs, "reference corpus file (repeatable)");
  eval->add_option("--refs", eval_limit, "evaluate against the first N references");

  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference verification");
  add_common_flags(grad, &grad_args, false);
  grad->add_option("scope", grad_scope, "primitives | attention | tct | model")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(resolve_config(gen_args), gen_args.out_dir);
    if (train->parsed()) return cmd_train(resolve_config(train_args), train_args.out_dir);
    if (translate->parsed()) {
      return cmd_translate(resolve_config(translate_args), translate_args.out_dir);
    }
    if (eval->parsed()) {
      KeyValueConfig cfg = resolve_config(eval_args);
      if (!eval_hyp.empty()) cfg.set("eval.hyp", eval_hyp);
      if (!eval_refs.empty()) {
        std::string joined;
        for (const std::string& r : eval_refs) joined += joined.empty() ? r : "," + r;
        cfg.set("eval.ref", joined);
      }
      if (eval_limit > 0) cfg.set("eval.refs", std::to_string(eval_limit));
      return cmd_eval(cfg, eval_args.out_dir);
    }
    if (grad->parsed()) {
      return cmd_gradcheck(resolve_config(grad_args), grad_scope, grad_args.out_dir);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
