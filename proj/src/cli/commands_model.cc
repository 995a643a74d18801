#include <iostream>

#include "context.h"
#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/models/bow.h"
#include "dsfp/models/shallow.h"
#include "dsfp/tokenize/shard.h"
#include "dsfp/train/evaluate.h"
#include "dsfp/train/scaling.h"
#include "dsfp/train/trainer.h"

namespace dsfp::cli {
namespace {

namespace fs = std::filesystem;

struct ShardData {
  ShardManifest manifest;
  RowSet rows;
};

ShardData load_shards(const fs::path& dir) {
  ShardData d;
  d.manifest = ShardManifest::load(dir);
  d.rows = load_rows_by_label(dir, d.manifest);
  return d;
}

TransformerConfig model_config(const std::string& preset, const std::string& overrides, const ShardManifest& m,
                               uint64_t seed) {
  json j = preset_config(preset).to_json();
  j.erase("mlp_hidden");  // recomputed from hidden_dim unless overridden
  if (!overrides.empty()) {
    try {
      j.update(json::parse(overrides));
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("--model-config is not valid JSON: ") + e.what());
    }
  }
  j["context_length"] = m.context_length;
  j["vocab_size"] = m.vocab_size;
  j["n_classes"] = std::max<std::size_t>(2, m.label_names.size());
  if (!overrides.empty() && json::parse(overrides).contains("seed")) return TransformerConfig::from_json(j);
  j["seed"] = seed;
  return TransformerConfig::from_json(j);
}

void check_compatible(const TransformerModel& m, const ShardManifest& man) {
  if (m.config().context_length != static_cast<int>(man.context_length) ||
      m.config().vocab_size != static_cast<int>(man.vocab_size)) {
    throw InvalidArgument("model context/vocabulary do not match the shards");
  }
  if (m.metadata.contains("tokenizer_fingerprint") &&
      m.metadata["tokenizer_fingerprint"].get<std::string>() != man.tokenizer_fingerprint) {
    throw InvalidArgument("model was trained with a different tokenizer than the shards");
  }
}

struct ModelOptions {
  std::string shards;
  std::string preset = "micro";
  std::string model_config;
  std::string init;
  std::string hyper;
  std::size_t tokens = 0;
  std::string out;

  void add(CLI::App* sub, bool shards_required) {
    auto* s = sub->add_option("--shards", shards, "Shard directory written by pack");
    if (shards_required) s->required();
    sub->add_option("--preset", preset, "Model preset (25M, 87M, 160M, 410M, tiny, micro)");
    sub->add_option("--model-config", model_config, "JSON overrides of the preset");
    sub->add_option("--hyper", hyper, "Training hyperparameters as JSON");
    sub->add_option("--tokens", tokens, "Token budget (0 = all rows, class-balanced for classification)");
    sub->add_option("--out", out, "Output directory")->required();
  }
};

std::string log_table(const TrainLog& log) {
  std::string s = "step loss lr grad_norm\n";
  char line[96];
  const std::size_t every = std::max<std::size_t>(1, log.loss.size() / 20);
  for (std::size_t i = 0; i < log.loss.size(); ++i) {
    if (i % every != 0 && i + 1 != log.loss.size()) continue;
    std::snprintf(line, sizeof line, "%zu %.5f %.3g %.4f\n", i, log.loss[i], log.lr[i], log.grad_norm[i]);
    s += line;
  }
  return s;
}

void add_pretrain(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("pretrain", "Next-token pretraining on packed shards");
  auto o = std::make_shared<ModelOptions>();
  o->add(sub, true);
  sub->add_option("--init", o->init, "Continue from this LM checkpoint");
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    const fs::path out = o->out;
    if (run.up_to_date(out)) {
      std::cout << "pretrain: outputs for config " << run.config_hash() << " exist, skipping\n";
      return;
    }
    ShardData d = load_shards(o->shards);
    TransformerModel model = o->init.empty()
                                 ? build_transformer(model_config(o->preset, o->model_config, d.manifest, run.seed()))
                                 : load_checkpoint(o->init);
    if (model.head_mode() != HeadMode::kLm) throw InvalidArgument("pretraining needs an LM-head model");
    check_compatible(model, d.manifest);
    model.metadata["tokenizer_fingerprint"] = d.manifest.tokenizer_fingerprint;
    const RowSet rows = o->tokens ? take_token_budget(d.rows, o->tokens) : d.rows;
    TrainLog log;
    model = pretrain_lm(std::move(model), rows, hyper_from_option(o->hyper, run.seed()), &log);
    model.metadata["config_hash"] = run.config_hash();
    fs::create_directories(out);
    save_checkpoint(model, out / "lm.ckpt");
    run.write_report(out, "pretrain", log_table(log),
                     json{{"log", log.to_json()}, {"checkpoint_checksum", hex64(model.full_checksum())}});
    run.finish(out, {"lm.ckpt", "pretrain.txt", "pretrain.jsonl"});
    std::cout << "pretrain: " << log.tokens_seen << " tokens, final loss "
              << (log.loss.empty() ? 0.0 : log.loss.back()) << "\n";
  });
}

void add_train(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("train", "Train a dataset classifier");
  auto o = std::make_shared<ModelOptions>();
  auto kind = std::make_shared<std::string>("transformer");
  auto data = std::make_shared<std::vector<std::string>>();
  auto format = std::make_shared<std::string>("auto");
  o->add(sub, false);
  sub->add_option("--classifier", *kind, "transformer, bow or shallow")
      ->check(CLI::IsMember({"transformer", "bow", "shallow"}));
  sub->add_option("--init", o->init, "Pretrained LM checkpoint (transformer); its head is replaced");
  sub->add_option("--data", *data, "Training datasets NAME=PATH (bow, shallow)");
  sub->add_option("--format", *format, "auto, jsonl, dir or lines");
  sub->callback([&common, sub, o, kind, data, format] {
    Run run(*sub, common);
    const fs::path out = o->out;
    if (run.up_to_date(out)) {
      std::cout << "train: outputs for config " << run.config_hash() << " exist, skipping\n";
      return;
    }
    fs::create_directories(out);
    if (*kind != "transformer") {
      LabelRegistry reg;
      const Corpus train = load_labeled(parse_named_paths(*data), *format, reg);
      json hyper = o->hyper.empty() ? json::object() : json::parse(o->hyper);
      if (!hyper.contains("seed")) hyper["seed"] = run.seed();
      json model;
      if (*kind == "bow") {
        model = bow_train(train, reg.size(), BowHyper::from_json(hyper)).to_json();
      } else {
        model = shallow_train(train, reg.size(), ShallowHyper::from_json(hyper)).to_json();
      }
      save_classifier_bundle(out / "classifier.json", *kind, reg.names(), model);
      run.write_report(out, "train", *kind + " trained on " + std::to_string(train.size()) + " sequences\n",
                       json{{"classifier", *kind}, {"sequences", train.size()}, {"labels", reg.names()}});
      run.finish(out, {"classifier.json", "train.txt", "train.jsonl"});
      std::cout << "train: " << *kind << " on " << train.size() << " sequences\n";
      return;
    }
    if (o->shards.empty()) throw InvalidArgument("transformer training needs --shards");
    ShardData d = load_shards(o->shards);
    const std::size_t k = d.manifest.label_names.size();
    if (k < 2) throw InvalidArgument("classification needs at least two labelled datasets");
    TransformerModel model = [&] {
      if (o->init.empty()) {
        return build_transformer(model_config(o->preset, o->model_config, d.manifest, run.seed()), HeadMode::kClass);
      }
      TransformerModel lm = load_checkpoint(o->init);
      check_compatible(lm, d.manifest);
      return replace_head(lm, static_cast<int>(k));
    }();
    if (model.config().n_classes != static_cast<int>(k)) throw InvalidArgument("class count mismatch");
    model.metadata["tokenizer_fingerprint"] = d.manifest.tokenizer_fingerprint;
    model.metadata["label_names"] = d.manifest.label_names;
    const RowSet rows = o->tokens ? take_token_budget(d.rows, o->tokens) : balance_rows(d.rows);
    TrainLog log;
    model = finetune_classifier(std::move(model), rows, hyper_from_option(o->hyper, run.seed()), &log);
    model.metadata["config_hash"] = run.config_hash();
    save_checkpoint(model, out / "classifier.ckpt");
    run.write_report(out, "train", log_table(log),
                     json{{"classifier", "transformer"},
                          {"log", log.to_json()},
                          {"checkpoint_checksum", hex64(model.full_checksum())}});
    run.finish(out, {"classifier.ckpt", "train.txt", "train.jsonl"});
    std::cout << "train: transformer, " << log.tokens_seen << " tokens, final loss "
              << (log.loss.empty() ? 0.0 : log.loss.back()) << "\n";
  });
}

void add_eval(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("eval", "Evaluate a classifier on labelled test data");
  struct Opt {
    std::string model, tokenizer, format = "auto", out;
    std::vector<std::string> test;
    std::vector<std::string> modes{"whole-seq"};
    ByLengthOptions by_length;
  };
  auto o = std::make_shared<Opt>();
  sub->add_option("--model", o->model, "Classifier checkpoint or bundle")->required();
  sub->add_option("--tokenizer", o->tokenizer, "Vocabulary file (transformer, by-length)");
  sub->add_option("--test", o->test, "Test datasets NAME=PATH")->required();
  sub->add_option("--format", o->format, "auto, jsonl, dir or lines");
  sub->add_option("--mode", o->modes, "whole-seq, majority, by-length, aggregated");
  sub->add_option("--bucket-width", o->by_length.bucket_width, "by-length bucket width");
  sub->add_option("--max-len", o->by_length.max_len, "by-length maximum length");
  sub->add_option("--per-bucket", o->by_length.per_bucket, "by-length sequences per bucket");
  sub->add_option("--out", o->out, "Report directory");
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    if (run.up_to_date(o->out)) return;
    LoadedClassifier lc = load_classifier(o->model, o->tokenizer);
    LabelRegistry reg(lc.label_names);
    const Corpus test = load_labeled(parse_named_paths(o->test), o->format, reg);
    if (reg.size() != lc.classifier->n_classes()) {
      throw InvalidArgument("test labels do not match the classifier's label registry");
    }
    std::vector<std::string> outputs;
    for (const auto& mode_name : o->modes) {
      const EvalMode mode = parse_eval_mode(mode_name);
      EvalReport r;
      switch (mode) {
        case EvalMode::kWholeSeq:
          r = evaluate(*lc.classifier, test);
          break;
        case EvalMode::kMajority:
        case EvalMode::kAggregated:
          if (!lc.transformer) throw InvalidArgument(mode_name + " evaluation needs a transformer classifier");
          r = mode == EvalMode::kMajority ? evaluate_majority(*lc.transformer, *lc.tokenizer, test)
                                          : evaluate_aggregated(*lc.transformer, *lc.tokenizer, test);
          break;
        case EvalMode::kByLength: {
          std::unique_ptr<Tokenizer> own;
          const Tokenizer* tok = lc.tokenizer.get();
          if (!tok) {
            if (o->tokenizer.empty()) throw InvalidArgument("by-length evaluation needs --tokenizer");
            own = load_tokenizer(o->tokenizer);
            tok = own.get();
          }
          r = evaluate_by_length(*lc.classifier, *tok, test, o->by_length);
          break;
        }
      }
      r.label_names = reg.names();
      const std::string stem = "eval-" + std::string(to_string(mode));
      const std::string table = r.format_table();
      std::cout << table;
      if (!o->out.empty()) {
        run.write_report(o->out, stem, table, r.to_json());
        outputs.push_back(stem + ".txt");
        outputs.push_back(stem + ".jsonl");
      }
    }
    if (!o->out.empty()) run.finish(o->out, outputs);
  });
}

void add_probe(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("probe", "Linear probe: train only a class head on a frozen LM body");
  auto o = std::make_shared<ModelOptions>();
  o->add(sub, true);
  sub->add_option("--init", o->init, "LM checkpoint; omit to probe a randomly initialized body");
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    const fs::path out = o->out;
    if (run.up_to_date(out)) return;
    ShardData d = load_shards(o->shards);
    TransformerModel lm = o->init.empty()
                              ? build_transformer(model_config(o->preset, o->model_config, d.manifest, run.seed()))
                              : load_checkpoint(o->init);
    check_compatible(lm, d.manifest);
    const std::size_t k = d.manifest.label_names.size();
    const RowSet rows = o->tokens ? take_token_budget(d.rows, o->tokens) : balance_rows(d.rows);
    const uint64_t before = lm.body_checksum();
    TrainLog log;
    TransformerModel probe = linear_probe(lm, rows, k, hyper_from_option(o->hyper, run.seed()), &log);
    probe.metadata["tokenizer_fingerprint"] = d.manifest.tokenizer_fingerprint;
    probe.metadata["label_names"] = d.manifest.label_names;
    probe.metadata["config_hash"] = run.config_hash();
    const uint64_t after = probe.body_checksum();
    fs::create_directories(out);
    save_checkpoint(probe, out / "probe.ckpt");
    const std::string text = "body checksum before " + hex64(before) + "\nbody checksum after  " + hex64(after) +
                             "\n" + log_table(log);
    run.write_report(out, "probe", text,
                     json{{"body_checksum_before", hex64(before)},
                          {"body_checksum_after", hex64(after)},
                          {"body_unchanged", before == after},
                          {"log", log.to_json()}});
    run.finish(out, {"probe.ckpt", "probe.txt", "probe.jsonl"});
    std::cout << text.substr(0, text.find("step"));
  });
}

void add_grid(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("grid", "Scaling grid over token budgets or model sizes");
  struct Opt {
    std::string axis = "tokens", shards, tokenizer, preset = "micro", model_config, hyper, pretrain_hyper, format = "auto",
                out;
    std::vector<std::string> test;
    std::vector<std::size_t> budgets;
    std::vector<std::string> presets;
    bool pretrain = false;
  };
  auto o = std::make_shared<Opt>();
  sub->add_option("--axis", o->axis, "tokens or model")->check(CLI::IsMember({"tokens", "model"}));
  sub->add_option("--shards", o->shards, "Shard directory")->required();
  sub->add_option("--tokenizer", o->tokenizer, "Vocabulary file (default: the shard directory's)");
  sub->add_option("--test", o->test, "Test datasets NAME=PATH")->required();
  sub->add_option("--format", o->format, "auto, jsonl, dir or lines");
  sub->add_option("--preset", o->preset, "Model preset for the token axis");
  sub->add_option("--model-config", o->model_config, "JSON overrides of the preset");
  sub->add_option("--budgets", o->budgets, "Training-token budgets (token axis)");
  sub->add_option("--presets", o->presets, "Presets (model axis)");
  sub->add_option("--hyper", o->hyper, "Finetuning hyperparameters as JSON");
  sub->add_option("--pretrain-hyper", o->pretrain_hyper, "Pretraining hyperparameters as JSON");
  sub->add_flag("--pretrain", o->pretrain, "Pretrain the backbone on the shards first");
  sub->add_option("--out", o->out, "Report directory")->required();
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    if (run.up_to_date(o->out)) return;
    ShardData d = load_shards(o->shards);
    auto tok = load_tokenizer(o->tokenizer.empty() ? (fs::path(o->shards) / "tokenizer.json").string() : o->tokenizer);
    if (tok->fingerprint() != d.manifest.tokenizer_fingerprint) {
      throw InvalidArgument("tokenizer does not match the shards");
    }
    LabelRegistry reg(d.manifest.label_names);
    const Corpus test = load_labeled(parse_named_paths(o->test), o->format, reg);
    if (reg.size() != d.manifest.label_names.size()) throw InvalidArgument("test labels do not match the shards");
    GridData gd;
    gd.train = &d.rows;
    gd.pretrain = o->pretrain ? &d.rows : nullptr;
    gd.test = &test;
    gd.tokenizer = tok.get();
    gd.finetune = hyper_from_option(o->hyper, run.seed());
    gd.pretrain_hyper = hyper_from_option(o->pretrain_hyper, run.seed());
    TransformerConfig cfg = model_config(o->preset, o->model_config, d.manifest, run.seed());
    ScalingGrid grid;
    if (o->axis == "tokens") {
      if (o->budgets.empty()) throw InvalidArgument("token axis needs --budgets");
      grid = run_token_grid(cfg, o->budgets, gd);
    } else {
      if (o->presets.empty()) throw InvalidArgument("model axis needs --presets");
      grid = run_model_grid(o->presets, cfg, gd);
    }
    const std::string table = grid.format_table();
    std::cout << table;
    run.write_report(o->out, "grid", table, grid.to_json());
    run.finish(o->out, {"grid.txt", "grid.jsonl"});
  });
}

}  // namespace

void add_model_commands(CLI::App& app, Common& common) {
  add_pretrain(app, common);
  add_train(app, common);
  add_eval(app, common);
  add_probe(app, common);
  add_grid(app, common);
}

}  // namespace dsfp::cli
