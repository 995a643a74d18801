#include <iostream>

#include "context.h"
#include "dsfp/common/error.h"
#include "dsfp/corpus/length_stats.h"
#include "dsfp/corpus/synthetic.h"
#include "dsfp/tokenize/packing.h"
#include "dsfp/tokenize/shard.h"
#include "dsfp/tokenize/word_tokenizer.h"
#include "dsfp/transforms/strip.h"

namespace dsfp::cli {
namespace {

namespace fs = std::filesystem;

std::string file_safe(const std::string& name) {
  std::string out;
  for (char c : name) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out;
}

std::unique_ptr<Tokenizer> tokenizer_for(const std::string& path, const Corpus& corpus, std::size_t max_pieces,
                                         std::size_t min_count) {
  if (!path.empty()) return load_tokenizer(path);
  std::vector<std::string_view> texts;
  texts.reserve(corpus.size());
  for (const auto& s : corpus.sequences()) texts.push_back(s.text);
  return std::make_unique<WordTokenizer>(WordTokenizer::build(texts, max_pieces, min_count));
}

struct DataOptions {
  std::vector<std::string> data;
  std::string format = "auto";
  std::string tokenizer;
  std::size_t vocab_pieces = 16000;
  std::size_t min_count = 2;
  std::string out;

  void add(CLI::App* sub, bool build_tokenizer) {
    sub->add_option("--data", data, "Datasets as NAME=PATH, label order = argument order")->required();
    sub->add_option("--format", format, "auto, jsonl, dir or lines")
        ->check(CLI::IsMember({"auto", "jsonl", "dir", "lines"}));
    sub->add_option("--tokenizer", tokenizer, "Vocabulary file (native word vocab or tokenizer.json)");
    if (build_tokenizer) {
      sub->add_option("--vocab-pieces", vocab_pieces, "Pieces kept when building a word vocabulary");
      sub->add_option("--min-count", min_count, "Minimum piece frequency when building a word vocabulary");
    }
  }
};

void add_synth(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("synth", "Write a synthetic multi-domain benchmark");
  struct Opt {
    std::string benchmark = "subtle";
    std::size_t classes = 3, train_docs = 2000, test_docs = 500, words_per_domain = 150;
    SubtleBiasOptions subtle;
    std::string out;
  };
  auto o = std::make_shared<Opt>();
  sub->add_option("--benchmark", o->benchmark, "subtle or disjoint")->check(CLI::IsMember({"subtle", "disjoint"}));
  sub->add_option("--classes", o->classes, "Number of domains")->check(CLI::Range(2, 1000));
  sub->add_option("--train-docs", o->train_docs, "Training documents per domain");
  sub->add_option("--test-docs", o->test_docs, "Test documents per domain");
  sub->add_option("--words-per-domain", o->words_per_domain, "Vocabulary size per domain (disjoint)");
  sub->add_option("--vocab-noise", o->subtle.vocab_noise, "Per-word weight perturbation (subtle)");
  sub->add_option("--phrase-rate", o->subtle.phrase_rate, "Phrase insertion rate (subtle)");
  sub->add_option("--newline-step", o->subtle.newline_step, "Newline-rate step between domains (subtle)");
  sub->add_option("--mean-words", o->subtle.mean_words, "Median document length in words (subtle)");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    const fs::path out = o->out;
    if (run.up_to_date(out)) {
      std::cout << "synth: outputs for config " << run.config_hash() << " exist, skipping\n";
      return;
    }
    const auto specs = o->benchmark == "subtle" ? subtle_bias_benchmark(o->classes, run.seed(), o->subtle)
                                                : disjoint_benchmark(o->classes, run.seed(), o->words_per_domain);
    LabelRegistry reg;
    std::vector<std::string> outputs;
    json domains = json::array();
    for (const auto& spec : specs) {
      const LabelId label = reg.add(spec.name);
      const Corpus train = generate_synthetic_corpus(spec, o->train_docs, label, 0);
      const Corpus test = generate_synthetic_corpus(spec, o->test_docs, label, o->train_docs);
      const std::string file = file_safe(spec.name) + ".jsonl";
      fs::create_directories(out / "train");
      fs::create_directories(out / "test");
      save_corpus_jsonl(train, out / "train" / file, &reg);
      save_corpus_jsonl(test, out / "test" / file, &reg);
      outputs.push_back("train/" + file);
      outputs.push_back("test/" + file);
      domains.push_back(spec.to_json());
    }
    write_file_atomic(out / "domains.json", run.stamp(json{{"benchmark", o->benchmark}, {"domains", domains}}).dump(2));
    outputs.push_back("domains.json");
    run.finish(out, outputs);
    std::cout << "synth: wrote " << specs.size() << " domains (" << o->train_docs << " train, " << o->test_docs
              << " test documents each) to " << out.string() << "\n";
  });
}

void add_stats(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("stats", "Token-length statistics per dataset");
  auto o = std::make_shared<DataOptions>();
  o->add(sub, true);
  sub->add_option("--out", o->out, "Report directory (stats.txt, stats.jsonl)");
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    if (run.up_to_date(o->out)) return;
    LabelRegistry reg;
    const Corpus all = load_labeled(parse_named_paths(o->data), o->format, reg);
    auto tok = tokenizer_for(o->tokenizer, all, o->vocab_pieces, o->min_count);
    std::vector<std::pair<std::string, LengthStats>> rows;
    json rec = json::array();
    for (LabelId l = 0; l < reg.size(); ++l) {
      Corpus part(reg.name(l));
      for (const auto& s : all.sequences()) {
        if (s.label == l) part.add(s);
      }
      if (part.empty()) throw InvalidArgument("dataset " + reg.name(l) + " has no sequences");
      rows.emplace_back(reg.name(l), compute_length_stats(part, *tok));
      json r = rows.back().second.to_json();
      r["dataset"] = reg.name(l);
      rec.push_back(std::move(r));
    }
    const std::string table = format_length_table(rows);
    std::cout << table;
    if (!o->out.empty()) {
      run.write_report(o->out, "stats", table, json{{"tokenizer", tok->kind()}, {"datasets", rec}});
      run.finish(o->out, {"stats.txt", "stats.jsonl"});
    }
  });
}

void add_histogram(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("histogram", "Token-length histogram per dataset");
  auto o = std::make_shared<DataOptions>();
  auto width = std::make_shared<std::size_t>(50);
  auto cap = std::make_shared<std::size_t>(2048);
  o->add(sub, true);
  sub->add_option("--bucket-width", *width, "Bucket width in tokens")->check(CLI::PositiveNumber);
  sub->add_option("--cap", *cap, "Lengths above this are counted as omitted");
  sub->add_option("--out", o->out, "Report directory (histogram.txt, histogram.jsonl)");
  sub->callback([&common, sub, o, width, cap] {
    Run run(*sub, common);
    if (run.up_to_date(o->out)) return;
    LabelRegistry reg;
    const Corpus all = load_labeled(parse_named_paths(o->data), o->format, reg);
    auto tok = tokenizer_for(o->tokenizer, all, o->vocab_pieces, o->min_count);
    std::string text;
    json rec = json::array();
    for (LabelId l = 0; l < reg.size(); ++l) {
      Corpus part(reg.name(l));
      for (const auto& s : all.sequences()) {
        if (s.label == l) part.add(s);
      }
      const LengthHistogram h = emit_histogram(part, *tok, *width, *cap);
      text += "== " + reg.name(l) + "\n" + format_histogram(h);
      json r = h.to_json();
      r["dataset"] = reg.name(l);
      rec.push_back(std::move(r));
    }
    std::cout << text;
    if (!o->out.empty()) {
      run.write_report(o->out, "histogram", text, json{{"datasets", rec}});
      run.finish(o->out, {"histogram.txt", "histogram.jsonl"});
    }
  });
}

void add_pack(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("pack", "Tokenize, pack and shard training data");
  auto o = std::make_shared<DataOptions>();
  auto ctx = std::make_shared<std::size_t>(kDefaultContextLength);
  auto rps = std::make_shared<std::size_t>(kDefaultRowsPerShard);
  o->add(sub, true);
  sub->add_option("--context", *ctx, "Context length; rows hold context + 1 tokens")->check(CLI::PositiveNumber);
  sub->add_option("--rows-per-shard", *rps, "Rows per shard file")->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Shard directory")->required();
  sub->callback([&common, sub, o, ctx, rps] {
    Run run(*sub, common);
    const fs::path out = o->out;
    if (run.up_to_date(out)) {
      std::cout << "pack: outputs for config " << run.config_hash() << " exist, skipping\n";
      return;
    }
    LabelRegistry reg;
    const Corpus all = load_labeled(parse_named_paths(o->data), o->format, reg);
    auto tok = tokenizer_for(o->tokenizer, all, o->vocab_pieces, o->min_count);
    fs::create_directories(out);
    std::vector<std::string> outputs;
    if (o->tokenizer.empty()) {
      dynamic_cast<const WordTokenizer&>(*tok).save(out / "tokenizer.json");
    } else {
      write_file_atomic(out / "tokenizer.json", read_file(o->tokenizer));
    }
    outputs.push_back("tokenizer.json");
    ShardManifest m;
    m.context_length = static_cast<uint32_t>(*ctx);
    m.vocab_size = tok->vocab_size();
    m.rows_per_shard = static_cast<uint32_t>(*rps);
    m.tokenizer_fingerprint = tok->fingerprint();
    m.label_names = reg.names();
    json per_label = json::array();
    for (LabelId l = 0; l < reg.size(); ++l) {
      PackResult r = pack_corpus(all, *tok, *ctx, l);
      write_shard_set(r.rows, tok->vocab_size(), *rps, out, file_safe(reg.name(l)), m);
      per_label.push_back({{"dataset", reg.name(l)},
                           {"sequences", r.stats.sequences},
                           {"stream_tokens", r.stats.total_tokens},
                           {"dropped_tokens", r.stats.dropped_tokens},
                           {"rows", r.rows.row_count()}});
      std::cout << "pack: " << reg.name(l) << ": " << r.rows.row_count() << " rows of " << *ctx + 1
                << " tokens (" << r.stats.dropped_tokens << " tail tokens dropped)\n";
    }
    for (const auto& s : m.shards) outputs.push_back(s.file);
    m.metadata = run.stamp(json{{"labels", per_label}, {"tokenizer", tok->kind()}});
    m.save(out);
    outputs.emplace_back(ShardManifest::kFileName);
    run.finish(out, outputs);
  });
}

void add_strip(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("strip", "Remove newlines and list formatting from {id, text} records");
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  sub->add_option("--in", *in, "Input JSONL of {id, text}")->required();
  sub->add_option("--out", *out, "Output JSONL of {id, text, status}")->required();
  sub->callback([&common, sub, in, out] {
    Run run(*sub, common);
    const fs::path out_path = *out;
    const fs::path dir = out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path();
    if (run.up_to_date(dir)) return;
    std::vector<json> result;
    for (const json& r : read_jsonl(*in)) {
      json o{{"id", r.value("id", json(""))}};
      if (r.contains("text") && r["text"].is_string()) {
        o["text"] = strip_formatting(r["text"].get<std::string>());
        o["status"] = "ok";
      } else {
        o["text"] = "";
        o["status"] = "format_error";
      }
      result.push_back(std::move(o));
    }
    write_jsonl(out_path, result);
    run.finish(dir, {out_path.filename().string()});
    std::cout << "strip: " << result.size() << " records\n";
  });
}

}  // namespace

void add_data_commands(CLI::App& app, Common& common) {
  add_synth(app, common);
  add_stats(app, common);
  add_histogram(app, common);
  add_pack(app, common);
  add_strip(app, common);
}

}  // namespace dsfp::cli
