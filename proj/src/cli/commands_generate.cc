#include <iostream>

#include "context.h"
#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/generate/generation.h"
#include "dsfp/generate/mixture.h"

namespace dsfp::cli {
namespace {

namespace fs = std::filesystem;

void add_generate(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("generate", "Sample sequences from an LM prompted with one first token");
  struct Opt {
    std::string model, tokenizer, first_tokens, format = "auto", out;
    GenerateOptions gen;
  };
  auto o = std::make_shared<Opt>();
  sub->add_option("--model", o->model, "LM checkpoint")->required();
  sub->add_option("--tokenizer", o->tokenizer, "Vocabulary file")->required();
  sub->add_option("--first-tokens", o->first_tokens, "Corpus NAME=PATH whose first tokens seed generation")
      ->required();
  sub->add_option("--format", o->format, "auto, jsonl, dir or lines");
  sub->add_option("--n", o->gen.n, "Number of sequences");
  sub->add_option("--max-len", o->gen.max_len, "Maximum tokens per sequence");
  sub->add_option("--temperature", o->gen.temperature, "Sampling temperature (0 = greedy)");
  sub->add_option("--out", o->out, "Output directory")->required();
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    const fs::path out = o->out;
    if (run.up_to_date(out)) return;
    const TransformerModel lm = load_checkpoint(o->model);
    auto tok = load_tokenizer(o->tokenizer);
    LabelRegistry reg;
    const Corpus source = load_labeled(parse_named_paths({o->first_tokens}), o->format, reg);
    const FirstTokenDistribution dist = first_token_distribution(source, *tok);
    GenerateOptions gen = o->gen;
    gen.seed = run.seed();
    GenerationResult r = generate_sequences(lm, *tok, dist, gen);
    r.corpus.set_name("generated");
    fs::create_directories(out);
    save_corpus_jsonl(r.corpus, out / "generated.jsonl");
    write_file_atomic(out / "first_tokens.json", dist.to_json().dump() + "\n");
    std::size_t total = 0;
    for (const auto& t : r.tokens) total += t.size();
    run.write_report(out, "generate",
                     std::to_string(r.tokens.size()) + " sequences, " + std::to_string(total) + " tokens\n",
                     r.metadata);
    run.finish(out, {"generated.jsonl", "first_tokens.json", "generate.txt", "generate.jsonl"});
    std::cout << "generate: " << r.tokens.size() << " sequences, " << total << " tokens\n";
  });
}

void add_estimate(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("estimate-mixture", "Estimate domain proportions by classifying sequences");
  struct Opt {
    std::string model, tokenizer, in, format = "auto", out;
    std::vector<double> truth;
  };
  auto o = std::make_shared<Opt>();
  sub->add_option("--model", o->model, "Classifier checkpoint or bundle")->required();
  sub->add_option("--tokenizer", o->tokenizer, "Vocabulary file (transformer)");
  sub->add_option("--in", o->in, "Sequences to classify")->required();
  sub->add_option("--format", o->format, "auto, jsonl, dir or lines");
  sub->add_option("--truth", o->truth, "Known proportions, one per class, for the bar table");
  sub->add_option("--out", o->out, "Report directory");
  sub->callback([&common, sub, o] {
    Run run(*sub, common);
    if (run.up_to_date(o->out)) return;
    LoadedClassifier lc = load_classifier(o->model, o->tokenizer);
    LabelRegistry reg;
    const Corpus seqs = load_labeled({{"input", o->in}}, o->format, reg);
    MixtureEstimate m = estimate_mixture(*lc.classifier, seqs, lc.label_names);
    std::optional<std::vector<double>> truth;
    if (!o->truth.empty()) truth = o->truth;
    const std::string table = m.format_table(truth);
    std::cout << table;
    if (!o->out.empty()) {
      json rec = m.to_json();
      if (truth) rec["truth"] = *truth;
      run.write_report(o->out, "mixture", table, rec);
      run.finish(o->out, {"mixture.txt", "mixture.jsonl"});
    }
  });
}

}  // namespace

void add_generation_commands(CLI::App& app, Common& common) {
  add_generate(app, common);
  add_estimate(app, common);
}

}  // namespace dsfp::cli
