#include "dsfp/cli/cli.h"

#include <ctime>
#include <iostream>

#include "context.h"
#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/parallel.h"
#include "dsfp/models/bow.h"
#include "dsfp/models/shallow.h"
#include "dsfp/train/evaluate.h"
#include "json_config.h"

namespace dsfp::cli {
namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json option_value(const CLI::Option& opt) {
  if (opt.count() == 0) return opt.get_default_str();
  const auto& r = opt.results();
  if (r.size() == 1) return r.front();
  return r;
}

void print_error(const std::string& command, const std::string& kind, const std::string& message) {
  json rec{{"error", {{"command", command}, {"kind", kind}, {"message", message}}}};
  std::cerr << rec.dump() << std::endl;
}

}  // namespace

Run::Run(const CLI::App& sub, const Common& common) : common_(common), command_(sub.get_name()) {
  if (common_.config_version != kConfigVersion) {
    throw InvalidArgument("unsupported config_version " + std::to_string(common_.config_version));
  }
  if (common_.threads > 0) set_max_threads(common_.threads);
  params_ = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    params_[name] = option_value(*opt);
  }
  // Where results go is not part of the configuration.
  json hashed = params_;
  hashed.erase("out");
  json keyed{{"command", command_},
             {"config_version", common_.config_version},
             {"experiment", common_.experiment},
             {"seed", common_.seed},
             {"params", hashed}};
  hash_ = sha256_hex(keyed.dump()).substr(0, 16);
}

json Run::stamp(json record) const {
  record["config_hash"] = hash_;
  record["seed"] = common_.seed;
  record["experiment"] = common_.experiment;
  record["command"] = command_;
  record["tool_version"] = kToolVersion;
  if (!common_.deterministic) record["created_at"] = utc_now();
  return record;
}

std::filesystem::path Run::stamp_path(const std::filesystem::path& out_dir) const {
  return out_dir / (command_ + ".stamp.json");
}

bool Run::up_to_date(const std::filesystem::path& out_dir) const {
  if (common_.force || out_dir.empty()) return false;
  const auto p = stamp_path(out_dir);
  if (!std::filesystem::exists(p)) return false;
  try {
    const json s = json::parse(read_file(p));
    if (s.value("config_hash", "") != hash_) return false;
    for (const auto& f : s.at("outputs")) {
      if (!std::filesystem::exists(out_dir / f.get<std::string>())) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void Run::finish(const std::filesystem::path& out_dir, const std::vector<std::string>& outputs) const {
  if (out_dir.empty()) return;
  json s = stamp(json{{"outputs", outputs}, {"params", params_}});
  s.erase("created_at");  // the stamp must not differ between identical runs
  write_file_atomic(stamp_path(out_dir), s.dump(2) + "\n");
}

void Run::write_report(const std::filesystem::path& out_dir, const std::string& stem, const std::string& text,
                       const json& record) const {
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / (stem + ".txt"), text);
  write_file_atomic(out_dir / (stem + ".jsonl"), stamp(record).dump() + "\n");
}

std::vector<NamedPath> parse_named_paths(const std::vector<std::string>& specs) {
  std::vector<NamedPath> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw InvalidArgument("expected NAME=PATH, got '" + s + "'");
    }
    out.push_back({s.substr(0, eq), s.substr(eq + 1)});
  }
  return out;
}

Corpus load_labeled(const std::vector<NamedPath>& data, const std::string& format, LabelRegistry& registry) {
  if (data.empty()) throw InvalidArgument("no datasets given");
  std::vector<Corpus> parts;
  for (const auto& d : data) {
    CorpusFormat f;
    if (format == "auto") {
      if (std::filesystem::is_directory(d.path)) {
        f = CorpusFormat::kOneDocPerFile;
      } else if (d.path.extension() == ".jsonl" || d.path.extension() == ".json") {
        f = CorpusFormat::kJsonlText;
      } else {
        f = CorpusFormat::kPlainLines;
      }
    } else {
      f = parse_corpus_format(format);
    }
    const LabelId label = registry.add(d.name);
    parts.push_back(load_corpus(d.path, f, label, registry));
  }
  std::vector<const Corpus*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return merge_corpora(ptrs, "data");
}

TrainHyper hyper_from_option(const std::string& json_text, uint64_t seed) {
  json j = json::object();
  if (!json_text.empty()) {
    try {
      j = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("hyperparameters are not valid JSON: ") + e.what());
    }
  }
  if (!j.contains("seed")) j["seed"] = seed;
  return TrainHyper::from_json(j);
}

void save_classifier_bundle(const std::filesystem::path& path, const std::string& kind,
                            const std::vector<std::string>& label_names, const json& model) {
  json doc{{"format", "dsfp-classifier"}, {"version", 1}, {"kind", kind}, {"label_names", label_names},
           {"model", model}};
  write_file_atomic(path, doc.dump() + "\n");
}

namespace {

// Owns the model and tokenizer a TransformerClassifier refers to.
class OwningTransformerClassifier : public Classifier {
 public:
  OwningTransformerClassifier(const TransformerModel& m, const Tokenizer& t) : inner_(m, t) {}
  std::size_t n_classes() const override { return inner_.n_classes(); }
  LabelId predict(std::string_view text) const override { return inner_.predict(text); }
  std::string kind() const override { return inner_.kind(); }

 private:
  TransformerClassifier inner_;
};

}  // namespace

LoadedClassifier load_classifier(const std::filesystem::path& path, const std::string& tokenizer_path) {
  LoadedClassifier out;
  const std::string bytes = read_file(path);
  if (bytes.rfind("DSFPCKPT", 0) == 0) {
    if (tokenizer_path.empty()) throw InvalidArgument("a transformer classifier needs --tokenizer");
    out.transformer = std::make_unique<TransformerModel>(decode_checkpoint(bytes, path.string()));
    if (out.transformer->head_mode() != HeadMode::kClass) {
      throw InvalidArgument(path.string() + " has an LM head, not a class head");
    }
    out.tokenizer = load_tokenizer(tokenizer_path);
    const auto& meta = out.transformer->metadata;
    if (meta.contains("tokenizer_fingerprint") &&
        meta["tokenizer_fingerprint"].get<std::string>() != out.tokenizer->fingerprint()) {
      throw InvalidArgument("tokenizer does not match the one the model was trained with");
    }
    out.label_names = meta.value("label_names", std::vector<std::string>{});
    out.classifier = std::make_unique<OwningTransformerClassifier>(*out.transformer, *out.tokenizer);
    return out;
  }
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error&) {
    throw FormatError(path.string() + ": not a checkpoint or classifier bundle");
  }
  if (doc.value("format", "") != "dsfp-classifier") throw FormatError(path.string() + ": not a classifier bundle");
  const std::string kind = doc.at("kind").get<std::string>();
  out.label_names = doc.value("label_names", std::vector<std::string>{});
  if (kind == "bow") {
    out.classifier = std::make_unique<BowModel>(BowModel::from_json(doc.at("model")));
  } else if (kind == "shallow") {
    out.classifier = std::make_unique<ShallowModel>(ShallowModel::from_json(doc.at("model")));
  } else {
    throw FormatError(path.string() + ": unknown classifier kind " + kind);
  }
  return out;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Dataset classification, rewriting and mixture estimation tools", "dsfp"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.set_config("--config", "", "RunConfig JSON file; command-line flags take precedence");
  app.add_option("--config_version", common.config_version, "RunConfig schema version")->group("");
  app.add_option("--experiment", common.experiment, "Experiment name stamped into outputs");
  app.add_option("--seed", common.seed, "Master seed");
  app.add_option("--threads", common.threads, "Worker thread cap (0 = all cores)")->configurable(false);
  app.add_flag("--deterministic", common.deterministic,
               "Omit wall-clock fields so identical runs write byte-identical files");
  app.add_flag("--force", common.force, "Rerun even when outputs for this config exist")->configurable(false);

  add_data_commands(app, common);
  add_model_commands(app, common);
  add_text_commands(app, common);
  add_generation_commands(app, common);

  std::string command = "dsfp";
  try {
    // Subcommand callbacks run inside parse().
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    print_error(command, "invalid_config", std::string("run config rejected: ") + e.what());
    return 2;
  } catch (const CLI::ParseError& e) {
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    print_error(command, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    print_error(command, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    print_error(command, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace dsfp::cli
