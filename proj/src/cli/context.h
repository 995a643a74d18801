#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsfp/common/io.h"
#include "dsfp/corpus/corpus.h"
#include "dsfp/models/classifier.h"
#include "dsfp/models/transformer.h"
#include "dsfp/tokenize/tokenizer.h"
#include "dsfp/train/hyper.h"

namespace dsfp::cli {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Options shared by every subcommand.
struct Common {
  std::string config;
  int config_version = kConfigVersion;
  std::string experiment = "default";
  uint64_t seed = 0;
  std::size_t threads = 0;
  bool deterministic = false;
  bool force = false;
};

// One subcommand invocation: its config hash, output stamping and the
// skip-if-done check.
class Run {
 public:
  Run(const CLI::App& sub, const Common& common);

  const std::string& config_hash() const { return hash_; }
  const json& params() const { return params_; }
  uint64_t seed() const { return common_.seed; }
  bool deterministic() const { return common_.deterministic; }

  // Adds config_hash, seed, experiment and command (plus a timestamp unless
  // deterministic) to a structured record.
  json stamp(json record) const;

  // True when `out_dir` already holds this command's outputs for the same
  // config hash and --force was not given.
  bool up_to_date(const std::filesystem::path& out_dir) const;
  // Records the outputs just written so a rerun can be skipped.
  void finish(const std::filesystem::path& out_dir, const std::vector<std::string>& outputs) const;

  // Writes `text` and a one-line structured record next to it.
  void write_report(const std::filesystem::path& out_dir, const std::string& stem, const std::string& text,
                    const json& record) const;

 private:
  std::filesystem::path stamp_path(const std::filesystem::path& out_dir) const;
  const Common& common_;
  std::string command_;
  json params_;
  std::string hash_;
};

// "name=path" pairs, in order.
struct NamedPath {
  std::string name;
  std::filesystem::path path;
};
std::vector<NamedPath> parse_named_paths(const std::vector<std::string>& specs);

// Loads each dataset with the label of its position in `names` (added to the
// registry when absent). `format` is auto, jsonl, dir or lines.
Corpus load_labeled(const std::vector<NamedPath>& data, const std::string& format, LabelRegistry& registry);

TrainHyper hyper_from_option(const std::string& json_text, uint64_t seed);

// Classifier loaded from disk together with what it needs to predict.
struct LoadedClassifier {
  std::unique_ptr<Classifier> classifier;
  std::unique_ptr<Tokenizer> tokenizer;               // transformer only
  std::unique_ptr<TransformerModel> transformer;      // transformer only
  std::vector<std::string> label_names;
};

// Reads a transformer checkpoint (needs `tokenizer_path`) or a bag-of-words /
// shallow bundle written by `train`.
LoadedClassifier load_classifier(const std::filesystem::path& path, const std::string& tokenizer_path);

// Bundle format for the non-transformer classifiers.
void save_classifier_bundle(const std::filesystem::path& path, const std::string& kind,
                            const std::vector<std::string>& label_names, const json& model);

void add_data_commands(CLI::App& app, Common& common);
void add_model_commands(CLI::App& app, Common& common);
void add_text_commands(CLI::App& app, Common& common);
void add_generation_commands(CLI::App& app, Common& common);

}  // namespace dsfp::cli
