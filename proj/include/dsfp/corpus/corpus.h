#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dsfp {

using LabelId = uint16_t;

// Maps dataset names to small integer labels. Ids are assigned densely in
// registration order, so a registry built from the same name list is identical.
class LabelRegistry {
 public:
  LabelRegistry() = default;
  explicit LabelRegistry(const std::vector<std::string>& names);

  LabelId add(const std::string& name);
  LabelId id(const std::string& name) const;
  const std::string& name(LabelId id) const;
  bool contains(LabelId id) const { return id < names_.size(); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

struct TextSequence {
  std::string text;
  LabelId label = 0;
  std::string source_id;
};

struct CorpusIssue {
  std::size_t line = 0;  // 1-based record position, 0 when not applicable
  std::string message;
};

// Ordered collection of labeled sequences. `manifest` always mirrors the
// label counts of `sequences`; mutate through add() to keep it that way.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::string name) : name_(std::move(name)) {}

  void add(TextSequence seq);
  void reserve(std::size_t n) { sequences_.reserve(n); }

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  const std::vector<TextSequence>& sequences() const { return sequences_; }
  const std::map<LabelId, std::size_t>& manifest() const { return manifest_; }
  std::size_t size() const { return sequences_.size(); }
  bool empty() const { return sequences_.empty(); }
  const TextSequence& operator[](std::size_t i) const { return sequences_[i]; }

  std::size_t skipped_empty = 0;
  std::size_t skipped_malformed = 0;
  std::vector<CorpusIssue> issues;

 private:
  std::string name_;
  std::vector<TextSequence> sequences_;
  std::map<LabelId, std::size_t> manifest_;
};

enum class CorpusFormat { kJsonlText, kOneDocPerFile, kPlainLines };

CorpusFormat parse_corpus_format(std::string_view s);
std::string_view to_string(CorpusFormat f);

// Loads every non-empty document as one sequence labelled `label`. Empty
// documents are skipped and counted; malformed records (bad JSON, missing
// `text`, invalid UTF-8) are skipped with their line number recorded.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, LabelId label,
                   const LabelRegistry& registry);

// Writes sequences as line-delimited {"text", "label", "source_id"} records.
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path,
                       const LabelRegistry* registry = nullptr);

// Uniform sample of n sequences without replacement; pure in (corpus, n, seed).
Corpus sample_sequences(const Corpus& corpus, std::size_t n, uint64_t seed);

// Concatenates corpora in argument order.
Corpus merge_corpora(const std::vector<const Corpus*>& parts, std::string name);

bool is_valid_utf8(std::string_view s);

}  // namespace dsfp
