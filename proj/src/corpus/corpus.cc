#include "dsfp/corpus/corpus.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/io.h"

namespace dsfp {

LabelRegistry::LabelRegistry(const std::vector<std::string>& names) {
  for (const auto& n : names) add(n);
}

LabelId LabelRegistry::add(const std::string& name) {
  if (name.empty()) throw InvalidArgument("label name must be non-empty");
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it != names_.end()) return static_cast<LabelId>(it - names_.begin());
  if (names_.size() >= 0xffff) throw InvalidArgument("label registry full");
  names_.push_back(name);
  return static_cast<LabelId>(names_.size() - 1);
}

LabelId LabelRegistry::id(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidArgument("unregistered label: " + name);
  return static_cast<LabelId>(it - names_.begin());
}

const std::string& LabelRegistry::name(LabelId id) const {
  if (!contains(id)) throw InvalidArgument("unregistered label id " + std::to_string(id));
  return names_[id];
}

void Corpus::add(TextSequence seq) {
  ++manifest_[seq.label];
  sequences_.push_back(std::move(seq));
}

CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "jsonl" || s == "jsonl-text-field") return CorpusFormat::kJsonlText;
  if (s == "dir" || s == "one-doc-per-file") return CorpusFormat::kOneDocPerFile;
  if (s == "lines" || s == "plain-lines") return CorpusFormat::kPlainLines;
  throw InvalidArgument("unknown corpus format: " + std::string(s));
}

std::string_view to_string(CorpusFormat f) {
  switch (f) {
    case CorpusFormat::kJsonlText: return "jsonl-text-field";
    case CorpusFormat::kOneDocPerFile: return "one-doc-per-file";
    case CorpusFormat::kPlainLines: return "plain-lines";
  }
  return "?";
}

bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    unsigned char c = p[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    uint32_t cp = 0;
    if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((p[i + k] & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (p[i + k] & 0x3f);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += len;
  }
  return true;
}

namespace {

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

// Shared admission rule for every format.
void admit(Corpus& corpus, std::string text, LabelId label, std::string source_id, std::size_t line) {
  if (is_blank(text)) {
    ++corpus.skipped_empty;
    return;
  }
  if (!is_valid_utf8(text)) {
    ++corpus.skipped_malformed;
    corpus.issues.push_back({line, "invalid UTF-8 in " + source_id});
    return;
  }
  corpus.add(TextSequence{std::move(text), label, std::move(source_id)});
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, LabelId label,
                   const LabelRegistry& registry) {
  if (!registry.contains(label)) {
    throw InvalidArgument("label " + std::to_string(label) + " is not registered");
  }
  if (!std::filesystem::exists(path)) throw IoError("no such path: " + path.string());
  Corpus corpus(path.filename().string());
  const std::string stem = path.filename().string();

  switch (format) {
    case CorpusFormat::kJsonlText:
    case CorpusFormat::kPlainLines: {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot open " + path.string());
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string source = stem + ":" + std::to_string(lineno);
        if (format == CorpusFormat::kPlainLines) {
          admit(corpus, std::move(line), label, std::move(source), lineno);
          continue;
        }
        if (is_blank(line)) continue;  // blank separator lines are not records
        json rec;
        try {
          rec = json::parse(line);
        } catch (const json::parse_error& e) {
          ++corpus.skipped_malformed;
          corpus.issues.push_back({lineno, std::string("malformed JSON: ") + e.what()});
          continue;
        }
        if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
          ++corpus.skipped_malformed;
          corpus.issues.push_back({lineno, "record has no string field 'text'"});
          continue;
        }
        if (rec.contains("id") && rec["id"].is_string()) source = rec["id"].get<std::string>();
        admit(corpus, rec["text"].get<std::string>(), label, std::move(source), lineno);
      }
      if (in.bad()) throw IoError("read failed: " + path.string());
      break;
    }
    case CorpusFormat::kOneDocPerFile: {
      if (!std::filesystem::is_directory(path)) {
        throw InvalidArgument(path.string() + " is not a directory");
      }
      std::vector<std::filesystem::path> files;
      for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      // directory_iterator order is unspecified
      std::sort(files.begin(), files.end());
      std::size_t index = 0;
      for (const auto& f : files) {
        ++index;
        admit(corpus, read_file(f), label, f.filename().string(), index);
      }
      break;
    }
  }
  return corpus;
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path,
                       const LabelRegistry* registry) {
  std::vector<json> records;
  records.reserve(corpus.size());
  for (const auto& s : corpus.sequences()) {
    json r{{"text", s.text}, {"label", s.label}, {"source_id", s.source_id}};
    if (registry && registry->contains(s.label)) r["label_name"] = registry->name(s.label);
    records.push_back(std::move(r));
  }
  write_jsonl(path, records);
}

Corpus sample_sequences(const Corpus& corpus, std::size_t n, uint64_t seed) {
  if (n > corpus.size()) {
    throw InvalidArgument("sample size " + std::to_string(n) + " exceeds corpus size " +
                          std::to_string(corpus.size()));
  }
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: the first n slots are a uniform n-subset in random order
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Corpus out(corpus.name());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.add(corpus[idx[i]]);
  return out;
}

Corpus merge_corpora(const std::vector<const Corpus*>& parts, std::string name) {
  Corpus out(std::move(name));
  std::size_t total = 0;
  for (const auto* p : parts) total += p->size();
  out.reserve(total);
  for (const auto* p : parts) {
    for (const auto& s : p->sequences()) out.add(s);
    out.skipped_empty += p->skipped_empty;
    out.skipped_malformed += p->skipped_malformed;
  }
  return out;
}

}  // namespace dsfp
