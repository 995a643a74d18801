#include "dsfp/tokenize/word_tokenizer.h"

#include <algorithm>
#include <map>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/io.h"

namespace dsfp {
namespace {

constexpr std::string_view kFormatTag = "dsfp-word-vocab";
constexpr int kFormatVersion = 1;

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

WordTokenizer::WordTokenizer(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  index_.reserve(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) throw InvalidArgument("empty vocabulary piece at index " + std::to_string(i));
    auto [it, inserted] = index_.emplace(pieces_[i], kFirstPieceId + static_cast<TokenId>(i));
    if (!inserted) throw InvalidArgument("duplicate vocabulary piece: '" + pieces_[i] + "'");
  }
}

std::vector<std::string_view> WordTokenizer::split_pieces(std::string_view text) {
  std::vector<std::string_view> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (is_ws(text[i])) {
      std::size_t j = i;
      while (j < n && is_ws(text[j])) ++j;
      // a single trailing space before a word belongs to that word
      if (j < n && text[j - 1] == ' ') {
        if (j - 1 > i) out.push_back(text.substr(i, j - 1 - i));
        std::size_t k = j;
        while (k < n && !is_ws(text[k])) ++k;
        out.push_back(text.substr(j - 1, k - (j - 1)));
        i = k;
      } else {
        out.push_back(text.substr(i, j - i));
        i = j;
      }
    } else {
      std::size_t k = i;
      while (k < n && !is_ws(text[k])) ++k;
      out.push_back(text.substr(i, k - i));
      i = k;
    }
  }
  return out;
}

WordTokenizer WordTokenizer::build(const std::vector<std::string_view>& texts, std::size_t max_pieces,
                                   std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (auto t : texts) {
    for (auto p : split_pieces(t)) {
      // single bytes are already covered by byte tokens
      if (p.size() > 1) ++counts[std::string(p)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [piece, c] : counts) {
    if (c >= min_count) ranked.emplace_back(piece, c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_pieces) ranked.resize(max_pieces);
  std::vector<std::string> pieces;
  pieces.reserve(ranked.size());
  for (auto& [piece, c] : ranked) pieces.push_back(std::move(piece));
  return WordTokenizer(std::move(pieces));
}

std::optional<TokenId> WordTokenizer::piece_id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> WordTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  ids.reserve(text.size() / 4 + 1);
  std::string key;
  for (auto piece : split_pieces(text)) {
    key.assign(piece);
    auto it = index_.find(key);
    if (it != index_.end()) {
      ids.push_back(it->second);
    } else {
      for (unsigned char c : piece) ids.push_back(c);
    }
  }
  return ids;
}

std::string WordTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 256) {
      out.push_back(static_cast<char>(id));
    } else if (id == kEotId) {
      out += kEotText;
    } else if (id < vocab_size()) {
      out += pieces_[id - kFirstPieceId];
    } else {
      throw InvalidArgument("token id " + std::to_string(id) + " out of range for vocab size " +
                            std::to_string(vocab_size()));
    }
  }
  return out;
}

std::string WordTokenizer::fingerprint() const {
  Fnv1a64 h;
  h.update(kFormatTag);
  for (const auto& p : pieces_) {
    h.update(p);
    h.update(std::string_view("\0", 1));
  }
  return "word-" + hex64(h.digest());
}

void WordTokenizer::save(const std::filesystem::path& path) const {
  json pieces = json::object();
  for (std::size_t i = 0; i < pieces_.size(); ++i) pieces[pieces_[i]] = kFirstPieceId + i;
  json doc{{"format", kFormatTag},
           {"version", kFormatVersion},
           {"eot_id", kEotId},
           {"eot_token", kEotText},
           {"byte_fallback", true},
           {"vocab_size", vocab_size()},
           {"pieces", std::move(pieces)}};
  write_file_atomic(path, doc.dump(1) + "\n");
}

WordTokenizer WordTokenizer::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (doc.value("format", "") != kFormatTag) throw FormatError(path.string() + ": not a word vocabulary");
  if (doc.value("version", 0) != kFormatVersion) {
    throw VersionError(path.string() + ": unsupported vocabulary version");
  }
  if (doc.value("eot_id", 0u) != kEotId) throw FormatError(path.string() + ": eot_id must be 256");
  const auto& table = doc.at("pieces");
  std::map<TokenId, std::string> by_id;
  for (auto it = table.begin(); it != table.end(); ++it) {
    by_id.emplace(it.value().get<TokenId>(), it.key());
  }
  std::vector<std::string> pieces;
  pieces.reserve(by_id.size());
  TokenId expect = kFirstPieceId;
  for (auto& [id, piece] : by_id) {
    if (id != expect) throw FormatError(path.string() + ": piece ids must be dense from 257");
    pieces.push_back(std::move(piece));
    ++expect;
  }
  return WordTokenizer(std::move(pieces));
}

}  // namespace dsfp
