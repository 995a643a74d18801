#include "dsfp/tokenize/bpe_tokenizer.h"

#include <algorithm>
#include <array>
#include <limits>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/io.h"

namespace dsfp {
namespace {

std::string utf8_encode(uint32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    s.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    s.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    s.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
  return s;
}

// Decodes one code point at s[i]; invalid bytes decode as themselves with
// length 1 so that arbitrary byte strings are still segmented.
std::pair<uint32_t, std::size_t> next_cp(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
  };
  if (c < 0x80) return {c, 1};
  if ((c & 0xe0) == 0xc0 && cont(1)) {
    return {((c & 0x1fu) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3fu), 2};
  }
  if ((c & 0xf0) == 0xe0 && cont(1) && cont(2)) {
    return {((c & 0x0fu) << 12) | ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 6) |
                (static_cast<unsigned char>(s[i + 2]) & 0x3fu),
            3};
  }
  if ((c & 0xf8) == 0xf0 && cont(1) && cont(2) && cont(3)) {
    return {((c & 0x07u) << 18) | ((static_cast<unsigned char>(s[i + 1]) & 0x3fu) << 12) |
                ((static_cast<unsigned char>(s[i + 2]) & 0x3fu) << 6) |
                (static_cast<unsigned char>(s[i + 3]) & 0x3fu),
            4};
  }
  return {0xfffd, 1};
}

bool is_space_cp(uint32_t cp) {
  switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\f': case '\v':
    case 0x85: case 0xa0: case 0x1680: case 0x2028: case 0x2029: case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

bool is_number_cp(uint32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 0x660 && cp <= 0x669) || (cp >= 0xff10 && cp <= 0xff19);
}

bool is_letter_cp(uint32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (is_space_cp(cp) || is_number_cp(cp)) return false;
  if (cp < 0xc0) return cp == 0xaa || cp == 0xb5 || cp == 0xba;
  if (cp == 0xd7 || cp == 0xf7) return false;
  if (cp >= 0x2000 && cp <= 0x2bff) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303f) return false;  // CJK punctuation
  if (cp >= 0xfe30 && cp <= 0xfe4f) return false;
  if (cp >= 0xff00 && cp <= 0xff0f) return false;
  if (cp >= 0x1f000 && cp <= 0x1faff) return false;  // emoji
  if (cp == 0xfffd) return false;
  return true;
}

enum class CpClass { kLetter, kNumber, kSpace, kOther };

CpClass classify(uint32_t cp) {
  if (is_space_cp(cp)) return CpClass::kSpace;
  if (is_letter_cp(cp)) return CpClass::kLetter;
  if (is_number_cp(cp)) return CpClass::kNumber;
  return CpClass::kOther;
}

}  // namespace

std::vector<std::string_view> BpeTokenizer::pretokenize(std::string_view text) {
  std::vector<std::string_view> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  auto run_of = [&](std::size_t from, CpClass cls) {
    std::size_t k = from;
    while (k < n) {
      auto [cp, len] = next_cp(text, k);
      if (classify(cp) != cls) break;
      k += len;
    }
    return k;
  };
  while (i < n) {
    // contractions: 's 't 're 've 'm 'll 'd
    if (text[i] == '\'') {
      static constexpr std::array<std::string_view, 7> kContractions = {"'s", "'t", "'re", "'ve",
                                                                       "'m", "'ll", "'d"};
      bool matched = false;
      for (auto c : kContractions) {
        if (text.substr(i, c.size()) == c) {
          out.push_back(text.substr(i, c.size()));
          i += c.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    auto [cp, len] = next_cp(text, i);
    CpClass cls = classify(cp);
    std::size_t start = i;
    std::size_t body = i;
    if (cp == ' ' && i + 1 < n) {
      auto [cp2, len2] = next_cp(text, i + 1);
      CpClass cls2 = classify(cp2);
      if (cls2 != CpClass::kSpace) {
        cls = cls2;
        body = i + 1;
      }
    }
    if (cls == CpClass::kSpace) {
      std::size_t k = run_of(i, CpClass::kSpace);
      if (k < n && k - i > 1) {
        // \s+(?!\S): leave the last whitespace char for the next token
        std::size_t last = i;
        for (std::size_t p = i; p < k;) {
          last = p;
          p += next_cp(text, p).second;
        }
        out.push_back(text.substr(i, last - i));
        i = last;
      } else {
        out.push_back(text.substr(i, k - i));
        i = k;
      }
      continue;
    }
    std::size_t k;
    if (cls == CpClass::kOther) {
      // [^\s\p{L}\p{N}]+
      k = body;
      while (k < n) {
        auto [c3, l3] = next_cp(text, k);
        if (classify(c3) != CpClass::kOther) break;
        k += l3;
      }
    } else {
      k = run_of(body, cls);
    }
    out.push_back(text.substr(start, k - start));
    i = k;
  }
  return out;
}

BpeTokenizer::BpeTokenizer(std::unordered_map<std::string, TokenId> vocab,
                           std::vector<std::pair<std::string, std::string>> merges,
                           std::vector<AddedToken> added, std::string eot_token)
    : vocab_(std::move(vocab)), added_(std::move(added)) {
  // GPT-2 reversible byte -> printable code point mapping
  std::array<bool, 256> direct{};
  for (int b = '!'; b <= '~'; ++b) direct[b] = true;
  for (int b = 0xa1; b <= 0xac; ++b) direct[b] = true;
  for (int b = 0xae; b <= 0xff; ++b) direct[b] = true;
  uint32_t extra = 0;
  for (int b = 0; b < 256; ++b) {
    uint32_t cp = direct[b] ? static_cast<uint32_t>(b) : 256 + extra++;
    byte_to_unicode_[b] = utf8_encode(cp);
    unicode_to_byte_[byte_to_unicode_[b]] = static_cast<unsigned char>(b);
  }

  TokenId max_id = 0;
  for (const auto& [tok, id] : vocab_) max_id = std::max(max_id, id);
  for (const auto& a : added_) max_id = std::max(max_id, a.id);
  vocab_size_ = vocab_.empty() && added_.empty() ? 0 : max_id + 1;
  id_to_token_.assign(vocab_size_, {});
  for (const auto& [tok, id] : vocab_) id_to_token_[id] = tok;

  for (std::size_t r = 0; r < merges.size(); ++r) merge_rank_.emplace(merges[r], r);

  // longest added tokens first so that overlapping specials split greedily
  std::sort(added_.begin(), added_.end(),
            [](const AddedToken& a, const AddedToken& b) { return a.content.size() > b.content.size(); });
  bool found_eot = false;
  for (const auto& a : added_) {
    if (a.content == eot_token) {
      eot_id_ = a.id;
      found_eot = true;
    }
  }
  if (!found_eot) {
    auto it = vocab_.find(eot_token);
    if (it == vocab_.end()) throw FormatError("vocabulary has no end-of-text token '" + eot_token + "'");
    eot_id_ = it->second;
  }

  Fnv1a64 h;
  h.update(std::string_view("bpe"));
  for (TokenId id = 0; id < vocab_size_; ++id) {
    h.update(id_to_token_[id]);
    h.update(std::string_view("\0", 1));
  }
  for (const auto& m : merges) {
    h.update(m.first);
    h.update(std::string_view(" ", 1));
    h.update(m.second);
  }
  fingerprint_ = "bpe-" + hex64(h.digest());
}

BpeTokenizer BpeTokenizer::load_hf_json(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.contains("model") || doc["model"].value("type", "BPE") != "BPE") {
    throw FormatError(path.string() + ": not a BPE tokenizer.json");
  }
  const auto& model = doc["model"];
  std::unordered_map<std::string, TokenId> vocab;
  for (auto it = model.at("vocab").begin(); it != model.at("vocab").end(); ++it) {
    vocab.emplace(it.key(), it.value().get<TokenId>());
  }
  std::vector<std::pair<std::string, std::string>> merges;
  for (const auto& m : model.at("merges")) {
    if (m.is_string()) {
      auto s = m.get<std::string>();
      auto sp = s.find(' ');
      if (sp == std::string::npos) throw FormatError(path.string() + ": malformed merge '" + s + "'");
      merges.emplace_back(s.substr(0, sp), s.substr(sp + 1));
    } else {
      merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
  }
  std::vector<AddedToken> added;
  if (doc.contains("added_tokens")) {
    for (const auto& a : doc["added_tokens"]) {
      added.push_back({a.at("id").get<TokenId>(), a.at("content").get<std::string>()});
    }
  }
  return BpeTokenizer(std::move(vocab), std::move(merges), std::move(added));
}

void BpeTokenizer::encode_chunk(std::string_view chunk, std::vector<TokenId>& out) const {
  std::vector<std::string> symbols;
  symbols.reserve(chunk.size());
  for (unsigned char b : chunk) symbols.push_back(byte_to_unicode_[b]);
  while (symbols.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::size_t best_pos = 0;
    for (std::size_t p = 0; p + 1 < symbols.size(); ++p) {
      auto it = merge_rank_.find({symbols[p], symbols[p + 1]});
      if (it != merge_rank_.end() && it->second < best) {
        best = it->second;
        best_pos = p;
      }
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    const std::string left = symbols[best_pos];
    const std::string right = symbols[best_pos + 1];
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t p = 0; p < symbols.size(); ++p) {
      if (p + 1 < symbols.size() && symbols[p] == left && symbols[p + 1] == right) {
        merged.push_back(left + right);
        ++p;
      } else {
        merged.push_back(std::move(symbols[p]));
      }
    }
    symbols = std::move(merged);
  }
  for (const auto& s : symbols) {
    auto it = vocab_.find(s);
    if (it != vocab_.end()) {
      out.push_back(it->second);
      continue;
    }
    // a merged symbol absent from the vocab falls back to its bytes
    for (std::size_t i = 0; i < s.size();) {
      auto len = next_cp(s, i).second;
      auto v = vocab_.find(s.substr(i, len));
      if (v == vocab_.end()) throw FormatError("byte-level vocabulary is missing a byte symbol");
      out.push_back(v->second);
      i += len;
    }
  }
}

std::vector<TokenId> BpeTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < text.size()) {
    // next special token occurrence
    std::size_t next = text.size();
    const AddedToken* special = nullptr;
    for (const auto& a : added_) {
      if (a.content.empty()) continue;
      auto p = text.find(a.content, i);
      if (p != std::string_view::npos && p < next) {
        next = p;
        special = &a;
      }
    }
    for (auto chunk : pretokenize(text.substr(i, next - i))) encode_chunk(chunk, out);
    if (!special) break;
    out.push_back(special->id);
    i = next + special->content.size();
  }
  return out;
}

std::string BpeTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id >= vocab_size_) {
      throw InvalidArgument("token id " + std::to_string(id) + " out of range for vocab size " +
                            std::to_string(vocab_size_));
    }
    auto added = std::find_if(added_.begin(), added_.end(), [&](const AddedToken& a) { return a.id == id; });
    if (added != added_.end()) {
      out += added->content;
      continue;
    }
    const std::string& tok = id_to_token_[id];
    for (std::size_t i = 0; i < tok.size();) {
      auto len = next_cp(tok, i).second;
      auto it = unicode_to_byte_.find(tok.substr(i, len));
      if (it == unicode_to_byte_.end()) throw FormatError("token " + std::to_string(id) + " is not byte-level");
      out.push_back(static_cast<char>(it->second));
      i += len;
    }
  }
  return out;
}

}  // namespace dsfp
