#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

// Byte-level BPE encoder for HuggingFace `tokenizer.json` vocabularies such as
// GPT-NeoX's 50,432-token table. Applies existing merges only; there is no BPE
// training here.
//
// Pre-tokenization follows the GPT-2 split pattern. Unicode letter/number
// classes are exact for ASCII and approximated by code-point ranges elsewhere.
class BpeTokenizer final : public Tokenizer {
 public:
  struct AddedToken {
    TokenId id;
    std::string content;
  };

  BpeTokenizer(std::unordered_map<std::string, TokenId> vocab,
               std::vector<std::pair<std::string, std::string>> merges, std::vector<AddedToken> added,
               std::string eot_token = "<|endoftext|>");

  static BpeTokenizer load_hf_json(const std::filesystem::path& path);

  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  uint32_t vocab_size() const override { return vocab_size_; }
  TokenId eot_id() const override { return eot_id_; }
  std::string kind() const override { return "bpe"; }
  std::string fingerprint() const override { return fingerprint_; }

  // GPT-2 style pre-tokenization into byte chunks.
  static std::vector<std::string_view> pretokenize(std::string_view text);

 private:
  void encode_chunk(std::string_view chunk, std::vector<TokenId>& out) const;

  std::unordered_map<std::string, TokenId> vocab_;
  std::vector<std::string> id_to_token_;
  std::map<std::pair<std::string, std::string>, std::size_t> merge_rank_;
  std::vector<AddedToken> added_;
  std::array<std::string, 256> byte_to_unicode_;
  std::unordered_map<std::string, unsigned char> unicode_to_byte_;
  uint32_t vocab_size_ = 0;
  TokenId eot_id_ = 0;
  std::string fingerprint_;
};

}  // namespace dsfp
