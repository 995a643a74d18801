#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

// Whitespace-piece tokenizer with byte fallback, for desk-scale runs that
// should not depend on an external vocabulary.
//
// Text is cut into pieces: a word piece is a maximal run of non-whitespace
// bytes, carrying the single space that precedes it (" word"); remaining
// whitespace forms its own pieces ("\n\n"). Pieces found in the vocabulary map
// to one id; anything else is emitted as raw byte tokens, so every byte string
// round-trips exactly.
//
// Id layout: [0, 256) byte tokens, 256 = <|endoftext|>, then vocabulary pieces.
class WordTokenizer final : public Tokenizer {
 public:
  static constexpr TokenId kEotId = 256;
  static constexpr TokenId kFirstPieceId = 257;
  static constexpr std::string_view kEotText = "<|endoftext|>";

  // Pieces are assigned consecutive ids from kFirstPieceId in the given order.
  explicit WordTokenizer(std::vector<std::string> pieces);

  // Keeps the `max_pieces` most frequent pieces seen at least `min_count`
  // times; ties are broken lexicographically.
  static WordTokenizer build(const std::vector<std::string_view>& texts, std::size_t max_pieces,
                             std::size_t min_count = 1);

  static WordTokenizer load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  uint32_t vocab_size() const override { return kFirstPieceId + static_cast<uint32_t>(pieces_.size()); }
  TokenId eot_id() const override { return kEotId; }
  std::string kind() const override { return "word"; }
  std::string fingerprint() const override;

  const std::vector<std::string>& pieces() const { return pieces_; }
  std::optional<TokenId> piece_id(std::string_view piece) const;

  // The piece segmentation used by encode(); exposed for featurizers.
  static std::vector<std::string_view> split_pieces(std::string_view text);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace dsfp
