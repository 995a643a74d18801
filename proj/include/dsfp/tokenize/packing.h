#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsfp/corpus/corpus.h"
#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

inline constexpr std::size_t kDefaultContextLength = 2048;
inline constexpr std::size_t kDefaultRowsPerShard = 8192;

// A block of packed rows from one dataset, stored flat. Each row holds
// context_length + 1 tokens: LM training reads inputs row[0, ctx) and targets
// row[1, ctx]; classification reads inputs row[0, ctx) with `label` at every
// position.
struct RowBlock {
  std::size_t context_length = 0;
  LabelId label = 0;
  std::vector<TokenId> tokens;  // row_count * (context_length + 1)

  std::size_t row_width() const { return context_length + 1; }
  std::size_t row_count() const { return row_width() ? tokens.size() / row_width() : 0; }
  std::span<const TokenId> row(std::size_t i) const {
    return std::span<const TokenId>(tokens).subspan(i * row_width(), row_width());
  }
};

struct PackStats {
  std::size_t total_tokens = 0;    // stream length including EOT separators
  std::size_t dropped_tokens = 0;  // tail that did not fill a row
  std::size_t sequences = 0;
};

// Streaming packer for one dataset: every pushed sequence is followed by EOT
// and the stream is cut into non-overlapping rows of context_length + 1.
class StreamPacker {
 public:
  StreamPacker(std::size_t context_length, LabelId label, TokenId eot_id, uint32_t vocab_size);

  void push(std::span<const TokenId> sequence);
  // Drops the unfinished row and returns the totals.
  PackStats finish();

  RowBlock& rows() { return rows_; }
  const RowBlock& rows() const { return rows_; }

 private:
  RowBlock rows_;
  std::vector<TokenId> pending_;
  TokenId eot_id_;
  uint32_t vocab_size_;
  PackStats stats_;
};

struct PackResult {
  RowBlock rows;
  PackStats stats;
};

PackResult pack_stream(const std::vector<std::vector<TokenId>>& sequences, std::size_t context_length,
                       LabelId label, TokenId eot_id, uint32_t vocab_size);

// Tokenizes every sequence of `corpus` carrying `label` and packs them.
PackResult pack_corpus(const Corpus& corpus, const Tokenizer& tokenizer, std::size_t context_length,
                       LabelId label);

}  // namespace dsfp
