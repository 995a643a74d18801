#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsfp {

using TokenId = uint32_t;

// Common interface of every tokenizer. Implementations are immutable after
// construction and safe to share across threads.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual uint32_t vocab_size() const = 0;
  virtual TokenId eot_id() const = 0;
  // Short type tag ("word", "bpe") written into run metadata.
  virtual std::string kind() const = 0;
  // Stable digest of the vocabulary; two tokenizers with the same fingerprint
  // encode identically.
  virtual std::string fingerprint() const = 0;
};

// Loads a vocabulary file. Detects the native word-vocab table and the
// HuggingFace `tokenizer.json` byte-level BPE layout (GPT-NeoX et al.).
std::unique_ptr<Tokenizer> load_tokenizer(const std::filesystem::path& path);

// Encodes and truncates to the model's context. No EOT is appended and nothing
// is concatenated: this is the test-time view of a single sequence.
std::vector<TokenId> prepare_test_sequence(const Tokenizer& tokenizer, std::string_view text,
                                           std::size_t context_length);

}  // namespace dsfp
