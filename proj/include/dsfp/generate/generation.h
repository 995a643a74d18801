#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/corpus/corpus.h"
#include "dsfp/models/transformer.h"
#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

// Empirical distribution of the first token of each sequence.
struct FirstTokenDistribution {
  std::vector<std::pair<TokenId, double>> probs;  // ascending token id, p > 0
  std::string source;
  std::size_t n_samples = 0;
  std::size_t skipped_empty = 0;  // sequences that encoded to no tokens

  // Throws InvalidArgument unless probabilities are positive, sum to 1
  // within 1e-9, and every token is below vocab_size.
  void validate(uint32_t vocab_size) const;
  json to_json() const;
  static FirstTokenDistribution from_json(const json& j);
};

// Throws InvalidArgument when no sequence yields a token.
FirstTokenDistribution first_token_distribution(const Corpus& corpus, const Tokenizer& tokenizer);

struct GenerateOptions {
  std::size_t n = 2048;
  std::size_t max_len = 128;  // total tokens, first token included
  double temperature = 1.0;   // 0 is greedy
  uint64_t seed = 0;
  json to_json() const;
};

// Sequence i draws its first token from `dist` and then samples the LM until
// `eot` (not kept) or max_len tokens, using a generator seeded from
// derive_seed(seed, i). Results do not depend on the thread count.
std::vector<std::vector<TokenId>> generate_token_sequences(const TransformerModel& lm,
                                                           const FirstTokenDistribution& dist,
                                                           const GenerateOptions& opt, TokenId eot);

struct GenerationResult {
  Corpus corpus;  // unlabeled: every label is 0
  std::vector<std::vector<TokenId>> tokens;
  json metadata = json::object();
};

// Decodes generate_token_sequences into text. metadata records the LM
// checksum, the distribution source, seed and temperature.
GenerationResult generate_sequences(const TransformerModel& lm, const Tokenizer& tokenizer,
                                    const FirstTokenDistribution& dist, const GenerateOptions& opt);

}  // namespace dsfp
