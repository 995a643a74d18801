#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/corpus/corpus.h"

namespace dsfp {

struct LengthDistribution {
  enum class Kind { kFixed, kUniform, kLogNormal };
  Kind kind = Kind::kUniform;
  // kFixed: a = length. kUniform: [a, b]. kLogNormal: mu = a, sigma = b,
  // clamped to [min, max].
  double a = 20;
  double b = 200;
  std::size_t min = 1;
  std::size_t max = 100000;

  std::size_t sample(std::mt19937_64& rng) const;
  json to_json() const;
  static LengthDistribution from_json(const json& j);
};

// Generative description of one synthetic dataset. Documents are sequences of
// sentences; a sentence is a run of words drawn from `weights` over `words`,
// optionally interrupted by fixed multi-word phrases, terminated by '.'.
// Sentences are separated by '\n' with probability newline_rate (otherwise a
// space) and start with a bullet marker with probability bullet_rate.
struct SyntheticDomainSpec {
  std::string name;
  std::vector<std::string> words;
  std::vector<double> weights;
  double newline_rate = 0;
  double bullet_rate = 0;
  std::vector<std::string> bullet_markers{"\xe2\x80\xa2"};  // U+2022
  std::vector<std::vector<std::string>> phrases;
  double phrase_rate = 0;  // per word slot
  LengthDistribution length;  // in words, markers included
  std::size_t min_sentence_words = 4;
  std::size_t max_sentence_words = 12;
  uint64_t seed = 0;

  // Throws InvalidArgument on probabilities outside [0,1], weights not summing
  // to 1 within 1e-9, or malformed vocabularies.
  void validate() const;
  json to_json() const;
  static SyntheticDomainSpec from_json(const json& j);
};

// Sequence i is a pure function of (spec, i); [start_index, start_index + n)
// ranges are disjoint draws, which is how train and test splits are made.
Corpus generate_synthetic_corpus(const SyntheticDomainSpec& spec, std::size_t n, LabelId label,
                                 std::size_t start_index = 0);

// Deterministic pool of distinct lowercase pseudo-words.
std::vector<std::string> pseudo_word_pool(std::size_t n, uint64_t seed);

std::vector<double> zipf_weights(std::size_t n, double exponent);

// k domains with pairwise disjoint vocabularies and identical formatting.
std::vector<SyntheticDomainSpec> disjoint_benchmark(std::size_t k, uint64_t seed, std::size_t words_per_domain = 150);

struct SubtleBiasOptions {
  double vocab_noise = 0.08;  // sigma of the log-normal per-word weight perturbation
  double phrase_rate = 0.005;
  double newline_base = 0.05;  // domain d uses base + step * (d % 3)
  double newline_step = 0.4;
  double bullet_rate = 0.05;
  double mean_words = 120;    // median document length of domain 0
  double length_step = 0.1;   // log-length shift per domain
  double length_sigma = 0.5;
};

// k domains over one shared vocabulary. They differ by small per-word weight
// perturbations (weak unigram signal), by the word order inside shared
// three-word phrases (invisible to order-free features), by newline rate
// (invisible to whitespace-split features) and mildly by length.
std::vector<SyntheticDomainSpec> subtle_bias_benchmark(std::size_t k, uint64_t seed,
                                                       const SubtleBiasOptions& opt = {});

}  // namespace dsfp
