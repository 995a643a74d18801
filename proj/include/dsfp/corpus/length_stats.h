#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/corpus/corpus.h"
#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

// Sequence-length summary in tokens. std_dev is the population form (divide
// by n); mode ties resolve to the smaller length; median of an even sample is
// the mean of the two middle values.
struct LengthStats {
  double mean = 0;
  double std_dev = 0;
  std::size_t mode = 0;
  double median = 0;
  std::size_t min = 0;
  std::size_t max = 0;
  std::size_t range = 0;
  std::size_t n_samples = 0;

  json to_json() const;
};

std::vector<std::size_t> token_lengths(const Corpus& corpus, const Tokenizer& tokenizer);

LengthStats length_stats_from(std::span<const std::size_t> lengths);
LengthStats compute_length_stats(const Corpus& corpus, const Tokenizer& tokenizer);

// Counts per [k*w, (k+1)*w) bucket. Lengths above `cap` are not bucketed and
// are reported in `omitted`.
struct LengthHistogram {
  std::size_t bucket_width = 0;
  std::size_t cap = 0;
  std::map<std::size_t, std::size_t> buckets;  // bucket index -> count
  std::size_t omitted = 0;
  std::size_t total = 0;

  json to_json() const;
};

LengthHistogram histogram_from(std::span<const std::size_t> lengths, std::size_t bucket_width, std::size_t cap);
LengthHistogram emit_histogram(const Corpus& corpus, const Tokenizer& tokenizer, std::size_t bucket_width,
                               std::size_t cap);

// Plain-text table with columns Dataset | Mean | St. Deviation | Mode | Median | Range.
std::string format_length_table(const std::vector<std::pair<std::string, LengthStats>>& rows);
std::string format_histogram(const LengthHistogram& h);

}  // namespace dsfp
