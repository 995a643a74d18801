#include "dsfp/corpus/length_stats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

json LengthStats::to_json() const {
  return json{{"mean", mean},     {"std_dev", std_dev}, {"mode", mode},   {"median", median},
              {"min", min},       {"max", max},         {"range", range}, {"n_samples", n_samples}};
}

std::vector<std::size_t> token_lengths(const Corpus& corpus, const Tokenizer& tokenizer) {
  std::vector<std::size_t> lengths(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { lengths[i] = tokenizer.encode(corpus[i].text).size(); });
  return lengths;
}

LengthStats length_stats_from(std::span<const std::size_t> lengths) {
  if (lengths.empty()) throw InvalidArgument("length statistics need a non-empty sample");
  std::vector<std::size_t> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  LengthStats s;
  s.n_samples = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.range = s.max - s.min;
  const std::size_t n = sorted.size();
  s.median = n % 2 ? static_cast<double>(sorted[n / 2])
                   : 0.5 * (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2]));

  // two-pass mean/variance
  long double sum = 0;
  for (auto v : sorted) sum += v;
  const long double mean = sum / n;
  long double ss = 0;
  for (auto v : sorted) ss += (v - mean) * (v - mean);
  s.mean = static_cast<double>(mean);
  s.std_dev = static_cast<double>(std::sqrt(ss / n));

  // sorted ascending, so the first maximal run is the smallest modal length
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      s.mode = sorted[i];
    }
    i = j;
  }
  return s;
}

LengthStats compute_length_stats(const Corpus& corpus, const Tokenizer& tokenizer) {
  if (corpus.empty()) throw InvalidArgument("cannot compute length statistics of an empty corpus");
  auto lengths = token_lengths(corpus, tokenizer);
  return length_stats_from(lengths);
}

json LengthHistogram::to_json() const {
  json b = json::array();
  for (auto [k, c] : buckets) b.push_back({{"lo", k * bucket_width}, {"hi", (k + 1) * bucket_width}, {"count", c}});
  return json{{"bucket_width", bucket_width}, {"cap", cap}, {"buckets", std::move(b)},
              {"omitted", omitted},           {"total", total}};
}

LengthHistogram histogram_from(std::span<const std::size_t> lengths, std::size_t bucket_width, std::size_t cap) {
  if (bucket_width == 0) throw InvalidArgument("bucket_width must be positive");
  LengthHistogram h;
  h.bucket_width = bucket_width;
  h.cap = cap;
  h.total = lengths.size();
  for (auto len : lengths) {
    if (len > cap) {
      ++h.omitted;
      continue;
    }
    ++h.buckets[len / bucket_width];
  }
  return h;
}

LengthHistogram emit_histogram(const Corpus& corpus, const Tokenizer& tokenizer, std::size_t bucket_width,
                               std::size_t cap) {
  if (bucket_width == 0) throw InvalidArgument("bucket_width must be positive");
  auto lengths = token_lengths(corpus, tokenizer);
  return histogram_from(lengths, bucket_width, cap);
}

std::string format_length_table(const std::vector<std::pair<std::string, LengthStats>>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %10s %14s %8s %10s %10s\n", "Dataset", "Mean", "St. Deviation", "Mode",
                "Median", "Range");
  out += line;
  for (const auto& [name, s] : rows) {
    std::snprintf(line, sizeof line, "%-16s %10.0f %14.0f %8zu %10.0f %10zu\n", name.c_str(), s.mean, s.std_dev,
                  s.mode, s.median, s.range);
    out += line;
  }
  return out;
}

std::string format_histogram(const LengthHistogram& h) {
  std::string out;
  std::size_t peak = 1;
  for (auto [k, c] : h.buckets) peak = std::max(peak, c);
  char line[256];
  for (auto [k, c] : h.buckets) {
    const int bar = static_cast<int>(std::lround(50.0 * static_cast<double>(c) / static_cast<double>(peak)));
    std::snprintf(line, sizeof line, "[%6zu, %6zu) %8zu %s\n", k * h.bucket_width, (k + 1) * h.bucket_width, c,
                  std::string(static_cast<std::size_t>(bar), '#').c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "omitted (> %zu): %zu of %zu\n", h.cap, h.omitted, h.total);
  out += line;
  return out;
}

}  // namespace dsfp
