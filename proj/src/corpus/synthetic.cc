#include "dsfp/corpus/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

std::size_t LengthDistribution::sample(std::mt19937_64& rng) const {
  double v = 0;
  switch (kind) {
    case Kind::kFixed:
      v = a;
      break;
    case Kind::kUniform: {
      std::uniform_int_distribution<std::size_t> d(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      v = static_cast<double>(d(rng));
      break;
    }
    case Kind::kLogNormal: {
      std::lognormal_distribution<double> d(a, b);
      v = std::round(d(rng));
      break;
    }
  }
  return std::clamp(static_cast<std::size_t>(std::max(0.0, v)), min, max);
}

namespace {

std::string_view kind_name(LengthDistribution::Kind k) {
  switch (k) {
    case LengthDistribution::Kind::kFixed: return "fixed";
    case LengthDistribution::Kind::kUniform: return "uniform";
    case LengthDistribution::Kind::kLogNormal: return "lognormal";
  }
  return "?";
}

}  // namespace

json LengthDistribution::to_json() const {
  return json{{"kind", kind_name(kind)}, {"a", a}, {"b", b}, {"min", min}, {"max", max}};
}

LengthDistribution LengthDistribution::from_json(const json& j) {
  LengthDistribution d;
  const auto k = j.value("kind", std::string("uniform"));
  if (k == "fixed") {
    d.kind = Kind::kFixed;
  } else if (k == "uniform") {
    d.kind = Kind::kUniform;
  } else if (k == "lognormal") {
    d.kind = Kind::kLogNormal;
  } else {
    throw InvalidArgument("unknown length distribution kind: " + k);
  }
  d.a = j.value("a", d.a);
  d.b = j.value("b", d.b);
  d.min = j.value("min", d.min);
  d.max = j.value("max", d.max);
  return d;
}

void SyntheticDomainSpec::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
  };
  prob(newline_rate, "newline_rate");
  prob(bullet_rate, "bullet_rate");
  prob(phrase_rate, "phrase_rate");
  if (words.empty()) throw InvalidArgument("synthetic domain '" + name + "' has no words");
  if (words.size() != weights.size()) throw InvalidArgument("words and weights differ in length");
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("vocabulary weight outside [0, 1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("vocabulary weights sum to " + std::to_string(sum));
  for (const auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\n\r") != std::string::npos) {
      throw InvalidArgument("vocabulary words must be non-empty and whitespace-free");
    }
  }
  if (bullet_rate > 0 && bullet_markers.empty()) throw InvalidArgument("bullet_rate > 0 needs markers");
  if (phrase_rate > 0 && phrases.empty()) throw InvalidArgument("phrase_rate > 0 needs phrases");
  for (const auto& p : phrases) {
    if (p.empty()) throw InvalidArgument("empty phrase");
  }
  if (min_sentence_words == 0 || min_sentence_words > max_sentence_words) {
    throw InvalidArgument("invalid sentence length bounds");
  }
  if (length.kind == LengthDistribution::Kind::kUniform && length.a > length.b) {
    throw InvalidArgument("uniform length distribution with a > b");
  }
}

json SyntheticDomainSpec::to_json() const {
  return json{{"name", name},
              {"words", words},
              {"weights", weights},
              {"newline_rate", newline_rate},
              {"bullet_rate", bullet_rate},
              {"bullet_markers", bullet_markers},
              {"phrases", phrases},
              {"phrase_rate", phrase_rate},
              {"length", length.to_json()},
              {"min_sentence_words", min_sentence_words},
              {"max_sentence_words", max_sentence_words},
              {"seed", seed}};
}

SyntheticDomainSpec SyntheticDomainSpec::from_json(const json& j) {
  SyntheticDomainSpec s;
  s.name = j.value("name", std::string());
  s.words = j.at("words").get<std::vector<std::string>>();
  s.weights = j.at("weights").get<std::vector<double>>();
  s.newline_rate = j.value("newline_rate", 0.0);
  s.bullet_rate = j.value("bullet_rate", 0.0);
  if (j.contains("bullet_markers")) s.bullet_markers = j["bullet_markers"].get<std::vector<std::string>>();
  if (j.contains("phrases")) s.phrases = j["phrases"].get<std::vector<std::vector<std::string>>>();
  s.phrase_rate = j.value("phrase_rate", 0.0);
  if (j.contains("length")) s.length = LengthDistribution::from_json(j["length"]);
  s.min_sentence_words = j.value("min_sentence_words", s.min_sentence_words);
  s.max_sentence_words = j.value("max_sentence_words", s.max_sentence_words);
  s.seed = j.value("seed", uint64_t{0});
  s.validate();
  return s;
}

namespace {

std::string generate_document(const SyntheticDomainSpec& spec, std::discrete_distribution<std::size_t>& unigram,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> sentence_len(spec.min_sentence_words, spec.max_sentence_words);
  const std::size_t target = std::max<std::size_t>(1, spec.length.sample(rng));
  std::string doc;
  std::size_t emitted = 0;
  bool first_sentence = true;
  while (emitted < target) {
    if (!first_sentence) doc += coin(rng) < spec.newline_rate ? "\n" : " ";
    first_sentence = false;
    bool sentence_start = true;
    auto put = [&](const std::string& w) {
      if (!sentence_start) doc += ' ';
      doc += w;
      sentence_start = false;
      ++emitted;
    };
    if (spec.bullet_rate > 0 && coin(rng) < spec.bullet_rate) {
      std::uniform_int_distribution<std::size_t> m(0, spec.bullet_markers.size() - 1);
      put(spec.bullet_markers[m(rng)]);
    }
    const std::size_t len = std::min(sentence_len(rng), target - std::min(target, emitted));
    std::size_t words_in_sentence = 0;
    while (words_in_sentence < std::max<std::size_t>(1, len)) {
      if (spec.phrase_rate > 0 && coin(rng) < spec.phrase_rate) {
        std::uniform_int_distribution<std::size_t> p(0, spec.phrases.size() - 1);
        const auto& phrase = spec.phrases[p(rng)];
        for (const auto& w : phrase) put(w);
        words_in_sentence += phrase.size();
      } else {
        put(spec.words[unigram(rng)]);
        ++words_in_sentence;
      }
    }
    doc += '.';
  }
  return doc;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticDomainSpec& spec, std::size_t n, LabelId label,
                                 std::size_t start_index) {
  spec.validate();
  std::vector<std::string> docs(n);
  parallel_for(n, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(spec.seed, start_index + i));
    std::discrete_distribution<std::size_t> unigram(spec.weights.begin(), spec.weights.end());
    docs[i] = generate_document(spec, unigram, rng);
  });
  Corpus corpus(spec.name.empty() ? "synthetic" : spec.name);
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.add(TextSequence{std::move(docs[i]), label, corpus.name() + "#" + std::to_string(start_index + i)});
  }
  return corpus;
}

std::vector<std::string> pseudo_word_pool(std::size_t n, uint64_t seed) {
  static constexpr std::array<std::string_view, 16> kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n",
                                                               "p", "r", "s", "t", "v", "z", "ch", "tr"};
  static constexpr std::array<std::string_view, 6> kVowels = {"a", "e", "i", "o", "u", "ai"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> onset(0, kOnsets.size() - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, kVowels.size() - 1);
  std::uniform_int_distribution<int> syllables(2, 4);
  std::set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(n);
  while (out.size() < n) {
    std::string w;
    const int s = syllables(rng);
    for (int i = 0; i < s; ++i) {
      w += kOnsets[onset(rng)];
      w += kVowels[vowel(rng)];
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= sum;
  return w;
}

std::vector<SyntheticDomainSpec> disjoint_benchmark(std::size_t k, uint64_t seed, std::size_t words_per_domain) {
  if (k < 2) throw InvalidArgument("a benchmark needs at least two domains");
  auto pool = pseudo_word_pool(k * words_per_domain, seed);
  std::vector<SyntheticDomainSpec> out;
  for (std::size_t d = 0; d < k; ++d) {
    SyntheticDomainSpec s;
    s.name = "disjoint" + std::to_string(d);
    s.words.assign(pool.begin() + static_cast<std::ptrdiff_t>(d * words_per_domain),
                   pool.begin() + static_cast<std::ptrdiff_t>((d + 1) * words_per_domain));
    s.weights = zipf_weights(words_per_domain, 1.0);
    s.newline_rate = 0.1;
    s.bullet_rate = 0.0;
    s.length = {LengthDistribution::Kind::kLogNormal, std::log(60.0), 0.6, 8, 400};
    s.seed = derive_seed(seed, 1000 + d);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SyntheticDomainSpec> subtle_bias_benchmark(std::size_t k, uint64_t seed, const SubtleBiasOptions& opt) {
  if (k < 2) throw InvalidArgument("a benchmark needs at least two domains");
  if (opt.newline_base < 0 || opt.newline_base + 2 * opt.newline_step > 1) {
    throw InvalidArgument("newline rates must stay inside [0, 1]");
  }
  constexpr std::size_t kVocab = 240;
  constexpr std::size_t kPhrases = 24;
  auto pool = pseudo_word_pool(kVocab + 3 * kPhrases, seed);
  const std::vector<std::string> shared(pool.begin(), pool.begin() + kVocab);
  const auto base = zipf_weights(kVocab, 1.0);

  static constexpr std::array<std::array<int, 3>, 6> kPerms = {
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}}};
  std::mt19937_64 perm_rng(derive_seed(seed, 77));

  std::vector<SyntheticDomainSpec> out;
  for (std::size_t d = 0; d < k; ++d) {
    SyntheticDomainSpec s;
    s.name = "subtle" + std::to_string(d);
    s.words = shared;
    std::mt19937_64 rng(derive_seed(seed, 2000 + d));
    std::normal_distribution<double> noise(0.0, opt.vocab_noise);
    s.weights.resize(kVocab);
    for (std::size_t i = 0; i < kVocab; ++i) s.weights[i] = base[i] * std::exp(noise(rng));
    const double sum = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
    for (auto& w : s.weights) w /= sum;
    for (std::size_t p = 0; p < kPhrases; ++p) {
      const std::size_t perm = k <= kPerms.size() ? (p + d) % kPerms.size()
                                                  : std::uniform_int_distribution<std::size_t>(0, 5)(perm_rng);
      std::vector<std::string> phrase;
      for (int slot : kPerms[perm]) phrase.push_back(pool[kVocab + 3 * p + static_cast<std::size_t>(slot)]);
      s.phrases.push_back(std::move(phrase));
    }
    s.phrase_rate = opt.phrase_rate;
    s.newline_rate = opt.newline_base + opt.newline_step * static_cast<double>(d % 3);
    s.bullet_rate = opt.bullet_rate;
    s.bullet_markers = {"\xe2\x80\xa2", "-", "*"};
    s.length = {LengthDistribution::Kind::kLogNormal, std::log(opt.mean_words) + opt.length_step * static_cast<double>(d),
                opt.length_sigma, 20, 600};
    s.seed = derive_seed(seed, 3000 + d);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dsfp
