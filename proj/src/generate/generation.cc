#include "dsfp/generate/generation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

void FirstTokenDistribution::validate(uint32_t vocab_size) const {
  if (probs.empty()) throw InvalidArgument("first-token distribution is empty");
  double sum = 0;
  for (const auto& [tok, p] : probs) {
    if (tok >= vocab_size) throw InvalidArgument("first-token id " + std::to_string(tok) + " >= vocab size");
    if (!(p > 0)) throw InvalidArgument("first-token probabilities must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("first-token probabilities do not sum to 1");
}

json FirstTokenDistribution::to_json() const {
  json p = json::array();
  for (const auto& [tok, prob] : probs) p.push_back({tok, prob});
  return json{{"source", source}, {"n_samples", n_samples}, {"skipped_empty", skipped_empty}, {"probs", p}};
}

FirstTokenDistribution FirstTokenDistribution::from_json(const json& j) {
  FirstTokenDistribution d;
  d.source = j.value("source", "");
  d.n_samples = j.value("n_samples", std::size_t{0});
  d.skipped_empty = j.value("skipped_empty", std::size_t{0});
  for (const auto& e : j.at("probs")) d.probs.emplace_back(e.at(0).get<TokenId>(), e.at(1).get<double>());
  std::sort(d.probs.begin(), d.probs.end());
  return d;
}

FirstTokenDistribution first_token_distribution(const Corpus& corpus, const Tokenizer& tokenizer) {
  if (corpus.empty()) throw InvalidArgument("cannot build a first-token distribution from an empty corpus");
  std::vector<std::vector<TokenId>> firsts(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    auto ids = tokenizer.encode(corpus[i].text);
    if (!ids.empty()) firsts[i] = {ids.front()};
  });
  FirstTokenDistribution d;
  d.source = corpus.name();
  std::map<TokenId, std::size_t> counts;
  for (const auto& f : firsts) {
    if (f.empty()) {
      ++d.skipped_empty;
      continue;
    }
    ++counts[f.front()];
    ++d.n_samples;
  }
  if (d.n_samples == 0) throw InvalidArgument("no sequence in the corpus encodes to a token");
  for (const auto& [tok, c] : counts) {
    d.probs.emplace_back(tok, static_cast<double>(c) / static_cast<double>(d.n_samples));
  }
  return d;
}

json GenerateOptions::to_json() const {
  return json{{"n", n}, {"max_len", max_len}, {"temperature", temperature}, {"seed", seed}};
}

namespace {

TokenId sample_first(const FirstTokenDistribution& dist, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  for (const auto& [tok, p] : dist.probs) {
    acc += p;
    if (u < acc) return tok;
  }
  return dist.probs.back().first;
}

TokenId sample_next(const engine::RowVec<float>& logits, double temperature, std::mt19937_64& rng) {
  Eigen::Index best = 0;
  const float mx = logits.maxCoeff(&best);
  if (temperature == 0) return static_cast<TokenId>(best);
  std::vector<double> w(static_cast<std::size_t>(logits.size()));
  double z = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    w[static_cast<std::size_t>(i)] = std::exp((static_cast<double>(logits(i)) - mx) / temperature);
    z += w[static_cast<std::size_t>(i)];
  }
  const double u = std::uniform_real_distribution<double>(0.0, z)(rng);
  double acc = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(best);
}

// Byte-fallback tokens can be sampled in any order, so decoded text may not
// be valid UTF-8. Invalid bytes become U+FFFD.
std::string repair_utf8(const std::string& s, bool& repaired) {
  if (is_valid_utf8(s)) return s;
  repaired = true;
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = 1;
    const auto c = static_cast<unsigned char>(s[i]);
    if (c >= 0xc2 && c <= 0xdf) len = 2;
    else if (c >= 0xe0 && c <= 0xef) len = 3;
    else if (c >= 0xf0 && c <= 0xf4) len = 4;
    if (c < 0x80 || (len > 1 && i + len <= s.size() && is_valid_utf8(std::string_view(s).substr(i, len)))) {
      out.append(s, i, len);
      i += len;
    } else {
      out += "\xef\xbf\xbd";
      ++i;
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<TokenId>> generate_token_sequences(const TransformerModel& lm,
                                                           const FirstTokenDistribution& dist,
                                                           const GenerateOptions& opt, TokenId eot) {
  if (lm.head_mode() != HeadMode::kLm) throw InvalidArgument("generation needs a model with an LM head");
  if (opt.max_len == 0) throw InvalidArgument("max_len must be positive");
  if (opt.max_len > static_cast<std::size_t>(lm.config().context_length)) {
    throw InvalidArgument("max_len " + std::to_string(opt.max_len) + " exceeds the context length " +
                          std::to_string(lm.config().context_length));
  }
  if (!(opt.temperature >= 0) || !std::isfinite(opt.temperature)) {
    throw InvalidArgument("temperature must be a non-negative number");
  }
  dist.validate(static_cast<uint32_t>(lm.config().vocab_size));
  std::vector<std::vector<TokenId>> out(opt.n);
  parallel_for(opt.n, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(opt.seed, i));
    engine::DecodeState<float> state;
    lm.engine().start_decode(state);
    std::vector<TokenId>& seq = out[i];
    TokenId tok = sample_first(dist, rng);
    while (tok != eot) {
      seq.push_back(tok);
      if (seq.size() >= opt.max_len) break;
      tok = sample_next(lm.engine().decode_step(lm.params().data(), state, tok), opt.temperature, rng);
    }
  });
  return out;
}

GenerationResult generate_sequences(const TransformerModel& lm, const Tokenizer& tokenizer,
                                    const FirstTokenDistribution& dist, const GenerateOptions& opt) {
  if (tokenizer.vocab_size() != static_cast<uint32_t>(lm.config().vocab_size)) {
    throw InvalidArgument("tokenizer and model vocabulary sizes differ");
  }
  GenerationResult r;
  r.tokens = generate_token_sequences(lm, dist, opt, tokenizer.eot_id());
  r.corpus.set_name("generated");
  r.corpus.reserve(r.tokens.size());
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    bool fixed = false;
    r.corpus.add(TextSequence{repair_utf8(tokenizer.decode(r.tokens[i]), fixed), 0, "gen-" + std::to_string(i)});
    repaired += fixed;
  }
  r.metadata = json{{"lm_checksum", hex64(lm.full_checksum())},
                    {"first_token_source", dist.source},
                    {"options", opt.to_json()},
                    {"sampling", opt.temperature == 0 ? "greedy" : "full-softmax"},
                    {"utf8_repaired", repaired}};
  return r;
}

}  // namespace dsfp
