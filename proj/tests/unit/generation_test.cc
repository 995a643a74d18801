#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/parallel.h"
#include "dsfp/generate/generation.h"
#include "dsfp/generate/mixture.h"
#include "dsfp/models/transformer.h"
#include "dsfp/tokenize/word_tokenizer.h"
#include "test_support.h"

namespace dsfp {
namespace {

class LookupClassifier : public Classifier {
 public:
  explicit LookupClassifier(std::size_t k) : k_(k) {}
  std::size_t n_classes() const override { return k_; }
  // "cN ..." predicts class N
  LabelId predict(std::string_view text) const override { return static_cast<LabelId>(text[1] - '0'); }
  std::string kind() const override { return "lookup"; }

 private:
  std::size_t k_;
};

TEST(FirstTokens, EmpiricalFrequencies) {
  WordTokenizer tok({"a", "b", " x"});
  auto c = testing::make_corpus({{"a x", 0}, {"a", 0}, {"b x x", 1}});
  auto d = first_token_distribution(c, tok);
  ASSERT_EQ(d.probs.size(), 2u);
  EXPECT_EQ(d.probs[0].first, 257u);
  EXPECT_NEAR(d.probs[0].second, 2.0 / 3, 1e-12);
  EXPECT_NEAR(d.probs[1].second, 1.0 / 3, 1e-12);
  EXPECT_EQ(d.n_samples, 3u);
  EXPECT_NO_THROW(d.validate(tok.vocab_size()));
  EXPECT_THROW(d.validate(258), InvalidArgument);
  EXPECT_EQ(FirstTokenDistribution::from_json(d.to_json()).to_json(), d.to_json());
}

TEST(FirstTokens, TallyOracle) {
  std::vector<std::string> pieces;
  for (int i = 0; i < 20; ++i) pieces.push_back("w" + std::to_string(i));
  WordTokenizer tok(pieces);
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::string, LabelId>> docs;
  std::map<TokenId, double> tally;
  for (int i = 0; i < 10000; ++i) {
    const int w = static_cast<int>(rng() % 20);
    docs.emplace_back("w" + std::to_string(w) + " tail", 0);
    tally[static_cast<TokenId>(257 + w)] += 1;
  }
  auto d = first_token_distribution(testing::make_corpus(docs), tok);
  ASSERT_EQ(d.probs.size(), tally.size());
  for (const auto& [id, p] : d.probs) EXPECT_NEAR(p, tally[id] / 10000.0, 1e-12);
}

TransformerModel tiny_lm() { return build_transformer(testing::small_config(3, 40, 16), HeadMode::kLm); }

FirstTokenDistribution three_way() {
  FirstTokenDistribution d;
  d.probs = {{3, 0.5}, {7, 0.3}, {9, 0.2}};
  d.source = "test";
  return d;
}

TEST(Generate, FirstTokenSamplingMatchesDistribution) {
  GenerateOptions opt;
  opt.n = 10000;
  opt.max_len = 1;
  opt.seed = 5;
  auto seqs = generate_token_sequences(tiny_lm(), three_way(), opt, 39);
  std::map<TokenId, double> counts;
  for (const auto& s : seqs) {
    ASSERT_EQ(s.size(), 1u);
    counts[s[0]] += 1;
  }
  for (const auto& [id, p] : three_way().probs) {
    const double sigma = std::sqrt(p * (1 - p) / 10000.0);
    EXPECT_NEAR(counts[id] / 10000.0, p, 3 * sigma) << id;
  }
}

TEST(Generate, GreedyFollowsArgmax) {
  auto lm = tiny_lm();
  GenerateOptions opt;
  opt.n = 4;
  opt.max_len = 10;
  opt.temperature = 0;
  const TokenId eot = 39;
  auto seqs = generate_token_sequences(lm, three_way(), opt, eot);
  for (const auto& s : seqs) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      const auto logits = lm.forward(std::span<const TokenId>(s).first(i));
      const auto last = logits.row(logits.rows() - 1);
      EXPECT_EQ(argmax(last.data(), last.data() + last.size()), s[i]);
    }
    EXPECT_LE(s.size(), 10u);
    for (TokenId t : s) EXPECT_NE(t, eot);
  }
  EXPECT_EQ(generate_token_sequences(lm, three_way(), opt, eot), seqs);
}

TEST(Generate, DeterministicAcrossThreads) {
  auto lm = tiny_lm();
  GenerateOptions opt;
  opt.n = 12;
  opt.max_len = 12;
  opt.seed = 9;
  const auto saved = max_threads();
  set_max_threads(1);
  auto a = generate_token_sequences(lm, three_way(), opt, 39);
  set_max_threads(4);
  auto b = generate_token_sequences(lm, three_way(), opt, 39);
  set_max_threads(saved);
  EXPECT_EQ(a, b);
  opt.seed = 10;
  EXPECT_NE(generate_token_sequences(lm, three_way(), opt, 39), a);
}

TEST(Generate, RejectsBadOptions) {
  auto lm = tiny_lm();
  GenerateOptions opt;
  opt.max_len = 17;  // context is 16
  EXPECT_THROW(generate_token_sequences(lm, three_way(), opt, 39), InvalidArgument);
  opt.max_len = 0;
  EXPECT_THROW(generate_token_sequences(lm, three_way(), opt, 39), InvalidArgument);
  opt.max_len = 4;
  opt.temperature = -1;
  EXPECT_THROW(generate_token_sequences(lm, three_way(), opt, 39), InvalidArgument);
  auto cls = build_transformer(testing::small_config(3, 40, 16), HeadMode::kClass);
  opt.temperature = 1;
  EXPECT_THROW(generate_token_sequences(cls, three_way(), opt, 39), InvalidArgument);
}

TEST(Generate, TextAndMetadata) {
  WordTokenizer tok({"a", " b"});
  auto cfg = testing::small_config(3, static_cast<int>(tok.vocab_size()), 16);
  auto lm = build_transformer(cfg, HeadMode::kLm);
  FirstTokenDistribution d;
  d.probs = {{257, 1.0}};
  GenerateOptions opt;
  opt.n = 5;
  opt.max_len = 8;
  auto r = generate_sequences(lm, tok, d, opt);
  ASSERT_EQ(r.corpus.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.tokens[i][0], 257u);
    EXPECT_TRUE(is_valid_utf8(r.corpus[i].text));
  }
  EXPECT_EQ(r.metadata["lm_checksum"], hex64(lm.full_checksum()));
}

TEST(Mixture, ProportionsAndErrors) {
  auto m = mixture_from_predictions({0, 0, 1, 1}, 2);
  EXPECT_EQ(m.proportion, (std::vector<double>{0.5, 0.5}));
  EXPECT_NEAR(m.std_error[0], std::sqrt(0.25 / 4), 1e-12);
  auto c = testing::make_corpus({{"c0", 0}, {"c2", 0}, {"c2", 0}, {"c1 x", 0}});
  auto e = estimate_mixture(LookupClassifier(3), c, {"x", "y", "z"});
  EXPECT_EQ(e.counts, (std::vector<std::size_t>{1, 1, 2}));
  EXPECT_DOUBLE_EQ(e.proportion[2], 0.5);
  const auto table = e.format_table(std::vector<double>{0.25, 0.25, 0.5});
  EXPECT_NE(table.find(std::string(25, '#')), std::string::npos);
  EXPECT_THROW(estimate_mixture(LookupClassifier(3), Corpus{}), InvalidArgument);
}

TEST(Mixture, ProportionsSumToOne) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    std::vector<LabelId> p(rng() % 200 + 1);
    for (auto& x : p) x = static_cast<LabelId>(rng() % 4);
    auto m = mixture_from_predictions(p, 4);
    double s = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < 4; ++k) s += m.proportion[k], n += m.counts[k];
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_EQ(n, p.size());
  }
}

TEST(External, RegistryMustMatch) {
  auto c = testing::make_corpus({{"c0", 0}, {"c1", 1}, {"c1", 0}});
  auto r = classify_external(LookupClassifier(2), c, LabelRegistry({"a", "b"}));
  EXPECT_EQ(r.confusion, (std::vector<std::vector<std::size_t>>{{1, 1}, {0, 1}}));
  EXPECT_THROW(classify_external(LookupClassifier(3), c, LabelRegistry({"a", "b"})), InvalidArgument);
  auto bad = testing::make_corpus({{"c0", 4}});
  EXPECT_THROW(classify_external(LookupClassifier(2), bad, LabelRegistry({"a", "b"})), InvalidArgument);
}

}  // namespace
}  // namespace dsfp
