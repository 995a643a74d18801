#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/corpus/synthetic.h"
#include "dsfp/models/bow.h"
#include "dsfp/models/shallow.h"
#include "test_support.h"

namespace dsfp {
namespace {

using testing::make_corpus;

VocabIndex index_of(const std::vector<std::string>& words) {
  VocabIndex v;
  for (std::size_t i = 0; i < words.size(); ++i) v.emplace(words[i], static_cast<uint32_t>(i));
  return v;
}

TEST(Bow, FeaturizeCounts) {
  const auto v = index_of({"I", "like", "apples", "but", "not", "bananas"});
  const auto x = bow_featurize("I like apples but not bananas", v);
  EXPECT_EQ(x, (SparseCounts{{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}}));
  EXPECT_EQ(bow_featurize("apples apples pears\nI", v), (SparseCounts{{0, 1}, {2, 2}}));
  EXPECT_TRUE(bow_featurize("", v).empty());
}

TEST(Bow, FeaturesIgnoreWordOrder) {
  const auto v = index_of({"I", "like", "apples", "but", "not", "bananas"});
  std::vector<std::string> w{"I", "like", "apples", "but", "not", "bananas"};
  const auto ref = bow_featurize("I like apples but not bananas", v);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(w.begin(), w.end(), rng);
    std::string t;
    for (const auto& s : w) t += s + " ";
    EXPECT_EQ(bow_featurize(t, v), ref) << t;
  }
}

TEST(Bow, VocabIndexOrdering) {
  auto c = make_corpus({{"b a a c", 0}, {"c a", 1}});
  auto v = build_vocab_index(c);
  EXPECT_EQ(v.at("a"), 0u);
  EXPECT_EQ(v.at("c"), 1u);  // ties broken lexicographically
  EXPECT_EQ(v.at("b"), 2u);
  EXPECT_EQ(build_vocab_index(c, 2).size(), 2u);
  EXPECT_EQ(build_vocab_index(c, 1, 1).size(), 1u);
}

TEST(Bow, HandSetWeightsPredictArgmax) {
  BowModel m(index_of({"x", "y"}), 3);
  // class 0 likes x, class 1 likes y, class 2 has a bias
  m.weights() = {1, 0, 0, 1, 0, 0};
  m.bias() = {0, 0, 1.5};
  EXPECT_EQ(m.predict("x x"), 0);
  EXPECT_EQ(m.predict("y y y"), 1);
  EXPECT_EQ(m.predict("x"), 2);
  EXPECT_EQ(m.predict("x y"), 2);
  auto s = m.scores(bow_featurize("x x y", m.vocab()));
  EXPECT_EQ(s, (std::vector<double>{2, 1, 1.5}));
}

struct Split {
  Corpus train{"train"}, test{"test"};
};

Split synthetic_split(const std::vector<SyntheticDomainSpec>& specs, std::size_t n_train, std::size_t n_test) {
  Split s;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    const Corpus tr = generate_synthetic_corpus(specs[d], n_train, static_cast<LabelId>(d), 0);
    const Corpus te = generate_synthetic_corpus(specs[d], n_test, static_cast<LabelId>(d), n_train);
    for (const auto& x : tr.sequences()) s.train.add(x);
    for (const auto& x : te.sequences()) s.test.add(x);
  }
  return s;
}

double accuracy(const Classifier& c, const Corpus& test) {
  std::size_t ok = 0;
  for (const auto& s : test.sequences()) ok += c.predict(s.text) == s.label;
  return static_cast<double>(ok) / static_cast<double>(test.size());
}

TEST(Bow, DisjointDomainsSeparable) {
  auto s = synthetic_split(disjoint_benchmark(4, 2), 80, 50);
  auto m = bow_train(s.train, 4);
  EXPECT_GE(accuracy(m, s.test), 0.99);
}

// Logistic regression should land near the naive Bayes oracle on unigram
// differences; the subtle benchmark's other signals are invisible to both.
TEST(Bow, TracksBayesOracleOnSubtleData) {
  auto s = synthetic_split(subtle_bias_benchmark(3, 5), 400, 200);
  const double bayes = testing::UnigramBayes(s.train, 3).accuracy(s.test);
  BowHyper h;
  h.epochs = 30;
  const double bow = accuracy(bow_train(s.train, 3, h), s.test);
  EXPECT_NEAR(bow, bayes, 0.08) << "bow " << bow << " bayes " << bayes;
}

TEST(Bow, JsonRoundTripAndErrors) {
  auto s = synthetic_split(disjoint_benchmark(2, 3), 20, 5);
  auto m = bow_train(s.train, 2);
  testing::TempDir dir;
  save_bow(m, dir / "bow.json");
  auto l = load_bow(dir / "bow.json");
  EXPECT_EQ(l.weights(), m.weights());
  EXPECT_EQ(l.bias(), m.bias());
  for (const auto& x : s.test.sequences()) EXPECT_EQ(l.predict(x.text), m.predict(x.text));
  EXPECT_THROW(bow_train(make_corpus({{"a", 0}, {"b", 0}}), 2), InvalidArgument);
  EXPECT_THROW(bow_train(make_corpus({{"a", 0}, {"b", 5}}), 2), InvalidArgument);
}

TEST(Shallow, FeatureRowsAndBigramOrder) {
  ShallowHyper h;
  h.dim = 8;
  h.buckets = 1000;
  ShallowModel m(index_of({"I", "like", "apples", "but", "not", "bananas"}), 2, h);
  const auto a = m.feature_rows("I like apples but not bananas");
  const auto b = m.feature_rows("bananas not but apples like I");
  ASSERT_EQ(a.size(), 6u + 5u);
  std::vector<uint64_t> wa(a.begin(), a.begin() + 6), wb(b.begin(), b.begin() + 6);
  std::sort(wa.begin(), wa.end());
  std::sort(wb.begin(), wb.end());
  EXPECT_EQ(wa, wb);
  for (uint64_t r : a) EXPECT_LT(r, 6u + 1000u);
  EXPECT_NE(std::vector<uint64_t>(a.begin() + 6, a.end()), std::vector<uint64_t>(b.begin() + 6, b.end()));
  h.n_gram_order = 1;
  EXPECT_EQ(ShallowModel(index_of({"a"}), 2, h).feature_rows("a a b").size(), 2u);
}

TEST(Shallow, DisjointDomainsSeparable) {
  auto s = synthetic_split(disjoint_benchmark(4, 6), 80, 50);
  ShallowHyper h;
  h.dim = 16;
  h.buckets = 10000;
  EXPECT_GE(accuracy(shallow_train(s.train, 4, h), s.test), 0.99);
}

TEST(Shallow, UnigramModelIsLinearInCounts) {
  auto s = synthetic_split(subtle_bias_benchmark(3, 1), 60, 40);
  ShallowHyper h;
  h.dim = 8;
  h.n_gram_order = 1;
  h.epochs = 2;
  auto m = shallow_train(s.train, 3, h);
  const auto w = m.as_linear_weights();
  for (const auto& x : s.test.sequences()) {
    std::vector<double> score(3, 0.0);
    for (const auto& [col, cnt] : bow_featurize(x.text, m.vocab())) {
      for (std::size_t c = 0; c < 3; ++c) score[c] += cnt * w[col * 3 + c];
    }
    EXPECT_EQ(static_cast<LabelId>(argmax(score.begin(), score.end())), m.predict(x.text));
  }
}

TEST(Shallow, JsonRoundTripAndDeterminism) {
  auto s = synthetic_split(disjoint_benchmark(2, 4), 20, 10);
  ShallowHyper h;
  h.dim = 8;
  h.buckets = 500;
  auto a = shallow_train(s.train, 2, h);
  auto b = shallow_train(s.train, 2, h);
  EXPECT_EQ(a.to_json(), b.to_json());
  testing::TempDir dir;
  save_shallow(a, dir / "s.json");
  auto l = load_shallow(dir / "s.json");
  for (const auto& x : s.test.sequences()) EXPECT_EQ(l.scores(x.text), a.scores(x.text));
}

}  // namespace
}  // namespace dsfp
