#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/corpus/corpus.h"
#include "dsfp/corpus/length_stats.h"
#include "dsfp/tokenize/word_tokenizer.h"
#include "test_support.h"

namespace dsfp {
namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p, std::ios::binary);
  for (const auto& l : lines) out << l << "\n";
}

TEST(LabelRegistry, DenseIdsInRegistrationOrder) {
  LabelRegistry r;
  EXPECT_EQ(r.add("c4"), 0);
  EXPECT_EQ(r.add("fineweb"), 1);
  EXPECT_EQ(r.add("c4"), 0);
  EXPECT_EQ(r.id("fineweb"), 1);
  EXPECT_EQ(r.name(1), "fineweb");
  EXPECT_THROW(r.id("nope"), InvalidArgument);
  EXPECT_EQ(LabelRegistry({"a", "b"}).names(), (std::vector<std::string>{"a", "b"}));
}

TEST(LoadCorpus, ThreeRecords) {
  testing::TempDir dir;
  write_lines(dir / "d.jsonl", {R"({"text":"one"})", R"({"text":"two"})", R"({"text":"three"})"});
  LabelRegistry reg({"x"});
  Corpus c = load_corpus(dir / "d.jsonl", CorpusFormat::kJsonlText, 0, reg);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.manifest().at(0), 3u);
}

TEST(LoadCorpus, EmptyTextIsSkippedAndCounted) {
  testing::TempDir dir;
  write_lines(dir / "d.jsonl", {R"({"text":"kept"})", R"({"text":""})"});
  LabelRegistry reg({"x"});
  Corpus c = load_corpus(dir / "d.jsonl", CorpusFormat::kJsonlText, 0, reg);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.skipped_empty, 1u);
}

TEST(LoadCorpus, MalformedRecordsRecordLineNumbers) {
  testing::TempDir dir;
  write_lines(dir / "d.jsonl", {R"({"text":"ok"})", "{not json", R"({"body":"no text"})", "{\"text\":\"bad \xff\"}"});
  LabelRegistry reg({"x"});
  Corpus c = load_corpus(dir / "d.jsonl", CorpusFormat::kJsonlText, 0, reg);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.skipped_malformed, 3u);
  ASSERT_EQ(c.issues.size(), 3u);
  EXPECT_EQ(c.issues[0].line, 2u);
  EXPECT_EQ(c.issues[1].line, 3u);
  EXPECT_EQ(c.issues[2].line, 4u);
}

TEST(LoadCorpus, OneDocPerFileAndPlainLines) {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "docs");
  write_lines(dir / "docs" / "b.txt", {"second", "doc"});
  write_lines(dir / "docs" / "a.txt", {"first"});
  write_lines(dir / "lines.txt", {"l1", "", "l3"});
  LabelRegistry reg({"x", "y"});
  Corpus files = load_corpus(dir / "docs", CorpusFormat::kOneDocPerFile, 1, reg);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].text, "first\n");
  EXPECT_EQ(files[0].label, 1);
  Corpus lines = load_corpus(dir / "lines.txt", CorpusFormat::kPlainLines, 0, reg);
  EXPECT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines.skipped_empty, 1u);
}

TEST(LoadCorpus, UnregisteredLabelAndMissingPath) {
  testing::TempDir dir;
  LabelRegistry reg({"x"});
  EXPECT_THROW(load_corpus(dir / "d.jsonl", CorpusFormat::kJsonlText, 3, reg), InvalidArgument);
  EXPECT_THROW(load_corpus(dir / "missing.jsonl", CorpusFormat::kJsonlText, 0, reg), IoError);
}

// Independent recount: a record counts when its line holds a non-blank text.
TEST(LoadCorpus, ManifestMatchesLineCountOracle) {
  testing::TempDir dir;
  std::mt19937_64 rng(11);
  std::vector<std::string> lines;
  std::size_t expected = 0;
  for (int i = 0; i < 10000; ++i) {
    const bool empty = rng() % 10 == 0;
    json rec{{"text", empty ? std::string("   ") : "doc " + std::to_string(i)}};
    lines.push_back(rec.dump());
  }
  write_lines(dir / "big.jsonl", lines);
  std::ifstream in(dir / "big.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = json::parse(line)["text"].get<std::string>();
    expected += t.find_first_not_of(' ') != std::string::npos;
  }
  LabelRegistry reg({"x"});
  Corpus c = load_corpus(dir / "big.jsonl", CorpusFormat::kJsonlText, 0, reg);
  EXPECT_EQ(c.manifest().at(0), expected);
  EXPECT_EQ(c.size() + c.skipped_empty, 10000u);
}

TEST(SampleSequences, FullSizeIsPermutation) {
  std::vector<std::pair<std::string, LabelId>> docs;
  for (int i = 0; i < 50; ++i) docs.emplace_back("d" + std::to_string(i), static_cast<LabelId>(i % 2));
  Corpus c = testing::make_corpus(docs);
  Corpus s = sample_sequences(c, c.size(), 3);
  std::multiset<std::string> a, b;
  for (const auto& x : c.sequences()) a.insert(x.text);
  for (const auto& x : s.sequences()) b.insert(x.text);
  EXPECT_EQ(a, b);
  EXPECT_THROW(sample_sequences(c, 51, 3), InvalidArgument);
}

TEST(SampleSequences, DeterministicUnderSeed) {
  std::vector<std::pair<std::string, LabelId>> docs;
  for (int i = 0; i < 200; ++i) docs.emplace_back("d" + std::to_string(i), 0);
  Corpus c = testing::make_corpus(docs);
  Corpus s1 = sample_sequences(c, 40, 9), s2 = sample_sequences(c, 40, 9), s3 = sample_sequences(c, 40, 10);
  bool differs = false;
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(s1[i].text, s2[i].text);
    differs |= s1[i].text != s3[i].text;
  }
  EXPECT_TRUE(differs);
}

// 50k of 100k with labels split evenly: label counts follow a hypergeometric
// law, and a chi-square against the uniform split must not reject at 1%.
TEST(SampleSequences, LabelBalanceChiSquare) {
  std::vector<std::pair<std::string, LabelId>> docs;
  for (int i = 0; i < 100000; ++i) docs.emplace_back("d", static_cast<LabelId>(i % 4));
  Corpus c = testing::make_corpus(docs);
  Corpus s = sample_sequences(c, 50000, 12345);
  std::array<double, 4> counts{};
  for (const auto& x : s.sequences()) counts[x.label]++;
  double chi2 = 0;
  for (double k : counts) chi2 += (k - 12500) * (k - 12500) / 12500;
  EXPECT_LT(chi2, 11.345);  // chi-square 3 dof, p = 0.01
}

TEST(LengthStats, ConstantSample) {
  std::vector<std::size_t> l{5, 5, 5};
  LengthStats s = length_stats_from(l);
  EXPECT_DOUBLE_EQ(s.mean, 5);
  EXPECT_DOUBLE_EQ(s.std_dev, 0);
  EXPECT_EQ(s.mode, 5u);
  EXPECT_DOUBLE_EQ(s.median, 5);
  EXPECT_EQ(s.range, 0u);
}

TEST(LengthStats, TiesAndEvenMedian) {
  std::vector<std::size_t> l{9, 2, 2, 9, 4, 7};
  LengthStats s = length_stats_from(l);
  EXPECT_EQ(s.mode, 2u);  // 2 and 9 tie; the smaller wins
  EXPECT_DOUBLE_EQ(s.median, 5.5);
  EXPECT_EQ(s.range, 7u);
  EXPECT_THROW(length_stats_from(std::vector<std::size_t>{}), InvalidArgument);
}

// One-pass brute force (Welford, counting map) against the two-pass code.
TEST(LengthStats, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::vector<std::pair<std::string, LabelId>> docs;
  for (int i = 0; i < 3000; ++i) {
    std::string t;
    const int words = 1 + static_cast<int>(rng() % 300);
    for (int w = 0; w < words; ++w) t += (w ? " w" : "w") + std::to_string(rng() % 50);
    docs.emplace_back(t, 0);
  }
  Corpus c = testing::make_corpus(docs);
  std::vector<std::string_view> texts;
  for (const auto& s : c.sequences()) texts.push_back(s.text);
  WordTokenizer tok = WordTokenizer::build(texts, 100);
  LengthStats s = compute_length_stats(c, tok);

  double mean = 0, m2 = 0;
  std::map<std::size_t, std::size_t> freq;
  std::vector<std::size_t> lens;
  std::size_t n = 0;
  for (const auto& seq : c.sequences()) {
    const std::size_t len = tok.encode(seq.text).size();
    lens.push_back(len);
    ++freq[len];
    ++n;
    const double d = static_cast<double>(len) - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (static_cast<double>(len) - mean);
  }
  std::size_t mode = 0, best = 0;
  for (auto [len, f] : freq) {
    if (f > best) best = f, mode = len;
  }
  std::sort(lens.begin(), lens.end());
  const double median = n % 2 ? static_cast<double>(lens[n / 2]) : 0.5 * static_cast<double>(lens[n / 2 - 1] + lens[n / 2]);
  EXPECT_NEAR(s.mean, mean, 1e-9);
  EXPECT_NEAR(s.std_dev, std::sqrt(m2 / static_cast<double>(n)), 1e-9);
  EXPECT_EQ(s.mode, mode);
  EXPECT_DOUBLE_EQ(s.median, median);
  EXPECT_EQ(s.range, lens.back() - lens.front());
}

TEST(Histogram, BucketsAndCap) {
  std::vector<std::size_t> l{10, 210};
  LengthHistogram h = histogram_from(l, 200, 5000);
  EXPECT_EQ(h.buckets.at(0), 1u);
  EXPECT_EQ(h.buckets.at(1), 1u);
  EXPECT_EQ(h.omitted, 0u);
  std::vector<std::size_t> l2{6000, 100};
  LengthHistogram h2 = histogram_from(l2, 200, 5000);
  EXPECT_EQ(h2.omitted, 1u);
  EXPECT_EQ(h2.total, 2u);
  EXPECT_THROW(histogram_from(l, 0, 10), InvalidArgument);
}

TEST(Utf8, Validation) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("\xc3\xa9\xe2\x80\xa2"));
  EXPECT_FALSE(is_valid_utf8("\xff"));
  EXPECT_FALSE(is_valid_utf8("\xc0\x80"));      // overlong
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));  // surrogate
  EXPECT_FALSE(is_valid_utf8("\xe2\x80"));      // truncated
}

}  // namespace
}  // namespace dsfp
