#include "dsfp/models/bow.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

SparseCounts bow_featurize(std::string_view text, const VocabIndex& vocab) {
  std::map<uint32_t, float> counts;
  std::string key;
  for (auto w : split_words(text)) {
    key.assign(w);
    auto it = vocab.find(key);
    if (it != vocab.end()) counts[it->second] += 1.0f;
  }
  return SparseCounts(counts.begin(), counts.end());
}

VocabIndex build_vocab_index(const Corpus& corpus, std::size_t min_count, std::size_t max_words) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& s : corpus.sequences()) {
    for (auto w : split_words(s.text)) ++freq[std::string(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [w, c] : freq) {
    if (c >= min_count) ranked.emplace_back(w, c);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  if (max_words > 0 && ranked.size() > max_words) ranked.resize(max_words);
  VocabIndex out;
  for (std::size_t i = 0; i < ranked.size(); ++i) out.emplace(ranked[i].first, static_cast<uint32_t>(i));
  return out;
}

json BowHyper::to_json() const {
  return json{{"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr},   {"l2", l2},
              {"min_count", min_count}, {"max_words", max_words},   {"seed", seed}};
}

BowHyper BowHyper::from_json(const json& j) {
  BowHyper h;
  h.epochs = j.value("epochs", h.epochs);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.lr = j.value("lr", h.lr);
  h.l2 = j.value("l2", h.l2);
  h.min_count = j.value("min_count", h.min_count);
  h.max_words = j.value("max_words", h.max_words);
  h.seed = j.value("seed", h.seed);
  if (h.batch_size == 0) throw InvalidArgument("bow batch_size must be positive");
  return h;
}

BowModel::BowModel(VocabIndex vocab, std::size_t n_classes)
    : vocab_(std::move(vocab)),
      n_classes_(n_classes),
      weights_(n_classes * vocab_.size(), 0.0),
      bias_(n_classes, 0.0) {
  if (n_classes < 2) throw InvalidArgument("a classifier needs at least two classes");
}

std::vector<double> BowModel::scores(const SparseCounts& x) const {
  std::vector<double> s(bias_);
  const std::size_t v = vocab_.size();
  for (std::size_t k = 0; k < n_classes_; ++k) {
    const double* w = weights_.data() + k * v;
    for (const auto& [j, c] : x) s[k] += w[j] * c;
  }
  return s;
}

LabelId BowModel::predict(std::string_view text) const {
  auto s = scores(bow_featurize(text, vocab_));
  return static_cast<LabelId>(argmax(s.begin(), s.end()));
}

json BowModel::to_json() const {
  std::vector<std::string> words(vocab_.size());
  for (const auto& [w, i] : vocab_) words[i] = w;
  return json{{"format", "dsfp-bow"}, {"version", 1},         {"n_classes", n_classes_},
              {"words", words},       {"weights", weights_},  {"bias", bias_}};
}

BowModel BowModel::from_json(const json& j) {
  if (j.value("format", "") != "dsfp-bow") throw FormatError("not a bag-of-words model");
  if (j.value("version", 0) != 1) throw VersionError("unsupported bag-of-words model version");
  VocabIndex vocab;
  const auto words = j.at("words").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < words.size(); ++i) vocab.emplace(words[i], static_cast<uint32_t>(i));
  BowModel m(std::move(vocab), j.at("n_classes").get<std::size_t>());
  m.weights_ = j.at("weights").get<std::vector<double>>();
  m.bias_ = j.at("bias").get<std::vector<double>>();
  if (m.weights_.size() != m.n_classes_ * m.vocab_.size() || m.bias_.size() != m.n_classes_) {
    throw FormatError("bag-of-words weight shape mismatch");
  }
  return m;
}

BowModel bow_train(const Corpus& train, std::size_t n_classes, const BowHyper& hyper) {
  check_training_labels(train, n_classes);
  BowModel model(build_vocab_index(train, hyper.min_count, hyper.max_words), n_classes);
  const std::size_t v = model.n_features();
  const std::size_t n = train.size();

  std::vector<SparseCounts> feats(n);
  parallel_for(n, [&](std::size_t i) { feats[i] = bow_featurize(train[i].text, model.vocab()); });

  // Adam over the dense parameter vector [weights | bias].
  auto& w = model.weights();
  auto& b = model.bias();
  const std::size_t np = w.size() + b.size();
  std::vector<double> g(np), m1(np, 0.0), m2(np, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;
  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += hyper.batch_size) {
      const std::size_t end = std::min(n, start + hyper.batch_size);
      std::fill(g.begin(), g.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t bi = start; bi < end; ++bi) {
        const auto& x = feats[order[bi]];
        auto s = model.scores(x);
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0;
        for (auto& e : s) z += (e = std::exp(e - mx));
        for (std::size_t k = 0; k < n_classes; ++k) {
          const double gk = (s[k] / z - (k == train[order[bi]].label ? 1.0 : 0.0)) * inv;
          double* gw = g.data() + k * v;
          for (const auto& [j, c] : x) gw[j] += gk * c;
          g[w.size() + k] += gk;
        }
      }
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < np; ++p) {
        double& param = p < w.size() ? w[p] : b[p - w.size()];
        const double gp = g[p] + (p < w.size() ? hyper.l2 * param : 0.0);
        m1[p] = beta1 * m1[p] + (1 - beta1) * gp;
        m2[p] = beta2 * m2[p] + (1 - beta2) * gp * gp;
        param -= hyper.lr * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + eps);
      }
    }
  }
  return model;
}

void save_bow(const BowModel& m, const std::filesystem::path& path) { write_file_atomic(path, m.to_json().dump()); }

BowModel load_bow(const std::filesystem::path& path) { return BowModel::from_json(json::parse(read_file(path))); }

}  // namespace dsfp
