#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/models/transformer.h"
#include "test_support.h"

namespace dsfp {
namespace {

using testing::small_config;

std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t n, int vocab) {
  std::vector<TokenId> t(n);
  for (auto& x : t) x = static_cast<TokenId>(rng() % static_cast<uint64_t>(vocab));
  return t;
}

TEST(TransformerConfig, PresetSizesNearNominal) {
  for (const std::string name : {"25M", "87M", "160M", "410M"}) {
    const auto cfg = preset_config(name);
    EXPECT_EQ(cfg.context_length, 2048);
    EXPECT_EQ(cfg.vocab_size, 50432);
    const double n = static_cast<double>(analytic_parameter_count(cfg, HeadMode::kLm));
    EXPECT_NEAR(n / preset_nominal_parameters(name), 1.0, 0.10) << name << " " << n;
  }
  const auto micro = preset_config("micro");
  EXPECT_EQ(micro.hidden_dim, 64);
  EXPECT_EQ(micro.n_heads, 4);
  EXPECT_EQ(micro.n_layers, 2);
  EXPECT_EQ(micro.context_length, 128);
  EXPECT_THROW(preset_config("huge"), InvalidArgument);
}

// Parameter count from an independent tally of tensor shapes.
TEST(TransformerConfig, LayoutMatchesHandCount) {
  auto cfg = small_config();
  const std::size_t d = 16, v = 40, k = 3;
  const std::size_t h = 48;  // ceil(8/3*16)=43 -> 48
  EXPECT_EQ(static_cast<std::size_t>(cfg.mlp_dim()), h);
  const std::size_t expect = v * d + 2 * (d + 3 * d * d + d * d + d + 3 * d * h) + d + d * k;
  ParamLayout layout(cfg, HeadMode::kClass);
  EXPECT_EQ(layout.total(), expect);
  EXPECT_EQ(analytic_parameter_count(cfg, HeadMode::kClass), expect);
  EXPECT_EQ(layout.body_size(), expect - d * k);
}

TEST(TransformerConfig, RejectsBadShapes) {
  auto cfg = small_config();
  cfg.n_heads = 3;  // 16 not divisible
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.n_heads = 4;  // head_dim 4 is fine, odd head dims are not (rotary pairs)
  EXPECT_NO_THROW(cfg.validate());
  cfg.hidden_dim = 12;
  cfg.n_heads = 4;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.context_length = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  auto j = small_config().to_json();
  EXPECT_EQ(TransformerConfig::from_json(j).to_json(), j);
}

TEST(Transformer, SameSeedSameParameters) {
  auto a = build_transformer(small_config(), HeadMode::kLm);
  auto b = build_transformer(small_config(), HeadMode::kLm);
  EXPECT_EQ(a.params(), b.params());
  auto cfg = small_config();
  cfg.seed = 8;
  EXPECT_NE(build_transformer(cfg, HeadMode::kLm).params(), a.params());
}

TEST(Transformer, CausalMasking) {
  auto m = build_transformer(small_config(), HeadMode::kLm);
  std::mt19937_64 rng(1);
  auto t = random_tokens(rng, 12, 40);
  const auto base = m.forward(t);
  for (std::size_t cut = 1; cut < t.size(); ++cut) {
    auto u = t;
    for (std::size_t i = cut; i < u.size(); ++i) u[i] = (u[i] + 7) % 40;
    const auto other = m.forward(u);
    for (std::size_t r = 0; r < cut; ++r) {
      for (Eigen::Index c = 0; c < base.cols(); ++c) {
        ASSERT_FLOAT_EQ(base(r, c), other(r, c)) << "row " << r << " cut " << cut;
      }
    }
  }
}

TEST(Transformer, DecodeMatchesFullForward) {
  auto m = build_transformer(small_config(), HeadMode::kLm);
  std::mt19937_64 rng(2);
  auto t = random_tokens(rng, 10, 40);
  const auto full = m.forward(t);
  engine::DecodeState<float> s;
  m.engine().start_decode(s);
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto row = m.engine().decode_step(m.params().data(), s, t[i]);
    for (Eigen::Index c = 0; c < full.cols(); ++c) EXPECT_NEAR(row(c), full(i, c), 1e-5);
  }
}

// Central differences in double precision against the analytic backward pass.
TEST(Transformer, GradientCheck) {
  auto cfg = small_config(3, 30, 12);
  cfg.init_std = 0.3;
  for (HeadMode mode : {HeadMode::kClass, HeadMode::kLm}) {
    ParamLayout layout(cfg, mode);
    engine::Engine<double> eng(cfg, layout);
    auto p = init_parameters(cfg, layout);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0, 0.1);
    for (auto& x : p) x += noise(rng);
    auto toks = random_tokens(rng, 10, 30);
    auto loss = [&](const std::vector<double>& q, std::vector<double>* g) {
      engine::ForwardCache<double> c;
      eng.forward(q.data(), toks, c);
      engine::Mat<double> dl;
      const double l = mode == HeadMode::kLm
                           ? engine::softmax_cross_entropy<double>(c.logits, [&](long t) { return toks[(t + 1) % 10]; }, dl, 1.0)
                           : engine::softmax_cross_entropy<double>(c.logits, [](long) { return 1; }, dl, 1.0);
      if (g) {
        g->assign(q.size(), 0);
        eng.backward(q.data(), c, dl, g->data());
      }
      return l;
    };
    std::vector<double> g;
    loss(p, &g);
    std::vector<std::size_t> idx;
    for (const auto& t : layout.tensors()) idx.push_back(t.offset + rng() % t.size());
    while (idx.size() < 100) idx.push_back(rng() % p.size());
    double worst = 0;
    for (std::size_t i : idx) {
      auto q = p;
      const double h = 1e-5;
      q[i] += h;
      const double a = loss(q, nullptr);
      q[i] -= 2 * h;
      const double b = loss(q, nullptr);
      const double fd = (a - b) / (2 * h);
      const double rel = std::abs(fd - g[i]) / std::max(1e-8, std::abs(fd) + std::abs(g[i]));
      worst = std::max(worst, rel);
    }
    EXPECT_LT(worst, 1e-4) << to_string(mode);
  }
}

TEST(Transformer, InitialClassLossNearLogK) {
  for (int k : {2, 5, 7}) {
    auto m = build_transformer(small_config(k, 40, 16), HeadMode::kClass);
    std::mt19937_64 rng(static_cast<uint64_t>(k));
    double total = 0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
      auto logits = m.forward(random_tokens(rng, 16, 40)).cast<double>();
      engine::Mat<double> dl;
      total += engine::softmax_cross_entropy<double>(logits, [&](long) { return i % k; }, dl, 1.0);
    }
    EXPECT_NEAR(total / n, std::log(static_cast<double>(k)), 0.02) << k;
  }
}

TEST(Transformer, CheckpointRoundTrip) {
  testing::TempDir dir;
  auto m = build_transformer(small_config(), HeadMode::kClass);
  m.metadata["note"] = "x";
  save_checkpoint(m, dir / "m.ckpt");
  auto l = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(l.params(), m.params());
  EXPECT_EQ(l.head_mode(), HeadMode::kClass);
  EXPECT_EQ(l.config().to_json(), m.config().to_json());
  EXPECT_EQ(l.metadata["note"], "x");
  EXPECT_EQ(l.full_checksum(), m.full_checksum());
}

TEST(Transformer, CheckpointCorruptionDetected) {
  auto bytes = encode_checkpoint(build_transformer(small_config(), HeadMode::kLm));
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(decode_checkpoint(flipped), ChecksumError);
  std::string magic = bytes;
  magic[1] = 'Z';
  EXPECT_THROW(decode_checkpoint(magic), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, 20)), FormatError);
}

TEST(Transformer, ReplaceHeadKeepsBodyBits) {
  auto lm = build_transformer(small_config(), HeadMode::kLm);
  for (int n = 2; n <= 7; ++n) {
    auto c = replace_head(lm, n);
    EXPECT_EQ(c.head_mode(), HeadMode::kClass);
    EXPECT_EQ(c.output_width(), static_cast<std::size_t>(n));
    EXPECT_EQ(c.body_checksum(), lm.body_checksum());
    const std::size_t body = lm.layout().body_size();
    ASSERT_EQ(c.layout().body_size(), body);
    EXPECT_EQ(0, std::memcmp(c.params().data(), lm.params().data(), body * sizeof(float)));
  }
}

}  // namespace
}  // namespace dsfp
