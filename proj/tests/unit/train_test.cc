#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"
#include "dsfp/models/transformer.h"
#include "dsfp/train/hyper.h"
#include "dsfp/train/trainer.h"
#include "test_support.h"

namespace dsfp {
namespace {

using testing::small_config;

RowBlock make_block(std::size_t rows, std::size_t ctx, LabelId label, uint64_t seed, int vocab) {
  std::mt19937_64 rng(seed);
  RowBlock b;
  b.context_length = ctx;
  b.label = label;
  for (std::size_t i = 0; i < rows * (ctx + 1); ++i) b.tokens.push_back(static_cast<TokenId>(rng() % static_cast<uint64_t>(vocab)));
  return b;
}

// Class c uses only tokens congruent to c mod 3: a trivially learnable split.
RowBlock class_block(std::size_t rows, std::size_t ctx, LabelId label, uint64_t seed) {
  auto b = make_block(rows, ctx, label, seed, 13);
  for (auto& t : b.tokens) t = static_cast<TokenId>(3 * t + label);
  return b;
}

TEST(Schedule, WarmupThenCosine) {
  TrainHyper h;
  h.lr = 1.0;
  h.warmup_steps = 10;
  EXPECT_DOUBLE_EQ(learning_rate(h, 0, 100), 0.1);
  EXPECT_DOUBLE_EQ(learning_rate(h, 4, 100), 0.5);
  EXPECT_DOUBLE_EQ(learning_rate(h, 10, 100), 1.0);
  EXPECT_NEAR(learning_rate(h, 55, 100), 0.5, 1e-12);
  EXPECT_NEAR(learning_rate(h, 100, 100), 0.0, 1e-12);
  for (std::size_t s = 10; s < 100; ++s) EXPECT_GE(learning_rate(h, s, 100), learning_rate(h, s + 1, 100));
  const double x = 0.5 * (1 + std::cos(std::numbers::pi * 30.0 / 90.0));
  EXPECT_NEAR(learning_rate(h, 40, 100), x, 1e-12);
}

TEST(Hyper, ValidateAndJson) {
  TrainHyper h;
  EXPECT_NO_THROW(h.validate());
  h.batch_size = 0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = TrainHyper{};
  h.beta2 = 1.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = TrainHyper{};
  h.lr = 1e-3;
  h.max_steps = 7;
  EXPECT_EQ(TrainHyper::from_json(h.to_json()).to_json(), h.to_json());
}

// Reference AdamW in double for two steps, one decayed matrix entry and one
// undecayed norm gain.
TEST(AdamW, MatchesReferenceUpdate) {
  auto cfg = small_config();
  ParamLayout layout(cfg, HeadMode::kClass);
  TrainHyper h;
  h.weight_decay = 0.1;
  const std::size_t gain = layout.at("final_norm").offset;
  const std::size_t mat = layout.head().offset;
  std::vector<float> p(layout.total(), 0.5f);
  std::vector<float> g(layout.total(), 0.0f);
  g[gain] = 0.3f;
  g[mat] = -0.2f;
  AdamW opt(h, layout, 0, layout.total());
  double rp[2] = {0.5, 0.5}, m[2] = {0, 0}, v[2] = {0, 0};
  const double gs[2] = {0.3, -0.2};
  const bool decayed[2] = {false, true};
  for (int t = 1; t <= 2; ++t) {
    const double lr = 0.01 * t;
    opt.step(p, g, lr);
    for (int k = 0; k < 2; ++k) {
      m[k] = h.beta1 * m[k] + (1 - h.beta1) * gs[k];
      v[k] = h.beta2 * v[k] + (1 - h.beta2) * gs[k] * gs[k];
      const double mh = m[k] / (1 - std::pow(h.beta1, t));
      const double vh = v[k] / (1 - std::pow(h.beta2, t));
      if (decayed[k]) rp[k] -= lr * h.weight_decay * rp[k];
      rp[k] -= lr * mh / (std::sqrt(vh) + h.eps);
    }
  }
  EXPECT_NEAR(p[gain], rp[0], 1e-6);
  EXPECT_NEAR(p[mat], rp[1], 1e-6);
  // zero gradient on a decayed entry still shrinks it; on a gain it does not
  EXPECT_LT(p[mat + 1], 0.5f);
  EXPECT_FLOAT_EQ(p[gain + 1], 0.5f);
  EXPECT_EQ(opt.steps_taken(), 2u);
}

TEST(Clip, ScalesToMaxNorm) {
  std::vector<float> g{3, 4};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-6);
  EXPECT_NEAR(g[1], 0.8, 1e-6);
  std::vector<float> s{0.3f, 0.4f};
  clip_grad_norm(s, 1.0);
  EXPECT_FLOAT_EQ(s[0], 0.3f);
  clip_grad_norm(g = {3, 4}, 0.0);
  EXPECT_FLOAT_EQ(g[0], 3.0f);
}

TEST(Interleave, RoundRobinPermutation) {
  RowSet rows{make_block(5, 4, 0, 1, 10), make_block(2, 4, 1, 2, 10), make_block(3, 4, 2, 3, 10)};
  auto order = interleave_rows(rows, 9);
  ASSERT_EQ(order.size(), 10u);
  std::vector<std::size_t> blocks;
  for (auto [b, r] : order) blocks.push_back(b);
  EXPECT_EQ(blocks, (std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0, 2, 0, 0}));
  std::map<std::size_t, std::set<std::size_t>> seen;
  for (auto [b, r] : order) EXPECT_TRUE(seen[b].insert(r).second);
  EXPECT_EQ(seen[0].size(), 5u);
  EXPECT_EQ(interleave_rows(rows, 9), order);
  EXPECT_NE(interleave_rows(rows, 9, 1), order);
}

TEST(Budget, TakeTokensAndBalance) {
  RowSet rows{make_block(10, 8, 0, 1, 10), make_block(4, 8, 1, 2, 10)};
  auto b = take_token_budget(rows, 48);  // 24 per block = 3 rows of 8
  EXPECT_EQ(b[0].row_count(), 3u);
  EXPECT_EQ(b[1].row_count(), 3u);
  EXPECT_TRUE(std::equal(b[0].tokens.begin(), b[0].tokens.end(), rows[0].tokens.begin()));
  EXPECT_EQ(take_token_budget(rows, 1000)[0].row_count(), 4u);
  EXPECT_EQ(take_token_budget(rows, 1)[0].row_count(), 1u);
  auto bal = balance_rows(rows);
  EXPECT_EQ(bal[0].row_count(), 4u);
  EXPECT_EQ(bal[1].row_count(), 4u);
}

TEST(Finetune, ZeroStepsLeavesParameters) {
  auto m = build_transformer(small_config(3, 40, 8), HeadMode::kClass);
  RowSet rows{class_block(4, 8, 0, 1), class_block(4, 8, 1, 2), class_block(4, 8, 2, 3)};
  TrainHyper h;
  h.max_steps = 0;
  auto out = finetune_classifier(m, rows, h);
  EXPECT_EQ(out.params(), m.params());
}

TEST(Finetune, LearnsSeparableClassesAndLogs) {
  auto m = build_transformer(small_config(3, 40, 8), HeadMode::kClass);
  RowSet rows{class_block(32, 8, 0, 1), class_block(32, 8, 1, 2), class_block(32, 8, 2, 3)};
  TrainHyper h;
  h.lr = 3e-3;
  h.warmup_steps = 5;
  h.batch_size = 8;
  h.epochs = 4;
  h.weight_decay = 0.0;
  TrainLog log;
  const double before = classification_loss(m, rows);
  auto out = finetune_classifier(m, rows, h, &log);
  EXPECT_EQ(log.loss.size(), planned_steps(rows, h));
  EXPECT_EQ(log.loss.size(), 4u * 96 / 8);
  EXPECT_LT(classification_loss(out, rows), 0.5 * before);
  EXPECT_TRUE(out.metadata.value("from_scratch", false));
}

TEST(Finetune, ThreadCountDoesNotChangeResult) {
  auto m = build_transformer(small_config(3, 40, 8), HeadMode::kClass);
  RowSet rows{class_block(8, 8, 0, 1), class_block(8, 8, 1, 2), class_block(8, 8, 2, 3)};
  TrainHyper h;
  h.lr = 1e-3;
  h.warmup_steps = 2;
  h.batch_size = 6;
  const auto saved = max_threads();
  set_max_threads(1);
  auto a = finetune_classifier(m, rows, h);
  set_max_threads(4);
  auto b = finetune_classifier(m, rows, h);
  set_max_threads(saved);
  EXPECT_EQ(a.params(), b.params());
}

TEST(Pretrain, LossDecreases) {
  auto m = build_transformer(small_config(3, 12, 8), HeadMode::kLm);
  // a deterministic cycle is easy to predict
  RowBlock b;
  b.context_length = 8;
  for (std::size_t i = 0; i < 64 * 9; ++i) b.tokens.push_back(static_cast<TokenId>(i % 12));
  RowSet rows{b};
  TrainHyper h;
  h.lr = 3e-3;
  h.warmup_steps = 5;
  h.batch_size = 8;
  h.epochs = 12;
  TrainLog log;
  const double before = lm_loss(m, rows);
  EXPECT_NEAR(before, std::log(12.0), 0.1);
  auto out = pretrain_lm(m, rows, h, &log);
  EXPECT_LT(lm_loss(out, rows), 0.5 * before);
  EXPECT_LT(log.loss.back(), log.loss.front());
  EXPECT_EQ(log.tokens_seen, 12u * 64 * 8);
}

TEST(Probe, BodyUnchangedHeadTrained) {
  auto lm = build_transformer(small_config(3, 40, 8), HeadMode::kLm);
  RowSet rows{class_block(16, 8, 0, 1), class_block(16, 8, 1, 2), class_block(16, 8, 2, 3)};
  TrainHyper h;
  h.lr = 1e-2;
  h.warmup_steps = 2;
  h.batch_size = 8;
  h.epochs = 2;
  auto p = linear_probe(lm, rows, 3, h);
  EXPECT_EQ(p.body_checksum(), lm.body_checksum());
  EXPECT_NE(p.tensor_checksum(p.layout().head()), replace_head(lm, 3).tensor_checksum(p.layout().head()));
}

}  // namespace
}  // namespace dsfp
