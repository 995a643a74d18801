#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/train/evaluate.h"
#include "dsfp/train/trainer.h"

namespace dsfp {

enum class ScalingAxis { kModelSize, kTrainTokens };

std::string_view to_string(ScalingAxis a);
ScalingAxis parse_scaling_axis(std::string_view s);

struct ScalingPoint {
  std::string name;  // preset name or token budget
  double value = 0;  // parameters or tokens
  bool ok = false;
  double accuracy = 0;
  std::string error;
  json record = json::object();
};

struct ScalingGrid {
  ScalingAxis axis = ScalingAxis::kTrainTokens;
  std::vector<ScalingPoint> points;
  json to_json() const;
  std::string format_table() const;
};

// Runs one train + eval per point; a throwing point is recorded as failed and
// the grid moves on. Point values must be strictly increasing.
ScalingGrid run_scaling_grid(ScalingAxis axis, std::vector<ScalingPoint> points,
                             const std::function<EvalReport(const ScalingPoint&)>& run_point);

// Tokens per parameter used when pretraining "compute optimally".
inline constexpr double kComputeOptimalTokensPerParam = 20.0;

struct GridData {
  const RowSet* train = nullptr;        // classification rows
  const RowSet* pretrain = nullptr;     // LM rows; null trains from scratch
  const Corpus* test = nullptr;
  const Tokenizer* tokenizer = nullptr;
  TrainHyper finetune;
  TrainHyper pretrain_hyper;
};

// Token axis: one fixed backbone (pretrained once on the full pretrain set
// when given), a fresh head and finetune per budget.
ScalingGrid run_token_grid(const TransformerConfig& cfg, const std::vector<std::size_t>& budgets,
                           const GridData& data);

// Model axis: each preset, resized to the data's context and vocabulary, is
// pretrained on min(20 x parameters, available) tokens and finetuned on the
// full classification set.
ScalingGrid run_model_grid(const std::vector<std::string>& presets, const TransformerConfig& shape,
                           const GridData& data);

}  // namespace dsfp
