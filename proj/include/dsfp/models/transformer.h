#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/models/transformer_config.h"
#include "dsfp/models/transformer_engine.h"
#include "dsfp/tokenize/tokenizer.h"

namespace dsfp {

using LogitMatrix = engine::Mat<float>;

class TransformerModel {
 public:
  TransformerModel(TransformerConfig cfg, HeadMode mode, std::vector<float> params);

  const TransformerConfig& config() const { return cfg_; }
  HeadMode head_mode() const { return mode_; }
  const ParamLayout& layout() const { return engine_->layout(); }
  const engine::Engine<float>& engine() const { return *engine_; }
  std::size_t output_width() const { return layout().head().cols; }
  std::size_t parameter_count() const { return params_.size(); }

  std::vector<float>& params() { return params_; }
  const std::vector<float>& params() const { return params_; }

  // Per-position logits, tokens.size() x output_width(). Row t depends only on
  // tokens[0..t].
  LogitMatrix forward(std::span<const TokenId> tokens) const;

  std::span<const float> tensor(const std::string& name) const;
  // FNV-1a over the raw bytes of every non-head tensor, in layout order.
  uint64_t body_checksum() const;
  uint64_t full_checksum() const;
  uint64_t tensor_checksum(const TensorSpec& spec) const;

  // Free-form provenance (pretraining tokens, from-scratch flag, seeds ...).
  json metadata = json::object();

 private:
  TransformerConfig cfg_;
  HeadMode mode_;
  std::vector<float> params_;
  std::shared_ptr<const engine::Engine<float>> engine_;
};

// Fresh model with truncated-normal (std cfg.init_std, cut at 2 std; the class
// head uses init_std / sqrt(hidden_dim)) matrices
// and unit norm gains. Each tensor draws from its own stream derived from
// cfg.seed, so the same config always yields the same parameters.
TransformerModel build_transformer(const TransformerConfig& cfg, HeadMode mode = HeadMode::kLm);

// Swaps the LM head for a freshly initialized n_classes-wide class head. Body
// parameters are copied bit-exactly.
TransformerModel replace_head(const TransformerModel& lm, int n_classes);

// Initializes a flat parameter vector for `layout` (exposed for the double
// precision gradient checks).
std::vector<double> init_parameters(const TransformerConfig& cfg, const ParamLayout& layout);

// Checkpoint layout (little-endian):
//   magic "DSFPCKPT", u32 version, u32 header length, header JSON
//   (config, head_mode, seed, metadata, tensor table with shapes and
//   checksums), then each tensor's float32 payload in layout order, then an
//   FNV-1a 64 over everything before it.
void save_checkpoint(const TransformerModel& model, const std::filesystem::path& path);
TransformerModel load_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const TransformerModel& model);
TransformerModel decode_checkpoint(std::string_view bytes, const std::string& origin = "<memory>");

}  // namespace dsfp
