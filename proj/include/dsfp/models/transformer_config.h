#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dsfp/common/io.h"

namespace dsfp {

enum class HeadMode { kLm, kClass };

std::string_view to_string(HeadMode m);
HeadMode parse_head_mode(std::string_view s);

// Decoder-only transformer: pre-norm RMSNorm blocks, causal multi-head
// attention with rotary positions, SwiGLU MLP, untied input embedding and
// output head. The head is hidden_dim -> vocab_size (LM) or
// hidden_dim -> n_classes (classification).
struct TransformerConfig {
  std::string preset = "custom";
  int hidden_dim = 128;
  int n_heads = 4;
  int n_layers = 4;
  int context_length = 256;
  int vocab_size = 512;
  int n_classes = 2;
  // 0 derives ceil(8/3 * hidden_dim) rounded up to a multiple of 8.
  int mlp_hidden = 0;
  std::string activation = "swiglu";
  bool weight_tying = false;
  std::string positional = "rope";
  double rope_theta = 10000.0;
  double norm_eps = 1e-5;
  double init_std = 0.02;
  uint64_t seed = 0;

  void validate() const;
  int head_dim() const { return hidden_dim / n_heads; }
  int mlp_dim() const;
  json to_json() const;
  static TransformerConfig from_json(const json& j);
};

// Named presets: "25M", "87M", "160M", "410M" (context 2048, vocab 50,432)
// and the desk presets "tiny" (128 hidden, 4 heads, 4 layers, context 256) and
// "micro" (64 hidden, 4 heads, 2 layers, context 128).
TransformerConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();
// Nominal size in parameters encoded in a preset's name (0 for desk presets).
double preset_nominal_parameters(const std::string& name);

// Closed-form parameter count for the given head.
std::size_t analytic_parameter_count(const TransformerConfig& cfg, HeadMode mode);

struct TensorSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;  // into the flat parameter vector
  bool is_matrix = true;   // norm gains are vectors (rows == 1)
  std::size_t size() const { return rows * cols; }
};

// Flat parameter layout. Tensor order: tok_emb, then per layer attn_norm, wq,
// wk, wv, wo, mlp_norm, w_gate, w_up, w_down, then final_norm and head.
class ParamLayout {
 public:
  ParamLayout(const TransformerConfig& cfg, HeadMode mode);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  std::size_t total() const { return total_; }
  const TensorSpec& at(const std::string& name) const;
  const TensorSpec& head() const { return tensors_.back(); }
  // Number of leading parameters that form the body (everything but the head).
  std::size_t body_size() const { return tensors_.back().offset; }

  // Indices into tensors() for layer l.
  struct LayerIdx {
    std::size_t attn_norm, wq, wk, wv, wo, mlp_norm, w_gate, w_up, w_down;
  };
  const LayerIdx& layer(std::size_t l) const { return layers_[l]; }
  std::size_t tok_emb() const { return 0; }
  std::size_t final_norm() const { return tensors_.size() - 2; }
  std::size_t head_index() const { return tensors_.size() - 1; }

 private:
  std::vector<TensorSpec> tensors_;
  std::vector<LayerIdx> layers_;
  std::size_t total_ = 0;
};

}  // namespace dsfp
