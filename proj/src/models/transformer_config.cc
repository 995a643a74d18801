#include "dsfp/models/transformer_config.h"

#include <map>

#include "dsfp/common/error.h"

namespace dsfp {

std::string_view to_string(HeadMode m) { return m == HeadMode::kLm ? "lm-head" : "class-head"; }

HeadMode parse_head_mode(std::string_view s) {
  if (s == "lm-head" || s == "lm") return HeadMode::kLm;
  if (s == "class-head" || s == "class") return HeadMode::kClass;
  throw InvalidArgument("unknown head mode: " + std::string(s));
}

void TransformerConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw InvalidArgument(std::string(what) + " must be positive");
  };
  positive(hidden_dim, "hidden_dim");
  positive(n_heads, "n_heads");
  positive(n_layers, "n_layers");
  positive(context_length, "context_length");
  positive(vocab_size, "vocab_size");
  if (hidden_dim % n_heads != 0) {
    throw InvalidArgument("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by n_heads " +
                          std::to_string(n_heads));
  }
  if (head_dim() % 2 != 0) throw InvalidArgument("rotary positions need an even head dimension");
  if (n_classes < 2) throw InvalidArgument("n_classes must be at least 2");
  if (mlp_hidden < 0) throw InvalidArgument("mlp_hidden must be non-negative");
  if (activation != "swiglu") throw InvalidArgument("only the swiglu activation is implemented");
  if (weight_tying) throw InvalidArgument("weight tying is not supported");
  if (positional != "rope") throw InvalidArgument("only rotary positions are implemented");
  if (!(init_std > 0)) throw InvalidArgument("init_std must be positive");
}

int TransformerConfig::mlp_dim() const {
  if (mlp_hidden > 0) return mlp_hidden;
  const int raw = (8 * hidden_dim + 2) / 3;
  return (raw + 7) / 8 * 8;
}

json TransformerConfig::to_json() const {
  return json{{"preset", preset},
              {"hidden_dim", hidden_dim},
              {"n_heads", n_heads},
              {"n_layers", n_layers},
              {"context_length", context_length},
              {"vocab_size", vocab_size},
              {"n_classes", n_classes},
              {"mlp_hidden", mlp_dim()},
              {"mlp_ratio", "8/3"},
              {"activation", activation},
              {"weight_tying", weight_tying},
              {"positional", positional},
              {"rope_theta", rope_theta},
              {"norm_eps", norm_eps},
              {"init_std", init_std},
              {"seed", seed}};
}

TransformerConfig TransformerConfig::from_json(const json& j) {
  TransformerConfig c;
  if (j.contains("preset") && j["preset"].get<std::string>() != "custom") {
    c = preset_config(j["preset"].get<std::string>());
  }
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.context_length = j.value("context_length", c.context_length);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.activation = j.value("activation", c.activation);
  c.weight_tying = j.value("weight_tying", c.weight_tying);
  c.positional = j.value("positional", c.positional);
  c.rope_theta = j.value("rope_theta", c.rope_theta);
  c.norm_eps = j.value("norm_eps", c.norm_eps);
  c.init_std = j.value("init_std", c.init_std);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

struct PresetRow {
  int hidden, heads, layers, context, vocab;
  double nominal;
};

const std::map<std::string, PresetRow>& presets() {
  static const std::map<std::string, PresetRow> kPresets = {
      {"25M", {192, 12, 12, 2048, 50432, 25e6}},
      {"87M", {488, 12, 12, 2048, 50432, 87e6}},
      {"160M", {768, 12, 12, 2048, 50432, 160e6}},
      {"410M", {1024, 16, 24, 2048, 50432, 410e6}},
      {"tiny", {128, 4, 4, 256, 50432, 0}},
      {"micro", {64, 4, 2, 128, 50432, 0}},
  };
  return kPresets;
}

}  // namespace

TransformerConfig preset_config(const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) throw InvalidArgument("unknown model preset: " + name);
  TransformerConfig c;
  c.preset = name;
  c.hidden_dim = it->second.hidden;
  c.n_heads = it->second.heads;
  c.n_layers = it->second.layers;
  c.context_length = it->second.context;
  c.vocab_size = it->second.vocab;
  return c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : presets()) out.push_back(k);
  return out;
}

double preset_nominal_parameters(const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) throw InvalidArgument("unknown model preset: " + name);
  return it->second.nominal;
}

std::size_t analytic_parameter_count(const TransformerConfig& cfg, HeadMode mode) {
  const std::size_t d = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t h = static_cast<std::size_t>(cfg.mlp_dim());
  const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
  const std::size_t out = mode == HeadMode::kLm ? v : static_cast<std::size_t>(cfg.n_classes);
  const std::size_t per_layer = 2 * d + 4 * d * d + 3 * d * h;
  return v * d + static_cast<std::size_t>(cfg.n_layers) * per_layer + d + d * out;
}

ParamLayout::ParamLayout(const TransformerConfig& cfg, HeadMode mode) {
  cfg.validate();
  const std::size_t d = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t h = static_cast<std::size_t>(cfg.mlp_dim());
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool matrix) {
    tensors_.push_back(TensorSpec{std::move(name), rows, cols, total_, matrix});
    total_ += rows * cols;
    return tensors_.size() - 1;
  };
  add("tok_emb", static_cast<std::size_t>(cfg.vocab_size), d, true);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    LayerIdx idx{};
    idx.attn_norm = add(p + "attn_norm", 1, d, false);
    idx.wq = add(p + "wq", d, d, true);
    idx.wk = add(p + "wk", d, d, true);
    idx.wv = add(p + "wv", d, d, true);
    idx.wo = add(p + "wo", d, d, true);
    idx.mlp_norm = add(p + "mlp_norm", 1, d, false);
    idx.w_gate = add(p + "w_gate", d, h, true);
    idx.w_up = add(p + "w_up", d, h, true);
    idx.w_down = add(p + "w_down", h, d, true);
    layers_.push_back(idx);
  }
  add("final_norm", 1, d, false);
  add(mode == HeadMode::kLm ? "lm_head" : "class_head", d,
      mode == HeadMode::kLm ? static_cast<std::size_t>(cfg.vocab_size) : static_cast<std::size_t>(cfg.n_classes),
      true);
}

const TensorSpec& ParamLayout::at(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw InvalidArgument("no tensor named " + name);
}

}  // namespace dsfp
