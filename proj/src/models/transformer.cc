#include "dsfp/models/transformer.h"

#include <cmath>
#include <cstring>
#include <random>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"

namespace dsfp {
namespace {

constexpr std::array<char, 8> kCkptMagic = {'D', 'S', 'F', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCkptVersion = 1;

// Stream id per tensor name keeps the body draw independent of the head type.
uint64_t tensor_stream(const std::string& name) { return fnv1a64(name); }

template <typename T>
void init_tensor(const TransformerConfig& cfg, const TensorSpec& spec, T* out) {
  if (!spec.is_matrix) {
    std::fill(out, out + spec.size(), T(1));
    return;
  }
  std::mt19937_64 rng(derive_seed(cfg.seed, tensor_stream(spec.name)));
  std::normal_distribution<double> normal(0.0, 1.0);
  // The class head is scaled down by sqrt(hidden) so initial logits are near
  // uniform and the first per-position loss sits at ln(n_classes).
  const double std_dev = spec.name == "class_head" ? cfg.init_std / std::sqrt(static_cast<double>(spec.rows))
                                                   : cfg.init_std;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    double z;
    do {
      z = normal(rng);
    } while (std::abs(z) > 2.0);
    out[i] = static_cast<T>(z * std_dev);
  }
}

}  // namespace

TransformerModel::TransformerModel(TransformerConfig cfg, HeadMode mode, std::vector<float> params)
    : cfg_(std::move(cfg)), mode_(mode), params_(std::move(params)) {
  cfg_.validate();
  ParamLayout layout(cfg_, mode_);
  if (params_.size() != layout.total()) {
    throw InvalidArgument("parameter vector has " + std::to_string(params_.size()) + " entries, layout needs " +
                          std::to_string(layout.total()));
  }
  engine_ = std::make_shared<const engine::Engine<float>>(cfg_, layout);
}

LogitMatrix TransformerModel::forward(std::span<const TokenId> tokens) const {
  engine::ForwardCache<float> cache;
  engine_->forward(params_.data(), tokens, cache);
  return std::move(cache.logits);
}

std::span<const float> TransformerModel::tensor(const std::string& name) const {
  const auto& s = layout().at(name);
  return std::span<const float>(params_).subspan(s.offset, s.size());
}

uint64_t TransformerModel::tensor_checksum(const TensorSpec& spec) const {
  auto view = std::span<const float>(params_).subspan(spec.offset, spec.size());
  return fnv1a64(std::as_bytes(view));
}

uint64_t TransformerModel::body_checksum() const {
  auto view = std::span<const float>(params_).first(layout().body_size());
  return fnv1a64(std::as_bytes(view));
}

uint64_t TransformerModel::full_checksum() const { return fnv1a64(std::as_bytes(std::span<const float>(params_))); }

std::vector<double> init_parameters(const TransformerConfig& cfg, const ParamLayout& layout) {
  std::vector<double> p(layout.total());
  for (const auto& t : layout.tensors()) init_tensor(cfg, t, p.data() + t.offset);
  return p;
}

TransformerModel build_transformer(const TransformerConfig& cfg, HeadMode mode) {
  ParamLayout layout(cfg, mode);
  std::vector<float> p(layout.total());
  for (const auto& t : layout.tensors()) init_tensor(cfg, t, p.data() + t.offset);
  TransformerModel m(cfg, mode, std::move(p));
  m.metadata["init_seed"] = cfg.seed;
  return m;
}

TransformerModel replace_head(const TransformerModel& lm, int n_classes) {
  if (lm.head_mode() != HeadMode::kLm) throw InvalidArgument("model already has a class head");
  TransformerConfig cfg = lm.config();
  cfg.n_classes = n_classes;
  cfg.validate();
  ParamLayout layout(cfg, HeadMode::kClass);
  std::vector<float> p(layout.total());
  const std::size_t body = lm.layout().body_size();
  if (body != layout.body_size()) throw InvalidArgument("body layouts differ");
  std::memcpy(p.data(), lm.params().data(), body * sizeof(float));
  init_tensor(cfg, layout.head(), p.data() + layout.head().offset);
  TransformerModel out(cfg, HeadMode::kClass, std::move(p));
  out.metadata = lm.metadata;
  out.metadata["head_replaced"] = true;
  return out;
}

std::string encode_checkpoint(const TransformerModel& model) {
  json tensors = json::array();
  for (const auto& t : model.layout().tensors()) {
    tensors.push_back(
        {{"name", t.name}, {"shape", {t.rows, t.cols}}, {"checksum", hex64(model.tensor_checksum(t))}});
  }
  json header{{"format_version", kCkptVersion},
              {"config", model.config().to_json()},
              {"head_mode", to_string(model.head_mode())},
              {"seed", model.config().seed},
              {"metadata", model.metadata},
              {"tensors", std::move(tensors)}};
  const std::string h = header.dump();
  std::string out;
  out.reserve(16 + h.size() + model.params().size() * 4 + 8);
  out.append(kCkptMagic.data(), kCkptMagic.size());
  put_le<uint32_t>(out, kCkptVersion);
  put_le<uint32_t>(out, static_cast<uint32_t>(h.size()));
  out += h;
  for (float v : model.params()) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_le<uint32_t>(out, bits);
  }
  put_le<uint64_t>(out, fnv1a64(std::as_bytes(std::span(out.data(), out.size()))));
  return out;
}

TransformerModel decode_checkpoint(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 16 + 8 || std::memcmp(bytes.data(), kCkptMagic.data(), kCkptMagic.size()) != 0) {
    throw FormatError(origin + ": not a model checkpoint");
  }
  const auto body = bytes.substr(0, bytes.size() - 8);
  const auto stored = get_le<uint64_t>(reinterpret_cast<const unsigned char*>(bytes.data() + body.size()));
  if (stored != fnv1a64(std::as_bytes(std::span(body.data(), body.size())))) {
    throw ChecksumError(origin + ": checkpoint checksum mismatch");
  }
  ByteReader r(body);
  r.bytes(kCkptMagic.size());
  const auto version = r.le<uint32_t>();
  if (version != kCkptVersion) throw VersionError(origin + ": checkpoint version " + std::to_string(version));
  const auto hlen = r.le<uint32_t>();
  json header = json::parse(r.bytes(hlen));
  TransformerConfig cfg = TransformerConfig::from_json(header.at("config"));
  const HeadMode mode = parse_head_mode(header.at("head_mode").get<std::string>());
  ParamLayout layout(cfg, mode);
  if (r.remaining() != layout.total() * 4) throw FormatError(origin + ": parameter payload size mismatch");
  std::vector<float> p(layout.total());
  auto payload = r.bytes(layout.total() * 4);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const uint32_t bits = get_le<uint32_t>(reinterpret_cast<const unsigned char*>(payload.data()) + 4 * i);
    std::memcpy(&p[i], &bits, sizeof bits);
  }
  TransformerModel m(cfg, mode, std::move(p));
  m.metadata = header.value("metadata", json::object());
  const auto& table = header.at("tensors");
  if (table.size() != layout.tensors().size()) throw FormatError(origin + ": tensor table mismatch");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& spec = layout.tensors()[i];
    if (table[i].at("name").get<std::string>() != spec.name ||
        table[i].at("checksum").get<std::string>() != hex64(m.tensor_checksum(spec))) {
      throw ChecksumError(origin + ": tensor " + spec.name + " failed verification");
    }
  }
  return m;
}

void save_checkpoint(const TransformerModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(model));
}

TransformerModel load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace dsfp
