#include "dsfp/train/scaling.h"

#include <cstdio>
#include <sstream>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"

namespace dsfp {

std::string_view to_string(ScalingAxis a) { return a == ScalingAxis::kModelSize ? "model_size" : "train_tokens"; }

ScalingAxis parse_scaling_axis(std::string_view s) {
  if (s == "model_size" || s == "model-size") return ScalingAxis::kModelSize;
  if (s == "train_tokens" || s == "train-tokens" || s == "tokens") return ScalingAxis::kTrainTokens;
  throw InvalidArgument("unknown scaling axis: " + std::string(s));
}

json ScalingGrid::to_json() const {
  json pts = json::array();
  for (const auto& p : points) {
    json j{{"name", p.name}, {"value", p.value}, {"ok", p.ok}, {"record", p.record}};
    if (p.ok) j["accuracy"] = p.accuracy;
    if (!p.error.empty()) j["error"] = p.error;
    pts.push_back(std::move(j));
  }
  return json{{"axis", to_string(axis)}, {"points", pts}};
}

std::string ScalingGrid::format_table() const {
  std::ostringstream os;
  os << (axis == ScalingAxis::kModelSize ? "model" : "train tokens") << "\taccuracy\n";
  char buf[64];
  for (const auto& p : points) {
    if (p.ok) {
      std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * p.accuracy);
      os << p.name << '\t' << buf << '\n';
    } else {
      os << p.name << "\tfailed: " << p.error << '\n';
    }
  }
  return os.str();
}

ScalingGrid run_scaling_grid(ScalingAxis axis, std::vector<ScalingPoint> points,
                             const std::function<EvalReport(const ScalingPoint&)>& run_point) {
  if (points.empty()) throw InvalidArgument("scaling grid needs at least one point");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].value > points[i - 1].value)) throw InvalidArgument("grid points must be strictly increasing");
  }
  ScalingGrid grid;
  grid.axis = axis;
  for (auto& p : points) {
    try {
      auto report = run_point(p);
      p.ok = true;
      p.accuracy = report.accuracy;
      p.record["report"] = report.to_json();
    } catch (const std::exception& e) {
      p.ok = false;
      p.error = e.what();
    }
    grid.points.push_back(std::move(p));
  }
  return grid;
}

namespace {

void check_data(const GridData& d) {
  if (!d.train || !d.test || !d.tokenizer) throw InvalidArgument("grid needs train rows, test set and tokenizer");
}

EvalReport finetune_and_eval(TransformerModel model, const RowSet& rows, const GridData& d, json& record) {
  TrainLog log;
  auto clf = finetune_classifier(std::move(model), rows, d.finetune, &log);
  record["finetune_tokens"] = log.tokens_seen;
  record["body_checksum"] = hex64(clf.body_checksum());
  TransformerClassifier c(clf, *d.tokenizer);
  return evaluate(c, *d.test);
}

}  // namespace

ScalingGrid run_token_grid(const TransformerConfig& cfg, const std::vector<std::size_t>& budgets,
                           const GridData& data) {
  check_data(data);
  std::optional<TransformerModel> backbone;
  if (data.pretrain) backbone = pretrain_lm(build_transformer(cfg, HeadMode::kLm), *data.pretrain, data.pretrain_hyper);
  std::vector<ScalingPoint> points;
  for (auto b : budgets) {
    ScalingPoint p;
    p.name = std::to_string(b);
    p.value = static_cast<double>(b);
    points.push_back(p);
  }
  return run_scaling_grid(ScalingAxis::kTrainTokens, std::move(points), [&](const ScalingPoint& p) {
    auto rows = take_token_budget(*data.train, static_cast<std::size_t>(p.value));
    auto model = backbone ? replace_head(*backbone, cfg.n_classes) : build_transformer(cfg, HeadMode::kClass);
    json rec;
    auto report = finetune_and_eval(std::move(model), rows, data, rec);
    report.metadata["point"] = rec;
    return report;
  });
}

ScalingGrid run_model_grid(const std::vector<std::string>& presets, const TransformerConfig& shape,
                           const GridData& data) {
  check_data(data);
  std::vector<ScalingPoint> points;
  std::vector<TransformerConfig> configs;
  for (const auto& name : presets) {
    auto cfg = preset_config(name);
    cfg.context_length = shape.context_length;
    cfg.vocab_size = shape.vocab_size;
    cfg.n_classes = shape.n_classes;
    cfg.seed = shape.seed;
    ScalingPoint p;
    p.name = name;
    p.value = static_cast<double>(analytic_parameter_count(cfg, HeadMode::kLm));
    points.push_back(p);
    configs.push_back(cfg);
  }
  std::size_t idx = 0;
  return run_scaling_grid(ScalingAxis::kModelSize, std::move(points), [&](const ScalingPoint& p) {
    const auto& cfg = configs[idx++];
    TransformerModel model = build_transformer(cfg, HeadMode::kLm);
    json rec;
    if (data.pretrain) {
      const auto budget = static_cast<std::size_t>(kComputeOptimalTokensPerParam * p.value);
      TrainLog log;
      model = pretrain_lm(std::move(model), take_token_budget(*data.pretrain, budget), data.pretrain_hyper, &log);
      rec["pretrain_tokens"] = log.tokens_seen;
      rec["tokens_per_param"] = kComputeOptimalTokensPerParam;
    }
    auto report = finetune_and_eval(replace_head(model, cfg.n_classes), *data.train, data, rec);
    report.metadata["point"] = rec;
    return report;
  });
}

}  // namespace dsfp
