#include "dsfp/generate/mixture.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dsfp/common/error.h"
#include "dsfp/common/parallel.h"

namespace dsfp {

json MixtureEstimate::to_json() const {
  json classes = json::array();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    json c{{"class", k}, {"count", counts[k]}, {"proportion", proportion[k]}, {"std_error", std_error[k]}};
    if (k < label_names.size()) c["name"] = label_names[k];
    classes.push_back(std::move(c));
  }
  return json{{"n", n}, {"classes", std::move(classes)}, {"metadata", metadata}};
}

std::string MixtureEstimate::format_table(const std::optional<std::vector<double>>& truth) const {
  if (truth && truth->size() != counts.size()) throw InvalidArgument("truth has the wrong number of classes");
  static constexpr int kWidth = 50;
  auto bar = [](double p) {
    const int len = static_cast<int>(std::lround(p * kWidth));
    return std::string(static_cast<std::size_t>(std::clamp(len, 0, kWidth)), '#');
  };
  std::string out;
  char line[256];
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const std::string name = k < label_names.size() ? label_names[k] : std::to_string(k);
    if (truth) {
      std::snprintf(line, sizeof line, "%-16s true %-*s %6.2f%%\n", name.c_str(), kWidth, bar((*truth)[k]).c_str(),
                    100 * (*truth)[k]);
      out += line;
      std::snprintf(line, sizeof line, "%-16s est  %-*s %6.2f%% +- %.2f\n", "", kWidth, bar(proportion[k]).c_str(),
                    100 * proportion[k], 100 * std_error[k]);
    } else {
      std::snprintf(line, sizeof line, "%-16s %-*s %6.2f%% +- %.2f\n", name.c_str(), kWidth, bar(proportion[k]).c_str(),
                    100 * proportion[k], 100 * std_error[k]);
    }
    out += line;
  }
  std::snprintf(line, sizeof line, "n = %zu\n", n);
  out += line;
  return out;
}

MixtureEstimate mixture_from_predictions(const std::vector<LabelId>& predicted, std::size_t n_classes) {
  if (predicted.empty()) throw InvalidArgument("no sequences to estimate a mixture from");
  if (n_classes < 2) throw InvalidArgument("mixture estimation needs at least two classes");
  MixtureEstimate m;
  m.counts.assign(n_classes, 0);
  for (LabelId p : predicted) {
    if (p >= n_classes) throw InvalidArgument("prediction outside the class range");
    ++m.counts[p];
  }
  m.n = predicted.size();
  const double n = static_cast<double>(m.n);
  for (std::size_t c : m.counts) {
    const double p = static_cast<double>(c) / n;
    m.proportion.push_back(p);
    m.std_error.push_back(std::sqrt(p * (1 - p) / n));
  }
  return m;
}

MixtureEstimate estimate_mixture(const Classifier& classifier, const Corpus& sequences,
                                 const std::vector<std::string>& label_names) {
  if (sequences.empty()) throw InvalidArgument("no sequences to estimate a mixture from");
  if (classifier.n_classes() < 2) throw InvalidArgument("mixture estimation needs at least two classes");
  std::vector<LabelId> pred(sequences.size());
  parallel_for(sequences.size(), [&](std::size_t i) { pred[i] = classifier.predict(sequences[i].text); });
  MixtureEstimate m = mixture_from_predictions(pred, classifier.n_classes());
  m.label_names = label_names;
  m.metadata["classifier"] = classifier.kind();
  m.metadata["source"] = sequences.name();
  return m;
}

EvalReport classify_external(const Classifier& classifier, const Corpus& files, const LabelRegistry& registry) {
  if (registry.size() != classifier.n_classes()) {
    throw InvalidArgument("label registry has " + std::to_string(registry.size()) + " names, classifier has " +
                          std::to_string(classifier.n_classes()) + " classes");
  }
  for (const auto& [label, count] : files.manifest()) {
    if (!registry.contains(label)) throw InvalidArgument("label " + std::to_string(label) + " is not registered");
  }
  EvalReport r = evaluate(classifier, files);
  r.label_names = registry.names();
  r.metadata["external"] = true;
  return r;
}

}  // namespace dsfp
