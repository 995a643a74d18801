#include "json_config.h"

#include <iterator>

namespace dsfp::cli {
namespace {

std::string scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  json j = json::object();
  auto dump_options = [&](const CLI::App* a, json& out) {
    for (const CLI::Option* opt : a->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        out[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        out[name] = opt->get_default_str();
      }
    }
  };
  dump_options(app, j);
  for (const CLI::App* sub : app->get_subcommands({})) {
    json s = json::object();
    dump_options(sub, s);
    if (!s.empty()) j[sub->get_name()] = std::move(s);
  }
  return j.dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json doc;
  try {
    doc = json::parse(std::string(std::istreambuf_iterator<char>(input), {}));
  } catch (const json::parse_error& e) {
    throw CLI::ConversionError(std::string("run config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CLI::ConversionError("run config must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  auto add = [&](std::vector<std::string> parents, const std::string& name, const json& v) {
    CLI::ConfigItem item;
    item.parents = std::move(parents);
    item.name = name;
    if (v.is_array()) {
      for (const auto& e : v) item.inputs.push_back(e.is_object() ? e.dump() : scalar(e));
    } else if (v.is_object()) {
      item.inputs.push_back(v.dump());
    } else {
      item.inputs.push_back(scalar(v));
    }
    items.push_back(std::move(item));
  };
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) {
      for (const auto& [k, v] : value.items()) add({key}, k, v);
    } else {
      add({}, key, value);
    }
  }
  return items;
}

}  // namespace dsfp::cli
