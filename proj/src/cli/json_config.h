#pragma once

#include <istream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsfp/common/io.h"

namespace dsfp::cli {

// Reads a RunConfig JSON document as CLI11 config items. Top-level scalars
// and arrays set root options; a top-level object is the section of the
// subcommand with that name. Objects inside a section are passed to the
// option as a JSON string.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace dsfp::cli
