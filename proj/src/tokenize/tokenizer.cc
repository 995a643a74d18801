#include "dsfp/tokenize/tokenizer.h"

#include "dsfp/common/error.h"
#include "dsfp/common/io.h"
#include "dsfp/tokenize/bpe_tokenizer.h"
#include "dsfp/tokenize/word_tokenizer.h"

namespace dsfp {

std::unique_ptr<Tokenizer> load_tokenizer(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.value("format", "") == "dsfp-word-vocab") {
    return std::make_unique<WordTokenizer>(WordTokenizer::load(path));
  }
  if (doc.is_object() && doc.contains("model")) {
    return std::make_unique<BpeTokenizer>(BpeTokenizer::load_hf_json(path));
  }
  throw FormatError(path.string() + ": unrecognized vocabulary format");
}

std::vector<TokenId> prepare_test_sequence(const Tokenizer& tokenizer, std::string_view text,
                                           std::size_t context_length) {
  if (text.empty()) throw InvalidArgument("test sequence is empty");
  auto ids = tokenizer.encode(text);
  if (ids.empty()) throw InvalidArgument("test sequence encodes to zero tokens");
  if (ids.size() > context_length) ids.resize(context_length);
  return ids;
}

}  // namespace dsfp
