#include "dsfp/tokenize/shard.h"

#include <cstdio>
#include <cstring>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"

namespace dsfp {

std::string encode_shard(const RowBlock& rows, uint32_t vocab_size) {
  if (rows.context_length == 0 || rows.context_length > 0xffffffffu) {
    throw InvalidArgument("shard context_length out of range");
  }
  if (rows.tokens.size() % rows.row_width() != 0) {
    throw InvalidArgument("row block size is not a multiple of context_length + 1");
  }
  const std::size_t row_count = rows.row_count();
  if (row_count > 0xffffffffu) throw InvalidArgument("too many rows for one shard");
  std::string out;
  out.reserve(shard_file_size(row_count, rows.context_length));
  out.append(kShardMagic.data(), kShardMagic.size());
  put_le<uint16_t>(out, kShardVersion);
  put_le<uint32_t>(out, static_cast<uint32_t>(rows.context_length));
  put_le<uint32_t>(out, vocab_size);
  put_le<uint16_t>(out, rows.label);
  put_le<uint32_t>(out, static_cast<uint32_t>(row_count));
  for (TokenId t : rows.tokens) {
    if (t >= vocab_size) throw InvalidArgument("token id " + std::to_string(t) + " >= vocab size");
    put_le<uint32_t>(out, t);
  }
  put_le<uint64_t>(out, fnv1a64(std::as_bytes(std::span(out.data(), out.size()))));
  return out;
}

Shard decode_shard(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < kShardHeaderBytes + kShardTrailerBytes) {
    throw FormatError(origin + ": too short to be a shard");
  }
  if (std::memcmp(bytes.data(), kShardMagic.data(), kShardMagic.size()) != 0) {
    throw FormatError(origin + ": bad shard magic");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - kShardTrailerBytes);
  const auto stored = get_le<uint64_t>(reinterpret_cast<const unsigned char*>(bytes.data() + body.size()));
  const uint64_t actual = fnv1a64(std::as_bytes(std::span(body.data(), body.size())));
  if (stored != actual) {
    throw ChecksumError(origin + ": shard checksum mismatch (stored " + hex64(stored) + ", computed " +
                        hex64(actual) + ")");
  }
  ByteReader r(body);
  r.bytes(kShardMagic.size());
  Shard s;
  s.header.version = r.le<uint16_t>();
  if (s.header.version != kShardVersion) {
    throw VersionError(origin + ": shard version " + std::to_string(s.header.version) + ", expected " +
                       std::to_string(kShardVersion));
  }
  s.header.context_length = r.le<uint32_t>();
  s.header.vocab_size = r.le<uint32_t>();
  s.header.label = r.le<uint16_t>();
  s.header.row_count = r.le<uint32_t>();
  if (s.header.context_length == 0) throw FormatError(origin + ": zero context length");
  const std::size_t n_tokens = std::size_t{s.header.row_count} * (s.header.context_length + 1);
  if (r.remaining() != n_tokens * kTokenBytes) {
    throw FormatError(origin + ": payload size does not match header");
  }
  s.rows.context_length = s.header.context_length;
  s.rows.label = s.header.label;
  s.rows.tokens.resize(n_tokens);
  auto payload = r.bytes(n_tokens * kTokenBytes);
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < n_tokens; ++i) {
    TokenId t = get_le<uint32_t>(p + i * kTokenBytes);
    if (t >= s.header.vocab_size) throw FormatError(origin + ": token id out of vocabulary range");
    s.rows.tokens[i] = t;
  }
  s.checksum = stored;
  return s;
}

uint64_t write_shard(const RowBlock& rows, uint32_t vocab_size, const std::filesystem::path& path) {
  std::string bytes = encode_shard(rows, vocab_size);
  write_file_atomic(path, bytes);
  return get_le<uint64_t>(reinterpret_cast<const unsigned char*>(bytes.data() + bytes.size() - 8));
}

Shard read_shard(const std::filesystem::path& path) { return decode_shard(read_file(path), path.string()); }

json ShardManifest::to_json() const {
  json entries = json::array();
  for (const auto& e : shards) {
    entries.push_back({{"file", e.file},
                       {"label", e.label},
                       {"row_count", e.row_count},
                       {"checksum", hex64(e.checksum)},
                       {"partial", e.partial}});
  }
  return json{{"version", kVersion},
              {"context_length", context_length},
              {"vocab_size", vocab_size},
              {"rows_per_shard", rows_per_shard},
              {"tokenizer", tokenizer_fingerprint},
              {"labels", label_names},
              {"shards", std::move(entries)},
              {"metadata", metadata}};
}

ShardManifest ShardManifest::from_json(const json& j) {
  if (j.value("version", 0) != kVersion) throw VersionError("unsupported shard manifest version");
  ShardManifest m;
  m.context_length = j.at("context_length").get<uint32_t>();
  m.vocab_size = j.at("vocab_size").get<uint32_t>();
  m.rows_per_shard = j.at("rows_per_shard").get<uint32_t>();
  m.tokenizer_fingerprint = j.value("tokenizer", "");
  m.label_names = j.at("labels").get<std::vector<std::string>>();
  for (const auto& e : j.at("shards")) {
    ShardEntry s;
    s.file = e.at("file").get<std::string>();
    s.label = e.at("label").get<LabelId>();
    s.row_count = e.at("row_count").get<uint32_t>();
    s.checksum = std::stoull(e.at("checksum").get<std::string>(), nullptr, 16);
    s.partial = e.value("partial", false);
    m.shards.push_back(std::move(s));
  }
  m.metadata = j.value("metadata", json::object());
  return m;
}

void ShardManifest::save(const std::filesystem::path& dir) const {
  write_file_atomic(dir / kFileName, to_json().dump(2) + "\n");
}

ShardManifest ShardManifest::load(const std::filesystem::path& dir) {
  try {
    return from_json(json::parse(read_file(dir / kFileName)));
  } catch (const json::exception& e) {
    throw FormatError((dir / kFileName).string() + ": " + e.what());
  }
}

void write_shard_set(const RowBlock& rows, uint32_t vocab_size, std::size_t rows_per_shard,
                     const std::filesystem::path& dir, const std::string& prefix, ShardManifest& manifest) {
  if (rows_per_shard == 0) throw InvalidArgument("rows_per_shard must be positive");
  std::filesystem::create_directories(dir);
  const std::size_t total = rows.row_count();
  const std::size_t width = rows.row_width();
  for (std::size_t begin = 0, index = 0; begin < total; begin += rows_per_shard, ++index) {
    const std::size_t end = std::min(total, begin + rows_per_shard);
    RowBlock part;
    part.context_length = rows.context_length;
    part.label = rows.label;
    part.tokens.assign(rows.tokens.begin() + static_cast<std::ptrdiff_t>(begin * width),
                       rows.tokens.begin() + static_cast<std::ptrdiff_t>(end * width));
    std::array<char, 32> name{};
    std::snprintf(name.data(), name.size(), "-%05zu.bin", index);
    const std::string file = prefix + name.data();
    ShardEntry e;
    e.file = file;
    e.label = rows.label;
    e.row_count = static_cast<uint32_t>(end - begin);
    e.checksum = write_shard(part, vocab_size, dir / file);
    e.partial = e.row_count < rows_per_shard;
    manifest.shards.push_back(std::move(e));
  }
}

std::vector<RowBlock> load_rows_by_label(const std::filesystem::path& dir, const ShardManifest& manifest) {
  std::vector<RowBlock> by_label(manifest.label_names.size());
  for (std::size_t l = 0; l < by_label.size(); ++l) {
    by_label[l].context_length = manifest.context_length;
    by_label[l].label = static_cast<LabelId>(l);
  }
  for (const auto& e : manifest.shards) {
    Shard s = read_shard(dir / e.file);
    if (s.header.context_length != manifest.context_length || s.header.vocab_size != manifest.vocab_size) {
      throw FormatError(e.file + ": shard geometry differs from manifest");
    }
    if (s.header.label >= by_label.size()) throw FormatError(e.file + ": label outside manifest labels");
    auto& dst = by_label[s.header.label].tokens;
    dst.insert(dst.end(), s.rows.tokens.begin(), s.rows.tokens.end());
  }
  return by_label;
}

}  // namespace dsfp
