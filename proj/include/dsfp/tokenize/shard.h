#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dsfp/common/io.h"
#include "dsfp/tokenize/packing.h"

namespace dsfp {

// Shard file layout, all integers little-endian:
//
//   offset  size  field
//   0       8     magic "DSFPSHRD"
//   8       2     format version (u16)
//   10      4     context_length (u32)
//   14      4     vocab_size (u32)
//   18      2     label (u16)
//   20      4     row_count (u32)
//   24      4*row_count*(context_length+1)   token ids (u32)
//   end-8   8     FNV-1a 64 over every preceding byte (u64)
inline constexpr std::array<char, 8> kShardMagic = {'D', 'S', 'F', 'P', 'S', 'H', 'R', 'D'};
inline constexpr uint16_t kShardVersion = 1;
inline constexpr std::size_t kShardHeaderBytes = 24;
inline constexpr std::size_t kShardTrailerBytes = 8;
inline constexpr std::size_t kTokenBytes = 4;

struct ShardHeader {
  uint16_t version = kShardVersion;
  uint32_t context_length = 0;
  uint32_t vocab_size = 0;
  LabelId label = 0;
  uint32_t row_count = 0;
};

struct Shard {
  ShardHeader header;
  RowBlock rows;
  uint64_t checksum = 0;

  // A shard with fewer rows than the writer's rows_per_shard is the trailing
  // partial shard of its dataset.
  bool is_partial(std::size_t rows_per_shard = kDefaultRowsPerShard) const {
    return header.row_count < rows_per_shard;
  }
};

constexpr std::size_t shard_file_size(std::size_t row_count, std::size_t context_length) {
  return kShardHeaderBytes + row_count * (context_length + 1) * kTokenBytes + kShardTrailerBytes;
}

std::string encode_shard(const RowBlock& rows, uint32_t vocab_size);
Shard decode_shard(std::string_view bytes, const std::string& origin = "<memory>");

// Returns the checksum written to the trailer.
uint64_t write_shard(const RowBlock& rows, uint32_t vocab_size, const std::filesystem::path& path);
Shard read_shard(const std::filesystem::path& path);

// Describes a directory of shards produced by one packing run.
struct ShardEntry {
  std::string file;  // relative to the manifest's directory
  LabelId label = 0;
  uint32_t row_count = 0;
  uint64_t checksum = 0;
  bool partial = false;
};

struct ShardManifest {
  static constexpr int kVersion = 1;
  uint32_t context_length = 0;
  uint32_t vocab_size = 0;
  uint32_t rows_per_shard = kDefaultRowsPerShard;
  std::string tokenizer_fingerprint;
  std::vector<std::string> label_names;
  std::vector<ShardEntry> shards;
  json metadata = json::object();

  json to_json() const;
  static ShardManifest from_json(const json& j);
  void save(const std::filesystem::path& dir) const;
  static ShardManifest load(const std::filesystem::path& dir);
  static constexpr std::string_view kFileName = "shards.json";
};

// Splits `rows` into files of at most rows_per_shard rows. The last file may
// be partial. Entries are appended to `manifest`.
void write_shard_set(const RowBlock& rows, uint32_t vocab_size, std::size_t rows_per_shard,
                     const std::filesystem::path& dir, const std::string& prefix, ShardManifest& manifest);

// Loads every shard of a manifest, grouped by label index.
std::vector<RowBlock> load_rows_by_label(const std::filesystem::path& dir, const ShardManifest& manifest);

}  // namespace dsfp
