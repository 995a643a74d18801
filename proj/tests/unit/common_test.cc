#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "dsfp/common/error.h"
#include "dsfp/common/hash.h"
#include "dsfp/common/io.h"
#include "dsfp/common/parallel.h"
#include "test_support.h"

namespace dsfp {
namespace {

TEST(Hash, FnvKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Hash, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, Hex64IsFixedWidth) {
  EXPECT_EQ(hex64(0), "0000000000000000");
  EXPECT_EQ(hex64(0xdeadbeefULL), "00000000deadbeef");
}

TEST(Hash, DerivedSeedsDistinct) {
  std::set<uint64_t> seen;
  for (uint64_t m = 0; m < 20; ++m) {
    for (uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(m, s));
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(3, 4), derive_seed(3, 4));
}

TEST(Parallel, VisitsEveryIndexOnce) {
  set_max_threads(4);
  std::vector<std::atomic<int>> hits(1001);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  set_max_threads(0);
}

TEST(Parallel, PropagatesExceptions) {
  set_max_threads(3);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw InvalidArgument("boom");
               }),
               InvalidArgument);
  set_max_threads(0);
}

TEST(Io, AtomicWriteAndRead) {
  testing::TempDir dir;
  const auto p = dir / "sub" / "f.bin";
  std::filesystem::create_directories(p.parent_path());
  std::string data("a\0b\xff", 4);
  write_file_atomic(p, data);
  EXPECT_EQ(read_file(p), data);
  write_file_atomic(p, "second");
  EXPECT_EQ(read_file(p), "second");
}

TEST(Io, MissingFileIsIoError) {
  testing::TempDir dir;
  EXPECT_THROW(read_file(dir / "nope"), IoError);
}

TEST(Io, JsonlRoundTrip) {
  testing::TempDir dir;
  std::vector<json> recs{{{"id", 1}, {"text", "x\ny"}}, {{"id", "b"}, {"text", ""}}};
  write_jsonl(dir / "r.jsonl", recs);
  EXPECT_EQ(read_jsonl(dir / "r.jsonl"), recs);
}

TEST(Io, ByteReaderBounds) {
  std::string buf;
  put_le<uint32_t>(buf, 0x01020304u);
  put_le<uint16_t>(buf, 0xbeef);
  ByteReader r(buf);
  EXPECT_EQ(r.le<uint32_t>(), 0x01020304u);
  EXPECT_EQ(r.le<uint16_t>(), 0xbeef);
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_THROW(r.le<uint8_t>(), Error);
}

TEST(Errors, KindsAreStable) {
  EXPECT_EQ(InvalidArgument("x").kind(), "invalid_argument");
  EXPECT_EQ(ChecksumError("x").kind(), "checksum_mismatch");
  EXPECT_EQ(VersionError("x").kind(), "version_mismatch");
  EXPECT_EQ(EndpointError("x").kind(), "endpoint_failure");
}

}  // namespace
}  // namespace dsfp
