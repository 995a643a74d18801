#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace dsfp {

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

// Incremental FNV-1a (64-bit). Every step is a bijection of the state, so any
// single-byte change in the input changes the digest.
class Fnv1a64 {
 public:
  void update(std::span<const std::byte> bytes) noexcept {
    for (std::byte b : bytes) {
      state_ ^= static_cast<uint64_t>(b);
      state_ *= kFnvPrime;
    }
  }
  void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }
  uint64_t digest() const noexcept { return state_; }

 private:
  uint64_t state_ = kFnvOffset;
};

inline uint64_t fnv1a64(std::string_view s) noexcept {
  Fnv1a64 h;
  h.update(s);
  return h.digest();
}

inline uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

std::string hex64(uint64_t v);

// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// splitmix64 finalizer; used to derive independent per-stream seeds from a
// master seed.
constexpr uint64_t mix64(uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t derive_seed(uint64_t master, uint64_t stream) noexcept {
  return mix64(master ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace dsfp
