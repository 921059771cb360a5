#pragma once

#include <cstdint>
#include <cstddef>
#include <string_view>

namespace smrec {

// FNV-1a 64-bit. Bit-exact across platforms; used for the hashing
// tokenizer, sparse-ID hashing and checkpoint checksums.
inline constexpr uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a64_step(uint64_t h, uint8_t byte) {
  h ^= byte;
  h *= kFnvPrime;
  return h;
}

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < len; ++i) h = fnv1a64_step(h, p[i]);
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
  return fnv1a64(s.data(), s.size(), h);
}

// Feeds a 64-bit value as 8 little-endian bytes.
inline uint64_t fnv1a64_u64le(uint64_t v, uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) h = fnv1a64_step(h, static_cast<uint8_t>(v >> (8 * i)));
  return h;
}

}  // namespace smrec
