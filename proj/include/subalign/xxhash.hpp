// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace subalign {

/// XXH64 digest, bit-compatible with the reference implementation.
std::uint64_t xxh64(const void* data, std::size_t len, std::uint64_t seed = 0);

inline std::uint64_t xxh64(std::span<const std::byte> bytes, std::uint64_t seed = 0) {
  return xxh64(bytes.data(), bytes.size(), seed);
}

inline std::uint64_t xxh64(std::string_view s, std::uint64_t seed = 0) {
  return xxh64(s.data(), s.size(), seed);
}

/// Streaming form; feeding the same bytes in any chunking gives `xxh64`.
class Xxh64 {
 public:
  explicit Xxh64(std::uint64_t seed = 0);

  void update(const void* data, std::size_t len);
  std::uint64_t digest() const;

 private:
  std::uint64_t v_[4];
  std::uint64_t seed_;
  std::uint64_t total_ = 0;
  unsigned char buf_[32];
  std::size_t buffered_ = 0;
};

/// 16 lowercase hex digits.
std::string to_hex(std::uint64_t h);

}  // namespace subalign
