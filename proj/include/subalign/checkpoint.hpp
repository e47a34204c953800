// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "subalign/core.hpp"

namespace subalign {

/// Named float64 tensors and string fields in one binary container, little-endian:
///
///   "SAC1" | u32 version = 1 | u32 entry count
///   | entries in key order: u32 name length | name | u8 type
///       type 0 (tensor): u64 rows | u64 cols | rows*cols float64, row-major
///       type 1 (text):   u64 length | bytes
///   | u64 XXH64 (seed 0) of every preceding byte
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string& name, const Matrix& m);
  void put(const std::string& name, const RowVector& v);
  void put_text(const std::string& name, const std::string& value);

  bool has(const std::string& name) const;
  bool has_text(const std::string& name) const;

  /// Throws FormatError(malformed) naming the missing entry.
  const Matrix& tensor(const std::string& name) const;
  RowVector row_vector(const std::string& name) const;
  const std::string& text(const std::string& name) const;

  const std::map<std::string, Matrix>& tensors() const { return tensors_; }
  const std::map<std::string, std::string>& texts() const { return texts_; }

  std::vector<std::byte> encode() const;
  static Checkpoint decode(std::span<const std::byte> bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, Matrix> tensors_;
  std::map<std::string, std::string> texts_;
};

}  // namespace subalign
