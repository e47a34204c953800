// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subalign/core.hpp"
#include "subalign/rng.hpp"

namespace subalign {

/// Feature rows of one domain, with labels when known.
struct DomainDataset {
  Matrix features;
  std::optional<Labels> labels;
  std::string domain_tag;
  int num_classes = 0;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws ParameterError unless label count and range are consistent.
  void validate() const;
};

/// SAF1 feature file, all fields little-endian:
///
///   "SAF1" | u32 version = 1 | u64 n | u64 D | u8 has_labels | u32 K
///   | n*D float32, row-major | n int32 labels (if has_labels)
///   | u64 XXH64 (seed 0) of every preceding byte
///
/// Features are narrowed to float32 on write and widened on read, so a
/// read-write cycle reproduces the file exactly.
inline constexpr std::uint32_t kSafVersion = 1;
inline constexpr std::size_t kSafHeaderSize = 29;

std::vector<std::byte> encode_features(const DomainDataset& ds);

/// Throws FormatError with the matching kind; nothing is returned on failure.
DomainDataset decode_features(std::span<const std::byte> bytes, std::string domain_tag = {});

void write_features(const std::string& path, const DomainDataset& ds);
DomainDataset read_features(const std::string& path);

struct SafInfo {
  std::uint32_t version = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  bool has_labels = false;
  std::uint32_t num_classes = 0;
  std::uint64_t checksum = 0;
};

/// Full structural check of a SAF1 file: header, size, checksum, finiteness
/// and label range. Throws FormatError on the first violation.
SafInfo validate_features_file(const std::string& path);

/// CSV with a header row. A column named `label` holds class indices; every
/// other column is a feature. `num_classes` 0 infers K as max label + 1.
DomainDataset read_csv(const std::string& path, int num_classes = 0);

/// Reads `path` as SAF1 when it starts with the SAF1 magic, else as CSV.
DomainDataset read_dataset(const std::string& path);

/// Disjoint, exhaustive random partition of [0, n). The first part holds
/// round(fraction * n) indices (halves round up), clamped to [1, n - 1].
struct SplitIndices {
  std::vector<Index> first;
  std::vector<Index> second;
};

SplitIndices split_indices(Index n, double fraction, Rng& rng);
std::pair<DomainDataset, DomainDataset> split(const DomainDataset& ds, double fraction, Rng& rng);

DomainDataset subset(const DomainDataset& ds, std::span<const Index> rows);

std::vector<std::byte> read_file_bytes(const std::string& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::span<const std::byte> bytes);
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace subalign
