// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/dataset_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "subalign/errors.hpp"
#include "subalign/xxhash.hpp"

namespace subalign {
namespace {

constexpr unsigned char kMagic[4] = {0x53, 0x41, 0x46, 0x31};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto b = static_cast<const std::byte*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::byte>(u & 0xFF));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }
  std::vector<std::byte>& buffer() { return out_; }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> b) : b_(b) {}
  template <class T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
      u = static_cast<std::make_unsigned_t<T>>(
          (static_cast<std::uint64_t>(u) << 8) |
          std::to_integer<std::uint8_t>(b_[pos_ + i]));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError(FormatErrorKind::truncated, "unexpected end of data");
  }
  std::span<const std::byte> b_;
  std::size_t pos_ = 0;
};

bool mul_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return __builtin_mul_overflow(a, b, &out);
}

struct Layout {
  std::uint64_t feature_bytes = 0;
  std::uint64_t label_bytes = 0;
  std::uint64_t total = 0;
};

Layout layout_for(std::uint64_t n, std::uint64_t d, bool has_labels) {
  Layout l;
  std::uint64_t cells = 0;
  if (mul_overflows(n, d, cells) || mul_overflows(cells, 4, l.feature_bytes) ||
      (has_labels && mul_overflows(n, 4, l.label_bytes)) ||
      __builtin_add_overflow(l.feature_bytes, l.label_bytes, &l.total) ||
      __builtin_add_overflow(l.total, kSafHeaderSize + 8, &l.total)) {
    throw FormatError(FormatErrorKind::shape_overflow,
                      "declared shape " + std::to_string(n) + "x" + std::to_string(d) +
                          " overflows 64-bit sizes");
  }
  return l;
}

struct Decoded {
  SafInfo info;
  DomainDataset ds;
};

Decoded decode(std::span<const std::byte> bytes) {
  if (bytes.size() < 4) throw FormatError(FormatErrorKind::truncated, "file shorter than magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, "expected SAF1 magic 53 41 46 31");
  }
  Reader r(bytes.subspan(4));
  Decoded out;
  SafInfo& info = out.info;
  info.version = r.le<std::uint32_t>();
  if (info.version != kSafVersion) {
    throw FormatError(FormatErrorKind::version_mismatch,
                      "file version " + std::to_string(info.version) + ", reader supports " +
                          std::to_string(kSafVersion));
  }
  info.rows = r.le<std::uint64_t>();
  info.cols = r.le<std::uint64_t>();
  const std::uint8_t flag = r.le<std::uint8_t>();
  if (flag > 1) throw FormatError(FormatErrorKind::malformed, "has_labels must be 0 or 1");
  info.has_labels = flag == 1;
  info.num_classes = r.le<std::uint32_t>();

  const Layout l = layout_for(info.rows, info.cols, info.has_labels);
  if (info.rows > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
      info.cols > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
      info.num_classes > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw FormatError(FormatErrorKind::shape_overflow, "declared shape exceeds addressable range");
  }
  if (bytes.size() < l.total) {
    throw FormatError(FormatErrorKind::truncated,
                      "declared " + std::to_string(l.total) + " bytes, file has " +
                          std::to_string(bytes.size()));
  }
  if (bytes.size() > l.total) {
    throw FormatError(FormatErrorKind::malformed,
                      std::to_string(bytes.size() - l.total) + " trailing bytes after checksum");
  }

  const std::size_t body = static_cast<std::size_t>(l.total - 8);
  Reader tail(bytes.subspan(body));
  info.checksum = tail.le<std::uint64_t>();
  const std::uint64_t actual = xxh64(bytes.data(), body);
  if (actual != info.checksum) {
    throw FormatError(FormatErrorKind::checksum_mismatch,
                      "stored " + to_hex(info.checksum) + ", computed " + to_hex(actual));
  }

  DomainDataset& ds = out.ds;
  ds.num_classes = static_cast<int>(info.num_classes);
  ds.features.resize(static_cast<Index>(info.rows), static_cast<Index>(info.cols));
  for (Index i = 0; i < ds.features.size(); ++i) {
    const float f = std::bit_cast<float>(r.le<std::uint32_t>());
    if (!std::isfinite(f)) {
      throw FormatError(FormatErrorKind::non_finite,
                        "feature " + std::to_string(i) + " is not finite");
    }
    ds.features.data()[i] = static_cast<double>(f);
  }
  if (info.has_labels) {
    Labels labels(static_cast<std::size_t>(info.rows));
    for (auto& y : labels) {
      y = r.le<std::int32_t>();
      if (y < 0 || static_cast<std::uint32_t>(y) >= info.num_classes) {
        throw FormatError(FormatErrorKind::malformed,
                          "label " + std::to_string(y) + " outside [0, " +
                              std::to_string(info.num_classes) + ")");
      }
    }
    ds.labels = std::move(labels);
  }
  return out;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

void DomainDataset::validate() const {
  if (!labels) return;
  if (static_cast<Index>(labels->size()) != features.rows()) {
    throw ParameterError("dataset '" + domain_tag + "': " + std::to_string(labels->size()) +
                         " labels for " + std::to_string(features.rows()) + " rows");
  }
  for (int y : *labels) {
    if (y < 0 || y >= num_classes) {
      throw ParameterError("dataset '" + domain_tag + "': label " + std::to_string(y) +
                           " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

std::vector<std::byte> encode_features(const DomainDataset& ds) {
  ds.validate();
  if (ds.num_classes < 0) throw ParameterError("num_classes must be >= 0");
  Writer w;
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(kSafVersion);
  w.le<std::uint64_t>(static_cast<std::uint64_t>(ds.size()));
  w.le<std::uint64_t>(static_cast<std::uint64_t>(ds.dim()));
  w.le<std::uint8_t>(ds.has_labels() ? 1 : 0);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ds.num_classes));
  for (Index i = 0; i < ds.features.size(); ++i) {
    const float f = static_cast<float>(ds.features.data()[i]);
    if (!std::isfinite(f)) {
      throw FormatError(FormatErrorKind::non_finite,
                        "feature " + std::to_string(i) + " is not representable as a finite float32");
    }
    w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(f));
  }
  if (ds.labels) {
    for (int y : *ds.labels) w.le<std::int32_t>(y);
  }
  const std::uint64_t h = xxh64(w.buffer().data(), w.buffer().size());
  w.le<std::uint64_t>(h);
  return std::move(w.buffer());
}

DomainDataset decode_features(std::span<const std::byte> bytes, std::string domain_tag) {
  DomainDataset ds = decode(bytes).ds;
  ds.domain_tag = std::move(domain_tag);
  return ds;
}

void write_features(const std::string& path, const DomainDataset& ds) {
  write_file_atomic(path, encode_features(ds));
}

DomainDataset read_features(const std::string& path) {
  return decode_features(read_file_bytes(path), stem_of(path));
}

SafInfo validate_features_file(const std::string& path) {
  return decode(read_file_bytes(path)).info;
}

DomainDataset read_csv(const std::string& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  auto split_row = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw FormatError(FormatErrorKind::malformed, path + ": empty CSV");
  const std::vector<std::string> header = split_row(line);
  int label_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "label") {
      if (label_col >= 0) throw FormatError(FormatErrorKind::malformed, path + ": two label columns");
      label_col = static_cast<int>(j);
    }
  }
  const Index dim = static_cast<Index>(header.size()) - (label_col >= 0 ? 1 : 0);

  std::vector<double> values;
  Labels labels;
  Index rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      throw FormatError(FormatErrorKind::malformed,
                        path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      if (static_cast<int>(j) == label_col) {
        int y = 0;
        const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), y);
        if (ec != std::errc() || p != c.data() + c.size() || y < 0) {
          throw FormatError(FormatErrorKind::malformed,
                            path + ":" + std::to_string(lineno) + ": bad label '" + c + "'");
        }
        labels.push_back(y);
      } else {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
        if (ec != std::errc() || p != c.data() + c.size()) {
          throw FormatError(FormatErrorKind::malformed,
                            path + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
        }
        if (!std::isfinite(v)) {
          throw FormatError(FormatErrorKind::non_finite,
                            path + ":" + std::to_string(lineno) + ": non-finite value");
        }
        values.push_back(v);
      }
    }
    ++rows;
  }

  DomainDataset ds;
  ds.domain_tag = stem_of(path);
  ds.features = Eigen::Map<const Matrix>(values.data(), rows, dim);
  if (label_col >= 0) {
    const int max_label = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
    ds.num_classes = num_classes > 0 ? num_classes : max_label + 1;
    if (max_label >= ds.num_classes) {
      throw FormatError(FormatErrorKind::malformed,
                        path + ": label " + std::to_string(max_label) + " outside [0, " +
                            std::to_string(ds.num_classes) + ")");
    }
    ds.labels = std::move(labels);
  } else {
    ds.num_classes = num_classes;
  }
  return ds;
}

DomainDataset read_dataset(const std::string& path) {
  const std::vector<std::byte> bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
    return decode_features(bytes, stem_of(path));
  }
  return read_csv(path);
}

SplitIndices split_indices(Index n, double fraction, Rng& rng) {
  if (n < 2) throw ParameterError("split: need at least 2 rows, got " + std::to_string(n));
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("split: fraction must lie in (0, 1)");
  const Index first = std::clamp<Index>(
      static_cast<Index>(std::floor(fraction * static_cast<double>(n) + 0.5)), 1, n - 1);
  const std::vector<Index> perm = rng.permutation(n);
  SplitIndices out;
  out.first.assign(perm.begin(), perm.begin() + first);
  out.second.assign(perm.begin() + first, perm.end());
  return out;
}

DomainDataset subset(const DomainDataset& ds, std::span<const Index> rows) {
  DomainDataset out;
  out.features = gather_rows(ds.features, rows);
  if (ds.labels) out.labels = gather(*ds.labels, rows);
  out.domain_tag = ds.domain_tag;
  out.num_classes = ds.num_classes;
  return out;
}

std::pair<DomainDataset, DomainDataset> split(const DomainDataset& ds, double fraction, Rng& rng) {
  const SplitIndices idx = split_indices(ds.size(), fraction, rng);
  return {subset(ds, idx.first), subset(ds, idx.second)};
}

std::vector<std::byte> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> out(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size))) {
    throw IoError("failed reading '" + path + "'");
  }
  return out;
}

void write_file_atomic(const std::string& path, std::span<const std::byte> bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path + "'");
  }
}

void write_file_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

}  // namespace subalign
