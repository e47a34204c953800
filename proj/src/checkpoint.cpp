// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "subalign/dataset_io.hpp"
#include "subalign/errors.hpp"
#include "subalign/xxhash.hpp"

namespace subalign {
namespace {

constexpr unsigned char kMagic[4] = {0x53, 0x41, 0x43, 0x31};
constexpr std::uint8_t kTensor = 0;
constexpr std::uint8_t kText = 1;

template <class T>
void put_le(std::vector<std::byte>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>(v & 0xFF));
    if constexpr (sizeof(T) > 1) v = static_cast<T>(v >> 8);
  }
}

void put_bytes(std::vector<std::byte>& out, const void* p, std::size_t n) {
  auto b = static_cast<const std::byte*>(p);
  out.insert(out.end(), b, b + n);
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::byte> b) : b_(b) {}

  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
      v = static_cast<T>((static_cast<std::uint64_t>(v) << 8) |
                         std::to_integer<std::uint8_t>(b_[pos_ + i]));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::uint64_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  void need(std::uint64_t n) const {
    if (b_.size() - pos_ < n) {
      throw FormatError(FormatErrorKind::truncated, "checkpoint ends inside an entry");
    }
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::byte> b_;
  std::size_t pos_ = 0;
};

[[noreturn]] void missing(const std::string& what, const std::string& name) {
  throw FormatError(FormatErrorKind::malformed, "checkpoint has no " + what + " '" + name + "'");
}

}  // namespace

void Checkpoint::put(const std::string& name, const Matrix& m) {
  if (!all_finite(m)) throw NumericalError("checkpoint tensor '" + name + "' is not finite");
  tensors_[name] = m;
}

void Checkpoint::put(const std::string& name, const RowVector& v) { put(name, Matrix(v)); }

void Checkpoint::put_text(const std::string& name, const std::string& value) {
  texts_[name] = value;
}

bool Checkpoint::has(const std::string& name) const { return tensors_.count(name) > 0; }

bool Checkpoint::has_text(const std::string& name) const { return texts_.count(name) > 0; }

const Matrix& Checkpoint::tensor(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) missing("tensor", name);
  return it->second;
}

RowVector Checkpoint::row_vector(const std::string& name) const {
  const Matrix& m = tensor(name);
  if (m.rows() != 1) {
    throw FormatError(FormatErrorKind::malformed, "checkpoint tensor '" + name + "' is not a row");
  }
  return m.row(0);
}

const std::string& Checkpoint::text(const std::string& name) const {
  const auto it = texts_.find(name);
  if (it == texts_.end()) missing("field", name);
  return it->second;
}

std::vector<std::byte> Checkpoint::encode() const {
  // Tensors and texts share one key space, written in merged key order.
  std::map<std::string, int> order;
  for (const auto& [k, v] : tensors_) order[k] = kTensor;
  for (const auto& [k, v] : texts_) {
    if (!order.emplace(k, kText).second) {
      throw ParameterError("checkpoint key '" + k + "' used for both a tensor and a field");
    }
  }
  std::vector<std::byte> out;
  put_bytes(out, kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(order.size()));
  for (const auto& [name, type] : order) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    put_bytes(out, name.data(), name.size());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(type));
    if (type == kTensor) {
      const Matrix& m = tensors_.at(name);
      put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
      put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
      for (Index i = 0; i < m.size(); ++i) {
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m.data()[i]));
      }
    } else {
      const std::string& s = texts_.at(name);
      put_le<std::uint64_t>(out, s.size());
      put_bytes(out, s.data(), s.size());
    }
  }
  put_le<std::uint64_t>(out, xxh64(out.data(), out.size()));
  return out;
}

Checkpoint Checkpoint::decode(std::span<const std::byte> bytes) {
  if (bytes.size() < 4) throw FormatError(FormatErrorKind::truncated, "file shorter than magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, "expected SAC1 magic 53 41 43 31");
  }
  if (bytes.size() < 4 + 4 + 4 + 8) {
    throw FormatError(FormatErrorKind::truncated, "checkpoint shorter than its header");
  }
  Cursor head(bytes.subspan(4));
  const auto version = head.le<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError(FormatErrorKind::version_mismatch,
                      "checkpoint version " + std::to_string(version));
  }
  const std::size_t body = bytes.size() - 8;
  Cursor tail(bytes.subspan(body));
  const auto stored = tail.le<std::uint64_t>();
  const auto actual = xxh64(bytes.data(), body);

  Cursor c(bytes.subspan(0, body));
  c.le<std::uint32_t>();  // magic
  c.le<std::uint32_t>();  // version
  const auto count = c.le<std::uint32_t>();
  Checkpoint out;
  auto checksum_error = [&] {
    return FormatError(FormatErrorKind::checksum_mismatch,
                       "stored " + to_hex(stored) + ", computed " + to_hex(actual));
  };
  // Truncation is reported as such; any other damage is attributed to the
  // checksum when it does not match.
  try {
    for (std::uint32_t e = 0; e < count; ++e) {
      const auto name_len = c.le<std::uint32_t>();
      const std::string name = c.str(name_len);
      const auto type = c.le<std::uint8_t>();
      if (type == kTensor) {
        const auto rows = c.le<std::uint64_t>();
        const auto cols = c.le<std::uint64_t>();
        std::uint64_t cells = 0;
        std::uint64_t nbytes = 0;
        if (__builtin_mul_overflow(rows, cols, &cells) ||
            __builtin_mul_overflow(cells, 8, &nbytes) ||
            rows > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
            cols > static_cast<std::uint64_t>(std::numeric_limits<Index>::max())) {
          throw FormatError(FormatErrorKind::shape_overflow,
                            "tensor '" + name + "' declares an impossible shape");
        }
        c.need(nbytes);
        Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
        for (Index i = 0; i < m.size(); ++i) {
          m.data()[i] = std::bit_cast<double>(c.le<std::uint64_t>());
        }
        out.tensors_[name] = std::move(m);
      } else if (type == kText) {
        const auto len = c.le<std::uint64_t>();
        out.texts_[name] = c.str(len);
      } else {
        throw FormatError(FormatErrorKind::malformed, "unknown entry type " + std::to_string(type));
      }
    }
  } catch (const FormatError& e) {
    if (e.kind() != FormatErrorKind::truncated && stored != actual) throw checksum_error();
    throw;
  }
  if (stored != actual) throw checksum_error();
  if (c.pos() != body) {
    throw FormatError(FormatErrorKind::malformed, "trailing bytes before checksum");
  }
  for (const auto& [name, m] : out.tensors_) {
    if (!all_finite(m)) {
      throw FormatError(FormatErrorKind::non_finite, "tensor '" + name + "' is not finite");
    }
  }
  return out;
}

void Checkpoint::save(const std::string& path) const { write_file_atomic(path, encode()); }

Checkpoint Checkpoint::load(const std::string& path) { return decode(read_file_bytes(path)); }

}  // namespace subalign
