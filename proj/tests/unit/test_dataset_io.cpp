// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "../support.hpp"
#include "subalign/dataset_io.hpp"
#include "subalign/errors.hpp"
#include "subalign/metrics.hpp"
#include "subalign/xxhash.hpp"

using namespace subalign;
namespace fs = std::filesystem;

namespace {

/// Hand-built little-endian byte stream, independent of the encoder.
struct Bytes {
  std::vector<std::byte> b;
  void u(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) b.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
  }
  void f32(float f) { u(std::bit_cast<std::uint32_t>(f), 4); }
  void text(const char* s) {
    for (; *s; ++s) b.push_back(static_cast<std::byte>(*s));
  }
  void seal() { u(xxh64(std::span<const std::byte>(b)), 8); }
};

Bytes saf_header(std::uint64_t n, std::uint64_t d, int has_labels, std::uint32_t k,
                 std::uint32_t version = 1) {
  Bytes h;
  h.text("SAF1");
  h.u(version, 4);
  h.u(n, 8);
  h.u(d, 8);
  h.u(static_cast<std::uint64_t>(has_labels), 1);
  h.u(k, 4);
  return h;
}

FormatErrorKind decode_kind(std::span<const std::byte> bytes) {
  try {
    decode_features(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return FormatErrorKind::malformed;
}

DomainDataset random_dataset(Rng& rng, Index n, Index d, int k) {
  DomainDataset ds;
  ds.features = rng.normal_matrix(n, d);
  Labels y(static_cast<std::size_t>(n));
  for (int& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  ds.labels = y;
  ds.num_classes = k;
  ds.domain_tag = "rand";
  return ds;
}

}  // namespace

TEST(Xxh64, ReferenceVectors) {
  // Values from the reference implementation.
  EXPECT_EQ(xxh64(std::string_view("")), 0xef46db3751d8e999ull);
  EXPECT_EQ(xxh64(std::string_view("a")), 0xd24ec4f1a98c6e5bull);
  EXPECT_EQ(xxh64(std::string_view("abc")), 0x44bc2cf5ad770999ull);
  EXPECT_EQ(xxh64(std::string_view("abc"), 1), 0xbea9ca8199328908ull);
  EXPECT_EQ(xxh64(std::string_view("The quick brown fox jumps over the lazy dog")),
            0x0b242d361fda71bcull);
  std::vector<unsigned char> seq(100);
  for (int i = 0; i < 100; ++i) seq[static_cast<std::size_t>(i)] = static_cast<unsigned char>(i);
  EXPECT_EQ(xxh64(seq.data(), seq.size()), 0x6ac1e58032166597ull);
  EXPECT_EQ(xxh64(seq.data(), seq.size(), 12345), 0x028ba1ae2de4de27ull);
}

TEST(Xxh64, StreamingMatchesOneShot) {
  Rng rng(71);
  std::vector<unsigned char> data(1000);
  for (auto& c : data) c = static_cast<unsigned char>(rng.below(256));
  for (int trial = 0; trial < 20; ++trial) {
    Xxh64 h(99);
    std::size_t pos = 0;
    while (pos < data.size()) {
      const std::size_t n = std::min<std::size_t>(data.size() - pos, rng.below(70));
      h.update(data.data() + pos, n);
      pos += n;
    }
    EXPECT_EQ(h.digest(), xxh64(data.data(), data.size(), 99));
  }
  EXPECT_EQ(to_hex(0xef46db3751d8e999ull), "ef46db3751d8e999");
  EXPECT_EQ(to_hex(0x1ull), "0000000000000001");
}

TEST(Saf1, LayoutMatchesHandBuiltBytes) {
  DomainDataset ds;
  ds.features.resize(2, 3);
  ds.features << 1.0, -2.5, 0.1, 3.0, 1e-3, -0.0;
  ds.labels = Labels{3, 0};
  ds.num_classes = 4;
  Bytes expect = saf_header(2, 3, 1, 4);
  for (Index i = 0; i < 6; ++i) expect.f32(static_cast<float>(ds.features.data()[i]));
  expect.u(3, 4);
  expect.u(0, 4);
  expect.seal();
  const std::vector<std::byte> got = encode_features(ds);
  EXPECT_EQ(got, expect.b);
  EXPECT_EQ(got.size(), kSafHeaderSize + 6 * 4 + 2 * 4 + 8);
}

TEST(Saf1, UnlabeledLayout) {
  DomainDataset ds;
  ds.features = Matrix::Constant(1, 2, 0.5);
  Bytes expect = saf_header(1, 2, 0, 0);
  expect.f32(0.5f);
  expect.f32(0.5f);
  expect.seal();
  EXPECT_EQ(encode_features(ds), expect.b);
  const DomainDataset back = decode_features(expect.b);
  EXPECT_FALSE(back.has_labels());
}

TEST(Saf1, RoundTripIsBitwise) {
  Rng rng(72);
  const DomainDataset ds = random_dataset(rng, 10, 4, 3);
  const std::vector<std::byte> bytes = encode_features(ds);
  const DomainDataset back = decode_features(bytes, "x");
  EXPECT_EQ(encode_features(back), bytes);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.num_classes, 3);
  EXPECT_EQ(back.domain_tag, "x");
  for (Index i = 0; i < ds.features.size(); ++i) {
    EXPECT_EQ(back.features.data()[i], static_cast<double>(static_cast<float>(ds.features.data()[i])));
  }
}

TEST(Saf1, FileRoundTripAndValidator) {
  Rng rng(73);
  const auto dir = subalign::testing::scratch_dir("saf");
  const std::string path = (dir / "domain_x.saf").string();
  const DomainDataset ds = random_dataset(rng, 12, 5, 4);
  write_features(path, ds);
  const DomainDataset back = read_features(path);
  EXPECT_EQ(back.domain_tag, "domain_x");
  EXPECT_EQ(encode_features(back), read_file_bytes(path));
  const SafInfo info = validate_features_file(path);
  EXPECT_EQ(info.rows, 12u);
  EXPECT_EQ(info.cols, 5u);
  EXPECT_TRUE(info.has_labels);
  EXPECT_EQ(info.num_classes, 4u);
  EXPECT_EQ(read_dataset(path).features, back.features);
  // No temporary files left behind.
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) entries += e.is_regular_file();
  EXPECT_EQ(entries, 1);
  fs::remove_all(dir);
}

TEST(Saf1, ErrorKinds) {
  Rng rng(74);
  const std::vector<std::byte> good = encode_features(random_dataset(rng, 4, 3, 2));

  std::vector<std::byte> b = good;
  b[3] = std::byte{'2'};
  EXPECT_EQ(decode_kind(b), FormatErrorKind::bad_magic);
  EXPECT_EQ(decode_kind(std::span(good).first(3)), FormatErrorKind::truncated);

  Bytes v2 = saf_header(1, 1, 0, 0, 2);
  v2.f32(1.0f);
  v2.seal();
  EXPECT_EQ(decode_kind(v2.b), FormatErrorKind::version_mismatch);

  Bytes flag = saf_header(1, 1, 2, 0);
  flag.f32(1.0f);
  flag.seal();
  EXPECT_EQ(decode_kind(flag.b), FormatErrorKind::malformed);

  Bytes huge = saf_header(1ull << 40, 1ull << 40, 0, 0);
  huge.seal();
  EXPECT_EQ(decode_kind(huge.b), FormatErrorKind::shape_overflow);

  for (std::size_t cut : {std::size_t{10}, kSafHeaderSize, good.size() - 1}) {
    EXPECT_EQ(decode_kind(std::span(good).first(cut)), FormatErrorKind::truncated) << cut;
  }

  b = good;
  b.push_back(std::byte{0});
  EXPECT_EQ(decode_kind(b), FormatErrorKind::malformed);

  b = good;
  b[kSafHeaderSize + 2] ^= std::byte{0x01};
  EXPECT_EQ(decode_kind(b), FormatErrorKind::checksum_mismatch);

  Bytes nan = saf_header(1, 2, 0, 0);
  nan.f32(1.0f);
  nan.f32(std::numeric_limits<float>::quiet_NaN());
  nan.seal();
  EXPECT_EQ(decode_kind(nan.b), FormatErrorKind::non_finite);

  Bytes label = saf_header(1, 1, 1, 2);
  label.f32(1.0f);
  label.u(2, 4);
  label.seal();
  EXPECT_EQ(decode_kind(label.b), FormatErrorKind::malformed);
}

TEST(Saf1, WriteRejectsNonFiniteAndBadLabels) {
  DomainDataset ds;
  ds.features = Matrix::Zero(2, 2);
  ds.features(1, 0) = std::numeric_limits<double>::infinity();
  try {
    encode_features(ds);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatErrorKind::non_finite);
  }
  ds.features(1, 0) = 1e300;  // overflows float32
  EXPECT_THROW(encode_features(ds), FormatError);
  ds.features(1, 0) = 0.0;
  ds.labels = Labels{0, 5};
  ds.num_classes = 3;
  EXPECT_THROW(encode_features(ds), ParameterError);
  ds.labels = Labels{0};
  EXPECT_THROW(encode_features(ds), ParameterError);
}

TEST(Saf1, FailedWriteLeavesNoFile) {
  const auto dir = subalign::testing::scratch_dir("saf-fail");
  DomainDataset ds;
  ds.features = Matrix::Constant(1, 1, std::numeric_limits<double>::quiet_NaN());
  const std::string path = (dir / "bad.saf").string();
  EXPECT_THROW(write_features(path, ds), FormatError);
  EXPECT_FALSE(fs::exists(path));
  EXPECT_THROW(read_features((dir / "missing.saf").string()), IoError);
  EXPECT_THROW(write_file_atomic((dir / "no" / "such" / "dir.bin").string(), std::string("x")), IoError);
  fs::remove_all(dir);
}

TEST(Csv, ReadsLabelsAndInfersClasses) {
  const auto dir = subalign::testing::scratch_dir("csv");
  const std::string path = (dir / "tiny.csv").string();
  std::ofstream(path) << "f0,label,f1\n1.5,2,-3\n0,0,4e-1\n\n";
  const DomainDataset ds = read_csv(path);
  EXPECT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.features(0, 1), -3.0);
  EXPECT_EQ(ds.features(1, 1), 0.4);
  EXPECT_EQ(ds.labels, (Labels{2, 0}));
  EXPECT_EQ(ds.num_classes, 3);
  EXPECT_EQ(ds.domain_tag, "tiny");
  EXPECT_EQ(read_csv(path, 5).num_classes, 5);
  EXPECT_EQ(read_dataset(path).labels, ds.labels);
  fs::remove_all(dir);
}

TEST(Csv, Errors) {
  const auto dir = subalign::testing::scratch_dir("csv-bad");
  auto write = [&](const char* name, const char* body) {
    const std::string p = (dir / name).string();
    std::ofstream(p) << body;
    return p;
  };
  auto kind = [](const std::string& p) {
    try {
      read_csv(p);
    } catch (const FormatError& e) {
      return e.kind();
    }
    return FormatErrorKind::bad_magic;
  };
  EXPECT_EQ(kind(write("ragged.csv", "a,b\n1,2\n3\n")), FormatErrorKind::malformed);
  EXPECT_EQ(kind(write("word.csv", "a,b\n1,x\n")), FormatErrorKind::malformed);
  EXPECT_EQ(kind(write("label.csv", "a,label\n1,-1\n")), FormatErrorKind::malformed);
  EXPECT_EQ(kind(write("nan.csv", "a\nnan\n")), FormatErrorKind::non_finite);
  EXPECT_EQ(kind(write("empty.csv", "")), FormatErrorKind::malformed);
  EXPECT_THROW(read_csv(write("over.csv", "a,label\n1,3\n"), 2), FormatError);
  EXPECT_THROW(read_csv((dir / "missing.csv").string()), IoError);
  fs::remove_all(dir);
}

TEST(Split, SizesFollowRoundHalfUp) {
  Rng rng(75);
  const SplitIndices s = split_indices(10, 0.8, rng);
  EXPECT_EQ(s.first.size(), 8u);
  EXPECT_EQ(s.second.size(), 2u);
  EXPECT_EQ(split_indices(5, 0.5, rng).first.size(), 3u);  // 2.5 rounds toward the first part
  EXPECT_EQ(split_indices(3, 0.01, rng).first.size(), 1u);
  EXPECT_EQ(split_indices(3, 0.99, rng).first.size(), 2u);
  EXPECT_THROW(split_indices(1, 0.5, rng), ParameterError);
  EXPECT_THROW(split_indices(10, 1.0, rng), ParameterError);
}

TEST(Split, SameSeedSameIndices) {
  Rng a(76);
  Rng b(76);
  const SplitIndices x = split_indices(50, 0.8, a);
  const SplitIndices y = split_indices(50, 0.8, b);
  EXPECT_EQ(x.first, y.first);
  EXPECT_EQ(x.second, y.second);
}

TEST(Split, DisjointAndExhaustive) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Index n = 2 + static_cast<Index>(rng.below(60));
    const SplitIndices s = split_indices(n, rng.uniform(0.05, 0.95), rng);
    std::set<Index> all(s.first.begin(), s.first.end());
    for (Index i : s.second) ASSERT_TRUE(all.insert(i).second) << "overlap at " << i;
    ASSERT_EQ(static_cast<Index>(all.size()), n);
    ASSERT_EQ(*all.begin(), 0);
    ASSERT_EQ(*all.rbegin(), n - 1);
  }
}

TEST(Split, DatasetPartsCarryLabels) {
  Rng rng(77);
  const DomainDataset ds = random_dataset(rng, 20, 3, 4);
  Rng r1(5);
  const auto [a, b] = split(ds, 0.75, r1);
  EXPECT_EQ(a.size(), 15);
  EXPECT_EQ(b.size(), 5);
  Rng r2(5);
  const SplitIndices idx = split_indices(20, 0.75, r2);
  for (std::size_t i = 0; i < idx.first.size(); ++i) {
    EXPECT_EQ(a.features.row(static_cast<Index>(i)), ds.features.row(idx.first[i]));
    EXPECT_EQ((*a.labels)[i], (*ds.labels)[static_cast<std::size_t>(idx.first[i])]);
  }
}

TEST(Metrics, Accuracy) {
  EXPECT_EQ(accuracy({0, 1, 2}, {0, 1, 2}), 1.0);
  EXPECT_EQ(accuracy({1, 2, 0}, {0, 1, 2}), 0.0);
  EXPECT_EQ(accuracy({0, 1, 1, 0}, {0, 1, 0, 0}), 0.75);
  EXPECT_EQ(accuracy({}, {}), 0.0);
  EXPECT_THROW(accuracy({0}, {0, 1}), ParameterError);
}

TEST(Metrics, PerClassAccuracy) {
  const PerClassAccuracy pc = per_class_accuracy({0, 1, 1, 0, 2}, {0, 1, 0, 0, 1}, 4);
  EXPECT_NEAR(pc.accuracy(0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(pc.accuracy(1), 0.5);
  EXPECT_TRUE(std::isnan(pc.accuracy(2)));
  EXPECT_TRUE(std::isnan(pc.accuracy(3)));
  EXPECT_EQ(pc.support, (std::vector<Index>{3, 2, 0, 0}));
}

TEST(Metrics, MeanStd) {
  const MeanStd ms = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.std, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(mean_std({7.0}).std, 0.0);
}
