// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "growbench/data.hpp"
#include "support.hpp"

using namespace growbench;

namespace {

void write_raw(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> be32(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

std::vector<unsigned char> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                      unsigned char fill) {
  std::vector<unsigned char> b = {0, 0, 8, 3};
  for (auto v : {n, rows, cols}) {
    auto p = be32(v);
    b.insert(b.end(), p.begin(), p.end());
  }
  b.insert(b.end(), static_cast<std::size_t>(n) * rows * cols, fill);
  return b;
}

std::vector<unsigned char> idx_labels(std::uint32_t n) {
  std::vector<unsigned char> b = {0, 0, 8, 1};
  auto p = be32(n);
  b.insert(b.end(), p.begin(), p.end());
  for (std::uint32_t i = 0; i < n; ++i) b.push_back(static_cast<unsigned char>(i % 10));
  return b;
}

}  // namespace

TEST(Gaussians, ClassBalanceAndDeterminism) {
  GaussianSpec g;
  g.classes = 4;
  g.dims = 6;
  g.per_class = 50;
  const Dataset a = gen_gaussians(g, 3);
  EXPECT_EQ(a, gen_gaussians(g, 3));
  EXPECT_NE(a, gen_gaussians(g, 4));
  std::map<std::uint32_t, int> count;
  for (auto l : a.labels) ++count[l];
  ASSERT_EQ(count.size(), 4u);
  for (auto [k, c] : count) EXPECT_EQ(c, 50);
}

TEST(Gaussians, SimplexMeansHaveRequestedSeparation) {
  GaussianSpec g;
  g.classes = 3;
  g.dims = 5;
  g.per_class = 20000;
  g.sep = 6.0;
  const Dataset ds = gen_gaussians(g, 1);
  std::vector<std::vector<double>> mean(3, std::vector<double>(5, 0.0));
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t j = 0; j < 5; ++j) mean[ds.labels[r]][j] += ds.features(r, j) / 20000.0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < 5; ++j) d2 += (mean[a][j] - mean[b][j]) * (mean[a][j] - mean[b][j]);
      EXPECT_NEAR(std::sqrt(d2), 6.0, 0.05);
    }
}

TEST(Gaussians, LabelNoiseRate) {
  GaussianSpec g;
  g.classes = 5;
  g.dims = 5;
  g.per_class = 2000;
  g.label_noise = 0.2;
  const Dataset noisy = gen_gaussians(g, 9);
  std::size_t changed = 0;
  for (std::size_t r = 0; r < noisy.size(); ++r) changed += noisy.labels[r] != r / 2000;
  // round(0.2 N) labels are resampled uniformly; (K-1)/K of them change.
  const double expected = 0.2 * 4.0 / 5.0 * static_cast<double>(noisy.size());
  EXPECT_NEAR(static_cast<double>(changed), expected, 0.05 * expected);
}

TEST(Gaussians, RejectsBadSpecs) {
  GaussianSpec g;
  g.classes = 5;
  g.dims = 3;
  EXPECT_THROW(gen_gaussians(g, 1), Error);  // simplex needs classes <= dims
  g.modes_per_class = 2;
  EXPECT_NO_THROW(gen_gaussians(g, 1));
  g.label_noise = 0.6;
  EXPECT_THROW(gen_gaussians(g, 1), Error);
  g.label_noise = 0.0;
  g.classes = 1;
  EXPECT_THROW(gen_gaussians(g, 1), Error);
}

TEST(Split, Counts) {
  EXPECT_EQ(split_count(100, 0.01), 1u);
  EXPECT_EQ(split_count(50000, 0.01), 500u);
  EXPECT_EQ(split_count(10, 0.0), 1u);
  EXPECT_EQ(split_count(10, 1.0), 9u);
}

TEST(Split, DisjointUnionAndDeterministic) {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    Dataset ds;
    const std::size_t n = 2 + rng.index(300);
    ds.num_classes = 3;
    ds.features = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      ds.features(i, 0) = static_cast<double>(i);
      ds.labels.push_back(static_cast<std::uint32_t>(i % 3));
    }
    const SplitSpec spec{rng.uniform() * 0.5, rng.next_u64()};
    const auto [tr, va] = split(ds, spec);
    const auto [tr2, va2] = split(ds, spec);
    ASSERT_EQ(tr, tr2);
    ASSERT_EQ(va, va2);
    ASSERT_EQ(va.size(), split_count(n, spec.val_fraction));
    std::vector<double> ids;
    for (double v : tr.features.values()) ids.push_back(v);
    for (double v : va.features.values()) ids.push_back(v);
    std::sort(ids.begin(), ids.end());
    ASSERT_EQ(ids.size(), n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(ids[i], static_cast<double>(i));
  }
  Dataset one;
  one.num_classes = 2;
  one.features = Matrix(1, 1);
  one.labels = {0};
  EXPECT_THROW(split(one, {}), Error);
}

TEST(Standardizer, FitsTrainAndReusesTransform) {
  Matrix x = gbtest::random_matrix(500, 3, 1, 4.0);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 1) += 10.0;
  const auto st = Standardizer::fit(x);
  Matrix y = x;
  st.apply(y);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < y.rows(); ++r) m += y(r, j) / 500.0;
    for (std::size_t r = 0; r < y.rows(); ++r) v += (y(r, j) - m) * (y(r, j) - m) / 500.0;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-12);
  }
  Matrix constant(4, 1, 7.0);
  const auto cs = Standardizer::fit(constant);
  cs.apply(constant);
  for (double v : constant.values()) EXPECT_EQ(v, 0.0);
}

TEST(Idx, HeaderParsing) {
  gbtest::TempDir dir;
  write_raw(dir.file("img"), idx_images(10, 28, 28, 0));
  write_raw(dir.file("lab"), idx_labels(10));
  const Dataset ds = load_idx(dir.file("img"), dir.file("lab"));
  EXPECT_EQ(ds.size(), 10u);
  EXPECT_EQ(ds.dim(), 784u);
  EXPECT_EQ(ds.num_classes, 10u);
  for (double v : ds.features.row(0)) EXPECT_EQ(v, 0.0);
}

TEST(Idx, Errors) {
  gbtest::TempDir dir;
  write_raw(dir.file("img"), idx_images(10, 2, 2, 255));
  write_raw(dir.file("lab9"), idx_labels(9));
  EXPECT_THROW(load_idx(dir.file("img"), dir.file("lab9")), IdxCountMismatchError);

  auto bad = idx_images(2, 2, 2, 1);
  bad[3] = 0x04;
  write_raw(dir.file("bad"), bad);
  write_raw(dir.file("lab2"), idx_labels(2));
  EXPECT_THROW(load_idx(dir.file("bad"), dir.file("lab2")), IdxBadMagicError);
  EXPECT_THROW(load_idx(dir.file("lab2"), dir.file("lab2")), IdxBadMagicError);

  auto trunc = idx_images(2, 2, 2, 1);
  trunc.pop_back();
  write_raw(dir.file("trunc"), trunc);
  EXPECT_THROW(load_idx(dir.file("trunc"), dir.file("lab2")), IdxTruncatedError);
  write_raw(dir.file("short"), {0, 0, 8});
  EXPECT_THROW(load_idx(dir.file("short"), dir.file("lab2")), IdxTruncatedError);
  EXPECT_THROW(load_idx(dir.file("missing"), dir.file("lab2")), Error);
}

TEST(Idx, RoundTripIsBitExact) {
  gbtest::TempDir dir;
  Rng rng(12);
  Dataset ds;
  ds.num_classes = 7;
  ds.features = Matrix(25, 12);
  for (double& v : ds.features.values()) v = static_cast<double>(rng.index(256)) / 255.0;
  for (int i = 0; i < 25; ++i) ds.labels.push_back(static_cast<std::uint32_t>(rng.index(7)));
  ds.labels[0] = 6;
  write_idx(ds, 3, 4, dir.file("i"), dir.file("l"));
  const Dataset back = load_idx(dir.file("i"), dir.file("l"));
  EXPECT_EQ(back, ds);
  write_idx(back, 3, 4, dir.file("i2"), dir.file("l2"));
  EXPECT_EQ(gbtest::read_bytes(dir.file("i")), gbtest::read_bytes(dir.file("i2")));
  EXPECT_THROW(write_idx(ds, 5, 5, dir.file("x"), dir.file("y")), Error);
}

TEST(Csv, LoadsFeaturesAndLabels) {
  gbtest::TempDir dir;
  {
    std::ofstream out(dir.file("d.csv"));
    out << "x0,x1,label\n1.5,-2,0\n0,3e-1,2\n\n";
  }
  const Dataset ds = load_csv(dir.file("d.csv"));
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.labels, (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(ds.features(1, 1), 0.3);
  EXPECT_EQ(ds.num_classes, 3u);
  {
    std::ofstream out(dir.file("bad.csv"));
    out << "a,b,label\n1,2,0\n1,x,1\n";
  }
  EXPECT_THROW(load_csv(dir.file("bad.csv")), Error);
}
