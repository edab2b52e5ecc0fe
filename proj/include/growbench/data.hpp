// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "growbench/matrix.hpp"
#include "growbench/rng.hpp"

namespace growbench {

struct Dataset {
  Matrix features;                    // N x D
  std::vector<std::uint32_t> labels;  // N
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void validate(const Dataset& ds) {
  if (ds.size() == 0) throw Error("dataset is empty");
  if (ds.features.rows() != ds.size()) throw Error("dataset feature/label count mismatch");
  for (double v : ds.features.values())
    if (std::isnan(v)) throw Error("dataset contains NaN features");
  for (auto l : ds.labels)
    if (l >= ds.num_classes) throw Error("dataset label out of range");
}

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.features = Matrix(rows.size(), ds.dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = ds.features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(ds.labels[rows[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian classes

struct GaussianSpec {
  std::size_t classes = 2;
  std::size_t dims = 2;
  std::size_t per_class = 100;
  double sep = 4.0;
  double label_noise = 0.0;
  // With one mode per class the class means are the vertices of a regular
  // simplex with edge length `sep` (needs classes <= dims). With several
  // modes each class is a mixture of Gaussians whose centers are drawn
  // N(0, sep^2 / 2 I), so pairwise center distances are about sep * sqrt(dims).
  std::size_t modes_per_class = 1;
};

// Resamples round(fraction * N) distinct labels uniformly over all classes
// (a resampled label may coincide with the original).
inline void apply_label_noise(Dataset& ds, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 0.5)) throw Error("label_noise must be in [0, 0.5)");
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
  if (count == 0) return;
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  for (std::size_t i = 0; i < count; ++i)
    ds.labels[idx[i]] = static_cast<std::uint32_t>(rng.index(ds.num_classes));
}

// Unit-variance Gaussian features around per-class centers; rows are ordered
// class-major. Centers, samples and noise each come from their own sub-stream.
inline Dataset gen_gaussians(const GaussianSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2) throw Error("gen_gaussians: need at least 2 classes");
  if (spec.dims == 0 || spec.per_class == 0) throw Error("gen_gaussians: empty shape");
  if (spec.modes_per_class == 0) throw Error("gen_gaussians: modes_per_class must be >= 1");
  if (!(spec.label_noise >= 0.0 && spec.label_noise < 0.5))
    throw Error("gen_gaussians: label_noise must be in [0, 0.5)");
  if (!(spec.sep >= 0.0)) throw Error("gen_gaussians: sep must be non-negative");

  const std::size_t k = spec.classes;
  const std::size_t d = spec.dims;
  const std::size_t m = spec.modes_per_class;
  Matrix centers(k * m, d);  // row c*m + j is mode j of class c
  if (m == 1) {
    if (k > d) throw Error("gen_gaussians: simplex means need classes <= dims");
    const double scale = spec.sep / std::sqrt(2.0);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < k; ++j)
        centers(c, j) = scale * ((c == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(k));
  } else {
    Rng crng = Rng::substream(seed, "gaussians/centers");
    const double scale = spec.sep / std::sqrt(2.0);
    for (double& v : centers.values()) v = scale * crng.normal();
  }

  Rng srng = Rng::substream(seed, "gaussians/samples");
  Dataset ds;
  ds.num_classes = k;
  ds.features = Matrix(k * spec.per_class, d);
  ds.labels.resize(k * spec.per_class);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const std::size_t r = c * spec.per_class + i;
      const std::size_t mode = m == 1 ? 0 : static_cast<std::size_t>(srng.index(m));
      auto center = centers.row(c * m + mode);
      auto row = ds.features.row(r);
      for (std::size_t j = 0; j < d; ++j) row[j] = center[j] + srng.normal();
      ds.labels[r] = static_cast<std::uint32_t>(c);
    }
  Rng nrng = Rng::substream(seed, "gaussians/noise");
  apply_label_noise(ds, spec.label_noise, nrng);
  return ds;
}

// ---------------------------------------------------------------------------
// Splitting and standardization

struct SplitSpec {
  double val_fraction = 0.01;
  std::uint64_t split_seed = 0;
};

inline std::size_t split_count(std::size_t n, double fraction) {
  const auto raw = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(raw, 1, n - 1);
}

// Deterministic shuffled split; the held-out part has max(1, floor(f * N)) rows.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.size() < 2) throw Error("split: need at least 2 samples");
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0))
    throw Error("split: val_fraction must be in (0, 1)");
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = Rng::substream(spec.split_seed, "split");
  rng.shuffle(idx);
  const std::size_t nval = split_count(ds.size(), spec.val_fraction);
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nval));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(nval), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {subset(ds, train), subset(ds, val)};
}

// Per-dimension affine standardization fitted on one split, reused on others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const std::size_t d = x.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    if (x.rows() == 0) return s;
    const auto n = static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(r, j);
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = x(r, j) - s.mean[j];
        var[j] += c * c;
      }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / n);
      s.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
  }

  void apply(Matrix& x) const {
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < x.cols(); ++j) x(r, j) = (x(r, j) - mean[j]) * scale[j];
  }
};

// ---------------------------------------------------------------------------
// IDX (MNIST-style) binary files: big-endian 32-bit magic and dimensions,
// followed by unsigned bytes.

class IdxBadMagicError : public Error {
public:
  using Error::Error;
};
class IdxTruncatedError : public Error {
public:
  using Error::Error;
};
class IdxCountMismatchError : public Error {
public:
  using Error::Error;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off,
                               const std::string& path) {
  if (buf.size() < off + 4) throw IdxTruncatedError("'" + path + "': truncated IDX header");
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
         (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

inline void put_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

}  // namespace detail

// Pixels are scaled to [0, 1] (value / 255) and flattened row-major.
// num_classes is max(label) + 1, at least 2.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);
  const auto img_magic = detail::read_be32(img, 0, images_path);
  if (img_magic != kIdxImagesMagic)
    throw IdxBadMagicError("'" + images_path + "': bad IDX image magic");
  const auto lab_magic = detail::read_be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelsMagic)
    throw IdxBadMagicError("'" + labels_path + "': bad IDX label magic");
  const std::size_t n = detail::read_be32(img, 4, images_path);
  const std::size_t rows = detail::read_be32(img, 8, images_path);
  const std::size_t cols = detail::read_be32(img, 12, images_path);
  const std::size_t nl = detail::read_be32(lab, 4, labels_path);
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d) throw IdxTruncatedError("'" + images_path + "': truncated pixel data");
  if (lab.size() < 8 + nl) throw IdxTruncatedError("'" + labels_path + "': truncated label data");
  if (n != nl)
    throw IdxCountMismatchError("image count " + std::to_string(n) + " does not match label count " +
                                std::to_string(nl));
  if (n == 0) throw Error("'" + images_path + "': no images");
  Dataset ds;
  ds.features = Matrix(n, d);
  auto& fv = ds.features.values();
  for (std::size_t i = 0; i < n * d; ++i) fv[i] = static_cast<double>(img[16 + i]) / 255.0;
  ds.labels.resize(n);
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max<std::size_t>(2, max_label + 1);
  return ds;
}

// Inverse of load_idx for features that are multiples of 1/255 in [0, 1].
inline void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
                      const std::string& images_path, const std::string& labels_path) {
  if (rows * cols != ds.dim()) throw Error("write_idx: rows x cols does not match feature dim");
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw Error("cannot write '" + images_path + "'");
  detail::put_be32(img, kIdxImagesMagic);
  detail::put_be32(img, static_cast<std::uint32_t>(ds.size()));
  detail::put_be32(img, static_cast<std::uint32_t>(rows));
  detail::put_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : ds.features.values()) {
    const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    img.put(static_cast<char>(q));
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw Error("cannot write '" + labels_path + "'");
  detail::put_be32(lab, kIdxLabelsMagic);
  detail::put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (auto l : ds.labels) {
    if (l > 255) throw Error("write_idx: label does not fit in a byte");
    lab.put(static_cast<char>(l));
  }
  if (!img || !lab) throw Error("write_idx: I/O failure");
}

// CSV with a header row; every column but the last is a feature, the last is
// an integer class label.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path + "': missing header row");
  std::vector<double> values;
  std::vector<std::uint32_t> labels;
  std::size_t width = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw Error(path + ":" + std::to_string(lineno) + ": need features and a label");
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw Error(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) + " columns");
    try {
      for (std::size_t i = 0; i + 1 < cells.size(); ++i) values.push_back(std::stod(cells[i]));
      const long lbl = std::stol(cells.back());
      if (lbl < 0) throw Error("negative label");
      labels.push_back(static_cast<std::uint32_t>(lbl));
    } catch (const std::exception&) {
      throw Error(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  if (labels.empty()) throw Error("'" + path + "': no data rows");
  Dataset ds;
  ds.features = Matrix(labels.size(), width - 1);
  ds.features.values() = std::move(values);
  ds.labels = std::move(labels);
  ds.num_classes = std::max<std::size_t>(2, *std::max_element(ds.labels.begin(), ds.labels.end()) + 1);
  validate(ds);
  return ds;
}

}  // namespace growbench
