// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "growbench/arch.hpp"
#include "growbench/matrix.hpp"
#include "growbench/rng.hpp"

namespace growbench {

// Affine map y = W x + b with W of shape out x in.
struct Dense {
  Matrix weight;
  std::vector<double> bias;

  Dense() = default;
  Dense(std::size_t out, std::size_t in) : weight(out, in), bias(out, 0.0) {}

  std::size_t in_width() const { return weight.cols(); }
  std::size_t out_width() const { return weight.rows(); }
  bool same_shape(const Dense& o) const {
    return weight.same_shape(o.weight) && bias.size() == o.bias.size();
  }

  friend bool operator==(const Dense&, const Dense&) = default;
};

enum class BlockKind { Plain, Residual, Downsample };

inline std::string_view block_kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::Plain: return "plain";
    case BlockKind::Residual: return "residual";
    case BlockKind::Downsample: return "downsample";
  }
  return "?";
}

// Plain:      y = relu(W x + b)
// Residual:   y = x + relu(W x + b)
// Downsample: y = relu(W x + b), in_width may differ from out_width
struct Block {
  BlockKind kind = BlockKind::Plain;
  Dense dense;

  friend bool operator==(const Block&, const Block&) = default;
};

struct Stage {
  std::size_t width = 0;
  std::vector<Block> blocks;

  friend bool operator==(const Stage&, const Stage&) = default;
};

// He-normal initialized dense layer, std = sqrt(2 / in_width), zero bias.
inline Dense he_dense(std::size_t out, std::size_t in, Rng& rng) {
  Dense d(out, in);
  const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
  for (double& w : d.weight.values()) w = std_dev * rng.normal();
  return d;
}

// Kind of block for a fresh (non-grown) slot given its input width.
inline BlockKind block_kind_for(Family family, std::size_t in_width, std::size_t width) {
  if (in_width != width) return BlockKind::Downsample;
  return family == Family::Residual ? BlockKind::Residual : BlockKind::Plain;
}

class Network {
public:
  Family family = Family::Residual;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<Stage> stages;
  Dense classifier;

  std::size_t stage_input_width(std::size_t s) const {
    return s == 0 ? input_dim : stages[s - 1].width;
  }

  std::size_t total_blocks() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.blocks.size();
    return n;
  }

  std::vector<std::size_t> block_counts() const {
    std::vector<std::size_t> out;
    for (const auto& s : stages) out.push_back(s.blocks.size());
    return out;
  }

  ArchSpec arch() const {
    ArchSpec a;
    a.family = family;
    a.input_dim = input_dim;
    a.num_classes = num_classes;
    for (const auto& s : stages) a.stages.push_back({s.width, s.blocks.size()});
    return a;
  }

  std::size_t parameter_count() const {
    std::size_t n = classifier.weight.size() + classifier.bias.size();
    for (const auto& s : stages)
      for (const auto& b : s.blocks) n += b.dense.weight.size() + b.dense.bias.size();
    return n;
  }

  friend bool operator==(const Network&, const Network&) = default;
};

inline void validate_arch(const ArchSpec& arch) {
  if (arch.stages.empty()) throw Error("architecture needs at least one stage");
  if (arch.input_dim == 0) throw Error("architecture input_dim must be positive");
  if (arch.num_classes < 2) throw Error("architecture needs at least two classes");
  for (const auto& s : arch.stages) {
    if (s.width == 0) throw Error("zero-width stage in architecture");
    if (s.blocks == 0) throw Error("stage with zero blocks in architecture");
  }
}

inline Network build_network(const ArchSpec& arch, std::uint64_t rng_seed) {
  validate_arch(arch);
  Rng rng = Rng::substream(rng_seed, "init");
  Network net;
  net.family = arch.family;
  net.input_dim = arch.input_dim;
  net.num_classes = arch.num_classes;
  std::size_t in = arch.input_dim;
  for (const auto& spec : arch.stages) {
    Stage stage;
    stage.width = spec.width;
    for (std::size_t b = 0; b < spec.blocks; ++b) {
      const std::size_t block_in = b == 0 ? in : spec.width;
      stage.blocks.push_back({block_kind_for(arch.family, block_in, spec.width),
                              he_dense(spec.width, block_in, rng)});
    }
    net.stages.push_back(std::move(stage));
    in = spec.width;
  }
  net.classifier = he_dense(arch.num_classes, in, rng);
  return net;
}

// A parameter-shaped set of tensors mirroring a Network: used for gradients
// and for optimizer momentum buffers.
struct ParamSet {
  std::vector<std::vector<Dense>> blocks;  // [stage][block]
  Dense classifier;

  static ParamSet zeros_like(const Network& net) {
    ParamSet p;
    for (const auto& s : net.stages) {
      auto& row = p.blocks.emplace_back();
      for (const auto& b : s.blocks) row.emplace_back(b.dense.out_width(), b.dense.in_width());
    }
    p.classifier = Dense(net.classifier.out_width(), net.classifier.in_width());
    return p;
  }

  bool matches(const Network& net) const {
    if (blocks.size() != net.stages.size() || !classifier.same_shape(net.classifier)) return false;
    for (std::size_t s = 0; s < blocks.size(); ++s) {
      if (blocks[s].size() != net.stages[s].blocks.size()) return false;
      for (std::size_t b = 0; b < blocks[s].size(); ++b)
        if (!blocks[s][b].same_shape(net.stages[s].blocks[b].dense)) return false;
    }
    return true;
  }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

// Visits every (parameter tensor, matching ParamSet tensor) pair in a fixed
// order: blocks stage-major, then the classifier.
template <typename NetT, typename SetT, typename Fn>
void for_each_param(NetT& net, SetT& set, Fn&& fn) {
  for (std::size_t s = 0; s < net.stages.size(); ++s)
    for (std::size_t b = 0; b < net.stages[s].blocks.size(); ++b) {
      auto& d = net.stages[s].blocks[b].dense;
      auto& g = set.blocks[s][b];
      fn(d.weight.values(), g.weight.values());
      fn(d.bias, g.bias);
    }
  fn(net.classifier.weight.values(), set.classifier.weight.values());
  fn(net.classifier.bias, set.classifier.bias);
}

namespace detail {

// out = X W^T + b  (X: B x in, out: B x out)
inline void dense_forward(const Dense& d, const Matrix& x, Matrix& out) {
  out = Matrix(x.rows(), d.out_width());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto orow = out.row(r);
    for (std::size_t o = 0; o < d.out_width(); ++o) orow[o] = d.bias[o] + dot(d.weight.row(o), xr);
  }
}

struct BlockCache {
  Matrix input;
  Matrix pre;  // W x + b
};

inline Matrix block_forward(const Block& blk, const Matrix& x, BlockCache* cache) {
  Matrix z;
  dense_forward(blk.dense, x, z);
  Matrix y = z;
  const bool residual = blk.kind == BlockKind::Residual;
  auto& yv = y.values();
  const auto& xv = x.values();
  for (std::size_t i = 0; i < yv.size(); ++i) {
    const double a = yv[i] > 0.0 ? yv[i] : 0.0;
    yv[i] = residual ? xv[i] + a : a;
  }
  if (cache) {
    cache->input = x;
    cache->pre = std::move(z);
  }
  return y;
}

inline void check_input(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim)
    throw Error("input dimension mismatch: network expects " + std::to_string(net.input_dim) +
                ", batch has " + std::to_string(batch.cols()));
}

}  // namespace detail

inline Matrix forward(const Network& net, const Matrix& batch) {
  detail::check_input(net, batch);
  Matrix h = batch;
  for (const auto& stage : net.stages)
    for (const auto& blk : stage.blocks) h = detail::block_forward(blk, h, nullptr);
  Matrix logits;
  detail::dense_forward(net.classifier, h, logits);
  return logits;
}

// Numerically stable per-row log-sum-exp.
inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct LossGrads {
  double loss = 0.0;
  std::size_t correct = 0;  // rows whose argmax matches the label
  ParamSet grads;
};

// Mean softmax cross-entropy and its exact gradients. ReLU' at 0 is taken as 0.
inline LossGrads loss_and_grads(const Network& net, const Matrix& batch,
                                std::span<const std::uint32_t> labels) {
  detail::check_input(net, batch);
  if (labels.size() != batch.rows()) throw Error("label count does not match batch rows");
  for (auto l : labels)
    if (l >= net.num_classes)
      throw Error("label " + std::to_string(l) + " out of range [0, " +
                  std::to_string(net.num_classes) + ")");

  std::vector<std::vector<detail::BlockCache>> caches(net.stages.size());
  Matrix h = batch;
  for (std::size_t s = 0; s < net.stages.size(); ++s) {
    caches[s].resize(net.stages[s].blocks.size());
    for (std::size_t b = 0; b < net.stages[s].blocks.size(); ++b)
      h = detail::block_forward(net.stages[s].blocks[b], h, &caches[s][b]);
  }
  Matrix logits;
  detail::dense_forward(net.classifier, h, logits);

  LossGrads out;
  out.grads = ParamSet::zeros_like(net);
  const std::size_t n = batch.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  // dL/dlogits = (softmax - onehot) / n
  Matrix dlogits(n, net.num_classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    auto lr = logits.row(r);
    const double lse = log_sum_exp(lr);
    loss += lse - lr[labels[r]];
    if (argmax(lr) == labels[r]) ++out.correct;
    auto dr = dlogits.row(r);
    for (std::size_t c = 0; c < lr.size(); ++c) dr[c] = std::exp(lr[c] - lse) * inv_n;
    dr[labels[r]] -= inv_n;
  }
  out.loss = loss * inv_n;

  // Backward through a dense layer: accumulates dW, db and returns dX.
  const auto dense_backward = [](const Dense& d, const Matrix& x, const Matrix& dz, Dense& g) {
    Matrix dx(x.rows(), d.in_width());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto xr = x.row(r);
      auto dzr = dz.row(r);
      auto dxr = dx.row(r);
      for (std::size_t o = 0; o < d.out_width(); ++o) {
        const double go = dzr[o];
        if (go == 0.0) continue;
        g.bias[o] += go;
        axpy(go, xr, g.weight.row(o));
        axpy(go, d.weight.row(o), dxr);
      }
    }
    return dx;
  };

  Matrix dh = dense_backward(net.classifier, h, dlogits, out.grads.classifier);
  for (std::size_t s = net.stages.size(); s-- > 0;) {
    for (std::size_t b = net.stages[s].blocks.size(); b-- > 0;) {
      const Block& blk = net.stages[s].blocks[b];
      const auto& cache = caches[s][b];
      Matrix dz = dh;
      auto& dzv = dz.values();
      const auto& zv = cache.pre.values();
      for (std::size_t i = 0; i < dzv.size(); ++i)
        if (!(zv[i] > 0.0)) dzv[i] = 0.0;
      Matrix dx = dense_backward(blk.dense, cache.input, dz, out.grads.blocks[s][b]);
      if (blk.kind == BlockKind::Residual) {
        auto& dxv = dx.values();
        const auto& dhv = dh.values();
        for (std::size_t i = 0; i < dxv.size(); ++i) dxv[i] += dhv[i];
      }
      dh = std::move(dx);
    }
  }
  return out;
}

struct SplitScore {
  double accuracy = 0.0;  // percent
  double loss = 0.0;      // mean cross-entropy
};

// Full pass over (features, labels) in chunks; accuracy in percent.
inline SplitScore score(const Network& net, const Matrix& features,
                        std::span<const std::uint32_t> labels, std::size_t chunk = 512) {
  if (features.rows() == 0) throw Error("cannot score an empty dataset");
  if (labels.size() != features.rows()) throw Error("label count does not match rows");
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t start = 0; start < features.rows(); start += chunk) {
    const std::size_t stop = std::min(features.rows(), start + chunk);
    Matrix x(stop - start, features.cols());
    for (std::size_t r = start; r < stop; ++r) {
      auto src = features.row(r);
      std::copy(src.begin(), src.end(), x.row(r - start).begin());
    }
    const Matrix logits = forward(net, x);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      auto lr = logits.row(r);
      const auto label = labels[start + r];
      if (label >= lr.size()) throw Error("label " + std::to_string(label) + " out of range");
      if (argmax(lr) == label) ++correct;
      loss += log_sum_exp(lr) - lr[label];
    }
  }
  const auto n = static_cast<double>(features.rows());
  return {100.0 * static_cast<double>(correct) / n, loss / n};
}

inline double accuracy(const Network& net, const Matrix& features,
                       std::span<const std::uint32_t> labels) {
  return score(net, features, labels).accuracy;
}

}  // namespace growbench
