// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations and helpers shared by the unit tests
// and the acceptance runner.
#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "growbench/growbench.hpp"

namespace gbtest {

using big = boost::multiprecision::cpp_dec_float_50;

// 50-digit versions of the timing formulas, written from their definitions
// without reusing any library code.
inline big ref_orl(double train_acc, double val_acc) { return big(train_acc) - big(val_acc); }

inline big ref_i_max(int total, int finetune, std::size_t n) {
  return (big(total) - big(finetune)) / big(static_cast<unsigned long long>(n));
}

inline big ref_interval(double imax, double alpha, double orl_pp) {
  return big(imax) / (big(1) + boost::multiprecision::exp(big(alpha) - big(orl_pp)));
}

inline big ref_e_bar(const std::vector<int>& growth_epochs, int total) {
  big sum = 0;
  for (int t : growth_epochs) sum += big(total) - big(t);
  return sum / big(static_cast<unsigned long long>(growth_epochs.size()));
}

inline double rel_err(double got, const big& want) {
  const big diff = abs(big(got) - want);
  const big scale = std::max(big(abs(want)), big(1e-300));
  return static_cast<double>(diff / scale);
}

// Central finite differences over every parameter. Returns the largest
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double max_fd_rel_error(growbench::Network net, const growbench::Matrix& x,
                               const std::vector<std::uint32_t>& labels, double eps = 1e-5,
                               double floor = 1e-6) {
  using namespace growbench;
  const LossGrads lg = loss_and_grads(net, x, labels);
  ParamSet grads = lg.grads;
  double worst = 0.0;
  const auto loss_at = [&](const Network& n) { return loss_and_grads(n, x, labels).loss; };
  for_each_param(net, grads, [&](std::vector<double>& p, std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + eps;
      const double up = loss_at(net);
      p[i] = keep - eps;
      const double down = loss_at(net);
      p[i] = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(g[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(g[i] - numeric) / denom);
    }
  });
  return worst;
}

inline growbench::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                       double scale = 1.0) {
  growbench::Rng rng(seed);
  growbench::Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline std::vector<std::uint32_t> random_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
  growbench::Rng rng(seed);
  std::vector<std::uint32_t> out(n);
  for (auto& l : out) l = static_cast<std::uint32_t>(rng.index(classes));
  return out;
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("growbench-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

// A tiny, fast configuration for harness-level tests.
inline growbench::TrainConfig tiny_config() {
  growbench::TrainConfig c;
  c.seed_arch = "plain:8x1-8x1";
  c.target_arch = "plain:8x3-8x3";
  c.epochs = 12;
  c.min_finetune = 4;
  c.batch_size = 32;
  c.sgd.lr_base = 0.05;
  c.data.gaussians.classes = 3;
  c.data.gaussians.dims = 4;
  c.data.gaussians.per_class = 60;
  c.data.gaussians.sep = 3.0;
  c.data.test_per_class = 20;
  c.data.val_fraction = 0.1;
  return c;
}

}  // namespace gbtest
