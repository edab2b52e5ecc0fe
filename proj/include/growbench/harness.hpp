// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "growbench/arch.hpp"
#include "growbench/data.hpp"
#include "growbench/metrics.hpp"
#include "growbench/morph.hpp"
#include "growbench/network.hpp"
#include "growbench/optim.hpp"
#include "growbench/timing.hpp"

namespace growbench {

enum class DataSource { Gaussians, Idx, Csv };

inline std::string_view data_source_name(DataSource s) {
  switch (s) {
    case DataSource::Gaussians: return "gaussians";
    case DataSource::Idx: return "idx";
    case DataSource::Csv: return "csv";
  }
  return "?";
}

inline std::optional<DataSource> parse_data_source(std::string_view s) {
  if (s == "gaussians") return DataSource::Gaussians;
  if (s == "idx") return DataSource::Idx;
  if (s == "csv") return DataSource::Csv;
  return std::nullopt;
}

struct DataSpec {
  DataSource source = DataSource::Gaussians;
  GaussianSpec gaussians;          // per_class counts the train+validation pool
  std::size_t test_per_class = 200;
  std::uint64_t data_seed = 1;
  double val_fraction = 0.01;
  std::uint64_t split_seed = 1;
  bool standardize = true;
  std::string train_images, train_labels, test_images, test_labels;  // idx
  std::string train_csv, test_csv;                                     // csv

  friend bool operator==(const DataSpec&, const DataSpec&) = default;
};

// Train accuracy fed to ORL: a dedicated full pass at epoch end, or the
// running average over the epoch's training batches.
enum class TrainAccMode { Full, Running };

struct TrainConfig {
  std::string seed_arch = "res:16x1-16x1";
  std::string target_arch = "res:16x4-16x4";
  PolicyParams policy;
  WhereRule where = WhereRule::Sequential;
  InitRule init = InitRule::Copy;
  double moment_decay = 0.99;
  int epochs = 180;
  int min_finetune = 30;
  SgdHyper sgd;
  std::size_t batch_size = 128;
  TrainAccMode train_acc_mode = TrainAccMode::Full;
  std::uint64_t run_seed = 1;
  DataSpec data;
};

struct PreparedData {
  Dataset train;
  Dataset val;
  Dataset test;
};

inline PreparedData prepare_data(const DataSpec& spec) {
  Dataset pool;
  Dataset test;
  switch (spec.source) {
    case DataSource::Gaussians: {
      // One noise-free draw; per class, the first per_class rows feed
      // train+val and the rest form a clean test set. Label noise touches
      // the train+val pool only.
      GaussianSpec g = spec.gaussians;
      const std::size_t total = g.per_class + spec.test_per_class;
      g.per_class = total;
      g.label_noise = 0.0;
      const Dataset all = gen_gaussians(g, spec.data_seed);
      std::vector<std::size_t> pool_rows, test_rows;
      for (std::size_t c = 0; c < g.classes; ++c)
        for (std::size_t i = 0; i < total; ++i)
          (i < spec.gaussians.per_class ? pool_rows : test_rows).push_back(c * total + i);
      pool = subset(all, pool_rows);
      test = subset(all, test_rows);
      Rng nrng = Rng::substream(spec.data_seed, "gaussians/noise");
      apply_label_noise(pool, spec.gaussians.label_noise, nrng);
      break;
    }
    case DataSource::Idx:
      pool = load_idx(spec.train_images, spec.train_labels);
      test = load_idx(spec.test_images, spec.test_labels);
      break;
    case DataSource::Csv:
      pool = load_csv(spec.train_csv);
      test = load_csv(spec.test_csv);
      break;
  }
  if (test.size() == 0) throw Error("test split is empty");
  if (pool.dim() != test.dim()) throw Error("train and test feature dimensions differ");
  const std::size_t classes = std::max(pool.num_classes, test.num_classes);
  pool.num_classes = test.num_classes = classes;
  auto [train, val] = split(pool, {spec.val_fraction, spec.split_seed});
  if (spec.standardize) {
    const auto st = Standardizer::fit(train.features);
    st.apply(train.features);
    st.apply(val.features);
    st.apply(test.features);
  }
  return {std::move(train), std::move(val), std::move(test)};
}

inline ArchSpec resolve_arch(const std::string& text, const PreparedData& data) {
  ArchSpec a = parse_arch(text);
  a.input_dim = data.train.dim();
  a.num_classes = data.train.num_classes;
  return a;
}

struct EvalFragment {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double train_loss = 0.0;
  double orl = 0.0;
};

// Full-pass accuracies on all three splits with ORL attached.
inline EvalFragment evaluate(const Network& net, const Dataset& train, const Dataset& val,
                             const Dataset& test) {
  const auto tr = score(net, train.features, train.labels);
  const auto va = score(net, val.features, val.labels);
  const auto te = score(net, test.features, test.labels);
  return {tr.accuracy, va.accuracy, te.accuracy, tr.loss, orl(tr.accuracy, va.accuracy)};
}

inline void validate_config(const TrainConfig& c) {
  if (c.epochs <= 0) throw Error("epochs must be positive");
  if (c.min_finetune < 0) throw Error("min_finetune_epochs must be non-negative");
  if (c.epochs <= c.min_finetune) throw Error("epochs must exceed min_finetune_epochs");
  if (c.batch_size == 0) throw Error("batch_size must be positive");
  if (!(c.sgd.lr_base > 0.0)) throw Error("lr must be positive");
  if (!(c.sgd.momentum >= 0.0 && c.sgd.momentum < 1.0)) throw Error("momentum must be in [0, 1)");
  if (!(c.sgd.weight_decay >= 0.0)) throw Error("weight_decay must be non-negative");
  if (c.policy.plateau_window < 1) throw Error("plateau_window must be >= 1");
  if (!(c.policy.plateau_epsilon >= 0.0)) throw Error("plateau_epsilon must be non-negative");
  if (!(c.moment_decay > 0.0 && c.moment_decay < 1.0)) throw Error("moment_decay must be in (0, 1)");
  const ArchSpec s = parse_arch(c.seed_arch);
  const ArchSpec t = parse_arch(c.target_arch);
  const std::size_t n = count_added_blocks(s, t);
  if (n > 0 && static_cast<std::size_t>(c.epochs - c.min_finetune) < n)
    throw Error("cannot add " + std::to_string(n) + " blocks in " +
                std::to_string(c.epochs - c.min_finetune) +
                " growth epochs; raise epochs or lower min_finetune_epochs");
}

namespace detail {

inline Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto r = src.row(rows[i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

// Ensemble for the block that precedes the next growth location.
inline std::optional<MomentEnsemble> ensemble_for_next(const Network& net, const ArchSpec& target,
                                                       const LocationPolicy& where, double decay) {
  const auto loc = where.next(net.block_counts(), target);
  if (!loc) return std::nullopt;
  const auto& blocks = net.stages[*loc].blocks;
  return MomentEnsemble(*loc, blocks.size() - 1, blocks.back().dense, decay);
}

}  // namespace detail

// Grow-train-finetune loop. Each epoch: train every batch at the current lr,
// evaluate, then (while the network is below target) ask the policy whether
// to add one block. Once the target is reached the lr decays on a cosine.
inline RunResult run(const TrainConfig& cfg, const PreparedData& data) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_config(cfg);
  const ArchSpec seed = resolve_arch(cfg.seed_arch, data);
  const ArchSpec target = resolve_arch(cfg.target_arch, data);
  const std::size_t n = count_added_blocks(seed, target);

  Network net = build_network(seed, cfg.run_seed);
  OptState opt = OptState::for_network(net, cfg.sgd);
  Rng shuffle_rng = Rng::substream(cfg.run_seed, "shuffle");
  Rng growth_rng = Rng::substream(cfg.run_seed, "growth");
  GrowthPolicy policy(cfg.policy, cfg.epochs, cfg.min_finetune, n);
  LocationPolicy where(cfg.where);
  const LrSchedule sched{cfg.sgd.lr_base, cfg.epochs};
  std::optional<int> growth_done;
  if (n == 0) growth_done = 0;

  std::optional<MomentEnsemble> ensemble;
  if (cfg.init == InitRule::Moment) ensemble = detail::ensemble_for_next(net, target, where, cfg.moment_decay);

  const Dataset& train = data.train;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  RunResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr_at(sched, epoch, growth_done);
    m.blocks = net.block_counts();

    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::uint32_t> labels;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Matrix x = detail::gather_rows(train.features, rows);
      labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = train.labels[rows[i]];
      const LossGrads lg = loss_and_grads(net, x, labels);
      sgd_step(net, lg.grads, opt, m.lr);
      loss_sum += lg.loss * static_cast<double>(rows.size());
      correct += lg.correct;
      if (ensemble) ensemble->update(net.stages[ensemble->stage()].blocks[ensemble->block_index()].dense);
    }

    const double val_acc = score(net, data.val.features, data.val.labels).accuracy;
    m.test_acc = score(net, data.test.features, data.test.labels).accuracy;
    if (cfg.train_acc_mode == TrainAccMode::Full) {
      const auto tr = score(net, train.features, train.labels);
      m.train_acc = tr.accuracy;
      m.train_loss = tr.loss;
    } else {
      m.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(train.size());
      m.train_loss = loss_sum / static_cast<double>(train.size());
    }
    m.val_acc = val_acc;
    const OrlReading reading = OrlReading::from(m.train_acc, m.val_acc);
    m.orl = reading.orl;

    const int completed = epoch + 1;
    if (net.total_blocks() < target.total_blocks() && completed < cfg.epochs &&
        policy.should_grow(completed, reading)) {
      const auto loc = where.next(net.block_counts(), target);
      if (!loc) throw Error("internal: no growth location below target size");
      NewBlock nb = make_growth_block(net, *loc, cfg.init, growth_rng, ensemble ? &*ensemble : nullptr);
      const std::size_t idx = grow(net, opt, target, *loc, std::move(nb.block));
      const GrowthEvent ev{completed, *loc, idx, nb.applied};
      policy.record(ev, reading);
      where.visited(*loc);
      result.events.push_back(ev);
      m.grew = true;
      if (net.total_blocks() == target.total_blocks()) growth_done = completed;
      if (cfg.init == InitRule::Moment)
        ensemble = detail::ensemble_for_next(net, target, where, cfg.moment_decay);
    }
    result.metrics.push_back(std::move(m));
  }

  if (net.block_counts() != target.block_counts())
    throw Error("growth budget not exhausted by the last epoch");
  if (!result.events.empty()) result.e_bar = average_training_epochs(result.events, cfg.epochs);
  result.final_test_error = 100.0 - result.metrics.back().test_acc;
  result.final_train_error = 100.0 - result.metrics.back().train_acc;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline RunResult run(const TrainConfig& cfg) { return run(cfg, prepare_data(cfg.data)); }

// ---------------------------------------------------------------------------
// Multi-seed comparison

struct Summary {
  std::optional<double> median;
  std::optional<double> spread;  // sample standard deviation; empty for < 2 values
  std::size_t count = 0;
};

inline Summary summarize(std::vector<double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  s.median = k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
  if (k >= 2) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    s.spread = std::sqrt(ss / static_cast<double>(k - 1));
  }
  return s;
}

struct LabeledConfig {
  std::string label;
  TrainConfig config;
};

struct ComparisonRow {
  std::string label;
  Summary test_error;
  Summary train_error;
  Summary e_bar;
  Summary wall_seconds;
  std::optional<double> normalized_time;  // percent of the anchor's median wall time
  std::vector<std::string> failures;      // "seed N: message"
  std::vector<RunResult> runs;            // successful runs, seed order
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::optional<std::size_t> anchor;  // row used as 100% time
};

inline bool is_vanilla(const TrainConfig& c) {
  return count_added_blocks(parse_arch(c.seed_arch), parse_arch(c.target_arch)) == 0;
}

// Runs every config under every seed (seed replaces run_seed). A failed run
// is recorded against its row and does not stop the others. Wall time is
// normalized to the first vanilla (seed == target) config when present.
inline ComparisonTable compare(const std::vector<LabeledConfig>& configs,
                               const std::vector<std::uint64_t>& seeds) {
  if (configs.empty()) throw Error("compare: no configs");
  if (seeds.empty()) throw Error("compare: no seeds");
  ComparisonTable table;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& lc = configs[i];
    ComparisonRow row;
    row.label = lc.label;
    std::vector<double> te, tr, eb, ws;
    for (auto seed : seeds) {
      try {
        TrainConfig c = lc.config;
        c.run_seed = seed;
        RunResult r = run(c);
        te.push_back(r.final_test_error);
        tr.push_back(r.final_train_error);
        if (r.e_bar) eb.push_back(*r.e_bar);
        ws.push_back(r.wall_seconds);
        row.runs.push_back(std::move(r));
      } catch (const std::exception& ex) {
        row.failures.push_back("seed " + std::to_string(seed) + ": " + ex.what());
      }
    }
    row.test_error = summarize(te);
    row.train_error = summarize(tr);
    row.e_bar = summarize(eb);
    row.wall_seconds = summarize(ws);
    if (!table.anchor && !row.runs.empty()) {
      try {
        if (is_vanilla(lc.config)) table.anchor = i;
      } catch (const std::exception&) {
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.anchor) {
    const auto& a = table.rows[*table.anchor].wall_seconds.median;
    for (auto& row : table.rows)
      if (a && *a > 0.0 && row.wall_seconds.median)
        row.normalized_time = 100.0 * *row.wall_seconds.median / *a;
  }
  return table;
}

}  // namespace growbench
