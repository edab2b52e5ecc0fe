// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance runner. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "growbench/growbench.hpp"
#include "support.hpp"

using namespace growbench;

namespace {

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

TrainConfig preset(const std::string& name) {
  return load_config(std::string(GROWBENCH_CONFIG_DIR) + "/" + name + ".cfg").train;
}

double median(std::vector<double> v) { return summarize(std::move(v)).median.value_or(std::nan("")); }

std::size_t total(const std::vector<std::size_t>& b) { return std::accumulate(b.begin(), b.end(), std::size_t{0}); }

// Runs are cached by label so criteria can share them.
class Runs {
public:
  const ComparisonRow& get(const std::string& label, const TrainConfig& cfg) {
    auto it = rows_.find(label);
    if (it == rows_.end()) {
      std::cerr << "running " << label << " x" << kSeeds.size() << "\n";
      auto t = compare({{label, cfg}}, kSeeds);
      for (const auto& f : t.rows[0].failures) std::cerr << "  " << label << " failed: " << f << "\n";
      it = rows_.emplace(label, std::move(t.rows[0])).first;
    }
    return it->second;
  }

private:
  std::map<std::string, ComparisonRow> rows_;
};

TrainConfig with_policy(TrainConfig c, PolicyKind k) {
  c.policy.kind = k;
  return c;
}

const ComparisonRow& policy_row(Runs& runs, const std::string& ps, PolicyKind k) {
  return runs.get(ps + "/" + std::string(policy_name(k)), with_policy(preset(ps), k));
}

Verdict criterion1() {
  Verdict v;
  Rng rng(99);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double tr = 100.0 * rng.uniform();
    const double va = 100.0 * rng.uniform();
    worst = std::max(worst, gbtest::rel_err(orl(tr, va), gbtest::ref_orl(tr, va)));
    const int tot = 2 + static_cast<int>(rng.index(400));
    const int fin = static_cast<int>(rng.index(static_cast<std::uint64_t>(tot)));
    const std::size_t n = 1 + rng.index(64);
    worst = std::max(worst, gbtest::rel_err(i_max(tot, fin, n), gbtest::ref_i_max(tot, fin, n)));
    const double im = 0.01 + 60.0 * rng.uniform();
    const double a = 20.0 * rng.uniform() - 5.0;
    const double o = 200.0 * rng.uniform() - 100.0;
    worst = std::max(worst, gbtest::rel_err(interval(im, a, o), gbtest::ref_interval(im, a, o)));
    std::vector<int> ts(1 + rng.index(30));
    std::vector<GrowthEvent> evs;
    for (int& t : ts) {
      t = static_cast<int>(rng.index(static_cast<std::uint64_t>(tot) + 1));
      evs.push_back({t, 0, 0, InitRule::Copy});
    }
    worst = std::max(worst, gbtest::rel_err(average_training_epochs(evs, tot), gbtest::ref_e_bar(ts, tot)));
  }
  v.check(worst < 1e-12, "worst relative error " + std::to_string(worst));
  v.check(i_max(180, 30, 24) == 6.25, "i_max example");
  v.check(std::abs(interval(6.25, 4.0, 4.30) - 3.5903) < 5e-5, "interval example");
  const std::vector<GrowthEvent> ex{{2, 0, 0, InitRule::Copy}, {4, 0, 0, InitRule::Copy}, {6, 0, 0, InitRule::Copy}};
  v.check(average_training_epochs(ex, 10) == 6.0, "E-bar example");
  if (v.pass) v.detail = "worst relative error " + std::to_string(worst) + " over 10000 inputs";
  return v;
}

Verdict criterion2() {
  Verdict v;
  double worst = 0.0;
  for (const char* text : {"res:16x2-16x2-16x2-16x2", "plain:16x2-12x1-8x2"}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      ArchSpec a = parse_arch(text);
      a.input_dim = 6;
      a.num_classes = 4;
      const Network net = build_network(a, seed);
      const double e = gbtest::max_fd_rel_error(net, gbtest::random_matrix(4, 6, seed + 100, 0.3),
                                                gbtest::random_labels(4, 4, seed + 200));
      worst = std::max(worst, e);
      v.check(e < 1e-5, std::string(text) + " seed " + std::to_string(seed) + ": " + std::to_string(e));
    }
  }
  if (v.pass) v.detail = "worst relative error " + std::to_string(worst);
  return v;
}

Verdict criterion3(Runs& runs) {
  Verdict v;
  int checked = 0;
  for (const char* ps : {"overfit", "underfit"}) {
    const TrainConfig base = preset(ps);
    const ArchSpec seed = parse_arch(base.seed_arch);
    const ArchSpec target = parse_arch(base.target_arch);
    const std::size_t n = count_added_blocks(seed, target);
    std::vector<std::size_t> target_blocks;
    for (const auto& s : target.stages) target_blocks.push_back(s.blocks);
    const long period = std::max(1L, round_half_up(i_max(base.epochs, base.min_finetune, n)));
    for (auto k : {PolicyKind::FraGrow, PolicyKind::Periodic, PolicyKind::Convergent}) {
      const auto& row = policy_row(runs, ps, k);
      const std::string tag = std::string(ps) + "/" + std::string(policy_name(k));
      v.check(row.failures.empty(), tag + " had failed runs");
      for (std::size_t i = 0; i < row.runs.size(); ++i) {
        const RunResult& r = row.runs[i];
        const std::string id = tag + " seed " + std::to_string(kSeeds[i]);
        v.check(r.events.size() == n, id + ": " + std::to_string(r.events.size()) + " events");
        v.check(r.metrics.back().blocks == target_blocks, id + ": final architecture differs from target");
        const auto at_target = std::count_if(r.metrics.begin(), r.metrics.end(), [&](const EpochMetrics& m) {
          return total(m.blocks) == total(target_blocks);
        });
        v.check(at_target >= base.min_finetune, id + ": " + std::to_string(at_target) + " epochs at target");
        if (k == PolicyKind::FraGrow) {
          int prev = 0;
          for (const auto& e : r.events) {
            v.check(e.epoch - prev <= period, id + ": gap " + std::to_string(e.epoch - prev) + " > period " +
                                                  std::to_string(period));
            prev = e.epoch;
          }
        }
        ++checked;
      }
    }
  }
  if (v.pass) v.detail = std::to_string(checked) + " runs satisfy every contract";
  return v;
}

Verdict criterion4(Runs& runs) {
  Verdict v;
  const double slow = runs.get("overfit-slow", preset("overfit-slow")).train_error.median.value_or(NAN);
  const double fast = runs.get("overfit-fast", preset("overfit-fast")).train_error.median.value_or(NAN);
  const double van = runs.get("overfit-vanilla", preset("overfit-vanilla")).train_error.median.value_or(NAN);
  v.check(slow >= fast, "slow < fast");
  v.check(fast >= van, "fast < vanilla");
  v.check(slow - van >= 1.0, "slow-vanilla gap below 1pp");
  const std::string nums = "train error medians slow " + fmt(slow) + " fast " + fmt(fast) + " vanilla " + fmt(van);
  v.detail = v.pass ? nums : v.detail + " (" + nums + ")";
  return v;
}

double end_of_growth_orl(const RunResult& r) {
  for (auto it = r.metrics.rbegin(); it != r.metrics.rend(); ++it)
    if (it->grew) return it->orl;
  return NAN;
}

Verdict criterion5(Runs& runs) {
  Verdict v;
  const auto& over = policy_row(runs, "overfit", PolicyKind::FraGrow);
  const auto& under = policy_row(runs, "underfit", PolicyKind::FraGrow);
  std::vector<double> oo, uo;
  for (const auto& r : over.runs) oo.push_back(end_of_growth_orl(r));
  for (const auto& r : under.runs) uo.push_back(end_of_growth_orl(r));
  const double mo = median(oo), mu = median(uo);
  const double eo = over.e_bar.median.value_or(NAN), eu = under.e_bar.median.value_or(NAN);
  v.check(mo - mu >= 10.0, "ORL gap below 10pp");
  v.check(eu > eo, "E-bar not larger on underfit");
  const std::string nums = "end-of-growth ORL overfit " + fmt(mo) + " underfit " + fmt(mu) + "; E-bar overfit " +
                           fmt(eo) + " underfit " + fmt(eu);
  v.detail = v.pass ? nums : v.detail + " (" + nums + ")";
  return v;
}

Verdict criterion6(Runs& runs) {
  Verdict v;
  std::string nums;
  for (const char* ps : {"underfit", "overfit"}) {
    const double f = policy_row(runs, ps, PolicyKind::FraGrow).test_error.median.value_or(NAN);
    const double p = policy_row(runs, ps, PolicyKind::Periodic).test_error.median.value_or(NAN);
    const double c = policy_row(runs, ps, PolicyKind::Convergent).test_error.median.value_or(NAN);
    if (std::string(ps) == "underfit") {
      v.check(f <= p, "underfit: fragrow worse than periodic");
      v.check(f <= c, "underfit: fragrow worse than convergent");
    } else {
      v.check(f <= std::min({f, p, c}) + 0.5, "overfit: fragrow more than 0.5pp behind the best");
    }
    nums += std::string(nums.empty() ? "" : "; ") + ps + " test error fragrow " + fmt(f) + " periodic " + fmt(p) +
            " convergent " + fmt(c);
  }
  v.detail = v.pass ? nums : v.detail + " (" + nums + ")";
  return v;
}

Verdict criterion7() {
  Verdict v;
  gbtest::TempDir dir;

  TrainConfig c = preset("overfit");
  c.epochs = 40;
  c.min_finetune = 16;  // keeps the check short; 8 blocks are still grown
  RunResult a = run(c);
  RunResult b = run(c);
  a.wall_seconds = b.wall_seconds = 0.0;
  write_metrics(a, dir.file("a.jsonl"));
  write_metrics(b, dir.file("b.jsonl"));
  v.check(gbtest::read_bytes(dir.file("a.jsonl")) == gbtest::read_bytes(dir.file("b.jsonl")),
          "metrics files differ between repeated runs");

  Rng rng(5);
  Dataset ds;
  ds.num_classes = 10;
  ds.features = Matrix(64, 28 * 28);
  for (double& x : ds.features.values()) x = static_cast<double>(rng.index(256)) / 255.0;
  for (int i = 0; i < 64; ++i) ds.labels.push_back(static_cast<std::uint32_t>(i % 10));
  write_idx(ds, 28, 28, dir.file("img"), dir.file("lab"));
  const Dataset back = load_idx(dir.file("img"), dir.file("lab"));
  v.check(back == ds, "IDX values changed on round trip");
  write_idx(back, 28, 28, dir.file("img2"), dir.file("lab2"));
  v.check(gbtest::read_bytes(dir.file("img")) == gbtest::read_bytes(dir.file("img2")) &&
              gbtest::read_bytes(dir.file("lab")) == gbtest::read_bytes(dir.file("lab2")),
          "IDX bytes changed on round trip");

  for (const char* name : {"overfit", "underfit", "overfit-slow", "overfit-fast", "overfit-vanilla"}) {
    const CliConfig cfg = load_config(std::string(GROWBENCH_CONFIG_DIR) + "/" + name + ".cfg");
    std::istringstream in(format_config(cfg));
    const CliConfig echo = parse_config(in, "echo");
    v.check(echo == cfg && format_config(echo) == format_config(cfg), std::string("echo differs for ") + name);
  }
  if (v.pass) v.detail = "metrics, IDX and config echo are stable";
  return v;
}

Verdict criterion8(Runs& runs) {
  Verdict v;
  const TrainConfig base = preset("underfit");
  const std::size_t n = count_added_blocks(parse_arch(base.seed_arch), parse_arch(base.target_arch));
  const double im = i_max(base.epochs, base.min_finetune, n);
  // Beyond ~35pp the logistic term underflows relative to 1 and the three
  // intervals coincide in double precision.
  for (double o = -20.0; o <= 30.0; o += 0.25)
    v.check(interval(im, 2.0, o) > interval(im, 4.0, o) && interval(im, 4.0, o) > interval(im, 6.0, o),
            "interval not strictly decreasing in alpha at ORL " + fmt(o));

  std::vector<double> eb;
  for (double alpha : {2.0, 4.0, 6.0}) {
    TrainConfig c = base;
    c.policy.kind = PolicyKind::FraGrow;
    c.policy.alpha = alpha;
    const std::string label = alpha == 4.0 ? "underfit/fragrow" : "underfit/fragrow/alpha" + fmt(alpha);
    eb.push_back(runs.get(label, c).e_bar.median.value_or(NAN));
  }
  v.check(eb[0] >= eb[1] && eb[1] >= eb[2], "measured E-bar increases with alpha");
  const std::string nums = "E-bar medians alpha 2 " + fmt(eb[0]) + ", 4 " + fmt(eb[1]) + ", 6 " + fmt(eb[2]);
  v.detail = v.pass ? nums : v.detail + " (" + nums + ")";
  return v;
}

}  // namespace

int main() {
  Runs runs;
  std::vector<std::pair<int, Verdict>> results;
  const auto guarded = [&](int id, auto&& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail << std::endl;
    results.emplace_back(id, v);
  };
  guarded(1, [] { return criterion1(); });
  guarded(2, [] { return criterion2(); });
  guarded(3, [&] { return criterion3(runs); });
  guarded(4, [&] { return criterion4(runs); });
  guarded(5, [&] { return criterion5(runs); });
  guarded(6, [&] { return criterion6(runs); });
  guarded(7, [] { return criterion7(); });
  guarded(8, [&] { return criterion8(runs); });
  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.second.pass; });
  std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
