// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "growbench/matrix.hpp"
#include "growbench/morph.hpp"
#include "growbench/timing.hpp"

namespace growbench {

// One record per epoch. `blocks` are the per-stage block counts the epoch
// was trained with; `grew` marks a growth decision taken at its end.
struct EpochMetrics {
  int epoch = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double train_loss = 0.0;
  double orl = 0.0;
  double lr = 0.0;
  std::vector<std::size_t> blocks;
  bool grew = false;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct RunResult {
  std::vector<EpochMetrics> metrics;
  std::vector<GrowthEvent> events;
  std::optional<double> e_bar;  // empty when nothing was grown
  double final_test_error = 0.0;
  double final_train_error = 0.0;
  double wall_seconds = 0.0;

  int total_epochs() const { return static_cast<int>(metrics.size()); }

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

// JSON Lines: one object per epoch with the fields
//   epoch, train_acc, val_acc, test_acc, train_loss, orl, lr, blocks, grew
// followed by a footer object
//   {events: [{epoch, stage, block_index, init}], e_bar, final_test_error,
//    final_train_error, wall_seconds}
// Doubles are written in shortest round-trip form.

inline nlohmann::json to_json(const EpochMetrics& m) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  j["train_acc"] = m.train_acc;
  j["val_acc"] = m.val_acc;
  j["test_acc"] = m.test_acc;
  j["train_loss"] = m.train_loss;
  j["orl"] = m.orl;
  j["lr"] = m.lr;
  j["blocks"] = m.blocks;
  j["grew"] = m.grew;
  return j;
}

inline nlohmann::json footer_json(const RunResult& r) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : r.events)
    events.push_back({{"epoch", e.epoch},
                      {"stage", e.stage},
                      {"block_index", e.block_index},
                      {"init", std::string(init_rule_name(e.init))}});
  nlohmann::json j;
  j["events"] = std::move(events);
  j["e_bar"] = r.e_bar ? nlohmann::json(*r.e_bar) : nlohmann::json(nullptr);
  j["final_test_error"] = r.final_test_error;
  j["final_train_error"] = r.final_train_error;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline void write_metrics(const RunResult& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open metrics file '" + path + "' for writing");
  for (const auto& m : r.metrics) out << to_json(m).dump() << '\n';
  out << footer_json(r).dump() << '\n';
  out.flush();
  if (!out) throw Error("I/O failure while writing metrics file '" + path + "'");
}

inline EpochMetrics epoch_metrics_from_json(const nlohmann::json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<int>();
  m.train_acc = j.at("train_acc").get<double>();
  m.val_acc = j.at("val_acc").get<double>();
  m.test_acc = j.at("test_acc").get<double>();
  m.train_loss = j.at("train_loss").get<double>();
  m.orl = j.at("orl").get<double>();
  m.lr = j.at("lr").get<double>();
  m.blocks = j.at("blocks").get<std::vector<std::size_t>>();
  m.grew = j.at("grew").get<bool>();
  return m;
}

inline RunResult read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open metrics file '" + path + "'");
  RunResult r;
  std::string line;
  std::size_t lineno = 0;
  bool footer_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (footer_seen) throw Error(path + ":" + std::to_string(lineno) + ": data after footer");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      if (j.contains("events")) {
        for (const auto& e : j.at("events")) {
          GrowthEvent ev;
          ev.epoch = e.at("epoch").get<int>();
          ev.stage = e.at("stage").get<std::size_t>();
          ev.block_index = e.at("block_index").get<std::size_t>();
          const auto rule = parse_init_rule(e.at("init").get<std::string>(), true);
          if (!rule) throw Error("unknown init rule");
          ev.init = *rule;
          r.events.push_back(ev);
        }
        if (!j.at("e_bar").is_null()) r.e_bar = j.at("e_bar").get<double>();
        r.final_test_error = j.at("final_test_error").get<double>();
        r.final_train_error = j.at("final_train_error").get<double>();
        r.wall_seconds = j.at("wall_seconds").get<double>();
        footer_seen = true;
      } else {
        r.metrics.push_back(epoch_metrics_from_json(j));
      }
    } catch (const std::exception& ex) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (!footer_seen) throw Error(path + ": missing footer line");
  return r;
}

}  // namespace growbench
