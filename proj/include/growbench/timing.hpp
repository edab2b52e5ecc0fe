// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "growbench/matrix.hpp"
#include "growbench/morph.hpp"

namespace growbench {

// When-to-grow policies. All quantities are in epochs; accuracies and the
// overfitting risk level (ORL) are in percentage points, so an ORL of 31.35
// means train accuracy exceeds validation accuracy by 31.35 points. The
// sigmoid in interval() is scale-sensitive: alpha is in the same units.

enum class PolicyKind { FraGrow, Periodic, Convergent };

inline std::string_view policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::FraGrow: return "fragrow";
    case PolicyKind::Periodic: return "periodic";
    case PolicyKind::Convergent: return "convergent";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy(std::string_view s) {
  if (s == "fragrow") return PolicyKind::FraGrow;
  if (s == "periodic") return PolicyKind::Periodic;
  if (s == "convergent") return PolicyKind::Convergent;
  return std::nullopt;
}

inline double orl(double train_acc, double val_acc) {
  const auto in_range = [](double a) { return a >= 0.0 && a <= 100.0; };
  if (!in_range(train_acc) || !in_range(val_acc))
    throw Error("orl: accuracies must be percentages in [0, 100]");
  return train_acc - val_acc;
}

struct OrlReading {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double orl = 0.0;

  static OrlReading from(double train_acc, double val_acc) {
    return {train_acc, val_acc, growbench::orl(train_acc, val_acc)};
  }
};

// Largest growth interval that still leaves min_finetune epochs after n growths.
inline double i_max(int total_epochs, int min_finetune, std::size_t n) {
  if (n == 0) throw Error("i_max: no blocks to add");
  if (min_finetune < 0 || total_epochs <= min_finetune)
    throw Error("i_max: total epochs must exceed the minimum finetuning epochs");
  return static_cast<double>(total_epochs - min_finetune) / static_cast<double>(n);
}

// I = I_max / (1 + exp(alpha - orl)). Low ORL (underfitting) shrinks the
// interval toward 0; high ORL saturates it at I_max.
inline double interval(double imax, double alpha, double orl_pp) {
  const double e = std::clamp(alpha - orl_pp, -700.0, 700.0);
  return imax / (1.0 + std::exp(e));
}

inline long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

// Mean number of epochs each added block is trained: mean of (E_T - t_i).
inline double average_training_epochs(std::span<const GrowthEvent> events, int total_epochs) {
  if (events.empty()) throw Error("average_training_epochs: no growth events");
  double sum = 0.0;
  for (const auto& e : events) {
    if (e.epoch > total_epochs) throw Error("average_training_epochs: event after the last epoch");
    sum += static_cast<double>(total_epochs - e.epoch);
  }
  return sum / static_cast<double>(events.size());
}

struct PolicyParams {
  PolicyKind kind = PolicyKind::FraGrow;
  double alpha = 4.0;
  int plateau_window = 5;         // P, convergent only
  double plateau_epsilon = 0.05;  // percentage points, convergent only
  bool freeze_interval = false;   // FRAGrow: hold I fixed between growths
};

struct PolicyState {
  int last_growth_epoch = 0;
  std::vector<GrowthEvent> events;
  std::size_t remaining = 0;
  std::vector<std::pair<int, double>> val_history;  // (epoch, val_acc)
  double alpha = 4.0;
  double imax = 0.0;
  int total_epochs = 0;
  int min_finetune = 30;
  int plateau_window = 5;
  double plateau_epsilon = 0.05;
  bool freeze_interval = false;
  std::optional<double> frozen_interval;

  static PolicyState start(const PolicyParams& p, int total_epochs, int min_finetune,
                           std::size_t n) {
    PolicyState s;
    s.remaining = n;
    s.alpha = p.alpha;
    s.total_epochs = total_epochs;
    s.min_finetune = min_finetune;
    s.plateau_window = p.plateau_window;
    s.plateau_epsilon = p.plateau_epsilon;
    s.freeze_interval = p.freeze_interval;
    if (n > 0) s.imax = i_max(total_epochs, min_finetune, n);
    return s;
  }

  int elapsed(int epoch) const { return epoch - last_growth_epoch; }
};

// Forced completion: from epoch E_T - E_F_min - remaining onward every policy
// grows once per epoch, so growth always finishes with E_F_min epochs to spare.
inline bool deadline_reached(const PolicyState& s, int epoch) {
  return static_cast<long>(epoch) >=
         static_cast<long>(s.total_epochs) - s.min_finetune - static_cast<long>(s.remaining);
}

// Interval FRAGrow compares against at this epoch.
inline double fragrow_current_interval(const PolicyState& s, const OrlReading& reading) {
  if (s.freeze_interval && s.frozen_interval) return *s.frozen_interval;
  return interval(s.imax, s.alpha, reading.orl);
}

inline bool fragrow_should_grow(const PolicyState& s, int epoch, const OrlReading& reading) {
  if (s.remaining == 0) return false;
  if (deadline_reached(s, epoch)) return true;
  const double threshold = std::max(1.0, fragrow_current_interval(s, reading));
  return static_cast<double>(s.elapsed(epoch)) >= threshold;
}

inline long periodic_period(const PolicyState& s) { return std::max(1L, round_half_up(s.imax)); }

inline bool periodic_should_grow(const PolicyState& s, int epoch) {
  if (s.remaining == 0) return false;
  if (deadline_reached(s, epoch)) return true;
  return s.elapsed(epoch) >= periodic_period(s);
}

// Stagnation: the best validation accuracy over the last P epochs does not
// beat the best accuracy before that window by more than epsilon. When the
// whole history fits in the window, the window's first value is the baseline.
inline bool plateaued(std::span<const std::pair<int, double>> history, int window, double eps) {
  const auto p = static_cast<std::size_t>(window);
  if (p == 0 || history.size() < p) return false;
  const auto split = history.size() - p;
  double recent = history[split].second;
  for (std::size_t i = split; i < history.size(); ++i) recent = std::max(recent, history[i].second);
  double before = history[split].second;
  if (split > 0) {
    before = history[0].second;
    for (std::size_t i = 0; i < split; ++i) before = std::max(before, history[i].second);
  }
  return recent <= before + eps;
}

inline bool convergent_should_grow(const PolicyState& s, int epoch) {
  if (s.remaining == 0) return false;
  if (deadline_reached(s, epoch)) return true;
  if (s.elapsed(epoch) < s.plateau_window) return false;
  return plateaued(s.val_history, s.plateau_window, s.plateau_epsilon);
}

// Owns PolicyState for a run and dispatches on the configured policy.
class GrowthPolicy {
public:
  GrowthPolicy(const PolicyParams& params, int total_epochs, int min_finetune, std::size_t n)
      : kind_(params.kind), state_(PolicyState::start(params, total_epochs, min_finetune, n)) {}

  // Called once per epoch end with `epoch` = number of completed epochs.
  bool should_grow(int epoch, const OrlReading& reading) {
    state_.val_history.emplace_back(epoch, reading.val_acc);
    switch (kind_) {
      case PolicyKind::FraGrow: return fragrow_should_grow(state_, epoch, reading);
      case PolicyKind::Periodic: return periodic_should_grow(state_, epoch);
      case PolicyKind::Convergent: return convergent_should_grow(state_, epoch);
    }
    return false;
  }

  void record(const GrowthEvent& ev, const OrlReading& reading) {
    if (state_.remaining == 0) throw Error("growth recorded with no budget left");
    if (!state_.events.empty() && ev.epoch < state_.events.back().epoch)
      throw Error("growth events must be recorded in epoch order");
    state_.events.push_back(ev);
    state_.last_growth_epoch = ev.epoch;
    --state_.remaining;
    if (state_.freeze_interval && state_.remaining > 0)
      state_.frozen_interval = interval(state_.imax, state_.alpha, reading.orl);
  }

  PolicyKind kind() const { return kind_; }
  const PolicyState& state() const { return state_; }

private:
  PolicyKind kind_;
  PolicyState state_;
};

}  // namespace growbench
