// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "growbench/arch.hpp"
#include "growbench/network.hpp"
#include "growbench/optim.hpp"
#include "growbench/rng.hpp"

namespace growbench {

// How a new block's weights are chosen.
//   Copy   - duplicate the preceding block
//   Moment - EMA ("historical ensemble") of the preceding block
//   Random - He-normal
//   Zero   - all zeros; test-only, not accepted from user configuration
enum class InitRule { Copy, Moment, Random, Zero };

inline std::string_view init_rule_name(InitRule r) {
  switch (r) {
    case InitRule::Copy: return "copy";
    case InitRule::Moment: return "moment";
    case InitRule::Random: return "random";
    case InitRule::Zero: return "zero";
  }
  return "?";
}

inline std::optional<InitRule> parse_init_rule(std::string_view s, bool allow_test_rules = false) {
  if (s == "copy") return InitRule::Copy;
  if (s == "moment") return InitRule::Moment;
  if (s == "random") return InitRule::Random;
  if (allow_test_rules && s == "zero") return InitRule::Zero;
  return std::nullopt;
}

enum class WhereRule { Sequential, Circulation };

inline std::string_view where_rule_name(WhereRule w) {
  return w == WhereRule::Sequential ? "sequential" : "circulation";
}

inline std::optional<WhereRule> parse_where_rule(std::string_view s) {
  if (s == "sequential") return WhereRule::Sequential;
  if (s == "circulation") return WhereRule::Circulation;
  return std::nullopt;
}

struct GrowthEvent {
  int epoch = 0;  // first epoch in which the new block is trained
  std::size_t stage = 0;
  std::size_t block_index = 0;
  InitRule init = InitRule::Copy;

  friend bool operator==(const GrowthEvent&, const GrowthEvent&) = default;
};

class DownsamplePrecedingError : public Error {
public:
  DownsamplePrecedingError()
      : Error("preceding block is a downsample block; use random initialization") {}
};

inline void check_compatible(const ArchSpec& seed, const ArchSpec& target) {
  if (!compatible(seed, target))
    throw Error("seed " + format_arch(seed) + " and target " + format_arch(target) +
                " differ in family, stage count, widths or data dimensions");
}

inline std::size_t count_added_blocks(const ArchSpec& seed, const ArchSpec& target) {
  check_compatible(seed, target);
  std::size_t n = 0;
  for (std::size_t s = 0; s < seed.stages.size(); ++s) {
    if (target.stages[s].blocks < seed.stages[s].blocks)
      throw Error("target has fewer blocks than seed in stage " + std::to_string(s));
    n += target.stages[s].blocks - seed.stages[s].blocks;
  }
  return n;
}

inline bool saturated(const std::vector<std::size_t>& current, const ArchSpec& target,
                      std::size_t stage) {
  return current[stage] >= target.stages[stage].blocks;
}

// Fill stages in order: the lowest stage still below its target count.
inline std::optional<std::size_t> next_location_sequential(const std::vector<std::size_t>& current,
                                                           const ArchSpec& target) {
  for (std::size_t s = 0; s < current.size(); ++s)
    if (!saturated(current, target, s)) return s;
  return std::nullopt;
}

// Cycle over stages starting after the last visited one; first unsaturated
// stage wins. With no visit yet the scan starts at stage 0.
inline std::optional<std::size_t> next_location_circulation(std::optional<std::size_t> last_visited,
                                                            const std::vector<std::size_t>& current,
                                                            const ArchSpec& target) {
  const std::size_t k = current.size();
  if (k == 0) return std::nullopt;
  const std::size_t start = last_visited ? (*last_visited + 1) % k : 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t s = (start + i) % k;
    if (!saturated(current, target, s)) return s;
  }
  return std::nullopt;
}

class LocationPolicy {
public:
  explicit LocationPolicy(WhereRule rule) : rule_(rule) {}

  std::optional<std::size_t> next(const std::vector<std::size_t>& current,
                                  const ArchSpec& target) const {
    return rule_ == WhereRule::Sequential ? next_location_sequential(current, target)
                                          : next_location_circulation(last_, current, target);
  }
  void visited(std::size_t stage) { last_ = stage; }
  WhereRule rule() const { return rule_; }

private:
  WhereRule rule_;
  std::optional<std::size_t> last_;
};

inline BlockKind grown_kind(Family family) {
  return family == Family::Residual ? BlockKind::Residual : BlockKind::Plain;
}

inline Block init_copy_preceding(const Block& preceding, Family family) {
  if (preceding.kind == BlockKind::Downsample) throw DownsamplePrecedingError();
  return Block{grown_kind(family), preceding.dense};
}

// Exponential moving average of one block's parameters.
class MomentEnsemble {
public:
  MomentEnsemble(std::size_t stage, std::size_t block_index, const Dense& source, double decay)
      : stage_(stage), block_(block_index), shadow_(source), decay_(decay) {
    if (!(decay > 0.0 && decay < 1.0)) throw Error("moment decay must be in (0, 1)");
  }

  // shadow <- decay * shadow + (1 - decay) * source
  void update(const Dense& source) {
    if (!source.same_shape(shadow_)) throw Error("moment ensemble: source shape changed");
    const double keep = decay_;
    const double take = 1.0 - decay_;
    auto& sw = shadow_.weight.values();
    const auto& w = source.weight.values();
    for (std::size_t i = 0; i < sw.size(); ++i) sw[i] = keep * sw[i] + take * w[i];
    for (std::size_t i = 0; i < shadow_.bias.size(); ++i)
      shadow_.bias[i] = keep * shadow_.bias[i] + take * source.bias[i];
    ++updates_;
  }

  std::size_t stage() const { return stage_; }
  std::size_t block_index() const { return block_; }
  std::size_t updates() const { return updates_; }
  double decay() const { return decay_; }
  const Dense& shadow() const { return shadow_; }

private:
  std::size_t stage_;
  std::size_t block_;
  Dense shadow_;
  double decay_;
  std::size_t updates_ = 0;
};

inline Block init_moment(const MomentEnsemble& ensemble, Family family) {
  if (ensemble.updates() == 0) throw Error("moment ensemble has never been updated");
  if (ensemble.shadow().in_width() != ensemble.shadow().out_width())
    throw DownsamplePrecedingError();
  return Block{grown_kind(family), ensemble.shadow()};
}

struct NewBlock {
  Block block;
  InitRule applied;  // may differ from the requested rule (downsample fallback)
};

// Builds the block to append to `stage` under `rule`. Copy and Moment fall
// back to Random when the preceding block is a downsample block.
inline NewBlock make_growth_block(const Network& net, std::size_t stage, InitRule rule, Rng& rng,
                                  const MomentEnsemble* ensemble = nullptr) {
  const Block& preceding = net.stages.at(stage).blocks.back();
  const std::size_t w = net.stages[stage].width;
  const Family fam = net.family;
  switch (rule) {
    case InitRule::Zero:
      return {Block{grown_kind(fam), Dense(w, w)}, rule};
    case InitRule::Random:
      return {Block{grown_kind(fam), he_dense(w, w, rng)}, rule};
    case InitRule::Copy:
      if (preceding.kind == BlockKind::Downsample)
        return {Block{grown_kind(fam), he_dense(w, w, rng)}, InitRule::Random};
      return {init_copy_preceding(preceding, fam), rule};
    case InitRule::Moment:
      if (preceding.kind == BlockKind::Downsample)
        return {Block{grown_kind(fam), he_dense(w, w, rng)}, InitRule::Random};
      if (!ensemble || ensemble->stage() != stage ||
          ensemble->block_index() != net.stages[stage].blocks.size() - 1)
        throw Error("moment init requested without an ensemble for the preceding block");
      return {init_moment(*ensemble, fam), rule};
  }
  throw Error("unknown init rule");
}

// Appends `block` to the end of `stage`. Existing parameters and momentum
// buffers are left untouched; the new block's buffers start at zero.
inline std::size_t grow(Network& net, OptState& opt, const ArchSpec& target, std::size_t stage,
                        Block block) {
  if (stage >= net.stages.size()) throw Error("grow: stage index out of range");
  if (net.stages[stage].blocks.size() >= target.stages.at(stage).blocks)
    throw Error("grow: stage " + std::to_string(stage) + " is already at its target size");
  const std::size_t w = net.stages[stage].width;
  if (block.dense.in_width() != w || block.dense.out_width() != w)
    throw Error("grow: block shape " + shape_string(block.dense.weight) + " does not match stage width " +
                std::to_string(w));
  if (block.kind == BlockKind::Downsample) throw Error("grow: cannot add a downsample block");
  if (!opt.velocity.matches(net)) throw Error("grow: optimizer state out of sync with network");
  net.stages[stage].blocks.push_back(std::move(block));
  opt.velocity.blocks[stage].emplace_back(w, w);
  return net.stages[stage].blocks.size() - 1;
}

}  // namespace growbench
