// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "growbench/matrix.hpp"

namespace growbench {

enum class Family { Plain, Residual };

struct StageSpec {
  std::size_t width = 0;
  std::size_t blocks = 0;
  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

// Per-stage widths and block counts. Textual form is "family:w1xb1-w2xb2-...",
// e.g. "res:64x2-64x2-64x2-64x2" or "plain:32x1-16x2". input_dim and
// num_classes come from the dataset and are not part of the text.
struct ArchSpec {
  Family family = Family::Residual;
  std::vector<StageSpec> stages;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;

  std::size_t total_blocks() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.blocks;
    return n;
  }
  std::vector<std::size_t> block_counts() const {
    std::vector<std::size_t> out;
    out.reserve(stages.size());
    for (const auto& s : stages) out.push_back(s.blocks);
    return out;
  }

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

inline std::string_view family_name(Family f) { return f == Family::Residual ? "res" : "plain"; }

inline ArchSpec parse_arch(std::string_view text) {
  const auto fail = [&](const std::string& why) {
    return Error("invalid architecture '" + std::string(text) + "': " + why);
  };
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw fail("expected 'family:WxB-...'");
  ArchSpec spec;
  const auto fam = text.substr(0, colon);
  if (fam == "res" || fam == "residual") {
    spec.family = Family::Residual;
  } else if (fam == "plain") {
    spec.family = Family::Plain;
  } else {
    throw fail("unknown family '" + std::string(fam) + "'");
  }
  std::string_view rest = text.substr(colon + 1);
  if (rest.empty()) throw fail("no stages");
  while (!rest.empty()) {
    const auto dash = rest.find('-');
    const auto tok = rest.substr(0, dash);
    const auto x = tok.find('x');
    if (x == std::string_view::npos) throw fail("stage '" + std::string(tok) + "' is not WxB");
    StageSpec st;
    const auto parse_num = [&](std::string_view s, std::size_t& out) {
      const auto* end = s.data() + s.size();
      auto [p, ec] = std::from_chars(s.data(), end, out);
      if (ec != std::errc{} || p != end || s.empty())
        throw fail("bad number '" + std::string(s) + "'");
    };
    parse_num(tok.substr(0, x), st.width);
    parse_num(tok.substr(x + 1), st.blocks);
    if (st.width == 0) throw fail("zero-width stage");
    if (st.blocks == 0) throw fail("stage with zero blocks");
    spec.stages.push_back(st);
    if (dash == std::string_view::npos) break;
    rest = rest.substr(dash + 1);
    if (rest.empty()) throw fail("trailing '-'");
  }
  return spec;
}

inline std::string format_arch(const ArchSpec& spec) {
  std::string out(family_name(spec.family));
  out += ':';
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(spec.stages[i].width) + "x" + std::to_string(spec.stages[i].blocks);
  }
  return out;
}

// Seed and target must agree on everything except per-stage block counts.
inline bool compatible(const ArchSpec& a, const ArchSpec& b) {
  if (a.family != b.family || a.stages.size() != b.stages.size()) return false;
  if (a.input_dim != b.input_dim || a.num_classes != b.num_classes) return false;
  for (std::size_t i = 0; i < a.stages.size(); ++i)
    if (a.stages[i].width != b.stages[i].width) return false;
  return true;
}

}  // namespace growbench
