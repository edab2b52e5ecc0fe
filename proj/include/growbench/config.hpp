// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "growbench/harness.hpp"

namespace growbench {

// Line-oriented config file:
//
//   # comment
//   [section]
//   key = value
//
// Sections are model, policy, data, train and output. Every key is optional;
// unknown sections and keys are errors. Command-line overrides use the same
// keys as `--section.key=value`.

class ConfigError : public Error {
public:
  using Error::Error;
};

struct OutputSpec {
  std::string metrics = "metrics.jsonl";
  std::string summary;  // empty: summary goes to stdout only
};

struct CliConfig {
  TrainConfig train;
  OutputSpec output;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || s.empty()) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s) {
  Int v{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || s.empty())
    throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

struct KeyDef {
  std::string section;
  std::string key;
  std::string note;  // echoed as a trailing comment
  std::function<void(CliConfig&, const std::string&)> set;
  std::function<std::string(const CliConfig&)> get;
};

#define GB_DOUBLE(SEC, KEY, NOTE, FIELD)                                                  \
  KeyDef{SEC, KEY, NOTE, [](CliConfig& c, const std::string& v) { c.FIELD = parse_double(v); }, \
         [](const CliConfig& c) { return format_double(c.FIELD); }}
#define GB_INT(SEC, KEY, NOTE, TYPE, FIELD)                                                      \
  KeyDef{SEC, KEY, NOTE, [](CliConfig& c, const std::string& v) { c.FIELD = parse_int<TYPE>(v); }, \
         [](const CliConfig& c) { return std::to_string(c.FIELD); }}
#define GB_STRING(SEC, KEY, NOTE, FIELD)                                           \
  KeyDef{SEC, KEY, NOTE, [](CliConfig& c, const std::string& v) { c.FIELD = v; }, \
         [](const CliConfig& c) { return c.FIELD; }}
#define GB_BOOL(SEC, KEY, NOTE, FIELD)                                                   \
  KeyDef{SEC, KEY, NOTE, [](CliConfig& c, const std::string& v) { c.FIELD = parse_bool(v); }, \
         [](const CliConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}

inline const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      KeyDef{"model", "seed", "seed network, family:WxB-WxB-...",
             [](CliConfig& c, const std::string& v) {
               parse_arch(v);
               c.train.seed_arch = v;
             },
             [](const CliConfig& c) { return c.train.seed_arch; }},
      KeyDef{"model", "target", "target network; same family and widths as seed",
             [](CliConfig& c, const std::string& v) {
               parse_arch(v);
               c.train.target_arch = v;
             },
             [](const CliConfig& c) { return c.train.target_arch; }},

      KeyDef{"policy", "name", "fragrow | periodic | convergent",
             [](CliConfig& c, const std::string& v) {
               const auto p = parse_policy(v);
               if (!p) throw ConfigError("unknown policy '" + v + "'");
               c.train.policy.kind = *p;
             },
             [](const CliConfig& c) { return std::string(policy_name(c.train.policy.kind)); }},
      GB_DOUBLE("policy", "alpha", "FRAGrow alpha in percentage points (default 4)", train.policy.alpha),
      GB_INT("policy", "plateau_window", "convergent: epochs P without improvement (default 5)", int,
             train.policy.plateau_window),
      GB_DOUBLE("policy", "plateau_epsilon", "convergent: improvement threshold in pp (default 0.05)",
                train.policy.plateau_epsilon),
      GB_BOOL("policy", "freeze_interval", "FRAGrow: hold the interval fixed between growths",
              train.policy.freeze_interval),
      KeyDef{"policy", "where", "sequential | circulation",
             [](CliConfig& c, const std::string& v) {
               const auto w = parse_where_rule(v);
               if (!w) throw ConfigError("unknown where-to-grow rule '" + v + "'");
               c.train.where = *w;
             },
             [](const CliConfig& c) { return std::string(where_rule_name(c.train.where)); }},
      KeyDef{"policy", "init", "copy | moment | random",
             [](CliConfig& c, const std::string& v) {
               const auto r = parse_init_rule(v);
               if (!r) throw ConfigError("unknown init rule '" + v + "'");
               c.train.init = *r;
             },
             [](const CliConfig& c) { return std::string(init_rule_name(c.train.init)); }},
      GB_DOUBLE("policy", "moment_decay", "EMA decay for moment init (default 0.99)", train.moment_decay),

      KeyDef{"data", "source", "gaussians | idx | csv",
             [](CliConfig& c, const std::string& v) {
               const auto s = parse_data_source(v);
               if (!s) throw ConfigError("unknown data source '" + v + "'");
               c.train.data.source = *s;
             },
             [](const CliConfig& c) { return std::string(data_source_name(c.train.data.source)); }},
      GB_INT("data", "classes", "gaussians: number of classes", std::size_t, train.data.gaussians.classes),
      GB_INT("data", "dims", "gaussians: feature dimension", std::size_t, train.data.gaussians.dims),
      GB_INT("data", "per_class", "gaussians: train+validation samples per class", std::size_t,
             train.data.gaussians.per_class),
      GB_INT("data", "test_per_class", "gaussians: clean test samples per class", std::size_t,
             train.data.test_per_class),
      GB_DOUBLE("data", "sep", "gaussians: class separation", train.data.gaussians.sep),
      GB_DOUBLE("data", "label_noise", "gaussians: fraction of train labels resampled",
                train.data.gaussians.label_noise),
      GB_INT("data", "modes_per_class", "gaussians: mixture components per class", std::size_t,
             train.data.gaussians.modes_per_class),
      GB_INT("data", "seed", "dataset generation seed", std::uint64_t, train.data.data_seed),
      GB_DOUBLE("data", "val_fraction", "held-out validation fraction (default 0.01)", train.data.val_fraction),
      GB_INT("data", "split_seed", "train/validation split seed", std::uint64_t, train.data.split_seed),
      GB_BOOL("data", "standardize", "standardize features on the train split", train.data.standardize),
      GB_STRING("data", "train_images", "idx: training images", train.data.train_images),
      GB_STRING("data", "train_labels", "idx: training labels", train.data.train_labels),
      GB_STRING("data", "test_images", "idx: test images", train.data.test_images),
      GB_STRING("data", "test_labels", "idx: test labels", train.data.test_labels),
      GB_STRING("data", "train_csv", "csv: training file", train.data.train_csv),
      GB_STRING("data", "test_csv", "csv: test file", train.data.test_csv),

      GB_INT("train", "epochs", "total epochs E_T (default 180)", int, train.epochs),
      GB_INT("train", "min_finetune_epochs", "minimum epochs at target size E_F_min (default 30)", int,
             train.min_finetune),
      GB_DOUBLE("train", "lr", "base learning rate; constant while growing, cosine after (default 0.1)",
                train.sgd.lr_base),
      GB_DOUBLE("train", "momentum", "SGD momentum (default 0.9)", train.sgd.momentum),
      GB_DOUBLE("train", "weight_decay", "L2 weight decay (default 0.0001)", train.sgd.weight_decay),
      GB_INT("train", "batch_size", "minibatch size (default 128)", std::size_t, train.batch_size),
      KeyDef{"train", "train_acc", "full | running: train accuracy used for ORL",
             [](CliConfig& c, const std::string& v) {
               if (v == "full") c.train.train_acc_mode = TrainAccMode::Full;
               else if (v == "running") c.train.train_acc_mode = TrainAccMode::Running;
               else throw ConfigError("unknown train_acc mode '" + v + "'");
             },
             [](const CliConfig& c) {
               return std::string(c.train.train_acc_mode == TrainAccMode::Full ? "full" : "running");
             }},
      GB_INT("train", "seed", "run seed for init, shuffling and growth", std::uint64_t, train.run_seed),

      GB_STRING("output", "metrics", "per-epoch JSONL metrics path", output.metrics),
      GB_STRING("output", "summary", "text summary path (empty: stdout only)", output.summary),
  };
  return table;
}

#undef GB_DOUBLE
#undef GB_INT
#undef GB_STRING
#undef GB_BOOL

inline const KeyDef* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : key_table())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

}  // namespace detail

inline void set_config_value(CliConfig& cfg, const std::string& section, const std::string& key,
                             const std::string& value) {
  const auto* def = detail::find_key(section, key);
  if (!def) throw ConfigError("unknown key '" + section + "." + key + "'");
  try {
    def->set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

inline CliConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  CliConfig cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = name + ":" + std::to_string(lineno) + ": ";
    const auto hash = line.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + "malformed section header");
      section = detail::trim(text.substr(1, text.size() - 2));
      if (section != "model" && section != "policy" && section != "data" && section != "train" &&
          section != "output")
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    try {
      set_config_value(cfg, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

inline CliConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

// Applies "section.key=value" (leading dashes allowed).
inline void apply_override(CliConfig& cfg, std::string_view arg) {
  while (!arg.empty() && arg.front() == '-') arg.remove_prefix(1);
  const auto eq = arg.find('=');
  const auto dot = arg.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
    throw ConfigError("override '" + std::string(arg) + "' is not section.key=value");
  set_config_value(cfg, std::string(arg.substr(0, dot)), std::string(arg.substr(dot + 1, eq - dot - 1)),
                   std::string(arg.substr(eq + 1)));
}

// Every key with its effective value; parse_config(format_config(c)) == c.
inline std::string format_config(const CliConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : detail::key_table()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.key << " = " << k.get(cfg) << "  # " << k.note << '\n';
  }
  return out.str();
}

inline bool operator==(const CliConfig& a, const CliConfig& b) {
  return format_config(a) == format_config(b);
}

}  // namespace growbench
