// SPDX-License-Identifier: Apache-2.0
//
// growbench: train, compare, sweep-alpha, plot.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "growbench/growbench.hpp"

namespace fs = std::filesystem;
using namespace growbench;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

// Raised for anything the user can fix by changing arguments or config.
struct UsageError : Error {
  using Error::Error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "5" means seeds 1..5; "3,7,11" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  try {
    if (s.find(',') == std::string::npos) {
      const auto k = detail::parse_int<std::uint64_t>(detail::trim(s));
      if (k == 0) throw UsageError("--seeds: need at least one seed");
      for (std::uint64_t i = 1; i <= k; ++i) seeds.push_back(i);
    } else {
      for (const auto& item : split_list(s)) seeds.push_back(detail::parse_int<std::uint64_t>(item));
    }
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--seeds: ") + e.what());
  }
  if (seeds.empty()) throw UsageError("--seeds: need at least one seed");
  return seeds;
}

std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> out;
  try {
    for (const auto& item : split_list(s)) out.push_back(detail::parse_double(item));
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--alphas: ") + e.what());
  }
  if (out.empty()) throw UsageError("--alphas: empty list");
  return out;
}

// Config file, then GROWBENCH_SEED, then --section.key=value overrides.
CliConfig effective_config(const std::string& path, const std::vector<std::string>& extras) {
  CliConfig cfg = load_config(path);
  if (const char* env = std::getenv("GROWBENCH_SEED"); env && *env) {
    try {
      cfg.train.run_seed = detail::parse_int<std::uint64_t>(env);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("GROWBENCH_SEED: ") + e.what());
    }
  }
  for (const auto& arg : extras) {
    if (arg.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + arg + "'");
    try {
      apply_override(cfg, arg);
    } catch (const ConfigError& e) {
      throw ConfigError(arg + ": " + e.what());
    }
  }
  try {
    validate_config(cfg.train);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

// "label=path" or just "path" (label = file stem).
std::pair<std::string, std::string> split_labeled(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {fs::path(arg).stem().string(), arg};
}

std::string num(std::optional<double> v, int precision = 2) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

std::string run_summary(const CliConfig& cfg, const RunResult& r) {
  std::ostringstream out;
  out << "policy " << policy_name(cfg.train.policy.kind) << ", " << cfg.train.seed_arch << " -> "
      << cfg.train.target_arch << ", seed " << cfg.train.run_seed << '\n';
  out << "final test error  " << num(r.final_test_error) << " %\n";
  out << "final train error " << num(r.final_train_error) << " %\n";
  out << "average training epochs " << (r.e_bar ? num(r.e_bar, 3) : std::string("n/a (no growth)")) << '\n';
  out << "wall time " << num(r.wall_seconds) << " s\n";
  if (!r.events.empty()) {
    out << "growth events:\n  epoch  stage  block  init\n";
    for (const auto& e : r.events) {
      char line[96];
      std::snprintf(line, sizeof line, "  %5d  %5zu  %5zu  %s\n", e.epoch, e.stage, e.block_index,
                    std::string(init_rule_name(e.init)).c_str());
      out << line;
    }
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("I/O failure while writing '" + path + "'");
}

std::string table_text(const ComparisonTable& t, const std::string& first_column) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %6s %12s %8s %12s %8s %10s %8s %10s\n", first_column.c_str(), "runs",
                "test_err", "sd", "train_err", "sd", "e_bar", "sd", "time_%");
  out << line;
  for (const auto& r : t.rows) {
    std::snprintf(line, sizeof line, "%-20s %6zu %12s %8s %12s %8s %10s %8s %10s\n", r.label.c_str(),
                  r.runs.size(), num(r.test_error.median).c_str(), num(r.test_error.spread).c_str(),
                  num(r.train_error.median).c_str(), num(r.train_error.spread).c_str(),
                  num(r.e_bar.median, 3).c_str(), num(r.e_bar.spread, 3).c_str(), num(r.normalized_time).c_str());
    out << line;
    for (const auto& f : r.failures) out << "  failed: " << f << '\n';
  }
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

std::string table_csv(const ComparisonTable& t, const std::string& first_column) {
  std::ostringstream out;
  out << first_column
      << ",runs,failures,test_error_median,test_error_sd,train_error_median,train_error_sd,"
         "e_bar_median,e_bar_sd,wall_seconds_median,normalized_time\n";
  for (const auto& r : t.rows) {
    std::string failures;
    for (const auto& f : r.failures) failures += (failures.empty() ? "" : "; ") + f;
    out << csv_field(r.label) << ',' << r.runs.size() << ',' << csv_field(failures) << ','
        << num(r.test_error.median, 4) << ',' << num(r.test_error.spread, 4) << ','
        << num(r.train_error.median, 4) << ',' << num(r.train_error.spread, 4) << ','
        << num(r.e_bar.median, 4) << ',' << num(r.e_bar.spread, 4) << ','
        << num(r.wall_seconds.median, 4) << ',' << num(r.normalized_time, 2) << '\n';
  }
  return out.str();
}

void dump_runs(const ComparisonTable& t, const std::vector<std::uint64_t>& seeds, const std::string& dir) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  for (const auto& row : t.rows) {
    // Successful runs are stored in seed order; skip the seeds that failed.
    std::size_t k = 0;
    for (auto seed : seeds) {
      const std::string tag = "seed " + std::to_string(seed) + ":";
      bool failed = false;
      for (const auto& f : row.failures) failed = failed || f.rfind(tag, 0) == 0;
      if (failed) continue;
      write_metrics(row.runs.at(k++), (fs::path(dir) / (row.label + "-seed" + std::to_string(seed) + ".jsonl")).string());
    }
  }
}

int report_table(const ComparisonTable& t, const std::vector<std::uint64_t>& seeds, const std::string& first_column,
                 const std::string& csv, const std::string& metrics_dir) {
  std::cout << table_text(t, first_column);
  if (!csv.empty()) write_text(csv, table_csv(t, first_column));
  dump_runs(t, seeds, metrics_dir);
  for (const auto& r : t.rows)
    if (!r.failures.empty()) return kRuntime;
  return kOk;
}

std::optional<Range> parse_range(const std::string& s, const char* flag) {
  if (s.empty()) return std::nullopt;
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw UsageError(std::string(flag) + ": expected lo:hi");
  try {
    Range r{detail::parse_double(s.substr(0, colon)), detail::parse_double(s.substr(colon + 1))};
    if (!(r.hi > r.lo)) throw UsageError(std::string(flag) + ": hi must exceed lo");
    return r;
  } catch (const ConfigError& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural growth timing benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  bool print_config = false;
  auto* train = app.add_subcommand("train", "train one model and write per-epoch metrics");
  train->add_option("config", config_path, "config file")->required();
  train->add_flag("--print-config", print_config, "print the effective config and exit");
  train->allow_extras();
  train->footer("Any config key can be overridden as --section.key=value.");

  std::vector<std::string> compare_configs;
  std::string seeds_arg = "5";
  std::string csv_path;
  std::string metrics_dir;
  auto* compare_cmd = app.add_subcommand("compare", "median results of several configs over seeds");
  compare_cmd->add_option("configs", compare_configs, "config files, optionally as label=path")->required();
  compare_cmd->add_option("--seeds", seeds_arg, "k (seeds 1..k) or a comma-separated list")->capture_default_str();
  compare_cmd->add_option("--csv", csv_path, "also write the table as CSV");
  compare_cmd->add_option("--metrics-dir", metrics_dir, "write every run's metrics here");
  compare_cmd->allow_extras();

  std::string sweep_config;
  std::string alphas_arg;
  auto* sweep = app.add_subcommand("sweep-alpha", "FRAGrow results across alpha values");
  sweep->add_option("config", sweep_config, "config file with policy.name = fragrow")->required();
  sweep->add_option("--alphas", alphas_arg, "comma-separated alpha values")->required();
  sweep->add_option("--seeds", seeds_arg, "k (seeds 1..k) or a comma-separated list")->capture_default_str();
  sweep->add_option("--csv", csv_path, "also write the table as CSV");
  sweep->add_option("--metrics-dir", metrics_dir, "write every run's metrics here");
  sweep->allow_extras();

  std::vector<std::string> plot_inputs;
  std::string plot_out = "plot.svg";
  std::string curves_arg = "train_error,val_error,test_error";
  std::string x_range_arg;
  std::string y_range_arg;
  PlotSpec plot_spec;
  auto* plot = app.add_subcommand("plot", "SVG learning curves from metrics files");
  plot->add_option("metrics", plot_inputs, "metrics files, optionally as label=path")->required();
  plot->add_option("-o,--out", plot_out, "output SVG path")->capture_default_str();
  plot->add_option("--curves", curves_arg,
                   "comma-separated: train_error, val_error, test_error, lr, blocks, orl, interval")
      ->capture_default_str();
  plot->add_option("--x-range", x_range_arg, "epoch range lo:hi");
  plot->add_option("--y-range", y_range_arg, "value range lo:hi for every panel");
  plot->add_option("--alpha", plot_spec.alpha, "alpha used for the interval curve")->capture_default_str();
  plot->add_option("--min-finetune", plot_spec.min_finetune, "E_F_min used for the interval curve")
      ->capture_default_str();
  plot->add_option("--title", plot_spec.title, "chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) {
      const CliConfig cfg = effective_config(config_path, train->remaining());
      if (print_config) {
        std::cout << format_config(cfg);
        return kOk;
      }
      const RunResult r = run(cfg.train);
      write_metrics(r, cfg.output.metrics);
      const std::string summary = run_summary(cfg, r);
      std::cout << summary;
      if (!cfg.output.summary.empty()) write_text(cfg.output.summary, summary);
      return kOk;
    }

    if (compare_cmd->parsed()) {
      const auto seeds = parse_seeds(seeds_arg);
      std::vector<LabeledConfig> configs;
      for (const auto& arg : compare_configs) {
        const auto [label, path] = split_labeled(arg);
        configs.push_back({label, effective_config(path, compare_cmd->remaining()).train});
      }
      return report_table(growbench::compare(configs, seeds), seeds, "config", csv_path, metrics_dir);
    }

    if (sweep->parsed()) {
      const auto seeds = parse_seeds(seeds_arg);
      const auto alphas = parse_alphas(alphas_arg);
      const CliConfig base = effective_config(sweep_config, sweep->remaining());
      if (base.train.policy.kind != PolicyKind::FraGrow)
        throw ConfigError(sweep_config + ": sweep-alpha needs policy.name = fragrow");
      std::vector<LabeledConfig> configs;
      for (double a : alphas) {
        LabeledConfig lc{detail::format_double(a), base.train};
        lc.config.policy.alpha = a;
        configs.push_back(std::move(lc));
      }
      return report_table(growbench::compare(configs, seeds), seeds, "alpha", csv_path, metrics_dir);
    }

    if (plot->parsed()) {
      plot_spec.curves.clear();
      for (const auto& name : split_list(curves_arg)) {
        const auto c = parse_curve(name);
        if (!c) throw UsageError("--curves: unknown curve '" + name + "'");
        plot_spec.curves.push_back(*c);
      }
      if (plot_spec.curves.empty()) throw UsageError("--curves: empty list");
      plot_spec.x_range = parse_range(x_range_arg, "--x-range");
      plot_spec.y_range = parse_range(y_range_arg, "--y-range");
      std::vector<PlotSeries> series;
      for (const auto& arg : plot_inputs) {
        const auto [label, path] = split_labeled(arg);
        series.push_back({label, read_metrics(path)});
      }
      write_text(plot_out, render_svg(series, plot_spec));
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "growbench: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "growbench: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "growbench: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
