// remind: black-box unlearning audit over a loss oracle.
//
// Subcommands:
//   run              full experiment -> report/features/scores/histograms
//   warm-cache       oracle calls only, no evaluation rows
//   score-baselines  scalar baselines without classifier training
//   plot             rebuild histograms from an existing features.csv
//   validate-config  parse + validate, print the canonical key set and hash

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "remind/config.hpp"
#include "remind/histograms.hpp"
#include "remind/report.hpp"
#include "remind/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

void add_common(CLI::App& cmd, CommonArgs& args, bool needs_config = true) {
  auto* opt = cmd.add_option("-c,--config", args.config_path,
                             "experiment config file (key = value lines)");
  if (needs_config) opt->required();
  cmd.add_option("-s,--seed", args.seed_override, "override the config seed");
  cmd.add_option("-o,--out", args.out_override, "override output_dir");
}

remind::ExperimentConfig load_config(const CommonArgs& args) {
  remind::ExperimentConfig cfg = remind::parse_config_file(args.config_path);
  if (args.seed_override) cfg.seed = *args.seed_override;
  if (args.out_override) cfg.output_dir = *args.out_override;
  return cfg;
}

void print_run_summary(const remind::RunArtifacts& art,
                       const std::vector<std::string>& paths) {
  std::cout << "oracle: " << art.oracle_identity << "\n";
  std::cout << "config_hash: " << art.config_hash << "\n";
  for (const auto& [arm, count] : art.samples_per_arm)
    std::cout << "arm " << arm << ": " << count << " samples\n";
  if (!art.cache_stats.is_null()) {
    std::cout << "cache: " << art.cache_stats["hits"] << " hits, "
              << art.cache_stats["misses"] << " misses, "
              << art.cache_stats["network_calls"] << " network calls\n";
  }
  for (const auto& w : art.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& p : paths) std::cout << "wrote " << p << "\n";
}

int run_command(const CommonArgs& args, remind::RunPhase phase) {
  remind::ExperimentConfig cfg = load_config(args);
  remind::RunArtifacts art = remind::run_experiment(cfg, {}, phase);
  std::vector<std::string> paths = remind::write_run_outputs(cfg, art);
  print_run_summary(art, paths);
  if (phase == remind::RunPhase::Full) {
    std::cout << "\n" << art.report_txt;
  }
  return 0;
}

int plot_command(const CommonArgs& args) {
  remind::ExperimentConfig cfg = load_config(args);
  const std::string features_path = cfg.output_dir + "/features.csv";
  if (!std::ifstream(features_path))
    remind::raise(remind::ErrorKind::Data,
                  "plot: cannot open " + features_path + "; run `remind run` first");
  auto records = remind::parse_features_csv(features_path);
  auto paths = remind::emit_feature_histograms(records, cfg.output_dir + "/histograms",
                                               cfg.histogram_bins);
  for (const auto& p : paths) std::cout << "wrote " << p << "\n";
  return 0;
}

int validate_command(const CommonArgs& args) {
  remind::ExperimentConfig cfg = load_config(args);
  remind::validate_config(cfg);
  for (const auto& [key, value] : cfg.canonical_items())
    std::cout << key << " = " << value << "\n";
  std::cout << "config_hash: " << cfg.config_hash() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"remind: black-box unlearning audit toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args, warm_args, base_args, plot_args, validate_args;

  auto* run = app.add_subcommand("run", "run the full audit and write all outputs");
  add_common(*run, run_args);

  auto* warm = app.add_subcommand("warm-cache",
                                  "score every text against the oracle, filling the cache");
  add_common(*warm, warm_args);

  auto* base = app.add_subcommand("score-baselines",
                                  "compute scalar baseline scores without training classifiers");
  add_common(*base, base_args);

  auto* plot = app.add_subcommand("plot", "regenerate histograms from features.csv");
  add_common(*plot, plot_args);

  auto* validate = app.add_subcommand("validate-config",
                                      "check a config file and print its canonical form");
  add_common(*validate, validate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return run_command(run_args, remind::RunPhase::Full);
    if (warm->parsed()) return run_command(warm_args, remind::RunPhase::WarmCache);
    if (base->parsed()) return run_command(base_args, remind::RunPhase::BaselinesOnly);
    if (plot->parsed()) return plot_command(plot_args);
    if (validate->parsed()) return validate_command(validate_args);
  } catch (const remind::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == remind::ErrorKind::Oracle ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
