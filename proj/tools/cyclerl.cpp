// Command line front end: run experiments, inspect and export result bundles.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cyclerl/bundle.hpp"
#include "cyclerl/errors.hpp"

namespace {

int report_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

struct ProgressObserver : cyclerl::RunObserver {
  explicit ProgressObserver(std::uint64_t seed) : seed(seed) {}
  void on_phase_end(std::size_t phase_index, const cyclerl::TrainerState& state) override {
    std::fprintf(stderr, "seed %llu: phase %zu done at step %llu\n", static_cast<unsigned long long>(seed),
                 phase_index + 1, static_cast<unsigned long long>(state.global_step));
  }
  std::uint64_t seed;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual value-based RL experiments with Q-value rehearsal"};
  app.set_version_flag("--version", cyclerl::framework_version());
  app.require_subcommand(1);

  std::string config_path;
  std::string bundle_dir;
  std::string output_dir;
  std::string format;
  int threads = 0;
  bool resume = false;
  bool quiet = false;
  cyclerl::TableOptions table;

  auto* run = app.add_subcommand("run", "Run every seed of an experiment config and write bundle.json");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--threads", threads, "Parallel seed workers (overrides the config)");
  run->add_option("--output", output_dir, "Output directory (overrides the config)");
  run->add_flag("--resume", resume, "Continue seeds from their last phase checkpoint");
  run->add_flag("--quiet", quiet, "Suppress progress on stderr");

  auto* metrics = app.add_subcommand("metrics", "Print transfer matrices and grand averages of a bundle");
  metrics->add_option("bundle-dir", bundle_dir, "Directory holding bundle.json")->required();
  metrics->add_flag("--cycle-one-averages", table.cycle_one_row_averages,
                    "Row averages for first-cycle rows only");
  metrics->add_option("--precision", table.precision, "Digits after the decimal point");

  auto* exp = app.add_subcommand("export", "Export a bundle as csv, json or table files");
  exp->add_option("bundle-dir", bundle_dir, "Directory holding bundle.json")->required();
  exp->add_option("--format", format, "csv, json or table")->required();
  exp->add_option("--out", output_dir, "Destination directory (defaults to the bundle directory)");
  exp->add_flag("--cycle-one-averages", table.cycle_one_row_averages, "Row averages for first-cycle rows only");
  exp->add_option("--precision", table.precision, "Digits after the decimal point");

  auto* validate = app.add_subcommand("validate", "Check a config and print it fully resolved");
  validate->add_option("config", config_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (*run) {
      cyclerl::ExperimentConfig config = cyclerl::parse_config(config_path);
      if (!output_dir.empty()) config.output_dir = output_dir;
      cyclerl::RunOptions options;
      options.threads = threads;
      options.resume = resume;
      if (!quiet) {
        options.observer_factory = [](std::uint64_t seed) { return std::make_unique<ProgressObserver>(seed); };
      }
      const cyclerl::ResultBundle bundle = cyclerl::run_bundle(config, options);
      cyclerl::write_bundle(bundle, config.output_dir);
      std::cout << cyclerl::bundle_tables(bundle);
      if (bundle.successful_seeds() == 0) return report_error("run", "every seed failed");
    } else if (*metrics) {
      std::cout << cyclerl::bundle_tables(cyclerl::read_bundle(bundle_dir), table);
    } else if (*exp) {
      const auto fmt = cyclerl::parse_export_format(format);
      const cyclerl::ResultBundle bundle = cyclerl::read_bundle(bundle_dir);
      for (const auto& path : cyclerl::export_bundle(bundle, output_dir.empty() ? bundle_dir : output_dir, fmt, table)) {
        std::cout << path << '\n';
      }
    } else if (*validate) {
      std::cout << cyclerl::canonical_dump(cyclerl::config_to_json(cyclerl::parse_config(config_path)));
    }
  } catch (const cyclerl::Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
