#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyclerl/config.hpp"
#include "cyclerl/metrics.hpp"

namespace cyclerl {

/// Library version baked in at build time.
std::string framework_version();

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<RunLog> log;
  std::optional<std::string> error;  // set for seeds excluded from aggregates
};

/// One row of the aggregated learning curve.
struct CurvePoint {
  std::uint64_t global_step = 0;
  int phase_cycle = 0;
  int phase_task = 0;
  int eval_task = 0;
  double mean_return = 0.0;
  double se = 0.0;
  double q_norm = 0.0;  // mean over seeds
};

struct ResultBundle {
  std::string version;
  ExperimentConfig config;
  std::vector<SeedResult> runs;
  std::vector<std::string> warnings;

  // Aggregates over the successful seeds; empty when none succeeded.
  std::vector<CurvePoint> curves;
  std::optional<TransferMatrix> final_transfer;
  std::optional<TransferMatrix> worst_transfer;
  std::optional<GrandAverageTable> grand_averages;

  [[nodiscard]] std::size_t successful_seeds() const;
};

struct RunOptions {
  /// Overrides config.threads when positive.
  int threads = 0;
  /// Continue from per-seed checkpoints found in output_dir/checkpoints.
  bool resume = false;
  /// Builds a per-seed observer; may return null.
  std::function<std::unique_ptr<RunObserver>(std::uint64_t seed)> observer_factory;
};

/// Runs one seed to completion, honouring the checkpoint settings.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options = {});

/// Runs every seed (in parallel when threads > 1) and aggregates.
ResultBundle run_bundle(const ExperimentConfig& config, const RunOptions& options = {});

/// Recomputes curves and metrics from the per-seed logs.
void aggregate(ResultBundle& bundle);

nlohmann::json bundle_to_json(const ResultBundle& bundle);
/// Reads the config and per-seed logs, then recomputes every aggregate.
ResultBundle bundle_from_json(const nlohmann::json& j);

inline constexpr const char* kBundleFile = "bundle.json";

void write_bundle(const ResultBundle& bundle, const std::string& dir);
ResultBundle read_bundle(const std::string& dir);

enum class ExportFormat { csv, json, table };
ExportFormat parse_export_format(const std::string& name);

std::string curves_csv(const ResultBundle& bundle);
std::string bundle_tables(const ResultBundle& bundle, const TableOptions& options = {});

/// Writes export files into `dir` and returns their paths.
std::vector<std::string> export_bundle(const ResultBundle& bundle, const std::string& dir, ExportFormat format,
                                       const TableOptions& options = {});

}  // namespace cyclerl
