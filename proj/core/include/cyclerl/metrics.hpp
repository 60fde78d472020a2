#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclerl/continual.hpp"

namespace cyclerl {

struct EvalSample {
  std::uint64_t global_step = 0;
  double mean_return = 0.0;
};

/// Per-task returns of one run, grouped by training phase. Each phase's
/// sample list ends with its terminal evaluation once the phase is complete.
class EvalSeries {
 public:
  EvalSeries(int n_tasks, int cycles);

  static EvalSeries from_runlog(const RunLog& log, int n_tasks, int cycles);

  [[nodiscard]] int n_tasks() const noexcept { return n_tasks_; }
  [[nodiscard]] int cycles() const noexcept { return cycles_; }
  [[nodiscard]] std::size_t phase_count() const noexcept { return phases_.size(); }
  [[nodiscard]] std::size_t phase_index(int cycle, int task) const;

  /// Return of eval task `i` before any training, if recorded.
  void set_initial(int i, double value);
  [[nodiscard]] std::optional<double> initial(int i) const;

  void add_sample(std::size_t phase, int i, EvalSample sample);
  void mark_complete(std::size_t phase) { phases_.at(phase).complete = true; }
  [[nodiscard]] bool complete(std::size_t phase) const { return phases_.at(phase).complete; }
  [[nodiscard]] const std::vector<EvalSample>& samples(std::size_t phase, int i) const;

  /// "cN-tM" labels of phases lacking a terminal evaluation.
  [[nodiscard]] std::vector<std::string> missing_phases() const;

  /// Largest recorded return of task i anywhere in the run.
  [[nodiscard]] double run_max(int i) const;

  /// Multiplies every return of task i by `factor`.
  void scale_task(int i, double factor);

 private:
  struct PhaseSamples {
    std::vector<std::vector<EvalSample>> tasks;
    bool complete = false;
  };

  void check_task(int i) const;

  int n_tasks_;
  int cycles_;
  std::vector<std::optional<double>> initial_;
  std::vector<PhaseSamples> phases_;
};

/// Denominators smaller than this make F and W zero.
inline constexpr double kTransferDenominatorFloor = 1e-9;
/// Transfer values are reported multiplied by this factor.
inline constexpr double kTransferScale = 10.0;

double final_transfer(const EvalSeries& series, int i, int j, int c);
double worst_transfer(const EvalSeries& series, int i, int j, int c);

struct GrandAverages {
  std::vector<double> g_bar;  // per eval task
  std::vector<double> f_bar;  // per training task
  std::vector<double> w_bar;  // per training task
};

GrandAverages grand_averages(const EvalSeries& series);

enum class TransferMetric { final_transfer, worst_transfer };
std::string to_string(TransferMetric metric);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample sd / sqrt(n)); SE is 0 for n == 1.
Estimate estimate(std::span<const double> values);

/// Rows are training phases in schedule order (cycle-major), columns are
/// evaluation tasks. Row, column and overall averages are computed per seed
/// first, then summarised across seeds.
struct TransferMatrix {
  TransferMetric metric = TransferMetric::final_transfer;
  int n_tasks = 0;
  int cycles = 0;
  std::size_t seeds = 0;
  std::vector<std::vector<Estimate>> cells;  // [phase][eval task]
  std::vector<Estimate> row_averages;        // per phase
  std::vector<Estimate> column_averages;     // per eval task
  Estimate overall;
  /// Per training task, averaged over cycles and eval tasks.
  std::vector<Estimate> training_task_averages;

  [[nodiscard]] std::size_t rows() const noexcept { return cells.size(); }
};

TransferMatrix build_transfer_matrix(std::span<const EvalSeries> seeds, TransferMetric metric);

/// Grand averages summarised across seeds.
struct GrandAverageTable {
  std::size_t seeds = 0;
  std::vector<Estimate> g_bar;
  std::vector<Estimate> f_bar;
  std::vector<Estimate> w_bar;
};

GrandAverageTable grand_average_table(std::span<const EvalSeries> seeds);

struct TableOptions {
  /// Show row averages only for first-cycle rows, "--" elsewhere.
  bool cycle_one_row_averages = false;
  int precision = 2;
};

std::string transfer_matrix_csv(const TransferMatrix& m);
std::string transfer_matrix_table(const TransferMatrix& m, const TableOptions& options = {});
std::string grand_average_csv(const GrandAverageTable& t);
std::string grand_average_text(const GrandAverageTable& t, int precision = 2);

}  // namespace cyclerl
