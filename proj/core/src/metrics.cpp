#include "cyclerl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cyclerl/errors.hpp"

namespace cyclerl {

namespace {

std::string phase_label(int cycle, int task) {
  return "c" + std::to_string(cycle) + "-t" + std::to_string(task);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  // Avoid printing "-0.00".
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

// Shortest text that reads back to the same double.
std::string full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Counts code points so the UTF-8 plus-minus sign lines up.
std::size_t display_width(const std::string& s) {
  std::size_t cps = 0;
  for (unsigned char ch : s)
    if ((ch & 0xC0) != 0x80) ++cps;
  return cps;
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

}  // namespace

EvalSeries::EvalSeries(int n_tasks, int cycles) : n_tasks_(n_tasks), cycles_(cycles) {
  if (n_tasks < 1 || cycles < 1) throw DataError("eval series needs at least one task and one cycle");
  initial_.resize(static_cast<std::size_t>(n_tasks));
  phases_.resize(static_cast<std::size_t>(n_tasks * cycles));
  for (auto& p : phases_) p.tasks.resize(static_cast<std::size_t>(n_tasks));
}

EvalSeries EvalSeries::from_runlog(const RunLog& log, int n_tasks, int cycles) {
  EvalSeries s(n_tasks, cycles);
  for (const auto& point : log.evals) {
    if (point.tasks.size() != static_cast<std::size_t>(n_tasks)) {
      throw DataError("eval at step " + std::to_string(point.global_step) + " covers " +
                      std::to_string(point.tasks.size()) + " tasks, expected " + std::to_string(n_tasks));
    }
    if (point.phase_index < 0) {
      for (const auto& t : point.tasks) s.set_initial(t.eval_task, t.mean_return);
      continue;
    }
    const auto phase = static_cast<std::size_t>(point.phase_index);
    if (phase >= s.phase_count()) throw DataError("eval phase index out of range");
    for (const auto& t : point.tasks) s.add_sample(phase, t.eval_task, {point.global_step, t.mean_return});
    if (point.terminal) s.mark_complete(phase);
  }
  return s;
}

std::size_t EvalSeries::phase_index(int cycle, int task) const {
  if (cycle < 1 || cycle > cycles_ || task < 1 || task > n_tasks_) {
    throw DataError("phase " + phase_label(cycle, task) + " outside the schedule");
  }
  return static_cast<std::size_t>((cycle - 1) * n_tasks_ + (task - 1));
}

void EvalSeries::check_task(int i) const {
  if (i < 1 || i > n_tasks_) throw DataError("eval task " + std::to_string(i) + " outside 1.." + std::to_string(n_tasks_));
}

void EvalSeries::set_initial(int i, double value) {
  check_task(i);
  initial_[static_cast<std::size_t>(i - 1)] = value;
}

std::optional<double> EvalSeries::initial(int i) const {
  check_task(i);
  return initial_[static_cast<std::size_t>(i - 1)];
}

void EvalSeries::add_sample(std::size_t phase, int i, EvalSample sample) {
  check_task(i);
  auto& list = phases_.at(phase).tasks[static_cast<std::size_t>(i - 1)];
  if (!list.empty() && list.back().global_step > sample.global_step) {
    throw DataError("eval samples out of order within a phase");
  }
  list.push_back(sample);
}

const std::vector<EvalSample>& EvalSeries::samples(std::size_t phase, int i) const {
  check_task(i);
  return phases_.at(phase).tasks[static_cast<std::size_t>(i - 1)];
}

std::vector<std::string> EvalSeries::missing_phases() const {
  std::vector<std::string> out;
  for (std::size_t p = 0; p < phases_.size(); ++p) {
    if (!phases_[p].complete) {
      const int n = n_tasks_;
      out.push_back(phase_label(static_cast<int>(p) / n + 1, static_cast<int>(p) % n + 1));
    }
  }
  return out;
}

double EvalSeries::run_max(int i) const {
  check_task(i);
  double best = -std::numeric_limits<double>::infinity();
  if (const auto init = initial(i)) best = *init;
  for (const auto& p : phases_)
    for (const auto& s : p.tasks[static_cast<std::size_t>(i - 1)]) best = std::max(best, s.mean_return);
  if (!std::isfinite(best)) throw DataError("no evaluations recorded for task " + std::to_string(i));
  return best;
}

void EvalSeries::scale_task(int i, double factor) {
  check_task(i);
  auto& init = initial_[static_cast<std::size_t>(i - 1)];
  if (init) *init *= factor;
  for (auto& p : phases_)
    for (auto& s : p.tasks[static_cast<std::size_t>(i - 1)]) s.mean_return *= factor;
}

namespace {

struct TransferInputs {
  double previous_end;
  std::size_t phase;
  double denominator;
};

TransferInputs transfer_inputs(const EvalSeries& s, int i, int j, int c) {
  const std::size_t p = s.phase_index(c, j);
  if (!s.complete(p)) throw DataError("missing terminal eval for phase " + phase_label(c, j));
  double previous;
  if (p == 0) {
    const auto init = s.initial(i);
    if (!init) throw DataError("missing pre-training eval for task " + std::to_string(i));
    previous = *init;
  } else {
    if (!s.complete(p - 1)) {
      const int n = s.n_tasks();
      throw DataError("missing terminal eval for phase " +
                      phase_label(static_cast<int>(p - 1) / n + 1, static_cast<int>(p - 1) % n + 1));
    }
    previous = s.samples(p - 1, i).back().mean_return;
  }
  return {previous, p, std::fabs(s.run_max(i))};
}

double scaled_change(double value, const TransferInputs& in) {
  if (in.denominator < kTransferDenominatorFloor) return 0.0;
  return kTransferScale * (value - in.previous_end) / in.denominator;
}

}  // namespace

double final_transfer(const EvalSeries& series, int i, int j, int c) {
  const TransferInputs in = transfer_inputs(series, i, j, c);
  return scaled_change(series.samples(in.phase, i).back().mean_return, in);
}

double worst_transfer(const EvalSeries& series, int i, int j, int c) {
  const TransferInputs in = transfer_inputs(series, i, j, c);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& s : series.samples(in.phase, i)) lowest = std::min(lowest, s.mean_return);
  return scaled_change(lowest, in);
}

GrandAverages grand_averages(const EvalSeries& series) {
  const auto missing = series.missing_phases();
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("incomplete eval series, missing phases: " + list);
  }
  const int n = series.n_tasks();
  const int cycles = series.cycles();
  GrandAverages out;
  for (int i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < series.phase_count(); ++p) {
      double phase_sum = 0.0;
      const auto& samples = series.samples(p, i);
      for (const auto& s : samples) phase_sum += s.mean_return;
      acc += phase_sum / static_cast<double>(samples.size());
    }
    out.g_bar.push_back(acc / static_cast<double>(series.phase_count()));
  }
  for (int j = 1; j <= n; ++j) {
    double f = 0.0;
    double w = 0.0;
    for (int c = 1; c <= cycles; ++c) {
      for (int i = 1; i <= n; ++i) {
        f += final_transfer(series, i, j, c);
        w += worst_transfer(series, i, j, c);
      }
    }
    const double count = static_cast<double>(cycles * n);
    out.f_bar.push_back(f / count);
    out.w_bar.push_back(w / count);
  }
  return out;
}

std::string to_string(TransferMetric metric) {
  return metric == TransferMetric::final_transfer ? "final_transfer" : "worst_transfer";
}

Estimate estimate(std::span<const double> values) {
  if (values.empty()) throw DataError("estimate of an empty sample");
  Estimate e;
  e.mean = mean_of(values);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    const double n = static_cast<double>(values.size());
    e.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return e;
}

namespace {

void check_same_schedule(std::span<const EvalSeries> seeds) {
  if (seeds.empty()) throw DataError("metrics need at least one seed");
  for (const auto& s : seeds) {
    if (s.n_tasks() != seeds.front().n_tasks() || s.cycles() != seeds.front().cycles()) {
      throw DataError("seeds have mismatched schedules");
    }
  }
}

}  // namespace

TransferMatrix build_transfer_matrix(std::span<const EvalSeries> seeds, TransferMetric metric) {
  check_same_schedule(seeds);
  const int n = seeds.front().n_tasks();
  const int cycles = seeds.front().cycles();
  const std::size_t rows = static_cast<std::size_t>(n * cycles);
  const auto cols = static_cast<std::size_t>(n);

  // values[seed][row][col]
  std::vector<std::vector<std::vector<double>>> values;
  for (const auto& s : seeds) {
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
    for (int c = 1; c <= cycles; ++c)
      for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= n; ++i) {
          m[s.phase_index(c, j)][static_cast<std::size_t>(i - 1)] =
              metric == TransferMetric::final_transfer ? final_transfer(s, i, j, c) : worst_transfer(s, i, j, c);
        }
    values.push_back(std::move(m));
  }

  TransferMatrix out;
  out.metric = metric;
  out.n_tasks = n;
  out.cycles = cycles;
  out.seeds = seeds.size();
  std::vector<double> per_seed(seeds.size());
  auto summarise = [&](auto&& per_seed_value) {
    for (std::size_t k = 0; k < seeds.size(); ++k) per_seed[k] = per_seed_value(values[k]);
    return estimate(per_seed);
  };

  out.cells.assign(rows, std::vector<Estimate>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.cells[r][c] = summarise([&](const auto& m) { return m[r][c]; });

  for (std::size_t r = 0; r < rows; ++r) {
    out.row_averages.push_back(summarise([&](const auto& m) { return mean_of(m[r]); }));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    out.column_averages.push_back(summarise([&](const auto& m) {
      double acc = 0.0;
      for (const auto& row : m) acc += row[c];
      return acc / static_cast<double>(rows);
    }));
  }
  out.overall = summarise([&](const auto& m) {
    double acc = 0.0;
    for (const auto& row : m)
      for (double v : row) acc += v;
    return acc / static_cast<double>(rows * cols);
  });
  for (int j = 1; j <= n; ++j) {
    out.training_task_averages.push_back(summarise([&](const auto& m) {
      double acc = 0.0;
      for (int c = 1; c <= cycles; ++c)
        for (double v : m[static_cast<std::size_t>((c - 1) * n + (j - 1))]) acc += v;
      return acc / static_cast<double>(cycles * n);
    }));
  }
  return out;
}

GrandAverageTable grand_average_table(std::span<const EvalSeries> seeds) {
  check_same_schedule(seeds);
  std::vector<GrandAverages> per_seed;
  for (const auto& s : seeds) per_seed.push_back(grand_averages(s));
  GrandAverageTable t;
  t.seeds = seeds.size();
  const auto n = static_cast<std::size_t>(seeds.front().n_tasks());
  std::vector<double> buf(seeds.size());
  auto collect = [&](std::vector<double> GrandAverages::*field, std::size_t idx) {
    for (std::size_t k = 0; k < per_seed.size(); ++k) buf[k] = (per_seed[k].*field)[idx];
    return estimate(buf);
  };
  for (std::size_t i = 0; i < n; ++i) {
    t.g_bar.push_back(collect(&GrandAverages::g_bar, i));
    t.f_bar.push_back(collect(&GrandAverages::f_bar, i));
    t.w_bar.push_back(collect(&GrandAverages::w_bar, i));
  }
  return t;
}

std::string transfer_matrix_csv(const TransferMatrix& m) {
  std::ostringstream os;
  os << "metric,cycle,train_task,eval_task,mean,se\n";
  const std::string name = to_string(m.metric);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const int cycle = static_cast<int>(r) / m.n_tasks + 1;
    const int task = static_cast<int>(r) % m.n_tasks + 1;
    for (std::size_t c = 0; c < m.cells[r].size(); ++c) {
      os << name << ',' << cycle << ',' << task << ',' << c + 1 << ',' << full(m.cells[r][c].mean) << ','
         << full(m.cells[r][c].se) << '\n';
    }
    os << name << ',' << cycle << ',' << task << ",avg," << full(m.row_averages[r].mean) << ','
       << full(m.row_averages[r].se) << '\n';
  }
  for (std::size_t c = 0; c < m.column_averages.size(); ++c) {
    os << name << ",avg,avg," << c + 1 << ',' << full(m.column_averages[c].mean) << ','
       << full(m.column_averages[c].se) << '\n';
  }
  os << name << ",avg,avg,avg," << full(m.overall.mean) << ',' << full(m.overall.se) << '\n';
  return os.str();
}

std::string transfer_matrix_table(const TransferMatrix& m, const TableOptions& options) {
  auto cell = [&](const Estimate& e) { return fmt(e.mean, options.precision) + " ± " + fmt(e.se, options.precision); };

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"Train \\ Eval"};
  for (int i = 1; i <= m.n_tasks; ++i) header.push_back("T" + std::to_string(i));
  header.push_back("Avg ± SEM");
  grid.push_back(header);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const int cycle = static_cast<int>(r) / m.n_tasks + 1;
    const int task = static_cast<int>(r) % m.n_tasks + 1;
    std::vector<std::string> row{"T" + std::to_string(task) + "-C" + std::to_string(cycle)};
    for (const auto& e : m.cells[r]) row.push_back(cell(e));
    row.push_back(options.cycle_one_row_averages && cycle > 1 ? "--" : cell(m.row_averages[r]));
    grid.push_back(std::move(row));
  }
  std::vector<std::string> bottom{"Avg ± SEM"};
  for (const auto& e : m.column_averages) bottom.push_back(cell(e));
  bottom.push_back(cell(m.overall));
  grid.push_back(std::move(bottom));

  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& row : grid)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_width(row[c]));
  std::ostringstream os;
  os << to_string(m.metric) << " (x" << kTransferScale << ", " << m.seeds << " seed" << (m.seeds == 1 ? "" : "s")
     << ")\n";
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "  " : "") << pad(row[c], widths[c]);
    os << '\n';
  }
  return os.str();
}

std::string grand_average_csv(const GrandAverageTable& t) {
  std::ostringstream os;
  os << "task,g_bar,g_bar_se,f_bar,f_bar_se,w_bar,w_bar_se\n";
  for (std::size_t i = 0; i < t.g_bar.size(); ++i) {
    os << i + 1 << ',' << full(t.g_bar[i].mean) << ',' << full(t.g_bar[i].se) << ',' << full(t.f_bar[i].mean) << ','
       << full(t.f_bar[i].se) << ',' << full(t.w_bar[i].mean) << ',' << full(t.w_bar[i].se) << '\n';
  }
  return os.str();
}

std::string grand_average_text(const GrandAverageTable& t, int precision) {
  std::ostringstream os;
  os << "grand averages (" << t.seeds << " seed" << (t.seeds == 1 ? "" : "s") << ")\n";
  os << "task  G_bar (eval task)  F_bar (train task)  W_bar (train task)\n";
  auto cell = [&](const Estimate& e) { return fmt(e.mean, precision) + " ± " + fmt(e.se, precision); };
  for (std::size_t i = 0; i < t.g_bar.size(); ++i) {
    os << pad("T" + std::to_string(i + 1), 4) << "  " << pad(cell(t.g_bar[i]), 17) << "  "
       << pad(cell(t.f_bar[i]), 18) << "  " << pad(cell(t.w_bar[i]), 18) << '\n';
  }
  return os.str();
}

}  // namespace cyclerl
