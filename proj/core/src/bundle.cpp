#include "cyclerl/bundle.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "cyclerl/errors.hpp"

namespace cyclerl {

using nlohmann::json;
namespace fs = std::filesystem;

std::string framework_version() { return CYCLERL_VERSION; }

std::size_t ResultBundle::successful_seeds() const {
  std::size_t n = 0;
  for (const auto& r : runs)
    if (!r.error) ++n;
  return n;
}

namespace {

fs::path checkpoint_path(const ExperimentConfig& config, std::uint64_t seed) {
  return fs::path(config.output_dir) / "checkpoints" / ("seed-" + std::to_string(seed) + ".ckpt");
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Shortest text that reads back to the same double.
std::string full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}}; }

json matrix_json(const TransferMatrix& m) {
  json cells = json::array();
  for (const auto& row : m.cells) {
    json r = json::array();
    for (const auto& e : row) r.push_back(estimate_json(e));
    cells.push_back(std::move(r));
  }
  auto list = [](const std::vector<Estimate>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(estimate_json(e));
    return a;
  };
  return {{"metric", to_string(m.metric)},
          {"scale", kTransferScale},
          {"seeds", m.seeds},
          {"cells", std::move(cells)},
          {"row_averages", list(m.row_averages)},
          {"column_averages", list(m.column_averages)},
          {"overall", estimate_json(m.overall)},
          {"training_task_averages", list(m.training_task_averages)}};
}

json grand_json(const GrandAverageTable& t) {
  auto list = [](const std::vector<Estimate>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(estimate_json(e));
    return a;
  };
  return {{"seeds", t.seeds}, {"G_bar", list(t.g_bar)}, {"F_bar", list(t.f_bar)}, {"W_bar", list(t.w_bar)}};
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options) {
  SeedResult result;
  result.seed = seed;
  try {
    std::unique_ptr<RunObserver> observer;
    if (options.observer_factory) observer = options.observer_factory(seed);
    const fs::path ckpt = checkpoint_path(config, seed);
    std::optional<ContinualTrainer> trainer;
    if (options.resume && fs::exists(ckpt)) {
      trainer.emplace(ContinualTrainer::load_checkpoint(ckpt.string(), config.run));
    } else {
      trainer.emplace(config.run, seed);
    }
    if (config.checkpoints) fs::create_directories(ckpt.parent_path());
    while (trainer->run_phase(observer.get())) {
      if (config.checkpoints) trainer->save_checkpoint(ckpt.string());
    }
    if (config.checkpoints && !trainer->state().log.abort_reason) trainer->save_checkpoint(ckpt.string());
    RunLog log = trainer->state().log;
    log.config = {{"name", config.name}, {"variant", to_string(config.variant)}};
    if (log.abort_reason) result.error = "run aborted: " + *log.abort_reason;
    result.log = std::move(log);
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

ResultBundle run_bundle(const ExperimentConfig& config, const RunOptions& options) {
  ResultBundle bundle;
  bundle.version = framework_version();
  bundle.config = config;
  bundle.runs.resize(config.seeds.size());

  const int threads = options.threads > 0 ? options.threads : config.threads;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      bundle.runs[k] = run_seed(config, config.seeds[k], options);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  aggregate(bundle);
  return bundle;
}

void aggregate(ResultBundle& bundle) {
  bundle.warnings.clear();
  bundle.curves.clear();
  bundle.final_transfer.reset();
  bundle.worst_transfer.reset();
  bundle.grand_averages.reset();

  const auto& schedule = bundle.config.run.schedule;
  const SchedulePlan plan = build_schedule(schedule);
  std::vector<const RunLog*> logs;
  for (auto& r : bundle.runs) {
    if (!r.error && r.log && !r.log->complete(plan)) r.error = "run log is incomplete";
    if (r.error) {
      bundle.warnings.push_back("seed " + std::to_string(r.seed) + " excluded: " + *r.error);
      continue;
    }
    logs.push_back(&*r.log);
  }
  if (logs.empty()) {
    bundle.warnings.push_back("no successful seeds; aggregates omitted");
    return;
  }

  // Training-phase evaluations line up across seeds because the schedule is shared.
  std::vector<std::vector<const EvalPoint*>> points(logs.size());
  for (std::size_t k = 0; k < logs.size(); ++k)
    for (const auto& e : logs[k]->evals)
      if (e.phase_index >= 0) points[k].push_back(&e);
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw DataError("seeds recorded different numbers of evaluations");
  }
  std::vector<double> returns(logs.size());
  for (std::size_t e = 0; e < points.front().size(); ++e) {
    const EvalPoint& ref = *points.front()[e];
    double q_norm = 0.0;
    for (std::size_t k = 0; k < logs.size(); ++k) q_norm += points[k][e]->q_norm;
    q_norm /= static_cast<double>(logs.size());
    for (std::size_t i = 0; i < ref.tasks.size(); ++i) {
      for (std::size_t k = 0; k < logs.size(); ++k) returns[k] = points[k][e]->tasks[i].mean_return;
      const Estimate est = estimate(returns);
      bundle.curves.push_back(
          {ref.global_step, ref.cycle, ref.task, ref.tasks[i].eval_task, est.mean, est.se, q_norm});
    }
  }

  std::vector<EvalSeries> series;
  for (const auto* log : logs) series.push_back(EvalSeries::from_runlog(*log, schedule.n_tasks, schedule.cycles));
  bundle.final_transfer = build_transfer_matrix(series, TransferMetric::final_transfer);
  bundle.worst_transfer = build_transfer_matrix(series, TransferMetric::worst_transfer);
  bundle.grand_averages = grand_average_table(series);
}

json bundle_to_json(const ResultBundle& b) {
  json runs = json::array();
  for (const auto& r : b.runs) {
    runs.push_back({{"seed", r.seed},
                    {"error", r.error ? json(*r.error) : json(nullptr)},
                    {"log", r.log ? to_json(*r.log) : json(nullptr)}});
  }
  json curves = json::array();
  for (const auto& c : b.curves) {
    curves.push_back({{"global_step", c.global_step},
                      {"phase_cycle", c.phase_cycle},
                      {"phase_task", c.phase_task},
                      {"eval_task", c.eval_task},
                      {"mean_return", c.mean_return},
                      {"se", c.se},
                      {"q_norm", c.q_norm}});
  }
  json metrics = json::object();
  metrics["denominator"] = "absolute maximum over every recorded evaluation of the task in the run";
  metrics["previous_end"] = "terminal evaluation of the preceding phase (pre-training evaluation for the first phase)";
  metrics["final_transfer"] = b.final_transfer ? matrix_json(*b.final_transfer) : json(nullptr);
  metrics["worst_transfer"] = b.worst_transfer ? matrix_json(*b.worst_transfer) : json(nullptr);
  metrics["grand_averages"] = b.grand_averages ? grand_json(*b.grand_averages) : json(nullptr);
  return {{"version", b.version},       {"config", config_to_json(b.config)}, {"runs", std::move(runs)},
          {"warnings", b.warnings},     {"curves", std::move(curves)},        {"metrics", std::move(metrics)}};
}

ResultBundle bundle_from_json(const json& j) {
  ResultBundle b;
  try {
    b.version = j.at("version").get<std::string>();
    b.config = config_from_json(j.at("config"));
    for (const auto& r : j.at("runs")) {
      SeedResult s;
      s.seed = r.at("seed").get<std::uint64_t>();
      if (!r.at("error").is_null()) s.error = r.at("error").get<std::string>();
      if (!r.at("log").is_null()) s.log = runlog_from_json(r.at("log"));
      b.runs.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed bundle: ") + e.what());
  }
  aggregate(b);
  return b;
}

void write_bundle(const ResultBundle& bundle, const std::string& dir) {
  write_text(fs::path(dir) / kBundleFile, canonical_dump(bundle_to_json(bundle)));
}

ResultBundle read_bundle(const std::string& dir) {
  const fs::path path = fs::is_directory(dir) ? fs::path(dir) / kBundleFile : fs::path(dir);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bundle " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("bundle " + path.string() + " is not valid JSON: " + e.what());
  }
  return bundle_from_json(j);
}

ExportFormat parse_export_format(const std::string& name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "json") return ExportFormat::json;
  if (name == "table") return ExportFormat::table;
  throw InputError("unknown export format '" + name + "' (expected csv, json or table)");
}

std::string curves_csv(const ResultBundle& bundle) {
  std::ostringstream os;
  os << "global_step,phase_cycle,phase_task,eval_task,mean_return,se,q_norm\n";
  for (const auto& c : bundle.curves) {
    os << c.global_step << ',' << c.phase_cycle << ',' << c.phase_task << ',' << c.eval_task << ','
       << full(c.mean_return) << ',' << full(c.se) << ',' << full(c.q_norm) << '\n';
  }
  return os.str();
}

std::string bundle_tables(const ResultBundle& bundle, const TableOptions& options) {
  std::ostringstream os;
  os << bundle.config.name << " [" << to_string(bundle.config.variant) << "], " << bundle.successful_seeds() << "/"
     << bundle.runs.size() << " seeds succeeded\n";
  for (const auto& w : bundle.warnings) os << "warning: " << w << '\n';
  if (!bundle.final_transfer) return os.str();
  os << '\n' << transfer_matrix_table(*bundle.final_transfer, options);
  os << '\n' << transfer_matrix_table(*bundle.worst_transfer, options);
  os << '\n' << grand_average_text(*bundle.grand_averages, options.precision);
  return os.str();
}

std::vector<std::string> export_bundle(const ResultBundle& bundle, const std::string& dir, ExportFormat format,
                                       const TableOptions& options) {
  const fs::path root(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(root / name, text);
    written.push_back((root / name).string());
  };
  switch (format) {
    case ExportFormat::csv:
      emit("curves.csv", curves_csv(bundle));
      if (bundle.final_transfer) {
        emit("final_transfer.csv", transfer_matrix_csv(*bundle.final_transfer));
        emit("worst_transfer.csv", transfer_matrix_csv(*bundle.worst_transfer));
        emit("grand_averages.csv", grand_average_csv(*bundle.grand_averages));
      }
      break;
    case ExportFormat::json:
      emit(kBundleFile, canonical_dump(bundle_to_json(bundle)));
      break;
    case ExportFormat::table:
      emit("tables.txt", bundle_tables(bundle, options));
      break;
  }
  return written;
}

}  // namespace cyclerl
