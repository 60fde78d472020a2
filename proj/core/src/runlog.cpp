#include "cyclerl/continual.hpp"
#include "cyclerl/errors.hpp"

namespace cyclerl {

using nlohmann::json;

namespace {

json eval_to_json(const EvalPoint& p) {
  json tasks = json::array();
  for (const auto& t : p.tasks) {
    tasks.push_back({{"eval_task", t.eval_task}, {"mean_return", t.mean_return}, {"episode_returns", t.episode_returns}});
  }
  return {{"global_step", p.global_step}, {"phase_index", p.phase_index}, {"cycle", p.cycle},
          {"task", p.task},               {"terminal", p.terminal},       {"q_norm", p.q_norm},
          {"tasks", std::move(tasks)}};
}

EvalPoint eval_from_json(const json& j) {
  EvalPoint p;
  p.global_step = j.at("global_step").get<std::uint64_t>();
  p.phase_index = j.at("phase_index").get<int>();
  p.cycle = j.at("cycle").get<int>();
  p.task = j.at("task").get<int>();
  p.terminal = j.at("terminal").get<bool>();
  p.q_norm = j.at("q_norm").get<double>();
  for (const auto& t : j.at("tasks")) {
    EvalRecord r;
    r.eval_task = t.at("eval_task").get<int>();
    r.mean_return = t.at("mean_return").get<double>();
    r.episode_returns = t.at("episode_returns").get<std::vector<double>>();
    p.tasks.push_back(std::move(r));
  }
  return p;
}

json loss_to_json(const LossSummary& l) {
  return {{"global_step", l.global_step},
          {"train_steps", l.train_steps},
          {"qreg_steps", l.qreg_steps},
          {"mean_td_loss", l.mean_td_loss},
          {"mean_qreg_loss", l.mean_qreg_loss},
          {"mean_penalty", l.mean_penalty},
          {"mean_grad_norm", l.mean_grad_norm},
          {"max_grad_norm", l.max_grad_norm},
          {"episodes", l.episodes},
          {"mean_episode_return", l.mean_episode_return}};
}

LossSummary loss_from_json(const json& j) {
  LossSummary l;
  l.global_step = j.at("global_step").get<std::uint64_t>();
  l.train_steps = j.at("train_steps").get<std::uint64_t>();
  l.qreg_steps = j.at("qreg_steps").get<std::uint64_t>();
  l.mean_td_loss = j.at("mean_td_loss").get<double>();
  l.mean_qreg_loss = j.at("mean_qreg_loss").get<double>();
  l.mean_penalty = j.at("mean_penalty").get<double>();
  l.mean_grad_norm = j.at("mean_grad_norm").get<double>();
  l.max_grad_norm = j.at("max_grad_norm").get<double>();
  l.episodes = j.at("episodes").get<std::uint64_t>();
  l.mean_episode_return = j.at("mean_episode_return").get<double>();
  return l;
}

}  // namespace

json to_json(const RunLog& log) {
  json evals = json::array();
  for (const auto& e : log.evals) evals.push_back(eval_to_json(e));
  json losses = json::array();
  for (const auto& l : log.losses) losses.push_back(loss_to_json(l));
  json j = {{"seed", log.seed},
            {"evals", std::move(evals)},
            {"losses", std::move(losses)},
            {"warnings", log.warnings},
            {"rrb_entries_added", log.rrb_entries_added},
            {"config", log.config}};
  j["first_qreg_step"] = log.first_qreg_step ? json(*log.first_qreg_step) : json(nullptr);
  j["abort_reason"] = log.abort_reason ? json(*log.abort_reason) : json(nullptr);
  return j;
}

RunLog runlog_from_json(const json& j) {
  try {
    RunLog log;
    log.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("evals")) log.evals.push_back(eval_from_json(e));
    for (const auto& l : j.at("losses")) log.losses.push_back(loss_from_json(l));
    log.warnings = j.at("warnings").get<std::vector<std::string>>();
    log.rrb_entries_added = j.at("rrb_entries_added").get<std::uint64_t>();
    log.config = j.at("config");
    if (!j.at("first_qreg_step").is_null()) log.first_qreg_step = j.at("first_qreg_step").get<std::uint64_t>();
    if (!j.at("abort_reason").is_null()) log.abort_reason = j.at("abort_reason").get<std::string>();
    return log;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed run log: ") + e.what());
  }
}

}  // namespace cyclerl
