#include "cyclerl/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include "cyclerl/errors.hpp"

namespace cyclerl {

using nlohmann::json;

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size fields are read as 64-bit integers");

namespace {

const std::vector<std::pair<Variant, const char*>>& variant_names() {
  static const std::vector<std::pair<Variant, const char*>> names{
      {Variant::dqn, "dqn"},         {Variant::ddqn, "ddqn"},       {Variant::pm, "pm"},
      {Variant::l2, "l2"},           {Variant::ewc, "ewc"},         {Variant::qreg, "qreg"},
      {Variant::qreg_u, "qreg_u"},   {Variant::qreg_l, "qreg_l"},   {Variant::qreg_lu, "qreg_lu"},
      {Variant::qreg_nwl, "qreg_nwl"}, {Variant::qreg_nwlu, "qreg_nwlu"}};
  return names;
}

/// Reads fields of one JSON object and remembers which keys were consumed so
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display() + " must be an object");
  }

  [[nodiscard]] bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  [[nodiscard]] std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, key_path(key));
  }

  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(key_path(key) + " must be a number");
    out = v.get<double>();
  }
  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key) + " must be true or false");
    out = v.get<bool>();
  }
  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(key_path(key) + " must be a string");
    out = v.get<std::string>();
  }
  void read(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < std::numeric_limits<int>::min() ||
        v.get<std::int64_t>() > std::numeric_limits<int>::max()) {
      throw ConfigError(key_path(key) + " must be an integer");
    }
    out = v.get<int>();
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    out = unsigned_value(j_.at(key), key_path(key));
  }
  void read(const std::string& key, std::vector<std::size_t>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(key_path(key) + " must be an array of sizes");
    out.clear();
    for (const auto& x : v) out.push_back(static_cast<std::size_t>(unsigned_value(x, key_path(key))));
  }

  template <typename E, typename Parse>
  void read_enum(const std::string& key, E& out, Parse parse) {
    std::string name;
    if (!has(key)) return;
    read(key, name);
    try {
      out = parse(name);
    } catch (const Error& e) {
      throw ConfigError(key_path(key) + ": " + e.what());
    }
  }

  /// Throws for the first key that was never read.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + key_path(key));
    }
  }

 private:
  static std::uint64_t unsigned_value(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(where + " must be a non-negative integer");
  }

  [[nodiscard]] std::string display() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_env(Section s, EnvSuiteConfig& env) {
  s.read_enum("family", env.family, parse_env_family);
  s.read("frame_skip", env.frame_skip);
  s.read("frame_stack", env.frame_stack);
  s.read("episode_cap", env.episode_cap);

  Section room = s.child("room");
  room.read("grid_size", env.room.grid_size);
  room.read("visibility_radius", env.room.visibility_radius);
  room.read("trap_count", env.room.trap_count);
  room.read("step_penalty", env.room.step_penalty);
  room.read("goal_reward", env.room.goal_reward);
  room.finish();

  Section flappy = s.child("flappy");
  flappy.read("base_gap", env.flappy.base_gap);
  flappy.read("gap_step", env.flappy.gap_step);
  flappy.read("arena_height", env.flappy.arena_height);
  flappy.read("gravity", env.flappy.gravity);
  flappy.read("flap_velocity", env.flappy.flap_velocity);
  flappy.read("max_speed", env.flappy.max_speed);
  flappy.read("pipe_spacing", env.flappy.pipe_spacing);
  flappy.read("gap_margin", env.flappy.gap_margin);
  flappy.finish();

  Section catcher = s.child("catcher");
  catcher.read("base_velocity", env.catcher.base_velocity);
  catcher.read("velocity_step", env.catcher.velocity_step);
  catcher.read("fall_rate", env.catcher.fall_rate);
  catcher.read("paddle_speed", env.catcher.paddle_speed);
  catcher.read("paddle_width", env.catcher.paddle_width);
  catcher.read("fruit_width", env.catcher.fruit_width);
  catcher.read("velocity_scale", env.catcher.velocity_scale);
  catcher.read("lives", env.catcher.lives);
  catcher.finish();
  s.finish();

  if (env.frame_skip < 1) throw ConfigError("env.frame_skip must be at least 1");
  if (env.frame_stack < 1) throw ConfigError("env.frame_stack must be at least 1");
  if (env.episode_cap < 0) throw ConfigError("env.episode_cap must be non-negative");
}

void read_schedule(Section s, ScheduleConfig& sc) {
  s.read("N", sc.n_tasks);
  s.read("C", sc.cycles);
  s.read("T_steps", sc.steps_per_task);
  s.read("eval_period", sc.eval_period);
  s.read("eval_episodes", sc.eval_episodes);
  s.read("eval_epsilon", sc.eval_epsilon);
  s.finish();
  build_schedule(sc);  // validates
}

void read_agent(Section s, AgentConfig& a) {
  s.read("gamma", a.gamma);
  s.read("epsilon", a.epsilon);
  s.read("F_Train", a.f_train);
  s.read("F_TNU", a.f_tnu);
  s.read("N_BS", a.batch_size);
  s.read("N_RB", a.n_rb);
  s.read("double_q", a.double_q);
  s.read_enum("td_loss", a.td_loss, parse_td_loss);
  s.read("huber_delta", a.huber_delta);
  s.read("reward_clip", a.reward_clip);
  s.read("learning_rate", a.adam.learning_rate);
  s.read("adam_beta1", a.adam.beta1);
  s.read("adam_beta2", a.adam.beta2);
  s.read("adam_epsilon", a.adam.epsilon);
  s.read("hidden", a.hidden);

  Section q = s.child("qreg");
  q.read("enabled", a.qreg.enabled);
  q.read("lambda", a.qreg.lambda);
  q.read("N_RBS", a.qreg.n_rbs);
  q.read("live", a.qreg.live);
  q.read("updates", a.qreg.updates);
  q.read("no_wait", a.qreg.no_wait);
  q.read("F_RAF", a.qreg.f_raf);
  q.read("F_RUF", a.qreg.f_ruf);
  q.read("N_RASS", a.qreg.n_rass);
  q.read("N_RAH", a.qreg.n_rah);
  q.read("N_RRB", a.qreg.n_rrb);
  q.read_enum("reduction", a.qreg.reduction, parse_qreg_reduction);
  q.finish();

  Section w = s.child("weight_reg");
  w.read_enum("kind", a.weight_reg.kind, parse_weight_reg);
  w.read("coef", a.weight_reg.coefficient);
  w.read("fisher_samples", a.weight_reg.fisher_samples);
  w.finish();
  s.finish();
}

json env_to_json(const EnvSuiteConfig& e) {
  return {{"family", to_string(e.family)},
          {"frame_skip", e.frame_skip},
          {"frame_stack", e.frame_stack},
          {"episode_cap", e.episode_cap},
          {"room",
           {{"grid_size", e.room.grid_size},
            {"visibility_radius", e.room.visibility_radius},
            {"trap_count", e.room.trap_count},
            {"step_penalty", e.room.step_penalty},
            {"goal_reward", e.room.goal_reward}}},
          {"flappy",
           {{"base_gap", e.flappy.base_gap},
            {"gap_step", e.flappy.gap_step},
            {"arena_height", e.flappy.arena_height},
            {"gravity", e.flappy.gravity},
            {"flap_velocity", e.flappy.flap_velocity},
            {"max_speed", e.flappy.max_speed},
            {"pipe_spacing", e.flappy.pipe_spacing},
            {"gap_margin", e.flappy.gap_margin}}},
          {"catcher",
           {{"base_velocity", e.catcher.base_velocity},
            {"velocity_step", e.catcher.velocity_step},
            {"fall_rate", e.catcher.fall_rate},
            {"paddle_speed", e.catcher.paddle_speed},
            {"paddle_width", e.catcher.paddle_width},
            {"fruit_width", e.catcher.fruit_width},
            {"velocity_scale", e.catcher.velocity_scale},
            {"lives", e.catcher.lives}}}};
}

json agent_to_json(const AgentConfig& a) {
  return {{"gamma", a.gamma},
          {"epsilon", a.epsilon},
          {"F_Train", a.f_train},
          {"F_TNU", a.f_tnu},
          {"N_BS", a.batch_size},
          {"N_RB", a.n_rb},
          {"double_q", a.double_q},
          {"td_loss", to_string(a.td_loss)},
          {"huber_delta", a.huber_delta},
          {"reward_clip", a.reward_clip},
          {"learning_rate", a.adam.learning_rate},
          {"adam_beta1", a.adam.beta1},
          {"adam_beta2", a.adam.beta2},
          {"adam_epsilon", a.adam.epsilon},
          {"hidden", a.hidden},
          {"qreg",
           {{"enabled", a.qreg.enabled},
            {"lambda", a.qreg.lambda},
            {"N_RBS", a.qreg.n_rbs},
            {"live", a.qreg.live},
            {"updates", a.qreg.updates},
            {"no_wait", a.qreg.no_wait},
            {"F_RAF", a.qreg.f_raf},
            {"F_RUF", a.qreg.f_ruf},
            {"N_RASS", a.qreg.n_rass},
            {"N_RAH", a.qreg.n_rah},
            {"N_RRB", a.qreg.n_rrb},
            {"reduction", to_string(a.qreg.reduction)}}},
          {"weight_reg",
           {{"kind", to_string(a.weight_reg.kind)},
            {"coef", a.weight_reg.coefficient},
            {"fisher_samples", a.weight_reg.fisher_samples}}}};
}

}  // namespace

std::string to_string(Variant v) {
  for (const auto& [value, name] : variant_names())
    if (value == v) return name;
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (const auto& [value, n] : variant_names())
    if (name == n) return value;
  std::string known;
  for (const auto& [value, n] : variant_names()) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown variant '" + name + "' (expected one of " + known + ")");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> v;
    for (const auto& [value, name] : variant_names()) v.push_back(value);
    return v;
  }();
  return all;
}

void apply_variant(Variant v, const ScheduleConfig& schedule, AgentConfig& agent) {
  auto& q = agent.qreg;
  // Rehearsal added once per task from the whole replay buffer.
  auto end_of_task = [&] {
    q.enabled = true;
    q.lambda = 1.0;
    q.n_rbs = 256;
    q.f_raf = schedule.steps_per_task;
    q.n_rass = 10000;
    q.n_rah = agent.n_rb;
    q.n_rrb = 100000;
  };
  // Small rehearsal batches added every 2k steps from the latest 2k transitions.
  auto live = [&] {
    q.enabled = true;
    q.live = true;
    q.lambda = 1.0;
    q.n_rbs = 256;
    q.f_raf = 2000;
    q.n_rass = 64;
    q.n_rah = 2000;
    q.n_rrb = 100000;
  };

  switch (v) {
    case Variant::dqn:
      break;
    case Variant::ddqn:
      agent.double_q = true;
      break;
    case Variant::pm:
      agent.n_rb = static_cast<std::size_t>(schedule.n_tasks) * schedule.steps_per_task;
      break;
    case Variant::l2:
      agent.weight_reg.kind = WeightRegKind::l2;
      agent.weight_reg.coefficient = 100.0;
      break;
    case Variant::ewc:
      agent.weight_reg.kind = WeightRegKind::ewc;
      agent.weight_reg.coefficient = 100000.0;
      break;
    case Variant::qreg:
      end_of_task();
      break;
    case Variant::qreg_u:
      end_of_task();
      q.updates = true;
      q.f_ruf = schedule.steps_per_task;
      break;
    case Variant::qreg_l:
      live();
      break;
    case Variant::qreg_lu:
      live();
      q.updates = true;
      q.f_ruf = 2000;
      break;
    case Variant::qreg_nwl:
      live();
      q.no_wait = true;
      break;
    case Variant::qreg_nwlu:
      live();
      q.no_wait = true;
      q.updates = true;
      q.f_ruf = 2000;
      break;
  }
}

RunConfig default_run_config() {
  RunConfig run;
  run.schedule.steps_per_task = 20000;
  run.schedule.eval_period = 2000;
  run.schedule.eval_episodes = 5;
  run.agent.n_rb = 5000;
  // A 30k-step task is too short for a 10k target period and a 1e-4 step size.
  run.agent.f_tnu = 1000;
  run.agent.adam.learning_rate = 1e-3;
  return run;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  Section top(j, "");
  top.read("name", cfg.name);
  std::string variant = to_string(cfg.variant);
  top.read("variant", variant);
  try {
    cfg.variant = parse_variant(variant);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("variant: ") + e.what());
  }
  if (top.has("seeds")) {
    const json& seeds = j.at("seeds");
    if (!seeds.is_array() || seeds.empty()) throw ConfigError("seeds must be a non-empty array of integers");
    cfg.seeds.clear();
    for (const auto& s : seeds) {
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
        throw ConfigError("seeds must hold non-negative integers");
      }
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  top.read("output_dir", cfg.output_dir);
  top.read("threads", cfg.threads);
  top.read("checkpoints", cfg.checkpoints);
  top.read("probe_size", cfg.run.probe_size);
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");

  read_env(top.child("env"), cfg.run.env);
  read_schedule(top.child("schedule"), cfg.run.schedule);
  apply_variant(cfg.variant, cfg.run.schedule, cfg.run.agent);
  read_agent(top.child("agent"), cfg.run.agent);
  top.finish();

  cfg.run.agent.validate();
  // Every task in the sequence must be constructible.
  for (int t = 1; t <= cfg.run.schedule.n_tasks; ++t) make_task_spec(cfg.run.env, t, cfg.run.schedule.n_tasks);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"variant", to_string(c.variant)},
          {"seeds", c.seeds},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"checkpoints", c.checkpoints},
          {"probe_size", c.run.probe_size},
          {"env", env_to_json(c.run.env)},
          {"schedule",
           {{"N", c.run.schedule.n_tasks},
            {"C", c.run.schedule.cycles},
            {"T_steps", c.run.schedule.steps_per_task},
            {"eval_period", c.run.schedule.eval_period},
            {"eval_episodes", c.run.schedule.eval_episodes},
            {"eval_epsilon", c.run.schedule.eval_epsilon}}},
          {"agent", agent_to_json(c.run.agent)}};
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace cyclerl
