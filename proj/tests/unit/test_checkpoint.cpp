#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cyclerl/checkpoint.hpp"
#include "cyclerl/config.hpp"
#include "cyclerl/errors.hpp"

using namespace cyclerl;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run(Variant v) {
  RunConfig c = default_run_config();
  c.schedule.n_tasks = 2;
  c.schedule.cycles = 1;
  c.schedule.steps_per_task = 400;
  c.schedule.eval_period = 200;
  c.schedule.eval_episodes = 1;
  c.env.episode_cap = 60;
  c.agent.hidden = {8};
  c.agent.batch_size = 8;
  c.agent.n_rb = 150;
  c.agent.f_tnu = 100;
  c.probe_size = 8;
  apply_variant(v, c.schedule, c.agent);
  c.agent.qreg.f_raf = 100;
  c.agent.weight_reg.fisher_samples = 20;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cyclerl-test-ckpt";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("state survives an encode and decode unchanged") {
  for (Variant v : {Variant::dqn, Variant::ewc, Variant::qreg_nwlu}) {
    const RunConfig config = tiny_run(v);
    ContinualTrainer trainer(config, 3);
    trainer.run_phase();
    const std::string bytes = encode_state(trainer.state(), 3);

    ContinualTrainer fresh(config, 99);
    CHECK(decode_state(bytes, fresh.state()) == 3);
    CHECK(encode_state(fresh.state(), 3) == bytes);
    CHECK(fresh.state().agent.online() == trainer.state().agent.online());
    CHECK(fresh.state().agent.optimizer() == trainer.state().agent.optimizer());
    CHECK(fresh.state().buffer == trainer.state().buffer);
    CHECK(fresh.state().rrb == trainer.state().rrb);
    CHECK(fresh.state().agent.anchor() == trainer.state().agent.anchor());
  }
}

TEST_CASE("a restored trainer finishes exactly like an uninterrupted one") {
  const RunConfig config = tiny_run(Variant::qreg_nwlu);
  ContinualTrainer straight(config, 5);
  straight.run();

  ContinualTrainer first(config, 5);
  first.run_phase();
  const std::string path = scratch("resume.ckpt").string();
  first.save_checkpoint(path);
  ContinualTrainer resumed = ContinualTrainer::load_checkpoint(path, config);
  resumed.run();

  CHECK(to_json(resumed.state().log) == to_json(straight.state().log));
  CHECK(resumed.state().agent.online() == straight.state().agent.online());
}

TEST_CASE("corrupt snapshots are rejected") {
  const RunConfig config = tiny_run(Variant::dqn);
  ContinualTrainer trainer(config, 1);
  const std::string bytes = encode_state(trainer.state(), 1);
  ContinualTrainer target(config, 1);

  CHECK_THROWS_AS(decode_state(bytes.substr(0, bytes.size() / 2), target.state()), DataError);
  CHECK_THROWS_AS(decode_state(bytes + "x", target.state()), DataError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_state(bad_magic, target.state()), DataError);
}

TEST_CASE("loading a checkpoint into a different network shape fails") {
  const RunConfig config = tiny_run(Variant::dqn);
  ContinualTrainer trainer(config, 1);
  const std::string path = scratch("shape.ckpt").string();
  trainer.save_checkpoint(path);
  RunConfig other = config;
  other.env.frame_stack = 2;
  CHECK_THROWS_AS(ContinualTrainer::load_checkpoint(path, other), DataError);
  CHECK_THROWS_AS(ContinualTrainer::load_checkpoint(scratch("missing.ckpt").string(), config), IoError);
}
