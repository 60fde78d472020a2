#include <algorithm>
#include <cmath>

#include "cyclerl/errors.hpp"
#include "env_impl.hpp"

namespace cyclerl::detail {

namespace {

double fall_increment(const TaskSpec& spec) { return spec.pellet_velocity * spec.catcher.fall_rate; }

// Steps from spawn (y = 0) to landing (y >= 1), accumulated exactly as the
// simulation does.
int steps_per_fruit(const TaskSpec& spec) {
  const double dy = fall_increment(spec);
  double y = 0.0;
  int n = 0;
  while (y < 1.0) {
    y += dy;
    ++n;
  }
  return n;
}

class CatcherEnv final : public Environment {
 public:
  CatcherEnv(const TaskSpec& spec, std::uint64_t seed) : Environment(spec, seed) {
    const auto& p = spec.catcher;
    if (!(spec.pellet_velocity > 0.0) || !(p.fall_rate > 0.0)) {
      throw ConfigError("catcher pellet velocity and fall_rate must be positive");
    }
    if (!(p.paddle_width > 0.0 && p.paddle_width < 1.0)) throw ConfigError("catcher paddle_width must be in (0, 1)");
    if (p.lives < 1) throw ConfigError("catcher needs at least one life");
  }

  Observation reset() override {
    steps_ = 0;
    lives_ = spec_.catcher.lives;
    paddle_x_ = 0.5;
    spawn_fruit();
    return observe();
  }

  StepResult step(int action) override {
    check_action(action);
    ++steps_;
    const auto& p = spec_.catcher;
    StepResult res;
    const double half = 0.5 * p.paddle_width;
    paddle_x_ += action == 0 ? -p.paddle_speed : p.paddle_speed;
    paddle_x_ = std::clamp(paddle_x_, half, 1.0 - half);

    fruit_y_ += fall_increment(spec_);
    if (fruit_y_ >= 1.0) {
      if (std::abs(fruit_x_ - paddle_x_) <= 0.5 * (p.paddle_width + p.fruit_width)) {
        res.reward = 1.0;
      } else {
        res.reward = -1.0;
        --lives_;
      }
      spawn_fruit();
    }
    if (lives_ == 0) {
      res.done = true;
    } else if (steps_ >= spec_.step_cap) {
      res.done = true;
      res.truncated = true;
    }
    res.observation = observe();
    return res;
  }

  std::size_t observation_size() const override { return kCatcherObservationSize; }
  int action_count() const override { return 2; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<CatcherEnv>(*this); }

 private:
  void spawn_fruit() {
    const double half = 0.5 * spec_.catcher.fruit_width;
    fruit_x_ = half + (1.0 - 2.0 * half) * uniform01(rng_);
    fruit_y_ = 0.0;
  }

  Observation observe() const {
    const auto& p = spec_.catcher;
    return {paddle_x_,
            fruit_x_,
            std::min(fruit_y_, 1.0),
            std::min(spec_.pellet_velocity / p.velocity_scale, 1.0),
            static_cast<double>(lives_) / static_cast<double>(p.lives)};
  }

  int lives_ = 3;
  double paddle_x_ = 0.5;
  double fruit_x_ = 0.5;
  double fruit_y_ = 0.0;
};

}  // namespace

std::unique_ptr<Environment> make_catcher(const TaskSpec& spec, std::uint64_t seed) {
  return std::make_unique<CatcherEnv>(spec, seed);
}

}  // namespace cyclerl::detail

namespace cyclerl {

double catcher_max_return(const TaskSpec& spec) {
  if (spec.family != EnvFamily::catcher) throw InputError("catcher_max_return needs a catcher task");
  return static_cast<double>(spec.step_cap / detail::steps_per_fruit(spec));
}

}  // namespace cyclerl
