#include <algorithm>
#include <cmath>

#include "cyclerl/errors.hpp"
#include "env_impl.hpp"

namespace cyclerl::detail {

namespace {

// Bird height y in [0, 1] (0 = floor). Pipes arrive on a conveyor every
// `pipe_spacing` steps; the bird must be inside the gap when one arrives.
class FlappyEnv final : public Environment {
 public:
  FlappyEnv(const TaskSpec& spec, std::uint64_t seed) : Environment(spec, seed) {
    const auto& p = spec.flappy;
    if (p.pipe_spacing < 1) throw ConfigError("flappy pipe_spacing must be at least 1");
    if (!(spec.gap_size > 0.0) || spec.gap_size >= p.arena_height) {
      throw ConfigError("flappy gap_size must lie in (0, arena_height)");
    }
    half_gap_ = 0.5 * spec.gap_size / p.arena_height;
    if (half_gap_ + p.gap_margin >= 0.5) throw ConfigError("flappy gap too large for its margin");
  }

  Observation reset() override {
    steps_ = 0;
    y_ = 0.5;
    vy_ = 0.0;
    distance_ = spec_.flappy.pipe_spacing;
    spawn_gap();
    return observe();
  }

  StepResult step(int action) override {
    check_action(action);
    ++steps_;
    const auto& p = spec_.flappy;
    StepResult res;
    if (action == 1) {
      vy_ = p.flap_velocity;
    } else {
      vy_ = std::max(vy_ - p.gravity, -p.max_speed);
    }
    y_ += vy_;
    if (y_ <= 0.0 || y_ >= 1.0) {
      res.reward = -1.0;
      res.done = true;
    } else if (--distance_ == 0) {
      if (std::abs(y_ - gap_center_) <= half_gap_) {
        res.reward = 1.0;
        distance_ = p.pipe_spacing;
        spawn_gap();
      } else {
        res.reward = -1.0;
        res.done = true;
      }
    }
    if (!res.done && steps_ >= spec_.step_cap) {
      res.done = true;
      res.truncated = true;
    }
    res.observation = observe();
    return res;
  }

  std::size_t observation_size() const override { return kFlappyObservationSize; }
  int action_count() const override { return 2; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<FlappyEnv>(*this); }

 private:
  void spawn_gap() {
    const double lo = half_gap_ + spec_.flappy.gap_margin;
    const double hi = 1.0 - lo;
    gap_center_ = lo + (hi - lo) * uniform01(rng_);
  }

  Observation observe() const {
    const auto& p = spec_.flappy;
    auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
    return {clamp01(y_),
            clamp01((vy_ + p.max_speed) / (2.0 * p.max_speed)),
            gap_center_,
            half_gap_,
            static_cast<double>(distance_) / static_cast<double>(p.pipe_spacing)};
  }

  double half_gap_ = 0.1;
  double y_ = 0.5;
  double vy_ = 0.0;
  int distance_ = 0;
  double gap_center_ = 0.5;
};

}  // namespace

std::unique_ptr<Environment> make_flappy(const TaskSpec& spec, std::uint64_t seed) {
  return std::make_unique<FlappyEnv>(spec, seed);
}

}  // namespace cyclerl::detail
