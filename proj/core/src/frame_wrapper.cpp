#include <algorithm>

#include "cyclerl/envs.hpp"
#include "cyclerl/errors.hpp"

namespace cyclerl {

Observation stack_frames(const std::deque<Observation>& history, int stack, std::size_t frame_size) {
  Observation out;
  out.reserve(frame_size * static_cast<std::size_t>(stack));
  const int available = static_cast<int>(history.size());
  for (int k = stack - available; k > 0; --k) out.insert(out.end(), frame_size, 0.0);
  const int first = std::max(0, available - stack);
  for (int k = first; k < available; ++k) {
    const auto& f = history[static_cast<std::size_t>(k)];
    if (f.size() != frame_size) throw DimensionError("frame of size " + std::to_string(f.size()) +
                                                     " in a stack of size " + std::to_string(frame_size));
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

FrameWrapper::FrameWrapper(std::unique_ptr<Environment> env, int skip, int stack)
    : env_(std::move(env)), skip_(skip), stack_(stack) {
  if (skip_ < 1 || stack_ < 1) throw ConfigError("frame skip and frame stack must be at least 1");
  if (!env_) throw ConfigError("FrameWrapper needs an environment");
}

std::size_t FrameWrapper::observation_size() const {
  return env_->observation_size() * static_cast<std::size_t>(stack_);
}

Observation FrameWrapper::stacked() const { return stack_frames(frames_, stack_, env_->observation_size()); }

Observation FrameWrapper::reset() {
  frames_.clear();
  frames_.push_back(env_->reset());
  return stacked();
}

StepResult FrameWrapper::step(int action) {
  StepResult total;
  for (int k = 0; k < skip_; ++k) {
    StepResult r = env_->step(action);
    total.reward += r.reward;
    total.observation = std::move(r.observation);
    total.done = r.done;
    total.truncated = r.truncated;
    if (r.done) break;
  }
  frames_.push_back(std::move(total.observation));
  while (static_cast<int>(frames_.size()) > stack_) frames_.pop_front();
  total.observation = stacked();
  return total;
}

}  // namespace cyclerl
