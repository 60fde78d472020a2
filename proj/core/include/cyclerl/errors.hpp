#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cyclerl {

/// Base class for every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CYCLERL_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(tag, message) {}  \
  }

CYCLERL_DEFINE_ERROR(DimensionError, "dimension");
CYCLERL_DEFINE_ERROR(StateError, "state");
CYCLERL_DEFINE_ERROR(NumericError, "numeric");
CYCLERL_DEFINE_ERROR(ConfigError, "config");
CYCLERL_DEFINE_ERROR(InputError, "input");
CYCLERL_DEFINE_ERROR(DataError, "data");
CYCLERL_DEFINE_ERROR(IoError, "io");

#undef CYCLERL_DEFINE_ERROR

}  // namespace cyclerl
