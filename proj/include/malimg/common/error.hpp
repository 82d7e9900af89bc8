#pragma once

#include <stdexcept>
#include <string>

namespace malimg {

enum class Errc {
  // binimg
  MalformedMagic,
  TruncatedHeader,
  InconsistentOffsets,
  EmptyInput,
  ShapeMismatch,
  // tensor / model
  ShapeError,
  InvalidTarget,
  GraphError,
  NonFinite,
  // optimizers
  NonFiniteGradient,
  NonFiniteState,
  // metrics
  IndexOutOfRange,
  DegenerateLabels,
  EmptyHistory,
  // augmentation
  BatchTooSmall,
  // harness
  MissingSplit,
  EmptyClass,
  UnreadableImage,
  ConfigError,
  ConfigMismatch,
  DataError,
  NonFiniteLoss,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace malimg
