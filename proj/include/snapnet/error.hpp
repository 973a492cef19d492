#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace snapnet {

enum class Errc {
  kInvalidArgument,
  kInfeasibleSpec,
  kOutOfRange,
  kNoRootOnBranch,
  kDisconnectedGraph,
  kDanglingReference,
  kNonpositiveResistance,
  kInvalidElement,
  kStepFailure,
  kNonfiniteState,
  kUnknownElement,
  kOpenPath,
  kGridMismatch,
  kTooShort,
  kUnpairedEvent,
  kNonmonotoneSegment,
  kNoEvents,
  kMissingGroupEvent,
  kEvaluatorFailure,
  kParse,
  kSchema,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace snapnet
