#pragma once

#include <stdexcept>
#include <string>

namespace jmlsr {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  RankDeficient,
  SingularSelection,
  NotIsomorphic,
  UnstableModel,
  InnovationNotFullRank,
  NoConvergence,
  InsufficientData,
  MissingCovariance,
  SingularGram,
  Reducible,
  InconsistentAlphabet,
  NotMinimal,
  OutOfRange,
};

const char* to_string(ErrorCode code);

/// Library error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace jmlsr
