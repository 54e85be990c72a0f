#include "jmlsr/error.hpp"

namespace jmlsr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularSelection: return "SingularSelection";
    case ErrorCode::NotIsomorphic: return "NotIsomorphic";
    case ErrorCode::UnstableModel: return "UnstableModel";
    case ErrorCode::InnovationNotFullRank: return "InnovationNotFullRank";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::MissingCovariance: return "MissingCovariance";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::InconsistentAlphabet: return "InconsistentAlphabet";
    case ErrorCode::NotMinimal: return "NotMinimal";
    case ErrorCode::OutOfRange: return "OutOfRange";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace jmlsr
