#include "branchkit/error.hpp"

namespace branchkit {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidLaw: return "invalid-law";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::Convergence: return "convergence";
    case ErrorCode::Pole: return "pole";
    case ErrorCode::Underflow: return "underflow";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Unsupported: return "unsupported";
  }
  return "unknown";
}

}  // namespace branchkit
