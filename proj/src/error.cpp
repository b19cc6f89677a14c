#include "durboot/error.hpp"

namespace durboot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RejectRange: return "REJECT_RANGE";
    case ErrorCode::RejectAsymmetry: return "REJECT_ASYMMETRY";
    case ErrorCode::NonFinite: return "NON_FINITE";
    case ErrorCode::DegenerateDesign: return "DEGENERATE_DESIGN";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::MomentDegenerate: return "MOMENT_DEGENERATE";
    case ErrorCode::HighFailureRate: return "HIGH_FAILURE_RATE";
    case ErrorCode::SingularGamma: return "SINGULAR_GAMMA";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::EmptySample: return "EMPTY_SAMPLE";
    case ErrorCode::Config: return "CONFIG";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace durboot
