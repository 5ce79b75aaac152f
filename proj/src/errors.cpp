#include "isodimer/errors.hpp"

namespace isodimer {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAngleBoundViolation: return "AngleBoundViolation";
    case ErrorKind::kEmptyClip: return "EmptyClip";
    case ErrorKind::kNotSimplyConnected: return "NotSimplyConnected";
    case ErrorKind::kNoBoundaryVertexNearZ0: return "NoBoundaryVertexNearZ0";
    case ErrorKind::kBoundaryVertex: return "BoundaryVertex";
    case ErrorKind::kSolveFailure: return "SolveFailure";
    case ErrorKind::kGraphNotMatchable: return "GraphNotMatchable";
    case ErrorKind::kNotAnEdge: return "NotAnEdge";
    case ErrorKind::kSharedVertex: return "SharedVertex";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kNumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::kDisconnectedDual: return "DisconnectedDual";
    case ErrorKind::kInvalidPath: return "InvalidPath";
    case ErrorKind::kPathsIntersect: return "PathsIntersect";
    case ErrorKind::kTooManyPaths: return "TooManyPaths";
    case ErrorKind::kCoincidentPoints: return "CoincidentPoints";
    case ErrorKind::kNotUpperHalfPlane: return "NotUpperHalfPlane";
    case ErrorKind::kCoincidentArguments: return "CoincidentArguments";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kMissingInput: return "MissingInput";
    case ErrorKind::kInvalidArchive: return "InvalidArchive";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyClip:
    case ErrorKind::kNotSimplyConnected:
    case ErrorKind::kNoBoundaryVertexNearZ0:
    case ErrorKind::kSolveFailure:
    case ErrorKind::kGraphNotMatchable:
    case ErrorKind::kNumericalBreakdown:
    case ErrorKind::kDisconnectedDual:
      return true;
    default:
      return false;
  }
}

}  // namespace isodimer
