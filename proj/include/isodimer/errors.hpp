#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isodimer {

enum class ErrorKind {
  // lattice
  kAngleBoundViolation,
  kEmptyClip,
  kNotSimplyConnected,
  kNoBoundaryVertexNearZ0,
  // potential
  kBoundaryVertex,
  kSolveFailure,
  // kasteleyn
  kGraphNotMatchable,
  kNotAnEdge,
  kSharedVertex,
  // sampler
  kTooLarge,
  kNumericalBreakdown,
  // height
  kDisconnectedDual,
  kInvalidPath,
  kPathsIntersect,
  kTooManyPaths,
  // gff_lab
  kCoincidentPoints,
  kNotUpperHalfPlane,
  kCoincidentArguments,
  // cli / io
  kInvalidConfig,
  kMissingInput,
  kInvalidArchive,
};

std::string_view error_kind_name(ErrorKind kind);

// Whether the failure is numerical (matchability, singular solves, empty
// geometry) as opposed to a malformed input.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace isodimer
