#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cosma {

// Every failure raised by the library carries one of these kinds. The CLI maps
// kinds to process exit codes (see exit_code()).
enum class ErrorKind {
  InvalidArgument,
  InvalidMesh,
  ParseError,
  NonTriangleFace,
  DanglingIndex,
  IoError,
  NotSemiRegular,
  CannotDecimate,
  DegenerateExtent,
  EmptySet,
  DivergedFit,
  UnsupportedLevel,
  ConnectivityMismatch,
  ShapeMismatch,
  DisconnectedGraph,
  EmptyDataset,
  NonFiniteLoss,
  LevelMismatch,
  VersionMismatch,
  EmptyMesh,
  DegenerateData,
  TooShort,
  SingleClass,
  InvalidSpec,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Thrown by check_subdivision_connectivity; records the coarsening step
// (1-based, counted from the finest level) that failed.
class NotSemiRegularError : public Error {
 public:
  NotSemiRegularError(int step, const std::string& message)
      : Error(ErrorKind::NotSemiRegular,
              "coarsening step " + std::to_string(step) + ": " + message),
        step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

// Process exit code for an error kind; 0 is reserved for success.
int exit_code(ErrorKind kind);

}  // namespace cosma
