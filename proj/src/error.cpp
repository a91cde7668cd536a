#include "cosma/error.hpp"

namespace cosma {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidMesh: return "InvalidMesh";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonTriangleFace: return "NonTriangleFace";
    case ErrorKind::DanglingIndex: return "DanglingIndex";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::NotSemiRegular: return "NotSemiRegular";
    case ErrorKind::CannotDecimate: return "CannotDecimate";
    case ErrorKind::DegenerateExtent: return "DegenerateExtent";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::DivergedFit: return "DivergedFit";
    case ErrorKind::UnsupportedLevel: return "UnsupportedLevel";
    case ErrorKind::ConnectivityMismatch: return "ConnectivityMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::LevelMismatch: return "LevelMismatch";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::EmptyMesh: return "EmptyMesh";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidSpec:
    case ErrorKind::EmptyDataset:
    case ErrorKind::UnsupportedLevel:
    case ErrorKind::LevelMismatch:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::TooShort:
    case ErrorKind::SingleClass:
    case ErrorKind::DegenerateData:
      return 2;
    case ErrorKind::IoError:
    case ErrorKind::ParseError:
    case ErrorKind::VersionMismatch:
      return 3;
    case ErrorKind::InvalidMesh:
    case ErrorKind::NonTriangleFace:
    case ErrorKind::DanglingIndex:
    case ErrorKind::NotSemiRegular:
    case ErrorKind::CannotDecimate:
    case ErrorKind::DegenerateExtent:
    case ErrorKind::EmptyMesh:
    case ErrorKind::ConnectivityMismatch:
    case ErrorKind::EmptySet:
    case ErrorKind::DisconnectedGraph:
      return 4;
    case ErrorKind::DivergedFit:
    case ErrorKind::NonFiniteLoss:
      return 5;
  }
  return 1;
}

}  // namespace cosma
