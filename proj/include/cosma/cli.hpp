#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cosma/mesh.hpp"
#include "cosma/remesh.hpp"
#include "cosma/semiregular.hpp"

namespace cosma {

namespace fs = std::filesystem;

// One sequence of a dataset manifest. Paths are relative to the manifest.
struct SequenceEntry {
  std::string id;
  std::vector<std::string> frames;     // time order
  std::string base = "auto";           // base mesh path or "auto"
  std::string branch;                  // optional label
  std::string split = "train";         // "train" or "test"
  std::vector<std::string> originals;  // irregular frames matching a remeshed sequence
  std::optional<NormalizationTransform> normalization;
};

// Irregular manifests (from synth) have rl = 0; remeshed manifests record
// their refinement level.
struct DatasetManifest {
  int rl = 0;
  NormalizationMode normalization = NormalizationMode::aspect_preserving;
  std::vector<SequenceEntry> sequences;
};

DatasetManifest load_manifest(const fs::path& path);
void save_manifest(const DatasetManifest& manifest, const fs::path& path);

NormalizationMode normalization_from_string(const std::string& s);
std::string to_string(NormalizationMode m);

// Fits frame 0 from the base and every later frame from the previous result.
// `refit_iterations` (when positive) replaces config.iterations after frame 0.
std::vector<std::pair<SemiRegularMesh, FitReport>> remesh_sequence(
    const TriMesh& base, const std::vector<TriMesh>& targets, const RemeshConfig& config,
    int refit_iterations = 0,
    const std::function<void(int, const FitReport&)>& on_frame = {});

// Runs one command line (argv[0] is the program name). Errors are reported
// on stderr and mapped to exit codes; 0 means success.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace cosma
