#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cosma/mesh.hpp"
#include "cosma/semiregular.hpp"

namespace cosma {

struct RemeshConfig {
  int rl = 4;
  int iterations = 300;
  double step_size = 1e-3;  // Adam learning rate, normalized coordinates
  int samples_per_face = 4;
  double regularizer_weight = 0.0;
  std::uint64_t seed = 0;
};

// Throws UnsupportedLevel unless rl is 2, 3 or 4, InvalidArgument for other
// out-of-range fields.
void validate_config(const RemeshConfig& config);

struct FitReport {
  std::vector<double> loss_history;  // chamfer before each update
  double final_chamfer = 0.0;
  // the loss either reached zero or changed by less than 0.1% over the last
  // tenth of the iterations
  bool converged = false;
};

// Symmetric chamfer distance: mean squared nearest-neighbor distance from A
// to B plus the same from B to A.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);

struct SurfaceSample {
  int face = 0;
  Vec3 bary = Vec3::Zero();
};

// samples_per_face area-uniform barycentric samples per face, deterministic
// for a fixed seed.
std::vector<SurfaceSample> sample_barycentric(const TriMesh& mesh, int samples_per_face,
                                              std::uint64_t seed);

std::vector<Vec3> evaluate_samples(const TriMesh& mesh, std::span<const SurfaceSample> samples);

// All vertices followed by the barycentric samples.
std::vector<Vec3> sample_surface(const TriMesh& mesh, int samples_per_face, std::uint64_t seed);

// Subdivides `base` config.rl times and moves the fine vertices by Adam on the
// chamfer distance to `target`. Topology is never changed.
std::pair<SemiRegularMesh, FitReport> fit_semiregular(const TriMesh& base, const TriMesh& target,
                                                      const RemeshConfig& config);

// Same optimization started from an existing semi-regular mesh, e.g. the fit
// of the previous frame of a sequence.
std::pair<SemiRegularMesh, FitReport> refit_semiregular(const SemiRegularMesh& init,
                                                        const TriMesh& target,
                                                        const RemeshConfig& config);

}  // namespace cosma
