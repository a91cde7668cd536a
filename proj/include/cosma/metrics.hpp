#pragma once

#include <span>
#include <string>
#include <vector>

#include "cosma/bvh.hpp"
#include "cosma/mesh.hpp"
#include "cosma/semiregular.hpp"

namespace cosma {

// Squared distance from every point to the closest point on the surface.
std::vector<double> p2s_squared_distances(std::span<const Vec3> points, const SurfaceIndex& surface);

// Mean squared point-to-surface distance of the reconstruction's vertices to
// the original irregular mesh. Throws EmptyMesh.
double p2s_error(const SemiRegularMesh& recon, const TriMesh& original);
double p2s_error(std::span<const Vec3> points, const TriMesh& original);

// Mean squared distance between corresponding vertices. Throws ShapeMismatch.
double vertex_mse(std::span<const Vec3> recon, std::span<const Vec3> truth);
double vertex_mse(const SemiRegularMesh& recon, const SemiRegularMesh& truth);

// Mean of (unsquared) normalized distances converted to model units with the
// uniform scale of the transform.
double euclidean_error_units(std::span<const double> distances,
                             const NormalizationTransform& transform);

// One emitted metric value.
struct MetricRecord {
  std::string metric;
  double value = 0.0;
  std::string units;
  std::string mesh_id;
  int timestep = 0;
};

std::string metrics_to_json(const std::vector<MetricRecord>& records);

}  // namespace cosma
