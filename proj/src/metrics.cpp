#include "cosma/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "cosma/error.hpp"
#include "cosma/parallel.hpp"

namespace cosma {

std::vector<double> p2s_squared_distances(std::span<const Vec3> points, const SurfaceIndex& surface) {
  std::vector<double> d(points.size());
  const int n = static_cast<int>(points.size());
  constexpr int kChunk = 256;
  parallel_for((n + kChunk - 1) / kChunk, [&](int c) {
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) d[i] = surface.closest(points[i]).distance2;
  });
  return d;
}

double p2s_error(std::span<const Vec3> points, const TriMesh& original) {
  if (points.empty()) throw Error(ErrorKind::EmptyMesh, "reconstruction has no vertices");
  const SurfaceIndex surface(original);
  double sum = 0.0;
  for (double d : p2s_squared_distances(points, surface)) sum += d;
  return sum / static_cast<double>(points.size());
}

double p2s_error(const SemiRegularMesh& recon, const TriMesh& original) {
  return p2s_error(recon.fine.vertices, original);
}

double vertex_mse(std::span<const Vec3> recon, std::span<const Vec3> truth) {
  if (recon.size() != truth.size()) {
    throw Error(ErrorKind::ShapeMismatch, std::to_string(recon.size()) + " vs " +
                                              std::to_string(truth.size()) + " vertices");
  }
  if (recon.empty()) throw Error(ErrorKind::EmptyMesh, "no vertices");
  double sum = 0.0;
  for (size_t i = 0; i < recon.size(); ++i) sum += (recon[i] - truth[i]).squaredNorm();
  return sum / static_cast<double>(recon.size());
}

double vertex_mse(const SemiRegularMesh& recon, const SemiRegularMesh& truth) {
  return vertex_mse(recon.fine.vertices, truth.fine.vertices);
}

double euclidean_error_units(std::span<const double> distances,
                             const NormalizationTransform& transform) {
  if (distances.empty()) return 0.0;
  double sum = 0.0;
  for (double d : distances) sum += d;
  return sum / static_cast<double>(distances.size()) * transform.uniform_scale();
}

std::string metrics_to_json(const std::vector<MetricRecord>& records) {
  nlohmann::json j = nlohmann::json::array();
  for (const MetricRecord& r : records) {
    j.push_back({{"metric", r.metric},
                 {"value", r.value},
                 {"units", r.units},
                 {"mesh_id", r.mesh_id},
                 {"timestep", r.timestep}});
  }
  return j.dump(1);
}

}  // namespace cosma
