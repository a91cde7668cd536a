#include "cosma/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "cosma/error.hpp"

namespace cosma {

void validate_mesh(const TriMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  std::set<Face> seen;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (int v : t) {
      if (v < 0 || v >= nv) {
        throw Error(ErrorKind::InvalidMesh,
                    "face " + std::to_string(f) + " references vertex " +
                        std::to_string(v) + " of " + std::to_string(nv));
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error(ErrorKind::InvalidMesh,
                  "face " + std::to_string(f) + " repeats a vertex");
    }
    // canonical rotation: smallest index first
    Face c = t;
    std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
    if (!seen.insert(c).second) {
      throw Error(ErrorKind::InvalidMesh,
                  "face " + std::to_string(f) + " duplicates an earlier face");
    }
  }
}

std::vector<Edge> mesh_edges(const TriMesh& mesh) {
  std::vector<Edge> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) edges.push_back(make_edge(t[k], t[(k + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<Edge> boundary_edges(const TriMesh& mesh) {
  std::map<Edge, int> count;
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) ++count[make_edge(t[k], t[(k + 1) % 3])];
  }
  std::vector<Edge> result;
  for (const auto& [e, c] : count) {
    if (c == 1) result.push_back(e);
  }
  return result;
}

double face_area(const TriMesh& mesh, int face) {
  const Face& t = mesh.faces[face];
  const Vec3& a = mesh.vertices[t[0]];
  const Vec3& b = mesh.vertices[t[1]];
  const Vec3& c = mesh.vertices[t[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

// -----------------------------------------------------------------------------
// NORMALIZATION
// -----------------------------------------------------------------------------

bool NormalizationTransform::is_uniform() const {
  return scale.x() == scale.y() && scale.y() == scale.z();
}

double NormalizationTransform::uniform_scale() const {
  if (!is_uniform()) {
    throw Error(ErrorKind::InvalidArgument,
                "per-axis normalization has no single length scale");
  }
  return scale.x();
}

Vec3 NormalizationTransform::apply(const Vec3& p) const {
  return (p - translation).cwiseQuotient(scale);
}

Vec3 NormalizationTransform::invert(const Vec3& p) const {
  return p.cwiseProduct(scale) + translation;
}

TriMesh NormalizationTransform::apply(const TriMesh& mesh) const {
  TriMesh out = mesh;
  for (Vec3& p : out.vertices) p = apply(p);
  return out;
}

TriMesh NormalizationTransform::invert(const TriMesh& mesh) const {
  TriMesh out = mesh;
  for (Vec3& p : out.vertices) p = invert(p);
  return out;
}

std::pair<std::vector<TriMesh>, NormalizationTransform> normalize_to_unit_range(
    std::span<const TriMesh> meshes, NormalizationMode mode) {
  if (meshes.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no meshes to normalize");
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const TriMesh& m : meshes) {
    for (const Vec3& p : m.vertices) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  if (!(lo.array() <= hi.array()).all()) {
    throw Error(ErrorKind::DegenerateExtent, "meshes have no vertices");
  }
  const Vec3 half = 0.5 * (hi - lo);
  NormalizationTransform transform;
  transform.translation = 0.5 * (hi + lo);
  if (mode == NormalizationMode::aspect_preserving) {
    const double s = half.maxCoeff();
    if (!(s > 0)) {
      throw Error(ErrorKind::DegenerateExtent, "zero bounding box");
    }
    transform.scale = Vec3::Constant(s);
  } else {
    if (!(half.maxCoeff() > 0)) {
      throw Error(ErrorKind::DegenerateExtent, "zero bounding box");
    }
    // a flat axis keeps unit scale so the transform stays invertible
    for (int k = 0; k < 3; ++k) transform.scale[k] = half[k] > 0 ? half[k] : 1.0;
  }
  std::vector<TriMesh> out;
  out.reserve(meshes.size());
  for (const TriMesh& m : meshes) out.push_back(transform.apply(m));
  return {std::move(out), transform};
}

}  // namespace cosma
