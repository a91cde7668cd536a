#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cosma {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;
using Edge = std::pair<int, int>;  // stored with first < second

// Indexed triangle mesh. Carries both irregular input meshes and the fine
// level of semi-regular meshes.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string name;
};

// Throws ErrorKind::InvalidMesh when a face index is out of range, a face
// repeats a vertex, or two faces coincide up to cyclic order.
void validate_mesh(const TriMesh& mesh);

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Unique undirected edges, sorted.
std::vector<Edge> mesh_edges(const TriMesh& mesh);

// Edges used by exactly one face.
std::vector<Edge> boundary_edges(const TriMesh& mesh);

double face_area(const TriMesh& mesh, int face);

// -----------------------------------------------------------------------------
// FILE I/O
// -----------------------------------------------------------------------------

enum class MeshFormat { obj, off, ply_ascii };

// Picks the format from the file extension (.obj, .off, .ply).
MeshFormat format_from_path(const std::filesystem::path& path);

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TriMesh load_mesh(const std::filesystem::path& path);

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

// -----------------------------------------------------------------------------
// SUBDIVISION
// -----------------------------------------------------------------------------

// One step of midpoint subdivision. Original vertices keep their indices,
// edge midpoints are appended in sorted-edge order, and input face f becomes
// output faces 4f..4f+3: the three corner faces (at v0, v1, v2) followed by the
// center face.
TriMesh subdivide_midpoint(const TriMesh& mesh);

struct PatchFace {
  int base_face = -1;
  int local_face = -1;
};

// Result of undoing `rl` midpoint subdivisions. Vertex ids are those of the
// fine mesh.
struct SubdivisionDecomposition {
  int base_faces = 0;
  int rl = 0;
  // fine face -> (base face, local face id); local ids follow the face order
  // produced by subdivide_midpoint (base-4 digits, coarse to fine).
  std::vector<PatchFace> face_to_patch;
  // refinement step at which a vertex was created; 0 for base vertices,
  // -1 for vertices no face references.
  std::vector<int> vertex_levels;
  // base faces expressed in fine vertex ids
  std::vector<Face> base_corners;
  // per base face, fine vertex ids of the (2^rl+1)(2^rl+2)/2 lattice points
  // in lattice order (see lattice_index)
  std::vector<std::vector<int>> lattice;
};

// Succeeds iff the mesh can be coarsened `rl` times by inverting midpoint
// subdivision; throws NotSemiRegularError otherwise.
SubdivisionDecomposition check_subdivision_connectivity(const TriMesh& mesh,
                                                        int rl);

// Linear index of lattice point (a, b), a, b >= 0, a + b <= n, ordered by b
// then a.
inline int lattice_index(int a, int b, int n) {
  return b * (n + 1) - (b * (b - 1)) / 2 + a;
}

inline int lattice_count(int n) { return (n + 1) * (n + 2) / 2; }

// -----------------------------------------------------------------------------
// DECIMATION
// -----------------------------------------------------------------------------

// Greedy shortest-edge collapse with a link-condition check. The result has
// between target_faces and target_faces + 2 faces.
TriMesh decimate_to_base(const TriMesh& mesh, int target_faces);

// -----------------------------------------------------------------------------
// NORMALIZATION
// -----------------------------------------------------------------------------

enum class NormalizationMode { per_axis, aspect_preserving };

// normalized = (raw - translation) / scale, applied per axis.
struct NormalizationTransform {
  Vec3 translation = Vec3::Zero();
  Vec3 scale = Vec3::Ones();

  bool is_uniform() const;
  // The single scale factor of an aspect-preserving transform; throws
  // InvalidArgument for per-axis transforms with unequal factors.
  double uniform_scale() const;

  Vec3 apply(const Vec3& p) const;
  Vec3 invert(const Vec3& p) const;
  TriMesh apply(const TriMesh& mesh) const;
  TriMesh invert(const TriMesh& mesh) const;
};

// Joint normalization of a whole sequence into [-1, 1]: the joint bounding box
// center goes to the origin. Aspect-preserving mode divides every axis by half
// the largest extent; per-axis mode divides each axis by its own half extent.
std::pair<std::vector<TriMesh>, NormalizationTransform> normalize_to_unit_range(
    std::span<const TriMesh> meshes, NormalizationMode mode);

}  // namespace cosma
