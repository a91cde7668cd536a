#pragma once

#include <vector>

#include "cosma/mesh.hpp"

namespace cosma {

// A fine mesh with subdivision connectivity together with its patch structure:
// one regular triangular lattice of side 2^rl per base face.
struct SemiRegularMesh {
  int rl = 0;
  TriMesh fine;
  // base faces in fine vertex ids; corners[b] = lattice points (0,0), (n,0), (0,n)
  std::vector<Face> base_faces;
  // per base face, fine vertex ids in lattice order (lattice_index)
  std::vector<std::vector<int>> patch_vertices;

  int side() const { return 1 << rl; }
  int patch_count() const { return static_cast<int>(base_faces.size()); }
  int vertex_count() const { return static_cast<int>(fine.vertices.size()); }

  // Coarse base mesh with compacted vertex ids, positioned at the current
  // fine corner positions.
  TriMesh base_mesh() const;

  // Same topology, new positions.
  SemiRegularMesh with_positions(std::vector<Vec3> positions) const;

  // Subdivides `base` rl times with subdivide_midpoint.
  static SemiRegularMesh from_base(const TriMesh& base, int rl);

  // Recovers the patch structure of an existing mesh; throws
  // NotSemiRegularError when the mesh lacks subdivision connectivity.
  static SemiRegularMesh from_mesh(const TriMesh& fine, int rl);
};

// True iff both meshes have identical faces and patch layout.
bool same_topology(const SemiRegularMesh& a, const SemiRegularMesh& b);

}  // namespace cosma
