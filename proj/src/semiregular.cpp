#include "cosma/semiregular.hpp"

#include "cosma/error.hpp"

namespace cosma {

TriMesh SemiRegularMesh::base_mesh() const {
  TriMesh base;
  base.name = fine.name;
  std::vector<int> remap(fine.vertices.size(), -1);
  for (Face f : base_faces) {
    for (int& v : f) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(base.vertices.size());
        base.vertices.push_back(fine.vertices[v]);
      }
      v = remap[v];
    }
    base.faces.push_back(f);
  }
  return base;
}

SemiRegularMesh SemiRegularMesh::with_positions(std::vector<Vec3> positions) const {
  if (positions.size() != fine.vertices.size()) {
    throw Error(ErrorKind::ShapeMismatch, "position count differs from vertex count");
  }
  SemiRegularMesh out = *this;
  out.fine.vertices = std::move(positions);
  return out;
}

SemiRegularMesh SemiRegularMesh::from_base(const TriMesh& base, int rl) {
  if (rl < 0) throw Error(ErrorKind::InvalidArgument, "negative refinement level");
  TriMesh fine = base;
  for (int j = 0; j < rl; ++j) fine = subdivide_midpoint(fine);
  return from_mesh(fine, rl);
}

SemiRegularMesh SemiRegularMesh::from_mesh(const TriMesh& fine, int rl) {
  SubdivisionDecomposition d = check_subdivision_connectivity(fine, rl);
  SemiRegularMesh out;
  out.rl = rl;
  out.fine = fine;
  out.base_faces = std::move(d.base_corners);
  out.patch_vertices = std::move(d.lattice);
  return out;
}

bool same_topology(const SemiRegularMesh& a, const SemiRegularMesh& b) {
  return a.rl == b.rl && a.fine.faces == b.fine.faces && a.base_faces == b.base_faces &&
         a.patch_vertices == b.patch_vertices && a.fine.vertices.size() == b.fine.vertices.size();
}

}  // namespace cosma
