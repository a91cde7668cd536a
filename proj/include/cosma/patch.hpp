#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cosma/mesh.hpp"
#include "cosma/semiregular.hpp"

namespace cosma {

// Integer barycentric lattice coordinates: the point c0 + a/n (c1 - c0) +
// b/n (c2 - c0) of a patch with corners c0, c1, c2. Pad slots have a, b or
// n - a - b negative.
struct LatticeCoord {
  int a = 0;
  int b = 0;
  bool operator==(const LatticeCoord&) const = default;
};

// Hex (graph) distance between two triangular-lattice points.
int lattice_distance(LatticeCoord p, LatticeCoord q);

// Distance from a lattice point to the closed triangle of side n.
int distance_to_triangle(LatticeCoord p, int n);

// Coarse parents of one vertex for unpooling. `parents` holds 1 entry for a
// retained vertex, 2 for an edge midpoint; when no parent exists in the
// coarse set it is empty and `clamp` names the nearest coarse vertex.
struct UnpoolParents {
  std::vector<int> parents;
  int clamp = -1;
};

// One resolution of the padded patch. Level l holds the template slots whose
// lattice coordinates are multiples of 2^l; indices below are local to the
// level.
struct TemplateLevel {
  std::vector<int> slots;            // template slot ids, ascending
  std::vector<LatticeCoord> coords;  // coordinates in level units
  std::vector<Edge> adjacency;
  int interior_count = 0;            // interior vertices come first
  std::vector<int> keep;             // vertices retained by pooling to l+1
  std::vector<UnpoolParents> unpool; // parents in level l+1 per vertex
};

// The fixed padded patch graph of a refinement level: interior lattice plus
// every lattice point within graph distance 2 of it.
struct PaddedPatchTemplate {
  int rl = 0;
  int n = 0;  // lattice side 2^rl
  int interior_count = 0;
  int total_count = 0;
  // slot order: interior (by b, then a), then distance-1 pad, then distance-2
  // pad, each ordered by (b, a)
  std::vector<LatticeCoord> coords;
  std::vector<int> ring;  // 0 interior, 1 or 2 pad distance
  std::vector<Edge> adjacency;
  std::vector<int> pool_keep;                 // == levels[0].keep
  std::vector<UnpoolParents> unpool_parents;  // == levels[0].unpool
  // rotations[r][slot] = slot that `slot` moves to under a rotation by r*120
  // degrees, (a, b) -> (n - a - b, a)
  std::array<std::vector<int>, 3> rotations;
  std::array<TemplateLevel, 3> levels;

  int slot_of(LatticeCoord c) const;  // -1 outside the template

  // Rotation permutation restricted to a level (local indices).
  std::vector<int> level_rotation(int level, int r) const;
};

// Throws UnsupportedLevel unless rl is 2, 3 or 4.
const PaddedPatchTemplate& patch_template(int rl);
PaddedPatchTemplate build_patch_template(int rl);

// Debug and cross-implementation export of adjacency, pool maps and
// permutations.
std::string template_to_json(const PaddedPatchTemplate& tmpl);

std::array<std::vector<int>, 3> rotation_permutations(const PaddedPatchTemplate& tmpl);

// Maps every template slot of every patch to a global vertex of a
// semi-regular mesh. Depends on topology only.
struct PatchTopology {
  int rl = 0;
  int vertex_count = 0;
  std::vector<std::vector<int>> slot_vertex;  // [patch][slot]
  std::vector<std::vector<char>> replicated;  // [patch][slot], 1 = boundary replication
  std::vector<int> multiplicity;              // per global vertex, |P_i|

  int patch_count() const { return static_cast<int>(slot_vertex.size()); }

  // 1 / |P_i| for the interior slots of one patch.
  Eigen::VectorXd interior_weights(int patch, const PaddedPatchTemplate& tmpl) const;
};

PatchTopology build_patch_topology(const SemiRegularMesh& mesh);

// Number of patches containing each global vertex.
std::vector<int> vertex_multiplicities(const SemiRegularMesh& mesh);

// Per-patch zero-mean padded features of one frame.
struct PatchSet {
  std::vector<Eigen::MatrixXd> features;  // total_count x 3 each
  std::vector<Vec3> offsets;              // subtracted translation
  std::shared_ptr<const PatchTopology> topology;

  int patch_count() const { return static_cast<int>(features.size()); }
};

PatchSet extract_patches(const SemiRegularMesh& frame);
PatchSet extract_patches(const SemiRegularMesh& frame,
                         std::shared_ptr<const PatchTopology> topology);

// Global vertex positions: interior reconstructions plus offsets, averaged
// over the patches sharing a vertex. Pad slots are ignored.
std::vector<Vec3> reassemble(const PatchSet& patches);

// Row permutation of a feature matrix: out.row(perm[i]) = in.row(i).
Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& in, const std::vector<int>& perm);

}  // namespace cosma
