#pragma once

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "cosma/mesh.hpp"

namespace cosma {

using Box3 = Eigen::AlignedBox3d;

// Median-split axis-aligned bounding-box tree over abstract primitives. The
// tree stores primitive ids only; distance evaluation is supplied per query.
class AabbTree {
 public:
  AabbTree() = default;
  explicit AabbTree(std::span<const Box3> boxes, int leaf_size = 4);

  bool empty() const { return nodes_.empty(); }

  struct Hit {
    int primitive = -1;
    double distance2 = std::numeric_limits<double>::infinity();
  };

  // Nearest primitive to q under `dist2(q, primitive)`, which must never be
  // smaller than the squared distance from q to the primitive's box. Ties go
  // to the lower primitive id.
  template <typename Dist2>
  Hit nearest(const Vec3& q, Dist2&& dist2) const {
    Hit best;
    if (nodes_.empty()) return best;
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squaredExteriorDistance(q) > best.distance2) continue;
      if (node.count > 0) {
        for (int k = node.first; k < node.first + node.count; ++k) {
          const int p = order_[k];
          const double d = dist2(q, p);
          if (d < best.distance2 || (d == best.distance2 && p < best.primitive)) {
            best = {p, d};
          }
        }
        continue;
      }
      // visit the closer child first
      const double dl = nodes_[node.left].box.squaredExteriorDistance(q);
      const double dr = nodes_[node.right].box.squaredExteriorDistance(q);
      if (dl <= dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    return best;
  }

 private:
  struct Node {
    Box3 box;
    int left = -1, right = -1;
    int first = 0, count = 0;  // leaf range in order_ when count > 0
  };

  int build(std::span<const Box3> boxes, std::vector<Vec3>& centers, int first, int count,
            int leaf_size);

  std::vector<Node> nodes_;
  std::vector<int> order_;
};

// Exact closest point on triangle abc (vertex, edge, or face region).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Nearest-neighbor index over a fixed point set.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(std::span<const Vec3> points);

  // Index of the nearest point and its squared distance.
  AabbTree::Hit nearest(const Vec3& q) const;
  std::span<const Vec3> points() const { return points_; }

 private:
  std::vector<Vec3> points_;
  AabbTree tree_;
};

// Closest-point queries against the union of a mesh's triangles.
class SurfaceIndex {
 public:
  explicit SurfaceIndex(const TriMesh& mesh);

  struct Result {
    int face = -1;
    Vec3 point = Vec3::Zero();
    double distance2 = std::numeric_limits<double>::infinity();
  };

  Result closest(const Vec3& q) const;

 private:
  TriMesh mesh_;
  AabbTree tree_;
};

}  // namespace cosma
