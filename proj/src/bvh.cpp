#include "cosma/bvh.hpp"

#include <algorithm>
#include <numeric>

#include "cosma/error.hpp"

namespace cosma {

AabbTree::AabbTree(std::span<const Box3> boxes, int leaf_size) {
  if (boxes.empty()) return;
  order_.resize(boxes.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centers(boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) centers[i] = boxes[i].center();
  nodes_.reserve(2 * boxes.size() / std::max(1, leaf_size) + 2);
  build(boxes, centers, 0, static_cast<int>(boxes.size()), std::max(1, leaf_size));
}

int AabbTree::build(std::span<const Box3> boxes, std::vector<Vec3>& centers, int first,
                    int count, int leaf_size) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Box3 box;
  Box3 center_box;
  for (int k = first; k < first + count; ++k) {
    box.extend(boxes[order_[k]]);
    center_box.extend(centers[order_[k]]);
  }
  nodes_[index].box = box;
  if (count <= leaf_size) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  center_box.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     if (centers[a][axis] != centers[b][axis]) return centers[a][axis] < centers[b][axis];
                     return a < b;
                   });
  const int left = build(boxes, centers, first, mid - first, leaf_size);
  const int right = build(boxes, centers, mid, first + count - mid, leaf_size);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

PointIndex::PointIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  std::vector<Box3> boxes(points_.size());
  for (size_t i = 0; i < points_.size(); ++i) boxes[i] = Box3(points_[i], points_[i]);
  tree_ = AabbTree(boxes, 8);
}

AabbTree::Hit PointIndex::nearest(const Vec3& q) const {
  return tree_.nearest(q, [&](const Vec3& x, int i) { return (points_[i] - x).squaredNorm(); });
}

SurfaceIndex::SurfaceIndex(const TriMesh& mesh) : mesh_(mesh) {
  if (mesh_.faces.empty()) throw Error(ErrorKind::EmptyMesh, "surface has no triangles");
  std::vector<Box3> boxes(mesh_.faces.size());
  for (size_t f = 0; f < mesh_.faces.size(); ++f) {
    for (int v : mesh_.faces[f]) boxes[f].extend(mesh_.vertices[v]);
  }
  tree_ = AabbTree(boxes, 4);
}

SurfaceIndex::Result SurfaceIndex::closest(const Vec3& q) const {
  Result result;
  const auto hit = tree_.nearest(q, [&](const Vec3& x, int f) {
    const Face& t = mesh_.faces[f];
    const Vec3 c = closest_point_on_triangle(x, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                             mesh_.vertices[t[2]]);
    return (c - x).squaredNorm();
  });
  result.face = hit.primitive;
  result.distance2 = hit.distance2;
  const Face& t = mesh_.faces[hit.primitive];
  result.point = closest_point_on_triangle(q, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                           mesh_.vertices[t[2]]);
  return result;
}

}  // namespace cosma
