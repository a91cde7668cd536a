#include <algorithm>
#include <queue>
#include <set>

#include "cosma/error.hpp"
#include "cosma/mesh.hpp"

namespace cosma {

namespace {

class EdgeCollapser {
 public:
  explicit EdgeCollapser(const TriMesh& mesh)
      : pos_(mesh.vertices),
        faces_(mesh.faces),
        face_alive_(mesh.faces.size(), true),
        vert_alive_(mesh.vertices.size(), true),
        vert_faces_(mesh.vertices.size()),
        live_faces_(static_cast<int>(mesh.faces.size())) {
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      for (int v : faces_[f]) vert_faces_[v].insert(f);
    }
  }

  int live_faces() const { return live_faces_; }

  // One pass over a fresh queue; returns the number of collapses performed.
  int pass(int stop_at) {
    using Item = std::pair<double, Edge>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    for (const Edge& e : live_edges()) queue.push({length2(e), e});
    int collapsed = 0;
    while (!queue.empty() && live_faces_ > stop_at) {
      auto [len2, e] = queue.top();
      queue.pop();
      auto [u, v] = e;
      if (!vert_alive_[u] || !vert_alive_[v]) continue;
      if (len2 != length2(e)) {
        if (shared_faces(u, v).empty()) continue;
        queue.push({length2(e), e});
        continue;
      }
      if (!try_collapse(u, v)) continue;
      ++collapsed;
      for (int x : neighbors(u)) queue.push({length2(make_edge(u, x)), make_edge(u, x)});
    }
    return collapsed;
  }

  TriMesh result() const {
    TriMesh out;
    std::vector<int> remap(pos_.size(), -1);
    std::set<Face> seen;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      if (!face_alive_[f]) continue;
      Face t = faces_[f];
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
      Face key = t;
      std::rotate(key.begin(), std::min_element(key.begin(), key.end()), key.end());
      if (!seen.insert(key).second) continue;
      for (int& v : t) {
        if (remap[v] < 0) {
          remap[v] = static_cast<int>(out.vertices.size());
          out.vertices.push_back(pos_[v]);
        }
        v = remap[v];
      }
      out.faces.push_back(t);
    }
    return out;
  }

 private:
  double length2(const Edge& e) const { return (pos_[e.first] - pos_[e.second]).squaredNorm(); }

  std::vector<Edge> live_edges() const {
    std::vector<Edge> edges;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      if (!face_alive_[f]) continue;
      for (int k = 0; k < 3; ++k) edges.push_back(make_edge(faces_[f][k], faces_[f][(k + 1) % 3]));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
  }

  std::vector<int> shared_faces(int u, int v) const {
    std::vector<int> out;
    for (int f : vert_faces_[u]) {
      if (vert_faces_[v].count(f)) out.push_back(f);
    }
    return out;
  }

  std::set<int> neighbors(int u) const {
    std::set<int> n;
    for (int f : vert_faces_[u]) {
      for (int x : faces_[f]) {
        if (x != u) n.insert(x);
      }
    }
    return n;
  }

  bool is_boundary_edge(int u, int v) const { return shared_faces(u, v).size() == 1; }

  bool is_boundary_vertex(int u) const {
    for (int x : neighbors(u)) {
      if (is_boundary_edge(u, x)) return true;
    }
    return false;
  }

  static Vec3 normal(const Vec3& a, const Vec3& b, const Vec3& c) { return (b - a).cross(c - a); }

  bool try_collapse(int u, int v) {
    const std::vector<int> shared = shared_faces(u, v);
    if (shared.empty() || shared.size() > 2) return false;
    const bool boundary_edge = shared.size() == 1;
    // link condition: common neighbors are exactly the opposite vertices
    std::set<int> opposite;
    for (int f : shared) {
      for (int x : faces_[f]) {
        if (x != u && x != v) opposite.insert(x);
      }
    }
    const std::set<int> nu = neighbors(u), nv = neighbors(v);
    std::vector<int> common;
    std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
    if (common.size() != opposite.size()) return false;
    const bool bu = is_boundary_vertex(u), bv = is_boundary_vertex(v);
    if (!boundary_edge && bu && bv) return false;
    if (live_faces_ - static_cast<int>(shared.size()) < 4 && !boundary_edge) return false;

    Vec3 target = 0.5 * (pos_[u] + pos_[v]);
    if (bu && !bv) target = pos_[u];
    if (bv && !bu) target = pos_[v];

    // reject fold-overs and degenerate results
    for (int w : {u, v}) {
      for (int f : vert_faces_[w]) {
        if (std::find(shared.begin(), shared.end(), f) != shared.end()) continue;
        const Face& t = faces_[f];
        Vec3 p[3], q[3];
        for (int k = 0; k < 3; ++k) {
          p[k] = pos_[t[k]];
          q[k] = (t[k] == u || t[k] == v) ? target : pos_[t[k]];
        }
        const Vec3 n0 = normal(p[0], p[1], p[2]);
        const Vec3 n1 = normal(q[0], q[1], q[2]);
        if (n1.norm() <= 1e-12 * std::max(1.0, n0.norm()) || n0.dot(n1) <= 0) return false;
      }
    }

    for (int f : shared) {
      face_alive_[f] = false;
      for (int x : faces_[f]) vert_faces_[x].erase(f);
      --live_faces_;
    }
    for (int f : vert_faces_[v]) {
      for (int& x : faces_[f]) {
        if (x == v) x = u;
      }
      vert_faces_[u].insert(f);
    }
    vert_faces_[v].clear();
    vert_alive_[v] = false;
    pos_[u] = target;
    return true;
  }

  std::vector<Vec3> pos_;
  std::vector<Face> faces_;
  std::vector<bool> face_alive_;
  std::vector<bool> vert_alive_;
  std::vector<std::set<int>> vert_faces_;
  int live_faces_;
};

}  // namespace

TriMesh decimate_to_base(const TriMesh& mesh, int target_faces) {
  validate_mesh(mesh);
  const int nf = static_cast<int>(mesh.faces.size());
  if (target_faces < 4) {
    throw Error(ErrorKind::CannotDecimate, "target of " + std::to_string(target_faces) +
                                               " faces is below the 4-face minimum");
  }
  if (target_faces > nf) {
    throw Error(ErrorKind::InvalidArgument, "target exceeds input face count");
  }
  if (nf <= target_faces + 2) return mesh;
  EdgeCollapser collapser(mesh);
  while (collapser.live_faces() > target_faces + 2) {
    if (collapser.pass(target_faces + 2) == 0) {
      throw Error(ErrorKind::CannotDecimate,
                  "no admissible collapse left at " + std::to_string(collapser.live_faces()) +
                      " faces");
    }
  }
  TriMesh out = collapser.result();
  out.name = mesh.name;
  return out;
}

}  // namespace cosma
