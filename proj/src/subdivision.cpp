#include <algorithm>
#include <map>
#include <numeric>
#include <optional>

#include "cosma/error.hpp"
#include "cosma/mesh.hpp"

namespace cosma {

TriMesh subdivide_midpoint(const TriMesh& mesh) {
  validate_mesh(mesh);
  const std::vector<Edge> edges = mesh_edges(mesh);
  const int nv = static_cast<int>(mesh.vertices.size());
  TriMesh out;
  out.name = mesh.name;
  out.vertices = mesh.vertices;
  out.vertices.reserve(nv + edges.size());
  for (const Edge& e : edges) {
    out.vertices.push_back(0.5 * (mesh.vertices[e.first] + mesh.vertices[e.second]));
  }
  const auto mid = [&](int a, int b) {
    auto it = std::lower_bound(edges.begin(), edges.end(), make_edge(a, b));
    return nv + static_cast<int>(it - edges.begin());
  };
  out.faces.reserve(mesh.faces.size() * 4);
  for (const Face& f : mesh.faces) {
    const int m01 = mid(f[0], f[1]);
    const int m12 = mid(f[1], f[2]);
    const int m20 = mid(f[2], f[0]);
    out.faces.push_back({f[0], m01, m20});
    out.faces.push_back({f[1], m12, m01});
    out.faces.push_back({f[2], m20, m12});
    out.faces.push_back({m01, m12, m20});
  }
  return out;
}

// -----------------------------------------------------------------------------
// INVERSE SUBDIVISION
// -----------------------------------------------------------------------------

namespace {

// Result of undoing one midpoint-subdivision step. Vertex ids are unchanged.
struct CoarsenStep {
  std::vector<Face> coarse_faces;
  // per coarse face: fine faces at corners 0, 1, 2, then the center face
  std::vector<std::array<int, 4>> children;
  std::map<Edge, int> midpoint;  // coarse edge -> odd vertex
  std::vector<int> odd_vertices;
};

struct Ring {
  std::vector<int> verts;  // ordered neighbors
  bool closed = false;
  bool valid = false;
};

class Coarsener {
 public:
  Coarsener(const std::vector<Face>& faces, int num_vertices)
      : faces_(faces), incident_(num_vertices), rings_(num_vertices), ring_done_(num_vertices, false) {
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      for (int v : faces[f]) incident_[v].push_back(f);
    }
  }

  // Throws std::string on failure (caught and converted by the caller).
  CoarsenStep run() {
    const int nf = static_cast<int>(faces_.size());
    if (nf % 4 != 0) throw std::string("face count is not a multiple of 4");
    std::vector<int> comp = face_components();
    std::vector<int> label(incident_.size(), kUnknown);
    std::vector<bool> comp_done(nf, false);
    for (int f = 0; f < nf; ++f) {
      if (comp_done[comp[f]]) continue;
      comp_done[comp[f]] = true;
      label_component(f, comp, label);
    }
    return assemble(label);
  }

 private:
  static constexpr int kUnknown = -1, kOdd = 0, kEven = 1;

  std::vector<int> face_components() const {
    const int nf = static_cast<int>(faces_.size());
    std::vector<int> parent(nf);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& inc : incident_) {
      for (size_t k = 1; k < inc.size(); ++k) {
        int a = find(inc[0]), b = find(inc[k]);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
    std::vector<int> comp(nf);
    for (int f = 0; f < nf; ++f) comp[f] = find(f);
    return comp;
  }

  const Ring& ring(int v) {
    if (ring_done_[v]) return rings_[v];
    ring_done_[v] = true;
    Ring& r = rings_[v];
    std::map<int, int> succ;
    std::map<int, int> pred;
    for (int f : incident_[v]) {
      const Face& t = faces_[f];
      int k = t[0] == v ? 0 : t[1] == v ? 1 : 2;
      int p = t[(k + 1) % 3], q = t[(k + 2) % 3];
      if (succ.count(p) || pred.count(q)) return r;  // non-manifold or misoriented fan
      succ[p] = q;
      pred[q] = p;
    }
    if (succ.empty()) return r;
    int start = succ.begin()->first;
    for (const auto& [p, q] : succ) {
      if (!pred.count(p)) {
        start = p;
        break;
      }
    }
    int cur = start;
    r.verts.push_back(cur);
    for (;;) {
      auto it = succ.find(cur);
      if (it == succ.end()) break;
      cur = it->second;
      if (cur == start) {
        r.closed = true;
        break;
      }
      r.verts.push_back(cur);
    }
    const size_t expected = incident_[v].size() + (r.closed ? 0 : 1);
    r.valid = r.verts.size() == expected;
    return r;
  }

  // Vertex across odd vertex y from its neighbor e, or -1.
  int opposite(int y, int e) {
    const Ring& r = ring(y);
    if (!r.valid) return -1;
    auto it = std::find(r.verts.begin(), r.verts.end(), e);
    if (it == r.verts.end()) return -1;
    const int i = static_cast<int>(it - r.verts.begin());
    if (r.closed) {
      if (r.verts.size() != 6) return -1;
      return r.verts[(i + 3) % 6];
    }
    if (r.verts.size() != 4) return -1;
    if (i == 0) return r.verts[3];
    if (i == 3) return r.verts[0];
    return -1;
  }

  bool propagate(int seed_even, std::vector<int>& label) {
    std::vector<int> queue;
    const auto set_even = [&](int x) {
      if (label[x] == kOdd) return false;
      if (label[x] == kUnknown) {
        label[x] = kEven;
        queue.push_back(x);
      }
      return true;
    };
    if (!set_even(seed_even)) return false;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const int x = queue[qi];
      for (int f : incident_[x]) {
        for (int y : faces_[f]) {
          if (y == x) continue;
          if (label[y] == kEven) return false;
          label[y] = kOdd;
          const int opp = opposite(y, x);
          if (opp < 0 || !set_even(opp)) return false;
        }
      }
    }
    return true;
  }

  // Try the four ways the seed face can sit in a subdivided mesh: a corner
  // face at one of its three vertices, or a center face.
  void label_component(int seed, const std::vector<int>& comp,
                       std::vector<int>& label) {
    const Face& t = faces_[seed];
    std::vector<int> candidates{t[0], t[1], t[2]};
    for (int f : incident_[t[0]]) {
      if (f == seed) continue;
      const Face& g = faces_[f];
      if (std::find(g.begin(), g.end(), t[1]) == g.end()) continue;
      for (int v : g) {
        if (v != t[0] && v != t[1]) candidates.push_back(v);
      }
      break;
    }
    std::vector<int> members;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      if (comp[f] == comp[seed]) members.push_back(f);
    }
    for (int cand : candidates) {
      std::vector<int> trial = label;
      if (!propagate(cand, trial)) continue;
      if (!component_consistent(members, trial)) continue;
      label = std::move(trial);
      return;
    }
    throw std::string("no consistent even/odd labeling for face " + std::to_string(seed));
  }

  bool component_consistent(const std::vector<int>& members, const std::vector<int>& label) {
    for (int f : members) {
      int evens = 0;
      for (int v : faces_[f]) {
        if (label[v] == kUnknown) return false;
        evens += label[v] == kEven;
      }
      if (evens > 1) return false;
      for (int v : faces_[f]) {
        if (label[v] != kOdd) continue;
        const Ring& r = ring(v);
        int even_neighbors = 0;
        for (int u : r.verts) even_neighbors += label[u] == kEven;
        if (even_neighbors != 2) return false;
      }
    }
    return true;
  }

  CoarsenStep assemble(const std::vector<int>& label) {
    struct Record {
      Face corners{-1, -1, -1};
      std::array<int, 4> children{-1, -1, -1, -1};
      int first_child = -1;
    };
    std::map<Face, Record> records;  // keyed by sorted corners
    const auto sorted = [](Face f) {
      std::sort(f.begin(), f.end());
      return f;
    };
    const int nf = static_cast<int>(faces_.size());
    std::vector<int> centers;
    for (int f = 0; f < nf; ++f) {
      const Face& t = faces_[f];
      int k = -1;
      for (int j = 0; j < 3; ++j) {
        if (label[t[j]] == kEven) k = j;
      }
      if (k < 0) {
        centers.push_back(f);
        continue;
      }
      const int e = t[k], u = t[(k + 1) % 3], w = t[(k + 2) % 3];
      const Face coarse{e, opposite(u, e), opposite(w, e)};
      if (coarse[1] < 0 || coarse[2] < 0 || coarse[1] == coarse[2]) {
        throw std::string("corner face " + std::to_string(f) + " has no coarse triangle");
      }
      Record& rec = records[sorted(coarse)];
      if (rec.corners[0] < 0) rec.corners = coarse;
      // corner slot of e within the recorded orientation
      int slot = -1;
      for (int j = 0; j < 3; ++j) {
        if (rec.corners[j] == e) slot = j;
      }
      if (rec.corners[(slot + 1) % 3] != coarse[1]) {
        throw std::string("inconsistent orientation around coarse face");
      }
      if (rec.children[slot] >= 0) throw std::string("coarse corner claimed twice");
      rec.children[slot] = f;
    }
    CoarsenStep step;
    for (const auto& [key, rec] : records) {
      for (int j = 0; j < 3; ++j) {
        if (rec.children[j] < 0) throw std::string("coarse face misses a corner face");
        const int a = rec.corners[j], b = rec.corners[(j + 1) % 3];
        const Face& t = faces_[rec.children[j]];
        int k = t[0] == a ? 0 : t[1] == a ? 1 : 2;
        const int m = t[(k + 1) % 3];  // midpoint of (a, b)
        auto [it, inserted] = step.midpoint.emplace(make_edge(a, b), m);
        if (!inserted && it->second != m) throw std::string("edge has two midpoints");
      }
    }
    for (int f : centers) {
      const Face& t = faces_[f];
      std::vector<int> evens;
      for (int v : t) {
        for (int u : ring(v).verts) {
          if (label[u] == kEven) evens.push_back(u);
        }
      }
      std::sort(evens.begin(), evens.end());
      evens.erase(std::unique(evens.begin(), evens.end()), evens.end());
      if (evens.size() != 3) throw std::string("center face " + std::to_string(f) + " is ambiguous");
      auto it = records.find(Face{evens[0], evens[1], evens[2]});
      if (it == records.end()) throw std::string("center face without coarse face");
      Record& rec = it->second;
      if (rec.children[3] >= 0) throw std::string("coarse face has two center faces");
      const Face& c = rec.corners;
      const Face expect{step.midpoint.at(make_edge(c[0], c[1])),
                        step.midpoint.at(make_edge(c[1], c[2])),
                        step.midpoint.at(make_edge(c[2], c[0]))};
      bool match = false;
      for (int r = 0; r < 3; ++r) {
        match |= t[0] == expect[r] && t[1] == expect[(r + 1) % 3] && t[2] == expect[(r + 2) % 3];
      }
      if (!match) throw std::string("center face does not join the edge midpoints");
      rec.children[3] = f;
    }
    std::vector<Record> ordered;
    for (auto& [key, rec] : records) {
      if (rec.children[3] < 0) throw std::string("coarse face misses its center face");
      // rotate so the corner with the lowest-index child comes first
      int best = 0;
      for (int j = 1; j < 3; ++j) {
        if (rec.children[j] < rec.children[best]) best = j;
      }
      Record r = rec;
      for (int j = 0; j < 3; ++j) {
        r.corners[j] = rec.corners[(j + best) % 3];
        r.children[j] = rec.children[(j + best) % 3];
      }
      r.first_child = *std::min_element(r.children.begin(), r.children.end());
      ordered.push_back(r);
    }
    if (ordered.size() * 4 != faces_.size()) throw std::string("faces left unassigned");
    std::sort(ordered.begin(), ordered.end(),
              [](const Record& a, const Record& b) { return a.first_child < b.first_child; });
    for (const Record& r : ordered) {
      step.coarse_faces.push_back(r.corners);
      step.children.push_back(r.children);
    }
    for (size_t v = 0; v < label.size(); ++v) {
      if (label[v] == kOdd) step.odd_vertices.push_back(static_cast<int>(v));
    }
    return step;
  }

  const std::vector<Face>& faces_;
  std::vector<std::vector<int>> incident_;
  std::vector<Ring> rings_;
  std::vector<bool> ring_done_;
};

}  // namespace

SubdivisionDecomposition check_subdivision_connectivity(const TriMesh& mesh, int rl) {
  if (rl < 0) throw Error(ErrorKind::InvalidArgument, "negative refinement level");
  validate_mesh(mesh);
  const int nv = static_cast<int>(mesh.vertices.size());
  // steps[j] undoes refinement j+1 (level j+1 -> level j)
  std::vector<CoarsenStep> steps(rl);
  std::vector<Face> current = mesh.faces;
  for (int j = rl - 1; j >= 0; --j) {
    try {
      steps[j] = Coarsener(current, nv).run();
    } catch (const std::string& why) {
      throw NotSemiRegularError(rl - j, why);
    }
    current = steps[j].coarse_faces;
  }

  SubdivisionDecomposition d;
  d.rl = rl;
  d.base_corners = current;
  d.base_faces = static_cast<int>(current.size());

  d.vertex_levels.assign(nv, -1);
  for (const Face& f : current) {
    for (int v : f) d.vertex_levels[v] = 0;
  }
  for (int j = 0; j < rl; ++j) {
    for (int v : steps[j].odd_vertices) d.vertex_levels[v] = j + 1;
  }

  // face_to_patch, top down
  std::vector<PatchFace> level_map(d.base_faces);
  for (int b = 0; b < d.base_faces; ++b) level_map[b] = {b, 0};
  for (int j = 0; j < rl; ++j) {
    std::vector<PatchFace> next(steps[j].children.size() * 4);
    for (size_t c = 0; c < steps[j].children.size(); ++c) {
      for (int s = 0; s < 4; ++s) {
        next[steps[j].children[c][s]] = {level_map[c].base_face, level_map[c].local_face * 4 + s};
      }
    }
    level_map = std::move(next);
  }
  d.face_to_patch = std::move(level_map);

  // lattices, refined level by level
  d.lattice.resize(d.base_faces);
  for (int b = 0; b < d.base_faces; ++b) {
    const Face& c = d.base_corners[b];
    std::vector<int> lat{c[0], c[1], c[2]};  // side 1: (0,0), (1,0), (0,1)
    int side = 1;
    for (int j = 0; j < rl; ++j) {
      const int fine = side * 2;
      std::vector<int> next(lattice_count(fine), -1);
      const auto at = [&](int a, int bb) { return lat[lattice_index(a, bb, side)]; };
      const auto mid = [&](int x, int y) { return steps[j].midpoint.at(make_edge(x, y)); };
      for (int bb = 0; bb <= side; ++bb) {
        for (int a = 0; a + bb <= side; ++a) {
          next[lattice_index(2 * a, 2 * bb, fine)] = at(a, bb);
          if (a + bb < side) {
            next[lattice_index(2 * a + 1, 2 * bb, fine)] = mid(at(a, bb), at(a + 1, bb));
            next[lattice_index(2 * a, 2 * bb + 1, fine)] = mid(at(a, bb), at(a, bb + 1));
            next[lattice_index(2 * a + 1, 2 * bb + 1, fine)] = mid(at(a + 1, bb), at(a, bb + 1));
          }
        }
      }
      lat = std::move(next);
      side = fine;
    }
    d.lattice[b] = std::move(lat);
  }
  return d;
}

}  // namespace cosma
