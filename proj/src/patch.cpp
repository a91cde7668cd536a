#include "cosma/patch.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "cosma/error.hpp"

namespace cosma {

int lattice_distance(LatticeCoord p, LatticeCoord q) {
  const int da = p.a - q.a, db = p.b - q.b;
  return std::max({std::abs(da), std::abs(db), std::abs(da + db)});
}

int distance_to_triangle(LatticeCoord p, int n) {
  const int c = n - p.a - p.b;
  return std::max(0, -p.a) + std::max(0, -p.b) + std::max(0, -c);
}

// -----------------------------------------------------------------------------
// TEMPLATE
// -----------------------------------------------------------------------------

namespace {

constexpr int kPad = 2;
constexpr std::array<LatticeCoord, 6> kDirections{
    {{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

bool divisible(int x, int s) { return ((x % s) + s) % s == 0; }

void check_level(int rl) {
  if (rl < 2 || rl > 4) {
    throw Error(ErrorKind::UnsupportedLevel,
                "refinement level " + std::to_string(rl) + " (supported: 2, 3, 4)");
  }
}

std::vector<Edge> lattice_edges(const std::vector<LatticeCoord>& coords) {
  std::map<std::pair<int, int>, int> index;
  for (int i = 0; i < static_cast<int>(coords.size()); ++i) index[{coords[i].a, coords[i].b}] = i;
  std::vector<Edge> edges;
  for (int i = 0; i < static_cast<int>(coords.size()); ++i) {
    for (const LatticeCoord& d : kDirections) {
      auto it = index.find({coords[i].a + d.a, coords[i].b + d.b});
      if (it != index.end() && it->second > i) edges.push_back({i, it->second});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

int PaddedPatchTemplate::slot_of(LatticeCoord c) const {
  if (distance_to_triangle(c, n) > kPad) return -1;
  auto it = std::find(coords.begin(), coords.end(), c);
  return it == coords.end() ? -1 : static_cast<int>(it - coords.begin());
}

std::vector<int> PaddedPatchTemplate::level_rotation(int level, int r) const {
  const TemplateLevel& lv = levels.at(level);
  std::map<int, int> local;
  for (int i = 0; i < static_cast<int>(lv.slots.size()); ++i) local[lv.slots[i]] = i;
  std::vector<int> perm(lv.slots.size());
  for (int i = 0; i < static_cast<int>(lv.slots.size()); ++i) {
    perm[i] = local.at(rotations[r % 3][lv.slots[i]]);
  }
  return perm;
}

PaddedPatchTemplate build_patch_template(int rl) {
  check_level(rl);
  PaddedPatchTemplate t;
  t.rl = rl;
  t.n = 1 << rl;
  const int n = t.n;
  std::vector<std::pair<std::array<int, 3>, LatticeCoord>> order;  // (ring, b, a)
  for (int b = -kPad; b <= n + kPad; ++b) {
    for (int a = -kPad; a <= n + kPad; ++a) {
      const int d = distance_to_triangle({a, b}, n);
      if (d <= kPad) order.push_back({{d, b, a}, {a, b}});
    }
  }
  std::sort(order.begin(), order.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [key, c] : order) {
    t.coords.push_back(c);
    t.ring.push_back(key[0]);
  }
  t.total_count = static_cast<int>(t.coords.size());
  t.interior_count = static_cast<int>(std::count(t.ring.begin(), t.ring.end(), 0));
  t.adjacency = lattice_edges(t.coords);

  for (int level = 0; level < 3; ++level) {
    TemplateLevel& lv = t.levels[level];
    const int s = 1 << level;
    for (int i = 0; i < t.total_count; ++i) {
      if (divisible(t.coords[i].a, s) && divisible(t.coords[i].b, s)) {
        lv.slots.push_back(i);
        lv.coords.push_back({t.coords[i].a / s, t.coords[i].b / s});
        lv.interior_count += t.ring[i] == 0;
      }
    }
    lv.adjacency = lattice_edges(lv.coords);
  }
  for (int level = 0; level < 2; ++level) {
    TemplateLevel& lv = t.levels[level];
    const TemplateLevel& coarse = t.levels[level + 1];
    std::map<std::pair<int, int>, int> coarse_index;
    for (int j = 0; j < static_cast<int>(coarse.coords.size()); ++j) {
      coarse_index[{coarse.coords[j].a, coarse.coords[j].b}] = j;
    }
    const auto coarse_at = [&](int a, int b) {
      if (!divisible(a, 2) || !divisible(b, 2)) return -1;
      auto it = coarse_index.find({a / 2, b / 2});
      return it == coarse_index.end() ? -1 : it->second;
    };
    for (int i = 0; i < static_cast<int>(lv.coords.size()); ++i) {
      const auto [a, b] = lv.coords[i];
      if (coarse_at(a, b) >= 0) lv.keep.push_back(i);
    }
    lv.unpool.resize(lv.coords.size());
    for (int i = 0; i < static_cast<int>(lv.coords.size()); ++i) {
      const auto [a, b] = lv.coords[i];
      std::vector<LatticeCoord> candidates;
      const bool ea = divisible(a, 2), eb = divisible(b, 2);
      if (ea && eb) {
        candidates = {{a, b}};
      } else if (!ea && eb) {
        candidates = {{a - 1, b}, {a + 1, b}};
      } else if (ea && !eb) {
        candidates = {{a, b - 1}, {a, b + 1}};
      } else {
        candidates = {{a + 1, b - 1}, {a - 1, b + 1}};
      }
      UnpoolParents& up = lv.unpool[i];
      for (const LatticeCoord& c : candidates) {
        const int j = coarse_at(c.a, c.b);
        if (j >= 0) up.parents.push_back(j);
      }
      if (up.parents.empty()) {
        int best = -1, best_d = 0;
        for (int j = 0; j < static_cast<int>(coarse.coords.size()); ++j) {
          const LatticeCoord cj{coarse.coords[j].a * 2, coarse.coords[j].b * 2};
          const int d = lattice_distance({a, b}, cj);
          if (best < 0 || d < best_d) {
            best = j;
            best_d = d;
          }
        }
        up.clamp = best;
      }
    }
  }
  t.pool_keep = t.levels[0].keep;
  t.unpool_parents = t.levels[0].unpool;

  std::map<std::pair<int, int>, int> index;
  for (int i = 0; i < t.total_count; ++i) index[{t.coords[i].a, t.coords[i].b}] = i;
  for (int r = 0; r < 3; ++r) t.rotations[r].resize(t.total_count);
  for (int i = 0; i < t.total_count; ++i) {
    LatticeCoord c = t.coords[i];
    for (int r = 0; r < 3; ++r) {
      t.rotations[r][i] = index.at({c.a, c.b});
      c = {n - c.a - c.b, c.a};
    }
  }
  return t;
}

const PaddedPatchTemplate& patch_template(int rl) {
  check_level(rl);
  static const std::array<PaddedPatchTemplate, 3> cache{
      build_patch_template(2), build_patch_template(3), build_patch_template(4)};
  return cache[rl - 2];
}

std::array<std::vector<int>, 3> rotation_permutations(const PaddedPatchTemplate& tmpl) {
  return tmpl.rotations;
}

std::string template_to_json(const PaddedPatchTemplate& t) {
  using nlohmann::json;
  json j;
  j["rl"] = t.rl;
  j["n"] = t.n;
  j["interior_count"] = t.interior_count;
  j["total_count"] = t.total_count;
  json coords = json::array();
  for (size_t i = 0; i < t.coords.size(); ++i) {
    coords.push_back({t.coords[i].a, t.coords[i].b, t.ring[i]});
  }
  j["slots"] = coords;  // [a, b, ring]
  j["rotations"] = t.rotations;
  json levels = json::array();
  for (int l = 0; l < 3; ++l) {
    const TemplateLevel& lv = t.levels[l];
    json jl;
    jl["slots"] = lv.slots;
    json edges = json::array();
    for (const Edge& e : lv.adjacency) edges.push_back({e.first, e.second});
    jl["adjacency"] = edges;
    jl["interior_count"] = lv.interior_count;
    if (l < 2) {
      jl["pool_keep"] = lv.keep;
      json unpool = json::array();
      for (const UnpoolParents& up : lv.unpool) {
        unpool.push_back({{"parents", up.parents}, {"clamp", up.clamp}});
      }
      jl["unpool_parents"] = unpool;
    }
    levels.push_back(jl);
  }
  j["levels"] = levels;
  return j.dump(1);
}

// -----------------------------------------------------------------------------
// PATCH TOPOLOGY
// -----------------------------------------------------------------------------

Eigen::VectorXd PatchTopology::interior_weights(int patch, const PaddedPatchTemplate& tmpl) const {
  Eigen::VectorXd w(tmpl.interior_count);
  for (int i = 0; i < tmpl.interior_count; ++i) {
    w[i] = 1.0 / multiplicity[slot_vertex[patch][i]];
  }
  return w;
}

namespace {

// Resolves pad slots by unfolding across base edges and walking the fan of
// base faces around patch corners.
class SlotResolver {
 public:
  explicit SlotResolver(const SemiRegularMesh& mesh) : mesh_(mesh), n_(mesh.side()) {
    for (int f = 0; f < mesh.patch_count(); ++f) {
      const Face& c = mesh.base_faces[f];
      for (int k = 0; k < 3; ++k) edge_faces_[make_edge(c[k], c[(k + 1) % 3])].push_back(f);
    }
  }

  // Global vertex of lattice point `p` of patch `f`, or -1 if the point lies
  // beyond the mesh boundary.
  int resolve(int f, LatticeCoord p) const {
    const Face& corner = mesh_.base_faces[f];
    const std::array<int, 3> w{n_ - p.a - p.b, p.a, p.b};  // weights of corners 0, 1, 2
    if (w[0] >= 0 && w[1] >= 0 && w[2] >= 0) return lookup(f, {{{corner[0], w[0]}, {corner[1], w[1]}, {corner[2], w[2]}}});
    for (int i = 0; i < 3; ++i) {
      if (w[i] > n_) return resolve_corner(f, i, w[(i + 1) % 3], w[(i + 2) % 3]);
    }
    // edge region: exactly one negative weight
    int i = 0;
    while (w[i] >= 0) ++i;
    const int x = w[i];
    const int u = corner[(i + 1) % 3], v = corner[(i + 2) % 3];
    const int g = across(f, u, v);
    if (g < 0) return -1;
    const int opp = third(g, u, v);
    return lookup(g, {{{opp, -x}, {u, w[(i + 1) % 3] + x}, {v, w[(i + 2) % 3] + x}}});
  }

 private:
  using Weighted = std::array<std::pair<int, int>, 3>;

  // Lattice point of face g given the weight of each of its corners.
  int lookup(int g, const Weighted& weights) const {
    const Face& c = mesh_.base_faces[g];
    int wc[3] = {-1, -1, -1};
    for (int k = 0; k < 3; ++k) {
      for (const auto& [vertex, weight] : weights) {
        if (c[k] == vertex) wc[k] = weight;
      }
    }
    if (wc[0] < 0 || wc[1] < 0 || wc[2] < 0 || wc[0] + wc[1] + wc[2] != n_) {
      throw Error(ErrorKind::ConnectivityMismatch,
                  "padding lookup left base face " + std::to_string(g));
    }
    return mesh_.patch_vertices[g][lattice_index(wc[1], wc[2], n_)];
  }

  // Lowest-index base face other than f containing edge (u, v), or -1.
  int across(int f, int u, int v) const {
    auto it = edge_faces_.find(make_edge(u, v));
    if (it == edge_faces_.end()) return -1;
    for (int g : it->second) {
      if (g != f) return g;
    }
    return -1;
  }

  int third(int g, int u, int v) const {
    for (int x : mesh_.base_faces[g]) {
      if (x != u && x != v) return x;
    }
    return -1;
  }

  // Lattice point at local coordinates (p, q) around corner i of face f, p
  // along the edge to corner i+1 and q along the edge to corner i+2.
  int resolve_corner(int f, int i, int p, int q) const {
    const Face& corner = mesh_.base_faces[f];
    const int center = corner[i];
    const int r = std::max({std::abs(p), std::abs(q), std::abs(p + q)});
    int sector = -1, offset = 0;
    for (int s = 0; s < 6 && sector < 0; ++s) {
      const LatticeCoord d0 = kDirections[s], d1 = kDirections[(s + 1) % 6];
      for (int t = 0; t < r; ++t) {
        if (r * d0.a + t * (d1.a - d0.a) == p && r * d0.b + t * (d1.b - d0.b) == q) {
          sector = s;
          offset = t;
          break;
        }
      }
    }
    // angles up to 180 degrees walk counter-clockwise, the rest clockwise
    if (sector * r + offset > 3 * r) sector -= 6;

    // fan walk: face F_j spans rays X_j .. X_{j+1} around center
    int face = f;
    int x_lo = corner[(i + 1) % 3], x_hi = corner[(i + 2) % 3];
    for (int j = 0; j < sector; ++j) {
      const int g = across(face, center, x_hi);
      if (g < 0) return -1;
      x_lo = x_hi;
      x_hi = third(g, center, x_lo);
      face = g;
    }
    for (int j = 0; j > sector; --j) {
      const int g = across(face, center, x_lo);
      if (g < 0) return -1;
      x_hi = x_lo;
      x_lo = third(g, center, x_hi);
      face = g;
    }
    if (x_lo == x_hi) return -1;
    return lookup(face, {{{center, n_ - r}, {x_lo, r - offset}, {x_hi, offset}}});
  }

  const SemiRegularMesh& mesh_;
  int n_;
  std::map<Edge, std::vector<int>> edge_faces_;
};

}  // namespace

std::vector<int> vertex_multiplicities(const SemiRegularMesh& mesh) {
  std::vector<int> counts(mesh.vertex_count(), 0);
  for (const auto& lattice : mesh.patch_vertices) {
    for (int v : lattice) ++counts[v];
  }
  return counts;
}

PatchTopology build_patch_topology(const SemiRegularMesh& mesh) {
  const PaddedPatchTemplate& tmpl = patch_template(mesh.rl);
  for (const auto& lattice : mesh.patch_vertices) {
    if (static_cast<int>(lattice.size()) != tmpl.interior_count) {
      throw Error(ErrorKind::ConnectivityMismatch, "patch lattice size differs from template");
    }
  }
  PatchTopology topo;
  topo.rl = mesh.rl;
  topo.vertex_count = mesh.vertex_count();
  topo.multiplicity = vertex_multiplicities(mesh);
  const SlotResolver resolver(mesh);
  const int k = mesh.patch_count();
  topo.slot_vertex.assign(k, std::vector<int>(tmpl.total_count, -1));
  topo.replicated.assign(k, std::vector<char>(tmpl.total_count, 0));
  for (int f = 0; f < k; ++f) {
    for (int s = 0; s < tmpl.total_count; ++s) {
      int v = resolver.resolve(f, tmpl.coords[s]);
      if (v < 0) {
        // replicate the nearest patch vertex, lowest lattice index on ties
        int best = 0, best_d = -1;
        for (int i = 0; i < tmpl.interior_count; ++i) {
          const int d = lattice_distance(tmpl.coords[s], tmpl.coords[i]);
          if (best_d < 0 || d < best_d) {
            best = i;
            best_d = d;
          }
        }
        v = mesh.patch_vertices[f][lattice_index(tmpl.coords[best].a, tmpl.coords[best].b, tmpl.n)];
        topo.replicated[f][s] = 1;
      }
      topo.slot_vertex[f][s] = v;
    }
  }
  return topo;
}

// -----------------------------------------------------------------------------
// EXTRACTION AND REASSEMBLY
// -----------------------------------------------------------------------------

PatchSet extract_patches(const SemiRegularMesh& frame) {
  return extract_patches(frame, std::make_shared<const PatchTopology>(build_patch_topology(frame)));
}

PatchSet extract_patches(const SemiRegularMesh& frame,
                         std::shared_ptr<const PatchTopology> topology) {
  if (!topology || topology->rl != frame.rl || topology->vertex_count != frame.vertex_count() ||
      topology->patch_count() != frame.patch_count()) {
    throw Error(ErrorKind::ConnectivityMismatch, "patch topology does not match the frame");
  }
  const PaddedPatchTemplate& tmpl = patch_template(frame.rl);
  PatchSet set;
  set.topology = std::move(topology);
  const int k = frame.patch_count();
  set.features.resize(k);
  set.offsets.resize(k);
  for (int f = 0; f < k; ++f) {
    Eigen::MatrixXd x(tmpl.total_count, 3);
    for (int s = 0; s < tmpl.total_count; ++s) {
      x.row(s) = frame.fine.vertices[set.topology->slot_vertex[f][s]].transpose();
    }
    const Vec3 mean = x.colwise().mean().transpose();
    x.rowwise() -= mean.transpose();
    set.features[f] = std::move(x);
    set.offsets[f] = mean;
  }
  return set;
}

std::vector<Vec3> reassemble(const PatchSet& patches) {
  if (!patches.topology) throw Error(ErrorKind::ShapeMismatch, "patch set has no topology");
  const PatchTopology& topo = *patches.topology;
  const PaddedPatchTemplate& tmpl = patch_template(topo.rl);
  if (patches.patch_count() != topo.patch_count() ||
      patches.offsets.size() != patches.features.size()) {
    throw Error(ErrorKind::ShapeMismatch, "patch count differs from topology");
  }
  std::vector<Vec3> sum(topo.vertex_count, Vec3::Zero());
  for (int f = 0; f < patches.patch_count(); ++f) {
    const Eigen::MatrixXd& x = patches.features[f];
    if (x.rows() != tmpl.total_count || x.cols() != 3) {
      throw Error(ErrorKind::ShapeMismatch, "patch features must be " +
                                                std::to_string(tmpl.total_count) + " x 3");
    }
    for (int i = 0; i < tmpl.interior_count; ++i) {
      sum[topo.slot_vertex[f][i]] += x.row(i).transpose() + patches.offsets[f];
    }
  }
  for (int v = 0; v < topo.vertex_count; ++v) {
    if (topo.multiplicity[v] > 0) sum[v] /= topo.multiplicity[v];
  }
  return sum;
}

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& in, const std::vector<int>& perm) {
  if (static_cast<Eigen::Index>(perm.size()) != in.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "permutation size differs from row count");
  }
  Eigen::MatrixXd out(in.rows(), in.cols());
  for (size_t i = 0; i < perm.size(); ++i) out.row(perm[i]) = in.row(i);
  return out;
}

}  // namespace cosma
