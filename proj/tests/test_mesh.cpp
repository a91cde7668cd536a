#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "cosma/error.hpp"
#include "cosma/mesh.hpp"
#include "fixtures.hpp"

using namespace cosma;
namespace fs = std::filesystem;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

TriMesh subdivide_n(TriMesh m, int n) {
  for (int i = 0; i < n; ++i) m = subdivide_midpoint(m);
  return m;
}

}  // namespace

TEST_CASE("obj reader") {
  const auto dir = fixtures::temp_dir("obj");
  const TriMesh m = load_mesh(write_file(dir, "a.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"));
  CHECK(m.vertices.size() == 3);
  CHECK(m.faces.size() == 1);
  CHECK(m.faces[0] == Face{0, 1, 2});
  CHECK(m.name == "a");

  const TriMesh slashed = load_mesh(write_file(dir, "b.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 -1//1\n"));
  CHECK(slashed.faces[0] == Face{0, 1, 2});

  CHECK(kind_of([&] { load_mesh(write_file(dir, "c.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n")); }) ==
        ErrorKind::DanglingIndex);
  CHECK(kind_of([&] {
          load_mesh(write_file(dir, "d.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n"));
        }) == ErrorKind::NonTriangleFace);
  try {
    load_mesh(write_file(dir, "e.obj", "v 0 0 0\nv 1 zero 0\n"));
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("e.obj:2:") != std::string::npos);
  }
  CHECK(kind_of([&] { load_mesh(dir / "missing.obj"); }) == ErrorKind::IoError);
}

TEST_CASE("mesh round trip in every format") {
  const auto dir = fixtures::temp_dir("roundtrip");
  const TriMesh fine = subdivide_n(fixtures::bipyramid(), 4);
  REQUIRE(fine.faces.size() == 1536);
  for (const char* name : {"m.obj", "m.off", "m.ply"}) {
    save_mesh(fine, dir / name);
    const TriMesh back = load_mesh(dir / name);
    CHECK(back.faces == fine.faces);
    REQUIRE(back.vertices.size() == fine.vertices.size());
    double err = 0;
    for (size_t i = 0; i < fine.vertices.size(); ++i) err = std::max(err, (back.vertices[i] - fine.vertices[i]).norm());
    CHECK(err <= 1e-9);
  }
  std::ifstream in(dir / "m.obj");
  std::string line;
  int face_lines = 0;
  while (std::getline(in, line)) face_lines += line.rfind("f ", 0) == 0;
  CHECK(face_lines == 1536);

  TriMesh empty;
  save_mesh(empty, dir / "empty.obj");
  CHECK(load_mesh(dir / "empty.obj").faces.empty());

  CHECK(kind_of([&] {
          load_mesh(write_file(dir, "bin.ply", "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n"));
        }) == ErrorKind::ParseError);
  CHECK(kind_of([&] { save_mesh(fine, dir / "no_such_dir" / "x.obj"); }) == ErrorKind::IoError);
}

TEST_CASE("obj save then load keeps the topology section byte for byte") {
  const auto dir = fixtures::temp_dir("canonical");
  const TriMesh m = fixtures::random_grid(5, 3);
  save_mesh(m, dir / "a.obj");
  save_mesh(load_mesh(dir / "a.obj"), dir / "b.obj");
  const auto faces_of = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.rfind("f ", 0) == 0) out += line + "\n";
    }
    return out;
  };
  CHECK(faces_of(dir / "a.obj") == faces_of(dir / "b.obj"));
}

TEST_CASE("mesh validation") {
  TriMesh m = fixtures::single_triangle();
  m.faces.push_back({1, 2, 0});
  CHECK(kind_of([&] { validate_mesh(m); }) == ErrorKind::InvalidMesh);
  m.faces = {{0, 0, 1}};
  CHECK(kind_of([&] { validate_mesh(m); }) == ErrorKind::InvalidMesh);
  m.faces = {{0, 1, 5}};
  CHECK(kind_of([&] { validate_mesh(m); }) == ErrorKind::InvalidMesh);
}

TEST_CASE("midpoint subdivision") {
  const TriMesh one = subdivide_midpoint(fixtures::single_triangle());
  CHECK(one.vertices.size() == 6);
  CHECK(one.faces.size() == 4);

  TriMesh seg{{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0)}, {{0, 1, 2}}, ""};
  const TriMesh s = subdivide_midpoint(seg);
  bool found = false;
  for (const Vec3& v : s.vertices) found |= (v - Vec3(1, 0, 0)).norm() == 0.0;
  CHECK(found);

  CHECK(subdivide_n(fixtures::bipyramid(), 4).faces.size() == 6 * 256);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TriMesh m = fixtures::random_grid(3 + static_cast<int>(seed), seed);
    const TriMesh d = subdivide_midpoint(m);
    CHECK(d.vertices.size() == m.vertices.size() + mesh_edges(m).size());
    CHECK(d.faces.size() == 4 * m.faces.size());
    for (size_t i = 0; i < m.vertices.size(); ++i) CHECK(d.vertices[i] == m.vertices[i]);
    validate_mesh(d);
  }
}

TEST_CASE("subdivision connectivity round trip") {
  const std::vector<TriMesh> bases = {fixtures::single_triangle(), fixtures::tetrahedron(),
                                      fixtures::octahedron(),      fixtures::icosahedron(),
                                      fixtures::bipyramid(),       fixtures::hexagon(),
                                      fixtures::random_grid(3, 7)};
  for (const TriMesh& base : bases) {
    CAPTURE(base.name);
    for (int rl = 0; rl <= 3; ++rl) {
      const TriMesh fine = subdivide_n(base, rl);
      const SubdivisionDecomposition d = check_subdivision_connectivity(fine, rl);
      CHECK(d.rl == rl);
      CHECK(d.base_faces == static_cast<int>(base.faces.size()));
      CHECK(fine.faces.size() == static_cast<size_t>(d.base_faces) << (2 * rl));

      // coarse corners are exactly the base faces (up to rotation and order)
      std::set<std::array<int, 3>> expected, got;
      const auto canon = [](Face f) {
        std::rotate(f.begin(), std::min_element(f.begin(), f.end()), f.end());
        return f;
      };
      for (const Face& f : base.faces) expected.insert(canon(f));
      for (const Face& f : d.base_corners) got.insert(canon(f));
      CHECK(expected == got);

      // every base face owns 4^rl distinct local faces
      std::map<int, std::set<int>> locals;
      for (const PatchFace& pf : d.face_to_patch) locals[pf.base_face].insert(pf.local_face);
      CHECK(locals.size() == base.faces.size());
      for (const auto& [b, s] : locals) CHECK(s.size() == (size_t{1} << (2 * rl)));

      // created vertices are regular away from the boundary
      std::vector<int> valence(fine.vertices.size(), 0);
      for (const Face& f : fine.faces) {
        for (int v : f) ++valence[v];
      }
      std::set<int> on_boundary;
      for (const Edge& e : boundary_edges(fine)) {
        on_boundary.insert(e.first);
        on_boundary.insert(e.second);
      }
      for (size_t v = 0; v < fine.vertices.size(); ++v) {
        if (d.vertex_levels[v] > 0 && !on_boundary.count(static_cast<int>(v))) CHECK(valence[v] == 6);
        if (v < base.vertices.size()) CHECK(d.vertex_levels[v] == 0);
      }
      for (const auto& lattice : d.lattice) CHECK(lattice.size() == static_cast<size_t>(lattice_count(1 << rl)));
    }
  }
}

TEST_CASE("subdivision connectivity rejects irregular meshes") {
  try {
    check_subdivision_connectivity(fixtures::icosahedron(), 1);
    FAIL("expected NotSemiRegular");
  } catch (const NotSemiRegularError& e) {
    CHECK(e.kind() == ErrorKind::NotSemiRegular);
    CHECK(e.step() == 1);
  }
  // one level is fine, the second coarsening fails
  try {
    check_subdivision_connectivity(subdivide_midpoint(fixtures::icosahedron()), 2);
    FAIL("expected NotSemiRegular");
  } catch (const NotSemiRegularError& e) {
    CHECK(e.step() == 2);
  }
  CHECK(kind_of([] { check_subdivision_connectivity(fixtures::random_grid(4, 1), 1); }) ==
        ErrorKind::NotSemiRegular);
  CHECK(kind_of([] { check_subdivision_connectivity(fixtures::icosahedron(), -1); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("decimation") {
  const TriMesh oct = fixtures::octahedron();
  const TriMesh same = decimate_to_base(oct, 8);
  CHECK(same.faces == oct.faces);
  CHECK(same.vertices == oct.vertices);

  CHECK(kind_of([&] { decimate_to_base(oct, 2); }) == ErrorKind::CannotDecimate);
  CHECK(kind_of([&] { decimate_to_base(oct, 100); }) == ErrorKind::InvalidArgument);

  // 1536-face sheet down to at most 8 faces
  TriMesh sheet = fixtures::random_grid(8, 11);
  sheet = subdivide_n(sheet, 1);
  sheet.faces.resize(sheet.faces.size());
  TriMesh big = fixtures::random_grid(16, 5);  // 512 faces
  big = subdivide_midpoint(big);               // 2048 faces
  for (const TriMesh* m : {&big, &sheet}) {
    const TriMesh base = decimate_to_base(*m, 6);
    CHECK(base.faces.size() >= 6);
    CHECK(base.faces.size() <= 8);
    validate_mesh(base);
    for (int f = 0; f < static_cast<int>(base.faces.size()); ++f) CHECK(face_area(base, f) > 0);
    std::map<Edge, int> uses;
    for (const Face& f : base.faces) {
      for (int k = 0; k < 3; ++k) ++uses[make_edge(f[k], f[(k + 1) % 3])];
    }
    for (const auto& [e, n] : uses) CHECK(n <= 2);
  }

  // closed surface stays closed
  const TriMesh sphere = subdivide_n(fixtures::icosahedron(), 2);
  const TriMesh coarse = decimate_to_base(sphere, 20);
  CHECK(coarse.faces.size() <= 22);
  CHECK(boundary_edges(coarse).empty());
}

TEST_CASE("normalization") {
  TriMesh cube;
  for (int i = 0; i < 8; ++i) cube.vertices.emplace_back(2.0 * (i & 1), 2.0 * ((i >> 1) & 1), 2.0 * ((i >> 2) & 1));
  cube.faces = {{0, 1, 2}};
  {
    const std::vector<TriMesh> seq{cube};
    auto [out, t] = normalize_to_unit_range(seq, NormalizationMode::aspect_preserving);
    CHECK(t.uniform_scale() == doctest::Approx(1.0));
    for (const Vec3& p : out[0].vertices) CHECK(p.cwiseAbs().maxCoeff() <= 1 + 1e-12);
  }
  {
    TriMesh unit = cube;
    for (Vec3& p : unit.vertices) p -= Vec3::Ones();
    const std::vector<TriMesh> seq{unit};
    auto [out, t] = normalize_to_unit_range(seq, NormalizationMode::aspect_preserving);
    CHECK(t.translation.norm() <= 1e-12);
    CHECK(std::abs(t.uniform_scale() - 1.0) <= 1e-12);
  }
  {
    TriMesh beam = cube;
    for (Vec3& p : beam.vertices) p = Vec3(p.x() * 75, p.y() * 5 + 3, p.z() * 10 - 7);
    const std::vector<TriMesh> seq{beam, beam};
    auto [out, t] = normalize_to_unit_range(seq, NormalizationMode::aspect_preserving);
    CHECK(t.uniform_scale() == doctest::Approx(75.0));
    double lo = 1e9, hi = -1e9;
    for (const Vec3& p : out[1].vertices) {
      lo = std::min(lo, p.x());
      hi = std::max(hi, p.x());
    }
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
    const TriMesh back = t.invert(out[0]);
    for (size_t i = 0; i < beam.vertices.size(); ++i) {
      CHECK((back.vertices[i] - beam.vertices[i]).norm() <= 1e-10 * beam.vertices[i].norm() + 1e-12);
    }
  }
  {
    // joint bounds over a sequence, per-axis mode
    std::vector<TriMesh> seq{fixtures::random_grid(4, 1), fixtures::random_grid(4, 2)};
    for (Vec3& p : seq[1].vertices) p *= 3.0;
    auto [out, t] = normalize_to_unit_range(seq, NormalizationMode::per_axis);
    for (const TriMesh& m : out) {
      for (const Vec3& p : m.vertices) CHECK(p.cwiseAbs().maxCoeff() <= 1 + 1e-12);
    }
    CHECK(!t.is_uniform());
    CHECK(kind_of([&] { t.uniform_scale(); }) == ErrorKind::InvalidArgument);
  }
  TriMesh point{{Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)}, {}, ""};
  const std::vector<TriMesh> flat{point};
  CHECK(kind_of([&] { normalize_to_unit_range(flat, NormalizationMode::aspect_preserving); }) ==
        ErrorKind::DegenerateExtent);
}
