#include <doctest.h>

#include <json.hpp>
#include <random>

#include "cosma/error.hpp"
#include "cosma/metrics.hpp"
#include "fixtures.hpp"

using namespace cosma;

namespace {

// Independent closest-point oracle: plane projection when it lands inside the
// triangle, otherwise the best of the three clamped edge projections.
double oracle_distance2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const Vec3 q = p - n * ((p - a).dot(n) / n.squaredNorm());
  const auto inside = [&](const Vec3& u, const Vec3& v) { return (v - u).cross(q - u).dot(n) >= 0; };
  if (inside(a, b) && inside(b, c) && inside(c, a)) return (p - q).squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [u, v] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
    const double t = std::clamp((p - u).dot(v - u) / (v - u).squaredNorm(), 0.0, 1.0);
    best = std::min(best, (p - (u + t * (v - u))).squaredNorm());
  }
  return best;
}

double brute_p2s(const std::vector<Vec3>& pts, const TriMesh& m) {
  double sum = 0;
  for (const Vec3& p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const Face& f : m.faces) {
      best = std::min(best, oracle_distance2(p, m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]));
    }
    sum += best;
  }
  return sum / static_cast<double>(pts.size());
}

std::vector<Vec3> random_points(int n, std::uint64_t seed, double lo = -0.5, double hi = 1.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng) - 0.5);
  return out;
}

}  // namespace

TEST_CASE("point to surface") {
  const TriMesh tri{{Vec3(-1, -1, 0), Vec3(2, -1, 0), Vec3(-1, 2, 0)}, {{0, 1, 2}}, ""};
  const std::vector<Vec3> above{Vec3(0, 0, 1)};
  CHECK(p2s_error(above, tri) == doctest::Approx(1.0).epsilon(1e-15));

  const TriMesh grid = fixtures::random_grid(10, 4);
  REQUIRE(grid.faces.size() == 200);
  CHECK(p2s_error(grid.vertices, grid) <= 1e-24);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto pts = random_points(100, seed);
    const SurfaceIndex index(grid);
    const auto d = p2s_squared_distances(pts, index);
    for (size_t i = 0; i < pts.size(); ++i) {
      const std::vector<Vec3> one{pts[i]};
      CHECK(std::abs(d[i] - brute_p2s(one, grid)) <= 1e-12);
    }
    CHECK(std::abs(p2s_error(pts, grid) - brute_p2s(pts, grid)) <= 1e-12);
  }

  // closed surface, queries inside and outside
  TriMesh sphere = fixtures::icosahedron();
  sphere = subdivide_midpoint(subdivide_midpoint(sphere));
  const auto pts = random_points(200, 9, -2.5, 2.5);
  CHECK(std::abs(p2s_error(pts, sphere) - brute_p2s(pts, sphere)) <= 1e-12);

  const std::vector<Vec3> none;
  try {
    p2s_error(none, grid);
    FAIL("expected EmptyMesh");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyMesh);
  }
  CHECK_THROWS_AS(p2s_error(pts, TriMesh{}), Error);
}

TEST_CASE("point to surface under rigid motion") {
  const TriMesh grid = fixtures::random_grid(6, 2);
  const auto pts = random_points(50, 3);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const Vec3 t(0.3, -2, 5);
  TriMesh moved = grid;
  for (Vec3& p : moved.vertices) p = r * p + t;
  std::vector<Vec3> moved_pts;
  for (const Vec3& p : pts) moved_pts.push_back(r * p + t);
  CHECK(std::abs(p2s_error(pts, grid) - p2s_error(moved_pts, moved)) <= 1e-9);
}

TEST_CASE("semi-regular point to surface and vertex error") {
  const TriMesh original = fixtures::random_grid(4, 6);
  const SemiRegularMesh truth = SemiRegularMesh::from_base(original, 2);
  SemiRegularMesh recon = truth;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 0.02);
  for (Vec3& p : recon.fine.vertices) p += Vec3(g(rng), g(rng), g(rng));
  CHECK(p2s_error(truth, original) <= 1e-24);
  CHECK(p2s_error(recon, original) <= vertex_mse(recon, truth));

  double direct = 0;
  for (int i = 0; i < truth.vertex_count(); ++i) {
    const Vec3 d = recon.fine.vertices[i] - truth.fine.vertices[i];
    direct += d.x() * d.x() + d.y() * d.y() + d.z() * d.z();
  }
  CHECK(std::abs(vertex_mse(recon, truth) - direct / truth.vertex_count()) <= 1e-12);
  CHECK(vertex_mse(truth, truth) == 0.0);

  std::vector<Vec3> shifted = truth.fine.vertices;
  for (Vec3& p : shifted) p += Vec3(0.3, 0.0, 0.4);
  CHECK(vertex_mse(shifted, truth.fine.vertices) == doctest::Approx(0.25));

  shifted.pop_back();
  try {
    vertex_mse(shifted, truth.fine.vertices);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("euclidean error in model units") {
  NormalizationTransform t;
  t.scale = Vec3::Constant(75.0);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(euclidean_error_units(zero, t) == 0.0);
  const std::vector<double> d{0.002, 0.006};
  CHECK(euclidean_error_units(d, t) == doctest::Approx(0.3));

  // distances computed in raw coordinates agree with rescaled normalized ones
  TriMesh a = fixtures::random_grid(5, 1), b = fixtures::random_grid(5, 2);
  for (TriMesh* m : {&a, &b}) {
    for (Vec3& p : m->vertices) p = p * 40.0 + Vec3(10, -3, 7);
  }
  const std::vector<TriMesh> seq{a, b};
  const auto [norm, tr] = normalize_to_unit_range(seq, NormalizationMode::aspect_preserving);
  std::vector<double> normalized, raw;
  for (size_t i = 0; i < a.vertices.size(); ++i) {
    normalized.push_back((norm[0].vertices[i] - norm[1].vertices[i]).norm());
    raw.push_back((a.vertices[i] - b.vertices[i]).norm());
  }
  double raw_mean = 0;
  for (double r : raw) raw_mean += r;
  raw_mean /= static_cast<double>(raw.size());
  CHECK(std::abs(euclidean_error_units(normalized, tr) - raw_mean) <= 1e-9);
}

TEST_CASE("metric records as json") {
  const std::vector<MetricRecord> recs{{"p2s", 0.125, "normalized^2", "seq_a", 3}, {"vertex_euclidean", 2.5, "cm", "seq_a", 4}};
  const auto j = nlohmann::json::parse(metrics_to_json(recs));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["metric"] == "p2s");
  CHECK(j[0]["value"] == 0.125);
  CHECK(j[0]["units"] == "normalized^2");
  CHECK(j[0]["mesh_id"] == "seq_a");
  CHECK(j[1]["timestep"] == 4);
}
