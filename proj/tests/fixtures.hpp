#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "cosma/mesh.hpp"

namespace fixtures {

using cosma::Face;
using cosma::TriMesh;
using cosma::Vec3;

inline TriMesh single_triangle() {
  return {{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {{0, 1, 2}}, "tri"};
}

inline TriMesh tetrahedron() {
  return {{Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)},
          {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}},
          "tet"};
}

inline TriMesh octahedron() {
  return {{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)},
          {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}},
          "oct"};
}

// Closed surface with 6 faces: two apexes over a triangle.
inline TriMesh bipyramid() {
  return {{Vec3(1, 0, 0), Vec3(-0.5, 0.8660254037844386, 0), Vec3(-0.5, -0.8660254037844386, 0),
           Vec3(0, 0, 1), Vec3(0, 0, -1)},
          {{0, 1, 3}, {1, 2, 3}, {2, 0, 3}, {1, 0, 4}, {2, 1, 4}, {0, 2, 4}},
          "bipyramid"};
}

// Planar regular hexagon split into 6 equilateral triangles around vertex 0.
inline TriMesh hexagon() {
  TriMesh m;
  m.vertices.push_back(Vec3::Zero());
  for (int i = 0; i < 6; ++i) {
    const double a = M_PI / 3 * i;
    m.vertices.emplace_back(std::cos(a), std::sin(a), 0.0);
  }
  for (int i = 0; i < 6; ++i) m.faces.push_back({0, 1 + i, 1 + (i + 1) % 6});
  m.name = "hexagon";
  return m;
}

inline TriMesh icosahedron() {
  const double t = (1 + std::sqrt(5.0)) / 2;
  TriMesh m;
  m.vertices = {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0),
                Vec3(0, -1, t), Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t),
                Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  m.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
             {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  m.name = "ico";
  return m;
}

// Jittered n x n grid with random diagonals, in the unit square.
inline TriMesh random_grid(int n, std::uint64_t seed, double jitter = 0.25) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter / n, jitter / n);
  std::bernoulli_distribution coin(0.5);
  TriMesh m;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const bool inner = i > 0 && i < n && j > 0 && j < n;
      m.vertices.emplace_back(static_cast<double>(i) / n + (inner ? u(rng) : 0.0),
                              static_cast<double>(j) / n + (inner ? u(rng) : 0.0), 0.1 * u(rng) * n);
    }
  }
  const auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (coin(rng)) {
        m.faces.push_back({a, b, c});
        m.faces.push_back({a, c, d});
      } else {
        m.faces.push_back({a, b, d});
        m.faces.push_back({b, c, d});
      }
    }
  }
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cosma_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
