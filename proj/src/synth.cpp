#include "cosma/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cosma/error.hpp"

namespace cosma {

namespace {

constexpr double kPi = std::numbers::pi;

// crush tube
constexpr double kRadius = 0.5;
constexpr double kHeight = 1.5;
constexpr int kTubeAround = 4;
constexpr int kTubeRows = 6;
constexpr double kFoldWidth = 0.1;
constexpr double kCompression = 0.15;

double fold_center(char branch) { return branch == 'A' ? 0.625 : 0.875; }

double progress(const SyntheticSpec& spec, int t) {
  return spec.timesteps > 1 ? static_cast<double>(t) / (spec.timesteps - 1) : 0.0;
}

// compact bump (1 - u^2)^2 and its normalized integral
double bump(double u) { return std::abs(u) < 1 ? (1 - u * u) * (1 - u * u) : 0.0; }
double smooth_step(double u) {
  if (u <= -1) return 0.0;
  if (u >= 1) return 1.0;
  return 0.5 + (15 * u - 10 * u * u * u + 3 * std::pow(u, 5)) / 16;
}

void add_quad(std::vector<Face>& faces, int a, int b, int c, int d, bool flip) {
  // a b / d c counter-clockwise
  if (flip) {
    faces.push_back({a, b, d});
    faces.push_back({b, c, d});
  } else {
    faces.push_back({a, b, c});
    faces.push_back({a, c, d});
  }
}

TriMesh sheet_rest_frame(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const int g = spec.frame_resolution;
  const double h = 2.0 / g;
  std::uniform_real_distribution<double> jitter(-0.3 * h, 0.3 * h);
  std::bernoulli_distribution coin(0.5);
  TriMesh m;
  for (int j = 0; j <= g; ++j) {
    for (int i = 0; i <= g; ++i) {
      double x = -1 + i * h, y = -1 + j * h;
      const double jx = jitter(rng), jy = jitter(rng);
      if (i > 0 && i < g) x += jx;
      if (j > 0 && j < g) y += jy;
      m.vertices.emplace_back(x, y, 0.0);
    }
  }
  const auto id = [g](int i, int j) { return j * (g + 1) + i; };
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      add_quad(m.faces, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), coin(rng));
    }
  }
  return m;
}

TriMesh tube_rest_frame(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const int na = spec.frame_resolution, nz = spec.frame_resolution;
  const double da = 2 * kPi / na, dz = kHeight / nz;
  std::uniform_real_distribution<double> unit(-0.3, 0.3);
  std::bernoulli_distribution coin(0.5);
  TriMesh m;
  for (int j = 0; j <= nz; ++j) {
    for (int i = 0; i < na; ++i) {
      const double a = i * da + unit(rng) * da;
      double z = j * dz;
      const double jz = unit(rng) * dz;
      if (j > 0 && j < nz) z += jz;
      m.vertices.emplace_back(kRadius * std::cos(a), kRadius * std::sin(a), z);
    }
  }
  const auto id = [na](int i, int j) { return j * na + (i % na); };
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i < na; ++i) {
      add_quad(m.faces, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), coin(rng));
    }
  }
  return m;
}

}  // namespace

void validate_spec(const SyntheticSpec& spec) {
  if (spec.timesteps < 1) throw Error(ErrorKind::InvalidSpec, "timesteps must be positive");
  if (!(spec.amplitude >= 0) || !std::isfinite(spec.amplitude)) {
    throw Error(ErrorKind::InvalidSpec, "amplitude must be non-negative");
  }
  if (spec.branch != 'A' && spec.branch != 'B') throw Error(ErrorKind::InvalidSpec, "branch must be A or B");
  if (spec.base_resolution < 1 || spec.base_resolution > 64) {
    throw Error(ErrorKind::InvalidSpec, "base resolution must lie in [1, 64]");
  }
  if (spec.frame_resolution < 4 || spec.frame_resolution > 512) {
    throw Error(ErrorKind::InvalidSpec, "frame resolution must lie in [4, 512]");
  }
}

TriMesh synthetic_rest_base(const SyntheticSpec& spec) {
  validate_spec(spec);
  TriMesh base;
  if (spec.kind == SynthKind::crush_tube) {
    for (int j = 0; j <= kTubeRows; ++j) {
      for (int i = 0; i < kTubeAround; ++i) {
        const double a = 2 * kPi * i / kTubeAround;
        base.vertices.emplace_back(kRadius * std::cos(a), kRadius * std::sin(a),
                                   kHeight * j / kTubeRows);
      }
    }
    const auto id = [](int i, int j) { return j * kTubeAround + (i % kTubeAround); };
    for (int j = 0; j < kTubeRows; ++j) {
      for (int i = 0; i < kTubeAround; ++i) {
        add_quad(base.faces, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), false);
      }
    }
    base.name = "base";
    return base;
  }
  const int r = spec.base_resolution;
  const double h = 2.0 / r;
  for (int j = 0; j <= r; ++j) {
    for (int i = 0; i <= r; ++i) base.vertices.emplace_back(-1 + i * h, -1 + j * h, 0.0);
  }
  const auto id = [r](int i, int j) { return j * (r + 1) + i; };
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (spec.base_style == BaseStyle::diagonal) {
        add_quad(base.faces, a, b, c, d, false);
        continue;
      }
      const int center = static_cast<int>(base.vertices.size());
      base.vertices.emplace_back(-1 + (i + 0.5) * h, -1 + (j + 0.5) * h, 0.0);
      base.faces.push_back({a, b, center});
      base.faces.push_back({b, c, center});
      base.faces.push_back({c, d, center});
      base.faces.push_back({d, a, center});
    }
  }
  base.name = "base";
  return base;
}

std::vector<Vec3> project_to_rest(const SyntheticSpec& spec, std::span<const Vec3> points) {
  std::vector<Vec3> out(points.begin(), points.end());
  for (Vec3& p : out) {
    if (spec.kind == SynthKind::wavy_sheet) {
      p.z() = 0.0;
    } else {
      const double r = std::hypot(p.x(), p.y());
      if (r > 0) {
        p.x() *= kRadius / r;
        p.y() *= kRadius / r;
      }
    }
  }
  return out;
}

std::vector<Vec3> synthetic_deform(const SyntheticSpec& spec, int t, std::span<const Vec3> rest) {
  const double s = progress(spec, t);
  std::vector<Vec3> out(rest.begin(), rest.end());
  if (spec.kind == SynthKind::wavy_sheet) {
    // one wavelength across the sheet, travelling one wavelength over the sequence
    const double phase = spec.timesteps > 0 ? 2 * kPi * t / spec.timesteps : 0.0;
    for (Vec3& p : out) p.z() += spec.amplitude * std::sin(kPi * p.x() - phase);
    return out;
  }
  const double z0 = fold_center(spec.branch);
  for (Vec3& p : out) {
    const double u = (p.z() - z0) / kFoldWidth;
    const double radial = 1 + s * spec.amplitude * bump(u) / kRadius;
    p.x() *= radial;
    p.y() *= radial;
    p.z() -= s * kCompression * smooth_step(u);
  }
  return out;
}

SyntheticSequence generate_synthetic(const SyntheticSpec& spec) {
  validate_spec(spec);
  std::mt19937_64 rng(spec.seed);
  SyntheticSequence seq;
  const TriMesh rest =
      spec.kind == SynthKind::wavy_sheet ? sheet_rest_frame(spec, rng) : tube_rest_frame(spec, rng);
  seq.id = to_string(spec.kind) + (spec.kind == SynthKind::crush_tube ? std::string("_") + spec.branch : "") +
           "_s" + std::to_string(spec.seed);
  if (spec.kind == SynthKind::crush_tube) seq.branch = std::string(1, spec.branch);
  for (int t = 0; t < spec.timesteps; ++t) {
    TriMesh frame;
    frame.vertices = synthetic_deform(spec, t, rest.vertices);
    frame.faces = rest.faces;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03d", t);
    frame.name = name;
    seq.frames.push_back(std::move(frame));
  }
  seq.base = synthetic_rest_base(spec);
  seq.base.vertices = synthetic_deform(spec, 0, seq.base.vertices);
  return seq;
}

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "wavy_sheet") return SynthKind::wavy_sheet;
  if (s == "crush_tube") return SynthKind::crush_tube;
  throw Error(ErrorKind::InvalidSpec, "unknown synthetic kind " + s);
}

std::string to_string(SynthKind k) { return k == SynthKind::wavy_sheet ? "wavy_sheet" : "crush_tube"; }

BaseStyle base_style_from_string(const std::string& s) {
  if (s == "fan") return BaseStyle::fan;
  if (s == "diagonal") return BaseStyle::diagonal;
  throw Error(ErrorKind::InvalidSpec, "unknown base style " + s);
}

std::string to_string(BaseStyle s) { return s == BaseStyle::fan ? "fan" : "diagonal"; }

}  // namespace cosma
