#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cosma/error.hpp"
#include "cosma/mesh.hpp"

namespace cosma {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line,
                             const std::string& what) {
  throw Error(ErrorKind::ParseError,
              path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) tokens.push_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_double(std::string_view s, double& out) {
  // from_chars for double is available in libstdc++ 11
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return in;
}

void check_indices(const TriMesh& mesh, const std::filesystem::path& path) {
  const long nv = static_cast<long>(mesh.vertices.size());
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int v : mesh.faces[f]) {
      if (v < 0 || v >= nv) {
        throw Error(ErrorKind::DanglingIndex,
                    path.string() + ": face " + std::to_string(f) +
                        " references missing vertex " + std::to_string(v));
      }
    }
  }
}

TriMesh load_obj(const std::filesystem::path& path) {
  auto in = open_input(path);
  TriMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) parse_fail(path, lineno, "vertex needs 3 coordinates");
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[k + 1], p[k])) {
          parse_fail(path, lineno, "bad coordinate '" + std::string(tok[k + 1]) + "'");
        }
      }
      mesh.vertices.push_back(p);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) parse_fail(path, lineno, "face needs 3 vertices");
      if (tok.size() > 4) {
        throw Error(ErrorKind::NonTriangleFace,
                    path.string() + ":" + std::to_string(lineno) + ": face with " +
                        std::to_string(tok.size() - 1) + " vertices");
      }
      Face face;
      for (int k = 0; k < 3; ++k) {
        std::string_view ref = tok[k + 1];
        ref = ref.substr(0, ref.find('/'));
        long idx = 0;
        if (!parse_int(ref, idx) || idx == 0) {
          parse_fail(path, lineno, "bad vertex reference '" + std::string(tok[k + 1]) + "'");
        }
        // negative indices are relative to the vertices read so far
        face[k] = static_cast<int>(idx > 0 ? idx - 1
                                           : static_cast<long>(mesh.vertices.size()) + idx);
      }
      mesh.faces.push_back(face);
    }
    // vn, vt, g, o, s, usemtl, mtllib: ignored
  }
  check_indices(mesh, path);
  return mesh;
}

// Reads the next non-empty, non-comment line; false at end of file.
bool next_content_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (!split_ws(line).empty()) return true;
  }
  return false;
}

TriMesh load_off(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  int lineno = 0;
  if (!next_content_line(in, line, lineno)) parse_fail(path, lineno, "empty file");
  auto tok = split_ws(line);
  if (tok[0] != "OFF") parse_fail(path, lineno, "missing OFF header");
  // counts may follow the header on the same line
  std::vector<std::string_view> counts(tok.begin() + 1, tok.end());
  std::string count_line;
  if (counts.empty()) {
    if (!next_content_line(in, count_line, lineno)) parse_fail(path, lineno, "missing counts");
    counts = split_ws(count_line);
  }
  long nv = 0, nf = 0;
  if (counts.size() < 2 || !parse_int(counts[0], nv) || !parse_int(counts[1], nf) ||
      nv < 0 || nf < 0) {
    parse_fail(path, lineno, "bad element counts");
  }
  TriMesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line, lineno)) parse_fail(path, lineno, "truncated vertex list");
    tok = split_ws(line);
    Vec3 p;
    if (tok.size() < 3) parse_fail(path, lineno, "vertex needs 3 coordinates");
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(tok[k], p[k])) parse_fail(path, lineno, "bad coordinate");
    }
    mesh.vertices.push_back(p);
  }
  for (long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line, lineno)) parse_fail(path, lineno, "truncated face list");
    tok = split_ws(line);
    long count = 0;
    if (!parse_int(tok[0], count)) parse_fail(path, lineno, "bad face size");
    if (count != 3) {
      throw Error(ErrorKind::NonTriangleFace,
                  path.string() + ":" + std::to_string(lineno) + ": face with " +
                      std::to_string(count) + " vertices");
    }
    if (tok.size() < 4) parse_fail(path, lineno, "face needs 3 vertices");
    Face face;
    for (int k = 0; k < 3; ++k) {
      long idx = 0;
      if (!parse_int(tok[k + 1], idx)) parse_fail(path, lineno, "bad vertex index");
      face[k] = static_cast<int>(idx);
    }
    mesh.faces.push_back(face);
  }
  check_indices(mesh, path);
  return mesh;
}

TriMesh load_ply(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  int lineno = 0;
  if (!next_content_line(in, line, lineno) || split_ws(line)[0] != "ply") {
    parse_fail(path, lineno, "missing ply magic");
  }
  struct Element {
    std::string name;
    long count = 0;
    std::vector<std::string> properties;
  };
  std::vector<Element> elements;
  bool ascii = false;
  for (;;) {
    if (!std::getline(in, line)) parse_fail(path, lineno, "unterminated header");
    ++lineno;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        parse_fail(path, lineno, "only ascii ply is supported");
      }
      ascii = true;
    } else if (tok[0] == "element") {
      Element e;
      if (tok.size() < 3 || !parse_int(tok[2], e.count)) parse_fail(path, lineno, "bad element");
      e.name = std::string(tok[1]);
      elements.push_back(e);
    } else if (tok[0] == "property") {
      if (elements.empty() || tok.size() < 3) parse_fail(path, lineno, "bad property");
      elements.back().properties.emplace_back(tok.back());
    } else {
      parse_fail(path, lineno, "unknown header line");
    }
  }
  if (!ascii) parse_fail(path, lineno, "missing format line");
  TriMesh mesh;
  for (const Element& e : elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (size_t k = 0; k < e.properties.size(); ++k) {
        if (e.properties[k] == "x") ix = static_cast<int>(k);
        if (e.properties[k] == "y") iy = static_cast<int>(k);
        if (e.properties[k] == "z") iz = static_cast<int>(k);
      }
      if (ix < 0 || iy < 0 || iz < 0) parse_fail(path, lineno, "vertex lacks x/y/z");
      for (long i = 0; i < e.count; ++i) {
        if (!next_content_line(in, line, lineno)) parse_fail(path, lineno, "truncated vertices");
        auto tok = split_ws(line);
        if (tok.size() < e.properties.size()) parse_fail(path, lineno, "short vertex line");
        Vec3 p;
        if (!parse_double(tok[ix], p.x()) || !parse_double(tok[iy], p.y()) ||
            !parse_double(tok[iz], p.z())) {
          parse_fail(path, lineno, "bad coordinate");
        }
        mesh.vertices.push_back(p);
      }
    } else if (e.name == "face") {
      for (long i = 0; i < e.count; ++i) {
        if (!next_content_line(in, line, lineno)) parse_fail(path, lineno, "truncated faces");
        auto tok = split_ws(line);
        long count = 0;
        if (!parse_int(tok[0], count)) parse_fail(path, lineno, "bad face size");
        if (count != 3) {
          throw Error(ErrorKind::NonTriangleFace,
                      path.string() + ":" + std::to_string(lineno) + ": face with " +
                          std::to_string(count) + " vertices");
        }
        if (tok.size() < 4) parse_fail(path, lineno, "face needs 3 vertices");
        Face face;
        for (int k = 0; k < 3; ++k) {
          long idx = 0;
          if (!parse_int(tok[k + 1], idx)) parse_fail(path, lineno, "bad vertex index");
          face[k] = static_cast<int>(idx);
        }
        mesh.faces.push_back(face);
      }
    } else {
      for (long i = 0; i < e.count; ++i) {
        if (!next_content_line(in, line, lineno)) parse_fail(path, lineno, "truncated element");
      }
    }
  }
  check_indices(mesh, path);
  return mesh;
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".obj") return MeshFormat::obj;
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".ply") return MeshFormat::ply_ascii;
  throw Error(ErrorKind::InvalidArgument, "unknown mesh extension '" + ext + "'");
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  TriMesh mesh;
  switch (format) {
    case MeshFormat::obj: mesh = load_obj(path); break;
    case MeshFormat::off: mesh = load_off(path); break;
    case MeshFormat::ply_ascii: mesh = load_ply(path); break;
  }
  validate_mesh(mesh);
  mesh.name = path.stem().string();
  return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  const auto coords = [](const Vec3& p) {
    return format_coord(p.x()) + " " + format_coord(p.y()) + " " + format_coord(p.z());
  };
  switch (format) {
    case MeshFormat::obj:
      if (!mesh.name.empty()) out << "o " << mesh.name << '\n';
      for (const Vec3& p : mesh.vertices) out << "v " << coords(p) << '\n';
      for (const Face& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
      }
      break;
    case MeshFormat::off:
      out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
      for (const Vec3& p : mesh.vertices) out << coords(p) << '\n';
      for (const Face& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
      break;
    case MeshFormat::ply_ascii:
      out << "ply\nformat ascii 1.0\n"
          << "element vertex " << mesh.vertices.size() << '\n'
          << "property double x\nproperty double y\nproperty double z\n"
          << "element face " << mesh.faces.size() << '\n'
          << "property list uchar int vertex_indices\nend_header\n";
      for (const Vec3& p : mesh.vertices) out << coords(p) << '\n';
      for (const Face& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
      break;
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  save_mesh(mesh, path, format_from_path(path));
}

}  // namespace cosma
