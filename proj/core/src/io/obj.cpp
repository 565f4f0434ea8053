#include "drape/io/obj.hpp"

#include "drape/collider.hpp"
#include "drape/error.hpp"
#include "drape/rest_atlas.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace drape {

namespace {

struct Corner {
  int v = -1, vt = -1, vn = -1;
};

[[noreturn]] void fail(const std::string& name, int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, name + ":" + std::to_string(line) + ": " + what);
}

int resolve(const std::string& token, std::size_t count, const std::string& name, int line) {
  int idx = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), idx);
  if (ec != std::errc() || ptr != token.data() + token.size() || idx == 0)
    fail(name, line, "bad index '" + token + "'");
  const long long r = idx > 0 ? idx - 1LL : static_cast<long long>(count) + idx;
  if (r < 0 || r >= static_cast<long long>(count)) fail(name, line, "index " + token + " out of range");
  return static_cast<int>(r);
}

Corner parse_corner(const std::string& tok, std::size_t nv, std::size_t nvt, std::size_t nvn, const std::string& name,
                    int line) {
  Corner c;
  const auto s1 = tok.find('/');
  c.v = resolve(tok.substr(0, s1), nv, name, line);
  if (s1 == std::string::npos) return c;
  const auto s2 = tok.find('/', s1 + 1);
  const std::string t = tok.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
  if (!t.empty()) c.vt = resolve(t, nvt, name, line);
  if (s2 != std::string::npos) {
    const std::string n = tok.substr(s2 + 1);
    if (!n.empty()) c.vn = resolve(n, nvn, name, line);
  }
  return c;
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(std::istringstream& ls, const std::string& name, int line) {
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k)
    if (!(ls >> v[k])) fail(name, line, "expected " + std::to_string(N) + " numbers");
  return v;
}

struct RawObj {
  std::vector<Vec3> v, vn;
  std::vector<Vec2> vt;
  std::vector<std::array<Corner, 3>> faces;
};

RawObj parse_raw(std::istream& is, const std::string& name) {
  RawObj raw;
  std::string text;
  int line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      raw.v.push_back(read_vec<3>(ls, name, line));
    } else if (tag == "vt") {
      raw.vt.push_back(read_vec<2>(ls, name, line));
    } else if (tag == "vn") {
      raw.vn.push_back(read_vec<3>(ls, name, line));
    } else if (tag == "f") {
      std::vector<Corner> poly;
      for (std::string tok; ls >> tok;) poly.push_back(parse_corner(tok, raw.v.size(), raw.vt.size(), raw.vn.size(), name, line));
      if (poly.size() < 3) fail(name, line, "face needs at least 3 corners");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) raw.faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  return raw;
}

}  // namespace

ObjMesh parse_obj(std::istream& is, const std::string& name) {
  const RawObj raw = parse_raw(is, name);
  ObjMesh mesh;
  bool all_uv = true, all_vn = true;
  for (const auto& f : raw.faces)
    for (const Corner& c : f) {
      all_uv = all_uv && c.vt >= 0;
      all_vn = all_vn && c.vn >= 0;
    }
  if (raw.faces.empty()) {
    mesh.vertices = raw.v;
    return mesh;
  }
  std::map<std::tuple<int, int>, int> ids;
  for (const auto& f : raw.faces) {
    Triangle t;
    for (int k = 0; k < 3; ++k) {
      const Corner& c = f[k];
      const auto key = std::make_tuple(c.v, all_uv ? c.vt : -1);
      auto [it, inserted] = ids.emplace(key, static_cast<int>(mesh.vertices.size()));
      if (inserted) {
        mesh.vertices.push_back(raw.v[c.v]);
        if (all_uv) mesh.uvs.push_back(raw.vt[c.vt]);
        if (all_vn) mesh.normals.push_back(raw.vn[c.vn]);
      }
      t[k] = it->second;
    }
    mesh.triangles.push_back(t);
  }
  return mesh;
}

ObjMesh read_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  return parse_obj(is, path);
}

GarmentRestMesh read_garment_obj(const std::string& path) {
  ObjMesh obj = read_obj(path);
  if (!obj.has_uvs()) throw Error(ErrorCode::ParseError, "garment OBJ lacks texture coordinates");
  GarmentRestMesh mesh;
  mesh.vertices = std::move(obj.vertices);
  mesh.uvs = std::move(obj.uvs);
  mesh.triangles = std::move(obj.triangles);
  mesh.name = path;
  validate_rest_mesh(mesh);
  return mesh;
}

ColliderMesh read_collider_obj(const std::string& path) {
  ObjMesh obj = read_obj(path);
  if (obj.vertices.empty()) throw Error(ErrorCode::EmptyCollider, path + " has no vertices");
  return ColliderMesh(std::move(obj.vertices), std::move(obj.triangles), std::move(obj.normals));
}

void write_obj(const std::string& path, const std::vector<Vec3>& vertices, const std::vector<Vec2>& uvs,
               const std::vector<Triangle>& triangles) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os.precision(9);
  for (const Vec3& v : vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Vec2& t : uvs) os << "vt " << t.x() << ' ' << t.y() << '\n';
  const bool with_uv = uvs.size() == vertices.size() && !uvs.empty();
  for (const Triangle& t : triangles) {
    os << 'f';
    for (int k : t) {
      os << ' ' << k + 1;
      if (with_uv) os << '/' << k + 1;
    }
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::IoFailure, "failed writing " + path);
}

}  // namespace drape
