#include "drape/rest_atlas.hpp"

#include "drape/error.hpp"
#include "drape/io/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace drape {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Offsets from the dominant corner, so a coordinate shared by all three
// corners is reproduced exactly and each corner maps to itself.
Vec3 interpolate(const BarycentricCoords& bc, const Vec3& a, const Vec3& b, const Vec3& c) {
  if (bc.lambda1 >= bc.lambda2 && bc.lambda1 >= bc.lambda3) return a + bc.lambda2 * (b - a) + bc.lambda3 * (c - a);
  if (bc.lambda2 >= bc.lambda3) return b + bc.lambda1 * (a - b) + bc.lambda3 * (c - b);
  return c + bc.lambda1 * (a - c) + bc.lambda2 * (b - c);
}

bool inside(const BarycentricCoords& bc) {
  return bc.lambda1 >= -kInsideTolerance && bc.lambda2 >= -kInsideTolerance &&
         bc.lambda3 >= -kInsideTolerance;
}

// Separating-axis test on the 6 edge normals. Touching triangles (shared
// edge or vertex) count as separated.
bool interiors_overlap(const std::array<Vec2, 3>& t0, const std::array<Vec2, 3>& t1) {
  const std::array<const std::array<Vec2, 3>*, 2> tris{&t0, &t1};
  for (const auto* tri : tris) {
    for (int e = 0; e < 3; ++e) {
      const Vec2 d = (*tri)[(e + 1) % 3] - (*tri)[e];
      const Vec2 axis(-d.y(), d.x());
      const double len = axis.norm();
      double min0 = 1e300, max0 = -1e300, min1 = 1e300, max1 = -1e300;
      for (int k = 0; k < 3; ++k) {
        const double a = axis.dot(t0[k]) / len;
        const double b = axis.dot(t1[k]) / len;
        min0 = std::min(min0, a);
        max0 = std::max(max0, a);
        min1 = std::min(min1, b);
        max1 = std::max(max1, b);
      }
      constexpr double eps = 1e-12;
      if (max0 <= min1 + eps || max1 <= min0 + eps) return false;
    }
  }
  return true;
}

std::array<Vec2, 3> uv_triangle(const GarmentRestMesh& mesh, const Triangle& t) {
  return {mesh.uvs[t[0]], mesh.uvs[t[1]], mesh.uvs[t[2]]};
}

int bucket_count_for(std::size_t triangles) {
  const double n = std::ceil(std::sqrt(static_cast<double>(triangles) / 2.0));
  return std::clamp(static_cast<int>(n), 1, 512);
}

int bucket_coord(double x, int buckets) {
  return std::clamp(static_cast<int>(std::floor(x * buckets)), 0, buckets - 1);
}

// Fills `buckets x buckets` lists with triangle ids whose (slightly padded)
// UV bounding box touches the bucket; lists end up sorted ascending.
std::vector<std::vector<int>> bucket_triangles(const GarmentRestMesh& mesh, int buckets) {
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(buckets) * buckets);
  constexpr double pad = 1e-9;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto tri = uv_triangle(mesh, mesh.triangles[t]);
    Vec2 lo = tri[0], hi = tri[0];
    for (const auto& p : tri) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const int c0 = bucket_coord(lo.x() - pad, buckets), c1 = bucket_coord(hi.x() + pad, buckets);
    const int r0 = bucket_coord(lo.y() - pad, buckets), r1 = bucket_coord(hi.y() + pad, buckets);
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) lists[static_cast<std::size_t>(r) * buckets + c].push_back(t);
  }
  return lists;
}

}  // namespace

BarycentricCoords barycentric_coords(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a, ac = c - a, ap = p - a;
  const double twice_area = cross2(ab, ac);
  if (std::abs(0.5 * twice_area) <= kDegenerateArea)
    throw Error(ErrorCode::DegenerateTriangle, "UV triangle has (near) zero area");
  BarycentricCoords bc;
  bc.lambda2 = cross2(ap, ac) / twice_area;
  bc.lambda3 = cross2(ab, ap) / twice_area;
  bc.lambda1 = 1.0 - bc.lambda2 - bc.lambda3;
  return bc;
}

void validate_rest_mesh(const GarmentRestMesh& mesh) {
  if (mesh.vertices.size() != mesh.uvs.size())
    throw Error(ErrorCode::InvalidMesh, "vertex and UV counts differ");
  if (mesh.triangles.empty()) throw Error(ErrorCode::InvalidMesh, "mesh has no triangles");
  for (std::size_t i = 0; i < mesh.uvs.size(); ++i) {
    const Vec2& uv = mesh.uvs[i];
    if (!(uv.x() >= 0.0 && uv.x() <= 1.0 && uv.y() >= 0.0 && uv.y() <= 1.0))
      throw Error(ErrorCode::InvalidMesh, "UV of vertex " + std::to_string(i) + " outside [0,1]^2");
  }
  const int n = static_cast<int>(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int k : mesh.triangles[t])
      if (k < 0 || k >= n)
        throw Error(ErrorCode::InvalidMesh, "triangle " + std::to_string(t) + " has a bad index");
    const auto tri = uv_triangle(mesh, mesh.triangles[t]);
    if (std::abs(0.5 * cross2(tri[1] - tri[0], tri[2] - tri[0])) <= kDegenerateArea)
      throw Error(ErrorCode::DegenerateTriangle, "UV triangle " + std::to_string(t) + " is degenerate");
  }

  const int buckets = bucket_count_for(mesh.triangles.size());
  const auto lists = bucket_triangles(mesh, buckets);
  for (const auto& list : lists) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto ti = uv_triangle(mesh, mesh.triangles[list[i]]);
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        if (interiors_overlap(ti, uv_triangle(mesh, mesh.triangles[list[j]])))
          throw Error(ErrorCode::InvalidMesh, "UV triangles " + std::to_string(list[i]) + " and " +
                                                  std::to_string(list[j]) + " overlap");
      }
    }
  }
}

GarmentRestMesh make_square_cloth(int resolution, double size, double height) {
  if (resolution < 2) throw Error(ErrorCode::InvalidMesh, "cloth resolution must be >= 2");
  GarmentRestMesh mesh;
  mesh.name = "square_cloth_" + std::to_string(resolution);
  const double step = 1.0 / (resolution - 1);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double u = j * step, v = i * step;
      mesh.uvs.emplace_back(u, v);
      mesh.vertices.emplace_back(u * size, v * size, height);
    }
  }
  auto id = [resolution](int i, int j) { return i * resolution + j; };
  for (int i = 0; i + 1 < resolution; ++i) {
    for (int j = 0; j + 1 < resolution; ++j) {
      mesh.triangles.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  }
  return mesh;
}

RestMapping::RestMapping(GarmentRestMesh mesh) : mesh_(std::move(mesh)) {
  validate_rest_mesh(mesh_);
  buckets_ = bucket_count_for(mesh_.triangles.size());
  bucket_triangles_ = bucket_triangles(mesh_, buckets_);
}

std::optional<int> RestMapping::locate_triangle(const Vec2& p) const {
  if (!p.allFinite()) return std::nullopt;
  constexpr double pad = 1e-9;
  if (p.x() < -pad || p.x() > 1.0 + pad || p.y() < -pad || p.y() > 1.0 + pad) return std::nullopt;
  const int c = bucket_coord(p.x(), buckets_), r = bucket_coord(p.y(), buckets_);
  for (int t : bucket_triangles_[static_cast<std::size_t>(r) * buckets_ + c]) {
    const Triangle& tri = mesh_.triangles[t];
    if (inside(barycentric_coords(p, mesh_.uvs[tri[0]], mesh_.uvs[tri[1]], mesh_.uvs[tri[2]])))
      return t;
  }
  return std::nullopt;
}

std::optional<Vec3> RestMapping::try_rest_position(const Vec2& p) const {
  const auto t = locate_triangle(p);
  if (!t) return std::nullopt;
  const Triangle& tri = mesh_.triangles[*t];
  const auto bc = barycentric_coords(p, mesh_.uvs[tri[0]], mesh_.uvs[tri[1]], mesh_.uvs[tri[2]]);
  return interpolate(bc, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]], mesh_.vertices[tri[2]]);
}

Vec3 RestMapping::rest_position(const Vec2& p) const {
  auto pos = try_rest_position(p);
  if (!pos)
    throw Error(ErrorCode::InvalidUvPoint,
                "UV point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ") is not valid");
  return *pos;
}

double RestMapping::rest_length(const Vec2& a, const Vec2& b) const {
  return (rest_position(a) - rest_position(b)).norm();
}

std::optional<int> locate_triangle_linear(const GarmentRestMesh& mesh, const Vec2& p) {
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const Triangle& tri = mesh.triangles[t];
    if (inside(barycentric_coords(p, mesh.uvs[tri[0]], mesh.uvs[tri[1]], mesh.uvs[tri[2]]))) return t;
  }
  return std::nullopt;
}

double RestAtlas::valid_fraction() const {
  if (mask.empty()) return 0.0;
  return static_cast<double>(std::count(mask.begin(), mask.end(), std::uint8_t{1})) /
         static_cast<double>(mask.size());
}

RestAtlas build_atlas(const RestMapping& rest, int resolution) {
  if (resolution < 2) throw Error(ErrorCode::InvalidMesh, "atlas resolution must be >= 2");
  const auto& mesh = rest.mesh();
  RestAtlas atlas;
  atlas.resolution = resolution;
  const auto pixels = static_cast<std::size_t>(resolution) * resolution;
  atlas.positions.assign(pixels, Vec3::Zero());
  atlas.mask.assign(pixels, 0);

  Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double extent = (hi - lo).maxCoeff();
  atlas.offset = lo;
  atlas.scale = extent > 0.0 ? 1.0 / extent : 1.0;

  // Triangles in ascending order; the first writer wins, which reproduces
  // the lowest-index tie rule of locate_triangle.
  for (const Triangle& tri : mesh.triangles) {
    const Vec2 &a = mesh.uvs[tri[0]], &b = mesh.uvs[tri[1]], &c = mesh.uvs[tri[2]];
    const Vec2 lo_uv = a.cwiseMin(b).cwiseMin(c), hi_uv = a.cwiseMax(b).cwiseMax(c);
    const int c0 = std::max(0, static_cast<int>(std::floor(lo_uv.x() * resolution - 0.5)));
    const int c1 = std::min(resolution - 1, static_cast<int>(std::ceil(hi_uv.x() * resolution - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor(lo_uv.y() * resolution - 0.5)));
    const int r1 = std::min(resolution - 1, static_cast<int>(std::ceil(hi_uv.y() * resolution - 0.5)));
    for (int r = r0; r <= r1; ++r) {
      for (int col = c0; col <= c1; ++col) {
        const std::size_t idx = atlas.index(r, col);
        if (atlas.mask[idx]) continue;
        const Vec2 p = atlas.pixel_center(r, col);
        const auto bc = barycentric_coords(p, a, b, c);
        if (!inside(bc)) continue;
        const Vec3 pos = interpolate(bc, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        atlas.positions[idx] = (pos - atlas.offset) * atlas.scale;
        atlas.mask[idx] = 1;
      }
    }
  }
  return atlas;
}

namespace {
constexpr char kAtlasMagic[8] = {'N', 'D', 'A', 'T', 'L', 'A', 'S', '1'};

template <class T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error(ErrorCode::IoFailure, "atlas file truncated");
  return value;
}
}  // namespace

void save_atlas(const RestAtlas& atlas, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os.write(kAtlasMagic, sizeof(kAtlasMagic));
  write_pod<std::int32_t>(os, atlas.resolution);
  write_pod<double>(os, atlas.scale);
  for (int k = 0; k < 3; ++k) write_pod<double>(os, atlas.offset[k]);
  for (std::size_t i = 0; i < atlas.positions.size(); ++i) {
    for (int k = 0; k < 3; ++k) write_pod<float>(os, static_cast<float>(atlas.positions[i][k]));
    write_pod<std::uint8_t>(os, atlas.mask[i]);
  }
  if (!os) throw Error(ErrorCode::IoFailure, "failed writing " + path);
}

RestAtlas load_atlas(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kAtlasMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::FormatVersionMismatch, path + " is not an atlas file");
  RestAtlas atlas;
  atlas.resolution = read_pod<std::int32_t>(is);
  if (atlas.resolution < 2 || atlas.resolution > (1 << 15))
    throw Error(ErrorCode::ShapeMismatch, "bad atlas resolution");
  atlas.scale = read_pod<double>(is);
  for (int k = 0; k < 3; ++k) atlas.offset[k] = read_pod<double>(is);
  const auto pixels = static_cast<std::size_t>(atlas.resolution) * atlas.resolution;
  atlas.positions.resize(pixels);
  atlas.mask.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int k = 0; k < 3; ++k) atlas.positions[i][k] = read_pod<float>(is);
    atlas.mask[i] = read_pod<std::uint8_t>(is);
  }
  return atlas;
}

void save_atlas_png(const RestAtlas& atlas, const std::string& png_path) {
  const int res = atlas.resolution;
  std::vector<std::uint16_t> rgba(static_cast<std::size_t>(res) * res * 4, 0);
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      // PNG rows run top-down; flip so v grows upward in the image.
      const std::size_t out = (static_cast<std::size_t>(res - 1 - r) * res + c) * 4;
      if (!atlas.valid(r, c)) continue;
      const Vec3 n = atlas.normalized(r, c);
      for (int k = 0; k < 3; ++k)
        rgba[out + k] = static_cast<std::uint16_t>(std::lround(std::clamp(n[k], 0.0, 1.0) * 65535.0));
      rgba[out + 3] = 65535;
    }
  }
  write_png_rgba16(png_path, res, res, rgba);

  std::ofstream side(png_path + ".txt");
  if (!side) throw Error(ErrorCode::IoFailure, "cannot write " + png_path + ".txt");
  side.precision(17);
  side << "scale " << atlas.scale << "\n"
       << "offset " << atlas.offset.x() << " " << atlas.offset.y() << " " << atlas.offset.z() << "\n";
}

}  // namespace drape
