#include "drape/collider.hpp"

#include "drape/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace drape {

SpatialIndex::SpatialIndex(std::vector<Vec3> points, int leaf_size)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size)) {
  if (points_.empty()) throw Error(ErrorCode::EmptyCollider, "cannot index an empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
  build(0, static_cast<int>(order_.size()));
}

int SpatialIndex::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  for (int i = begin; i < end; ++i) node.box.extend(points_[order_[i]]);
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  node.box.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    return std::tie(points_[a][axis], a) < std::tie(points_[b][axis], b);
  });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SpatialIndex::search(int node_id, const Vec3& q, double& best_d2, int& best_id) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int id = order_[i];
      const double d2 = (q - points_[id]).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && id < best_id)) {
        best_d2 = d2;
        best_id = id;
      }
    }
    return;
  }
  const double dl = nodes_[node.left].box.squaredExteriorDistance(q);
  const double dr = nodes_[node.right].box.squaredExteriorDistance(q);
  const bool left_first = dl <= dr;
  const int first = left_first ? node.left : node.right;
  const int second = left_first ? node.right : node.left;
  const double d_first = left_first ? dl : dr, d_second = left_first ? dr : dl;
  // Equal distances must still be visited so the lowest-index tie rule holds.
  if (d_first <= best_d2) search(first, q, best_d2, best_id);
  if (d_second <= best_d2) search(second, q, best_d2, best_id);
}

NearestResult SpatialIndex::nearest(const Vec3& q) const {
  if (points_.empty()) throw Error(ErrorCode::EmptyCollider, "spatial index is empty");
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_id = std::numeric_limits<int>::max();
  search(0, q, best_d2, best_id);
  return {best_id, std::sqrt(best_d2)};
}

NearestResult nearest_vertex_linear(std::span<const Vec3> points, const Vec3& q) {
  if (points.empty()) throw Error(ErrorCode::EmptyCollider, "empty point set");
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_id = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (q - points[i]).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_id = static_cast<int>(i);
    }
  }
  return {best_id, std::sqrt(best_d2)};
}

std::vector<Vec3> compute_vertex_normals(std::span<const Vec3> vertices, std::span<const Triangle> triangles) {
  std::vector<Vec3> normals(vertices.size(), Vec3::Zero());
  bool any_face = false;
  for (const Triangle& t : triangles) {
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    if (n.squaredNorm() <= 0.0) continue;
    any_face = true;
    for (int k : t) normals[k] += n;
  }
  if (!any_face && !triangles.empty()) throw Error(ErrorCode::DegenerateMesh, "every collider face is degenerate");
  for (Vec3& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  }
  return normals;
}

ColliderMesh::ColliderMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles, std::vector<Vec3> normals,
                           int leaf_size)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), normals_(std::move(normals)) {
  if (vertices_.empty()) throw Error(ErrorCode::EmptyCollider, "collider has no vertices");
  for (const Triangle& t : triangles_)
    for (int k : t)
      if (k < 0 || k >= static_cast<int>(vertices_.size()))
        throw Error(ErrorCode::DegenerateMesh, "collider face index out of range");
  if (normals_.size() != vertices_.size()) {
    normals_ = compute_vertex_normals(vertices_, triangles_);
  } else {
    for (Vec3& n : normals_) {
      const double len = n.norm();
      n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    }
  }
  std::vector<Vec3> indexed;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (normals_[i].squaredNorm() == 0.0) continue;
    indexed_ids_.push_back(static_cast<int>(i));
    indexed.push_back(vertices_[i]);
  }
  if (indexed.empty()) throw Error(ErrorCode::EmptyCollider, "no collider vertex carries a normal");
  index_ = SpatialIndex(std::move(indexed), leaf_size);
}

NearestResult ColliderMesh::nearest_vertex(const Vec3& q) const {
  NearestResult r = index_.nearest(q);
  r.id = indexed_ids_[r.id];
  return r;
}

namespace {

// Merges coincident vertices (within 1e-12 after quantisation) and orients
// every face away from `inside`, valid for convex solids.
ColliderMesh weld_convex(const std::vector<Vec3>& raw, const std::vector<Triangle>& raw_tris, const Vec3& inside) {
  std::map<std::tuple<long long, long long, long long>, int> lookup;
  std::vector<Vec3> verts;
  std::vector<int> remap(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto key = std::make_tuple(std::llround(raw[i].x() * 1e9), std::llround(raw[i].y() * 1e9),
                                     std::llround(raw[i].z() * 1e9));
    auto [it, inserted] = lookup.emplace(key, static_cast<int>(verts.size()));
    if (inserted) verts.push_back(raw[i]);
    remap[i] = it->second;
  }
  std::vector<Triangle> tris;
  for (const Triangle& t : raw_tris) {
    Triangle m{remap[t[0]], remap[t[1]], remap[t[2]]};
    if (m[0] == m[1] || m[1] == m[2] || m[0] == m[2]) continue;
    const Vec3 n = (verts[m[1]] - verts[m[0]]).cross(verts[m[2]] - verts[m[0]]);
    const Vec3 centroid = (verts[m[0]] + verts[m[1]] + verts[m[2]]) / 3.0;
    if (n.dot(centroid - inside) < 0.0) std::swap(m[1], m[2]);
    tris.push_back(m);
  }
  return ColliderMesh(std::move(verts), std::move(tris));
}

void add_grid_quad(std::vector<Vec3>& v, std::vector<Triangle>& t, const Vec3& origin, const Vec3& du, const Vec3& dv,
                   int n) {
  const int base = static_cast<int>(v.size());
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) v.push_back(origin + du * (double(j) / n) + dv * (double(i) / n));
  auto id = [&](int i, int j) { return base + i * (n + 1) + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      t.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
}

void add_grid_triangle(std::vector<Vec3>& v, std::vector<Triangle>& t, const Vec3& a, const Vec3& b, const Vec3& c,
                       int n) {
  const int base = static_cast<int>(v.size());
  std::vector<std::vector<int>> ids(n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n - i; ++j) {
      ids[i].push_back(static_cast<int>(v.size()) - base);
      v.push_back(a + (b - a) * (double(j) / n) + (c - a) * (double(i) / n));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n - i; ++j) {
      t.push_back({base + ids[i][j], base + ids[i][j + 1], base + ids[i + 1][j]});
      if (j + 1 < n - i) t.push_back({base + ids[i][j + 1], base + ids[i + 1][j + 1], base + ids[i + 1][j]});
    }
}

}  // namespace

ColliderMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                         {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const Triangle& t : f) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p = center + radius * p;
  return ColliderMesh(std::move(v), std::move(f));
}

ColliderMesh make_torus(const Vec3& center, double major_radius, double minor_radius, int major_segments,
                        int minor_segments) {
  if (major_segments < 3 || minor_segments < 3) throw Error(ErrorCode::DegenerateMesh, "torus needs >= 3 segments");
  std::vector<Vec3> v;
  std::vector<Triangle> f;
  for (int i = 0; i < major_segments; ++i) {
    const double theta = 2.0 * kPi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double phi = 2.0 * kPi * j / minor_segments;
      const double ring = major_radius + minor_radius * std::cos(phi);
      v.push_back(center + Vec3(ring * std::cos(theta), ring * std::sin(theta), minor_radius * std::sin(phi)));
    }
  }
  auto id = [&](int i, int j) { return (i % major_segments) * minor_segments + (j % minor_segments); };
  for (int i = 0; i < major_segments; ++i)
    for (int j = 0; j < minor_segments; ++j) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return ColliderMesh(std::move(v), std::move(f));
}

ColliderMesh make_prism(const Vec3& center, double length, double width, double height, int n) {
  if (n < 1) throw Error(ErrorCode::DegenerateMesh, "prism tessellation must be >= 1");
  const double hx = length / 2, hy = width / 2, hz = height / 2;
  const Vec3 l0 = center + Vec3(-hx, -hy, -hz), r0 = center + Vec3(-hx, hy, -hz), t0 = center + Vec3(-hx, 0, hz);
  const Vec3 along(length, 0, 0);
  std::vector<Vec3> v;
  std::vector<Triangle> f;
  add_grid_quad(v, f, l0, along, r0 - l0, n);
  add_grid_quad(v, f, l0, along, t0 - l0, n);
  add_grid_quad(v, f, r0, along, t0 - r0, n);
  add_grid_triangle(v, f, l0, r0, t0, n);
  add_grid_triangle(v, f, l0 + along, r0 + along, t0 + along, n);
  const Vec3 inside = center + Vec3(0, 0, -hz / 3.0);
  return weld_convex(v, f, inside);
}

}  // namespace drape
