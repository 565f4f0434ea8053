#pragma once

#include "drape/types.hpp"

#include <istream>
#include <string>
#include <vector>

namespace drape {

struct GarmentRestMesh;
class ColliderMesh;

/// Triangle soup as read from a Wavefront OBJ. Corners referencing distinct
/// (position, texcoord) pairs become distinct vertices, so `uvs` and
/// `normals`, when present, are indexed like `vertices`.
struct ObjMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uvs;
  std::vector<Vec3> normals;
  std::vector<Triangle> triangles;

  bool has_uvs() const { return !uvs.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

/// Reads v / vt / vn / f records (f in any of the a, a/b, a//c, a/b/c forms,
/// negative indices allowed, polygons fan-triangulated). Comments, blank
/// lines and other record types are skipped. Throws ParseError or IoFailure.
ObjMesh parse_obj(std::istream& is, const std::string& name = "<stream>");
ObjMesh read_obj(const std::string& path);

/// Throws ParseError "garment OBJ lacks texture coordinates" when any face
/// corner has no vt.
GarmentRestMesh read_garment_obj(const std::string& path);

/// Uses vn records when every vertex has one, otherwise computes normals.
ColliderMesh read_collider_obj(const std::string& path);

/// Writes v, optional vt, and f records with 9 significant digits.
void write_obj(const std::string& path, const std::vector<Vec3>& vertices, const std::vector<Vec2>& uvs,
               const std::vector<Triangle>& triangles);

}  // namespace drape
