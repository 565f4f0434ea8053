#pragma once

#include "drape/neural_surface.hpp"
#include "drape/types.hpp"

#include <array>
#include <string>
#include <utility>

namespace drape {

class RestMapping;

/// Vertex slots of the sampling patch.
enum StructureVertex : int { kA = 0, kB = 1, kC = 2, kMab = 3, kMbc = 4, kMca = 5 };

enum class StrainEdges { all9, inner3 };

std::string to_string(StrainEdges e);
StrainEdges parse_strain_edges(const std::string& s);

/// Four equilateral triangles (midpoint subdivision of an outer triangle
/// ABC of side 2s) centred on a UV point and rotated by theta.
struct LocalStructure2D {
  using Face = std::array<int, 3>;
  using Edge = std::array<int, 2>;
  using FacePair = std::array<int, 2>;

  /// Center face first, then the corner faces at A, B, C. Every face is
  /// counter-clockwise in UV so all normals agree on a flat patch.
  static constexpr std::array<Face, 4> faces{{
      {kMab, kMbc, kMca},
      {kA, kMab, kMca},
      {kB, kMbc, kMab},
      {kC, kMca, kMbc},
  }};
  /// Inner (midpoint) edges first, then the six outer half-edges.
  static constexpr std::array<Edge, 9> edges{{
      {kMab, kMbc},
      {kMbc, kMca},
      {kMca, kMab},
      {kA, kMab},
      {kMab, kB},
      {kB, kMbc},
      {kMbc, kC},
      {kC, kMca},
      {kMca, kA},
  }};
  static constexpr int kInnerEdges = 3;
  /// Center face paired with each corner face.
  static constexpr std::array<FacePair, 3> face_pairs{{{0, 1}, {0, 2}, {0, 3}}};

  Vec2 center = Vec2::Zero();
  double theta = 0.0;
  double side = 0.0;
  std::array<Vec2, 6> vertices{};
};

/// A at angle theta + pi/2 from the center, B at theta + 7pi/6, C at
/// theta + 11pi/6, circumradius 2s / sqrt(3).
LocalStructure2D build_structure_2d(const Vec2& center, double side, double theta);

bool structure_is_valid(const RestMapping& rest, const LocalStructure2D& s2d);

template <class Real>
struct LocalStructure3D {
  std::array<Vec3T<Real>, 6> positions{};
  std::array<Real, 9> rest_lengths{};
};

/// Rest lengths of the 9 edges from the exact barycentric rest map.
std::array<double, 9> structure_rest_lengths(const RestMapping& rest, const LocalStructure2D& s2d);

/// Lifts every vertex onto the current surface. Throws InvalidStructure if
/// any vertex is not a valid UV point.
template <class Real>
LocalStructure3D<Real> lift_structure(const SurfaceModel<Real>& model, const RestMapping& rest,
                                      const LocalStructure2D& s2d);

/// Wavefront OBJ of the lifted patch for inspection.
template <class Real>
void write_structure_obj(const LocalStructure3D<Real>& s3d, const std::string& path);

}  // namespace drape
