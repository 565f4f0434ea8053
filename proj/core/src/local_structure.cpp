#include "drape/local_structure.hpp"

#include "drape/error.hpp"
#include "drape/rest_atlas.hpp"

#include <cmath>
#include <fstream>

namespace drape {

std::string to_string(StrainEdges e) { return e == StrainEdges::all9 ? "all9" : "inner3"; }

StrainEdges parse_strain_edges(const std::string& s) {
  if (s == "all9") return StrainEdges::all9;
  if (s == "inner3") return StrainEdges::inner3;
  throw Error(ErrorCode::ParseError, "unknown strain edge set '" + s + "'");
}

LocalStructure2D build_structure_2d(const Vec2& center, double side, double theta) {
  LocalStructure2D s;
  s.center = center;
  s.theta = theta;
  s.side = side;
  const double radius = 2.0 * side / std::sqrt(3.0);
  auto corner = [&](double angle) { return Vec2(center + radius * Vec2(std::cos(angle), std::sin(angle))); };
  s.vertices[kA] = corner(theta + kPi / 2.0);
  s.vertices[kB] = corner(theta + 7.0 * kPi / 6.0);
  s.vertices[kC] = corner(theta + 11.0 * kPi / 6.0);
  s.vertices[kMab] = 0.5 * (s.vertices[kA] + s.vertices[kB]);
  s.vertices[kMbc] = 0.5 * (s.vertices[kB] + s.vertices[kC]);
  s.vertices[kMca] = 0.5 * (s.vertices[kC] + s.vertices[kA]);
  return s;
}

bool structure_is_valid(const RestMapping& rest, const LocalStructure2D& s2d) {
  for (const Vec2& v : s2d.vertices)
    if (!rest.is_valid(v)) return false;
  return true;
}

std::array<double, 9> structure_rest_lengths(const RestMapping& rest, const LocalStructure2D& s2d) {
  std::array<Vec3, 6> p;
  for (int i = 0; i < 6; ++i) p[i] = rest.rest_position(s2d.vertices[i]);
  std::array<double, 9> out{};
  for (int e = 0; e < 9; ++e) {
    const auto& edge = LocalStructure2D::edges[e];
    out[e] = (p[edge[0]] - p[edge[1]]).norm();
  }
  return out;
}

template <class Real>
LocalStructure3D<Real> lift_structure(const SurfaceModel<Real>& model, const RestMapping& rest,
                                      const LocalStructure2D& s2d) {
  std::array<Vec3, 6> base;
  for (int i = 0; i < 6; ++i) {
    auto p = rest.try_rest_position(s2d.vertices[i]);
    if (!p) throw Error(ErrorCode::InvalidStructure, "structure vertex " + std::to_string(i) + " is not a valid UV point");
    base[i] = *p;
  }
  const auto tape = forward(model, std::span<const Vec2>(s2d.vertices.data(), s2d.vertices.size()));
  LocalStructure3D<Real> out;
  for (int i = 0; i < 6; ++i) out.positions[i] = base[i].cast<Real>() + tape.output().col(i);
  for (int e = 0; e < 9; ++e) {
    const auto& edge = LocalStructure2D::edges[e];
    out.rest_lengths[e] = static_cast<Real>((base[edge[0]] - base[edge[1]]).norm());
  }
  return out;
}

template <class Real>
void write_structure_obj(const LocalStructure3D<Real>& s3d, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os.precision(9);
  for (const auto& p : s3d.positions) os << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
  for (const auto& f : LocalStructure2D::faces) os << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

template LocalStructure3D<float> lift_structure<float>(const SurfaceModel<float>&, const RestMapping&,
                                                       const LocalStructure2D&);
template LocalStructure3D<double> lift_structure<double>(const SurfaceModel<double>&, const RestMapping&,
                                                         const LocalStructure2D&);
template void write_structure_obj<float>(const LocalStructure3D<float>&, const std::string&);
template void write_structure_obj<double>(const LocalStructure3D<double>&, const std::string&);

}  // namespace drape
