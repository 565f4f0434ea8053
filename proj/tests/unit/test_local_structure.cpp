#include "../common/fixtures.hpp"
#include "../common/oracles.hpp"

#include "drape/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace drape {
namespace {

TEST(Structure2D, ThirdTurnRelabelsCorners) {
  const Vec2 c(0.4, 0.55);
  const auto s0 = build_structure_2d(c, 0.07, 0.3);
  const auto s1 = build_structure_2d(c, 0.07, 0.3 + 2 * kPi / 3);
  // Rotation oracle: R(2pi/3) about c maps A -> B' and so on.
  const Eigen::Rotation2Dd r(2 * kPi / 3);
  const int relabel[6] = {kB, kC, kA, kMbc, kMca, kMab};
  for (int k = 0; k < 6; ++k) {
    const Vec2 rotated = c + r * (s0.vertices[k] - c);
    EXPECT_LT((rotated - s1.vertices[k]).norm(), 1e-14);
    EXPECT_LT((s1.vertices[k] - s0.vertices[relabel[k]]).norm(), 1e-14) << k;
  }
}

TEST(Structure2D, MidpointsAreMidpoints) {
  const auto s = build_structure_2d(Vec2(0.3, 0.3), 0.02, 1.1);
  EXPECT_LT((s.vertices[kMab] - 0.5 * (s.vertices[kA] + s.vertices[kB])).norm(), 1e-15);
  EXPECT_LT((s.vertices[kMbc] - 0.5 * (s.vertices[kB] + s.vertices[kC])).norm(), 1e-15);
  EXPECT_LT((s.vertices[kMca] - 0.5 * (s.vertices[kC] + s.vertices[kA])).norm(), 1e-15);
}

TEST(Structure2D, FacesAreCounterClockwise) {
  const auto s = build_structure_2d(Vec2(0.5, 0.5), 0.1, 2.9);
  for (const auto& f : LocalStructure2D::faces) {
    const Vec2 e1 = s.vertices[f[1]] - s.vertices[f[0]], e2 = s.vertices[f[2]] - s.vertices[f[0]];
    EXPECT_GT(e1.x() * e2.y() - e1.y() * e2.x(), 0.0);
  }
}

TEST(LiftStructure, MatchesPointwiseSurfacePosition) {
  const RestMapping rest(test::curved_mesh(9, 4));
  const auto m = test::random_model<double>(ModelConfig{}, 3, 0.2);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 0.9), a(0.0, 2 * kPi);
  for (int t = 0; t < 50; ++t) {
    const auto s2d = build_structure_2d(Vec2(u(rng), u(rng)), 0.01, a(rng));
    const auto s3d = lift_structure(m, rest, s2d);
    for (int k = 0; k < 6; ++k) EXPECT_LT((s3d.positions[k] - surface_position(m, rest, s2d.vertices[k])).norm(), 1e-12);
    const auto rl = structure_rest_lengths(rest, s2d);
    for (int e = 0; e < 9; ++e) {
      const auto [p, q] = LocalStructure2D::edges[e];
      EXPECT_NEAR(s3d.rest_lengths[e], rest.rest_length(s2d.vertices[p], s2d.vertices[q]), 1e-15);
      EXPECT_EQ(s3d.rest_lengths[e], rl[e]);
    }
  }
}

TEST(LiftStructure, ValidityMatchesVertexValidity) {
  const RestMapping rest(test::identity_plane(4));
  for (double y : {0.5, 0.99, 0.999, 0.9999}) {
    const auto s2d = build_structure_2d(Vec2(0.5, y), 0.01, 0.0);
    bool all = true;
    for (const auto& v : s2d.vertices) all = all && rest.is_valid(v);
    EXPECT_EQ(structure_is_valid(rest, s2d), all);
  }
}

TEST(LiftStructure, WritesObj) {
  const auto s = test::flat_structure();
  const auto path = (std::filesystem::temp_directory_path() / "drape_structure.obj").string();
  write_structure_obj(s, path);
  std::ifstream in(path);
  int v = 0, f = 0;
  for (std::string line; std::getline(in, line);) {
    v += line.rfind("v ", 0) == 0;
    f += line.rfind("f ", 0) == 0;
  }
  EXPECT_EQ(v, 6);
  EXPECT_EQ(f, 4);
}

TEST(StrainEdgesNames, RoundTrip) {
  for (auto e : {StrainEdges::all9, StrainEdges::inner3}) EXPECT_EQ(parse_strain_edges(to_string(e)), e);
  EXPECT_THROW(parse_strain_edges("most"), Error);
}

}  // namespace
}  // namespace drape
