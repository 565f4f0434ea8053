#include "../common/fixtures.hpp"
#include "../common/oracles.hpp"

#include "drape/error.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include <filesystem>

namespace drape {
namespace {

TEST(Barycentric, UnitRightTriangle) {
  // p = a + s (b - a) + t (c - a) with s = 0.25, t = 0.5.
  const auto w = barycentric_coords(Vec2(0.25, 0.5), Vec2(0, 0), Vec2(1, 0), Vec2(0, 1));
  EXPECT_NEAR(w.lambda1, 0.25, 1e-15);
  EXPECT_NEAR(w.lambda2, 0.25, 1e-15);
  EXPECT_NEAR(w.lambda3, 0.5, 1e-15);
}

TEST(Barycentric, ReconstructsPoint) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int t = 0; t < 500; ++t) {
    const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng)), p(u(rng), u(rng));
    if (std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x()) < 1e-3) continue;
    const auto w = barycentric_coords(p, a, b, c);
    EXPECT_NEAR(w.lambda1 + w.lambda2 + w.lambda3, 1.0, 1e-12);
    EXPECT_LT((w.lambda1 * a + w.lambda2 * b + w.lambda3 * c - p).norm(), 1e-12);
  }
}

TEST(Barycentric, DegenerateTriangleThrows) {
  try {
    barycentric_coords(Vec2(0.5, 0.5), Vec2(0, 0), Vec2(1, 1), Vec2(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTriangle);
  }
}

TEST(LocateTriangle, AgreesWithLinearScan) {
  const GarmentRestMesh mesh = test::curved_mesh(17, 5);
  const RestMapping rest(mesh);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-0.05, 1.05);
  for (int t = 0; t < 10000; ++t) {
    const Vec2 p(u(rng), u(rng));
    EXPECT_EQ(rest.locate_triangle(p), locate_triangle_linear(mesh, p)) << p.transpose();
  }
}

TEST(LocateTriangle, AgreesAtVerticesAndEdges) {
  const GarmentRestMesh mesh = test::curved_mesh(9, 6);
  const RestMapping rest(mesh);
  for (const auto& uv : mesh.uvs) EXPECT_EQ(rest.locate_triangle(uv), locate_triangle_linear(mesh, uv));
  for (const auto& t : mesh.triangles) {
    const Vec2 mid = 0.5 * (mesh.uvs[t[0]] + mesh.uvs[t[1]]);
    EXPECT_EQ(rest.locate_triangle(mid), locate_triangle_linear(mesh, mid));
  }
}

TEST(RestPosition, CurvedMeshMatchesOracle) {
  const GarmentRestMesh mesh = test::curved_mesh(11, 8);
  const RestMapping rest(mesh);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const Vec2 p(u(rng), u(rng));
    const auto o = test::oracle_rest_position(mesh, p);
    ASSERT_TRUE(o.has_value());
    EXPECT_LT((rest.rest_position(p) - *o).norm(), 1e-12);
  }
}

TEST(RestPosition, InvalidPointThrows) {
  const RestMapping rest(test::identity_plane(3));
  try {
    rest.rest_position(Vec2(1.2, 0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidUvPoint);
  }
  EXPECT_FALSE(rest.try_rest_position(Vec2(1.2, 0.1)).has_value());
}

TEST(RestLength, UniformScaling) {
  GarmentRestMesh mesh = test::identity_plane(6);
  const double s = 2.7;
  for (auto& v : mesh.vertices) v *= s;
  const RestMapping rest(mesh);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng));
    EXPECT_NEAR(rest.rest_length(a, b), s * (a - b).norm(), 1e-12);
  }
}

TEST(BuildAtlas, RandomValidPixelsMatchRestPosition) {
  const RestMapping rest(test::curved_mesh(13, 9));
  const RestAtlas atlas = build_atlas(rest, 96);
  std::mt19937_64 rng(12);
  int checked = 0;
  while (checked < 1000) {
    const int i = static_cast<int>(rng() % 96), j = static_cast<int>(rng() % 96);
    if (!atlas.valid(i, j)) continue;
    EXPECT_LT((atlas.position(i, j) - rest.rest_position(atlas.pixel_center(i, j))).norm(), 1e-6);
    ++checked;
  }
}

TEST(BuildAtlas, ValidFractionTracksUvCoverage) {
  // Triangle covering half of the unit square.
  GarmentRestMesh tri;
  tri.uvs = {{0, 0}, {1, 0}, {0, 1}};
  tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  tri.triangles = {{0, 1, 2}};
  const RestAtlas atlas = build_atlas(RestMapping(tri), 200);
  EXPECT_NEAR(atlas.valid_fraction(), 0.5, 0.01);
}

TEST(BuildAtlas, SaveLoadRoundTrip) {
  const RestAtlas atlas = build_atlas(RestMapping(test::curved_mesh(7, 1)), 32);
  const auto path = (std::filesystem::temp_directory_path() / "drape_atlas.bin").string();
  save_atlas(atlas, path);
  const RestAtlas back = load_atlas(path);
  ASSERT_EQ(back.resolution, atlas.resolution);
  EXPECT_EQ(back.mask, atlas.mask);
  EXPECT_EQ(back.scale, atlas.scale);
  EXPECT_EQ(back.offset, atlas.offset);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      if (atlas.valid(i, j)) EXPECT_LT((back.position(i, j) - atlas.position(i, j)).norm(), 1e-6);
  save_atlas_png(atlas, path + ".png");
  EXPECT_TRUE(std::filesystem::exists(path + ".png"));
  EXPECT_TRUE(std::filesystem::exists(path + ".png.txt"));
}

TEST(BuildAtlas, BadFileRejected) {
  const auto path = (std::filesystem::temp_directory_path() / "drape_atlas_bad.bin").string();
  std::ofstream(path) << "garbage";
  EXPECT_THROW(load_atlas(path), Error);
}

TEST(ValidateRestMesh, RejectsBrokenMeshes) {
  auto expect_code = [](GarmentRestMesh m, ErrorCode code) {
    try {
      validate_rest_mesh(m);
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  GarmentRestMesh m = test::identity_plane(3);
  m.uvs[0] = Vec2(-0.1, 0.0);
  expect_code(m, ErrorCode::InvalidMesh);
  m = test::identity_plane(3);
  m.triangles[0][1] = 99;
  expect_code(m, ErrorCode::InvalidMesh);
  m = test::identity_plane(3);
  m.uvs[4] = m.uvs[0];
  expect_code(m, ErrorCode::DegenerateTriangle);
  m = test::identity_plane(3);
  m.triangles.push_back(m.triangles[0]);
  expect_code(m, ErrorCode::InvalidMesh);
  m = test::identity_plane(3);
  m.uvs.pop_back();
  expect_code(m, ErrorCode::InvalidMesh);
}

TEST(SquareCloth, Layout) {
  const auto m = make_square_cloth(4, 2.0, 1.5);
  EXPECT_EQ(m.vertices.size(), 16u);
  EXPECT_EQ(m.triangles.size(), 18u);
  EXPECT_EQ(m.vertices[15], Vec3(2.0, 2.0, 1.5));
  EXPECT_EQ(m.uvs[15], Vec2(1.0, 1.0));
  EXPECT_NO_THROW(validate_rest_mesh(m));
}

}  // namespace
}  // namespace drape
