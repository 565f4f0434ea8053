#include "../common/fixtures.hpp"
#include "../common/oracles.hpp"

#include "drape/error.hpp"
#include "drape/losses.hpp"

#include <gtest/gtest.h>

namespace drape {
namespace {

using test::flat_structure;

LocalStructure3D<double> random_structure(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  auto s = flat_structure(Vec2(0.5, 0.5), 0.05, 0.4);
  for (auto& x : s.positions) x += Vec3(u(rng), u(rng), u(rng));
  for (auto& r : s.rest_lengths) r *= 1.0 + 10 * u(rng);
  return s;
}

TEST(Strain, AbsoluteEqualsRelativeTimesSquaredRest) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto s = random_structure(rng);
    double expect = 0.0;
    for (int e = 0; e < 9; ++e) {
      const auto [a, b] = LocalStructure2D::edges[e];
      // Relative term of edge e alone, times its squared rest length.
      const double l = (s.positions[a] - s.positions[b]).norm();
      const double rel = (l - s.rest_lengths[e]) / s.rest_lengths[e];
      expect += rel * rel * s.rest_lengths[e] * s.rest_lengths[e];
    }
    EXPECT_NEAR(strain_loss_absolute(s, StrainEdges::all9), expect, 1e-15);
  }
}

TEST(Strain, InnerSubsetCountsThreeEdges) {
  auto s = flat_structure();
  for (auto& x : s.positions) x *= 2.0;
  EXPECT_NEAR(strain_loss(s, StrainEdges::inner3), 3.0, 1e-12);
}

TEST(Strain, ZeroRestLengthThrows) {
  auto s = flat_structure();
  s.rest_lengths[2] = 0.0;
  for (bool absolute : {false, true}) {
    try {
      absolute ? strain_loss_absolute(s, StrainEdges::all9) : strain_loss(s, StrainEdges::all9);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ZeroRestLength);
    }
  }
}

TEST(Bend, DegenerateFaceContributesZero) {
  auto s = flat_structure();
  s.positions[kA] = s.positions[kMab];
  int degenerate = 0;
  EXPECT_EQ(bend_loss(s, &degenerate), 0.0);
  EXPECT_EQ(degenerate, 1);
}

TEST(Gravity, TranslationCovariance) {
  PhysicsConstants c;
  c.mass = 0.3;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 100; ++t) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const double dh = u(rng);
    EXPECT_NEAR(gravity_loss(Vec3T<double>(x + dh * c.gravity_axis), c) - gravity_loss(Vec3T<double>(x), c),
                c.mass * c.gravity * dh, 1e-12);
  }
}

TEST(Gravity, CustomAxis) {
  PhysicsConstants c;
  c.gravity_axis = Vec3(0, 1, 0);
  EXPECT_NEAR(gravity_loss(Vec3T<double>(5, 2, 7), c), 2 * 9.81, 1e-12);
}

TEST(Collision, MatchesBruteForceOracle) {
  const ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.0), 0.3, 3);
  PhysicsConstants c;
  c.collision_epsilon = 0.01;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  int active = 0;
  for (int t = 0; t < 300; ++t) {
    auto s = flat_structure(Vec2(0.5, 0.5), 0.1, 0.0);
    for (auto& x : s.positions) x = Vec3(0.5, 0.5, 0.0) + Vec3(u(rng), u(rng), u(rng));
    double expect = 0.0;
    for (const auto& x : s.positions) {
      int best = -1;
      double bd = 1e300;
      for (std::size_t k = 0; k < sphere.vertices().size(); ++k) {
        const double d = (x - sphere.vertices()[k]).squaredNorm();
        if (d < bd) bd = d, best = static_cast<int>(k);
      }
      const double pen = std::min((x - sphere.vertices()[best]).dot(sphere.normals()[best]) - c.collision_epsilon, 0.0);
      expect += pen * pen;
    }
    active += expect > 0;
    EXPECT_NEAR(collision_loss(s, sphere, c), expect, 1e-15);
  }
  EXPECT_GT(active, 50);
}

TEST(Collision, DeadzoneIsExactZero) {
  const ColliderMesh floor = test::floor_collider();
  PhysicsConstants c;
  auto s = flat_structure();
  for (auto& x : s.positions) x.z() = c.collision_epsilon;
  EXPECT_EQ(collision_loss(s, floor, c), 0.0);
}

TEST(StructureLoss, RecombinesFourTerms) {
  const RestMapping rest(test::curved_mesh(8, 3));
  const auto model = test::random_model<double>(ModelConfig{}, 4, 0.05);
  const ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.4, 0.0), 0.3, 3);
  LossConfig cfg;
  cfg.side = 0.02;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 0.9), a(0.0, 2 * kPi);
  for (int t = 0; t < 50; ++t) {
    const Vec2 p(u(rng), u(rng));
    const double theta = a(rng);
    const LossBreakdown b = structure_loss(model, rest, &sphere, p, theta, cfg);
    const auto s3d = lift_structure(model, rest, build_structure_2d(p, cfg.side, theta));
    EXPECT_NEAR(b.strain, strain_loss(s3d, StrainEdges::all9), 1e-15);
    EXPECT_NEAR(b.bend, bend_loss(s3d), 1e-15);
    EXPECT_NEAR(b.gravity, gravity_loss(model, rest, p, cfg.consts), 1e-15);
    EXPECT_NEAR(b.collision, collision_loss(s3d, sphere, cfg.consts), 1e-15);
    const auto& w = cfg.weights;
    EXPECT_NEAR(b.weighted_total,
                w.strain * b.strain + w.bend * b.bend + w.gravity * b.gravity + w.collision * b.collision,
                1e-12 * std::max(1.0, std::abs(b.weighted_total)));
    EXPECT_GE(b.strain, 0.0);
    EXPECT_GE(b.bend, 0.0);
    EXPECT_GE(b.collision, 0.0);
  }
}

TEST(StructureLoss, InvalidStructureThrows) {
  const RestMapping rest(test::identity_plane(4));
  const auto model = init_model<double>(ModelConfig{}, 1);
  try {
    structure_loss(model, rest, nullptr, Vec2(0.0005, 0.5), 0.0, LossConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidStructure);
  }
}

TEST(LossBreakdownTest, Arithmetic) {
  LossBreakdown a{1, 2, 3, 4, 0};
  a.recombine(LossWeights{1, 1, 1, 1});
  EXPECT_EQ(a.weighted_total, 10.0);
  LossBreakdown b = a;
  b += a;
  b *= 0.5;
  EXPECT_EQ(b.strain, 1.0);
  EXPECT_EQ(b.weighted_total, 10.0);
}

TEST(LossConfigValidation, RejectsNegativeWeights) {
  EXPECT_NO_THROW(LossWeights{}.validate());
  EXPECT_THROW((LossWeights{-1, 0, 0, 0}.validate()), Error);
  PhysicsConstants c;
  c.gravity_axis = Vec3::Zero();
  EXPECT_THROW(c.validate(), Error);
}

// Vertex-level gradients against central differences on the positions.
template <class F, class G>
void check_vertex_gradient(LocalStructure3D<double> s, F value, G grad_fn) {
  VertexGradient<double> g{};
  for (auto& v : g) v.setZero();
  grad_fn(s, g);
  const double h = 1e-6;
  for (int k = 0; k < 6; ++k)
    for (int d = 0; d < 3; ++d) {
      auto up = s, down = s;
      up.positions[k][d] += h;
      down.positions[k][d] -= h;
      const double n = (value(up) - value(down)) / (2 * h);
      EXPECT_NEAR(g[k][d], n, 1e-6 * std::max(1.0, std::abs(n))) << "vertex " << k << " dim " << d;
    }
}

TEST(VertexGradients, Strain) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto s = random_structure(rng);
    for (auto form : {StrainForm::relative, StrainForm::absolute})
      check_vertex_gradient(
          s,
          [&](const auto& x) {
            return form == StrainForm::relative ? strain_loss(x, StrainEdges::all9)
                                                : strain_loss_absolute(x, StrainEdges::all9);
          },
          [&](const auto& x, auto& g) {
            const double v = strain_loss_grad(x, StrainEdges::all9, form, 1.0, g);
            EXPECT_NEAR(v, form == StrainForm::relative ? strain_loss(x, StrainEdges::all9)
                                                        : strain_loss_absolute(x, StrainEdges::all9),
                        1e-15);
          });
  }
}

TEST(VertexGradients, Bend) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t)
    check_vertex_gradient(
        random_structure(rng), [](const auto& x) { return bend_loss(x); },
        [](const auto& x, auto& g) { bend_loss_grad(x, 1.0, g); });
}

TEST(VertexGradients, Collision) {
  const ColliderMesh floor = test::floor_collider();
  PhysicsConstants c;
  c.collision_epsilon = 0.01;
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    auto s = random_structure(rng);
    check_vertex_gradient(
        s, [&](const auto& x) { return collision_loss(x, floor, c); },
        [&](const auto& x, auto& g) { collision_loss_grad(x, floor, c, 1.0, g); });
  }
}

TEST(StrainFormNames, RoundTrip) {
  for (auto f : {StrainForm::relative, StrainForm::absolute}) EXPECT_EQ(parse_strain_form(to_string(f)), f);
  EXPECT_THROW(parse_strain_form("elastic"), Error);
}

}  // namespace
}  // namespace drape
