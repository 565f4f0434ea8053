#pragma once

#include "drape/local_structure.hpp"
#include "drape/types.hpp"

#include <array>
#include <string>

namespace drape {

class ColliderMesh;
class RestMapping;

struct LossWeights {
  double strain = 0.005;
  double bend = 0.0005;
  double gravity = 2.0;
  double collision = 1e7;

  /// Throws ConfigError on negative or non-finite weights.
  void validate() const;
};

struct PhysicsConstants {
  double mass = 1.0;
  double gravity = 9.81;
  Vec3 gravity_axis = Vec3::UnitZ();
  double collision_epsilon = 1e-3;

  void validate() const;
};

enum class StrainForm { relative, absolute };

std::string to_string(StrainForm f);
StrainForm parse_strain_form(const std::string& s);

/// Everything needed to turn a UV point into a weighted structure loss.
struct LossConfig {
  LossWeights weights;
  PhysicsConstants consts;
  double side = 0.001;
  StrainEdges edges = StrainEdges::all9;
  StrainForm strain_form = StrainForm::relative;
};

struct LossBreakdown {
  double strain = 0.0;
  double bend = 0.0;
  double gravity = 0.0;
  double collision = 0.0;
  double weighted_total = 0.0;

  /// Recomputes weighted_total from the four terms.
  void recombine(const LossWeights& w);
  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator*=(double s);
};

/// Per-vertex gradient of a structure loss with respect to the six lifted
/// positions.
template <class Real>
using VertexGradient = std::array<Vec3T<Real>, 6>;

/// Sum of squared relative length changes. Throws ZeroRestLength.
template <class Real>
Real strain_loss(const LocalStructure3D<Real>& s3d, StrainEdges edges);

/// Sum of squared absolute length changes.
template <class Real>
Real strain_loss_absolute(const LocalStructure3D<Real>& s3d, StrainEdges edges);

/// Sum over the three face pairs of |n1 - n2|^2 with unit face normals.
/// Pairs touching a face of area <= 1e-12 contribute 0 and bump
/// `degenerate_pairs` when given.
template <class Real>
Real bend_loss(const LocalStructure3D<Real>& s3d, int* degenerate_pairs = nullptr);

/// m g h with h the height of `x` along the gravity axis.
template <class Real>
Real gravity_loss(const Vec3T<Real>& x, const PhysicsConstants& consts);

/// Gravity at the surface point of UV p. Throws InvalidUvPoint.
template <class Real>
Real gravity_loss(const SurfaceModel<Real>& model, const RestMapping& rest, const Vec2& p,
                  const PhysicsConstants& consts);

/// Sum over the six vertices of min(d . n - eps, 0)^2 against the nearest
/// collider vertex.
template <class Real>
Real collision_loss(const LocalStructure3D<Real>& s3d, const ColliderMesh& collider, const PhysicsConstants& consts);

/// Gradient variants: return the loss and add its gradient into `grad`
/// scaled by `scale`.
template <class Real>
Real strain_loss_grad(const LocalStructure3D<Real>& s3d, StrainEdges edges, StrainForm form, Real scale,
                      VertexGradient<Real>& grad);
template <class Real>
Real bend_loss_grad(const LocalStructure3D<Real>& s3d, Real scale, VertexGradient<Real>& grad,
                    int* degenerate_pairs = nullptr);
template <class Real>
Real collision_loss_grad(const LocalStructure3D<Real>& s3d, const ColliderMesh& collider,
                         const PhysicsConstants& consts, Real scale, VertexGradient<Real>& grad);

/// Building blocks shared with the mesh-connectivity losses. Each returns
/// its term and adds scale * d(term)/d(x) into the gradient arguments.
template <class Real>
Real edge_strain(const Vec3T<Real>& a, const Vec3T<Real>& b, Real rest, StrainForm form, Real scale, Vec3T<Real>& ga,
                 Vec3T<Real>& gb);
template <class Real>
Real normal_difference(const std::array<Vec3T<Real>, 3>& f1, const std::array<Vec3T<Real>, 3>& f2, Real scale,
                       std::array<Vec3T<Real>, 3>& g1, std::array<Vec3T<Real>, 3>& g2, bool* degenerate = nullptr);
template <class Real>
Real vertex_collision(const Vec3T<Real>& x, const ColliderMesh& collider, const PhysicsConstants& consts, Real scale,
                      Vec3T<Real>& g);

/// Builds, lifts and scores the structure at (p, theta). `collider` may be
/// null for scenes without an obstacle. Throws InvalidStructure.
template <class Real>
LossBreakdown structure_loss(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                             const Vec2& p, double theta, const LossConfig& config);

}  // namespace drape
