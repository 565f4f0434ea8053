#include "drape/losses.hpp"

#include "drape/collider.hpp"
#include "drape/error.hpp"
#include "drape/rest_atlas.hpp"

#include <cmath>

namespace drape {

void LossWeights::validate() const {
  for (double w : {strain, bend, gravity, collision})
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::ConfigError, "loss weights must be finite and >= 0");
}

void PhysicsConstants::validate() const {
  if (!std::isfinite(mass) || mass < 0.0) throw Error(ErrorCode::ConfigError, "mass must be finite and >= 0");
  if (!std::isfinite(gravity) || gravity < 0.0) throw Error(ErrorCode::ConfigError, "gravity must be finite and >= 0");
  if (std::abs(gravity_axis.norm() - 1.0) > 1e-9) throw Error(ErrorCode::ConfigError, "gravity axis must be unit length");
  if (!std::isfinite(collision_epsilon) || collision_epsilon < 0.0)
    throw Error(ErrorCode::ConfigError, "collision epsilon must be finite and >= 0");
}

std::string to_string(StrainForm f) { return f == StrainForm::relative ? "relative" : "absolute"; }

StrainForm parse_strain_form(const std::string& s) {
  if (s == "relative") return StrainForm::relative;
  if (s == "absolute") return StrainForm::absolute;
  throw Error(ErrorCode::ParseError, "unknown strain form '" + s + "'");
}

void LossBreakdown::recombine(const LossWeights& w) {
  weighted_total = w.strain * strain + w.bend * bend + w.gravity * gravity + w.collision * collision;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  strain += o.strain;
  bend += o.bend;
  gravity += o.gravity;
  collision += o.collision;
  weighted_total += o.weighted_total;
  return *this;
}

LossBreakdown& LossBreakdown::operator*=(double s) {
  strain *= s;
  bend *= s;
  gravity *= s;
  collision *= s;
  weighted_total *= s;
  return *this;
}

namespace {

int edge_count(StrainEdges edges) { return edges == StrainEdges::all9 ? 9 : LocalStructure2D::kInnerEdges; }

constexpr double kDegenerateFaceArea = 1e-12;

}  // namespace

template <class Real>
Real edge_strain(const Vec3T<Real>& a, const Vec3T<Real>& b, Real rest, StrainForm form, Real scale, Vec3T<Real>& ga,
                 Vec3T<Real>& gb) {
  const Vec3T<Real> d = a - b;
  const Real len = d.norm();
  const Real diff = len - rest;
  Real term, coeff;  // coeff = d(term)/d(len)
  if (form == StrainForm::relative) {
    term = (diff / rest) * (diff / rest);
    coeff = Real(2) * diff / (rest * rest);
  } else {
    term = diff * diff;
    coeff = Real(2) * diff;
  }
  if (scale != Real(0) && len > Real(0)) {
    const Vec3T<Real> g = (scale * coeff / len) * d;
    ga += g;
    gb -= g;
  }
  return term;
}

template <class Real>
Real normal_difference(const std::array<Vec3T<Real>, 3>& f1, const std::array<Vec3T<Real>, 3>& f2, Real scale,
                       std::array<Vec3T<Real>, 3>& g1, std::array<Vec3T<Real>, 3>& g2, bool* degenerate) {
  const Vec3T<Real> c1 = (f1[1] - f1[0]).cross(f1[2] - f1[0]);
  const Vec3T<Real> c2 = (f2[1] - f2[0]).cross(f2[2] - f2[0]);
  const Real l1 = c1.norm(), l2 = c2.norm();
  if (static_cast<double>(l1) * 0.5 <= kDegenerateFaceArea || static_cast<double>(l2) * 0.5 <= kDegenerateFaceArea) {
    if (degenerate) *degenerate = true;
    return Real(0);
  }
  if (degenerate) *degenerate = false;
  const Vec3T<Real> n1 = c1 / l1, n2 = c2 / l2;
  const Vec3T<Real> diff = n1 - n2;
  if (scale != Real(0)) {
    // Through n = c/|c| and c = e1 x e2.
    auto push = [](const std::array<Vec3T<Real>, 3>& f, const Vec3T<Real>& n, Real len, const Vec3T<Real>& gn,
                   std::array<Vec3T<Real>, 3>& g) {
      const Vec3T<Real> gc = (gn - n * n.dot(gn)) / len;
      const Vec3T<Real> ga = (f[2] - f[0]).cross(gc);
      const Vec3T<Real> gb = gc.cross(f[1] - f[0]);
      g[1] += ga;
      g[2] += gb;
      g[0] -= ga + gb;
    };
    push(f1, n1, l1, Real(2) * scale * diff, g1);
    push(f2, n2, l2, Real(-2) * scale * diff, g2);
  }
  return diff.squaredNorm();
}

template <class Real>
Real vertex_collision(const Vec3T<Real>& x, const ColliderMesh& collider, const PhysicsConstants& consts, Real scale,
                      Vec3T<Real>& g) {
  const Vec3 xd = x.template cast<double>();
  const NearestResult nn = collider.nearest_vertex(xd);
  const Vec3& n = collider.normals()[nn.id];
  const double r = (xd - collider.vertices()[nn.id]).dot(n) - consts.collision_epsilon;
  if (r >= 0.0) return Real(0);
  if (scale != Real(0)) g += (scale * static_cast<Real>(2.0 * r)) * n.cast<Real>();
  return static_cast<Real>(r * r);
}

template <class Real>
Real strain_loss_grad(const LocalStructure3D<Real>& s3d, StrainEdges edges, StrainForm form, Real scale,
                      VertexGradient<Real>& grad) {
  Real total = 0;
  for (int e = 0; e < edge_count(edges); ++e) {
    const auto& edge = LocalStructure2D::edges[e];
    const Real rest = s3d.rest_lengths[e];
    if (!(rest > Real(0))) throw Error(ErrorCode::ZeroRestLength, "edge " + std::to_string(e) + " has zero rest length");
    total += edge_strain(s3d.positions[edge[0]], s3d.positions[edge[1]], rest, form, scale, grad[edge[0]],
                         grad[edge[1]]);
  }
  return total;
}

template <class Real>
Real strain_loss(const LocalStructure3D<Real>& s3d, StrainEdges edges) {
  VertexGradient<Real> sink{};
  return strain_loss_grad(s3d, edges, StrainForm::relative, Real(0), sink);
}

template <class Real>
Real strain_loss_absolute(const LocalStructure3D<Real>& s3d, StrainEdges edges) {
  VertexGradient<Real> sink{};
  return strain_loss_grad(s3d, edges, StrainForm::absolute, Real(0), sink);
}

template <class Real>
Real bend_loss_grad(const LocalStructure3D<Real>& s3d, Real scale, VertexGradient<Real>& grad,
                    int* degenerate_pairs) {
  Real total = 0;
  for (const auto& pair : LocalStructure2D::face_pairs) {
    const auto& a = LocalStructure2D::faces[pair[0]];
    const auto& b = LocalStructure2D::faces[pair[1]];
    const std::array<Vec3T<Real>, 3> f1{s3d.positions[a[0]], s3d.positions[a[1]], s3d.positions[a[2]]};
    const std::array<Vec3T<Real>, 3> f2{s3d.positions[b[0]], s3d.positions[b[1]], s3d.positions[b[2]]};
    std::array<Vec3T<Real>, 3> g1, g2;
    for (int k = 0; k < 3; ++k) {
      g1[k].setZero();
      g2[k].setZero();
    }
    bool degenerate = false;
    total += normal_difference(f1, f2, scale, g1, g2, &degenerate);
    if (degenerate) {
      if (degenerate_pairs) ++*degenerate_pairs;
      continue;
    }
    if (scale == Real(0)) continue;
    for (int k = 0; k < 3; ++k) {
      grad[a[k]] += g1[k];
      grad[b[k]] += g2[k];
    }
  }
  return total;
}

template <class Real>
Real bend_loss(const LocalStructure3D<Real>& s3d, int* degenerate_pairs) {
  VertexGradient<Real> sink{};
  return bend_loss_grad(s3d, Real(0), sink, degenerate_pairs);
}

template <class Real>
Real gravity_loss(const Vec3T<Real>& x, const PhysicsConstants& consts) {
  return static_cast<Real>(consts.mass * consts.gravity) * x.dot(consts.gravity_axis.cast<Real>());
}

template <class Real>
Real gravity_loss(const SurfaceModel<Real>& model, const RestMapping& rest, const Vec2& p,
                  const PhysicsConstants& consts) {
  return gravity_loss<Real>(surface_position(model, rest, p), consts);
}

template <class Real>
Real collision_loss_grad(const LocalStructure3D<Real>& s3d, const ColliderMesh& collider,
                         const PhysicsConstants& consts, Real scale, VertexGradient<Real>& grad) {
  Real total = 0;
  for (int i = 0; i < 6; ++i) total += vertex_collision(s3d.positions[i], collider, consts, scale, grad[i]);
  return total;
}

template <class Real>
Real collision_loss(const LocalStructure3D<Real>& s3d, const ColliderMesh& collider, const PhysicsConstants& consts) {
  VertexGradient<Real> sink{};
  return collision_loss_grad(s3d, collider, consts, Real(0), sink);
}

template <class Real>
LossBreakdown structure_loss(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                             const Vec2& p, double theta, const LossConfig& config) {
  const LocalStructure2D s2d = build_structure_2d(p, config.side, theta);
  const LocalStructure3D<Real> s3d = lift_structure(model, rest, s2d);
  const auto center = rest.try_rest_position(p);
  if (!center) throw Error(ErrorCode::InvalidStructure, "structure center is not a valid UV point");

  LossBreakdown out;
  out.strain = config.strain_form == StrainForm::relative ? strain_loss(s3d, config.edges)
                                                          : strain_loss_absolute(s3d, config.edges);
  out.bend = bend_loss(s3d);
  const Vec3T<Real> x = center->cast<Real>() + deform(model, p);
  out.gravity = gravity_loss<Real>(x, config.consts);
  out.collision = collider ? collision_loss(s3d, *collider, config.consts) : 0.0;
  out.recombine(config.weights);
  return out;
}

#define DRAPE_INSTANTIATE_LOSSES(Real)                                                                              \
  template Real strain_loss<Real>(const LocalStructure3D<Real>&, StrainEdges);                                      \
  template Real strain_loss_absolute<Real>(const LocalStructure3D<Real>&, StrainEdges);                             \
  template Real bend_loss<Real>(const LocalStructure3D<Real>&, int*);                                              \
  template Real gravity_loss<Real>(const Vec3T<Real>&, const PhysicsConstants&);                                   \
  template Real gravity_loss<Real>(const SurfaceModel<Real>&, const RestMapping&, const Vec2&,                     \
                                   const PhysicsConstants&);                                                        \
  template Real collision_loss<Real>(const LocalStructure3D<Real>&, const ColliderMesh&, const PhysicsConstants&); \
  template Real strain_loss_grad<Real>(const LocalStructure3D<Real>&, StrainEdges, StrainForm, Real,                \
                                       VertexGradient<Real>&);                                                      \
  template Real bend_loss_grad<Real>(const LocalStructure3D<Real>&, Real, VertexGradient<Real>&, int*);             \
  template Real collision_loss_grad<Real>(const LocalStructure3D<Real>&, const ColliderMesh&,                      \
                                          const PhysicsConstants&, Real, VertexGradient<Real>&);                    \
  template Real edge_strain<Real>(const Vec3T<Real>&, const Vec3T<Real>&, Real, StrainForm, Real, Vec3T<Real>&,        \
                                  Vec3T<Real>&);                                                                     \
  template Real normal_difference<Real>(const std::array<Vec3T<Real>, 3>&, const std::array<Vec3T<Real>, 3>&, Real,   \
                                        std::array<Vec3T<Real>, 3>&, std::array<Vec3T<Real>, 3>&, bool*);            \
  template Real vertex_collision<Real>(const Vec3T<Real>&, const ColliderMesh&, const PhysicsConstants&, Real,         \
                                       Vec3T<Real>&);                                                                \
  template LossBreakdown structure_loss<Real>(const SurfaceModel<Real>&, const RestMapping&, const ColliderMesh*,  \
                                              const Vec2&, double, const LossConfig&);

DRAPE_INSTANTIATE_LOSSES(float)
DRAPE_INSTANTIATE_LOSSES(double)

#undef DRAPE_INSTANTIATE_LOSSES

}  // namespace drape
