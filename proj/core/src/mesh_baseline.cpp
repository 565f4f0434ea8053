#include "drape/mesh_baseline.hpp"

#include "drape/collider.hpp"
#include "drape/error.hpp"

#include <cmath>
#include <map>

namespace drape {

MeshTopology MeshTopology::build(const GarmentRestMesh& mesh) {
  MeshTopology t;
  t.vertex_count = static_cast<int>(mesh.vertices.size());
  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const Triangle& tri = mesh.triangles[f];
    for (int k = 0; k < 3; ++k) {
      const auto key = std::minmax(tri[k], tri[(k + 1) % 3]);
      edge_faces[key].push_back(static_cast<int>(f));
    }
  }
  for (const auto& [edge, faces] : edge_faces) {
    t.edges.push_back({edge.first, edge.second});
    const double len = (mesh.vertices[edge.first] - mesh.vertices[edge.second]).norm();
    if (!(len > 0.0)) throw Error(ErrorCode::ZeroRestLength, "mesh edge has zero rest length");
    t.rest_lengths.push_back(len);
    if (faces.size() == 2) t.face_pairs.push_back({faces[0], faces[1]});
  }
  return t;
}

template <class Real>
LossBreakdown mesh_losses(std::span<const Vec3T<Real>> x, const std::vector<Triangle>& triangles,
                          const MeshTopology& topology, const ColliderMesh* collider, const LossConfig& config,
                          std::vector<Vec3T<Real>>* grad) {
  if (static_cast<int>(x.size()) != topology.vertex_count)
    throw Error(ErrorCode::ShapeMismatch, "position count differs from the mesh vertex count");
  const LossWeights& w = config.weights;
  const Real inv = Real(1) / static_cast<Real>(x.size());
  const bool want = grad != nullptr;
  std::vector<Vec3T<Real>> sink;
  std::vector<Vec3T<Real>>& g = want ? *grad : sink;
  g.assign(x.size(), Vec3T<Real>::Zero());

  LossBreakdown out;
  const Real ss = want ? inv * static_cast<Real>(w.strain) : Real(0);
  for (std::size_t e = 0; e < topology.edges.size(); ++e) {
    const auto [a, b] = topology.edges[e];
    out.strain += edge_strain(x[a], x[b], static_cast<Real>(topology.rest_lengths[e]), config.strain_form, ss, g[a], g[b]);
  }
  const Real sb = want ? inv * static_cast<Real>(w.bend) : Real(0);
  for (const auto& [fa, fb] : topology.face_pairs) {
    const Triangle& ta = triangles[fa];
    const Triangle& tb = triangles[fb];
    const std::array<Vec3T<Real>, 3> f1{x[ta[0]], x[ta[1]], x[ta[2]]};
    const std::array<Vec3T<Real>, 3> f2{x[tb[0]], x[tb[1]], x[tb[2]]};
    std::array<Vec3T<Real>, 3> g1, g2;
    for (int k = 0; k < 3; ++k) {
      g1[k].setZero();
      g2[k].setZero();
    }
    out.bend += normal_difference(f1, f2, sb, g1, g2);
    if (want)
      for (int k = 0; k < 3; ++k) {
        g[ta[k]] += g1[k];
        g[tb[k]] += g2[k];
      }
  }
  const Vec3T<Real> gravity_grad =
      (inv * static_cast<Real>(w.gravity * config.consts.mass * config.consts.gravity)) *
      config.consts.gravity_axis.cast<Real>();
  const Real sc = want ? inv * static_cast<Real>(w.collision) : Real(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.gravity += gravity_loss<Real>(x[i], config.consts);
    if (want) g[i] += gravity_grad;
    if (collider) out.collision += vertex_collision(x[i], *collider, config.consts, sc, g[i]);
  }
  out *= static_cast<double>(inv);
  out.recombine(w);
  return out;
}

VertexBaseline::VertexBaseline(const GarmentRestMesh& mesh, OptimizerConfig optimizer)
    : triangles_(mesh.triangles),
      topology_(MeshTopology::build(mesh)),
      positions_(mesh.vertices),
      optimizer_(optimizer, 3 * mesh.vertices.size()) {}

LossBreakdown VertexBaseline::step(const ColliderMesh* collider, const LossConfig& config, double* gradient_norm) {
  std::vector<Vec3> grad;
  const LossBreakdown loss = mesh_losses<double>(positions_, triangles_, topology_, collider, config, &grad);
  std::span<double> params(positions_.front().data(), 3 * positions_.size());
  std::span<const double> g(grad.front().data(), 3 * grad.size());
  if (gradient_norm) {
    double s = 0.0;
    for (double v : g) s += v * v;
    *gradient_norm = std::sqrt(s);
  }
  optimizer_.step(params, g);
  return loss;
}

template <class Real>
LossBreakdown neural_mesh_objective(const SurfaceModel<Real>& model, const GarmentRestMesh& mesh,
                                    const MeshTopology& topology, const ColliderMesh* collider,
                                    const LossConfig& config, GradientBuffer<Real>* grad) {
  const ForwardTape<Real> tape = forward(model, std::span<const Vec2>(mesh.uvs));
  std::vector<Vec3T<Real>> x(mesh.vertices.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = mesh.vertices[i].cast<Real>() + tape.output().col(i);
  std::vector<Vec3T<Real>> gx;
  const LossBreakdown loss =
      mesh_losses<Real>(x, mesh.triangles, topology, collider, config, grad ? &gx : nullptr);
  if (grad) {
    MatrixX<Real> upstream(3, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) upstream.col(i) = gx[i];
    backward(model, tape, upstream, *grad);
  }
  return loss;
}

MeshBaselineResult mesh_connectivity_baseline(const GarmentRestMesh& mesh, const ColliderMesh* collider,
                                              const MeshBaselineConfig& config) {
  MeshBaselineResult r;
  VertexBaseline vertex(mesh, config.optimizer);
  r.vertex_free_variables = vertex.free_variables();
  for (int e = 0; e < config.epochs; ++e) r.vertex_history.push_back(vertex.step(collider, config.loss));
  r.vertex_positions = vertex.positions();

  const MeshTopology topology = MeshTopology::build(mesh);
  r.model = init_model<float>(config.model, config.seed);
  r.model_parameters = r.model.size();
  Optimizer opt(config.optimizer, r.model.size());
  GradientBuffer<float> grad(r.model);
  for (int e = 0; e < config.epochs; ++e) {
    grad.zero();
    r.model_history.push_back(neural_mesh_objective(r.model, mesh, topology, collider, config.loss, &grad));
    if (!grad.all_finite()) throw Error(ErrorCode::NonFiniteLoss, "mesh baseline gradient is not finite");
    opt.step<float>(r.model.parameters(), grad.values());
  }
  return r;
}

template LossBreakdown mesh_losses<float>(std::span<const Vec3T<float>>, const std::vector<Triangle>&,
                                          const MeshTopology&, const ColliderMesh*, const LossConfig&,
                                          std::vector<Vec3T<float>>*);
template LossBreakdown mesh_losses<double>(std::span<const Vec3T<double>>, const std::vector<Triangle>&,
                                           const MeshTopology&, const ColliderMesh*, const LossConfig&,
                                           std::vector<Vec3T<double>>*);
template LossBreakdown neural_mesh_objective<float>(const SurfaceModel<float>&, const GarmentRestMesh&,
                                                    const MeshTopology&, const ColliderMesh*, const LossConfig&,
                                                    GradientBuffer<float>*);
template LossBreakdown neural_mesh_objective<double>(const SurfaceModel<double>&, const GarmentRestMesh&,
                                                     const MeshTopology&, const ColliderMesh*, const LossConfig&,
                                                     GradientBuffer<double>*);

}  // namespace drape
