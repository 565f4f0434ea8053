#include "drape/neural_surface.hpp"

#include "drape/error.hpp"
#include "drape/rest_atlas.hpp"

#include <cmath>
#include <random>

namespace drape {

std::string to_string(InputEncoding e) {
  switch (e) {
    case InputEncoding::grid: return "grid";
    case InputEncoding::identity: return "identity";
    case InputEncoding::positional: return "positional";
  }
  return "grid";
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

InputEncoding parse_input_encoding(const std::string& s) {
  if (s == "grid") return InputEncoding::grid;
  if (s == "identity") return InputEncoding::identity;
  if (s == "positional") return InputEncoding::positional;
  throw Error(ErrorCode::ParseError, "unknown input encoding '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw Error(ErrorCode::ParseError, "unknown activation '" + s + "'");
}

int EncoderConfig::output_dim() const {
  switch (kind) {
    case InputEncoding::grid: return static_cast<int>(layer_resolutions.size()) * feature_dim;
    case InputEncoding::identity: return 2;
    case InputEncoding::positional: return 2 + 4 * num_frequencies;
  }
  return 0;
}

EncoderConfig EncoderConfig::halving(int max_resolution, int layers, int feature_dim) {
  if (layers < 1 || max_resolution < 2 || layers > static_cast<int>(std::floor(std::log2(max_resolution))))
    throw Error(ErrorCode::InconsistentDims, "need 1 <= L <= floor(log2 N_max)");
  EncoderConfig enc;
  enc.feature_dim = feature_dim;
  enc.layer_resolutions.clear();
  for (int l = 0; l < layers; ++l) enc.layer_resolutions.push_back(max_resolution >> l);
  return enc;
}

void ModelConfig::validate() const {
  const auto& dims = mlp.dims;
  if (dims.size() < 2) throw Error(ErrorCode::InconsistentDims, "MLP needs at least one layer");
  for (int d : dims)
    if (d < 1) throw Error(ErrorCode::InconsistentDims, "MLP widths must be positive");
  if (dims.back() != 3) throw Error(ErrorCode::InconsistentDims, "MLP output must be 3-dimensional");
  if (encoder.kind == InputEncoding::grid) {
    if (encoder.layer_resolutions.empty())
      throw Error(ErrorCode::InconsistentDims, "grid encoding needs at least one layer");
    if (encoder.feature_dim < 1) throw Error(ErrorCode::InconsistentDims, "feature_dim must be >= 1");
    for (std::size_t l = 0; l < encoder.layer_resolutions.size(); ++l) {
      if (encoder.layer_resolutions[l] < 2)
        throw Error(ErrorCode::InconsistentDims, "grid resolution must be >= 2");
      if (l > 0 && encoder.layer_resolutions[l] >= encoder.layer_resolutions[l - 1])
        throw Error(ErrorCode::InconsistentDims, "grid resolutions must strictly decrease");
    }
  }
  if (encoder.kind == InputEncoding::positional && encoder.num_frequencies < 0)
    throw Error(ErrorCode::InconsistentDims, "num_frequencies must be >= 0");
  if (dims.front() != encoder.output_dim())
    throw Error(ErrorCode::InconsistentDims,
                "MLP input width " + std::to_string(dims.front()) + " != encoder output " +
                    std::to_string(encoder.output_dim()));
}

std::size_t param_count(const EncoderConfig& encoder, const std::vector<int>& mlp_dims) {
  std::size_t total = 0;
  if (encoder.kind == InputEncoding::grid)
    for (int r : encoder.layer_resolutions)
      total += static_cast<std::size_t>(r) * r * encoder.feature_dim;
  for (std::size_t k = 0; k + 1 < mlp_dims.size(); ++k)
    total += static_cast<std::size_t>(mlp_dims[k]) * mlp_dims[k + 1] + mlp_dims[k + 1];
  return total;
}

ParameterLayout ParameterLayout::build(const ModelConfig& config) {
  ParameterLayout layout;
  std::size_t offset = 0;
  if (config.encoder.kind == InputEncoding::grid) {
    for (int r : config.encoder.layer_resolutions) {
      const std::size_t n = static_cast<std::size_t>(r) * r * config.encoder.feature_dim;
      layout.grids.push_back({offset, n});
      offset += n;
    }
  }
  const auto& dims = config.mlp.dims;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t nw = static_cast<std::size_t>(dims[k]) * dims[k + 1];
    layout.weights.push_back({offset, nw});
    offset += nw;
    layout.biases.push_back({offset, static_cast<std::size_t>(dims[k + 1])});
    offset += dims[k + 1];
  }
  layout.total = offset;
  return layout;
}

bool ParameterLayout::operator==(const ParameterLayout& other) const {
  auto same = [](const std::vector<Span>& a, const std::vector<Span>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].offset != b[i].offset || a[i].size != b[i].size) return false;
    return true;
  };
  return total == other.total && same(grids, other.grids) && same(weights, other.weights) &&
         same(biases, other.biases);
}

template <class Real>
SurfaceModel<Real>::SurfaceModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  layout_ = ParameterLayout::build(config_);
  params_.assign(layout_.total, Real(0));
}

template <class Real>
GridLayerView<Real> SurfaceModel<Real>::grid(int layer) const {
  const auto& span = layout_.grids.at(layer);
  return {config_.encoder.layer_resolutions[layer], config_.encoder.feature_dim,
          std::span<const Real>(params_.data() + span.offset, span.size)};
}

template <class Real>
std::span<Real> SurfaceModel<Real>::grid_features(int layer) {
  const auto& span = layout_.grids.at(layer);
  return {params_.data() + span.offset, span.size};
}

template <class Real>
Eigen::Map<RowMajorMatrixX<Real>> SurfaceModel<Real>::weight(int layer) {
  const auto& dims = config_.mlp.dims;
  return {params_.data() + layout_.weights.at(layer).offset, dims[layer + 1], dims[layer]};
}

template <class Real>
Eigen::Map<const RowMajorMatrixX<Real>> SurfaceModel<Real>::weight(int layer) const {
  const auto& dims = config_.mlp.dims;
  return {params_.data() + layout_.weights.at(layer).offset, dims[layer + 1], dims[layer]};
}

template <class Real>
Eigen::Map<VectorX<Real>> SurfaceModel<Real>::bias(int layer) {
  return {params_.data() + layout_.biases.at(layer).offset, config_.mlp.dims[layer + 1]};
}

template <class Real>
Eigen::Map<const VectorX<Real>> SurfaceModel<Real>::bias(int layer) const {
  return {params_.data() + layout_.biases.at(layer).offset, config_.mlp.dims[layer + 1]};
}

template <class Real>
GradientBuffer<Real>& GradientBuffer<Real>::operator+=(const GradientBuffer& other) {
  if (!(layout_ == other.layout_)) throw Error(ErrorCode::ShapeMismatch, "gradient layouts differ");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

template <class Real>
bool GradientBuffer<Real>::all_finite() const {
  for (Real v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

template <class Real>
SurfaceModel<Real> init_model(const ModelConfig& config, std::uint64_t seed) {
  SurfaceModel<Real> model(config);
  model.set_seed(seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> grid_dist(-1e-4, 1e-4);
  for (int l = 0; l < model.num_grid_layers(); ++l)
    for (Real& f : model.grid_features(l)) f = static_cast<Real>(grid_dist(rng));

  const auto& dims = config.mlp.dims;
  const int last = model.num_dense_layers() - 1;
  for (int k = 0; k < last; ++k) {
    const double limit = std::sqrt(6.0 / (dims[k] + dims[k + 1]));
    std::uniform_real_distribution<double> w_dist(-limit, limit);
    auto w = model.weight(k);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Real>(w_dist(rng));
  }
  return model;
}

namespace {

struct CellLookup {
  int ix, iy;
  double tx, ty;
};

CellLookup locate_cell(int resolution, const Vec2& p) {
  constexpr double tol = 1e-12;
  if (!(p.x() >= -tol && p.x() <= 1.0 + tol && p.y() >= -tol && p.y() <= 1.0 + tol))
    throw Error(ErrorCode::OutOfDomain, "UV point outside [0,1]^2");
  const double x = std::clamp(p.x(), 0.0, 1.0) * (resolution - 1);
  const double y = std::clamp(p.y(), 0.0, 1.0) * (resolution - 1);
  // Clamping the lower node to R-2 makes u = 1 land on the upper node with
  // weight one.
  const int ix = std::min(static_cast<int>(std::floor(x)), resolution - 2);
  const int iy = std::min(static_cast<int>(std::floor(y)), resolution - 2);
  return {ix, iy, x - ix, y - iy};
}

void check_domain(const Vec2& p) {
  constexpr double tol = 1e-12;
  if (!(p.x() >= -tol && p.x() <= 1.0 + tol && p.y() >= -tol && p.y() <= 1.0 + tol))
    throw Error(ErrorCode::OutOfDomain, "UV point outside [0,1]^2");
}

}  // namespace

template <class Real>
VectorX<Real> bilinear_features(const GridLayerView<Real>& layer, const Vec2& p) {
  const CellLookup c = locate_cell(layer.resolution, p);
  const Real tx = static_cast<Real>(c.tx), ty = static_cast<Real>(c.ty);
  VectorX<Real> out(layer.feature_dim);
  for (int f = 0; f < layer.feature_dim; ++f) {
    out[f] = (1 - tx) * (1 - ty) * layer.node(c.ix, c.iy, f) + tx * (1 - ty) * layer.node(c.ix + 1, c.iy, f) +
             (1 - tx) * ty * layer.node(c.ix, c.iy + 1, f) + tx * ty * layer.node(c.ix + 1, c.iy + 1, f);
  }
  return out;
}

VectorX<double> positional_encode(const Vec2& p, int num_frequencies) {
  VectorX<double> out(2 + 4 * std::max(0, num_frequencies));
  out[0] = p.x();
  out[1] = p.y();
  for (int k = 0; k < num_frequencies; ++k) {
    const double w = std::ldexp(kPi, k);
    out[2 + 4 * k + 0] = std::sin(w * p.x());
    out[2 + 4 * k + 1] = std::cos(w * p.x());
    out[2 + 4 * k + 2] = std::sin(w * p.y());
    out[2 + 4 * k + 3] = std::cos(w * p.y());
  }
  return out;
}

template <class Real>
ForwardTape<Real> forward(const SurfaceModel<Real>& model, std::span<const Vec2> points) {
  const auto& config = model.config();
  const std::size_t batch = points.size();
  const int layers = model.num_grid_layers();
  const int in_dim = config.encoder.output_dim();

  ForwardTape<Real> tape;
  tape.batch = batch;
  tape.activations.reserve(model.num_dense_layers() + 1);
  MatrixX<Real> input(in_dim, static_cast<Eigen::Index>(batch));

  switch (config.encoder.kind) {
    case InputEncoding::grid: {
      tape.samples.resize(batch * layers);
      const int fdim = config.encoder.feature_dim;
      for (int l = 0; l < layers; ++l) {
        const auto grid = model.grid(l);
        for (std::size_t b = 0; b < batch; ++b) {
          const CellLookup c = locate_cell(grid.resolution, points[b]);
          auto& s = tape.samples[b * layers + l];
          s = {c.ix, c.iy, static_cast<Real>(c.tx), static_cast<Real>(c.ty)};
          const Real w00 = (1 - s.tx) * (1 - s.ty), w10 = s.tx * (1 - s.ty);
          const Real w01 = (1 - s.tx) * s.ty, w11 = s.tx * s.ty;
          const std::size_t r = static_cast<std::size_t>(grid.resolution);
          const Real* f00 = grid.features.data() + (s.iy * r + s.ix) * fdim;
          const Real* f10 = f00 + fdim;
          const Real* f01 = f00 + r * fdim;
          const Real* f11 = f01 + fdim;
          for (int f = 0; f < fdim; ++f)
            input(l * fdim + f, static_cast<Eigen::Index>(b)) =
                w00 * f00[f] + w10 * f10[f] + w01 * f01[f] + w11 * f11[f];
        }
      }
      break;
    }
    case InputEncoding::identity:
      for (std::size_t b = 0; b < batch; ++b) {
        check_domain(points[b]);
        input(0, static_cast<Eigen::Index>(b)) = static_cast<Real>(points[b].x());
        input(1, static_cast<Eigen::Index>(b)) = static_cast<Real>(points[b].y());
      }
      break;
    case InputEncoding::positional:
      for (std::size_t b = 0; b < batch; ++b) {
        check_domain(points[b]);
        input.col(static_cast<Eigen::Index>(b)) =
            positional_encode(points[b], config.encoder.num_frequencies).template cast<Real>();
      }
      break;
  }
  tape.activations.push_back(std::move(input));

  const int dense = model.num_dense_layers();
  for (int k = 0; k < dense; ++k) {
    MatrixX<Real> z = model.weight(k) * tape.activations.back();
    z.colwise() += model.bias(k);
    if (k + 1 < dense) {
      if (config.mlp.activation == Activation::relu)
        z = z.cwiseMax(Real(0));
      else
        z = z.array().tanh().matrix();
    }
    tape.activations.push_back(std::move(z));
  }
  return tape;
}

template <class Real>
void backward(const SurfaceModel<Real>& model, const ForwardTape<Real>& tape, const MatrixX<Real>& upstream,
              GradientBuffer<Real>& grad) {
  if (!grad.congruent(model)) throw Error(ErrorCode::ShapeMismatch, "gradient buffer does not match model");
  if (upstream.rows() != 3 || upstream.cols() != static_cast<Eigen::Index>(tape.batch))
    throw Error(ErrorCode::ShapeMismatch, "upstream must be 3 x batch");
  if (tape.batch == 0) return;

  const auto& config = model.config();
  const auto& layout = model.layout();
  const auto& dims = config.mlp.dims;
  Real* g = grad.values().data();
  const int dense = model.num_dense_layers();

  MatrixX<Real> delta = upstream;
  for (int k = dense - 1; k >= 0; --k) {
    const MatrixX<Real>& in = tape.activations[k];
    Eigen::Map<RowMajorMatrixX<Real>> gw(g + layout.weights[k].offset, dims[k + 1], dims[k]);
    Eigen::Map<VectorX<Real>> gb(g + layout.biases[k].offset, dims[k + 1]);
    gw.noalias() += delta * in.transpose();
    gb.noalias() += delta.rowwise().sum();
    if (k == 0 && config.encoder.kind != InputEncoding::grid) break;
    MatrixX<Real> next = model.weight(k).transpose() * delta;
    if (k > 0) {
      if (config.mlp.activation == Activation::relu)
        next = next.cwiseProduct((in.array() > Real(0)).template cast<Real>().matrix());
      else
        next = next.cwiseProduct((Real(1) - in.array().square()).matrix());
    }
    delta = std::move(next);
  }

  if (config.encoder.kind != InputEncoding::grid) return;
  // delta now holds d(loss)/d(encoded input); scatter into the grid nodes.
  const int layers = model.num_grid_layers();
  const int fdim = config.encoder.feature_dim;
  for (int l = 0; l < layers; ++l) {
    const std::size_t r = static_cast<std::size_t>(config.encoder.layer_resolutions[l]);
    Real* gg = g + layout.grids[l].offset;
    for (std::size_t b = 0; b < tape.batch; ++b) {
      const auto& s = tape.samples[b * layers + l];
      const Real w00 = (1 - s.tx) * (1 - s.ty), w10 = s.tx * (1 - s.ty);
      const Real w01 = (1 - s.tx) * s.ty, w11 = s.tx * s.ty;
      Real* n00 = gg + (s.iy * r + s.ix) * fdim;
      Real* n10 = n00 + fdim;
      Real* n01 = n00 + r * fdim;
      Real* n11 = n01 + fdim;
      for (int f = 0; f < fdim; ++f) {
        const Real d = delta(l * fdim + f, static_cast<Eigen::Index>(b));
        n00[f] += w00 * d;
        n10[f] += w10 * d;
        n01[f] += w01 * d;
        n11[f] += w11 * d;
      }
    }
  }
}

template <class Real>
VectorX<Real> encode(const SurfaceModel<Real>& model, const Vec2& p) {
  const Vec2 pts[1] = {p};
  auto tape = forward(model, std::span<const Vec2>(pts));
  return tape.activations.front().col(0);
}

template <class Real>
Vec3T<Real> deform(const SurfaceModel<Real>& model, const Vec2& p) {
  const Vec2 pts[1] = {p};
  auto tape = forward(model, std::span<const Vec2>(pts));
  return tape.output().col(0);
}

template <class Real>
Vec3T<Real> surface_position(const SurfaceModel<Real>& model, const RestMapping& rest, const Vec2& p) {
  const Vec3 base = rest.rest_position(p);
  return base.cast<Real>() + deform(model, p);
}

#define DRAPE_INSTANTIATE(Real)                                                                    \
  template class SurfaceModel<Real>;                                                               \
  template class GradientBuffer<Real>;                                                             \
  template SurfaceModel<Real> init_model<Real>(const ModelConfig&, std::uint64_t);                 \
  template VectorX<Real> bilinear_features<Real>(const GridLayerView<Real>&, const Vec2&);         \
  template VectorX<Real> encode<Real>(const SurfaceModel<Real>&, const Vec2&);                     \
  template Vec3T<Real> deform<Real>(const SurfaceModel<Real>&, const Vec2&);                       \
  template Vec3T<Real> surface_position<Real>(const SurfaceModel<Real>&, const RestMapping&,       \
                                              const Vec2&);                                        \
  template ForwardTape<Real> forward<Real>(const SurfaceModel<Real>&, std::span<const Vec2>);      \
  template void backward<Real>(const SurfaceModel<Real>&, const ForwardTape<Real>&,                \
                               const MatrixX<Real>&, GradientBuffer<Real>&);

DRAPE_INSTANTIATE(float)
DRAPE_INSTANTIATE(double)

#undef DRAPE_INSTANTIATE

}  // namespace drape
