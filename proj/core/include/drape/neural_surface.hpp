#pragma once

#include "drape/types.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drape {

class RestMapping;

enum class InputEncoding { grid, identity, positional };
enum class Activation { relu, tanh };

std::string to_string(InputEncoding e);
std::string to_string(Activation a);
InputEncoding parse_input_encoding(const std::string& s);
Activation parse_activation(const std::string& s);

struct EncoderConfig {
  InputEncoding kind = InputEncoding::grid;
  /// Node count per side for each grid layer, densest first.
  std::vector<int> layer_resolutions{101, 51};
  int feature_dim = 3;
  /// Frequency bands for the positional baseline; ignored otherwise.
  int num_frequencies = 4;

  int output_dim() const;

  /// Layers N_max, floor(N_max/2), ..., floor(N_max/2^(L-1)); requires
  /// L <= floor(log2 N_max).
  static EncoderConfig halving(int max_resolution, int layers, int feature_dim);
};

struct MlpConfig {
  std::vector<int> dims{6, 64, 64, 64, 3};
  Activation activation = Activation::relu;
};

struct ModelConfig {
  EncoderConfig encoder;
  MlpConfig mlp;

  /// Throws InconsistentDims.
  void validate() const;
};

/// Sum of grid node features and dense layer weights/biases.
std::size_t param_count(const EncoderConfig& encoder, const std::vector<int>& mlp_dims);

/// Offsets of every tensor inside the flat parameter vector. The order is
/// also the checkpoint payload order: grid layers (row-major over nodes,
/// feature-minor), then per dense layer its row-major weights followed by
/// its biases.
struct ParameterLayout {
  struct Span {
    std::size_t offset = 0;
    std::size_t size = 0;
  };
  std::vector<Span> grids;
  std::vector<Span> weights;
  std::vector<Span> biases;
  std::size_t total = 0;

  static ParameterLayout build(const ModelConfig& config);
  bool operator==(const ParameterLayout& other) const;
};

template <class Real>
struct GridLayerView {
  int resolution = 0;
  int feature_dim = 0;
  std::span<const Real> features;  // resolution x resolution x feature_dim

  /// Node (ix, iy) sits at u = ix / (R-1), v = iy / (R-1).
  Real node(int ix, int iy, int f) const {
    return features[(static_cast<std::size_t>(iy) * resolution + ix) * feature_dim + f];
  }
};

/// All trainable parameters of the implicit surface in one flat buffer.
template <class Real>
class SurfaceModel {
 public:
  SurfaceModel() = default;
  explicit SurfaceModel(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }
  const ParameterLayout& layout() const noexcept { return layout_; }
  std::uint64_t seed() const noexcept { return seed_; }
  void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }

  std::span<Real> parameters() noexcept { return params_; }
  std::span<const Real> parameters() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  int num_grid_layers() const { return static_cast<int>(layout_.grids.size()); }
  int num_dense_layers() const { return static_cast<int>(layout_.weights.size()); }

  GridLayerView<Real> grid(int layer) const;
  std::span<Real> grid_features(int layer);

  Eigen::Map<RowMajorMatrixX<Real>> weight(int layer);
  Eigen::Map<const RowMajorMatrixX<Real>> weight(int layer) const;
  Eigen::Map<VectorX<Real>> bias(int layer);
  Eigen::Map<const VectorX<Real>> bias(int layer) const;

  template <class Other>
  SurfaceModel<Other> cast() const {
    SurfaceModel<Other> out(config_);
    out.set_seed(seed_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) dst[i] = static_cast<Other>(params_[i]);
    return out;
  }

  bool operator==(const SurfaceModel& other) const {
    return layout_ == other.layout_ && params_ == other.params_;
  }

 private:
  ModelConfig config_;
  ParameterLayout layout_;
  std::vector<Real> params_;
  std::uint64_t seed_ = 0;
};

/// Gradient accumulator with the same flat layout as its model.
template <class Real>
class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(const SurfaceModel<Real>& model)
      : layout_(model.layout()), values_(model.size(), Real(0)) {}

  bool congruent(const SurfaceModel<Real>& model) const { return layout_ == model.layout(); }
  void zero() { std::fill(values_.begin(), values_.end(), Real(0)); }

  std::span<Real> values() noexcept { return values_; }
  std::span<const Real> values() const noexcept { return values_; }
  const ParameterLayout& layout() const noexcept { return layout_; }

  GradientBuffer& operator+=(const GradientBuffer& other);
  bool all_finite() const;

 private:
  ParameterLayout layout_;
  std::vector<Real> values_;
};

/// Grid features ~ U(-1e-4, 1e-4); hidden weights Glorot-uniform; hidden
/// biases zero; the output layer is all zero so the initial deformation
/// vanishes everywhere.
template <class Real>
SurfaceModel<Real> init_model(const ModelConfig& config, std::uint64_t seed);

/// Bilinear blend of the four nodes around p in grid coordinates
/// x = u (R-1), y = v (R-1). Throws OutOfDomain outside [0,1]^2.
template <class Real>
VectorX<Real> bilinear_features(const GridLayerView<Real>& layer, const Vec2& p);

/// (u, v, sin(2^k pi u), cos(2^k pi u), sin(2^k pi v), cos(2^k pi v)) for
/// k = 0..num_frequencies-1.
VectorX<double> positional_encode(const Vec2& p, int num_frequencies);

/// Input vector fed to the first dense layer.
template <class Real>
VectorX<Real> encode(const SurfaceModel<Real>& model, const Vec2& p);

template <class Real>
Vec3T<Real> deform(const SurfaceModel<Real>& model, const Vec2& p);

/// rest_position(p) + deform(p).
template <class Real>
Vec3T<Real> surface_position(const SurfaceModel<Real>& model, const RestMapping& rest, const Vec2& p);

/// Record of one batched forward pass, consumed by backward().
template <class Real>
struct ForwardTape {
  struct GridSample {
    int ix = 0;
    int iy = 0;
    Real tx = 0;
    Real ty = 0;
  };
  std::size_t batch = 0;
  /// activations[0] is the encoded input, activations.back() the output;
  /// each is (layer width) x batch.
  std::vector<MatrixX<Real>> activations;
  /// batch x grid-layer cell lookups (grid encoding only).
  std::vector<GridSample> samples;

  const MatrixX<Real>& output() const { return activations.back(); }
};

template <class Real>
ForwardTape<Real> forward(const SurfaceModel<Real>& model, std::span<const Vec2> points);

/// Accumulates d(loss)/d(theta) into `grad` given d(loss)/d(output) as a
/// 3 x batch matrix. Grid nodes no query touched receive exactly zero.
template <class Real>
void backward(const SurfaceModel<Real>& model, const ForwardTape<Real>& tape,
              const MatrixX<Real>& upstream, GradientBuffer<Real>& grad);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Magic line, format version, text header (shapes, activation, seed,
/// payload size), then little-endian float32 parameters in layout order.
template <class Real>
void save_checkpoint(const SurfaceModel<Real>& model, const std::string& path);

SurfaceModel<float> load_checkpoint(const std::string& path);

}  // namespace drape
