#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drape {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// When > 0, a gradient whose norm exceeds clip_factor times the running
  /// mean of recent (clipped) norms is rescaled down to that bound.
  double clip_factor = 0.0;
  /// Step k uses learning_rate * decay^max(0, k - decay_start).
  double decay = 1.0;
  std::uint64_t decay_start = 0;
};

/// First-order update rule over a flat parameter vector. Adam keeps its
/// moment estimates here so they can be saved with the training state.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerConfig config, std::size_t size);

  template <class Real>
  void step(std::span<Real> params, std::span<const Real> grad);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }
  /// Learning rate the next step will use.
  double current_learning_rate() const noexcept;

  std::vector<double>& first_moment() noexcept { return m_; }
  std::vector<double>& second_moment() noexcept { return v_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }
  void set_steps(std::uint64_t steps) noexcept { steps_ = steps; }

  /// Running mean of gradient norms used by clipping; 0 before the first step.
  double norm_average() const noexcept { return norm_avg_; }
  void set_norm_average(double v) noexcept { norm_avg_ = v; }
  /// Norm of the last gradient before clipping.
  double last_norm() const noexcept { return last_norm_; }

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<double> m_, v_;
  double norm_avg_ = 0.0;
  double last_norm_ = 0.0;
};

}  // namespace drape
