#include "drape/optimizer.hpp"

#include "drape/error.hpp"

#include <cmath>

namespace drape {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw Error(ErrorCode::ParseError, "unknown optimizer '" + s + "'");
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t size) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw Error(ErrorCode::ConfigError, "learning rate must be > 0");
  if (!(config_.clip_factor >= 0.0)) throw Error(ErrorCode::ConfigError, "clip factor must be >= 0");
  if (!(config_.decay > 0.0 && config_.decay <= 1.0))
    throw Error(ErrorCode::ConfigError, "learning rate decay must be in (0, 1]");
  if (config_.kind == OptimizerKind::adam) {
    m_.assign(size, 0.0);
    v_.assign(size, 0.0);
  }
}

double Optimizer::current_learning_rate() const noexcept {
  const std::uint64_t k = steps_ + 1;
  if (config_.decay == 1.0 || k <= config_.decay_start) return config_.learning_rate;
  return config_.learning_rate * std::pow(config_.decay, static_cast<double>(k - config_.decay_start));
}

template <class Real>
void Optimizer::step(std::span<Real> params, std::span<const Real> grad) {
  if (params.size() != grad.size()) throw Error(ErrorCode::ShapeMismatch, "gradient size differs from parameters");
  const double lr = current_learning_rate();
  ++steps_;
  double norm2 = 0.0;
  for (Real g : grad) norm2 += static_cast<double>(g) * g;
  last_norm_ = std::sqrt(norm2);
  double scale = 1.0;
  if (config_.clip_factor > 0.0) {
    if (norm_avg_ > 0.0 && last_norm_ > config_.clip_factor * norm_avg_)
      scale = config_.clip_factor * norm_avg_ / last_norm_;
    const double kept = scale * last_norm_;
    norm_avg_ = norm_avg_ > 0.0 ? 0.9 * norm_avg_ + 0.1 * kept : kept;
  }
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= static_cast<Real>(lr * scale * grad[i]);
    return;
  }
  if (m_.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match parameters");
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = scale * grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    params[i] -= static_cast<Real>(lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon));
  }
}

template void Optimizer::step<float>(std::span<float>, std::span<const float>);
template void Optimizer::step<double>(std::span<double>, std::span<const double>);

}  // namespace drape
