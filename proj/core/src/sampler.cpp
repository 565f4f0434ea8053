#include "drape/sampler.hpp"

#include "drape/error.hpp"
#include "drape/local_structure.hpp"
#include "drape/rest_atlas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace drape {

DiscretePdf DiscretePdf::uniform(int rows, int cols) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::ShapeMismatch, "pdf needs at least one cell");
  DiscretePdf pdf;
  pdf.rows = rows;
  pdf.cols = cols;
  pdf.probs.assign(static_cast<std::size_t>(rows) * cols, 1.0 / (static_cast<double>(rows) * cols));
  return pdf;
}

double DiscretePdf::sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

void DiscretePdf::normalize() {
  const double s = sum();
  if (!(s > 0.0) || !std::isfinite(s)) {
    *this = uniform(rows, cols);
    return;
  }
  for (double& p : probs) p /= s;
}

double LossMask::apply(const LossBreakdown& b, const LossWeights& w) const {
  double total = 0.0;
  if (strain) total += w.strain * b.strain;
  if (bend) total += w.bend * b.bend;
  if (gravity) total += w.gravity * b.gravity;
  if (collision) total += w.collision * b.collision;
  return total;
}

void SamplerConfig::validate() const {
  if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorCode::ConfigError, "sampler.mu must lie in [0,1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::ConfigError, "sampler.gamma must lie in [0,1]");
  if (pdf_rows < 1 || pdf_cols < 1) throw Error(ErrorCode::ConfigError, "sampler pdf dimensions must be >= 1");
  if (n_points < 1) throw Error(ErrorCode::ConfigError, "sampler.n_points must be >= 1");
  if (lloyd_iterations < 0) throw Error(ErrorCode::ConfigError, "sampler.lloyd_iterations must be >= 0");
  if (!(min_spacing >= 0.0)) throw Error(ErrorCode::ConfigError, "sampler.min_spacing must be >= 0");
}

template <class Real>
DiscretePdf estimate_cell_losses(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                                 int rows, int cols, const LossConfig& config, const LossMask& mask, Rng& rng,
                                 const BatchOptions& options) {
  DiscretePdf out;
  out.rows = rows;
  out.cols = cols;
  out.probs.assign(static_cast<std::size_t>(rows) * cols, 0.0);

  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi / 3.0);
  std::vector<StructureSample> samples;
  std::vector<std::size_t> cells;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const Vec2 c((j + 0.5) / cols, (i + 0.5) / rows);
      const double theta = angle(rng);
      if (!rest.is_valid(c) || !structure_is_valid(rest, build_structure_2d(c, config.side, theta))) continue;
      samples.push_back({c, theta});
      cells.push_back(static_cast<std::size_t>(i) * cols + j);
    }

  std::vector<LossBreakdown> each;
  evaluate_batch<Real>(model, rest, collider, samples, config, options, nullptr, &each);
  for (std::size_t k = 0; k < cells.size(); ++k) out.probs[cells[k]] = std::max(0.0, mask.apply(each[k], config.weights));
  out.normalize();
  return out;
}

DiscretePdf update_pdf(const DiscretePdf& pdf, const DiscretePdf& estimate, double gamma) {
  if (pdf.rows != estimate.rows || pdf.cols != estimate.cols || pdf.probs.size() != estimate.probs.size())
    throw Error(ErrorCode::ShapeMismatch, "pdf and estimate differ in shape");
  DiscretePdf out = pdf;
  for (std::size_t k = 0; k < out.probs.size(); ++k)
    out.probs[k] = gamma * pdf.probs[k] + (1.0 - gamma) * estimate.probs[k];
  out.normalize();
  return out;
}

namespace {

// Smallest index whose cumulative weight reaches target among entries with
// positive weight; round-off past the end picks the last positive entry.
int inverse_cdf(const double* weights, int n, std::ptrdiff_t stride, double target) {
  double cum = 0.0;
  int last_positive = -1;
  for (int k = 0; k < n; ++k) {
    const double w = weights[k * stride];
    if (w <= 0.0) continue;
    cum += w;
    last_positive = k;
    if (cum >= target) return k;
  }
  return last_positive;
}

}  // namespace

Cell sample_cell(const DiscretePdf& pdf, double u, double v) {
  std::vector<double> marginal(pdf.rows, 0.0);
  for (int i = 0; i < pdf.rows; ++i)
    for (int j = 0; j < pdf.cols; ++j) marginal[i] += pdf.at(i, j);
  const double total = std::accumulate(marginal.begin(), marginal.end(), 0.0);
  const int row = inverse_cdf(marginal.data(), pdf.rows, 1, u * total);
  if (row < 0) throw Error(ErrorCode::ShapeMismatch, "pdf has no positive cell");
  const int col = inverse_cdf(&pdf.probs[static_cast<std::size_t>(row) * pdf.cols], pdf.cols, 1, v * marginal[row]);
  return {row, col};
}

Vec2 sample_point_in_cell(const Cell& cell, int rows, int cols, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = unit(rng);
  const double b = unit(rng);
  // Keep the half-open cell bounds under round-off.
  const double u = std::min((cell.col + a) / cols, std::nextafter((cell.col + 1.0) / cols, 0.0));
  const double v = std::min((cell.row + b) / rows, std::nextafter((cell.row + 1.0) / rows, 0.0));
  return {u, v};
}

Vec2 draw_adaptive(const DiscretePdf& pdf, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double v = unit(rng);
  return sample_point_in_cell(sample_cell(pdf, u, v), pdf.rows, pdf.cols, rng);
}

Vec2 draw_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double v = unit(rng);
  return {u, v};
}

std::vector<Vec2> sample_batch(const DiscretePdf& pdf, const SamplerConfig& config, Rng& rng) {
  const int n_adaptive = static_cast<int>(std::floor(config.mu * config.n_points));
  std::vector<Vec2> out;
  out.reserve(config.n_points);
  for (int k = 0; k < n_adaptive; ++k) out.push_back(draw_adaptive(pdf, rng));
  for (int k = n_adaptive; k < config.n_points; ++k) out.push_back(draw_uniform(rng));
  return out;
}

SpacingReport min_spacing_report(std::span<const Vec2> points, double delta) {
  SpacingReport r;
  r.min_distance = std::numeric_limits<double>::infinity();
  const double d2 = delta * delta;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double q = (points[i] - points[j]).squaredNorm();
      r.min_distance = std::min(r.min_distance, q);
      if (q < d2) ++r.violations;
    }
  if (std::isfinite(r.min_distance)) r.min_distance = std::sqrt(r.min_distance);
  return r;
}

template DiscretePdf estimate_cell_losses<float>(const SurfaceModel<float>&, const RestMapping&, const ColliderMesh*,
                                                 int, int, const LossConfig&, const LossMask&, Rng&,
                                                 const BatchOptions&);
template DiscretePdf estimate_cell_losses<double>(const SurfaceModel<double>&, const RestMapping&,
                                                  const ColliderMesh*, int, int, const LossConfig&, const LossMask&,
                                                  Rng&, const BatchOptions&);

}  // namespace drape
