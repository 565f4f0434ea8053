#pragma once

#include "drape/losses.hpp"
#include "drape/objective.hpp"
#include "drape/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace drape {

class ColliderMesh;
class RestMapping;

using Rng = std::mt19937_64;

/// Cell probabilities over UV space, row-major; row i covers
/// v in [i/rows, (i+1)/rows), column j covers u in [j/cols, (j+1)/cols).
struct DiscretePdf {
  int rows = 0;
  int cols = 0;
  std::vector<double> probs;

  static DiscretePdf uniform(int rows, int cols);

  double at(int row, int col) const { return probs[static_cast<std::size_t>(row) * cols + col]; }
  double& at(int row, int col) { return probs[static_cast<std::size_t>(row) * cols + col]; }
  double sum() const;
  /// Scales to unit sum; falls back to uniform when the sum is zero.
  void normalize();
};

/// Which weighted terms feed the cell-loss estimate.
struct LossMask {
  bool strain = true;
  bool bend = true;
  bool gravity = true;
  bool collision = true;

  double apply(const LossBreakdown& b, const LossWeights& w) const;
};

struct SamplerConfig {
  double mu = 0.5;
  double gamma = 0.5;
  int pdf_rows = 64;
  int pdf_cols = 64;
  int n_points = 1024;
  int lloyd_iterations = 3;
  double min_spacing = 1e-3;
  LossMask mask;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

/// Weighted loss of a structure at every cell center (random theta per
/// cell drawn from `rng`), clamped at zero, invalid cells zero, normalized.
/// Returns the uniform PDF if every cell scores zero.
template <class Real>
DiscretePdf estimate_cell_losses(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                                 int rows, int cols, const LossConfig& config, const LossMask& mask, Rng& rng,
                                 const BatchOptions& options = {});

/// gamma * pdf + (1 - gamma) * estimate, renormalized. Throws ShapeMismatch.
DiscretePdf update_pdf(const DiscretePdf& pdf, const DiscretePdf& estimate, double gamma);

/// Inverse transform sampling: row from the marginal CDF on u, column from
/// the row-conditional CDF on v. Rows and columns of zero probability are
/// never returned.
Cell sample_cell(const DiscretePdf& pdf, double u, double v);

/// Uniform point inside the cell rectangle.
Vec2 sample_point_in_cell(const Cell& cell, int rows, int cols, Rng& rng);

Vec2 draw_adaptive(const DiscretePdf& pdf, Rng& rng);
Vec2 draw_uniform(Rng& rng);

/// floor(mu N) adaptive draws followed by the uniform remainder.
std::vector<Vec2> sample_batch(const DiscretePdf& pdf, const SamplerConfig& config, Rng& rng);

/// Moves each point to the area centroid of its Voronoi cell clipped to
/// the unit square, `iterations` times.
std::vector<Vec2> lloyd_relax(std::vector<Vec2> points, int iterations);

/// Voronoi cells of `sites` clipped to [0,1]^2 as counter-clockwise
/// polygons, one per site.
std::vector<std::vector<Vec2>> clipped_voronoi_cells(std::span<const Vec2> sites);

/// Sum over pixels of a grid x grid quadrature of the squared distance to
/// the nearest site, times pixel area.
double cvt_energy(std::span<const Vec2> sites, int grid = 256);

struct SpacingReport {
  double min_distance = 0.0;
  int violations = 0;  // pairs closer than delta
};

SpacingReport min_spacing_report(std::span<const Vec2> points, double delta);

}  // namespace drape
