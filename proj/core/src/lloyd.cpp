#include "drape/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace drape {

namespace {

using Polygon = std::vector<Vec2>;

Polygon unit_square() { return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}; }

// Keeps the part of `poly` closer to `site` than to `other`.
void clip_bisector(Polygon& poly, const Vec2& site, const Vec2& other) {
  const Vec2 d = other - site;
  const Vec2 m = 0.5 * (site + other);
  Polygon out;
  out.reserve(poly.size() + 1);
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& a = poly[k];
    const Vec2& b = poly[(k + 1) % poly.size()];
    const double fa = (a - m).dot(d);
    const double fb = (b - m).dot(d);
    if (fa <= 0.0) out.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) out.push_back(a + (fa / (fa - fb)) * (b - a));
  }
  poly = std::move(out);
}

Vec2 polygon_centroid(const Polygon& p, const Vec2& fallback) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Vec2& u = p[k];
    const Vec2& v = p[(k + 1) % p.size()];
    const double c = u.x() * v.y() - v.x() * u.y();
    a += c;
    cx += (u.x() + v.x()) * c;
    cy += (u.y() + v.y()) * c;
  }
  if (std::abs(a) < 1e-300) return fallback;
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

// Sites nudged apart by 1e-9 where they coincide exactly.
std::vector<Vec2> separate_duplicates(std::span<const Vec2> sites) {
  std::vector<Vec2> out(sites.begin(), sites.end());
  std::vector<int> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::tie(out[a].x(), out[a].y(), a) < std::tie(out[b].x(), out[b].y(), b);
  });
  int run = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Vec2& prev = sites[order[k - 1]];
    const Vec2& cur = sites[order[k]];
    run = (prev == cur) ? run + 1 : 0;
    if (run == 0) continue;
    Vec2& p = out[order[k]];
    const double step = 1e-9 * run;
    p.x() += p.x() + step <= 1.0 ? step : -step;
  }
  return out;
}

}  // namespace

std::vector<std::vector<Vec2>> clipped_voronoi_cells(std::span<const Vec2> input) {
  const std::vector<Vec2> sites = separate_duplicates(input);
  const int n = static_cast<int>(sites.size());
  std::vector<Polygon> cells(n);
  if (n == 0) return cells;

  const int g = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  const double h = 1.0 / g;
  auto bucket_of = [&](double x) { return std::clamp(static_cast<int>(std::floor(x * g)), 0, g - 1); };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(g) * g);
  for (int i = 0; i < n; ++i) buckets[bucket_of(sites[i].y()) * g + bucket_of(sites[i].x())].push_back(i);

  for (int i = 0; i < n; ++i) {
    Polygon poly = unit_square();
    const Vec2& s = sites[i];
    const int bx = bucket_of(s.x()), by = bucket_of(s.y());
    for (int r = 0; r < g; ++r) {
      double reach = 0.0;
      for (const Vec2& v : poly) reach = std::max(reach, (v - s).norm());
      // Every site in ring r is at least (r - 1) h away; it cannot clip the
      // cell once that exceeds twice the cell radius.
      if ((r - 1) * h > 2.0 * reach) break;
      for (int y = by - r; y <= by + r; ++y) {
        if (y < 0 || y >= g) continue;
        for (int x = bx - r; x <= bx + r; ++x) {
          if (x < 0 || x >= g) continue;
          if (std::max(std::abs(x - bx), std::abs(y - by)) != r) continue;
          for (int j : buckets[y * g + x])
            if (j != i) clip_bisector(poly, s, sites[j]);
        }
      }
    }
    cells[i] = std::move(poly);
  }
  return cells;
}

std::vector<Vec2> lloyd_relax(std::vector<Vec2> points, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    const auto cells = clipped_voronoi_cells(points);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec2 c = polygon_centroid(cells[i], points[i]);
      points[i] = c.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return points;
}

double cvt_energy(std::span<const Vec2> sites, int grid) {
  if (sites.empty()) return 0.0;
  const double h = 1.0 / grid;
  double energy = 0.0;
  for (int row = 0; row < grid; ++row)
    for (int col = 0; col < grid; ++col) {
      const Vec2 q((col + 0.5) * h, (row + 0.5) * h);
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& s : sites) best = std::min(best, (q - s).squaredNorm());
      energy += best;
    }
  return energy * h * h;
}

}  // namespace drape
