#include "sketchnd/quad.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "sketchnd/error.hpp"

namespace sketchnd {

namespace {

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Proper crossing of segments pq and rs. Collinear triples are rejected
// because the click polygon would be degenerate.
bool segments_cross(const Point2& p, const Point2& q, const Point2& r, const Point2& s) {
  const double o1 = orient(p, q, r);
  const double o2 = orient(p, q, s);
  const double o3 = orient(r, s, p);
  const double o4 = orient(r, s, q);
  if (o1 == 0.0 || o2 == 0.0 || o3 == 0.0 || o4 == 0.0)
    throw ValidationError("quadrilateral clicks are collinear");
  return ((o1 > 0.0) != (o2 > 0.0)) && ((o3 > 0.0) != (o4 > 0.0));
}

double snap_to_ticks(double y, std::size_t axis, const DimensionSpec& dim,
                     std::span<const SnapTick> ticks, double tolerance) {
  std::optional<double> best;
  double best_dist = tolerance;
  for (const auto& tick : ticks) {
    if (tick.axis != axis) continue;
    const double dist = std::abs(dim.normalized(tick.value) - y);
    if (dist <= best_dist) {
      best_dist = dist;
      best = tick.value;
    }
  }
  return best ? *best : dim.at(y);
}

}  // namespace

double window_fraction(double correlation, double min_window) {
  const double c = std::clamp(correlation, 0.0, 1.0);
  return 1.0 - c * (1.0 - min_window);
}

std::array<Point2, 4> Quadrilateral::layout_vertices(std::span<const DimensionSpec> dims) const {
  const auto& l = dims[left_axis];
  const auto& r = dims[right_axis()];
  const double lx = static_cast<double>(left_axis);
  const double rx = lx + 1.0;
  const Point2 lt(lx, l.normalized(left.top));
  const Point2 lb(lx, l.normalized(left.bottom));
  const Point2 rt(rx, r.normalized(right.top));
  const Point2 rb(rx, r.normalized(right.bottom));
  if (kind == QuadKind::trapezoid) return {lt, rt, rb, lb};
  return {lt, rb, rt, lb};
}

Quadrilateral classify_and_snap_quad(const std::array<Point2, 4>& clicks,
                                     std::span<const DimensionSpec> dims,
                                     std::span<const SnapTick> ticks, int cluster,
                                     const QuadConfig& config) {
  const auto n = dims.size();
  if (n < 2) throw ValidationError("quadrilaterals need at least two axes");
  double xmin = clicks[0].x();
  double xmax = clicks[0].x();
  for (const auto& c : clicks) {
    xmin = std::min(xmin, c.x());
    xmax = std::max(xmax, c.x());
  }
  const double last = static_cast<double>(n - 1);
  if (xmin < 0.0 || xmax > last) throw ValidationError("quadrilateral clicks lie outside the axes");
  const auto left_axis = std::min(static_cast<std::size_t>(std::floor(xmin)), n - 2);
  const double lx = static_cast<double>(left_axis);
  if (xmax > lx + 1.0) throw ValidationError("quadrilateral clicks span more than one axis gap");

  const bool crossing = segments_cross(clicks[0], clicks[1], clicks[2], clicks[3]) ||
                        segments_cross(clicks[1], clicks[2], clicks[3], clicks[0]);

  std::vector<double> left_y;
  std::vector<double> right_y;
  for (const auto& c : clicks) (c.x() - lx <= 0.5 ? left_y : right_y).push_back(c.y());
  if (left_y.size() != 2) throw ValidationError("quadrilateral needs two vertices on each axis after snapping");

  auto snapped_range = [&](std::vector<double>& ys, std::size_t axis) {
    std::sort(ys.begin(), ys.end());
    const auto& dim = dims[axis];
    AxisRange range{snap_to_ticks(ys[0], axis, dim, ticks, config.snap_tolerance),
                    snap_to_ticks(ys[1], axis, dim, ticks, config.snap_tolerance)};
    if (range.bottom == range.top)
      throw ValidationError("quadrilateral range on '" + dim.name + "' has zero height");
    return range;
  };

  Quadrilateral quad;
  quad.cluster = cluster;
  quad.left_axis = left_axis;
  quad.kind = crossing ? QuadKind::bowtie : QuadKind::trapezoid;
  quad.left = snapped_range(left_y, left_axis);
  quad.right = snapped_range(right_y, left_axis + 1);
  return quad;
}

std::vector<SnapTick> collect_ticks(const std::map<std::size_t, DiscretePdf>& pdfs,
                                    std::span<const Quadrilateral> quads,
                                    std::span<const DimensionSpec> dims, const QuadConfig& config) {
  std::vector<SnapTick> raw;
  for (const auto& [dim, pdf] : pdfs) {
    if (dim >= dims.size()) continue;
    for (double v : pdf_local_minima(pdf)) raw.push_back({dim, v, TickOrigin::pdf_local_minimum});
  }
  for (const auto& q : quads) {
    if (q.right_axis() >= dims.size()) continue;
    raw.push_back({q.left_axis, q.left.bottom, TickOrigin::quad_vertex});
    raw.push_back({q.left_axis, q.left.top, TickOrigin::quad_vertex});
    raw.push_back({q.right_axis(), q.right.bottom, TickOrigin::quad_vertex});
    raw.push_back({q.right_axis(), q.right.top, TickOrigin::quad_vertex});
  }
  std::vector<SnapTick> out;
  for (const auto& tick : raw) {
    const auto& dim = dims[tick.axis];
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const SnapTick& kept) {
      return kept.axis == tick.axis &&
             std::abs(dim.normalized(kept.value) - dim.normalized(tick.value)) <= config.snap_tolerance;
    });
    if (!duplicate) out.push_back(tick);
  }
  return out;
}

LinkedValue sample_linked_value(double prev, const Quadrilateral& quad, double correlation,
                                const TruncatedSampler& next_dim, Rng& rng, const QuadConfig& config) {
  double t = std::clamp(quad.left.relative(prev), 0.0, 1.0);
  if (!quad.top_connects_top()) t = 1.0 - t;
  const double half = 0.5 * window_fraction(correlation, config.min_window);
  const double lo = std::max(0.0, t - half);
  const double hi = std::min(1.0, t + half);
  for (std::size_t attempt = 0; attempt < config.rejection_budget; ++attempt) {
    const double v = next_dim(rng);
    const double s = quad.right.relative(v);
    if (s >= lo && s <= hi) return {v, false};
  }
  return {quad.right.at(rng.uniform(lo, hi)), true};
}

ClusterSamples generate_cluster_samples(int cluster, std::span<const Quadrilateral> quads,
                                        const std::map<std::size_t, DiscretePdf>& pdfs,
                                        std::span<const DimensionSpec> dims, double correlation,
                                        std::size_t n, Rng& rng, const QuadConfig& config) {
  const std::size_t nd = dims.size();
  ClusterSamples result;
  result.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nd));
  if (nd == 0) return result;

  std::vector<std::vector<const Quadrilateral*>> by_pair(nd);
  for (const auto& q : quads) {
    if (q.cluster != cluster) continue;
    if (q.right_axis() >= nd) throw ValidationError("quadrilateral refers to a missing axis");
    by_pair[q.left_axis].push_back(&q);
  }

  std::vector<DiscreteCdf> base;
  base.reserve(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    auto it = pdfs.find(d);
    base.push_back(it != pdfs.end() ? pdf_to_cdf(it->second) : uniform_cdf(dims[d]));
  }

  auto incoming = [&](std::size_t d) { return d > 0 && !by_pair[d - 1].empty(); };
  auto outgoing = [&](std::size_t d) { return !by_pair[d].empty(); };
  auto fail = [&](std::size_t d, const std::string& why) {
    throw ValidationError("contradictory constraints on axis '" + dims[d].name + "': " + why);
  };

  std::vector<TruncatedSampler> free_sampler;
  std::map<const Quadrilateral*, TruncatedSampler> right_sampler;
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<ValueRange> left_ranges;
    for (const auto* q : by_pair[d]) left_ranges.push_back(q->left.as_value_range());
    free_sampler.emplace_back(base[d], left_ranges);
    if (outgoing(d) && !incoming(d) && !(free_sampler.back().mass() > 0.0))
      fail(d, "no density inside the quadrilateral ranges");
    if (incoming(d)) {
      for (const auto* q : by_pair[d - 1]) {
        const ValueRange r = q->right.as_value_range();
        TruncatedSampler s(base[d], std::span(&r, 1));
        if (!(s.mass() > 0.0)) fail(d, "no density inside a quadrilateral's right range");
        right_sampler.emplace(q, std::move(s));
      }
      if (outgoing(d)) {
        const bool meets = std::any_of(by_pair[d - 1].begin(), by_pair[d - 1].end(), [&](const auto* in) {
          return std::any_of(by_pair[d].begin(), by_pair[d].end(), [&](const auto* out) {
            return in->right.as_value_range().lo() <= out->left.as_value_range().hi() &&
                   out->left.as_value_range().lo() <= in->right.as_value_range().hi();
          });
        });
        if (!meets) fail(d, "incoming and outgoing quadrilateral ranges do not intersect");
      }
    }
  }

  std::vector<const Quadrilateral*> containing;
  for (Eigen::Index row = 0; row < result.points.rows(); ++row) {
    bool ok = false;
    std::size_t stuck_at = 0;
    for (std::size_t attempt = 0; attempt < config.rejection_budget && !ok; ++attempt) {
      ok = true;
      const Quadrilateral* chosen = nullptr;
      for (std::size_t d = 0; d < nd; ++d) {
        double v = 0.0;
        if (incoming(d)) {
          const auto linked = sample_linked_value(result.points(row, static_cast<Eigen::Index>(d - 1)), *chosen,
                                                  correlation, right_sampler.at(chosen), rng, config);
          result.fallbacks += linked.fallback ? 1 : 0;
          v = linked.value;
        } else {
          v = free_sampler[d](rng);
        }
        result.points(row, static_cast<Eigen::Index>(d)) = v;
        if (outgoing(d)) {
          containing.clear();
          for (const auto* q : by_pair[d])
            if (q->left.contains(v)) containing.push_back(q);
          if (containing.empty()) {
            ok = false;
            stuck_at = d;
            break;
          }
          chosen = containing.size() == 1 ? containing.front() : containing[rng.index(containing.size())];
        }
      }
    }
    if (!ok)
      throw SamplingError("could not chain quadrilaterals through axis '" + dims[stuck_at].name +
                          "' within the rejection budget");
  }
  return result;
}

QuadRemap remap_quads(std::span<const Quadrilateral> quads, std::span<const std::size_t> new_index) {
  QuadRemap out;
  for (const auto& q : quads) {
    const auto l = new_index[q.left_axis];
    const auto r = new_index[q.right_axis()];
    Quadrilateral moved = q;
    if (r == l + 1) {
      moved.left_axis = l;
      out.kept.push_back(moved);
    } else if (l == r + 1) {
      // Same pair, now drawn right to left: mirror it.
      moved.left_axis = r;
      std::swap(moved.left, moved.right);
      out.kept.push_back(moved);
    } else {
      out.detached.push_back(q);
    }
  }
  return out;
}

std::vector<ValueRange> quad_ranges_on_axis(std::span<const Quadrilateral> quads, std::size_t axis) {
  std::vector<ValueRange> ranges;
  for (const auto& q : quads) {
    if (q.left_axis == axis) ranges.push_back(q.left.as_value_range());
    if (q.right_axis() == axis) ranges.push_back(q.right.as_value_range());
  }
  return ranges;
}

}  // namespace sketchnd
