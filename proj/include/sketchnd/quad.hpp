#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "sketchnd/dataset.hpp"
#include "sketchnd/pdf_sketch.hpp"
#include "sketchnd/random.hpp"

namespace sketchnd {

// Quadrilaterals are clicked in parallel-coordinates layout units: x is the
// axis ordinal (axis i sits at x = i) and y runs from 0 at an axis' `min` to
// 1 at its `max`, so reversed axes need no special casing.

enum class QuadKind { trapezoid, bowtie };

/// Range on one axis in data units, ordered along the display direction.
struct AxisRange {
  double bottom = 0.0;
  double top = 1.0;

  double span() const { return top - bottom; }
  double at(double t) const { return bottom + t * (top - bottom); }
  double relative(double v) const { return (v - bottom) / (top - bottom); }
  bool contains(double v) const {
    return bottom < top ? (v >= bottom && v <= top) : (v >= top && v <= bottom);
  }
  ValueRange as_value_range() const { return {bottom, top}; }

  friend bool operator==(const AxisRange&, const AxisRange&) = default;
};

/// A snapped trapezoid (direct relationship) or bowtie (inverse) between
/// axes `left_axis` and `left_axis + 1`, owned by one cluster.
struct Quadrilateral {
  int cluster = 0;
  std::size_t left_axis = 0;
  QuadKind kind = QuadKind::trapezoid;
  AxisRange left;
  AxisRange right;

  std::size_t right_axis() const { return left_axis + 1; }
  /// True when the top of the left range connects to the top of the right.
  bool top_connects_top() const { return kind == QuadKind::trapezoid; }

  /// The four snapped vertices in click order (layout units); snapping them
  /// again reproduces this quadrilateral.
  std::array<Point2, 4> layout_vertices(std::span<const DimensionSpec> dims) const;

  friend bool operator==(const Quadrilateral&, const Quadrilateral&) = default;
};

enum class TickOrigin { pdf_local_minimum, quad_vertex };

struct SnapTick {
  std::size_t axis = 0;
  double value = 0.0;  ///< data units
  TickOrigin origin = TickOrigin::quad_vertex;
};

struct QuadConfig {
  /// Tick snapping distance as a fraction of axis length.
  double snap_tolerance = 0.015;
  /// Correlation window at c = 1, as a fraction of the right range.
  double min_window = 0.02;
  std::size_t rejection_budget = 1000;
  std::size_t default_samples = 500;
};

/// Window fraction w(c) = 1 - c (1 - w_min); w(0) = 1, w(1) = w_min.
double window_fraction(double correlation, double min_window);

/// Snaps four clicks into a quadrilateral between one adjacent axis pair.
/// The kind is a bowtie exactly when the click polygon self-intersects.
/// Vertices within tolerance of a tick on their axis land exactly on it.
Quadrilateral classify_and_snap_quad(const std::array<Point2, 4>& clicks,
                                     std::span<const DimensionSpec> dims,
                                     std::span<const SnapTick> ticks, int cluster,
                                     const QuadConfig& config = {});

/// Ticks from PDF sketches (local minima and extended endpoints) and from the
/// vertices of every quadrilateral, deduplicated per axis within tolerance.
std::vector<SnapTick> collect_ticks(const std::map<std::size_t, DiscretePdf>& pdfs,
                                    std::span<const Quadrilateral> quads,
                                    std::span<const DimensionSpec> dims,
                                    const QuadConfig& config = {});

struct LinkedValue {
  double value = 0.0;
  /// Set when the rejection budget ran out and the value was drawn uniformly
  /// inside the window instead.
  bool fallback = false;
};

/// Draws the right-axis value linked to `prev` (a value inside quad.left).
/// Candidates come from `next_dim` restricted to the quad's right range and
/// are rejected until one falls inside the correlation window.
LinkedValue sample_linked_value(double prev, const Quadrilateral& quad, double correlation,
                                const TruncatedSampler& next_dim, Rng& rng,
                                const QuadConfig& config = {});

struct ClusterSamples {
  PointTable points;
  std::size_t fallbacks = 0;
};

/// Generates `n` points for one cluster, filling dimensions left to right.
/// Dimensions on the right side of a quad are linked to their left neighbour;
/// dimensions with a PDF use inverse transform sampling; the rest are uniform
/// over their axis. Quads of other clusters in `quads` are ignored.
ClusterSamples generate_cluster_samples(int cluster, std::span<const Quadrilateral> quads,
                                        const std::map<std::size_t, DiscretePdf>& pdfs,
                                        std::span<const DimensionSpec> dims, double correlation,
                                        std::size_t n, Rng& rng, const QuadConfig& config = {});

struct QuadRemap {
  std::vector<Quadrilateral> kept;
  std::vector<Quadrilateral> detached;
};

/// Re-indexes quads after a dimension permutation (`new_index[old]`). Quads
/// whose axes are no longer adjacent in left-to-right order are detached.
QuadRemap remap_quads(std::span<const Quadrilateral> quads, std::span<const std::size_t> new_index);

/// Union of the ranges quads of any cluster occupy on `axis`.
std::vector<ValueRange> quad_ranges_on_axis(std::span<const Quadrilateral> quads, std::size_t axis);

}  // namespace sketchnd
