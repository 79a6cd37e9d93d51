#pragma once

// Scatterplot sculpting: paint a 2D density on a projection plane, lift it to
// N-D points, carve points away with a fuzzy eraser and replenish what the
// carving took from other planes.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchnd/dataset.hpp"
#include "sketchnd/histogram.hpp"
#include "sketchnd/pdf_sketch.hpp"
#include "sketchnd/projection.hpp"
#include "sketchnd/random.hpp"

namespace sketchnd {

constexpr Eigen::Index kDefaultMapGrid = 128;

/// Either an axis-aligned plane over dimensions (dim_x, dim_y) or a general
/// plane spanned by two orthonormal N-D vectors.
struct ViewDescriptor {
  enum class Kind { axis_aligned, general };

  Kind kind = Kind::axis_aligned;
  std::size_t dim_x = 0;
  std::size_t dim_y = 1;
  Eigen::VectorXd x_axis;
  Eigen::VectorXd y_axis;

  static ViewDescriptor axis_aligned(std::size_t dim_x, std::size_t dim_y);
  static ViewDescriptor general(const PpaBasisd& basis);

  bool is_axis_aligned() const { return kind == Kind::axis_aligned; }
  /// The plane's two unit vectors in a `dims`-dimensional space.
  PpaBasisd basis(std::size_t dims) const;
  /// Throws ValidationError when the view does not fit `dims` dimensions.
  void validate(std::size_t dims) const;

  friend bool operator==(const ViewDescriptor& a, const ViewDescriptor& b);
};

/// Exact image of the dataset's axis box on the plane: for a unit vector u
/// the box projects onto [u.c - sum |u_k| h_k, u.c + sum |u_k| h_k].
PlaneExtent view_extent(const ViewDescriptor& view, std::span<const DimensionSpec> dims);

/// Plane coordinates of every row of `points`.
Eigen::MatrixX2d project_view(const ViewDescriptor& view, const PointTable& points);

/// Non-negative density grid over a view's plane extent, normalized to unit
/// sum once it has any mass. Cell (ix, iy) follows grid_cell().
struct ProbabilityMap {
  GridValues cells;

  static ProbabilityMap zeros(Eigen::Index grid) { return {GridValues::Zero(grid, grid)}; }

  Eigen::Index grid() const { return cells.rows(); }
  double total() const { return cells.sum(); }
  bool empty() const { return !(total() > 0.0); }
  /// Scales to unit sum. Throws ValidationError on an empty map.
  void normalize();

  friend bool operator==(const ProbabilityMap& a, const ProbabilityMap& b) {
    return a.cells.rows() == b.cells.rows() && a.cells.cols() == b.cells.cols() && a.cells == b.cells;
  }
};

/// A shape painted in the distribution designer: a closed boundary, a
/// centerline where density peaks, and a profile giving density against the
/// normalized distance d (0 on the centerline, 1 on the boundary).
struct PaintedShape {
  std::vector<Point2> boundary;
  std::vector<Point2> centerline;
  /// Equally spaced samples over d in [0, 1]; empty means constant.
  std::vector<double> profile;
};

struct RasterizeOptions {
  Eigen::Index grid = kDefaultMapGrid;
  /// Gaussian smoothing in cells; 0 disables it.
  double smoothing_sigma = 0.0;
  /// Largest allowed gap between the boundary's ends, as a fraction of the
  /// extent diagonal.
  double closure_tolerance = 0.02;
};

/// Fills the shape with profile(d), d = dc / (dc + db) from the distances to
/// the centerline and boundary, smooths and normalizes. Throws
/// ValidationError for an open boundary, a centerline outside it, or a shape
/// that covers no cell.
ProbabilityMap rasterize_painted_shape(const PaintedShape& shape, const PlaneExtent& extent,
                                       const RasterizeOptions& options = {});

enum class BrushMode { paint, erase };
enum class BrushSize { small, medium, large };

struct BrushSpec {
  BrushMode mode = BrushMode::paint;
  BrushSize size = BrushSize::medium;
  /// In [0, 1]. 0 has no effect; 1 erases covered cells completely.
  double density = 1.0;
};

/// 1%, 3% or 8% of the larger side of the extent.
double brush_radius(BrushSize size, const PlaneExtent& extent);

/// Cells whose center lies within `radius` of `center`, plus the cell holding
/// `center` itself. Empty when `center` is outside the extent.
std::vector<std::pair<Eigen::Index, Eigen::Index>> covered_cells(const PlaneExtent& extent, Eigen::Index grid,
                                                                 const Point2& center, double radius);

struct BrushOutcome {
  /// The erase removed all remaining mass; the map is now all zeros.
  bool emptied = false;
};

/// Paint adds density * (1 - (r/R)^2) * reference to covered cells, where the
/// reference is the map's largest cell (1 for an empty map); erase multiplies
/// covered cells by (1 - density). The map is renormalized afterwards.
BrushOutcome brush_map(ProbabilityMap& map, const BrushSpec& brush, const Point2& position,
                       const PlaneExtent& extent);

/// Sculpt state of one cluster on one plane. Counts are point counts per cell.
struct ClusterPlane {
  /// Map being edited in the designer, not yet lifted to points.
  std::optional<ProbabilityMap> designer;
  /// Designer map as it was when the cluster was last backprojected here.
  std::shared_ptr<const ProbabilityMap> original;
  /// Counts when the cluster's points were last (re)generated; repair target.
  GridValues baseline;
  /// Counts of the points alive now.
  GridValues current;
  /// Painted or carved on this plane, so its current counts constrain how
  /// other planes complete coordinates.
  bool defined = false;

  double baseline_count() const { return baseline.size() ? baseline.sum() : 0.0; }

  friend bool operator==(const ClusterPlane& a, const ClusterPlane& b);
};

struct SculptView {
  ViewDescriptor view;
  PlaneExtent extent;
  Eigen::Index grid = kDefaultMapGrid;
  std::map<int, ClusterPlane> clusters;

  friend bool operator==(const SculptView&, const SculptView&) = default;
};

/// Views maintained side by side. Every mutation of the points is followed by
/// refresh(), so all members always show the same point set.
class ViewSet {
 public:
  /// Adds a view (or finds an identical one) and captures baselines for every
  /// cluster from the current points. Returns its index.
  std::size_t add(const Dataset& data, const ViewDescriptor& view, Eigen::Index grid = kDefaultMapGrid);

  std::size_t size() const { return views_.size(); }
  const SculptView& at(std::size_t i) const;
  SculptView& at(std::size_t i);
  const std::vector<SculptView>& views() const { return views_; }

  /// Plane state of `cluster` on view `i`, created empty if missing.
  ClusterPlane& plane(std::size_t i, int cluster);

  /// Recomputes current counts for every view and cluster.
  void refresh(const Dataset& data);
  /// Baselines of `cluster` on every view := its current counts.
  void capture_baseline(int cluster);
  /// Forgets carve history and originals of `cluster` everywhere; designer
  /// maps survive. Used when another tool regenerated the cluster.
  void reset_cluster(int cluster);
  /// Recomputes extents after axis changes; views whose extent moved lose
  /// all sculpt state.
  void rebind(const Dataset& data);
  /// Follows a dimension permutation (new_index[old]).
  void permute_dimensions(std::span<const std::size_t> new_index);
  void clear() { views_.clear(); }

  friend bool operator==(const ViewSet&, const ViewSet&) = default;

 private:
  std::vector<SculptView> views_;
};

/// Counts of `cluster`'s points on the view's grid.
GridValues cluster_counts(const Dataset& data, const SculptView& view, int cluster);

struct SamplingBudget {
  /// Redraws per point when an axis-aligned completion hits an empty cell.
  std::size_t completion_attempts = 1000;
  /// Redraws per point of the off-plane coordinates of a general view.
  std::size_t domain_attempts = 100;
};

/// Lifts `count` points from a map on the axis-aligned plane of `view`.
/// Coordinates on other defined axis-aligned planes of `cluster` come from
/// their current counts (joint, conditional or checked, in view order);
/// remaining dimensions are uniform over their axes.
PointTable backproject_axis_aligned(const ProbabilityMap& map, const ViewSet& views, std::size_t view, int cluster,
                                    std::size_t count, std::span<const DimensionSpec> dims, Rng& rng,
                                    const SamplingBudget& budget = {});

/// Lifts `count` points from a map on a general plane. The basis is completed
/// with gram_schmidt_complete, plane coordinates come from the map and the
/// other N-2 rotated coordinates are uniform over the part of the axis box
/// that projects onto the drawn plane position.
PointTable backproject_general(const ProbabilityMap& map, const PlaneExtent& extent, const PpaBasisd& basis,
                               std::size_t count, std::span<const DimensionSpec> dims, Rng& rng,
                               const SamplingBudget& budget = {});

/// True when `cluster` responds to brushes; clusters without a state entry
/// count as active.
bool cluster_is_active(std::span<const ClusterState> clusters, int cluster);

struct CarveSpec {
  Point2 center = Point2::Zero();
  /// Half the side of the square carve box, in plane units.
  double half_side = 0.0;
  double density = 1.0;
};

struct CarveResult {
  Dataset data;
  /// Row indices (before removal) of the removed points, ascending.
  std::vector<std::size_t> removed;
};

/// Removes each active point projecting into the box with probability
/// `density`, marks the view as defined for clusters that lost points and
/// refreshes every view.
CarveResult carve(const Dataset& data, ViewSet& views, std::size_t view, const CarveSpec& spec,
                  std::span<const ClusterState> clusters, Rng& rng);

struct ReplenishReport {
  std::size_t added = 0;
  std::vector<std::string> warnings;
  /// Points that could not be placed (completion or domain rejection).
  std::size_t rejected = 0;
  std::size_t rounds = 0;
  double emd_before = 0.0;
  double emd_after = 0.0;
};

struct ReplenishResult {
  Dataset data;
  ReplenishReport report;
};

struct ReplenishOptions {
  SamplingBudget budget;
  /// Stop when a round improves the EMD by less than this fraction.
  double min_improvement = 0.01;
  /// Stop after adding this multiple of the cluster's baseline size.
  double point_budget_factor = 2.0;
  /// Grid the EMD progress check runs on.
  Eigen::Index emd_grid = 16;
};

/// Lifts the designer map of `cluster` on `view` to `count` points that
/// replace the cluster, records the map as the view's original and captures
/// baselines on every view. Throws ValidationError without a painted map.
Dataset backproject_view(const Dataset& data, ViewSet& views, std::size_t view, int cluster, std::size_t count,
                         Rng& rng, const SamplingBudget& budget = {});

/// Normalized EMD between a cluster's current counts on a view and its
/// reference (the original painted map, else the baseline counts).
double plane_emd(const SculptView& view, int cluster, Eigen::Index grid = 32);

/// Regenerates the points missing from an axis-aligned view relative to its
/// baseline: each deficit cell receives its missing count, with other
/// coordinates completed from the cluster's defined planes.
ReplenishResult replenish_auto(const Dataset& data, ViewSet& views, std::size_t view, int cluster, Rng& rng,
                               const ReplenishOptions& options = {});

struct ManualStroke {
  Point2 center = Point2::Zero();
  double radius = 0.0;
  double density = 1.0;
};

/// Paints points back under a brush: every covered cell is raised towards its
/// baseline count (or the cluster's typical occupied-cell count where the
/// baseline is empty) by `density` of the gap.
ReplenishResult replenish_manual(const Dataset& data, ViewSet& views, std::size_t view, int cluster,
                                 const ManualStroke& stroke, Rng& rng, const ReplenishOptions& options = {});

/// Replaces all of `cluster`'s points by a fresh backprojection of the view's
/// original map, at the baseline size. Carve history on every view is lost.
ReplenishResult replenish_general(const Dataset& data, ViewSet& views, std::size_t view, int cluster, Rng& rng,
                                  const ReplenishOptions& options = {});

}  // namespace sketchnd
