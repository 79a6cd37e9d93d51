#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include <Eigen/Dense>

namespace sketchnd {

/// Axis-aligned rectangle of a projection plane, in plane coordinates.
struct PlaneExtent {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
  double diagonal() const;
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= x_lo && p.x() <= x_hi && p.y() >= y_lo && p.y() <= y_hi;
  }

  friend bool operator==(const PlaneExtent&, const PlaneExtent&) = default;
};

/// Square grid over a PlaneExtent. Cell (ix, iy) covers
/// [x_lo + ix w, x_lo + (ix + 1) w) x [y_lo + iy h, ...); the upper edges
/// belong to the last cell.
using GridValues = Eigen::MatrixXd;

std::optional<std::pair<Eigen::Index, Eigen::Index>> grid_cell(const PlaneExtent& extent, Eigen::Index grid,
                                                               const Eigen::Vector2d& p);
Eigen::Vector2d grid_cell_center(const PlaneExtent& extent, Eigen::Index grid, Eigen::Index ix, Eigen::Index iy);

/// Counts of the rows of `projected` (P x 2) per cell; points outside the
/// extent are skipped.
GridValues histogram_2d(const Eigen::Ref<const Eigen::MatrixX2d>& projected, const PlaneExtent& extent,
                        Eigen::Index grid);

/// Sums blocks of cells down to `grid` x `grid`. Cell i maps to i * grid / n.
GridValues coarsen(const GridValues& values, Eigen::Index grid);

/// Exact earth mover's distance between two non-negative grids over the same
/// extent, each normalized to unit mass first, with Manhattan ground distance
/// between cell centers. Returned in plane units. Throws ValidationError on
/// shape mismatch or zero mass.
double earth_movers_distance(const GridValues& a, const GridValues& b, const PlaneExtent& extent);

/// earth_movers_distance on both grids coarsened to `grid`, divided by the
/// extent diagonal.
double normalized_emd(const GridValues& a, const GridValues& b, const PlaneExtent& extent, Eigen::Index grid = 32);

/// Closed-form 1D distance for unit-mass histograms on equally spaced bins:
/// sum |CDF_a - CDF_b| * spacing.
double earth_movers_distance_1d(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double spacing);

}  // namespace sketchnd
