#include "sketchnd/sculpt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "sketchnd/error.hpp"

namespace sketchnd {

// ---------------------------------------------------------------- views

ViewDescriptor ViewDescriptor::axis_aligned(std::size_t dim_x, std::size_t dim_y) {
  if (dim_x == dim_y) throw ValidationError("a view needs two different dimensions");
  ViewDescriptor v;
  v.kind = Kind::axis_aligned;
  v.dim_x = dim_x;
  v.dim_y = dim_y;
  return v;
}

ViewDescriptor ViewDescriptor::general(const PpaBasisd& basis) {
  ViewDescriptor v;
  v.kind = Kind::general;
  v.x_axis = basis.x_axis;
  v.y_axis = basis.y_axis;
  v.validate(static_cast<std::size_t>(basis.x_axis.size()));
  return v;
}

PpaBasisd ViewDescriptor::basis(std::size_t dims) const {
  validate(dims);
  if (kind == Kind::general) return {x_axis, y_axis};
  PpaBasisd b{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims)), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims))};
  b.x_axis(static_cast<Eigen::Index>(dim_x)) = 1.0;
  b.y_axis(static_cast<Eigen::Index>(dim_y)) = 1.0;
  return b;
}

void ViewDescriptor::validate(std::size_t dims) const {
  if (kind == Kind::axis_aligned) {
    if (dim_x >= dims || dim_y >= dims) throw ValidationError("view refers to a missing dimension");
    if (dim_x == dim_y) throw ValidationError("a view needs two different dimensions");
    return;
  }
  const auto n = static_cast<Eigen::Index>(dims);
  if (x_axis.size() != n || y_axis.size() != n)
    throw ValidationError("view basis has " + std::to_string(x_axis.size()) + " components for " +
                          std::to_string(dims) + " dimensions");
  if (std::abs(x_axis.norm() - 1.0) > 1e-9 || std::abs(y_axis.norm() - 1.0) > 1e-9 ||
      std::abs(x_axis.dot(y_axis)) > 1e-9)
    throw ValidationError("view basis is not orthonormal");
}

bool operator==(const ViewDescriptor& a, const ViewDescriptor& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == ViewDescriptor::Kind::axis_aligned) return a.dim_x == b.dim_x && a.dim_y == b.dim_y;
  return a.x_axis.size() == b.x_axis.size() && a.y_axis.size() == b.y_axis.size() && a.x_axis == b.x_axis &&
         a.y_axis == b.y_axis;
}

PlaneExtent view_extent(const ViewDescriptor& view, std::span<const DimensionSpec> dims) {
  view.validate(dims.size());
  if (view.is_axis_aligned()) {
    const auto& dx = dims[view.dim_x];
    const auto& dy = dims[view.dim_y];
    return {dx.lo(), dx.hi(), dy.lo(), dy.hi()};
  }
  auto range = [&](const Eigen::VectorXd& u) {
    double center = 0.0;
    double reach = 0.0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const double uk = u(static_cast<Eigen::Index>(k));
      center += uk * 0.5 * (dims[k].lo() + dims[k].hi());
      reach += std::abs(uk) * 0.5 * dims[k].length();
    }
    return std::pair{center - reach, center + reach};
  };
  const auto [x_lo, x_hi] = range(view.x_axis);
  const auto [y_lo, y_hi] = range(view.y_axis);
  return {x_lo, x_hi, y_lo, y_hi};
}

Eigen::MatrixX2d project_view(const ViewDescriptor& view, const PointTable& points) {
  Eigen::MatrixX2d out(points.rows(), 2);
  if (view.is_axis_aligned()) {
    if (points.rows() > 0 && (static_cast<Eigen::Index>(std::max(view.dim_x, view.dim_y)) >= points.cols()))
      throw ValidationError("view refers to a missing dimension");
    if (points.rows() == 0) return out;
    out.col(0) = points.col(static_cast<Eigen::Index>(view.dim_x));
    out.col(1) = points.col(static_cast<Eigen::Index>(view.dim_y));
    return out;
  }
  return project_points(points, PpaBasisd{view.x_axis, view.y_axis});
}

void ProbabilityMap::normalize() {
  const double t = total();
  if (!(t > 0.0)) throw ValidationError("probability map is empty");
  cells /= t;
}

// ---------------------------------------------------------------- painting

namespace {

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

double distance_to_polyline(const Point2& p, std::span<const Point2> line, bool closed) {
  if (line.size() == 1) return (line.front() - p).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, distance_to_segment(p, line[i], line[i + 1]));
  if (closed) best = std::min(best, distance_to_segment(p, line.back(), line.front()));
  return best;
}

double profile_at(std::span<const double> profile, double d) {
  if (profile.empty()) return 1.0;
  if (profile.size() == 1) return profile.front();
  const double pos = std::clamp(d, 0.0, 1.0) * static_cast<double>(profile.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(pos), profile.size() - 2);
  const double f = pos - static_cast<double>(k);
  return (1.0 - f) * profile[k] + f * profile[k + 1];
}

GridValues gaussian_smooth(const GridValues& in, double sigma) {
  const auto radius = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
  Eigen::VectorXd kernel(2 * radius + 1);
  for (Eigen::Index k = -radius; k <= radius; ++k)
    kernel(k + radius) = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
  kernel /= kernel.sum();
  auto pass = [&](const GridValues& src, bool along_x) {
    GridValues dst = GridValues::Zero(src.rows(), src.cols());
    for (Eigen::Index ix = 0; ix < src.rows(); ++ix)
      for (Eigen::Index iy = 0; iy < src.cols(); ++iy)
        for (Eigen::Index k = -radius; k <= radius; ++k) {
          const Eigen::Index jx = along_x ? ix + k : ix;
          const Eigen::Index jy = along_x ? iy : iy + k;
          if (jx < 0 || jy < 0 || jx >= src.rows() || jy >= src.cols()) continue;
          dst(ix, iy) += kernel(k + radius) * src(jx, jy);
        }
    return dst;
  };
  return pass(pass(in, true), false);
}

}  // namespace

ProbabilityMap rasterize_painted_shape(const PaintedShape& shape, const PlaneExtent& extent,
                                       const RasterizeOptions& options) {
  if (options.grid < 1) throw ValidationError("grid must have at least one cell");
  if (shape.boundary.size() < 3) throw ValidationError("shape boundary needs at least three points");
  if (shape.centerline.empty()) throw ValidationError("shape needs a centerline");
  if ((shape.boundary.front() - shape.boundary.back()).norm() > options.closure_tolerance * extent.diagonal())
    throw ValidationError("shape boundary is not closed");
  for (double v : shape.profile)
    if (!(v >= 0.0)) throw ValidationError("profile values must be non-negative");

  Polygon2<double> polygon(2, static_cast<Eigen::Index>(shape.boundary.size()));
  for (std::size_t i = 0; i < shape.boundary.size(); ++i) polygon.col(static_cast<Eigen::Index>(i)) = shape.boundary[i];
  for (const auto& c : shape.centerline)
    if (!polygon_contains<double>(polygon, c, 0.0)) throw ValidationError("centerline leaves the shape boundary");

  ProbabilityMap map = ProbabilityMap::zeros(options.grid);
  for (Eigen::Index ix = 0; ix < options.grid; ++ix) {
    for (Eigen::Index iy = 0; iy < options.grid; ++iy) {
      const Point2 p = grid_cell_center(extent, options.grid, ix, iy);
      if (!polygon_contains<double>(polygon, p, 0.0)) continue;
      const double dc = distance_to_polyline(p, shape.centerline, false);
      const double db = distance_to_polyline(p, shape.boundary, true);
      const double d = dc + db > 0.0 ? dc / (dc + db) : 0.0;
      map.cells(ix, iy) = profile_at(shape.profile, d);
    }
  }
  if (options.smoothing_sigma > 0.0) map.cells = gaussian_smooth(map.cells, options.smoothing_sigma);
  if (map.empty()) throw ValidationError("painted shape covers no grid cell");
  map.normalize();
  return map;
}

double brush_radius(BrushSize size, const PlaneExtent& extent) {
  const double side = std::max(extent.width(), extent.height());
  switch (size) {
    case BrushSize::small: return 0.01 * side;
    case BrushSize::medium: return 0.03 * side;
    case BrushSize::large: return 0.08 * side;
  }
  return 0.03 * side;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> covered_cells(const PlaneExtent& extent, Eigen::Index grid,
                                                                 const Point2& center, double radius) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  const auto home = grid_cell(extent, grid, center);
  if (!home) return cells;
  for (Eigen::Index ix = 0; ix < grid; ++ix)
    for (Eigen::Index iy = 0; iy < grid; ++iy)
      if ((ix == home->first && iy == home->second) ||
          (grid_cell_center(extent, grid, ix, iy) - center).norm() <= radius)
        cells.emplace_back(ix, iy);
  return cells;
}

BrushOutcome brush_map(ProbabilityMap& map, const BrushSpec& brush, const Point2& position,
                       const PlaneExtent& extent) {
  if (!(brush.density >= 0.0 && brush.density <= 1.0)) throw ValidationError("brush density must lie in [0, 1]");
  BrushOutcome outcome;
  if (brush.density == 0.0) return outcome;
  const double radius = brush_radius(brush.size, extent);
  const auto cells = covered_cells(extent, map.grid(), position, radius);
  if (brush.mode == BrushMode::paint) {
    const double reference = map.empty() ? 1.0 : map.cells.maxCoeff();
    for (const auto& [ix, iy] : cells) {
      const double r = (grid_cell_center(extent, map.grid(), ix, iy) - position).norm();
      const double falloff = radius > 0.0 ? std::max(0.0, 1.0 - (r / radius) * (r / radius)) : 1.0;
      // The home cell always gets some paint even when the brush is smaller
      // than a cell.
      map.cells(ix, iy) += brush.density * std::max(falloff, 0.25) * reference;
    }
  } else {
    for (const auto& [ix, iy] : cells) map.cells(ix, iy) *= 1.0 - brush.density;
  }
  if (map.empty()) {
    map.cells.setZero();
    outcome.emptied = true;
    return outcome;
  }
  map.normalize();
  return outcome;
}

// ---------------------------------------------------------------- view set

bool operator==(const ClusterPlane& a, const ClusterPlane& b) {
  auto same_grid = [](const GridValues& x, const GridValues& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  const bool same_original = (!a.original && !b.original) || (a.original && b.original && *a.original == *b.original);
  return a.designer == b.designer && same_original && same_grid(a.baseline, b.baseline) &&
         same_grid(a.current, b.current) && a.defined == b.defined;
}

std::size_t ViewSet::add(const Dataset& data, const ViewDescriptor& view, Eigen::Index grid) {
  if (grid < 1) throw ValidationError("grid must have at least one cell");
  view.validate(data.num_dims());
  for (std::size_t i = 0; i < views_.size(); ++i)
    if (views_[i].view == view && views_[i].grid == grid) return i;
  SculptView v;
  v.view = view;
  v.extent = view_extent(view, data.dims());
  v.grid = grid;
  views_.push_back(std::move(v));
  refresh(data);
  return views_.size() - 1;
}

const SculptView& ViewSet::at(std::size_t i) const {
  if (i >= views_.size()) throw ValidationError("no view with index " + std::to_string(i));
  return views_[i];
}

SculptView& ViewSet::at(std::size_t i) {
  if (i >= views_.size()) throw ValidationError("no view with index " + std::to_string(i));
  return views_[i];
}

ClusterPlane& ViewSet::plane(std::size_t i, int cluster) {
  auto& view = at(i);
  auto [it, inserted] = view.clusters.try_emplace(cluster);
  if (inserted) {
    it->second.baseline = GridValues::Zero(view.grid, view.grid);
    it->second.current = GridValues::Zero(view.grid, view.grid);
  }
  return it->second;
}

void ViewSet::refresh(const Dataset& data) {
  const auto& labels = data.labels();
  std::set<int> present(labels.begin(), labels.end());
  for (std::size_t i = 0; i < views_.size(); ++i) {
    auto& view = views_[i];
    std::map<int, GridValues> counts;
    for (int c : present) counts[c] = GridValues::Zero(view.grid, view.grid);
    if (data.num_points() > 0) {
      const Eigen::MatrixX2d projected = project_view(view.view, data.points());
      for (Eigen::Index r = 0; r < projected.rows(); ++r)
        if (auto cell = grid_cell(view.extent, view.grid, projected.row(r).transpose()))
          counts[labels[static_cast<std::size_t>(r)]](cell->first, cell->second) += 1.0;
    }
    for (auto& [cluster, plane] : view.clusters)
      if (!counts.count(cluster)) plane.current = GridValues::Zero(view.grid, view.grid);
    for (auto& [cluster, grid_counts] : counts) {
      const bool seen = view.clusters.count(cluster) > 0;
      auto& p = plane(i, cluster);
      p.current = std::move(grid_counts);
      if (!seen) p.baseline = p.current;
    }
  }
}

void ViewSet::capture_baseline(int cluster) {
  for (auto& view : views_) {
    auto it = view.clusters.find(cluster);
    if (it != view.clusters.end()) it->second.baseline = it->second.current;
  }
}

void ViewSet::reset_cluster(int cluster) {
  for (auto& view : views_) {
    auto it = view.clusters.find(cluster);
    if (it == view.clusters.end()) continue;
    it->second.original.reset();
    it->second.defined = false;
    it->second.baseline = it->second.current;
  }
}

void ViewSet::rebind(const Dataset& data) {
  std::vector<SculptView> kept;
  for (auto& view : views_) {
    try {
      view.view.validate(data.num_dims());
    } catch (const ValidationError&) {
      continue;
    }
    const PlaneExtent extent = view_extent(view.view, data.dims());
    if (!(extent == view.extent)) {
      view.extent = extent;
      view.clusters.clear();
    }
    kept.push_back(std::move(view));
  }
  views_ = std::move(kept);
  refresh(data);
}

void ViewSet::permute_dimensions(std::span<const std::size_t> new_index) {
  for (auto& view : views_) {
    if (view.view.is_axis_aligned()) {
      view.view.dim_x = new_index[view.view.dim_x];
      view.view.dim_y = new_index[view.view.dim_y];
      continue;
    }
    Eigen::VectorXd x(view.view.x_axis.size());
    Eigen::VectorXd y(view.view.y_axis.size());
    for (std::size_t k = 0; k < new_index.size(); ++k) {
      x(static_cast<Eigen::Index>(new_index[k])) = view.view.x_axis(static_cast<Eigen::Index>(k));
      y(static_cast<Eigen::Index>(new_index[k])) = view.view.y_axis(static_cast<Eigen::Index>(k));
    }
    view.view.x_axis = std::move(x);
    view.view.y_axis = std::move(y);
  }
}

GridValues cluster_counts(const Dataset& data, const SculptView& view, int cluster) {
  GridValues counts = GridValues::Zero(view.grid, view.grid);
  if (data.num_points() == 0) return counts;
  const Eigen::MatrixX2d projected = project_view(view.view, data.points());
  for (Eigen::Index r = 0; r < projected.rows(); ++r) {
    if (data.labels()[static_cast<std::size_t>(r)] != cluster) continue;
    if (auto cell = grid_cell(view.extent, view.grid, projected.row(r).transpose()))
      counts(cell->first, cell->second) += 1.0;
  }
  return counts;
}

// ---------------------------------------------------------------- sampling

namespace {

// Index drawn from a running-sum table; the table must end above zero.
std::size_t draw_from_cumulative(std::span<const double> cumulative, Rng& rng) {
  const double target = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  auto i = static_cast<std::size_t>(it - cumulative.begin());
  if (i < cumulative.size()) return i;
  // Rounding put the target on the total: take the last non-empty entry.
  i = cumulative.size() - 1;
  while (i > 0 && cumulative[i] == cumulative[i - 1]) --i;
  return i;
}

// Draws cells of a grid jointly or conditionally on one coordinate.
class CellSampler {
 public:
  explicit CellSampler(const GridValues& weights) : g_(weights.rows()), weights_(weights) {
    const auto n = static_cast<std::size_t>(g_);
    joint_.resize(n * n);
    by_x_.resize(n * n);
    by_y_.resize(n * n);
    double run = 0.0;
    for (Eigen::Index ix = 0; ix < g_; ++ix) {
      double row = 0.0;
      for (Eigen::Index iy = 0; iy < g_; ++iy) {
        run += weights(ix, iy);
        row += weights(ix, iy);
        joint_[at(ix, iy)] = run;
        by_x_[at(ix, iy)] = row;
      }
    }
    for (Eigen::Index iy = 0; iy < g_; ++iy) {
      double col = 0.0;
      for (Eigen::Index ix = 0; ix < g_; ++ix) {
        col += weights(ix, iy);
        by_y_[at(iy, ix)] = col;
      }
    }
  }

  bool empty() const { return !(joint_.back() > 0.0); }
  double weight(Eigen::Index ix, Eigen::Index iy) const { return weights_(ix, iy); }

  std::pair<Eigen::Index, Eigen::Index> joint(Rng& rng) const {
    const auto i = static_cast<Eigen::Index>(draw_from_cumulative(joint_, rng));
    return {i / g_, i % g_};
  }
  std::optional<Eigen::Index> given_x(Eigen::Index ix, Rng& rng) const { return conditional(by_x_, ix, rng); }
  std::optional<Eigen::Index> given_y(Eigen::Index iy, Rng& rng) const { return conditional(by_y_, iy, rng); }

 private:
  std::size_t at(Eigen::Index a, Eigen::Index b) const { return static_cast<std::size_t>(a * g_ + b); }
  std::optional<Eigen::Index> conditional(const std::vector<double>& table, Eigen::Index fixed, Rng& rng) const {
    const std::span<const double> slice(table.data() + at(fixed, 0), static_cast<std::size_t>(g_));
    if (!(slice.back() > 0.0)) return std::nullopt;
    return static_cast<Eigen::Index>(draw_from_cumulative(slice, rng));
  }

  Eigen::Index g_;
  GridValues weights_;
  std::vector<double> joint_;
  std::vector<double> by_x_;
  std::vector<double> by_y_;
};

double jitter(double lo, double span, Eigen::Index grid, Eigen::Index cell, Rng& rng) {
  return lo + (static_cast<double>(cell) + rng.uniform()) / static_cast<double>(grid) * span;
}

std::optional<Eigen::Index> axis_cell(double v, double lo, double hi, Eigen::Index grid) {
  if (!(v >= lo && v <= hi)) return std::nullopt;
  const auto i = static_cast<Eigen::Index>(std::floor((v - lo) / (hi - lo) * static_cast<double>(grid)));
  return std::clamp<Eigen::Index>(i, 0, grid - 1);
}

// An axis-aligned plane whose current counts constrain point completion.
struct ConstraintPlane {
  std::size_t dim_x;
  std::size_t dim_y;
  PlaneExtent extent;
  Eigen::Index grid;
  CellSampler cells;
};

std::vector<ConstraintPlane> constraint_planes(const ViewSet& views, std::size_t exclude, int cluster) {
  const auto& self = views.at(exclude).view;
  std::vector<ConstraintPlane> planes;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (i == exclude) continue;
    const auto& v = views.at(i);
    if (!v.view.is_axis_aligned()) continue;
    if (self.is_axis_aligned() && std::set{v.view.dim_x, v.view.dim_y} == std::set{self.dim_x, self.dim_y}) continue;
    auto it = v.clusters.find(cluster);
    if (it == v.clusters.end() || !it->second.defined || !(it->second.current.sum() > 0.0)) continue;
    planes.push_back({v.view.dim_x, v.view.dim_y, v.extent, v.grid, CellSampler(it->second.current)});
  }
  return planes;
}

// Fills the unassigned coordinates of `point` from the constraint planes in
// order, then uniformly. Returns false when an assigned coordinate lands on
// an empty cell or an empty conditional slice.
bool complete_point(Eigen::Ref<Eigen::RowVectorXd> point, std::vector<char>& assigned,
                    std::span<const ConstraintPlane> planes, std::span<const DimensionSpec> dims, Rng& rng) {
  for (const auto& plane : planes) {
    const auto& e = plane.extent;
    const auto gx = static_cast<Eigen::Index>(plane.dim_x);
    const auto gy = static_cast<Eigen::Index>(plane.dim_y);
    const bool has_x = assigned[plane.dim_x] != 0;
    const bool has_y = assigned[plane.dim_y] != 0;
    if (!has_x && !has_y) {
      const auto [ix, iy] = plane.cells.joint(rng);
      point(gx) = jitter(e.x_lo, e.width(), plane.grid, ix, rng);
      point(gy) = jitter(e.y_lo, e.height(), plane.grid, iy, rng);
    } else if (has_x && !has_y) {
      const auto ix = axis_cell(point(gx), e.x_lo, e.x_hi, plane.grid);
      if (!ix) return false;
      const auto iy = plane.cells.given_x(*ix, rng);
      if (!iy) return false;
      point(gy) = jitter(e.y_lo, e.height(), plane.grid, *iy, rng);
    } else if (!has_x && has_y) {
      const auto iy = axis_cell(point(gy), e.y_lo, e.y_hi, plane.grid);
      if (!iy) return false;
      const auto ix = plane.cells.given_y(*iy, rng);
      if (!ix) return false;
      point(gx) = jitter(e.x_lo, e.width(), plane.grid, *ix, rng);
    } else {
      const auto ix = axis_cell(point(gx), e.x_lo, e.x_hi, plane.grid);
      const auto iy = axis_cell(point(gy), e.y_lo, e.y_hi, plane.grid);
      if (!ix || !iy || !(plane.cells.weight(*ix, *iy) > 0.0)) return false;
    }
    assigned[plane.dim_x] = 1;
    assigned[plane.dim_y] = 1;
  }
  for (std::size_t d = 0; d < dims.size(); ++d)
    if (!assigned[d]) point(static_cast<Eigen::Index>(d)) = rng.uniform(dims[d].lo(), dims[d].hi());
  return true;
}

// Draws one point whose axis-aligned plane coordinates lie in cell (ix, iy)
// of the view and completes the rest. nullopt when the budget runs out.
std::optional<Eigen::RowVectorXd> lift_axis_aligned_cell(const SculptView& view, Eigen::Index ix, Eigen::Index iy,
                                                         std::span<const ConstraintPlane> planes,
                                                         std::span<const DimensionSpec> dims, Rng& rng,
                                                         std::size_t attempts) {
  const auto& e = view.extent;
  Eigen::RowVectorXd point(static_cast<Eigen::Index>(dims.size()));
  std::vector<char> assigned(dims.size());
  for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
    std::fill(assigned.begin(), assigned.end(), 0);
    point(static_cast<Eigen::Index>(view.view.dim_x)) = jitter(e.x_lo, e.width(), view.grid, ix, rng);
    point(static_cast<Eigen::Index>(view.view.dim_y)) = jitter(e.y_lo, e.height(), view.grid, iy, rng);
    assigned[view.view.dim_x] = 1;
    assigned[view.view.dim_y] = 1;
    if (complete_point(point, assigned, planes, dims, rng)) return point;
  }
  return std::nullopt;
}

// Off-plane completion for a general plane: rotated coordinates beyond the
// first two are uniform over the box's projection onto each completing
// direction, and points outside the box are redrawn.
class GeneralLifter {
 public:
  GeneralLifter(const PpaBasisd& basis, std::span<const DimensionSpec> dims, Rng& rng) : dims_(dims) {
    basis_ = gram_schmidt_complete<double>(basis.x_axis, basis.y_axis, rng);
    const auto n = static_cast<Eigen::Index>(dims.size());
    center_.resize(n);
    half_.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      center_(k) = 0.5 * (dims[static_cast<std::size_t>(k)].lo() + dims[static_cast<std::size_t>(k)].hi());
      half_(k) = 0.5 * dims[static_cast<std::size_t>(k)].length();
    }
    lo_.resize(n);
    hi_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double c = basis_.col(j).dot(center_);
      const double r = basis_.col(j).cwiseAbs().dot(half_);
      lo_(j) = c - r;
      hi_(j) = c + r;
    }
  }

  std::optional<Eigen::RowVectorXd> lift(double a, double b, Rng& rng, std::size_t attempts) const {
    const auto n = basis_.cols();
    Eigen::VectorXd coords(n);
    coords(0) = a;
    coords(1) = b;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
      for (Eigen::Index j = 2; j < n; ++j) coords(j) = rng.uniform(lo_(j), hi_(j));
      Eigen::VectorXd p = rotate_to_data_coords<double>(coords, basis_);
      bool inside = true;
      for (Eigen::Index k = 0; k < n && inside; ++k) {
        const double slack = 1e-9 * (2.0 * half_(k));
        inside = std::abs(p(k) - center_(k)) <= half_(k) + slack;
      }
      if (!inside) continue;
      for (Eigen::Index k = 0; k < n; ++k) p(k) = std::clamp(p(k), center_(k) - half_(k), center_(k) + half_(k));
      return Eigen::RowVectorXd(p.transpose());
    }
    return std::nullopt;
  }

 private:
  std::span<const DimensionSpec> dims_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd center_;
  Eigen::VectorXd half_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
};

void require_dims(std::span<const DimensionSpec> dims) {
  if (dims.size() < 2) throw ValidationError("sculpting needs at least two dimensions");
}

}  // namespace

PointTable backproject_axis_aligned(const ProbabilityMap& map, const ViewSet& views, std::size_t view, int cluster,
                                    std::size_t count, std::span<const DimensionSpec> dims, Rng& rng,
                                    const SamplingBudget& budget) {
  require_dims(dims);
  const auto& v = views.at(view);
  if (!v.view.is_axis_aligned()) throw ValidationError("view is not axis-aligned");
  v.view.validate(dims.size());
  if (map.empty()) throw ValidationError("probability map is empty");
  if (map.grid() != v.grid) throw ValidationError("probability map does not match the view grid");
  const CellSampler cells(map.cells);
  const auto planes = constraint_planes(views, view, cluster);

  PointTable out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dims.size()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    std::optional<Eigen::RowVectorXd> point;
    for (std::size_t attempt = 0; attempt < budget.completion_attempts && !point; ++attempt) {
      const auto [ix, iy] = cells.joint(rng);
      point = lift_axis_aligned_cell(v, ix, iy, planes, dims, rng, 1);
    }
    if (!point) throw SamplingError("backprojection could not satisfy the defined planes within the budget");
    out.row(r) = *point;
  }
  return out;
}

PointTable backproject_general(const ProbabilityMap& map, const PlaneExtent& extent, const PpaBasisd& basis,
                               std::size_t count, std::span<const DimensionSpec> dims, Rng& rng,
                               const SamplingBudget& budget) {
  require_dims(dims);
  if (basis.x_axis.size() != static_cast<Eigen::Index>(dims.size()) ||
      basis.y_axis.size() != static_cast<Eigen::Index>(dims.size()))
    throw ValidationError("basis does not match the dataset dimensionality");
  if (map.empty()) throw ValidationError("probability map is empty");
  const CellSampler cells(map.cells);
  const GeneralLifter lifter(basis, dims, rng);
  const auto g = map.grid();

  PointTable out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dims.size()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto [ix, iy] = cells.joint(rng);
    const double a = jitter(extent.x_lo, extent.width(), g, ix, rng);
    const double b = jitter(extent.y_lo, extent.height(), g, iy, rng);
    auto point = lifter.lift(a, b, rng, budget.domain_attempts);
    if (!point)
      throw SamplingError("backprojection rejected " + std::to_string(budget.domain_attempts) +
                          " draws outside the data domain for one point");
    out.row(r) = *point;
  }
  return out;
}

Dataset backproject_view(const Dataset& data, ViewSet& views, std::size_t view, int cluster, std::size_t count,
                         Rng& rng, const SamplingBudget& budget) {
  if (count == 0) throw ValidationError("backprojection needs at least one point");
  auto& state = views.plane(view, cluster);
  if (!state.designer || state.designer->empty()) throw ValidationError("no painted map for this view and cluster");
  ProbabilityMap map = *state.designer;
  map.normalize();
  const auto& v = views.at(view);
  const PointTable points = v.view.is_axis_aligned()
                                ? backproject_axis_aligned(map, views, view, cluster, count, data.dims(), rng, budget)
                                : backproject_general(map, v.extent, v.view.basis(data.num_dims()), count,
                                                      data.dims(), rng, budget);
  Dataset next = replace_cluster(data, cluster, points);
  views.refresh(next);
  auto& plane = views.plane(view, cluster);
  plane.original = std::make_shared<const ProbabilityMap>(std::move(map));
  plane.defined = true;
  views.capture_baseline(cluster);
  return next;
}

bool cluster_is_active(std::span<const ClusterState> clusters, int cluster) {
  for (const auto& c : clusters)
    if (c.id == cluster) return c.active;
  return true;
}

CarveResult carve(const Dataset& data, ViewSet& views, std::size_t view, const CarveSpec& spec,
                  std::span<const ClusterState> clusters, Rng& rng) {
  if (!(spec.density >= 0.0 && spec.density <= 1.0)) throw ValidationError("carve density must lie in [0, 1]");
  if (!(spec.half_side >= 0.0)) throw ValidationError("carve box size must be non-negative");
  const auto& v = views.at(view);
  CarveResult result;
  std::set<int> touched;
  if (data.num_points() > 0) {
    const Eigen::MatrixX2d projected = project_view(v.view, data.points());
    for (Eigen::Index r = 0; r < projected.rows(); ++r) {
      const int label = data.labels()[static_cast<std::size_t>(r)];
      if (!cluster_is_active(clusters, label)) continue;
      if ((projected.row(r).transpose() - spec.center).cwiseAbs().maxCoeff() > spec.half_side) continue;
      if (rng.uniform() < spec.density) {
        result.removed.push_back(static_cast<std::size_t>(r));
        touched.insert(label);
      }
    }
  }
  result.data = result.removed.empty() ? data : remove_rows(data, result.removed);
  views.refresh(result.data);
  for (int c : touched) views.plane(view, c).defined = true;
  return result;
}

double plane_emd(const SculptView& view, int cluster, Eigen::Index grid) {
  auto it = view.clusters.find(cluster);
  if (it == view.clusters.end()) return 0.0;
  const auto& plane = it->second;
  const GridValues& reference = plane.original ? plane.original->cells : plane.baseline;
  if (!(reference.sum() > 0.0)) return 0.0;
  if (!(plane.current.sum() > 0.0)) return std::numeric_limits<double>::infinity();
  return normalized_emd(reference, plane.current, view.extent, grid);
}

namespace {

ClusterPlane& repairable_plane(ViewSet& views, std::size_t view, int cluster) {
  auto& plane = views.plane(view, cluster);
  if (!(plane.baseline_count() > 0.0)) throw ValidationError("no original map captured for this view and cluster");
  return plane;
}

}  // namespace

ReplenishResult replenish_auto(const Dataset& data, ViewSet& views, std::size_t view, int cluster, Rng& rng,
                               const ReplenishOptions& options) {
  require_dims(data.dims());
  if (!views.at(view).view.is_axis_aligned())
    throw ValidationError("automatic repair needs an axis-aligned view; regenerate general views instead");
  repairable_plane(views, view, cluster);

  ReplenishResult result{data, {}};
  auto& report = result.report;
  const double point_budget = options.point_budget_factor * views.plane(view, cluster).baseline_count();
  report.emd_before = plane_emd(views.at(view), cluster, options.emd_grid);
  double emd = report.emd_before;

  for (;;) {
    const auto& v = views.at(view);
    const auto& plane = v.clusters.at(cluster);
    const GridValues deficit = (plane.baseline - plane.current).cwiseMax(0.0);
    if (!(deficit.sum() > 0.0) || static_cast<double>(report.added) >= point_budget) break;

    const auto planes = constraint_planes(views, view, cluster);
    std::vector<Eigen::RowVectorXd> fresh;
    for (Eigen::Index ix = 0; ix < v.grid; ++ix) {
      for (Eigen::Index iy = 0; iy < v.grid; ++iy) {
        for (int k = 0; k < static_cast<int>(std::lround(deficit(ix, iy))); ++k) {
          if (static_cast<double>(report.added + fresh.size()) >= point_budget) break;
          auto point = lift_axis_aligned_cell(v, ix, iy, planes, result.data.dims(), rng,
                                              options.budget.completion_attempts);
          if (point)
            fresh.push_back(std::move(*point));
          else
            ++report.rejected;
        }
      }
    }
    ++report.rounds;
    if (fresh.empty()) break;
    PointTable batch(static_cast<Eigen::Index>(fresh.size()), static_cast<Eigen::Index>(result.data.num_dims()));
    for (std::size_t i = 0; i < fresh.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = fresh[i];
    result.data = append_points(result.data, cluster, batch);
    views.refresh(result.data);
    report.added += fresh.size();

    const double next = plane_emd(views.at(view), cluster, options.emd_grid);
    const bool stalled = std::isfinite(emd) && emd - next < options.min_improvement * emd;
    emd = next;
    if (stalled) break;
  }
  if (report.rejected > 0)
    report.warnings.push_back(std::to_string(report.rejected) +
                              " replenished points could not satisfy the defined planes");
  report.emd_after = emd;
  return result;
}

ReplenishResult replenish_manual(const Dataset& data, ViewSet& views, std::size_t view, int cluster,
                                 const ManualStroke& stroke, Rng& rng, const ReplenishOptions& options) {
  require_dims(data.dims());
  if (!(stroke.density >= 0.0 && stroke.density <= 1.0)) throw ValidationError("brush density must lie in [0, 1]");
  auto& plane = views.plane(view, cluster);
  const auto& v = views.at(view);
  ReplenishResult result{data, {}};
  auto& report = result.report;
  report.emd_before = plane_emd(v, cluster, options.emd_grid);
  report.emd_after = report.emd_before;

  const auto cells = covered_cells(v.extent, v.grid, stroke.center, stroke.radius);
  if (cells.empty()) {
    report.warnings.push_back("brush lies outside the data domain; no points added");
    return result;
  }
  auto typical = [](const GridValues& counts) -> std::optional<double> {
    const auto occupied = (counts.array() > 0.0).count();
    if (occupied == 0) return std::nullopt;
    return counts.sum() / static_cast<double>(occupied);
  };
  const double level = typical(plane.baseline).value_or(typical(plane.current).value_or(1.0));

  std::vector<Eigen::RowVectorXd> fresh;
  const bool axis_aligned = v.view.is_axis_aligned();
  const auto planes = axis_aligned ? constraint_planes(views, view, cluster) : std::vector<ConstraintPlane>{};
  std::optional<GeneralLifter> lifter;
  if (!axis_aligned) lifter.emplace(v.view.basis(data.num_dims()), data.dims(), rng);
  for (const auto& [ix, iy] : cells) {
    const double target = plane.baseline(ix, iy) > 0.0 ? plane.baseline(ix, iy) : level;
    const double wanted = stroke.density * std::max(0.0, target - plane.current(ix, iy));
    const double whole = std::floor(wanted);
    const auto n = static_cast<long>(whole) + (rng.uniform() < wanted - whole ? 1 : 0);
    for (long k = 0; k < n; ++k) {
      std::optional<Eigen::RowVectorXd> point;
      if (axis_aligned) {
        point = lift_axis_aligned_cell(v, ix, iy, planes, data.dims(), rng, options.budget.completion_attempts);
      } else {
        const double a = jitter(v.extent.x_lo, v.extent.width(), v.grid, ix, rng);
        const double b = jitter(v.extent.y_lo, v.extent.height(), v.grid, iy, rng);
        point = lifter->lift(a, b, rng, options.budget.domain_attempts);
      }
      if (point)
        fresh.push_back(std::move(*point));
      else
        ++report.rejected;
    }
  }
  report.rounds = 1;
  if (report.rejected > 0)
    report.warnings.push_back(std::to_string(report.rejected) + " painted points fell outside the data domain");
  if (fresh.empty()) return result;
  PointTable batch(static_cast<Eigen::Index>(fresh.size()), static_cast<Eigen::Index>(data.num_dims()));
  for (std::size_t i = 0; i < fresh.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = fresh[i];
  result.data = append_points(data, cluster, batch);
  views.refresh(result.data);
  report.added = fresh.size();
  report.emd_after = plane_emd(views.at(view), cluster, options.emd_grid);
  return result;
}

ReplenishResult replenish_general(const Dataset& data, ViewSet& views, std::size_t view, int cluster, Rng& rng,
                                  const ReplenishOptions& options) {
  require_dims(data.dims());
  auto& plane = views.plane(view, cluster);
  if (!plane.original) throw ValidationError("no original map captured for this view and cluster");
  const auto count = static_cast<std::size_t>(std::lround(plane.baseline_count()));
  if (count == 0) throw ValidationError("no original map captured for this view and cluster");
  const auto original = plane.original;
  const auto& v = views.at(view);

  ReplenishResult result{data, {}};
  result.report.emd_before = plane_emd(v, cluster, options.emd_grid);
  const PointTable points =
      backproject_general(*original, v.extent, v.view.basis(data.num_dims()), count, data.dims(), rng, options.budget);
  result.data = replace_cluster(data, cluster, points);
  views.refresh(result.data);
  for (std::size_t i = 0; i < views.size(); ++i) {
    auto it = views.at(i).clusters.find(cluster);
    if (it == views.at(i).clusters.end()) continue;
    it->second.baseline = it->second.current;
    it->second.defined = it->second.original != nullptr;
  }
  result.report.added = count;
  result.report.rounds = 1;
  result.report.emd_after = plane_emd(views.at(view), cluster, options.emd_grid);
  return result;
}

}  // namespace sketchnd
