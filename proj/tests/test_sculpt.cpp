#include <cmath>

#include "doctest.h"
#include "sketchnd/error.hpp"
#include "sketchnd/sculpt.hpp"

using namespace sketchnd;

namespace {

Dataset empty_dataset(std::size_t dims, double lo = -10.0, double hi = 10.0) {
  return Dataset(make_dimensions(dims, lo, hi), PointTable(0, static_cast<Eigen::Index>(dims)), {});
}

PaintedShape rectangle(double x0, double x1, double y0, double y1) {
  PaintedShape s;
  s.boundary = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
  const double ym = 0.5 * (y0 + y1);
  const double m = 0.05 * (x1 - x0);
  s.centerline = {{x0 + m, ym}, {x1 - m, ym}};
  return s;
}

GridValues counts_of(const PointTable& pts, const ViewDescriptor& v, const PlaneExtent& e, Eigen::Index grid) {
  return histogram_2d(project_view(v, pts), e, grid);
}

}  // namespace

TEST_CASE("view extents are exact box projections") {
  const auto dims = make_dimensions(3, -1.0, 1.0);
  const auto aa = view_extent(ViewDescriptor::axis_aligned(0, 2), dims);
  CHECK(aa.x_lo == -1.0);
  CHECK(aa.y_hi == 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  const auto g = view_extent(ViewDescriptor::general({Eigen::Vector3d(s, s, 0), Eigen::Vector3d(0, 0, 1)}), dims);
  CHECK(g.x_lo == doctest::Approx(-2.0 * s));
  CHECK(g.x_hi == doctest::Approx(2.0 * s));
  CHECK(g.y_lo == doctest::Approx(-1.0));
  CHECK_THROWS_AS(ViewDescriptor::axis_aligned(0, 3).validate(3), ValidationError);
  CHECK_THROWS_AS(ViewDescriptor::axis_aligned(1, 1).validate(3), ValidationError);
}

TEST_CASE("rasterized shapes are zero outside and peak along the centerline") {
  const PlaneExtent e{-10, 10, -10, 10};
  auto shape = rectangle(-6, 6, -2, 2);
  shape.profile = {1.0, 0.0};
  const auto map = rasterize_painted_shape(shape, e);
  CHECK(map.total() == doctest::Approx(1.0));
  const auto inside = *grid_cell(e, map.grid(), {0.0, 0.0});
  const auto edge = *grid_cell(e, map.grid(), {0.0, 1.8});
  const auto outside = *grid_cell(e, map.grid(), {0.0, 5.0});
  CHECK(map.cells(inside.first, inside.second) > map.cells(edge.first, edge.second));
  CHECK(map.cells(outside.first, outside.second) == 0.0);
}

TEST_CASE("rasterize validates the painted shape") {
  const PlaneExtent e{-10, 10, -10, 10};
  auto open = rectangle(-6, 6, -2, 2);
  open.boundary.pop_back();
  CHECK_THROWS_AS(rasterize_painted_shape(open, e), ValidationError);
  auto stray = rectangle(-6, 6, -2, 2);
  stray.centerline.push_back({8.0, 8.0});
  CHECK_THROWS_AS(rasterize_painted_shape(stray, e), ValidationError);
  auto negative = rectangle(-6, 6, -2, 2);
  negative.profile = {1.0, -1.0};
  CHECK_THROWS_AS(rasterize_painted_shape(negative, e), ValidationError);
}

TEST_CASE("smoothing spreads mass but keeps it normalized") {
  const PlaneExtent e{-10, 10, -10, 10};
  RasterizeOptions opt;
  opt.smoothing_sigma = 2.0;
  const auto map = rasterize_painted_shape(rectangle(-6, 6, -2, 2), e, opt);
  CHECK(map.total() == doctest::Approx(1.0));
  const auto outside = *grid_cell(e, map.grid(), {0.0, 2.3});
  CHECK(map.cells(outside.first, outside.second) > 0.0);
}

TEST_CASE("brush paints and erases covered cells") {
  const PlaneExtent e{0, 1, 0, 1};
  auto map = ProbabilityMap::zeros(32);
  BrushSpec paint{BrushMode::paint, BrushSize::large, 1.0};
  brush_map(map, paint, {0.5, 0.5}, e);
  CHECK(map.total() == doctest::Approx(1.0));
  const auto cells = covered_cells(e, 32, {0.5, 0.5}, brush_radius(BrushSize::large, e));
  CHECK(!cells.empty());
  double covered = 0.0;
  for (auto [ix, iy] : cells) covered += map.cells(ix, iy);
  CHECK(covered == doctest::Approx(1.0));

  BrushSpec erase{BrushMode::erase, BrushSize::large, 1.0};
  const auto outcome = brush_map(map, erase, {0.5, 0.5}, e);
  CHECK(outcome.emptied);
  CHECK(map.empty());
  CHECK(covered_cells(e, 32, {2.0, 2.0}, 0.1).empty());
  CHECK(brush_radius(BrushSize::small, PlaneExtent{0, 4, 0, 1}) == doctest::Approx(0.04));
}

TEST_CASE("partial erase scales covered cells") {
  const PlaneExtent e{0, 1, 0, 1};
  auto map = ProbabilityMap{GridValues::Ones(8, 8)};
  map.normalize();
  brush_map(map, BrushSpec{BrushMode::erase, BrushSize::small, 0.5}, {0.05, 0.05}, e);
  CHECK(map.cells(0, 0) < map.cells(7, 7));
  CHECK(map.cells(0, 0) / map.cells(7, 7) == doctest::Approx(0.5));
}

TEST_CASE("view set deduplicates views and captures baselines") {
  Rng rng(1);
  const Dataset d = create_default_dataset(rng, 300, 4);
  ViewSet views;
  const auto a = views.add(d, ViewDescriptor::axis_aligned(0, 1), 16);
  const auto b = views.add(d, ViewDescriptor::axis_aligned(2, 3), 16);
  CHECK(views.add(d, ViewDescriptor::axis_aligned(0, 1), 16) == a);
  CHECK(a != b);
  CHECK(views.at(a).clusters.at(0).baseline_count() == 300);
  CHECK(views.at(a).clusters.at(0).current == views.at(a).clusters.at(0).baseline);
}

TEST_CASE("axis-aligned backprojection reproduces the painted map") {
  ViewSet views;
  Dataset d = empty_dataset(4);
  const auto v = views.add(d, ViewDescriptor::axis_aligned(0, 1));
  views.plane(v, 0).designer = rasterize_painted_shape(rectangle(-6, 6, -2, 2), views.at(v).extent);
  Rng rng(2);
  d = backproject_view(d, views, v, 0, 10000, rng);
  CHECK(d.num_points() == 10000);
  const auto& plane = views.at(v).clusters.at(0);
  REQUIRE(plane.original);
  CHECK(plane.defined);
  CHECK(normalized_emd(plane.current, plane.original->cells, views.at(v).extent) < 0.05);
  // Every point projects onto a painted cell.
  const auto counts = counts_of(d.points(), views.at(v).view, views.at(v).extent, views.at(v).grid);
  CHECK(((counts.array() > 0.0) && (plane.original->cells.array() == 0.0)).count() == 0);
  // Undefined dimensions are uniform over their axes.
  CHECK(std::abs(d.points().col(3).mean()) < 0.3);
  CHECK_THROWS_AS(backproject_view(d, views, v, 1, 10, rng), ValidationError);
}

TEST_CASE("general backprojection reproduces the painted map inside the box") {
  ViewSet views;
  Dataset d = empty_dataset(5);
  Eigen::VectorXd x(5), y(5);
  x << 1, 1, 0.2, 0, 0;
  y << 0, 0.1, 0.2, 1, 1;
  const PpaBasisd basis{x.normalized(), (y - y.dot(x.normalized()) * x.normalized()).normalized()};
  const auto v = views.add(d, ViewDescriptor::general(basis));
  views.plane(v, 0).designer = rasterize_painted_shape(rectangle(-5, 5, -3, 3), views.at(v).extent);
  Rng rng(3);
  d = backproject_view(d, views, v, 0, 10000, rng);
  CHECK(d.points().minCoeff() >= -10.0);
  CHECK(d.points().maxCoeff() <= 10.0);
  const auto& plane = views.at(v).clusters.at(0);
  CHECK(normalized_emd(plane.current, plane.original->cells, views.at(v).extent) < 0.05);
}

TEST_CASE("carve removes only active points inside the box") {
  Rng rng(4);
  Dataset d = create_default_dataset(rng, 400, 3);
  d = append_points(d, 1, create_default_dataset(rng, 400, 3).points());
  ViewSet views;
  const auto v = views.add(d, ViewDescriptor::axis_aligned(0, 1), 32);
  std::vector<ClusterState> states{{0, cluster_color(0), 400, 0.5, true}, {1, cluster_color(1), 400, 0.5, false}};
  CarveSpec spec{{0.0, 0.0}, 4.0, 1.0};
  const auto result = carve(d, views, v, spec, states, rng);
  CHECK(!result.removed.empty());
  for (std::size_t r : result.removed) {
    CHECK(d.labels()[r] == 0);
    CHECK(std::abs(d.points()(static_cast<Eigen::Index>(r), 0)) <= 4.0);
    CHECK(std::abs(d.points()(static_cast<Eigen::Index>(r), 1)) <= 4.0);
  }
  CHECK(result.data.rows_of_cluster(1).size() == 400);
  CHECK(views.at(v).clusters.at(0).defined);
  CHECK_FALSE(views.at(v).clusters.at(1).defined);
  CHECK(views.at(v).clusters.at(0).current.sum() == doctest::Approx(400.0 - static_cast<double>(result.removed.size())));

  // Nothing left to carve: density 1 took every active point in the box.
  const auto again = carve(result.data, views, v, spec, states, rng);
  CHECK(again.removed.empty());
  const auto none = carve(d, views, v, CarveSpec{{0.0, 0.0}, 4.0, 0.0}, states, rng);
  CHECK(none.removed.empty());
}

TEST_CASE("automatic replenish refills the deficit without entering carved cells") {
  ViewSet views;
  Dataset d = empty_dataset(3);
  const auto v12 = views.add(d, ViewDescriptor::axis_aligned(0, 1), 32);
  const auto v13 = views.add(d, ViewDescriptor::axis_aligned(0, 2), 32);
  RasterizeOptions raster;
  raster.grid = 32;
  views.plane(v12, 0).designer = rasterize_painted_shape(rectangle(-8, 8, -3, 3), views.at(v12).extent, raster);
  Rng rng(5);
  d = backproject_view(d, views, v12, 0, 3000, rng);

  auto carved = carve(d, views, v13, CarveSpec{{2.0, -5.0}, 5.0, 1.0}, {}, rng);
  d = carved.data;
  const GridValues hole = views.at(v13).clusters.at(0).current;
  const double before = plane_emd(views.at(v12), 0);

  auto repaired = replenish_auto(d, views, v12, 0, rng);
  d = repaired.data;
  CHECK(repaired.report.added > 0);
  const double after = plane_emd(views.at(v12), 0);
  CHECK(after <= 0.5 * before);

  // New points never land where the carved plane has no points.
  const PointTable fresh = d.points().bottomRows(static_cast<Eigen::Index>(repaired.report.added));
  const auto fresh_counts = counts_of(fresh, views.at(v13).view, views.at(v13).extent, 32);
  CHECK(((fresh_counts.array() > 0.0) && (hole.array() == 0.0)).count() == 0);
}

TEST_CASE("automatic replenish needs an axis-aligned view with a baseline") {
  ViewSet views;
  Dataset d = empty_dataset(3);
  const auto v = views.add(d, ViewDescriptor::axis_aligned(0, 1), 16);
  Rng rng(6);
  CHECK_THROWS_AS(replenish_auto(d, views, v, 0, rng), ValidationError);
}

TEST_CASE("manual replenish adds points only under the brush") {
  Rng rng(7);
  Dataset d = create_default_dataset(rng, 2000, 3);
  ViewSet views;
  const auto v = views.add(d, ViewDescriptor::axis_aligned(0, 1), 32);
  d = carve(d, views, v, CarveSpec{{0.0, 0.0}, 5.0, 1.0}, {}, rng).data;
  const std::size_t before = d.num_points();
  const ManualStroke stroke{{0.0, 0.0}, 3.0, 1.0};
  const auto r = replenish_manual(d, views, v, 0, stroke, rng);
  CHECK(r.report.added > 0);
  CHECK(r.data.num_points() == before + r.report.added);
  const PointTable fresh = r.data.points().bottomRows(static_cast<Eigen::Index>(r.report.added));
  const double cell = 20.0 / 32.0;
  for (Eigen::Index i = 0; i < fresh.rows(); ++i)
    CHECK(std::hypot(fresh(i, 0), fresh(i, 1)) <= 3.0 + cell * std::sqrt(2.0));
}

TEST_CASE("general replenish restores the original painted map") {
  ViewSet views;
  Dataset d = empty_dataset(4);
  Eigen::Vector4d x(1, 1, 0, 0), y(0, 0, 1, 1);
  const auto v = views.add(d, ViewDescriptor::general({x.normalized(), y.normalized()}));
  const auto other = views.add(d, ViewDescriptor::general({Eigen::Vector4d(1, 0, 1, 0).normalized(), Eigen::Vector4d(0, 1, 0, 1).normalized()}));
  views.plane(v, 0).designer = rasterize_painted_shape(rectangle(-8, 8, -4, 4), views.at(v).extent);
  Rng rng(8);
  d = backproject_view(d, views, v, 0, 10000, rng);
  d = carve(d, views, other, CarveSpec{{0.0, 0.0}, 4.0, 1.0}, {}, rng).data;
  const auto r = replenish_general(d, views, v, 0, rng);
  CHECK(r.data.rows_of_cluster(0).size() == 10000);
  const auto& plane = views.at(v).clusters.at(0);
  CHECK(normalized_emd(plane.current, plane.original->cells, views.at(v).extent) < 0.05);
}

TEST_CASE("rebind drops sculpt state when an axis range changes") {
  Rng rng(9);
  Dataset d = create_default_dataset(rng, 100, 3);
  ViewSet views;
  views.add(d, ViewDescriptor::axis_aligned(0, 1), 16);
  views.add(d, ViewDescriptor::axis_aligned(1, 2), 16);
  d = carve(d, views, 0, CarveSpec{{0.0, 0.0}, 5.0, 1.0}, {}, rng).data;
  d = set_dimension_range(d, 0, -20.0, 20.0);
  views.rebind(d);
  REQUIRE(views.size() == 2);
  CHECK_FALSE(views.at(0).clusters.at(0).defined);
  CHECK(views.at(0).extent.x_lo == -20.0);
}

TEST_CASE("permuting dimensions follows axis-aligned views") {
  Rng rng(10);
  Dataset d = create_default_dataset(rng, 50, 4);
  ViewSet views;
  views.add(d, ViewDescriptor::axis_aligned(0, 3), 16);
  const auto perm = reorder_permutation(4, 0, 2);
  views.permute_dimensions(perm);
  CHECK(views.at(0).view.dim_x == perm[0]);
  CHECK(views.at(0).view.dim_y == perm[3]);
}
