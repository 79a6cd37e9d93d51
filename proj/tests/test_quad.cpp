#include <cmath>

#include "doctest.h"
#include "sketchnd/error.hpp"
#include "sketchnd/quad.hpp"
#include "support.hpp"

using namespace sketchnd;

namespace {

std::vector<DimensionSpec> unit_dims(std::size_t n) { return make_dimensions(n, 0.0, 1.0); }

Quadrilateral quad_between(std::size_t left_axis, QuadKind kind, AxisRange left, AxisRange right, int cluster = 0) {
  Quadrilateral q;
  q.cluster = cluster;
  q.left_axis = left_axis;
  q.kind = kind;
  q.left = left;
  q.right = right;
  return q;
}

double linked_correlation(QuadKind kind, double c, std::uint64_t seed) {
  const auto dims = unit_dims(2);
  const std::vector<Quadrilateral> quads{quad_between(0, kind, {0.2, 0.8}, {0.1, 0.9})};
  Rng rng(seed);
  const auto samples = generate_cluster_samples(0, quads, {}, dims, c, 10000, rng);
  return testing::pearson(samples.points.col(0), samples.points.col(1));
}

}  // namespace

TEST_CASE("window fraction shrinks linearly with correlation") {
  CHECK(window_fraction(0.0, 0.02) == 1.0);
  CHECK(window_fraction(1.0, 0.02) == doctest::Approx(0.02));
  CHECK(window_fraction(0.5, 0.02) == doctest::Approx(0.51));
  CHECK(window_fraction(2.0, 0.02) == doctest::Approx(0.02));
}

TEST_CASE("a simple click polygon is a trapezoid, a crossing one a bowtie") {
  const auto dims = unit_dims(3);
  const std::array<Point2, 4> simple{Point2(1, 0.2), Point2(1, 0.6), Point2(2, 0.7), Point2(2, 0.3)};
  const auto t = classify_and_snap_quad(simple, dims, {}, 4);
  CHECK(t.kind == QuadKind::trapezoid);
  CHECK(t.left_axis == 1);
  CHECK(t.cluster == 4);
  CHECK(t.left.bottom == doctest::Approx(0.2));
  CHECK(t.left.top == doctest::Approx(0.6));
  CHECK(t.right.bottom == doctest::Approx(0.3));
  CHECK(t.right.top == doctest::Approx(0.7));

  const std::array<Point2, 4> crossing{Point2(1, 0.2), Point2(1, 0.6), Point2(2, 0.3), Point2(2, 0.7)};
  CHECK(classify_and_snap_quad(crossing, dims, {}, 0).kind == QuadKind::bowtie);
}

TEST_CASE("vertices near a tick snap onto it") {
  const auto dims = unit_dims(2);
  const std::vector<SnapTick> ticks{{0, 0.5, TickOrigin::pdf_local_minimum}, {1, 0.25, TickOrigin::quad_vertex}};
  const std::array<Point2, 4> clicks{Point2(0, 0.1), Point2(0, 0.51), Point2(1, 0.26), Point2(1, 0.05)};
  const auto q = classify_and_snap_quad(clicks, dims, ticks, 0);
  CHECK(q.left.top == 0.5);
  CHECK(q.right.top == 0.25);
  CHECK(q.left.bottom == doctest::Approx(0.1));
  const std::array<Point2, 4> far{Point2(0, 0.1), Point2(0, 0.53), Point2(1, 0.3), Point2(1, 0.05)};
  CHECK(classify_and_snap_quad(far, dims, ticks, 0).left.top == doctest::Approx(0.53));
}

TEST_CASE("quads must join one adjacent axis pair") {
  const auto dims = unit_dims(4);
  const std::array<Point2, 4> wide{Point2(0, 0.2), Point2(0, 0.6), Point2(2, 0.7), Point2(2, 0.3)};
  CHECK_THROWS_AS(classify_and_snap_quad(wide, dims, {}, 0), ValidationError);
  const std::array<Point2, 4> outside{Point2(3, 0.2), Point2(3, 0.6), Point2(4, 0.7), Point2(4, 0.3)};
  CHECK_THROWS_AS(classify_and_snap_quad(outside, dims, {}, 0), ValidationError);
  const std::array<Point2, 4> flat{Point2(0, 0.2), Point2(0, 0.2), Point2(1, 0.7), Point2(1, 0.3)};
  CHECK_THROWS_AS(classify_and_snap_quad(flat, dims, {}, 0), ValidationError);
}

TEST_CASE("collect_ticks merges nearby ticks on the same axis") {
  const auto dims = unit_dims(2);
  const std::vector<Quadrilateral> quads{quad_between(0, QuadKind::trapezoid, {0.2, 0.5}, {0.3, 0.6}),
                                         quad_between(0, QuadKind::trapezoid, {0.205, 0.9}, {0.3, 0.7})};
  const auto ticks = collect_ticks({}, quads, dims);
  std::size_t on_left = 0;
  for (const auto& t : ticks) on_left += t.axis == 0;
  CHECK(on_left == 3);
}

TEST_CASE("linked values land inside the right range and the window") {
  const auto dims = unit_dims(2);
  const auto q = quad_between(0, QuadKind::trapezoid, {0.0, 1.0}, {0.2, 0.6});
  const std::vector<ValueRange> range{{0.2, 0.6}};
  const TruncatedSampler sampler(uniform_cdf(dims[1]), range);
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double prev = rng.uniform();
    const auto v = sample_linked_value(prev, q, 0.8, sampler, rng);
    REQUIRE(v.value >= 0.2);
    REQUIRE(v.value <= 0.6);
    const double s = q.right.relative(v.value);
    CHECK(std::abs(s - prev) <= 0.5 * window_fraction(0.8, 0.02) + 1e-12);
  }
}

TEST_CASE("an exhausted rejection budget falls back and says so") {
  const auto dims = unit_dims(2);
  const auto q = quad_between(0, QuadKind::trapezoid, {0.0, 1.0}, {0.0, 1.0});
  const TruncatedSampler sampler(uniform_cdf(dims[1]), {});
  QuadConfig config;
  config.rejection_budget = 0;
  Rng rng(2);
  const auto v = sample_linked_value(0.5, q, 1.0, sampler, rng, config);
  CHECK(v.fallback);
  CHECK(std::abs(v.value - 0.5) <= 0.01 + 1e-12);
}

TEST_CASE("trapezoids correlate positively, bowties negatively") {
  CHECK(linked_correlation(QuadKind::trapezoid, 0.9, 1) > 0.8);
  CHECK(linked_correlation(QuadKind::bowtie, 0.9, 2) < -0.8);
}

TEST_CASE("correlation strength grows with the slider") {
  for (auto kind : {QuadKind::trapezoid, QuadKind::bowtie}) {
    double previous = -1.0;
    for (double c : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double r = std::abs(linked_correlation(kind, c, 7));
      CHECK(r >= previous - 0.02);
      previous = r;
    }
  }
}

TEST_CASE("samples respect quad ranges on both axes") {
  const auto dims = make_dimensions(3, -10.0, 10.0);
  const std::vector<Quadrilateral> quads{quad_between(0, QuadKind::trapezoid, {-5, 5}, {0, 8}),
                                         quad_between(1, QuadKind::bowtie, {0, 8}, {-9, -1})};
  Rng rng(3);
  const auto s = generate_cluster_samples(0, quads, {}, dims, 0.5, 2000, rng);
  CHECK(s.points.col(0).minCoeff() >= -5.0);
  CHECK(s.points.col(0).maxCoeff() <= 5.0);
  CHECK(s.points.col(1).minCoeff() >= 0.0);
  CHECK(s.points.col(1).maxCoeff() <= 8.0);
  CHECK(s.points.col(2).minCoeff() >= -9.0);
  CHECK(s.points.col(2).maxCoeff() <= -1.0);
}

TEST_CASE("quads of other clusters are ignored") {
  const auto dims = unit_dims(2);
  const std::vector<Quadrilateral> quads{quad_between(0, QuadKind::trapezoid, {0.0, 0.1}, {0.0, 0.1}, 5)};
  Rng a(9);
  Rng b(9);
  const auto with = generate_cluster_samples(0, quads, {}, dims, 0.5, 100, a);
  const auto without = generate_cluster_samples(0, {}, {}, dims, 0.5, 100, b);
  CHECK(with.points == without.points);
}

TEST_CASE("remap_quads detaches quads whose axes separate") {
  const std::vector<Quadrilateral> quads{quad_between(0, QuadKind::trapezoid, {0, 1}, {0, 1}),
                                         quad_between(2, QuadKind::bowtie, {0, 1}, {0, 1})};
  // Move axis 0 to position 3: old 1,2,3 shift left.
  const std::vector<std::size_t> perm{3, 0, 1, 2};
  const auto r = remap_quads(quads, perm);
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].left_axis == 1);
  CHECK(r.kept[0].kind == QuadKind::bowtie);
  CHECK(r.detached.size() == 1);
}

TEST_CASE("quad ranges on an axis collect both sides") {
  const std::vector<Quadrilateral> quads{quad_between(0, QuadKind::trapezoid, {0.1, 0.2}, {0.3, 0.4}),
                                         quad_between(1, QuadKind::trapezoid, {0.5, 0.6}, {0.7, 0.8})};
  const auto r = quad_ranges_on_axis(quads, 1);
  REQUIRE(r.size() == 2);
  CHECK(quad_ranges_on_axis(quads, 2).size() == 1);
  CHECK(quad_ranges_on_axis(quads, 3).empty());
}
