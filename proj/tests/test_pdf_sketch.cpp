#include <cmath>

#include "doctest.h"
#include "sketchnd/error.hpp"
#include "sketchnd/pdf_sketch.hpp"
#include "support.hpp"

using namespace sketchnd;

namespace {

DimensionSpec axis(double min, double max) { return {"v", min, max}; }

DiscretePdf triangle_pdf(const DimensionSpec& a, double peak) {
  const std::vector<Point2> curve{{a.min, 0.0}, {peak, 1.0}, {a.max, 0.0}};
  return curve_to_pdf(curve, a, 0);
}

double triangle_cdf(double x, double lo, double peak, double hi) {
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  if (x <= peak) return (x - lo) * (x - lo) / ((hi - lo) * (peak - lo));
  return 1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - peak));
}

}  // namespace

TEST_CASE("resample_stroke spaces K points evenly along the polyline") {
  const std::vector<Point2> stroke{{0, 0}, {3, 0}, {3, 4}};
  const auto out = resample_stroke(stroke, 8);
  REQUIRE(out.size() == 8);
  CHECK(out.front().isApprox(Point2(0, 0)));
  CHECK(out.back().isApprox(Point2(3, 4)));
  for (std::size_t i = 1; i < out.size(); ++i) {
    // Consecutive samples are 1 unit apart along the path; chords can only be shorter.
    CHECK((out[i] - out[i - 1]).norm() <= 1.0 + 1e-12);
  }
  CHECK(out[3].isApprox(Point2(3, 0)));
  CHECK_THROWS_AS(resample_stroke(std::vector<Point2>{{1, 1}, {1, 1}}, 4), ValidationError);
  CHECK_THROWS_AS(resample_stroke(stroke, 1), ValidationError);
}

TEST_CASE("curve_to_pdf yields K non-negative samples with zero ends and unit area") {
  const auto a = axis(-10, 10);
  const std::vector<Point2> curve{{-8, 2.0}, {-2, 3.5}, {4, 2.5}, {9, 2.2}};
  const DiscretePdf pdf = curve_to_pdf(curve, a, 3);
  REQUIRE(pdf.size() == kDefaultPdfSamples);
  CHECK(pdf.dim == 3);
  CHECK(pdf.density(0) == 0.0);
  CHECK(pdf.density(pdf.density.size() - 1) == 0.0);
  CHECK(pdf.density.minCoeff() >= 0.0);
  CHECK(pdf.integral() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a flat curve is rejected as degenerate") {
  const auto a = axis(0, 1);
  const std::vector<Point2> flat{{0.1, 0.5}, {0.9, 0.5}};
  CHECK_THROWS_AS(curve_to_pdf(flat, a, 0), ValidationError);
}

TEST_CASE("CDF runs from 0 to 1 monotonically") {
  const auto pdf = triangle_pdf(axis(0, 1), 0.3);
  const auto cdf = pdf_to_cdf(pdf);
  REQUIRE(cdf.size() == pdf.size());
  CHECK(cdf.values(0) == 0.0);
  CHECK(cdf.values(cdf.values.size() - 1) == 1.0);
  for (Eigen::Index i = 1; i < cdf.values.size(); ++i) CHECK(cdf.values(i) >= cdf.values(i - 1));
}

TEST_CASE("uniform CDF inverts linearly") {
  const auto a = axis(-10, 10);
  const auto cdf = uniform_cdf(a);
  for (double u : {0.0, 0.1, 0.25, 0.5, 0.9, 0.999})
    CHECK(sample_inverse_transform(cdf, u) == doctest::Approx(-10.0 + 20.0 * u).epsilon(1e-12));
  CHECK_THROWS_AS(sample_inverse_transform(cdf, 1.0), ValidationError);
}

TEST_CASE("triangular sketch samples match the analytic triangle (KS)") {
  const auto a = axis(0, 1);
  const auto cdf = pdf_to_cdf(triangle_pdf(a, 0.3));
  Rng rng(2024);
  std::vector<double> v;
  for (int i = 0; i < 50000; ++i) v.push_back(sample_inverse_transform(cdf, rng.uniform()));
  const double ks = testing::ks_distance(v, [](double x) { return triangle_cdf(x, 0.0, 0.3, 1.0); });
  CHECK(ks < 0.01);
}

TEST_CASE("reversed axes sample inside their range") {
  const auto a = axis(10, -10);
  const auto pdf = triangle_pdf(a, 5.0);
  const auto cdf = pdf_to_cdf(pdf);
  Rng rng(1);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = sample_inverse_transform(cdf, rng.uniform());
    REQUIRE(x >= -10.0);
    REQUIRE(x <= 10.0);
    mean += x / 20000.0;
  }
  // Triangle (10, 5, -10): mean 5/3, sd about 4.25, so 4 standard errors.
  CHECK(std::abs(mean - 5.0 / 3.0) < 4.0 * 4.25 / std::sqrt(20000.0));
}

TEST_CASE("truncated sampler stays in the ranges and matches the renormalized law") {
  const auto a = axis(0, 1);
  const auto cdf = pdf_to_cdf(triangle_pdf(a, 0.5));
  const std::vector<ValueRange> ranges{{0.1, 0.3}, {0.8, 0.6}};
  const TruncatedSampler sampler(cdf, ranges);
  const auto tri = [](double x) { return triangle_cdf(x, 0.0, 0.5, 1.0); };
  const double mass = tri(0.3) - tri(0.1) + tri(0.8) - tri(0.6);
  CHECK(sampler.mass() == doctest::Approx(mass).epsilon(1e-3));

  Rng rng(5);
  std::vector<double> v;
  for (int i = 0; i < 40000; ++i) {
    const double x = sampler(rng);
    REQUIRE(((x >= 0.1 && x <= 0.3) || (x >= 0.6 && x <= 0.8)));
    v.push_back(x);
  }
  const auto truncated = [&](double x) {
    double c = 0.0;
    c += std::clamp(tri(x) - tri(0.1), 0.0, tri(0.3) - tri(0.1));
    c += std::clamp(tri(x) - tri(0.6), 0.0, tri(0.8) - tri(0.6));
    return c / mass;
  };
  CHECK(testing::ks_distance(v, truncated) < 0.015);
}

TEST_CASE("truncated sampler with no mass in range throws on sampling") {
  const auto a = axis(0, 1);
  const std::vector<Point2> curve{{0.0, 0.0}, {0.2, 1.0}, {0.4, 0.0}, {1.0, 0.0}};
  const auto cdf = pdf_to_cdf(curve_to_pdf(curve, a, 0));
  const std::vector<ValueRange> ranges{{0.7, 0.9}};
  const TruncatedSampler sampler(cdf, ranges);
  CHECK(sampler.mass() == 0.0);
  Rng rng(1);
  CHECK_THROWS_AS(sampler(rng), SamplingError);
}

TEST_CASE("clip_pdf zeroes density outside the ranges") {
  const auto a = axis(0, 1);
  const auto pdf = triangle_pdf(a, 0.5);
  const std::vector<ValueRange> ranges{{0.2, 0.6}};
  const auto clipped = clip_pdf(pdf, ranges);
  CHECK(clipped.integral() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < clipped.size(); ++k) {
    const double x = clipped.position(k);
    if (x < 0.19 || x > 0.61) CHECK(clipped.density(static_cast<Eigen::Index>(k)) == 0.0);
  }
  const std::vector<ValueRange> outside{{2.0, 3.0}};
  CHECK_THROWS_AS(clip_pdf(pdf, outside), ValidationError);
}

TEST_CASE("local minima include the dip between two modes and both ends") {
  const auto a = axis(0, 100);
  std::vector<Point2> curve;
  for (int v = 0; v <= 100; ++v)
    curve.emplace_back(v, std::exp(-std::pow((v - 25) / 8.0, 2)) + std::exp(-std::pow((v - 75) / 8.0, 2)));
  const auto minima = pdf_local_minima(curve_to_pdf(curve, a, 0));
  REQUIRE(minima.size() >= 3);
  CHECK(minima.front() == doctest::Approx(0.0));
  CHECK(minima.back() == doctest::Approx(100.0));
  bool middle = false;
  for (double m : minima) middle = middle || std::abs(m - 50.0) < 1.0;
  CHECK(middle);
}

TEST_CASE("apply_pdf_to_dimension rewrites one column only") {
  Rng rng(3);
  const Dataset d = create_default_dataset(rng, 200, 4);
  const auto pdf = [&] {
    auto p = triangle_pdf(d.dim(2), 4.0);
    p.dim = 2;
    return p;
  }();
  const std::vector<ValueRange> clip{{0.0, 6.0}};
  const Dataset out = apply_pdf_to_dimension(d, pdf, clip, rng);
  for (Eigen::Index c : {0, 1, 3}) CHECK(out.points().col(c) == d.points().col(c));
  CHECK(out.points().col(2).minCoeff() >= 0.0);
  CHECK(out.points().col(2).maxCoeff() <= 6.0);
  CHECK(out.labels() == d.labels());
}

TEST_CASE("match_axis picks the nearest axis within half a spacing") {
  const std::vector<double> xs{50, 150, 250};
  CHECK(match_axis(140, xs) == 1);
  CHECK(match_axis(60, xs) == 0);
  CHECK_THROWS_AS(match_axis(400, xs), ValidationError);
}
