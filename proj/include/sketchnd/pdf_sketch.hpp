#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sketchnd/dataset.hpp"
#include "sketchnd/random.hpp"

namespace sketchnd {

using Point2 = Eigen::Vector2d;

/// Freehand stroke as captured, in canvas or axis-space coordinates.
struct Stroke {
  std::vector<Point2> points;
  int cluster = 0;
};

/// Sampled density over one axis. Sample k sits at axis.at(k / (K - 1)), so
/// the first sample is at `axis_min` and the last at `axis_max`. Densities are
/// per data unit and integrate (trapezoid rule) to one.
struct DiscretePdf {
  std::size_t dim = 0;
  double axis_min = 0.0;
  double axis_max = 1.0;
  Eigen::VectorXd density;

  std::size_t size() const { return static_cast<std::size_t>(density.size()); }
  double spacing() const;  ///< |axis_max - axis_min| / (K - 1)
  double position(std::size_t k) const;
  double integral() const;
};

/// Running trapezoid integral of a DiscretePdf, one entry per density sample,
/// from exactly 0 to exactly 1. Between samples the CDF is linear.
struct DiscreteCdf {
  double axis_min = 0.0;
  double axis_max = 1.0;
  Eigen::VectorXd values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  /// CDF at a data value, linear between samples.
  double at(double value) const;
};

/// Closed interval on an axis in data units; endpoints may come in any order.
struct ValueRange {
  double a = 0.0;
  double b = 0.0;
  double lo() const { return a < b ? a : b; }
  double hi() const { return a < b ? b : a; }
  bool contains(double v) const { return v >= lo() && v <= hi(); }
};

constexpr std::size_t kDefaultPdfSamples = 256;

/// K points at equal arc-length spacing along the polyline.
/// Throws ValidationError if K < 2 or the stroke has zero length.
std::vector<Point2> resample_stroke(std::span<const Point2> stroke, std::size_t k);

/// Interprets an axis-space curve of (value, height) pairs as a density over
/// `axis`. Heights are shifted so the lowest point touches the baseline, the
/// curve ends are dropped to the baseline, and the envelope is sampled at K
/// positions and normalized. Overwrites nothing; attaching is the caller's job.
/// Throws ValidationError("degenerate PDF") when nothing is left after the shift.
DiscretePdf curve_to_pdf(std::span<const Point2> curve, const DimensionSpec& axis, std::size_t dim,
                         std::size_t k = kDefaultPdfSamples);

DiscreteCdf pdf_to_cdf(const DiscretePdf& pdf);

/// Uniform distribution over the axis as a two-sample CDF.
DiscreteCdf uniform_cdf(const DimensionSpec& axis);

/// Inverse transform with linear (tent) interpolation inside the bracketing
/// bin. u must lie in [0, 1). Returns a value between axis_min and axis_max.
double sample_inverse_transform(const DiscreteCdf& cdf, double u);

/// Draws from a CDF restricted to a union of value ranges, renormalized.
/// Equivalent to rejection sampling against the ranges but exact and O(log K).
class TruncatedSampler {
 public:
  /// An empty `ranges` means the whole axis.
  TruncatedSampler(DiscreteCdf cdf, std::span<const ValueRange> ranges);

  /// Probability mass of the original CDF inside the ranges.
  double mass() const { return mass_; }
  double operator()(Rng& rng) const;
  double sample(double u) const;

 private:
  struct Piece {
    double t_lo;  // fractional sample index
    double t_hi;
    double v_lo;  // data values at t_lo / t_hi
    double v_hi;
    double f_lo;
    double f_hi;
  };
  double value_at_index(double t) const;
  double index_of_value(double v) const;
  double inverse_index(double u) const;

  DiscreteCdf cdf_;
  std::vector<Piece> pieces_;
  std::vector<double> cumulative_;
  double mass_ = 0.0;
};

/// Zeroes density outside the ranges and renormalizes; the displayed form of
/// a clipped sketch. Throws ValidationError if no mass remains.
DiscretePdf clip_pdf(const DiscretePdf& pdf, std::span<const ValueRange> ranges);

/// Local minima of the sketch plus the two baseline-extended endpoints, as
/// data values. Flat minima report the middle of the run.
std::vector<double> pdf_local_minima(const DiscretePdf& pdf);

/// Resamples column `pdf.dim` of every point (all clusters) i.i.d. from the
/// PDF, restricted to `clip` when non-empty. Other columns are copied bitwise.
Dataset apply_pdf_to_dimension(const Dataset& data, const DiscretePdf& pdf,
                               std::span<const ValueRange> clip, Rng& rng);

/// Index of the axis nearest to `x` among `axis_x` positions. Throws
/// ValidationError when the nearest axis is farther than half the spacing.
std::size_t match_axis(double x, std::span<const double> axis_x);

}  // namespace sketchnd
