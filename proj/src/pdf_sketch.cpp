#include "sketchnd/pdf_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sketchnd/error.hpp"

namespace sketchnd {

double DiscretePdf::spacing() const {
  return std::abs(axis_max - axis_min) / static_cast<double>(size() - 1);
}

double DiscretePdf::position(std::size_t k) const {
  return axis_min + (axis_max - axis_min) * static_cast<double>(k) / static_cast<double>(size() - 1);
}

double DiscretePdf::integral() const {
  const auto n = density.size();
  if (n < 2) return 0.0;
  return spacing() * (density.sum() - 0.5 * (density(0) + density(n - 1)));
}

double DiscreteCdf::at(double value) const {
  const double last = static_cast<double>(size() - 1);
  const double t = std::clamp((value - axis_min) / (axis_max - axis_min) * last, 0.0, last);
  const auto i = std::min(static_cast<Eigen::Index>(t), values.size() - 2);
  const double frac = t - static_cast<double>(i);
  return values(i) + frac * (values(i + 1) - values(i));
}

std::vector<Point2> resample_stroke(std::span<const Point2> stroke, std::size_t k) {
  if (k < 2) throw ValidationError("resampling needs at least two output points");
  std::vector<double> arc{0.0};
  arc.reserve(stroke.size());
  for (std::size_t i = 1; i < stroke.size(); ++i) arc.push_back(arc.back() + (stroke[i] - stroke[i - 1]).norm());
  if (stroke.size() < 2 || !(arc.back() > 0.0))
    throw ValidationError("stroke needs at least two distinct points");

  const double total = arc.back();
  std::vector<Point2> out;
  out.reserve(k);
  std::size_t seg = 1;
  for (std::size_t j = 0; j < k; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(k - 1);
    while (seg + 1 < arc.size() && arc[seg] < s) ++seg;
    const double len = arc[seg] - arc[seg - 1];
    const double f = len > 0.0 ? std::clamp((s - arc[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(stroke[seg - 1] + f * (stroke[seg] - stroke[seg - 1]));
  }
  out.back() = stroke.back();
  return out;
}

DiscretePdf curve_to_pdf(std::span<const Point2> curve, const DimensionSpec& axis, std::size_t dim,
                         std::size_t k) {
  if (k < 3) throw ValidationError("a PDF needs at least three samples");
  if (curve.size() < 2) throw ValidationError("PDF curve needs at least two points");

  double floor = std::numeric_limits<double>::infinity();
  for (const auto& p : curve) floor = std::min(floor, p.y());

  // Axis-normalized polyline with both ends dropped to the baseline.
  std::vector<Point2> line;
  line.reserve(curve.size() + 2);
  auto to_t = [&](double v) { return std::clamp(axis.normalized(v), 0.0, 1.0); };
  line.emplace_back(to_t(curve.front().x()), 0.0);
  for (const auto& p : curve) line.emplace_back(to_t(p.x()), p.y() - floor);
  line.emplace_back(to_t(curve.back().x()), 0.0);

  DiscretePdf pdf;
  pdf.dim = dim;
  pdf.axis_min = axis.min;
  pdf.axis_max = axis.max;
  pdf.density = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  const double last = static_cast<double>(k - 1);
  for (std::size_t s = 1; s < line.size(); ++s) {
    const Point2& a = line[s - 1];
    const Point2& b = line[s];
    if (a.x() == b.x()) continue;
    const double t0 = std::min(a.x(), b.x());
    const double t1 = std::max(a.x(), b.x());
    const auto first = static_cast<std::size_t>(std::max(1.0, std::ceil(t0 * last)));
    const auto stop = static_cast<std::size_t>(std::min(last - 1.0, std::floor(t1 * last)));
    for (std::size_t i = first; i <= stop && i + 1 < k; ++i) {
      const double t = static_cast<double>(i) / last;
      const double h = a.y() + (b.y() - a.y()) * (t - a.x()) / (b.x() - a.x());
      auto& d = pdf.density(static_cast<Eigen::Index>(i));
      d = std::max(d, h);
    }
  }
  const double area = pdf.integral();
  if (!(area > 0.0)) throw ValidationError("degenerate PDF: curve has no height above its lowest point");
  pdf.density /= area;
  return pdf;
}

DiscreteCdf pdf_to_cdf(const DiscretePdf& pdf) {
  const auto n = pdf.density.size();
  if (n < 2) throw ValidationError("PDF has fewer than two samples");
  DiscreteCdf cdf{pdf.axis_min, pdf.axis_max, Eigen::VectorXd::Zero(n)};
  const double h = pdf.spacing();
  for (Eigen::Index i = 1; i < n; ++i)
    cdf.values(i) = cdf.values(i - 1) + 0.5 * h * (pdf.density(i - 1) + pdf.density(i));
  const double total = cdf.values(n - 1);
  if (!(total > 0.0)) throw ValidationError("degenerate PDF: zero integral");
  cdf.values /= total;
  cdf.values(0) = 0.0;
  cdf.values(n - 1) = 1.0;
  return cdf;
}

DiscreteCdf uniform_cdf(const DimensionSpec& axis) {
  return DiscreteCdf{axis.min, axis.max, Eigen::Vector2d(0.0, 1.0)};
}

namespace {

// Fractional sample index where the piecewise-linear CDF first reaches u.
double cdf_inverse_index(const Eigen::VectorXd& v, double u) {
  const auto* begin = v.data();
  const auto* end = v.data() + v.size();
  const auto* it = std::upper_bound(begin, end, u);
  if (it == end) {
    // u at or above 1: end of the support.
    const auto* top = std::lower_bound(begin, end, v(v.size() - 1));
    return static_cast<double>(top - begin);
  }
  const auto j = it - begin;
  const double lo = v(j - 1);
  return static_cast<double>(j - 1) + (u - lo) / (v(j) - lo);
}

double cdf_at_index(const Eigen::VectorXd& v, double t) {
  const auto i = std::min(static_cast<Eigen::Index>(t), v.size() - 2);
  return v(i) + (t - static_cast<double>(i)) * (v(i + 1) - v(i));
}

}  // namespace

double sample_inverse_transform(const DiscreteCdf& cdf, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw ValidationError("inverse transform needs u in [0, 1)");
  const double last = static_cast<double>(cdf.size() - 1);
  const double t = std::clamp(cdf_inverse_index(cdf.values, u), 0.0, last);
  return cdf.axis_min + (cdf.axis_max - cdf.axis_min) * (t / last);
}

TruncatedSampler::TruncatedSampler(DiscreteCdf cdf, std::span<const ValueRange> ranges)
    : cdf_(std::move(cdf)) {
  const double last = static_cast<double>(cdf_.size() - 1);
  auto endpoint = [&](double v) {
    const double t = index_of_value(v);
    if (t <= 0.0) return std::pair{0.0, cdf_.axis_min};
    if (t >= last) return std::pair{last, cdf_.axis_max};
    return std::pair{t, v};
  };
  std::vector<Piece> spans;
  if (ranges.empty()) {
    spans.push_back({0.0, last, cdf_.axis_min, cdf_.axis_max, 0.0, 0.0});
  } else {
    for (const auto& r : ranges) {
      auto a = endpoint(r.a);
      auto b = endpoint(r.b);
      if (a.first > b.first) std::swap(a, b);
      spans.push_back({a.first, b.first, a.second, b.second, 0.0, 0.0});
    }
    std::sort(spans.begin(), spans.end(), [](const Piece& x, const Piece& y) { return x.t_lo < y.t_lo; });
  }
  for (const auto& s : spans) {
    if (!pieces_.empty() && s.t_lo <= pieces_.back().t_hi) {
      if (s.t_hi > pieces_.back().t_hi) {
        pieces_.back().t_hi = s.t_hi;
        pieces_.back().v_hi = s.v_hi;
      }
    } else {
      pieces_.push_back(s);
    }
  }
  for (auto& p : pieces_) {
    p.f_lo = cdf_at_index(cdf_.values, p.t_lo);
    p.f_hi = cdf_at_index(cdf_.values, p.t_hi);
    mass_ += p.f_hi - p.f_lo;
    cumulative_.push_back(mass_);
  }
}

double TruncatedSampler::value_at_index(double t) const {
  return cdf_.axis_min + (cdf_.axis_max - cdf_.axis_min) * (t / static_cast<double>(cdf_.size() - 1));
}

double TruncatedSampler::index_of_value(double v) const {
  return (v - cdf_.axis_min) / (cdf_.axis_max - cdf_.axis_min) * static_cast<double>(cdf_.size() - 1);
}

double TruncatedSampler::inverse_index(double u) const { return cdf_inverse_index(cdf_.values, u); }

double TruncatedSampler::sample(double u) const {
  if (!(mass_ > 0.0)) throw SamplingError("truncated distribution has no mass");
  const double target = u * mass_;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  const Piece& p = pieces_[idx];
  const double before = idx == 0 ? 0.0 : cumulative_[idx - 1];
  const double f = std::min(p.f_lo + (target - before), p.f_hi);
  const double t = std::clamp(inverse_index(f), p.t_lo, p.t_hi);
  return std::clamp(value_at_index(t), std::min(p.v_lo, p.v_hi), std::max(p.v_lo, p.v_hi));
}

double TruncatedSampler::operator()(Rng& rng) const { return sample(rng.uniform()); }

DiscretePdf clip_pdf(const DiscretePdf& pdf, std::span<const ValueRange> ranges) {
  if (ranges.empty()) return pdf;
  DiscretePdf out = pdf;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double v = out.position(k);
    const bool inside = std::any_of(ranges.begin(), ranges.end(), [v](const ValueRange& r) { return r.contains(v); });
    if (!inside) out.density(static_cast<Eigen::Index>(k)) = 0.0;
  }
  const double area = out.integral();
  if (!(area > 0.0)) throw ValidationError("clipped PDF has no density inside the quadrilateral ranges");
  out.density /= area;
  return out;
}

std::vector<double> pdf_local_minima(const DiscretePdf& pdf) {
  const auto& d = pdf.density;
  const auto n = static_cast<std::size_t>(d.size());
  std::size_t s = n;
  std::size_t e = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d(static_cast<Eigen::Index>(i)) > 0.0) {
      s = std::min(s, i);
      e = i;
    }
  }
  if (s == n) return {};

  auto at = [&](std::size_t i) { return d(static_cast<Eigen::Index>(i)); };
  std::vector<double> out;
  out.push_back(pdf.position(s > 0 ? s - 1 : 0));
  for (std::size_t a = s; a <= e;) {
    std::size_t b = a;
    while (b + 1 <= e && at(b + 1) == at(a)) ++b;
    if (a > 0 && b + 1 < n && at(a - 1) > at(a) && at(b + 1) > at(b)) {
      const double mid = 0.5 * static_cast<double>(a + b);
      out.push_back(pdf.axis_min + (pdf.axis_max - pdf.axis_min) * mid / static_cast<double>(n - 1));
    }
    a = b + 1;
  }
  out.push_back(pdf.position(std::min(e + 1, n - 1)));
  return out;
}

Dataset apply_pdf_to_dimension(const Dataset& data, const DiscretePdf& pdf,
                               std::span<const ValueRange> clip, Rng& rng) {
  if (pdf.dim >= data.num_dims()) throw ValidationError("PDF dimension out of range");
  const TruncatedSampler sampler(pdf_to_cdf(pdf), clip);
  if (!(sampler.mass() > 0.0))
    throw ValidationError("PDF has zero density inside the clip ranges on '" + data.dim(pdf.dim).name + "'");
  PointTable table = data.points();
  const auto col = static_cast<Eigen::Index>(pdf.dim);
  for (Eigen::Index r = 0; r < table.rows(); ++r) table(r, col) = sampler(rng);
  return Dataset(data.dims(), std::move(table), data.labels(), data.config());
}

std::size_t match_axis(double x, std::span<const double> axis_x) {
  if (axis_x.empty()) throw ValidationError("no axes to match against");
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis_x.size(); ++i)
    if (std::abs(axis_x[i] - x) < std::abs(axis_x[best] - x)) best = i;
  if (axis_x.size() > 1) {
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < axis_x.size(); ++i) spacing = std::min(spacing, std::abs(axis_x[i] - axis_x[i - 1]));
    if (std::abs(axis_x[best] - x) > 0.5 * spacing)
      throw ValidationError("stroke starts too far from any axis");
  }
  return best;
}

}  // namespace sketchnd
