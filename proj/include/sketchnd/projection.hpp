#pragma once

// N-D to 2D view machinery: mean-value barycentric coordinates on the
// touchpad polygon, projection-plane axis (PPA) construction, Gram-Schmidt
// basis completion and rotation between basis and data coordinates.
//
// Everything here is templated on the scalar type and header-only.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchnd/error.hpp"
#include "sketchnd/random.hpp"

namespace sketchnd {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
/// Polygon vertices as columns, in boundary order.
template <typename Scalar>
using Polygon2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

namespace detail {

template <typename Scalar>
Scalar cross2(const Vector2<Scalar>& a, const Vector2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <typename Scalar>
Scalar default_tolerance() {
  return std::sqrt(std::numeric_limits<Scalar>::epsilon());
}

}  // namespace detail

/// Inside-or-on test using the crossing rule; points within `tol` (relative to
/// the polygon size) of an edge count as inside.
template <typename Scalar>
bool polygon_contains(const Polygon2<Scalar>& poly, const Vector2<Scalar>& p,
                      Scalar tol = detail::default_tolerance<Scalar>()) {
  const auto n = poly.cols();
  const Scalar scale = (poly.rowwise().maxCoeff() - poly.rowwise().minCoeff()).norm();
  bool inside = false;
  for (Eigen::Index i = 0, j = n - 1; i < n; j = i++) {
    const Vector2<Scalar> a = poly.col(j);
    const Vector2<Scalar> b = poly.col(i);
    const Vector2<Scalar> ab = b - a;
    const Scalar len2 = ab.squaredNorm();
    const Scalar t = len2 > Scalar(0) ? std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1)) : Scalar(0);
    if ((a + t * ab - p).norm() <= tol * scale) return true;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const Scalar x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

/// True when no two non-adjacent edges intersect.
template <typename Scalar>
bool polygon_is_simple(const Polygon2<Scalar>& poly) {
  const auto n = poly.cols();
  if (n < 3) return false;
  auto orient = [](const Vector2<Scalar>& a, const Vector2<Scalar>& b, const Vector2<Scalar>& c) {
    return detail::cross2<Scalar>(b - a, c - a);
  };
  auto sign = [](Scalar v) { return (v > Scalar(0)) - (v < Scalar(0)); };
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector2<Scalar> a = poly.col(i);
    const Vector2<Scalar> b = poly.col((i + 1) % n);
    if ((a - b).norm() == Scalar(0)) return false;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Vector2<Scalar> c = poly.col(j);
      const Vector2<Scalar> d = poly.col((j + 1) % n);
      const int o1 = sign(orient(a, b, c));
      const int o2 = sign(orient(a, b, d));
      const int o3 = sign(orient(c, d, a));
      const int o4 = sign(orient(c, d, b));
      if (o1 != o2 && o3 != o4) return false;
      if (o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0) return false;
    }
  }
  return true;
}

/// Mean-value coordinates of `p` with respect to the polygon: non-negative on
/// convex polygons, a partition of unity, and linearly precise
/// (sum_i w_i v_i = p). A vertex yields a one-hot vector and a point on an
/// edge interpolates its two endpoints. Throws ValidationError when `p` lies
/// outside the polygon.
template <typename Scalar>
VectorX<Scalar> mean_value_coordinates(const Polygon2<Scalar>& poly, const Vector2<Scalar>& p) {
  const auto n = poly.cols();
  if (n < 3) throw ValidationError("barycentric coordinates need a polygon with at least three vertices");
  if (!polygon_contains(poly, p)) throw ValidationError("point lies outside the touchpad polygon");

  const Scalar eps = std::numeric_limits<Scalar>::epsilon() * Scalar(64);
  const Scalar scale = (poly.rowwise().maxCoeff() - poly.rowwise().minCoeff()).norm();
  Polygon2<Scalar> d = poly.colwise() - p;
  VectorX<Scalar> r = d.colwise().norm().transpose();
  VectorX<Scalar> w = VectorX<Scalar>::Zero(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i) <= eps * scale) {
      w(i) = Scalar(1);
      return w;
    }
  }
  // tan(alpha_i / 2) for the signed angle at p subtended by edge (i, i+1).
  VectorX<Scalar> tan_half(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    const Vector2<Scalar> di = d.col(i);
    const Vector2<Scalar> dj = d.col(j);
    const Scalar area = detail::cross2<Scalar>(di, dj);
    const Scalar dot = di.dot(dj);
    if (std::abs(area) <= eps * r(i) * r(j) && dot < Scalar(0)) {
      w(i) = r(j) / (r(i) + r(j));
      w(j) = r(i) / (r(i) + r(j));
      return w;
    }
    tan_half(i) = area / (r(i) * r(j) + dot);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index prev = (i + n - 1) % n;
    w(i) = (tan_half(prev) + tan_half(i)) / r(i);
  }
  return w / w.sum();
}

/// The two orthonormal N-D vectors spanning a scatterplot's projection plane.
template <typename Scalar>
struct PpaBasis {
  VectorX<Scalar> x_axis;
  VectorX<Scalar> y_axis;

  Eigen::Index dims() const { return x_axis.size(); }
};

/// Touchpad polygon: one vertex per dimension (`vertex_dims[k]` is the data
/// dimension at vertex k), plus the red (PPA x) and blue (PPA y) points.
template <typename Scalar>
struct TouchpadPolygon {
  Polygon2<Scalar> vertices;
  std::vector<std::size_t> vertex_dims;
  Vector2<Scalar> red = Vector2<Scalar>::Zero();
  Vector2<Scalar> blue = Vector2<Scalar>::Zero();

  /// Regular n-gon of circumradius 1 starting at the top, vertex k = dim k.
  static TouchpadPolygon regular(std::size_t n) {
    TouchpadPolygon poly;
    poly.vertices.resize(2, static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const Scalar angle = Scalar(std::numbers::pi / 2) + Scalar(2 * std::numbers::pi) * Scalar(k) / Scalar(n);
      poly.vertices.col(static_cast<Eigen::Index>(k)) << std::cos(angle), std::sin(angle);
      poly.vertex_dims.push_back(k);
    }
    return poly;
  }

  Vector2<Scalar> vertex(std::size_t k) const { return vertices.col(static_cast<Eigen::Index>(k)); }

  /// Swaps which dimensions sit at vertices a and b; the shape is unchanged.
  void interchange(std::size_t a, std::size_t b) {
    if (a >= vertex_dims.size() || b >= vertex_dims.size()) throw ValidationError("vertex index out of range");
    std::swap(vertex_dims[a], vertex_dims[b]);
  }

  /// Inserts a vertex for `dim` at boundary position `at`. The polygon must
  /// stay simple.
  void add_vertex(std::size_t at, const Vector2<Scalar>& position, std::size_t dim) {
    if (at > vertex_dims.size()) throw ValidationError("vertex index out of range");
    for (auto d : vertex_dims)
      if (d == dim) throw ValidationError("dimension already has a touchpad vertex");
    Polygon2<Scalar> next(2, vertices.cols() + 1);
    const auto k = static_cast<Eigen::Index>(at);
    next.leftCols(k) = vertices.leftCols(k);
    next.col(k) = position;
    next.rightCols(vertices.cols() - k) = vertices.rightCols(vertices.cols() - k);
    if (!polygon_is_simple(next)) throw ValidationError("added vertex makes the touchpad polygon self-intersect");
    vertices = std::move(next);
    vertex_dims.insert(vertex_dims.begin() + static_cast<std::ptrdiff_t>(at), dim);
  }

  void remove_vertex(std::size_t at) {
    if (at >= vertex_dims.size()) throw ValidationError("vertex index out of range");
    if (vertex_dims.size() <= 3) throw ValidationError("touchpad polygon needs at least three vertices");
    Polygon2<Scalar> next(2, vertices.cols() - 1);
    const auto k = static_cast<Eigen::Index>(at);
    next.leftCols(k) = vertices.leftCols(k);
    next.rightCols(vertices.cols() - k - 1) = vertices.rightCols(vertices.cols() - k - 1);
    if (!polygon_is_simple(next)) throw ValidationError("removing the vertex makes the touchpad polygon self-intersect");
    vertices = std::move(next);
    vertex_dims.erase(vertex_dims.begin() + static_cast<std::ptrdiff_t>(at));
  }

  /// Barycentric weights of `p` scattered into an N-D vector by vertex_dims.
  VectorX<Scalar> dimension_weights(const Vector2<Scalar>& p, std::size_t dims) const {
    const VectorX<Scalar> w = mean_value_coordinates<Scalar>(vertices, p);
    VectorX<Scalar> out = VectorX<Scalar>::Zero(static_cast<Eigen::Index>(dims));
    for (std::size_t k = 0; k < vertex_dims.size(); ++k) {
      if (vertex_dims[k] >= dims) throw ValidationError("touchpad vertex refers to a missing dimension");
      out(static_cast<Eigen::Index>(vertex_dims[k])) += w(static_cast<Eigen::Index>(k));
    }
    return out;
  }
};

/// Raw x = weights(red), raw y = weights(blue); y is orthogonalized against x
/// and both are normalized. Throws ValidationError("degenerate view") when the
/// raw vectors are parallel.
template <typename Scalar>
PpaBasis<Scalar> ppa_from_touchpad(const TouchpadPolygon<Scalar>& pad, std::size_t dims) {
  if (pad.vertex_dims.size() != static_cast<std::size_t>(pad.vertices.cols()))
    throw ValidationError("touchpad vertex/dimension lists disagree");
  VectorX<Scalar> x = pad.dimension_weights(pad.red, dims);
  VectorX<Scalar> y = pad.dimension_weights(pad.blue, dims);
  x.normalize();
  for (int pass = 0; pass < 2; ++pass) y -= x.dot(y) * x;
  const Scalar norm = y.norm();
  if (!(norm > Scalar(1e-9))) throw ValidationError("degenerate view: red and blue points give parallel axes");
  return {x, y / norm};
}

/// Each row of `points` projected onto (x_axis, y_axis).
template <typename Derived, typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 2> project_points(const Eigen::MatrixBase<Derived>& points,
                                                        const PpaBasis<Scalar>& basis) {
  if (points.cols() != basis.dims())
    throw ValidationError("point dimensionality " + std::to_string(points.cols()) + " does not match basis " +
                          std::to_string(basis.dims()));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> out(points.rows(), 2);
  out.col(0).noalias() = points * basis.x_axis;
  out.col(1).noalias() = points * basis.y_axis;
  return out;
}

/// Orthonormalizes the columns of `vectors` in order. Each column is swept
/// twice against the previous ones (modified Gram-Schmidt with
/// reorthogonalization), which keeps the Gram matrix at identity to rounding
/// error. Throws ValidationError when a column is dependent on its
/// predecessors (residual below `tolerance` relative to its norm).
template <typename Scalar>
MatrixX<Scalar> gram_schmidt(const MatrixX<Scalar>& vectors, Scalar tolerance = Scalar(1e-10)) {
  MatrixX<Scalar> e = vectors;
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    const Scalar original = vectors.col(j).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) e.col(j) -= e.col(i).dot(e.col(j)) * e.col(i);
    const Scalar norm = e.col(j).norm();
    if (!(norm > tolerance * original) || !(original > Scalar(0)))
      throw ValidationError("vectors are linearly dependent");
    e.col(j) /= norm;
  }
  return e;
}

/// Full orthonormal basis (as columns) whose first two columns are the
/// orthonormalized (x, y). The remaining N-2 come from random vectors with
/// components uniform in [-1, 1], redrawn while their residual after
/// orthogonalization is below 1e-8.
template <typename Scalar>
MatrixX<Scalar> gram_schmidt_complete(const VectorX<Scalar>& x, const VectorX<Scalar>& y, Rng& rng) {
  const Eigen::Index n = x.size();
  if (y.size() != n) throw ValidationError("basis vectors differ in dimensionality");
  if (n < 2) throw ValidationError("a projection plane needs at least two dimensions");
  MatrixX<Scalar> basis(n, n);
  MatrixX<Scalar> plane(n, 2);
  plane << x, y;
  try {
    basis.leftCols(2) = gram_schmidt<Scalar>(plane, Scalar(1e-9));
  } catch (const ValidationError&) {
    throw ValidationError("projection axes are parallel");
  }
  for (Eigen::Index j = 2; j < n; ++j) {
    for (;;) {
      VectorX<Scalar> v(n);
      for (Eigen::Index k = 0; k < n; ++k) v(k) = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) v -= basis.col(i).dot(v) * basis.col(i);
      const Scalar norm = v.norm();
      if (norm < Scalar(1e-8)) continue;
      basis.col(j) = v / norm;
      break;
    }
  }
  return basis;
}

/// Coordinates of a data point in the orthonormal basis (columns).
template <typename Scalar>
VectorX<Scalar> express_in_basis(const VectorX<Scalar>& point, const MatrixX<Scalar>& basis) {
  return basis.transpose() * point;
}

/// Data coordinates of a point given in the basis: sum_i coords_i basis_i.
template <typename Scalar>
VectorX<Scalar> rotate_to_data_coords(const VectorX<Scalar>& coords, const MatrixX<Scalar>& basis) {
  if (coords.size() != basis.cols()) throw ValidationError("coordinate count does not match the basis");
  return basis * coords;
}

using PpaBasisd = PpaBasis<double>;
using TouchpadPolygond = TouchpadPolygon<double>;

}  // namespace sketchnd
