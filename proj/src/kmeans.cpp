#include "sketchnd/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "sketchnd/error.hpp"

namespace sketchnd {

namespace {

KMeansResult lloyd(const PointTable& points, std::size_t k, std::size_t max_iterations, Rng& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.index(n - i)]);

  KMeansResult r;
  r.centers.resize(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t c = 0; c < k; ++c) r.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(order[c]));
  r.labels.assign(n, -1);

  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    bool changed = false;
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const double d = (r.centers.rowwise() - points.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      r.inertia += d;
      if (r.labels[i] != static_cast<int>(best)) {
        r.labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(r.centers.rows(), r.centers.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(r.labels[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(r.labels[i])];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0) r.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
  }
  return r;
}

}  // namespace

KMeansResult kmeans(const PointTable& points, const KMeansOptions& options, Rng& rng) {
  if (options.k == 0) throw ValidationError("k must be positive");
  if (static_cast<std::size_t>(points.rows()) < options.k) throw ValidationError("fewer points than clusters");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < std::max<std::size_t>(options.restarts, 1); ++run) {
    auto r = lloyd(points, options.k, options.max_iterations, rng);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

double best_permutation_accuracy(std::span<const int> truth, std::span<const int> predicted, std::size_t k) {
  if (truth.size() != predicted.size()) throw ValidationError("label vectors differ in length");
  if (truth.empty()) throw ValidationError("no labels to compare");
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= k ||
        static_cast<std::size_t>(predicted[i]) >= k)
      throw ValidationError("label outside [0, k)");
    confusion(predicted[i], truth[i]) += 1.0;
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double hits = 0.0;
    for (std::size_t p = 0; p < k; ++p) hits += confusion(static_cast<Eigen::Index>(p), perm[p]);
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(truth.size());
}

Eigen::MatrixXd cluster_means(const PointTable& points, std::span<const int> labels, std::size_t k) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums.row(labels[i]) += points.row(static_cast<Eigen::Index>(i));
    counts(labels[i]) += 1.0;
  }
  for (Eigen::Index c = 0; c < sums.rows(); ++c) {
    if (counts(c) > 0.0) sums.row(c) /= counts(c);
    else sums.row(c).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  return sums;
}

Dataset gaussian_blobs(Rng& rng, std::size_t k, std::size_t per_cluster, std::size_t dims, double separation) {
  PointTable points(static_cast<Eigen::Index>(k * per_cluster), static_cast<Eigen::Index>(dims));
  std::vector<int> labels;
  labels.reserve(k * per_cluster);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_cluster; ++i) {
      const auto row = static_cast<Eigen::Index>(c * per_cluster + i);
      for (Eigen::Index d = 0; d < points.cols(); ++d) points(row, d) = rng.normal();
      points(row, 0) += separation * static_cast<double>(c);
      labels.push_back(static_cast<int>(c));
    }
  }
  double lo = 0.0;
  double hi = 1.0;
  if (points.size() > 0) {
    lo = points.minCoeff() - 1.0;
    hi = points.maxCoeff() + 1.0;
  }
  return Dataset(make_dimensions(dims, lo, hi), std::move(points), std::move(labels));
}

}  // namespace sketchnd
