#pragma once

// Lloyd's k-means and label-accuracy scoring, used by the CLI to check how a
// standard clusterer copes with a generated dataset.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sketchnd/dataset.hpp"
#include "sketchnd/random.hpp"

namespace sketchnd {

struct KMeansOptions {
  std::size_t k = 2;
  std::size_t restarts = 20;
  std::size_t max_iterations = 300;
};

struct KMeansResult {
  std::vector<int> labels;
  /// k x N, one center per row.
  Eigen::MatrixXd centers;
  /// Sum of squared distances to the assigned centers.
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Best of `restarts` Lloyd runs, each seeded with k distinct random rows.
/// Throws ValidationError when there are fewer rows than clusters.
KMeansResult kmeans(const PointTable& points, const KMeansOptions& options, Rng& rng);

/// Fraction of rows whose predicted label matches the truth under the best
/// relabelling of the predicted clusters. Labels must lie in [0, k).
double best_permutation_accuracy(std::span<const int> truth, std::span<const int> predicted, std::size_t k);

/// Per-cluster coordinate means, k x N. Empty clusters get NaN rows.
Eigen::MatrixXd cluster_means(const PointTable& points, std::span<const int> labels, std::size_t k);

/// `k` isotropic Gaussian blobs of `per_cluster` points in `dims`
/// dimensions, centers `separation` apart along the first axis, unit sigma.
Dataset gaussian_blobs(Rng& rng, std::size_t k, std::size_t per_cluster, std::size_t dims, double separation);

}  // namespace sketchnd
