#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sketchnd/random.hpp"

namespace sketchnd {

/// P x N table of coordinates, one row per point.
using PointTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One axis of the dataset. `min` and `max` are the display/sampling range in
/// data units; min > max denotes a reversed axis. They never clamp data.
struct DimensionSpec {
  std::string name;
  double min = 0.0;
  double max = 1.0;

  double lo() const { return min < max ? min : max; }
  double hi() const { return min < max ? max : min; }
  /// Signed extent, negative for reversed axes.
  double span() const { return max - min; }
  double length() const { return hi() - lo(); }

  /// Maps a value to its position along the axis, 0 at `min` and 1 at `max`.
  double normalized(double value) const { return (value - min) / (max - min); }
  double at(double t) const { return min + t * (max - min); }

  friend bool operator==(const DimensionSpec&, const DimensionSpec&) = default;
};

struct DatasetConfig {
  int cluster_cap = 10;
};

/// Per-cluster editing state shared by both sketching paradigms.
struct ClusterState {
  int id = 0;
  std::string color;
  std::size_t sample_count = 0;
  /// Correlation slider value in [0, 1], stored per cluster.
  double correlation = 0.5;
  bool active = true;

  friend bool operator==(const ClusterState&, const ClusterState&) = default;
};

/// Color tag for cluster `id`; cycles past the built-in palette.
std::string cluster_color(int id);

/// Ordered dimensions, a point table and one cluster label per point.
///
/// Values are snapshots: every editing function returns a new Dataset.
class Dataset {
 public:
  Dataset() = default;
  /// Throws ValidationError when the pieces disagree in shape, names repeat,
  /// an axis has min == max, or a label falls outside [0, cluster_cap).
  Dataset(std::vector<DimensionSpec> dims, PointTable points, std::vector<int> labels,
          DatasetConfig config = {});

  const std::vector<DimensionSpec>& dims() const { return dims_; }
  const DimensionSpec& dim(std::size_t i) const { return dims_.at(i); }
  const PointTable& points() const { return points_; }
  const std::vector<int>& labels() const { return labels_; }
  const DatasetConfig& config() const { return config_; }

  std::size_t num_points() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t num_dims() const { return dims_.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Rows whose label equals `cluster`, in table order.
  std::vector<std::size_t> rows_of_cluster(int cluster) const;
  /// One past the largest label in use, 0 for an empty table.
  int cluster_count() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dims_ == b.dims_ && a.labels_ == b.labels_ &&
           a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_;
  }

 private:
  std::vector<DimensionSpec> dims_;
  PointTable points_;
  std::vector<int> labels_;
  DatasetConfig config_;
};

/// Dimensions named x1..xN, each spanning [lo, hi].
std::vector<DimensionSpec> make_dimensions(std::size_t n, double lo, double hi);

/// Uniform cluster 0 over [lo, hi]^dims. Defaults reproduce the prepopulated
/// 500 x 7 dataset over [-10, 10].
Dataset create_default_dataset(Rng& rng, std::size_t points = 500, std::size_t dims = 7,
                               double lo = -10.0, double hi = 10.0);

/// Parses whitespace-separated text. The first line holds dimension names
/// unless every token is numeric, in which case names default to x1..xN. A
/// final header column named exactly "cluster" carries integer labels.
/// Axis ranges are set to the observed per-dimension extremes.
Dataset import_dataset(std::string_view text, DatasetConfig config = {});

/// Header line plus one row per point, single-space separated, LF endings,
/// shortest round-trip reals, trailing "cluster" column.
std::string export_dataset(const Dataset& data);

/// Comma-separated variant of export_dataset.
std::string export_dataset_csv(const Dataset& data);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_real(double value);

/// new_index[old] after moving dimension `from` to position `to`.
std::vector<std::size_t> reorder_permutation(std::size_t n, std::size_t from, std::size_t to);

Dataset reorder_dimension(const Dataset& data, std::size_t from, std::size_t to);
Dataset set_dimension_range(const Dataset& data, std::size_t dim, double min, double max);
Dataset rename_dimension(const Dataset& data, std::size_t dim, std::string name);

/// Drops cluster `cluster`'s rows (other rows keep their order) and appends
/// `points` labelled `cluster`.
Dataset replace_cluster(const Dataset& data, int cluster, const PointTable& points);
Dataset append_points(const Dataset& data, int cluster, const PointTable& points);
Dataset remove_rows(const Dataset& data, std::span<const std::size_t> rows);

}  // namespace sketchnd
