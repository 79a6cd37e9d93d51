#include "sketchnd/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>

#include "sketchnd/error.hpp"

namespace sketchnd {

namespace {

constexpr std::string_view kClusterColumn = "cluster";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_real(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

std::optional<int> parse_label(std::string_view token) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

void validate_dims(const std::vector<DimensionSpec>& dims) {
  std::set<std::string> seen;
  for (const auto& d : dims) {
    if (d.name.empty()) throw ValidationError("dimension name must not be empty");
    if (d.name == kClusterColumn) throw ValidationError("dimension name 'cluster' is reserved");
    if (std::any_of(d.name.begin(), d.name.end(), [](char c) { return is_space(c) || c == '\n'; }))
      throw ValidationError("dimension name '" + d.name + "' contains whitespace");
    if (!seen.insert(d.name).second) throw ValidationError("duplicate dimension name '" + d.name + "'");
    if (!(d.min != d.max)) throw ValidationError("dimension '" + d.name + "' has min == max");
  }
}

std::string serialize(const Dataset& data, char sep) {
  if (data.num_points() == 0) throw ValidationError("cannot export an empty dataset");
  std::string out;
  for (const auto& d : data.dims()) {
    out += d.name;
    out += sep;
  }
  out += kClusterColumn;
  out += '\n';
  const auto& pts = data.points();
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      out += format_real(pts(r, c));
      out += sep;
    }
    out += std::to_string(data.labels()[static_cast<std::size_t>(r)]);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string cluster_color(int id) {
  static constexpr std::array<std::string_view, 10> kPalette = {
      "black", "red", "blue", "green", "orange", "purple", "cyan", "magenta", "brown", "olive"};
  const auto n = static_cast<int>(kPalette.size());
  std::string color(kPalette[static_cast<std::size_t>(((id % n) + n) % n)]);
  if (id >= n) color += "-" + std::to_string(id / n);
  return color;
}

Dataset::Dataset(std::vector<DimensionSpec> dims, PointTable points, std::vector<int> labels,
                 DatasetConfig config)
    : dims_(std::move(dims)), points_(std::move(points)), labels_(std::move(labels)), config_(config) {
  validate_dims(dims_);
  if (points_.rows() == 0 && points_.cols() == 0) points_.resize(0, static_cast<Eigen::Index>(dims_.size()));
  if (static_cast<std::size_t>(points_.cols()) != dims_.size())
    throw ValidationError("point table has " + std::to_string(points_.cols()) + " columns for " +
                          std::to_string(dims_.size()) + " dimensions");
  if (static_cast<std::size_t>(points_.rows()) != labels_.size())
    throw ValidationError("every point needs exactly one cluster label");
  if (config_.cluster_cap < 1) throw ValidationError("cluster cap must be positive");
  for (int label : labels_) {
    if (label < 0 || label >= config_.cluster_cap)
      throw ValidationError("cluster label " + std::to_string(label) + " outside [0, " +
                            std::to_string(config_.cluster_cap) + ")");
  }
}

std::optional<std::size_t> Dataset::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (dims_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::size_t> Dataset::rows_of_cluster(int cluster) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == cluster) rows.push_back(i);
  return rows;
}

int Dataset::cluster_count() const {
  int top = -1;
  for (int l : labels_) top = std::max(top, l);
  return top + 1;
}

std::vector<DimensionSpec> make_dimensions(std::size_t n, double lo, double hi) {
  std::vector<DimensionSpec> dims;
  dims.reserve(n);
  for (std::size_t i = 0; i < n; ++i) dims.push_back({"x" + std::to_string(i + 1), lo, hi});
  return dims;
}

Dataset create_default_dataset(Rng& rng, std::size_t points, std::size_t dims, double lo, double hi) {
  PointTable table(static_cast<Eigen::Index>(points), static_cast<Eigen::Index>(dims));
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    for (Eigen::Index c = 0; c < table.cols(); ++c) table(r, c) = rng.uniform(lo, hi);
  return Dataset(make_dimensions(dims, lo, hi), std::move(table), std::vector<int>(points, 0));
}

Dataset import_dataset(std::string_view text, DatasetConfig config) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  // Line numbers below are 1-based indices into `lines`.
  std::size_t first = 0;
  while (first < lines.size() && split_fields(lines[first]).empty()) ++first;
  if (first == lines.size()) throw ParseError(1, "empty dataset file");

  auto header = split_fields(lines[first]);
  const bool headerless = std::all_of(header.begin(), header.end(),
                                      [](std::string_view t) { return parse_real(t).has_value(); });
  std::vector<std::string> names;
  bool has_labels = false;
  std::size_t columns = header.size();
  if (headerless) {
    for (std::size_t i = 0; i < columns; ++i) names.push_back("x" + std::to_string(i + 1));
  } else {
    for (auto t : header) names.emplace_back(t);
    if (names.back() == kClusterColumn) {
      has_labels = true;
      names.pop_back();
    }
    ++first;
  }
  if (names.empty()) throw ParseError(first, "header declares no dimensions");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t li = first; li < lines.size(); ++li) {
    auto fields = split_fields(lines[li]);
    if (fields.empty()) continue;
    if (fields.size() != columns)
      throw ParseError(li + 1, "expected " + std::to_string(columns) + " fields, found " +
                                   std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
      auto v = parse_real(fields[c]);
      if (!v) throw ParseError(li + 1, "non-numeric value '" + std::string(fields[c]) + "'");
      row.push_back(*v);
    }
    if (has_labels) {
      auto l = parse_label(fields.back());
      if (!l) throw ParseError(li + 1, "cluster label '" + std::string(fields.back()) + "' is not an integer");
      if (*l < 0 || *l >= config.cluster_cap)
        throw ParseError(li + 1, "cluster label " + std::to_string(*l) + " exceeds the cluster cap");
      labels.push_back(*l);
    } else {
      labels.push_back(0);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(first + 1, "dataset has no rows");

  PointTable table(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c)
      table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];

  std::vector<DimensionSpec> dims;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto col = table.col(static_cast<Eigen::Index>(c));
    double lo = col.minCoeff();
    double hi = col.maxCoeff();
    if (lo == hi) {
      // A constant column still needs a non-degenerate axis.
      lo -= 0.5;
      hi += 0.5;
    }
    dims.push_back({names[c], lo, hi});
  }
  try {
    return Dataset(std::move(dims), std::move(table), std::move(labels), config);
  } catch (const ValidationError& e) {
    throw ParseError(first, e.what());
  }
}

std::string format_real(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string export_dataset(const Dataset& data) { return serialize(data, ' '); }

std::string export_dataset_csv(const Dataset& data) { return serialize(data, ','); }

std::vector<std::size_t> reorder_permutation(std::size_t n, std::size_t from, std::size_t to) {
  if (from >= n || to >= n)
    throw ValidationError("reorder ordinal out of range (" + std::to_string(from) + " -> " +
                          std::to_string(to) + ", " + std::to_string(n) + " dimensions)");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  order.erase(order.begin() + static_cast<std::ptrdiff_t>(from));
  order.insert(order.begin() + static_cast<std::ptrdiff_t>(to), from);
  std::vector<std::size_t> new_index(n);
  for (std::size_t pos = 0; pos < n; ++pos) new_index[order[pos]] = pos;
  return new_index;
}

Dataset reorder_dimension(const Dataset& data, std::size_t from, std::size_t to) {
  const auto new_index = reorder_permutation(data.num_dims(), from, to);
  std::vector<DimensionSpec> dims(data.num_dims());
  PointTable table(data.points().rows(), data.points().cols());
  for (std::size_t old = 0; old < new_index.size(); ++old) {
    dims[new_index[old]] = data.dims()[old];
    table.col(static_cast<Eigen::Index>(new_index[old])) = data.points().col(static_cast<Eigen::Index>(old));
  }
  return Dataset(std::move(dims), std::move(table), data.labels(), data.config());
}

Dataset set_dimension_range(const Dataset& data, std::size_t dim, double min, double max) {
  if (dim >= data.num_dims()) throw ValidationError("dimension index out of range");
  if (!(min != max)) throw ValidationError("axis range needs min != max");
  auto dims = data.dims();
  dims[dim].min = min;
  dims[dim].max = max;
  return Dataset(std::move(dims), data.points(), data.labels(), data.config());
}

Dataset rename_dimension(const Dataset& data, std::size_t dim, std::string name) {
  if (dim >= data.num_dims()) throw ValidationError("dimension index out of range");
  auto dims = data.dims();
  dims[dim].name = std::move(name);
  return Dataset(std::move(dims), data.points(), data.labels(), data.config());
}

Dataset remove_rows(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<bool> drop(data.num_points(), false);
  for (auto r : rows) {
    if (r >= drop.size()) throw ValidationError("row index out of range");
    drop[r] = true;
  }
  const auto kept = static_cast<Eigen::Index>(std::count(drop.begin(), drop.end(), false));
  PointTable table(kept, data.points().cols());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(kept));
  Eigen::Index out = 0;
  for (std::size_t r = 0; r < drop.size(); ++r) {
    if (drop[r]) continue;
    table.row(out++) = data.points().row(static_cast<Eigen::Index>(r));
    labels.push_back(data.labels()[r]);
  }
  return Dataset(data.dims(), std::move(table), std::move(labels), data.config());
}

Dataset append_points(const Dataset& data, int cluster, const PointTable& points) {
  if (points.rows() > 0 && static_cast<std::size_t>(points.cols()) != data.num_dims())
    throw ValidationError("appended points have the wrong dimensionality");
  PointTable table(data.points().rows() + points.rows(), static_cast<Eigen::Index>(data.num_dims()));
  table.topRows(data.points().rows()) = data.points();
  if (points.rows() > 0) table.bottomRows(points.rows()) = points;
  auto labels = data.labels();
  labels.insert(labels.end(), static_cast<std::size_t>(points.rows()), cluster);
  return Dataset(data.dims(), std::move(table), std::move(labels), data.config());
}

Dataset replace_cluster(const Dataset& data, int cluster, const PointTable& points) {
  const auto rows = data.rows_of_cluster(cluster);
  return append_points(remove_rows(data, rows), cluster, points);
}

}  // namespace sketchnd
