#include "sketchnd/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sketchnd/error.hpp"

namespace sketchnd {

// ---------------------------------------------------------------- layout

Point2 PcLayout::to_layout(const Point2& canvas) const {
  return {(canvas.x() - origin_x) / axis_spacing, (bottom - canvas.y()) / (bottom - top)};
}

Point2 PcLayout::to_canvas(const Point2& layout) const {
  return {origin_x + layout.x() * axis_spacing, bottom - layout.y() * (bottom - top)};
}

PcLayout PcLayout::from_json(const Json& j) {
  PcLayout l;
  l.origin_x = j.value("origin_x", l.origin_x);
  l.axis_spacing = j.value("axis_spacing", l.axis_spacing);
  l.top = j.value("top", l.top);
  l.bottom = j.value("bottom", l.bottom);
  if (!(l.axis_spacing > 0.0)) throw ValidationError("layout axis spacing must be positive");
  if (l.top == l.bottom) throw ValidationError("layout top and bottom must differ");
  return l;
}

// ---------------------------------------------------------------- state

namespace {

bool same_pdf(const DiscretePdf& a, const DiscretePdf& b) {
  return a.dim == b.dim && a.axis_min == b.axis_min && a.axis_max == b.axis_max &&
         a.density.size() == b.density.size() && a.density == b.density;
}

}  // namespace

bool operator==(const SessionState& a, const SessionState& b) {
  if (a.pdfs.size() != b.pdfs.size()) return false;
  for (auto ia = a.pdfs.begin(), ib = b.pdfs.begin(); ia != a.pdfs.end(); ++ia, ++ib)
    if (ia->first != ib->first || !same_pdf(ia->second, ib->second)) return false;
  return a.data == b.data && a.quads == b.quads && a.detached == b.detached && a.clusters == b.clusters &&
         a.views == b.views && a.selected_view == b.selected_view && a.layout.origin_x == b.layout.origin_x &&
         a.layout.axis_spacing == b.layout.axis_spacing && a.layout.top == b.layout.top &&
         a.layout.bottom == b.layout.bottom && a.rng == b.rng;
}

namespace {

std::map<int, ClusterState> clusters_from_labels(const Dataset& data) {
  std::map<int, ClusterState> out;
  for (int label : data.labels()) {
    auto [it, inserted] = out.try_emplace(label);
    if (inserted) it->second = ClusterState{label, cluster_color(label), 0, 0.5, true};
    ++it->second.sample_count;
  }
  return out;
}

}  // namespace

SessionState initial_state(std::uint64_t seed) {
  SessionState s;
  s.rng = Rng(seed);
  s.data = create_default_dataset(s.rng);
  s.clusters = clusters_from_labels(s.data);
  return s;
}

// ---------------------------------------------------------------- parsing

namespace {

std::string kind_of(const Json& command) {
  if (!command.is_object()) throw ValidationError("command must be a JSON object");
  const auto it = command.find("kind");
  if (it == command.end() || !it->is_string()) throw ValidationError("command needs a string \"kind\"");
  return it->get<std::string>();
}

const Json& field(const Json& command, const char* name) {
  const auto it = command.find(name);
  if (it == command.end()) throw ValidationError(std::string("missing field \"") + name + "\"");
  return *it;
}

double number(const Json& command, const char* name) {
  const Json& v = field(command, name);
  if (!v.is_number()) throw ValidationError(std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

double number_or(const Json& command, const char* name, double fallback) {
  return command.contains(name) ? number(command, name) : fallback;
}

long long integer(const Json& v, const char* what) {
  if (!v.is_number_integer()) throw ValidationError(std::string(what) + " must be an integer");
  return v.get<long long>();
}

std::size_t count_field(const Json& command, const char* name) {
  const long long v = integer(field(command, name), name);
  if (v < 0) throw ValidationError(std::string(name) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

Point2 point_of(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError("points are [x, y] number pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Point2> points_of(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of [x, y] points");
  std::vector<Point2> out;
  out.reserve(j.size());
  for (const auto& p : j) out.push_back(point_of(p));
  return out;
}

std::size_t dim_of(const SessionState& s, const Json& ref) {
  if (ref.is_string()) {
    const auto name = ref.get<std::string>();
    if (auto i = s.data.index_of(name)) return *i;
    throw ValidationError("unknown dimension '" + name + "'");
  }
  const long long i = integer(ref, "dimension");
  if (i < 0 || static_cast<std::size_t>(i) >= s.data.num_dims())
    throw ValidationError("dimension " + std::to_string(i) + " out of range");
  return static_cast<std::size_t>(i);
}

int cluster_of(const SessionState& s, const Json& command) {
  const long long c = integer(field(command, "cluster"), "cluster");
  if (c < 0 || c >= s.data.config().cluster_cap)
    throw ValidationError("cluster " + std::to_string(c) + " outside [0, " +
                          std::to_string(s.data.config().cluster_cap) + ")");
  return static_cast<int>(c);
}

ClusterState& ensure_cluster(SessionState& s, int c) {
  auto [it, inserted] = s.clusters.try_emplace(c);
  if (inserted) it->second = ClusterState{c, cluster_color(c), 0, 0.5, true};
  return it->second;
}

std::size_t view_of(const SessionState& s, const Json& command) {
  if (command.contains("view")) {
    const long long v = integer(command.at("view"), "view");
    if (v < 0 || static_cast<std::size_t>(v) >= s.views.size())
      throw ValidationError("no view with index " + std::to_string(v));
    return static_cast<std::size_t>(v);
  }
  if (!s.selected_view) throw ValidationError("no view selected");
  return *s.selected_view;
}

BrushSize brush_size_of(const Json& command) {
  const std::string size = command.value("size", std::string("medium"));
  if (size == "small") return BrushSize::small;
  if (size == "medium") return BrushSize::medium;
  if (size == "large") return BrushSize::large;
  throw ValidationError("brush size must be small, medium or large");
}

double density_of(const Json& command) {
  const double d = number_or(command, "density", 1.0);
  if (!(d >= 0.0 && d <= 1.0)) throw ValidationError("density must lie in [0, 1]");
  return d;
}

Eigen::VectorXd vector_of(const Json& j, std::size_t n) {
  if (!j.is_array() || j.size() != n) throw ValidationError("vector must have " + std::to_string(n) + " components");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    if (!j[k].is_number()) throw ValidationError("vector components must be numbers");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

ViewDescriptor view_descriptor_of(const SessionState& s, const Json& spec) {
  const std::string kind = spec.value("kind", std::string("axis"));
  const std::size_t n = s.data.num_dims();
  if (kind == "axis") {
    const Json& dims = field(spec, "dims");
    if (!dims.is_array() || dims.size() != 2) throw ValidationError("axis view needs two dims");
    return ViewDescriptor::axis_aligned(dim_of(s, dims[0]), dim_of(s, dims[1]));
  }
  if (kind == "general") {
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), 2);
    raw.col(0) = vector_of(field(spec, "x"), n);
    raw.col(1) = vector_of(field(spec, "y"), n);
    const Eigen::MatrixXd basis = gram_schmidt<double>(raw, 1e-9);
    return ViewDescriptor::general({basis.col(0), basis.col(1)});
  }
  if (kind == "touchpad") {
    TouchpadPolygond pad;
    if (spec.contains("vertices")) {
      const auto vertices = points_of(spec.at("vertices"));
      pad.vertices.resize(2, static_cast<Eigen::Index>(vertices.size()));
      for (std::size_t k = 0; k < vertices.size(); ++k) pad.vertices.col(static_cast<Eigen::Index>(k)) = vertices[k];
      if (spec.contains("vertex_dims")) {
        for (const auto& d : spec.at("vertex_dims")) pad.vertex_dims.push_back(dim_of(s, d));
      } else {
        for (std::size_t k = 0; k < vertices.size(); ++k) pad.vertex_dims.push_back(k);
      }
      if (!polygon_is_simple<double>(pad.vertices)) throw ValidationError("touchpad polygon self-intersects");
    } else {
      pad = TouchpadPolygond::regular(n);
    }
    pad.red = point_of(field(spec, "red"));
    pad.blue = point_of(field(spec, "blue"));
    return ViewDescriptor::general(ppa_from_touchpad(pad, n));
  }
  throw ValidationError("view kind must be axis, general or touchpad");
}

Json view_to_json(const SculptView& v) {
  Json j;
  if (v.view.is_axis_aligned()) {
    j["kind"] = "axis";
    j["dims"] = {v.view.dim_x, v.view.dim_y};
  } else {
    j["kind"] = "general";
    j["x"] = std::vector<double>(v.view.x_axis.data(), v.view.x_axis.data() + v.view.x_axis.size());
    j["y"] = std::vector<double>(v.view.y_axis.data(), v.view.y_axis.data() + v.view.y_axis.size());
  }
  j["extent"] = {v.extent.x_lo, v.extent.x_hi, v.extent.y_lo, v.extent.y_hi};
  j["grid"] = v.grid;
  Json defined = Json::array();
  for (const auto& [c, plane] : v.clusters)
    if (plane.defined) defined.push_back(c);
  j["defined_clusters"] = defined;
  return j;
}

Json report_to_json(const ReplenishReport& r) {
  Json j{{"added", r.added}, {"rejected", r.rejected}, {"rounds", r.rounds}, {"warnings", r.warnings}};
  j["emd_before"] = std::isfinite(r.emd_before) ? Json(r.emd_before) : Json(nullptr);
  j["emd_after"] = std::isfinite(r.emd_after) ? Json(r.emd_after) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------- effects

void after_points_changed(SessionState& s, const std::set<int>& regenerated) {
  s.views.refresh(s.data);
  for (int c : regenerated) s.views.reset_cluster(c);
}

std::set<int> all_clusters(const SessionState& s) {
  std::set<int> out(s.data.labels().begin(), s.data.labels().end());
  for (const auto& [c, state] : s.clusters) out.insert(c);
  return out;
}

std::size_t regenerate_cluster(SessionState& s, int c, const QuadConfig& config) {
  auto& cluster = ensure_cluster(s, c);
  if (cluster.sample_count == 0) cluster.sample_count = config.default_samples;
  auto samples = generate_cluster_samples(c, s.quads, s.pdfs, s.data.dims(), cluster.correlation,
                                          cluster.sample_count, s.rng, config);
  s.data = replace_cluster(s.data, c, samples.points);
  after_points_changed(s, {c});
  return samples.fallbacks;
}

void reset_model(SessionState& s) {
  s.pdfs.clear();
  s.quads.clear();
  s.detached.clear();
  s.views.clear();
  s.selected_view.reset();
  s.clusters = clusters_from_labels(s.data);
}

Json fallback_result(std::size_t fallbacks) {
  Json j{{"fallbacks", fallbacks}};
  if (fallbacks > 0)
    j["warnings"] = {std::to_string(fallbacks) + " linked values used the uniform-in-window fallback"};
  return j;
}

Json quad_to_json(const Quadrilateral& q) {
  return Json{{"cluster", q.cluster},
              {"left_axis", q.left_axis},
              {"kind", q.kind == QuadKind::trapezoid ? "trapezoid" : "bowtie"},
              {"left", {q.left.bottom, q.left.top}},
              {"right", {q.right.bottom, q.right.top}}};
}

}  // namespace

Json apply_command(SessionState& s, const Json& command) {
  const std::string kind = kind_of(command);
  const QuadConfig quad_config;

  if (kind == "new-dataset") {
    const std::size_t dims = command.contains("dims") ? count_field(command, "dims") : 7;
    const std::size_t points = command.contains("points") ? count_field(command, "points") : 500;
    const double lo = number_or(command, "min", -10.0);
    const double hi = number_or(command, "max", 10.0);
    if (dims < 1) throw ValidationError("a dataset needs at least one dimension");
    if (lo == hi) throw ValidationError("min and max must differ");
    s.data = create_default_dataset(s.rng, points, dims, lo, hi);
    reset_model(s);
    if (points == 0) s.clusters.clear();
    return {{"points", points}, {"dims", dims}};
  }
  if (kind == "import") {
    const Json& text = field(command, "text");
    if (!text.is_string()) throw ValidationError("import text must be a string");
    s.data = import_dataset(text.get<std::string>());
    reset_model(s);
    return {{"points", s.data.num_points()}, {"dims", s.data.num_dims()}};
  }
  if (kind == "set-range") {
    const std::size_t d = dim_of(s, field(command, "dim"));
    s.data = set_dimension_range(s.data, d, number(command, "min"), number(command, "max"));
    s.pdfs.erase(d);
    s.views.rebind(s.data);
    return {{"dim", d}};
  }
  if (kind == "rename") {
    const std::size_t d = dim_of(s, field(command, "dim"));
    const Json& name = field(command, "name");
    if (!name.is_string()) throw ValidationError("name must be a string");
    s.data = rename_dimension(s.data, d, name.get<std::string>());
    return {{"dim", d}};
  }
  if (kind == "reorder") {
    const std::size_t from = dim_of(s, field(command, "from"));
    const long long to = integer(field(command, "to"), "to");
    if (to < 0 || static_cast<std::size_t>(to) >= s.data.num_dims()) throw ValidationError("target position out of range");
    const auto perm = reorder_permutation(s.data.num_dims(), from, static_cast<std::size_t>(to));
    s.data = reorder_dimension(s.data, from, static_cast<std::size_t>(to));
    std::map<std::size_t, DiscretePdf> pdfs;
    for (auto& [d, pdf] : s.pdfs) {
      pdf.dim = perm[d];
      pdfs.emplace(perm[d], std::move(pdf));
    }
    s.pdfs = std::move(pdfs);
    auto remap = remap_quads(s.quads, perm);
    s.quads = std::move(remap.kept);
    Json result{{"detached", remap.detached.size()}};
    if (!remap.detached.empty())
      result["warnings"] = {std::to_string(remap.detached.size()) +
                            " quadrilaterals detached because their axes are no longer adjacent"};
    for (auto& q : remap.detached) s.detached.push_back(q);
    s.views.permute_dimensions(perm);
    s.views.refresh(s.data);
    return result;
  }
  if (kind == "sketch-pdf") {
    const std::size_t k = command.contains("samples") ? count_field(command, "samples") : kDefaultPdfSamples;
    std::size_t d = 0;
    std::vector<Point2> curve;
    if (command.contains("stroke")) {
      const PcLayout layout = command.contains("layout") ? PcLayout::from_json(command.at("layout")) : s.layout;
      const auto stroke = resample_stroke(points_of(command.at("stroke")), k);
      std::vector<double> axis_x;
      for (std::size_t i = 0; i < s.data.num_dims(); ++i) axis_x.push_back(layout.axis_x(i));
      double leftmost = stroke.front().x();
      for (const auto& p : stroke) leftmost = std::min(leftmost, p.x());
      d = match_axis(leftmost, axis_x);
      const auto& dim = s.data.dim(d);
      for (const auto& p : stroke) {
        const Point2 l = layout.to_layout(p);
        curve.emplace_back(dim.at(l.y()), (p.x() - layout.axis_x(d)) / layout.axis_spacing);
      }
    } else {
      d = dim_of(s, field(command, "dim"));
      curve = resample_stroke(points_of(field(command, "curve")), k);
    }
    DiscretePdf pdf = curve_to_pdf(curve, s.data.dim(d), d, k);
    const auto clip = quad_ranges_on_axis(s.quads, d);
    s.data = apply_pdf_to_dimension(s.data, pdf, clip, s.rng);
    s.pdfs[d] = std::move(pdf);
    after_points_changed(s, all_clusters(s));
    return {{"dim", d}, {"clipped", !clip.empty()}};
  }
  if (kind == "draw-quad") {
    const int c = cluster_of(s, command);
    auto clicks_list = points_of(field(command, "clicks"));
    if (clicks_list.size() != 4) throw ValidationError("a quadrilateral needs exactly four clicks");
    if (command.value("space", std::string("layout")) == "canvas") {
      const PcLayout layout = command.contains("layout") ? PcLayout::from_json(command.at("layout")) : s.layout;
      for (auto& p : clicks_list) p = layout.to_layout(p);
    }
    const std::array<Point2, 4> clicks{clicks_list[0], clicks_list[1], clicks_list[2], clicks_list[3]};
    const auto ticks = collect_ticks(s.pdfs, s.quads, s.data.dims(), quad_config);
    const Quadrilateral quad = classify_and_snap_quad(clicks, s.data.dims(), ticks, c, quad_config);
    s.quads.push_back(quad);
    Json result = fallback_result(regenerate_cluster(s, c, quad_config));
    result["quad"] = quad_to_json(quad);
    return result;
  }
  if (kind == "set-correlation") {
    const int c = cluster_of(s, command);
    const double value = number(command, "value");
    if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("correlation must lie in [0, 1]");
    ensure_cluster(s, c).correlation = value;
    const bool has_quads = std::any_of(s.quads.begin(), s.quads.end(), [c](const auto& q) { return q.cluster == c; });
    if (!has_quads) return {{"regenerated", false}};
    Json result = fallback_result(regenerate_cluster(s, c, quad_config));
    result["regenerated"] = true;
    return result;
  }
  if (kind == "set-samples") {
    const int c = cluster_of(s, command);
    const std::size_t n = count_field(command, "count");
    auto& cluster = ensure_cluster(s, c);
    cluster.sample_count = n;
    if (n == 0) {
      s.data = replace_cluster(s.data, c, PointTable(0, static_cast<Eigen::Index>(s.data.num_dims())));
      after_points_changed(s, {c});
      return {{"count", 0}};
    }
    Json result = fallback_result(regenerate_cluster(s, c, quad_config));
    result["count"] = n;
    return result;
  }
  if (kind == "select-view") {
    const ViewDescriptor view = view_descriptor_of(s, field(command, "view"));
    const auto grid = command.contains("grid") ? static_cast<Eigen::Index>(count_field(command, "grid")) : kDefaultMapGrid;
    const std::size_t index = s.views.add(s.data, view, grid);
    s.selected_view = index;
    return {{"view", index}, {"descriptor", view_to_json(s.views.at(index))}};
  }
  if (kind == "paint-shape") {
    const std::size_t v = view_of(s, command);
    const int c = cluster_of(s, command);
    PaintedShape shape;
    shape.boundary = points_of(field(command, "boundary"));
    shape.centerline = points_of(field(command, "centerline"));
    if (command.contains("profile")) {
      for (const auto& p : command.at("profile")) {
        if (!p.is_number()) throw ValidationError("profile values must be numbers");
        shape.profile.push_back(p.get<double>());
      }
    }
    RasterizeOptions options;
    options.grid = s.views.at(v).grid;
    options.smoothing_sigma = number_or(command, "sigma", 0.0);
    auto map = rasterize_painted_shape(shape, s.views.at(v).extent, options);
    ensure_cluster(s, c);
    s.views.plane(v, c).designer = std::move(map);
    return {{"view", v}, {"cluster", c}};
  }
  if (kind == "brush") {
    const std::size_t v = view_of(s, command);
    const int c = cluster_of(s, command);
    BrushSpec brush;
    const std::string mode = command.value("mode", std::string("paint"));
    if (mode != "paint" && mode != "erase") throw ValidationError("brush mode must be paint or erase");
    brush.mode = mode == "paint" ? BrushMode::paint : BrushMode::erase;
    brush.size = brush_size_of(command);
    brush.density = density_of(command);
    ensure_cluster(s, c);
    auto& plane = s.views.plane(v, c);
    if (!plane.designer) plane.designer = ProbabilityMap::zeros(s.views.at(v).grid);
    const auto outcome = brush_map(*plane.designer, brush, point_of(field(command, "position")), s.views.at(v).extent);
    Json result{{"emptied", outcome.emptied}};
    if (outcome.emptied) result["warnings"] = {"erasing emptied the painted map"};
    return result;
  }
  if (kind == "backproject") {
    const std::size_t v = view_of(s, command);
    const int c = cluster_of(s, command);
    auto& cluster = ensure_cluster(s, c);
    const std::size_t count = command.contains("count") ? count_field(command, "count")
                              : cluster.sample_count > 0 ? cluster.sample_count
                                                         : quad_config.default_samples;
    s.data = backproject_view(s.data, s.views, v, c, count, s.rng);
    s.clusters.at(c).sample_count = count;
    return {{"count", count}};
  }
  if (kind == "carve") {
    const std::size_t v = view_of(s, command);
    CarveSpec spec;
    spec.center = point_of(field(command, "position"));
    spec.half_side = command.contains("half_side") ? number(command, "half_side")
                                                   : brush_radius(brush_size_of(command), s.views.at(v).extent);
    spec.density = density_of(command);
    std::vector<ClusterState> states;
    for (const auto& [id, st] : s.clusters) states.push_back(st);
    auto result = carve(s.data, s.views, v, spec, states, s.rng);
    s.data = std::move(result.data);
    return {{"removed", result.removed.size()}};
  }
  if (kind == "replenish-auto" || kind == "replenish-general") {
    const std::size_t v = view_of(s, command);
    const int c = cluster_of(s, command);
    auto result = kind == "replenish-auto" ? replenish_auto(s.data, s.views, v, c, s.rng)
                                           : replenish_general(s.data, s.views, v, c, s.rng);
    s.data = std::move(result.data);
    return report_to_json(result.report);
  }
  if (kind == "replenish-manual") {
    const std::size_t v = view_of(s, command);
    const int c = cluster_of(s, command);
    ManualStroke stroke;
    stroke.center = point_of(field(command, "position"));
    stroke.radius = command.contains("radius") ? number(command, "radius")
                                               : brush_radius(brush_size_of(command), s.views.at(v).extent);
    stroke.density = density_of(command);
    ensure_cluster(s, c);
    auto result = replenish_manual(s.data, s.views, v, c, stroke, s.rng);
    s.data = std::move(result.data);
    return report_to_json(result.report);
  }
  if (kind == "set-active") {
    const bool active = field(command, "active").get<bool>();
    std::vector<int> ids;
    if (command.contains("clusters")) {
      for (const auto& id : command.at("clusters")) ids.push_back(static_cast<int>(integer(id, "cluster")));
    } else {
      ids.push_back(cluster_of(s, command));
    }
    for (int id : ids) {
      if (id < 0 || id >= s.data.config().cluster_cap) throw ValidationError("cluster id out of range");
      ensure_cluster(s, id).active = active;
    }
    return {{"clusters", ids}, {"active", active}};
  }
  if (kind == "set-seed") {
    const Json& seed = field(command, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      throw ValidationError("seed must be a non-negative integer");
    s.rng = Rng(seed.get<std::uint64_t>());
    return {{"seed", seed}};
  }
  throw ValidationError("unknown command kind '" + kind + "'");
}

bool is_query_kind(std::string_view kind) {
  return kind == "export" || kind == "get-projection" || kind == "get-histogram" || kind == "get-state-summary";
}

Json state_summary(const SessionState& s) {
  Json dims = Json::array();
  for (const auto& d : s.data.dims()) dims.push_back({{"name", d.name}, {"min", d.min}, {"max", d.max}});
  std::map<int, std::size_t> counts;
  for (int l : s.data.labels()) ++counts[l];
  Json clusters = Json::array();
  for (const auto& [id, c] : s.clusters)
    clusters.push_back({{"id", id},
                        {"color", c.color},
                        {"points", counts.count(id) ? counts.at(id) : 0},
                        {"sample_count", c.sample_count},
                        {"correlation", c.correlation},
                        {"active", c.active}});
  Json pdf_dims = Json::array();
  for (const auto& [d, pdf] : s.pdfs) pdf_dims.push_back(d);
  Json quads = Json::array();
  for (const auto& q : s.quads) quads.push_back(quad_to_json(q));
  Json views = Json::array();
  for (const auto& v : s.views.views()) views.push_back(view_to_json(v));
  return Json{{"points", s.data.num_points()},
              {"dims", dims},
              {"clusters", clusters},
              {"pdf_dims", pdf_dims},
              {"quads", quads},
              {"detached_quads", s.detached.size()},
              {"views", views},
              {"selected_view", s.selected_view ? Json(*s.selected_view) : Json(nullptr)}};
}

namespace {

Json run_query(const SessionState& s, const Json& command) {
  const std::string kind = kind_of(command);
  if (kind == "export") {
    const std::string format = command.value("format", std::string("space"));
    if (format != "space" && format != "csv") throw ValidationError("format must be space or csv");
    const std::string text = format == "csv" ? export_dataset_csv(s.data) : export_dataset(s.data);
    if (command.contains("path")) {
      write_text_file(field(command, "path").get<std::string>(), text);
      return {{"path", command.at("path")}, {"bytes", text.size()}};
    }
    return {{"text", text}};
  }
  if (kind == "get-projection") {
    const std::size_t v = view_of(s, command);
    const auto& view = s.views.at(v);
    Json points = Json::array();
    if (s.data.num_points() > 0) {
      const Eigen::MatrixX2d p = project_view(view.view, s.data.points());
      for (Eigen::Index r = 0; r < p.rows(); ++r) points.push_back({p(r, 0), p(r, 1)});
    }
    Json active = Json::array();
    std::vector<ClusterState> states;
    for (const auto& [id, st] : s.clusters) states.push_back(st);
    for (int l : s.data.labels()) active.push_back(cluster_is_active(states, l));
    return {{"view", v},
            {"extent", {view.extent.x_lo, view.extent.x_hi, view.extent.y_lo, view.extent.y_hi}},
            {"points", points},
            {"labels", s.data.labels()},
            {"active", active}};
  }
  if (kind == "get-histogram") {
    const std::size_t v = view_of(s, command);
    const int c = cluster_of(s, command);
    const auto& view = s.views.at(v);
    const std::string which = command.value("which", std::string("current"));
    GridValues cells = GridValues::Zero(view.grid, view.grid);
    if (auto it = view.clusters.find(c); it != view.clusters.end()) {
      const auto& plane = it->second;
      if (which == "current") cells = plane.current;
      else if (which == "baseline") cells = plane.baseline;
      else if (which == "original") { if (plane.original) cells = plane.original->cells; }
      else if (which == "designer") { if (plane.designer) cells = plane.designer->cells; }
      else throw ValidationError("histogram must be current, baseline, original or designer");
    }
    Json rows = Json::array();
    for (Eigen::Index ix = 0; ix < cells.rows(); ++ix) {
      Json row = Json::array();
      for (Eigen::Index iy = 0; iy < cells.cols(); ++iy) row.push_back(cells(ix, iy));
      rows.push_back(std::move(row));
    }
    return {{"view", v}, {"cluster", c}, {"which", which}, {"grid", view.grid}, {"cells", rows}};
  }
  return state_summary(s);
}

CommandOutcome failure(const char* code, const std::string& message) {
  CommandOutcome out;
  out.ok = false;
  out.error_code = code;
  out.message = message;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- session

Session::Session(std::uint64_t seed, SessionOptions options)
    : seed_(seed), options_(options), state_(initial_state(seed)) {
  if (options_.checkpoint_interval == 0) options_.checkpoint_interval = 1;
  checkpoints_.emplace(0, state_);
}

CommandOutcome Session::apply_text(std::string_view command_json) {
  Json command;
  try {
    command = Json::parse(command_json);
  } catch (const Json::exception& e) {
    return failure("parse", std::string("malformed command: ") + e.what());
  }
  return apply(command);
}

CommandOutcome Session::apply(const Json& raw) {
  try {
    const std::string kind = kind_of(raw);
    CommandOutcome out;
    if (kind == "undo" || kind == "redo") {
      const bool changed = kind == "undo" ? undo() : redo();
      Json entry = Json{{"kind", kind}};
      entry["seq"] = journal_.size();
      journal_.push_back(std::move(entry));
      out.mutated = changed;
      out.result = {{"changed", changed}, {"cursor", cursor_}};
      return out;
    }
    if (is_query_kind(kind)) {
      out.result = run_query(state_, raw);
      if (kind == "get-state-summary") {
        out.result["cursor"] = cursor_;
        out.result["history"] = history_.size();
      }
      return out;
    }
    Json command = inline_import_path(raw);
    command.erase("seq");
    SessionState next = state_;
    out.result = apply_command(next, command);

    history_.resize(cursor_);
    checkpoints_.erase(checkpoints_.upper_bound(cursor_), checkpoints_.end());
    history_.push_back(command);
    ++cursor_;
    state_ = std::move(next);
    if (cursor_ % options_.checkpoint_interval == 0) checkpoints_[cursor_] = state_;

    Json entry = command;
    entry["seq"] = journal_.size();
    out.result["seq"] = journal_.size();
    journal_.push_back(std::move(entry));
    out.mutated = true;
    return out;
  } catch (const Error& e) {
    return failure(e.code(), e.what());
  } catch (const Json::exception& e) {
    return failure("validation", std::string("malformed command: ") + e.what());
  }
}

bool Session::undo() {
  if (cursor_ == 0) return false;
  rebuild_to(cursor_ - 1);
  return true;
}

bool Session::redo() {
  if (cursor_ >= history_.size()) return false;
  SessionState next = state_;
  apply_command(next, history_[cursor_]);
  state_ = std::move(next);
  ++cursor_;
  if (cursor_ % options_.checkpoint_interval == 0) checkpoints_[cursor_] = state_;
  return true;
}

void Session::rebuild_to(std::size_t cursor) {
  auto it = checkpoints_.upper_bound(cursor);
  --it;
  SessionState s = it->second;
  for (std::size_t i = it->first; i < cursor; ++i) {
    apply_command(s, history_[i]);
    if ((i + 1) % options_.checkpoint_interval == 0) checkpoints_[i + 1] = s;
  }
  state_ = std::move(s);
  cursor_ = cursor;
}

SessionState Session::replay_prefix(std::size_t count) const {
  if (count > history_.size()) throw ValidationError("prefix longer than the history");
  SessionState s = initial_state(seed_);
  for (std::size_t i = 0; i < count; ++i) apply_command(s, history_[i]);
  return s;
}

std::string Session::save_script() const {
  std::string out = Json{{"format", kScriptFormat}, {"version", kScriptVersion}, {"seed", seed_}}.dump();
  out += '\n';
  for (const auto& c : journal_) {
    out += c.dump();
    out += '\n';
  }
  return out;
}

Session Session::load_script(std::string_view text, SessionOptions options, const OutcomeCallback& on_outcome) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<Session> session;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!session) {
      if (!j.is_object() || j.value("format", std::string()) != kScriptFormat)
        throw ParseError(line_no, "missing script header");
      if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version").get<int>() != kScriptVersion)
        throw ParseError(line_no, "unsupported script version");
      if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
        throw ParseError(line_no, "script header needs a non-negative seed");
      session.emplace(j.at("seed").get<std::uint64_t>(), options);
      continue;
    }
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
      throw ParseError(line_no, "command needs a string \"kind\"");
    const auto outcome = session->apply(j);
    if (on_outcome) on_outcome(line_no, j, outcome);
    if (!outcome.ok) {
      const std::string message = "line " + std::to_string(line_no) + ": " + outcome.message;
      if (outcome.error_code == "io") throw IoError(message);
      if (outcome.error_code == "sampling") throw SamplingError(message);
      throw ValidationError(message);
    }
  }
  if (!session) throw ParseError(line_no == 0 ? 1 : line_no, "empty script");
  return std::move(*session);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

Json inline_import_path(const Json& command) {
  if (!command.is_object() || command.value("kind", std::string()) != "import" || !command.contains("path"))
    return command;
  Json out = command;
  out["text"] = read_text_file(field(command, "path").get<std::string>());
  out.erase("path");
  return out;
}

}  // namespace sketchnd
