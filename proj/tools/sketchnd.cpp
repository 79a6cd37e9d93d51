// sketchnd: headless driver for scripted dataset generation.
//
// Exit codes: 0 success, 1 validation/parse/sampling error, 2 I/O error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sketchnd/error.hpp"
#include "sketchnd/kmeans.hpp"
#include "sketchnd/protocol.hpp"
#include "sketchnd/sculpt.hpp"
#include "sketchnd/session.hpp"

namespace {

using sketchnd::Json;
// Reports keep insertion order so text output reads top-down.
using Report = nlohmann::ordered_json;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string script;
  std::string input;
  std::string out;
  std::string format = "space";
  std::string report = "text";
};

std::string with_seed(const std::string& script, std::optional<std::uint64_t> seed) {
  if (!seed) return script;
  const auto start = script.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) throw sketchnd::ParseError(1, "empty script");
  const auto end = script.find('\n', start);
  Json header;
  try {
    header = Json::parse(script.substr(start, end == std::string::npos ? std::string::npos : end - start));
  } catch (const Json::exception& e) {
    throw sketchnd::ParseError(1, std::string("malformed script header: ") + e.what());
  }
  header["seed"] = *seed;
  return script.substr(0, start) + header.dump() + (end == std::string::npos ? "" : script.substr(end));
}

struct Replay {
  sketchnd::Session session;
  std::vector<std::string> warnings;
};

Replay replay_script(const std::string& path, std::optional<std::uint64_t> seed) {
  const std::string text = with_seed(sketchnd::read_text_file(path), seed);
  std::vector<std::string> warnings;
  auto session = sketchnd::Session::load_script(
      text, {}, [&](std::size_t line, const Json&, const sketchnd::CommandOutcome& outcome) {
        if (!outcome.ok || !outcome.result.contains("warnings")) return;
        for (const auto& w : outcome.result.at("warnings"))
          warnings.push_back("line " + std::to_string(line) + ": " + w.get<std::string>());
      });
  return {std::move(session), std::move(warnings)};
}

sketchnd::Dataset load_dataset(const Common& c) {
  if (!c.script.empty() && !c.input.empty()) throw sketchnd::ValidationError("give either --script or --input");
  if (!c.script.empty()) return replay_script(c.script, c.seed).session.state().data;
  if (!c.input.empty()) return sketchnd::import_dataset(sketchnd::read_text_file(c.input));
  throw sketchnd::ValidationError("one of --script or --input is required");
}

std::string dataset_text(const sketchnd::Dataset& data, const std::string& format) {
  return format == "csv" ? sketchnd::export_dataset_csv(data) : sketchnd::export_dataset(data);
}

Report cluster_sizes(const sketchnd::Dataset& data) {
  std::map<int, std::size_t> counts;
  for (int l : data.labels()) ++counts[l];
  Report out = Report::object();
  for (const auto& [id, n] : counts) out[std::to_string(id)] = n;
  return out;
}

Report dim_names(const sketchnd::Dataset& data) {
  Report out = Report::array();
  for (const auto& d : data.dims()) out.push_back(d.name);
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}

// Text reports: one "key: value" line per scalar, arrays space-joined,
// nested objects flattened with dotted keys. Warnings get one line each.
void write_text(std::ostream& os, const Report& j, const std::string& prefix = "") {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      write_text(os, value, name);
    } else if (value.is_array() && key == "warnings") {
      os << name << ": " << value.size() << '\n';
      for (const auto& w : value) os << "warning: " << w.get<std::string>() << '\n';
    } else if (value.is_array()) {
      os << name << ":";
      for (const auto& v : value) os << ' ' << (v.is_string() ? v.get<std::string>() : v.is_number_float() ? fmt(v.get<double>()) : v.dump());
      os << '\n';
    } else if (value.is_number_float()) {
      os << name << ": " << fmt(value.get<double>()) << '\n';
    } else if (value.is_string()) {
      os << name << ": " << value.get<std::string>() << '\n';
    } else {
      os << name << ": " << value.dump() << '\n';
    }
  }
}

void emit_report(const Report& report, const std::string& format) {
  if (format == "json") {
    std::cout << report.dump(2) << '\n';
  } else {
    write_text(std::cout, report);
  }
}

// ---------------------------------------------------------------- subcommands

Report cmd_run(const Common& c) {
  auto replay = replay_script(c.script, c.seed);
  const auto& state = replay.session.state();
  sketchnd::write_text_file(c.out, dataset_text(state.data, c.format));
  Report report = Report::object();
  report["command"] = "run";
  report["seed"] = replay.session.seed();
  report["commands"] = replay.session.journal().size();
  report["points"] = state.data.num_points();
  report["dims"] = dim_names(state.data);
  report["clusters"] = cluster_sizes(state.data);
  report["detached_quads"] = state.detached.size();
  report["warnings"] = replay.warnings;
  return report;
}

Report cmd_export(const Common& c) {
  const auto data = load_dataset(c);
  sketchnd::write_text_file(c.out, dataset_text(data, c.format));
  Report report = Report::object();
  report["command"] = "export";
  report["points"] = data.num_points();
  report["dims"] = dim_names(data);
  report["format"] = c.format;
  return report;
}

Report cmd_stats(const Common& c) {
  const auto data = load_dataset(c);
  Report report = Report::object();
  report["command"] = "stats";
  report["points"] = data.num_points();
  report["clusters"] = cluster_sizes(data);
  Report dims = Report::object();
  const auto& p = data.points();
  for (std::size_t d = 0; d < data.num_dims(); ++d) {
    const auto col = p.col(static_cast<Eigen::Index>(d));
    Report s = Report::object();
    s["axis"] = Report::array({data.dim(d).min, data.dim(d).max});
    if (col.size() > 0) {
      const double mean = col.mean();
      s["min"] = col.minCoeff();
      s["max"] = col.maxCoeff();
      s["mean"] = mean;
      s["std"] = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size()));
    }
    dims[data.dim(d).name] = s;
  }
  report["dims"] = dims;
  return report;
}

// "0,1:2,3" groups labels 0 and 1 into class 0 and labels 2 and 3 into class 1.
std::map<int, int> parse_truth(const std::string& spec, const sketchnd::Dataset& data) {
  std::map<int, int> out;
  if (spec.empty()) {
    std::map<int, int> seen;
    for (int l : data.labels()) seen.emplace(l, 0);
    int next = 0;
    for (auto& [l, cls] : seen) out[l] = next++;
    return out;
  }
  std::stringstream groups(spec);
  std::string group;
  int cls = 0;
  while (std::getline(groups, group, ':')) {
    std::stringstream labels(group);
    std::string label;
    while (std::getline(labels, label, ',')) {
      try {
        std::size_t used = 0;
        const int l = std::stoi(label, &used);
        if (used != label.size()) throw std::invalid_argument(label);
        if (!out.emplace(l, cls).second) throw sketchnd::ValidationError("label " + label + " appears twice in --truth");
      } catch (const std::logic_error&) {
        throw sketchnd::ValidationError("bad label '" + label + "' in --truth");
      }
    }
    ++cls;
  }
  return out;
}

Report kmeans_block(const sketchnd::PointTable& points, const std::vector<int>& truth, const sketchnd::KMeansOptions& options,
                  sketchnd::Rng& rng, const std::vector<std::string>& names) {
  const auto result = sketchnd::kmeans(points, options, rng);
  Report block = Report::object();
  block["accuracy"] = sketchnd::best_permutation_accuracy(truth, result.labels, options.k);
  block["inertia"] = result.inertia;
  const auto means = sketchnd::cluster_means(points, result.labels, options.k);
  Report m = Report::object();
  for (Eigen::Index k = 0; k < means.rows(); ++k) {
    Report row = Report::object();
    for (Eigen::Index d = 0; d < means.cols(); ++d) row[names[static_cast<std::size_t>(d)]] = means(k, d);
    m["cluster" + std::to_string(k)] = row;
  }
  block["means"] = m;
  // Dimension along which the two found centers differ most.
  if (means.rows() >= 2) {
    Eigen::Index widest = 0;
    (means.row(0) - means.row(1)).cwiseAbs().maxCoeff(&widest);
    block["split_dimension"] = names[static_cast<std::size_t>(widest)];
  }
  return block;
}

Report cmd_kmeans(const Common& c, const std::string& truth_spec, std::size_t k, std::size_t restarts) {
  const auto data = load_dataset(c);
  const auto truth_map = parse_truth(truth_spec, data);
  std::vector<int> truth;
  std::map<int, std::size_t> class_sizes;
  for (int l : data.labels()) {
    auto it = truth_map.find(l);
    if (it == truth_map.end()) throw sketchnd::ValidationError("label " + std::to_string(l) + " missing from --truth");
    truth.push_back(it->second);
    ++class_sizes[it->second];
  }
  if (class_sizes.size() != k)
    throw sketchnd::ValidationError("dataset has " + std::to_string(class_sizes.size()) + " ground-truth clusters, expected " +
                                    std::to_string(k));

  sketchnd::KMeansOptions options;
  options.k = k;
  options.restarts = restarts;
  sketchnd::Rng rng(c.seed.value_or(0));

  // The clusterer is trusted only after it separates well-separated blobs.
  const auto blobs = sketchnd::gaussian_blobs(rng, k, 500, data.num_dims(), 10.0);
  std::vector<std::string> blob_names;
  for (const auto& d : blobs.dims()) blob_names.push_back(d.name);
  Report control = kmeans_block(blobs.points(), blobs.labels(), options, rng, blob_names);
  if (!(control.at("accuracy").get<double>() > 0.99))
    throw sketchnd::ValidationError("k-means failed the Gaussian-blob control");

  std::vector<std::string> names;
  for (const auto& d : data.dims()) names.push_back(d.name);
  Report report = Report::object();
  report["command"] = "kmeans-demo";
  report["points"] = data.num_points();
  report["k"] = k;
  report["restarts"] = restarts;
  report["control_accuracy"] = control.at("accuracy");
  report["challenge"] = kmeans_block(data.points(), truth, options, rng, names);
  return report;
}

sketchnd::BrushSize brush_size(const std::string& name) {
  if (name == "small") return sketchnd::BrushSize::small;
  if (name == "medium") return sketchnd::BrushSize::medium;
  if (name == "large") return sketchnd::BrushSize::large;
  throw sketchnd::ValidationError("brush size must be small, medium or large");
}

Report cmd_outlier(const Common& c, const std::string& view_spec, const std::string& brush_path) {
  auto data = sketchnd::import_dataset(sketchnd::read_text_file(c.input));
  const auto comma = view_spec.find(',');
  if (comma == std::string::npos) throw sketchnd::ValidationError("--view takes two comma-separated dimension names");
  const std::string xname = view_spec.substr(0, comma);
  const std::string yname = view_spec.substr(comma + 1);
  const auto dx = data.index_of(xname);
  const auto dy = data.index_of(yname);
  if (!dx) throw sketchnd::ValidationError("unknown dimension '" + xname + "'");
  if (!dy) throw sketchnd::ValidationError("unknown dimension '" + yname + "'");

  Json strokes = Json::array();
  if (!brush_path.empty()) {
    try {
      strokes = Json::parse(sketchnd::read_text_file(brush_path));
    } catch (const Json::exception& e) {
      throw sketchnd::ValidationError(std::string("malformed brush script: ") + e.what());
    }
    if (!strokes.is_array()) throw sketchnd::ValidationError("brush script must be a JSON array of carves");
  }

  sketchnd::ViewSet views;
  const auto view = views.add(data, sketchnd::ViewDescriptor::axis_aligned(*dx, *dy));
  sketchnd::Rng rng(c.seed.value_or(0));
  const std::size_t rows_in = data.num_points();
  std::size_t removed = 0;
  bool all_in_region = true;
  for (const auto& s : strokes) {
    sketchnd::CarveSpec spec;
    const auto& pos = s.at("position");
    spec.center = {pos.at(0).get<double>(), pos.at(1).get<double>()};
    spec.half_side = s.contains("half_side")
                         ? s.at("half_side").get<double>()
                         : sketchnd::brush_radius(brush_size(s.value("size", std::string("medium"))), views.at(view).extent);
    spec.density = s.value("density", 1.0);
    if (!(spec.half_side > 0.0)) throw sketchnd::ValidationError("carve half side must be positive");
    if (!(spec.density >= 0.0 && spec.density <= 1.0)) throw sketchnd::ValidationError("density must lie in [0, 1]");
    auto result = sketchnd::carve(data, views, view, spec, {}, rng);
    for (std::size_t row : result.removed) {
      const double x = data.points()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(*dx));
      const double y = data.points()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(*dy));
      if (std::abs(x - spec.center.x()) > spec.half_side || std::abs(y - spec.center.y()) > spec.half_side)
        all_in_region = false;
    }
    removed += result.removed.size();
    data = std::move(result.data);
  }
  sketchnd::write_text_file(c.out, dataset_text(data, c.format));
  Report report = Report::object();
  report["command"] = "outlier-demo";
  report["view"] = Report::array({xname, yname});
  report["carves"] = strokes.size();
  report["rows_in"] = rows_in;
  report["rows_out"] = data.num_points();
  report["removed"] = removed;
  report["removed_in_region"] = all_in_region;
  return report;
}

int cmd_serve(const Common& c, const std::string& socket_path) {
  sketchnd::Session session = c.script.empty() ? sketchnd::Session(c.seed.value_or(0))
                                               : replay_script(c.script, c.seed).session;
  sketchnd::ProtocolHandler handler(session);
  sketchnd::serve_unix_socket(socket_path, handler,
                              [&] { std::cerr << "sketchnd: serving on " << socket_path << std::endl; });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketchnd: sketch-based high-dimensional dataset generation"};
  app.require_subcommand(1, 1);

  Common common;
  std::string truth;
  std::size_t k = 2;
  std::size_t restarts = 20;
  std::string view;
  std::string brush;
  std::string socket_path;

  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", common.seed, "Random seed (overrides a script header)"); };
  auto add_report = [&](CLI::App* sub) {
    sub->add_option("--report", common.report, "Report format")->check(CLI::IsMember({"text", "json"}));
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", common.format, "Dataset file format")->check(CLI::IsMember({"space", "csv"}));
  };

  auto* run = app.add_subcommand("run", "Replay a script and export the dataset");
  run->add_option("--script", common.script, "Script file")->required();
  run->add_option("--out", common.out, "Output dataset file")->required();
  add_seed(run);
  add_format(run);
  add_report(run);

  auto* exp = app.add_subcommand("export", "Convert a script or dataset file to a dataset file");
  exp->add_option("--script", common.script, "Script file");
  exp->add_option("--input", common.input, "Dataset file");
  exp->add_option("--out", common.out, "Output dataset file")->required();
  add_seed(exp);
  add_format(exp);
  add_report(exp);

  auto* stats = app.add_subcommand("stats", "Per-dimension statistics of a script's or file's dataset");
  stats->add_option("--script", common.script, "Script file");
  stats->add_option("--input", common.input, "Dataset file");
  add_seed(stats);
  add_report(stats);

  auto* km = app.add_subcommand("kmeans-demo", "Run Lloyd's k-means on a generated dataset");
  km->add_option("--script", common.script, "Script file");
  km->add_option("--input", common.input, "Dataset file");
  km->add_option("--truth", truth, "Label groups forming the ground-truth clusters, e.g. 0,1:2,3");
  km->add_option("--k", k, "Number of clusters")->check(CLI::PositiveNumber);
  km->add_option("--restarts", restarts, "Lloyd restarts")->check(CLI::PositiveNumber);
  add_seed(km);
  add_report(km);

  auto* outlier = app.add_subcommand("outlier-demo", "Carve points on a 2D view of an existing dataset");
  outlier->add_option("--input", common.input, "Dataset file")->required();
  outlier->add_option("--view", view, "Two dimension names, e.g. rm,lstat")->required();
  outlier->add_option("--brush", brush, "JSON array of carves");
  outlier->add_option("--out", common.out, "Output dataset file")->required();
  add_seed(outlier);
  add_format(outlier);
  add_report(outlier);

  auto* serve = app.add_subcommand("serve", "Serve the session protocol on a Unix socket");
  serve->add_option("--socket", socket_path, "Socket path")->required();
  serve->add_option("--script", common.script, "Script to replay before serving");
  add_seed(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    Report report;
    if (*run) report = cmd_run(common);
    else if (*exp) report = cmd_export(common);
    else if (*stats) report = cmd_stats(common);
    else if (*km) report = cmd_kmeans(common, truth, k, restarts);
    else if (*outlier) report = cmd_outlier(common, view, brush);
    else if (*serve) return cmd_serve(common, socket_path);
    emit_report(report, common.report);
    return 0;
  } catch (const sketchnd::IoError& e) {
    std::cerr << "sketchnd: " << e.what() << '\n';
    return 2;
  } catch (const sketchnd::Error& e) {
    std::cerr << "sketchnd: " << e.what() << '\n';
    return 1;
  }
}
