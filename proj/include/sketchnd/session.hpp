#pragma once

// Command-sourced editing session. Every edit is a JSON command; the session
// state is a pure fold of (seed, applied commands), which gives undo/redo by
// prefix replay and exact script replay.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sketchnd/dataset.hpp"
#include "sketchnd/pdf_sketch.hpp"
#include "sketchnd/quad.hpp"
#include "sketchnd/random.hpp"
#include "sketchnd/sculpt.hpp"

namespace sketchnd {

using Json = nlohmann::json;

/// Parallel-coordinates canvas geometry: axis i is drawn at
/// x = origin_x + i * axis_spacing, values run from `min` at canvas y =
/// `bottom` to `max` at canvas y = `top`.
struct PcLayout {
  double origin_x = 50.0;
  double axis_spacing = 100.0;
  double top = 20.0;
  double bottom = 420.0;

  /// Canvas point to layout units (axis ordinal, normalized position).
  Point2 to_layout(const Point2& canvas) const;
  Point2 to_canvas(const Point2& layout) const;
  double axis_x(std::size_t axis) const { return origin_x + static_cast<double>(axis) * axis_spacing; }

  static PcLayout from_json(const Json& j);
};

/// Everything an edit can change. Copyable; commands run on a copy so a
/// failing command leaves the session untouched.
struct SessionState {
  Dataset data;
  std::map<std::size_t, DiscretePdf> pdfs;
  std::vector<Quadrilateral> quads;
  /// Quads whose axes stopped being adjacent after a reorder.
  std::vector<Quadrilateral> detached;
  std::map<int, ClusterState> clusters;
  ViewSet views;
  std::optional<std::size_t> selected_view;
  PcLayout layout;
  Rng rng;

  friend bool operator==(const SessionState& a, const SessionState& b);
};

/// Initial state for a seed: the prepopulated uniform dataset.
SessionState initial_state(std::uint64_t seed);

struct CommandOutcome {
  bool ok = true;
  /// Error class on failure: validation, parse, sampling or io.
  std::string error_code;
  std::string message;
  /// Command-specific reply payload (counts, exported text, warnings).
  Json result = Json::object();
  /// True when the command changed the state (and entered the history).
  bool mutated = false;
};

/// Applies one editing command (not undo/redo) to `state` in place. Throws
/// sketchnd::Error subclasses on invalid input; `state` may then be partially
/// modified, so callers work on a copy.
Json apply_command(SessionState& state, const Json& command);

/// Command kinds that never change state and are not recorded.
bool is_query_kind(std::string_view kind);

struct SessionOptions {
  /// Distance between memoized states in the history.
  std::size_t checkpoint_interval = 50;
};

class Session {
 public:
  explicit Session(std::uint64_t seed = 0, SessionOptions options = {});

  /// Runs a command. Edits append to the history (dropping any redo tail);
  /// "undo" and "redo" move the cursor; queries only reply. Failures return
  /// ok = false and leave the session unchanged.
  CommandOutcome apply(const Json& command);
  CommandOutcome apply_text(std::string_view command_json);

  bool undo();
  bool redo();

  const SessionState& state() const { return state_; }
  std::uint64_t seed() const { return seed_; }
  /// Applied edits; the first `cursor()` are in effect.
  const std::vector<Json>& history() const { return history_; }
  std::size_t cursor() const { return cursor_; }
  /// Every accepted command in arrival order, including undo/redo.
  const std::vector<Json>& journal() const { return journal_; }

  /// State obtained by folding the first `count` history entries from the
  /// seed without checkpoints.
  SessionState replay_prefix(std::size_t count) const;

  /// Header line with the seed followed by one journal command per line.
  std::string save_script() const;
  /// Replays a saved script. Throws ParseError (with the line) on malformed
  /// text or a version mismatch, and the command's error if a command fails.
  /// `on_outcome` sees every command's reply with its 1-based line.
  using OutcomeCallback = std::function<void(std::size_t line, const Json& command, const CommandOutcome&)>;
  static Session load_script(std::string_view text, SessionOptions options = {},
                             const OutcomeCallback& on_outcome = {});

 private:
  void rebuild_to(std::size_t cursor);

  std::uint64_t seed_;
  SessionOptions options_;
  SessionState state_;
  std::vector<Json> history_;
  std::size_t cursor_ = 0;
  std::vector<Json> journal_;
  /// State after the first k history entries, for k a multiple of the
  /// checkpoint interval.
  std::map<std::size_t, SessionState> checkpoints_;
};

constexpr std::string_view kScriptFormat = "sketchnd-script";
constexpr int kScriptVersion = 1;

/// Reads a file into a string. Throws IoError.
std::string read_text_file(const std::string& path);
/// Writes a string to a file. Throws IoError.
void write_text_file(const std::string& path, std::string_view text);

/// Replaces a "path" member of import commands with the file's "text", so
/// the recorded command replays without the file.
Json inline_import_path(const Json& command);

/// Short summary of the state: dimensions, clusters, views, history.
Json state_summary(const SessionState& state);

}  // namespace sketchnd
