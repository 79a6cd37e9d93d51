#include "sketchnd/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "sketchnd/error.hpp"

namespace sketchnd {

double PlaneExtent::diagonal() const { return std::hypot(width(), height()); }

std::optional<std::pair<Eigen::Index, Eigen::Index>> grid_cell(const PlaneExtent& extent, Eigen::Index grid,
                                                               const Eigen::Vector2d& p) {
  if (!extent.contains(p)) return std::nullopt;
  const auto cell = [grid](double v, double lo, double span) {
    const auto i = static_cast<Eigen::Index>(std::floor((v - lo) / span * static_cast<double>(grid)));
    return std::clamp<Eigen::Index>(i, 0, grid - 1);
  };
  return std::pair{cell(p.x(), extent.x_lo, extent.width()), cell(p.y(), extent.y_lo, extent.height())};
}

Eigen::Vector2d grid_cell_center(const PlaneExtent& extent, Eigen::Index grid, Eigen::Index ix, Eigen::Index iy) {
  const double g = static_cast<double>(grid);
  return {extent.x_lo + (static_cast<double>(ix) + 0.5) / g * extent.width(),
          extent.y_lo + (static_cast<double>(iy) + 0.5) / g * extent.height()};
}

GridValues histogram_2d(const Eigen::Ref<const Eigen::MatrixX2d>& projected, const PlaneExtent& extent,
                        Eigen::Index grid) {
  GridValues counts = GridValues::Zero(grid, grid);
  for (Eigen::Index r = 0; r < projected.rows(); ++r) {
    if (auto cell = grid_cell(extent, grid, projected.row(r).transpose())) counts(cell->first, cell->second) += 1.0;
  }
  return counts;
}

GridValues coarsen(const GridValues& values, Eigen::Index grid) {
  if (values.rows() == grid && values.cols() == grid) return values;
  GridValues out = GridValues::Zero(grid, grid);
  for (Eigen::Index ix = 0; ix < values.rows(); ++ix)
    for (Eigen::Index iy = 0; iy < values.cols(); ++iy)
      out(ix * grid / values.rows(), iy * grid / values.cols()) += values(ix, iy);
  return out;
}

namespace {

// Min-cost flow on the 4-neighbour grid graph with uncapacitated edges, which
// realizes Manhattan ground distance exactly. Successive shortest paths with
// Dijkstra on reduced costs; the residual graph is the net flow per edge, so
// pushing against existing flow cancels it at negative cost.
class GridTransport {
 public:
  GridTransport(Eigen::Index nx, Eigen::Index ny, double cost_x, double cost_y)
      : nx_(nx), ny_(ny), cost_x_(cost_x), cost_y_(cost_y),
        flow_h_(static_cast<std::size_t>(std::max<Eigen::Index>(nx - 1, 0) * ny), 0.0),
        flow_v_(static_cast<std::size_t>(nx * std::max<Eigen::Index>(ny - 1, 0)), 0.0) {}

  double solve(std::vector<double> supply, double tolerance) {
    const std::size_t n = supply.size();
    std::vector<double> potential(n, 0.0);
    std::vector<double> dist(n);
    std::vector<Step> parent(n);
    std::vector<char> done(n);
    double total_cost = 0.0;

    for (;;) {
      bool any_source = false;
      for (double s : supply) any_source = any_source || s > tolerance;
      if (!any_source) break;

      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      using Item = std::pair<double, std::size_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
      for (std::size_t u = 0; u < n; ++u) {
        parent[u].from = n;
        if (supply[u] > tolerance) {
          dist[u] = 0.0;
          queue.emplace(0.0, u);
        }
      }
      std::size_t sink = n;
      while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (supply[u] < -tolerance) {
          sink = u;
          break;
        }
        for_each_arc(u, [&](std::size_t v, const Step& step) {
          const double reduced = std::max(0.0, arc_cost(step) + potential[u] - potential[v]);
          if (!done[v] && d + reduced < dist[v]) {
            dist[v] = d + reduced;
            parent[v] = step;
            queue.emplace(dist[v], v);
          }
        });
      }
      if (sink == n) break;  // only rounding residue is left

      const double reach = dist[sink];
      for (std::size_t u = 0; u < n; ++u) potential[u] += done[u] ? std::min(dist[u], reach) : reach;

      double amount = -supply[sink];
      std::size_t v = sink;
      while (parent[v].from != n) {
        const double f = edge_flow(parent[v]);
        if (cancels(parent[v])) amount = std::min(amount, std::abs(f));
        v = parent[v].from;
      }
      const std::size_t source = v;
      amount = std::min(amount, supply[source]);

      v = sink;
      while (parent[v].from != n) {
        total_cost += amount * arc_cost(parent[v]);
        edge_flow(parent[v]) += parent[v].forward ? amount : -amount;
        v = parent[v].from;
      }
      supply[source] -= amount;
      supply[sink] += amount;
    }
    return total_cost;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  struct Step {
    std::size_t from = 0;
    std::size_t edge = 0;
    bool horizontal = false;
    bool forward = false;  // along the edge's increasing-index direction
  };

  double& edge_flow(const Step& s) { return s.horizontal ? flow_h_[s.edge] : flow_v_[s.edge]; }
  bool cancels(const Step& s) {
    const double f = edge_flow(s);
    return s.forward ? f < 0.0 : f > 0.0;
  }
  double arc_cost(const Step& s) {
    const double base = s.horizontal ? cost_x_ : cost_y_;
    return cancels(s) ? -base : base;
  }

  template <typename Visit>
  void for_each_arc(std::size_t u, Visit&& visit) {
    const auto ix = static_cast<Eigen::Index>(u) / ny_;
    const auto iy = static_cast<Eigen::Index>(u) % ny_;
    auto node = [this](Eigen::Index x, Eigen::Index y) { return static_cast<std::size_t>(x * ny_ + y); };
    if (ix + 1 < nx_) visit(node(ix + 1, iy), Step{u, static_cast<std::size_t>(ix * ny_ + iy), true, true});
    if (ix > 0) visit(node(ix - 1, iy), Step{u, static_cast<std::size_t>((ix - 1) * ny_ + iy), true, false});
    if (iy + 1 < ny_) visit(node(ix, iy + 1), Step{u, static_cast<std::size_t>(ix * (ny_ - 1) + iy), false, true});
    if (iy > 0) visit(node(ix, iy - 1), Step{u, static_cast<std::size_t>(ix * (ny_ - 1) + iy - 1), false, false});
  }

  Eigen::Index nx_;
  Eigen::Index ny_;
  double cost_x_;
  double cost_y_;
  std::vector<double> flow_h_;
  std::vector<double> flow_v_;
};

}  // namespace

double earth_movers_distance(const GridValues& a, const GridValues& b, const PlaneExtent& extent) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0)
    throw ValidationError("histograms must share a non-empty grid");
  const double mass_a = a.sum();
  const double mass_b = b.sum();
  if (!(mass_a > 0.0) || !(mass_b > 0.0)) throw ValidationError("histogram has no mass");
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any()) throw ValidationError("histogram has negative cells");

  std::vector<double> supply(static_cast<std::size_t>(a.size()));
  for (Eigen::Index ix = 0; ix < a.rows(); ++ix)
    for (Eigen::Index iy = 0; iy < a.cols(); ++iy)
      supply[static_cast<std::size_t>(ix * a.cols() + iy)] = a(ix, iy) / mass_a - b(ix, iy) / mass_b;
  double imbalance = 0.0;
  for (double s : supply) imbalance += s;
  // Fold rounding residue into the largest cell so supplies sum to zero.
  *std::max_element(supply.begin(), supply.end(), [](double x, double y) { return std::abs(x) < std::abs(y); }) -=
      imbalance;

  GridTransport transport(a.rows(), a.cols(), extent.width() / static_cast<double>(a.rows()),
                          extent.height() / static_cast<double>(a.cols()));
  return transport.solve(std::move(supply), 1e-12);
}

double normalized_emd(const GridValues& a, const GridValues& b, const PlaneExtent& extent, Eigen::Index grid) {
  return earth_movers_distance(coarsen(a, grid), coarsen(b, grid), extent) / extent.diagonal();
}

double earth_movers_distance_1d(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double spacing) {
  if (a.size() != b.size()) throw ValidationError("histograms must have equal length");
  const double mass_a = a.sum();
  const double mass_b = b.sum();
  if (!(mass_a > 0.0) || !(mass_b > 0.0)) throw ValidationError("histogram has no mass");
  double cdf_a = 0.0;
  double cdf_b = 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    cdf_a += a(i) / mass_a;
    cdf_b += b(i) / mass_b;
    total += std::abs(cdf_a - cdf_b);
  }
  return total * spacing;
}

}  // namespace sketchnd
