#pragma once

// Small exact network-flow kernels: Dinic max-flow (integer or real
// capacities) and a successive-shortest-path min-cost transport solver.
// Arc order is insertion order everywhere, so results are deterministic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace lot::flow {

template <typename Cap>
class MaxFlow {
  static_assert(std::is_arithmetic_v<Cap>);

 public:
  explicit MaxFlow(std::size_t nodes) : adj_(nodes) {}

  std::size_t add_arc(std::size_t from, std::size_t to, Cap cap) {
    const std::size_t id = arcs_.size();
    arcs_.push_back({to, cap, cap});
    arcs_.push_back({from, Cap{0}, Cap{0}});
    adj_[from].push_back(id);
    adj_[to].push_back(id + 1);
    return id;
  }

  /// Maximum s-t flow. Residual capacities <= eps count as saturated.
  Cap run(std::size_t s, std::size_t t, Cap eps = Cap{0}) {
    eps_ = eps;
    Cap total{0};
    while (bfs(s, t)) {
      it_.assign(adj_.size(), 0);
      while (true) {
        const Cap pushed = dfs(s, t, std::numeric_limits<Cap>::max());
        if (!(pushed > eps_)) break;
        total += pushed;
      }
    }
    s_ = s;
    return total;
  }

  [[nodiscard]] Cap flow(std::size_t arc) const { return arcs_[arc].initial - arcs_[arc].cap; }

  /// Nodes reachable from the source in the final residual graph: the
  /// source side of a minimum cut.
  [[nodiscard]] std::vector<bool> source_side() const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<std::size_t> stack{s_};
    seen[s_] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t id : adj_[v]) {
        const auto& a = arcs_[id];
        if (a.cap > eps_ && !seen[a.to]) {
          seen[a.to] = true;
          stack.push_back(a.to);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    std::size_t to;
    Cap cap;
    Cap initial;
  };

  bool bfs(std::size_t s, std::size_t t) {
    level_.assign(adj_.size(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop();
      for (std::size_t id : adj_[v]) {
        const auto& a = arcs_[id];
        if (a.cap > eps_ && level_[a.to] < 0) {
          level_[a.to] = level_[v] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  Cap dfs(std::size_t v, std::size_t t, Cap limit) {
    if (v == t) return limit;
    for (auto& i = it_[v]; i < adj_[v].size(); ++i) {
      const std::size_t id = adj_[v][i];
      auto& a = arcs_[id];
      if (!(a.cap > eps_) || level_[a.to] != level_[v] + 1) continue;
      const Cap pushed = dfs(a.to, t, std::min(limit, a.cap));
      if (pushed > eps_) {
        a.cap -= pushed;
        arcs_[id ^ 1].cap += pushed;
        return pushed;
      }
    }
    return Cap{0};
  }

  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
  std::size_t s_ = 0;
  Cap eps_{0};
};

struct TransportPlan {
  double cost = 0.0;
  std::vector<std::vector<double>> mass;  // mass[i][j] moved from supply i to demand j
};

/// Minimum-cost transport between supplies a and demands b (equal totals up
/// to rounding) with nonnegative costs, by successive shortest paths.
/// Augmentation stops once less than `residual` mass remains unrouted.
inline TransportPlan min_cost_transport(const std::vector<double>& a, const std::vector<double>& b,
                                        const std::vector<std::vector<double>>& cost,
                                        double residual = 1e-14) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t source = n + m;
  const std::size_t sink = n + m + 1;
  const std::size_t nodes = n + m + 2;
  const double inf = std::numeric_limits<double>::infinity();

  struct Arc {
    std::size_t from, to;
    double cap, cost;
  };
  std::vector<Arc> arcs;
  auto add = [&](std::size_t u, std::size_t v, double cap, double c) {
    arcs.push_back({u, v, cap, c});
    arcs.push_back({v, u, 0.0, -c});
  };
  for (std::size_t i = 0; i < n; ++i) add(source, i, a[i], 0.0);
  std::vector<std::vector<std::size_t>> pair_arc(n, std::vector<std::size_t>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      pair_arc[i][j] = arcs.size();
      add(i, n + j, inf, cost[i][j]);
    }
  for (std::size_t j = 0; j < m; ++j) add(n + j, sink, b[j], 0.0);

  double remaining = 0.0;
  {
    double sa = 0.0, sb = 0.0;
    for (double x : a) sa += x;
    for (double x : b) sb += x;
    remaining = std::min(sa, sb);
  }
  constexpr double kPositive = 1e-15;
  double cost_scale = 1.0;
  for (const auto& row : cost)
    for (double c : row) cost_scale = std::max(cost_scale, std::abs(c));
  const double improve = 1e-13 * cost_scale;
  while (remaining > residual) {
    // Bellman-Ford over the residual graph.
    std::vector<double> dist(nodes, inf);
    std::vector<std::size_t> via(nodes, arcs.size());
    dist[source] = 0.0;
    for (std::size_t round = 0; round + 1 < nodes; ++round) {
      bool changed = false;
      for (std::size_t id = 0; id < arcs.size(); ++id) {
        const auto& e = arcs[id];
        if (e.cap > kPositive && dist[e.from] < inf && dist[e.from] + e.cost < dist[e.to] - improve) {
          dist[e.to] = dist[e.from] + e.cost;
          via[e.to] = id;
          changed = true;
        }
      }
      if (!changed) break;
    }
    if (dist[sink] == inf) break;
    double push = remaining;
    std::size_t hops = 0;
    for (std::size_t v = sink; v != source; v = arcs[via[v]].from) {
      if (++hops > nodes) throw std::logic_error("min_cost_transport: cyclic predecessor chain");
      push = std::min(push, arcs[via[v]].cap);
    }
    for (std::size_t v = sink; v != source; v = arcs[via[v]].from) {
      arcs[via[v]].cap -= push;
      arcs[via[v] ^ 1].cap += push;
    }
    remaining -= push;
  }

  TransportPlan plan;
  plan.mass.assign(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double f = arcs[pair_arc[i][j] ^ 1].cap;
      plan.mass[i][j] = f;
      if (f > 0.0) plan.cost += f * cost[i][j];
    }
  return plan;
}

}  // namespace lot::flow
