#pragma once

// Static globally hyperbolic backends in split form R x Sigma with metric
// g = -alpha dt^2 + alpha * ghat, where ghat is the optical metric of Sigma.
//
//   minkowski     Sigma = R, ghat = dx^2
//   static-graph  Sigma = metric graph, ghat = arclength along edges
//
// alpha and the conformal factor u are positive scenario-wide constants.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "lot/numeric.hpp"

namespace lot {

enum class Backend : std::uint8_t { minkowski, static_graph };

inline std::string_view backend_name(Backend b) {
  return b == Backend::minkowski ? "minkowski-1+1" : "static-graph";
}

/// A point of Sigma: a real coordinate (Minkowski), a vertex, or an
/// edge-interior location given by its optical offset from the edge's first
/// endpoint.
struct SpatialPoint {
  enum class Kind : std::uint8_t { line, vertex, edge };

  Kind kind = Kind::line;
  std::size_t id = 0;
  double coord = 0.0;

  static SpatialPoint on_line(double x) { return {Kind::line, 0, x}; }
  static SpatialPoint at_vertex(std::size_t v) { return {Kind::vertex, v, 0.0}; }
  static SpatialPoint on_edge(std::size_t e, double offset) {
    return {Kind::edge, e, offset};
  }

  friend bool operator==(const SpatialPoint&, const SpatialPoint&) = default;
};

inline bool operator<(const SpatialPoint& a, const SpatialPoint& b) {
  return std::tie(a.kind, a.id, a.coord) < std::tie(b.kind, b.id, b.coord);
}

/// An event (t, x) of the split spacetime. t is the canonical temporal
/// function T0.
struct Event {
  double t = 0.0;
  SpatialPoint x;

  friend bool operator==(const Event&, const Event&) = default;
};

inline bool operator<(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  return a.x < b.x;
}

struct GraphEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double length = 0.0;
};

/// The part of an edge a segment runs along, with both endpoint offsets.
struct Carrier {
  std::optional<std::size_t> edge;  // empty: static or Minkowski segment
  double from = 0.0;
  double to = 0.0;
};

class Spacetime {
 public:
  static Spacetime minkowski(double alpha = 1.0, double u = 1.0,
                             double causal_tolerance = 0.0) {
    Spacetime st;
    st.backend_ = Backend::minkowski;
    st.set_constants(alpha, u, causal_tolerance);
    return st;
  }

  static Spacetime graph(std::vector<std::string> vertices,
                         const std::vector<std::tuple<std::string, std::string, double>>& edges,
                         double alpha = 1.0, double u = 1.0, double causal_tolerance = 0.0) {
    Spacetime st;
    st.backend_ = Backend::static_graph;
    st.set_constants(alpha, u, causal_tolerance);
    if (vertices.empty()) throw InputError("graph spacetime needs at least one vertex");
    st.names_ = std::move(vertices);
    for (std::size_t i = 0; i < st.names_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (st.names_[i] == st.names_[j])
          throw InputError("duplicate vertex id '" + st.names_[i] + "'");
      }
    }
    st.adjacency_.resize(st.names_.size());
    for (const auto& [na, nb, len] : edges) {
      auto ia = st.vertex_index(na);
      auto ib = st.vertex_index(nb);
      if (!ia || !ib)
        throw InputError("edge [" + na + ", " + nb + "] references an unknown vertex");
      if (*ia == *ib) throw InputError("self-loop at vertex '" + na + "'");
      if (!(len > 0.0) || !std::isfinite(len))
        throw InputError("edge [" + na + ", " + nb + "] must have positive finite length");
      if (st.edge_between(*ia, *ib))
        throw InputError("parallel edge [" + na + ", " + nb + "]");
      st.edges_.push_back({*ia, *ib, len});
      st.adjacency_[*ia].push_back({*ib, st.edges_.size() - 1});
      st.adjacency_[*ib].push_back({*ia, st.edges_.size() - 1});
    }
    st.build_ranks();
    st.build_distances();
    return st;
  }

  [[nodiscard]] Backend backend() const { return backend_; }
  [[nodiscard]] bool is_graph() const { return backend_ == Backend::static_graph; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double u() const { return u_; }
  [[nodiscard]] double causal_tolerance() const { return causal_tol_; }

  [[nodiscard]] const std::vector<std::string>& vertex_names() const { return names_; }
  [[nodiscard]] const std::vector<GraphEdge>& edges() const { return edges_; }
  [[nodiscard]] std::size_t vertex_count() const { return names_.size(); }

  [[nodiscard]] std::optional<std::size_t> vertex_index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  [[nodiscard]] std::optional<std::size_t> edge_between(std::size_t a, std::size_t b) const {
    if (a >= adjacency_.size()) return std::nullopt;
    for (const auto& arc : adjacency_[a])
      if (arc.to == b) return arc.edge;
    return std::nullopt;
  }

  /// Throws InputError if x is not a point of this backend's Sigma.
  void check_point(const SpatialPoint& x) const {
    using K = SpatialPoint::Kind;
    if (backend_ == Backend::minkowski) {
      if (x.kind != K::line || !std::isfinite(x.coord))
        throw InputError("expected a finite real coordinate on the Minkowski backend");
      return;
    }
    if (x.kind == K::vertex) {
      if (x.id >= names_.size()) throw InputError("vertex id out of range");
      return;
    }
    if (x.kind == K::edge) {
      if (x.id >= edges_.size()) throw InputError("edge id out of range");
      const double len = edges_[x.id].length;
      if (!(x.coord >= -kGeomTol && x.coord <= len + kGeomTol))
        throw InputError("edge offset outside [0, length]");
      return;
    }
    throw InputError("expected a graph location on the static-graph backend");
  }

  void check_event(const Event& p) const {
    if (!std::isfinite(p.t)) throw InputError("event time must be finite");
    check_point(p.x);
  }

  /// Canonical representative: edge endpoints become vertices, offsets are
  /// clamped into [0, length].
  [[nodiscard]] SpatialPoint normalize(SpatialPoint x) const {
    check_point(x);
    if (x.kind != SpatialPoint::Kind::edge) return x;
    const auto& e = edges_[x.id];
    if (x.coord <= kVertexSnap * e.length) return SpatialPoint::at_vertex(e.a);
    if (x.coord >= e.length * (1.0 - kVertexSnap)) return SpatialPoint::at_vertex(e.b);
    return x;
  }

  [[nodiscard]] Event normalize(Event p) const {
    check_event(p);
    p.x = normalize(p.x);
    return p;
  }

  [[nodiscard]] double optical_distance(const SpatialPoint& x, const SpatialPoint& y) const {
    if (backend_ == Backend::minkowski) {
      check_point(x);
      check_point(y);
      return std::abs(x.coord - y.coord);
    }
    const SpatialPoint a = normalize(x);
    const SpatialPoint b = normalize(y);
    if (a == b) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    if (a.kind == SpatialPoint::Kind::edge && b.kind == SpatialPoint::Kind::edge && a.id == b.id)
      best = std::abs(a.coord - b.coord);
    for (const auto& ea : exits(a))
      for (const auto& eb : exits(b)) best = std::min(best, ea.d + dist_[ea.v][eb.v] + eb.d);
    return best;
  }

  /// Deterministic shortest route from x to y: x, the vertices passed in
  /// order, y. Among equal-length routes the vertex-id sequence is
  /// lexicographically smallest.
  [[nodiscard]] std::vector<SpatialPoint> shortest_route(const SpatialPoint& x,
                                                         const SpatialPoint& y) const {
    if (backend_ == Backend::minkowski) {
      check_point(x);
      check_point(y);
      if (x == y) return {x};
      return {x, y};
    }
    const SpatialPoint nx = normalize(x);
    const SpatialPoint ny = normalize(y);
    const Route r = best_route(nx, ny);
    std::vector<SpatialPoint> out{nx};
    for (std::size_t v : r.vertices) {
      const SpatialPoint pv = SpatialPoint::at_vertex(v);
      if (!(out.back() == pv)) out.push_back(pv);
    }
    if (!(out.back() == ny)) out.push_back(ny);
    return out;
  }

  [[nodiscard]] bool points_close(const SpatialPoint& x, const SpatialPoint& y,
                                  double tol = kGeomTol) const {
    using K = SpatialPoint::Kind;
    if (backend_ == Backend::minkowski) return std::abs(x.coord - y.coord) <= tol;
    const SpatialPoint a = normalize(x);
    const SpatialPoint b = normalize(y);
    if (a.kind == K::vertex && b.kind == K::vertex) return a.id == b.id;
    if (a.kind == K::edge && b.kind == K::edge)
      return a.id == b.id && std::abs(a.coord - b.coord) <= tol;
    const SpatialPoint& v = a.kind == K::vertex ? a : b;
    const SpatialPoint& p = a.kind == K::vertex ? b : a;
    const auto& e = edges_[p.id];
    if (e.a == v.id && p.coord <= tol) return true;
    if (e.b == v.id && e.length - p.coord <= tol) return true;
    return false;
  }

  [[nodiscard]] bool events_close(const Event& p, const Event& q, double tol = kGeomTol) const {
    return std::abs(p.t - q.t) <= tol && points_close(p.x, q.x, tol);
  }

  /// The edge (with offsets) along which a segment from x to y runs, or
  /// nullopt when x and y share no edge. Static segments and Minkowski
  /// segments have no edge.
  [[nodiscard]] std::optional<Carrier> carrier(const SpatialPoint& x,
                                               const SpatialPoint& y) const {
    using K = SpatialPoint::Kind;
    if (backend_ == Backend::minkowski) return Carrier{std::nullopt, x.coord, y.coord};
    const SpatialPoint a = normalize(x);
    const SpatialPoint b = normalize(y);
    if (a == b) return Carrier{};
    auto offset_on = [&](const SpatialPoint& p, std::size_t e) -> std::optional<double> {
      const auto& ed = edges_[e];
      if (p.kind == K::edge) return p.id == e ? std::optional<double>(p.coord) : std::nullopt;
      if (p.id == ed.a) return 0.0;
      if (p.id == ed.b) return ed.length;
      return std::nullopt;
    };
    std::optional<std::size_t> e;
    if (a.kind == K::edge) e = a.id;
    else if (b.kind == K::edge) e = b.id;
    else e = edge_between(a.id, b.id);
    if (!e) return std::nullopt;
    auto oa = offset_on(a, *e);
    auto ob = offset_on(b, *e);
    if (!oa || !ob) return std::nullopt;
    return Carrier{e, *oa, *ob};
  }

  /// Optical length of the segment from x to y along its carrier.
  [[nodiscard]] double segment_length(const SpatialPoint& x, const SpatialPoint& y) const {
    auto c = carrier(x, y);
    if (!c) throw InputError("segment endpoints do not share an edge");
    return std::abs(c->to - c->from);
  }

  /// Point at fraction s in [0, 1] of the segment from x to y.
  [[nodiscard]] SpatialPoint lerp(const SpatialPoint& x, const SpatialPoint& y, double s) const {
    if (s <= 0.0) return x;
    if (s >= 1.0) return y;
    if (backend_ == Backend::minkowski)
      return SpatialPoint::on_line(x.coord + s * (y.coord - x.coord));
    auto c = carrier(x, y);
    if (!c) throw InputError("segment endpoints do not share an edge");
    if (!c->edge) return normalize(x);
    return normalize(SpatialPoint::on_edge(*c->edge, c->from + s * (c->to - c->from)));
  }

  [[nodiscard]] std::string describe(const SpatialPoint& x) const {
    std::ostringstream os;
    os.precision(17);
    switch (x.kind) {
      case SpatialPoint::Kind::line: os << x.coord; break;
      case SpatialPoint::Kind::vertex:
        os << (x.id < names_.size() ? names_[x.id] : "?");
        break;
      case SpatialPoint::Kind::edge:
        if (x.id < edges_.size())
          os << names_[edges_[x.id].a] << "-" << names_[edges_[x.id].b] << "@" << x.coord;
        else
          os << "edge?";
        break;
    }
    return os.str();
  }

  [[nodiscard]] std::string describe(const Event& p) const {
    std::ostringstream os;
    os.precision(17);
    os << "(" << p.t << ", " << describe(p.x) << ")";
    return os.str();
  }

 private:
  struct Arc {
    std::size_t to;
    std::size_t edge;
  };
  struct Route {
    double length = 0.0;
    std::vector<std::size_t> vertices;
  };

  Spacetime() = default;

  void set_constants(double alpha, double u, double tol) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("alpha must be positive");
    if (!(u > 0.0) || !std::isfinite(u)) throw InputError("u must be positive");
    if (!(tol >= 0.0)) throw InputError("causal tolerance must be nonnegative");
    alpha_ = alpha;
    u_ = u;
    causal_tol_ = tol;
  }

  void build_ranks() {
    const std::size_t n = names_.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return names_[a] < names_[b]; });
    rank_.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) rank_[order[r]] = r;
    for (auto& arcs : adjacency_)
      std::sort(arcs.begin(), arcs.end(),
                [&](const Arc& x, const Arc& y) { return rank_[x.to] < rank_[y.to]; });
  }

  void build_distances() {
    const std::size_t n = names_.size();
    const double inf = std::numeric_limits<double>::infinity();
    dist_.assign(n, std::vector<double>(n, inf));
    using Item = std::pair<double, std::size_t>;
    for (std::size_t s = 0; s < n; ++s) {
      auto& d = dist_[s];
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      d[s] = 0.0;
      pq.push({0.0, s});
      while (!pq.empty()) {
        auto [dv, v] = pq.top();
        pq.pop();
        if (dv > d[v]) continue;
        for (const auto& arc : adjacency_[v]) {
          const double nd = dv + edges_[arc.edge].length;
          if (nd < d[arc.to]) {
            d[arc.to] = nd;
            pq.push({nd, arc.to});
          }
        }
      }
      for (std::size_t v = 0; v < n; ++v)
        if (!std::isfinite(d[v]))
          throw InputError("graph is disconnected: no path from '" + names_[s] + "' to '" +
                           names_[v] + "'");
    }
  }

  static bool same_length(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  }

  // Lexicographically smallest (by vertex rank) shortest vertex path s -> t.
  [[nodiscard]] std::vector<std::size_t> lex_path(std::size_t s, std::size_t t) const {
    std::vector<std::size_t> path{s};
    std::size_t v = s;
    while (v != t) {
      std::size_t next = v;
      for (const auto& arc : adjacency_[v]) {
        if (same_length(edges_[arc.edge].length + dist_[arc.to][t], dist_[v][t])) {
          next = arc.to;
          break;
        }
      }
      if (next == v) break;  // unreachable by construction
      path.push_back(next);
      v = next;
    }
    return path;
  }

  [[nodiscard]] bool lex_less(const std::vector<std::size_t>& a,
                              const std::vector<std::size_t>& b) const {
    return std::lexicographical_compare(
        a.begin(), a.end(), b.begin(), b.end(),
        [&](std::size_t x, std::size_t y) { return rank_[x] < rank_[y]; });
  }

  struct Exit {
    std::size_t v;
    double d;
  };

  // Vertices through which a route can leave p, with the distance to each.
  [[nodiscard]] std::vector<Exit> exits(const SpatialPoint& p) const {
    if (p.kind == SpatialPoint::Kind::vertex) return {{p.id, 0.0}};
    const auto& e = edges_[p.id];
    return {{e.a, p.coord}, {e.b, e.length - p.coord}};
  }

  [[nodiscard]] Route best_route(const SpatialPoint& x, const SpatialPoint& y) const {
    if (x == y) return {};
    std::optional<Route> best;
    auto offer = [&](Route r) {
      if (!best || (r.length < best->length && !same_length(r.length, best->length)) ||
          (same_length(r.length, best->length) && lex_less(r.vertices, best->vertices)))
        best = std::move(r);
    };
    if (x.kind == SpatialPoint::Kind::edge && y.kind == SpatialPoint::Kind::edge &&
        x.id == y.id)
      offer({std::abs(x.coord - y.coord), {}});
    for (const auto& ex : exits(x)) {
      for (const auto& ey : exits(y)) {
        offer({ex.d + dist_[ex.v][ey.v] + ey.d, lex_path(ex.v, ey.v)});
      }
    }
    return *best;
  }

  Backend backend_ = Backend::minkowski;
  double alpha_ = 1.0;
  double u_ = 1.0;
  double causal_tol_ = 0.0;
  std::vector<std::string> names_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<Arc>> adjacency_;
  std::vector<std::size_t> rank_;
  std::vector<std::vector<double>> dist_;
};

inline double optical_distance(const Spacetime& st, const SpatialPoint& x, const SpatialPoint& y) {
  return st.optical_distance(x, y);
}

/// p precedes q iff q.t - p.t >= dhat(p.x, q.x) - eps, the static optical
/// causality rule (null boundary included).
inline bool causally_precedes(const Spacetime& st, const Event& p, const Event& q,
                              double extra_tolerance = 0.0) {
  st.check_event(p);
  st.check_event(q);
  const double tol = std::max(st.causal_tolerance(), extra_tolerance);
  return q.t - p.t >= st.optical_distance(p.x, q.x) - tol;
}

/// Distance of the complete Riemannian metric w = u g + 2 u alpha dT0^2,
/// which on a static split reduces to sqrt(u alpha) * |(dt, dhat)|.
inline double dw_distance(const Spacetime& st, const Event& p, const Event& q) {
  const double dt = q.t - p.t;
  const double dx = st.optical_distance(p.x, q.x);
  return std::sqrt(st.u() * st.alpha()) * std::hypot(dt, dx);
}

/// Lipschitz constant of T0-parametrized causal evolutions w.r.t. d_w:
/// max of sqrt(2 u alpha) over the slab, constant on these backends.
inline double slab_bound_constant(const Spacetime& st, double a, double b) {
  if (!(a <= b)) throw InputError("slab bound needs a <= b");
  return std::sqrt(2.0 * st.u() * st.alpha());
}

}  // namespace lot
