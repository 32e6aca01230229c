#pragma once

// Causal curves along which a time function T increases at a constant pace:
//
//   T(gamma(t)) - T(gamma(s)) = c_gamma (t - s)   for all s, t in the domain.
//
// Curves are piecewise geodesic: a sorted list of nodes (param, event) with
// constant-speed interpolation in both t and optical arclength between
// consecutive nodes. Every T_f is affine along such a segment, so T o gamma
// is piecewise linear and every reparametrization below is exact.
//
// Unbounded domains keep their nodes in a finite window; beyond it the curve
// continues statically (spatially frozen, t affine in the parameter).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lot/numeric.hpp"
#include "lot/spacetime.hpp"
#include "lot/timefunc.hpp"

namespace lot {

struct Interval {
  enum class Kind : std::uint8_t { compact, future_ray, past_ray, line };

  Kind kind = Kind::line;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval compact(double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
      throw InputError("compact interval needs finite a < b");
    return {Kind::compact, a, b};
  }
  /// [a, +inf)
  static Interval future_ray(double a) {
    if (!std::isfinite(a)) throw InputError("half-line endpoint must be finite");
    return {Kind::future_ray, a, std::numeric_limits<double>::infinity()};
  }
  /// (-inf, b]
  static Interval past_ray(double b) {
    if (!std::isfinite(b)) throw InputError("half-line endpoint must be finite");
    return {Kind::past_ray, -std::numeric_limits<double>::infinity(), b};
  }
  static Interval line() { return {}; }

  [[nodiscard]] bool bounded_below() const {
    return kind == Kind::compact || kind == Kind::future_ray;
  }
  [[nodiscard]] bool bounded_above() const {
    return kind == Kind::compact || kind == Kind::past_ray;
  }
  [[nodiscard]] bool contains(double s, double tol = kGeomTol) const {
    return (!bounded_below() || s >= lo - tol) && (!bounded_above() || s <= hi + tol);
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline std::string to_string(const Interval& I) {
  std::ostringstream os;
  os.precision(17);
  switch (I.kind) {
    case Interval::Kind::compact: os << "[" << I.lo << ", " << I.hi << "]"; break;
    case Interval::Kind::future_ray: os << "[" << I.lo << ", inf)"; break;
    case Interval::Kind::past_ray: os << "(-inf, " << I.hi << "]"; break;
    case Interval::Kind::line: os << "R"; break;
  }
  return os.str();
}

struct Node {
  double param = 0.0;
  Event event;

  friend bool operator==(const Node&, const Node&) = default;
};

/// An unparametrized causal path: its ordered geodesic breakpoints.
class RawPath {
 public:
  RawPath() = default;
  explicit RawPath(std::vector<Event> events) : events_(std::move(events)) {}

  /// Builds a path through the given events, inserting the vertices passed by
  /// the deterministic shortest route between consecutive events.
  static RawPath through(const Spacetime& st, const std::vector<Event>& waypoints);

  [[nodiscard]] const std::vector<Event>& events() const { return events_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }

  friend bool operator==(const RawPath&, const RawPath&) = default;
  friend bool operator<(const RawPath& a, const RawPath& b) { return a.events_ < b.events_; }

 private:
  std::vector<Event> events_;
};

class CausalCurve {
 public:
  CausalCurve(Interval domain, std::vector<Node> nodes, std::optional<double> c,
              TimeFunctionRef time_function, double past_rate = 1.0, double future_rate = 1.0)
      : domain_(domain),
        nodes_(std::move(nodes)),
        c_(c),
        time_fn_(std::move(time_function)),
        past_rate_(past_rate),
        future_rate_(future_rate) {
    if (nodes_.empty()) throw InputError("curve needs at least one node");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (!(nodes_[i].param > nodes_[i - 1].param))
        throw InputError("curve node parameters must be strictly increasing");
    if (domain_.bounded_below() && nodes_.front().param != domain_.lo)
      throw InputError("first node must sit at the lower end of the domain");
    if (domain_.bounded_above() && nodes_.back().param != domain_.hi)
      throw InputError("last node must sit at the upper end of the domain");
    if (c_ && !(*c_ > 0.0)) throw InputError("curve constant c must be positive");
    if (!(past_rate_ > 0.0) || !(future_rate_ > 0.0))
      throw InputError("static extension rates must be positive");
  }

  [[nodiscard]] const Interval& domain() const { return domain_; }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] std::optional<double> c() const { return c_; }
  [[nodiscard]] bool is_affine() const { return c_.has_value(); }
  [[nodiscard]] const TimeFunctionRef& time_function() const { return time_fn_; }
  [[nodiscard]] double past_rate() const { return past_rate_; }
  [[nodiscard]] double future_rate() const { return future_rate_; }
  [[nodiscard]] double window_lo() const { return nodes_.front().param; }
  [[nodiscard]] double window_hi() const { return nodes_.back().param; }
  [[nodiscard]] const Event& front() const { return nodes_.front().event; }
  [[nodiscard]] const Event& back() const { return nodes_.back().event; }

  [[nodiscard]] RawPath path() const {
    std::vector<Event> ev;
    ev.reserve(nodes_.size());
    for (const auto& n : nodes_) ev.push_back(n.event);
    return RawPath(std::move(ev));
  }

  /// gamma(s). Outside the node window the static extension is used.
  [[nodiscard]] Event at(const Spacetime& st, double s) const {
    if (!domain_.contains(s))
      throw InputError("parameter " + std::to_string(s) + " outside curve domain " +
                       to_string(domain_));
    if (s <= nodes_.front().param) {
      const auto& n = nodes_.front();
      if (s == n.param || domain_.bounded_below()) return n.event;
      return Event{n.event.t - past_rate_ * (n.param - s), n.event.x};
    }
    if (s >= nodes_.back().param) {
      const auto& n = nodes_.back();
      if (s == n.param || domain_.bounded_above()) return n.event;
      return Event{n.event.t + future_rate_ * (s - n.param), n.event.x};
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s,
                               [](double v, const Node& n) { return v < n.param; });
    const Node& b = *it;
    const Node& a = *(it - 1);
    if (s == a.param) return a.event;
    const double w = (s - a.param) / (b.param - a.param);
    return Event{a.event.t + w * (b.event.t - a.event.t), st.lerp(a.event.x, b.event.x, w)};
  }

  /// Restriction to [lo, hi] inside the domain, as a compact curve.
  [[nodiscard]] CausalCurve restricted(const Spacetime& st, double lo, double hi) const {
    if (!(lo < hi)) throw InputError("restriction needs lo < hi");
    std::vector<Node> out;
    out.push_back({lo, at(st, lo)});
    for (const auto& n : nodes_)
      if (n.param > lo && n.param < hi) out.push_back(n);
    out.push_back({hi, at(st, hi)});
    return CausalCurve(Interval::compact(lo, hi), std::move(out), c_, time_fn_, past_rate_,
                       future_rate_);
  }

  /// Structural identity: same domain, constant and node list.
  friend bool operator==(const CausalCurve& a, const CausalCurve& b) {
    return a.domain_ == b.domain_ && a.c_ == b.c_ && a.nodes_ == b.nodes_ &&
           a.past_rate_ == b.past_rate_ && a.future_rate_ == b.future_rate_;
  }

 private:
  Interval domain_;
  std::vector<Node> nodes_;
  std::optional<double> c_;
  TimeFunctionRef time_fn_;
  double past_rate_;
  double future_rate_;
};

/// Node-by-node comparison at tolerance.
inline bool curves_close(const Spacetime& st, const CausalCurve& a, const CausalCurve& b,
                         double tol = kGeomTol) {
  if (!(a.domain() == b.domain()) || a.nodes().size() != b.nodes().size()) return false;
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    if (std::abs(a.nodes()[i].param - b.nodes()[i].param) > tol) return false;
    if (!st.events_close(a.nodes()[i].event, b.nodes()[i].event, tol)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Geodesics

/// The deterministic causal geodesic from p to q, parametrized by T0 on
/// [p.t, q.t] (c = 1): shortest spatial route with lexicographic tie-break,
/// traversed at constant optical speed.
inline CausalCurve causal_geodesic(const Spacetime& st, const Event& p, const Event& q) {
  const Event np = st.normalize(p);
  const Event nq = st.normalize(q);
  if (!(np.t < nq.t)) {
    throw DegenerateError("causal geodesic needs p.t < q.t; got " + st.describe(np) + " and " +
                          st.describe(nq));
  }
  if (!causally_precedes(st, np, nq))
    throw PreconditionError("events are not causally related: " + st.describe(np) + " -> " +
                            st.describe(nq));
  const auto route = st.shortest_route(np.x, nq.x);
  std::vector<double> arclength{0.0};
  for (std::size_t i = 1; i < route.size(); ++i)
    arclength.push_back(arclength.back() + st.segment_length(route[i - 1], route[i]));
  const double total = arclength.back();
  const double dt = nq.t - np.t;

  std::vector<Node> nodes;
  nodes.push_back({np.t, np});
  if (total > 0.0) {
    for (std::size_t i = 1; i + 1 < route.size(); ++i) {
      const double t = np.t + dt * (arclength[i] / total);
      if (t > nodes.back().param && t < nq.t) nodes.push_back({t, Event{t, route[i]}});
    }
  }
  nodes.push_back({nq.t, nq});
  return CausalCurve(Interval::compact(np.t, nq.t), std::move(nodes), 1.0,
                     share(TimeFunction::canonical(st)));
}

inline RawPath RawPath::through(const Spacetime& st, const std::vector<Event>& waypoints) {
  if (waypoints.empty()) throw InputError("path needs at least one event");
  std::vector<Event> out{st.normalize(waypoints.front())};
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const auto g = causal_geodesic(st, out.back(), waypoints[i]);
    for (std::size_t k = 1; k < g.nodes().size(); ++k) out.push_back(g.nodes()[k].event);
  }
  return RawPath(std::move(out));
}

// ---------------------------------------------------------------------------
// Canonical T-affine parametrizations

namespace detail {

inline std::vector<double> strictly_increasing_levels(const Spacetime& st,
                                                      const TimeFunction& T,
                                                      const RawPath& path) {
  std::vector<double> levels;
  levels.reserve(path.size());
  for (const auto& e : path.events()) levels.push_back(T(st, e));
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1]))
      throw DegenerateError("time function '" + T.name() +
                            "' does not strictly increase along the path");
  return levels;
}

}  // namespace detail

/// The unique reparametrization of `path` lying in C^{[a,b]}_T.
inline CausalCurve canonicalize_compact(const Spacetime& st, const TimeFunctionRef& T,
                                        const RawPath& path, double a, double b) {
  require_valid(st, *T);
  const Interval dom = Interval::compact(a, b);
  if (path.size() < 2) throw DegenerateError("cannot canonicalize a single-event path");
  const auto levels = detail::strictly_increasing_levels(st, *T, path);
  const double span = levels.back() - levels.front();
  std::vector<Node> nodes;
  nodes.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    double s = a + (b - a) * ((levels[i] - levels.front()) / span);
    if (i == 0) s = a;
    if (i + 1 == path.size()) s = b;
    nodes.push_back({s, path.events()[i]});
  }
  const double c = span / (b - a);
  return CausalCurve(dom, std::move(nodes), c, T, c, c);
}

/// A raw path together with the behaviour of its ends: an unbounded end
/// continues statically forever (T -> +-inf); a bounded end stops at the
/// first/last event.
struct NoncompactPath {
  RawPath path;
  bool past_unbounded = false;
  bool future_unbounded = false;
};

/// The T-affine reparametrizations of a path with possibly infinite T-range.
/// The admissible domain is dictated by which of T_gamma, T^gamma are finite;
/// `slope` (A) and `offset` (B) are the free affine constants where the
/// domain leaves them undetermined.
inline CausalCurve canonicalize_noncompact(const Spacetime& st, const TimeFunctionRef& T,
                                           const NoncompactPath& np, const Interval& request,
                                           double slope, double offset = 0.0) {
  using K = Interval::Kind;
  const bool lo_inf = np.past_unbounded;
  const bool hi_inf = np.future_unbounded;
  const K expected = !lo_inf && !hi_inf ? K::compact
                     : !lo_inf          ? K::future_ray
                     : !hi_inf          ? K::past_ray
                                        : K::line;
  if (request.kind != expected) {
    static const char* const kCase[] = {
        "both T_gamma and T^gamma are finite: the domain must be a bounded interval [a, b]",
        "T_gamma is finite and T^gamma = +inf: the domain must be [a, +inf)",
        "T_gamma = -inf and T^gamma is finite: the domain must be (-inf, b]",
        "T_gamma = -inf and T^gamma = +inf: the domain must be R"};
    throw PreconditionError(std::string("interval kind mismatch; ") +
                            kCase[static_cast<int>(expected)] + ", requested " +
                            to_string(request));
  }
  if (expected == K::compact) return canonicalize_compact(st, T, np.path, request.lo, request.hi);
  require_valid(st, *T);
  if (!(slope > 0.0)) throw InputError("affine slope A must be positive");
  if (np.path.size() == 0) throw InputError("empty path");
  const auto levels = detail::strictly_increasing_levels(st, *T, np.path);
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < np.path.size(); ++i) {
    double s = 0.0;
    switch (expected) {
      case K::future_ray:
        s = i == 0 ? request.lo : request.lo + (levels[i] - levels.front()) / slope;
        break;
      case K::past_ray:
        s = i + 1 == levels.size() ? request.hi : request.hi + (levels[i] - levels.back()) / slope;
        break;
      default: s = (levels[i] - offset) / slope; break;
    }
    nodes.push_back({s, np.path.events()[i]});
  }
  return CausalCurve(request, std::move(nodes), slope, T, slope, slope);
}

// ---------------------------------------------------------------------------
// Structure and causality checks

/// Largest deviation from T(gamma(t)) = T(gamma(t0)) + c (t - t0) over the
/// nodes and one probe on each static tail.
inline double affinity_residual(const Spacetime& st, const TimeFunction& T,
                                const CausalCurve& g, double c) {
  const auto& n0 = g.nodes().front();
  const double base = T(st, n0.event);
  double worst = 0.0;
  auto probe = [&](double s) {
    worst = std::max(worst, std::abs(T(st, g.at(st, s)) - base - c * (s - n0.param)));
  };
  for (const auto& n : g.nodes()) probe(n.param);
  if (!g.domain().bounded_below()) probe(g.window_lo() - 1.0);
  if (!g.domain().bounded_above()) probe(g.window_hi() + 1.0);
  return worst;
}

/// c of gamma w.r.t. T if T o gamma is affine, else nullopt.
inline std::optional<double> affine_constant(const Spacetime& st, const TimeFunction& T,
                                             const CausalCurve& g, double tol = kGeomTol) {
  double lo = g.window_lo();
  double hi = g.window_hi();
  if (lo == hi) {
    if (g.domain().bounded_above()) lo -= 1.0;
    else hi += 1.0;
  }
  const double c = (T(st, g.at(st, hi)) - T(st, g.at(st, lo))) / (hi - lo);
  if (!(c > 0.0)) return std::nullopt;
  if (affinity_residual(st, T, g, c) > tol) return std::nullopt;
  return c;
}

struct CausalViolation {
  double s = 0.0;
  double t = 0.0;
  Event p;
  Event q;
  std::string reason;
};

struct CausalityReport {
  bool ok = true;
  std::optional<CausalViolation> violation;
};

/// s < t implies gamma(s) precedes gamma(t), checked on all ordered pairs of
/// n uniform samples plus all nodes; segment structure (shared carrier,
/// optical speed <= 1, strict t-increase) is checked first.
inline CausalityReport verify_causal(const Spacetime& st, const CausalCurve& g,
                                     std::size_t samples = 16) {
  if (samples < 2) throw InputError("verify_causal needs at least 2 samples");
  CausalityReport r;
  const auto& nodes = g.nodes();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& a = nodes[i - 1];
    const Node& b = nodes[i];
    auto fail = [&](std::string why) {
      r.ok = false;
      r.violation = CausalViolation{a.param, b.param, a.event, b.event, std::move(why)};
      return r;
    };
    if (!(b.event.t > a.event.t)) return fail("t does not strictly increase");
    const auto car = st.carrier(a.event.x, b.event.x);
    if (!car) return fail("segment endpoints share no edge");
    if (std::abs(car->to - car->from) > (b.event.t - a.event.t) + kGeomTol)
      return fail("superluminal segment");
  }
  std::vector<double> params;
  double lo = g.window_lo();
  double hi = g.window_hi();
  if (!g.domain().bounded_below()) lo -= 1.0;
  if (!g.domain().bounded_above()) hi += 1.0;
  for (std::size_t k = 0; k < samples; ++k)
    params.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1));
  for (const auto& n : nodes) params.push_back(n.param);
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());
  std::vector<Event> ev;
  ev.reserve(params.size());
  for (double s : params) ev.push_back(g.at(st, s));
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (!causally_precedes(st, ev[i], ev[j], kGeomTol)) {
        r.ok = false;
        r.violation = CausalViolation{params[i], params[j], ev[i], ev[j], "not causally related"};
        return r;
      }
    }
  }
  return r;
}

/// Membership in I_T: T o gamma = id. For a T-affine full-line curve this is
/// T(gamma(0)) = 0 and T(gamma(1)) = 1.
inline bool in_IT(const Spacetime& st, const TimeFunction& T, const CausalCurve& g) {
  if (g.domain().kind != Interval::Kind::line)
    throw PreconditionError("I_T membership is defined for full-line curves");
  if (!affine_constant(st, T, g)) return false;
  return close(T(st, g.at(st, 0.0)), 0.0) && close(T(st, g.at(st, 1.0)), 1.0);
}

// ---------------------------------------------------------------------------
// Curve operations

/// The reparametrization map between T1- and T2-canonical full-line curves:
/// gamma~ = gamma o (T2 o gamma)^-1 o T1 o gamma. Events are kept bitwise;
/// only node parameters change.
inline CausalCurve reparametrize(const Spacetime& st, const CausalCurve& g,
                                 const TimeFunctionRef& T1, const TimeFunctionRef& T2) {
  if (g.domain().kind != Interval::Kind::line)
    throw PreconditionError(
        "reparametrize needs a full-line curve; use canonicalize_compact for compact domains");
  require_valid(st, *T1);
  require_valid(st, *T2);
  const auto c = affine_constant(st, *T1, g);
  if (!c) throw PreconditionError("curve is not T1-affine");
  const auto& nodes = g.nodes();
  // T1(gamma(s)) = c s + B.
  const double B = T1->operator()(st, nodes.front().event) - *c * nodes.front().param;
  std::vector<Node> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back({((*T2)(st, n.event) - B) / *c, n.event});
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i].param > out[i - 1].param))
      throw DegenerateError("T2 does not strictly increase along the curve");
  CausalCurve result(Interval::line(), std::move(out), *c, T2, g.past_rate(), g.future_rate());

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double s = result.nodes()[i].param;
    const double lhs = (*T2)(st, result.nodes()[i].event);
    const double rhs = (*T1)(st, g.at(st, s));
    if (std::abs(lhs - rhs) > kGeomTol * std::max(1.0, std::abs(lhs)))
      throw std::logic_error("reparametrize: T2 o gamma~ != T1 o gamma at a node");
  }
  return result;
}

/// gamma1 on [a, b] followed by gamma2 on [b, c]. The result is T-affine
/// only when both constants (and time functions) agree.
inline CausalCurve concat(const Spacetime& st, const CausalCurve& g1, const CausalCurve& g2) {
  if (!g1.domain().bounded_above() || !g2.domain().bounded_below())
    throw InputError("concat needs gamma1 bounded above and gamma2 bounded below");
  const double b = g1.domain().hi;
  if (g2.domain().lo != b)
    throw InputError("concat: domains do not meet (" + to_string(g1.domain()) + ", " +
                     to_string(g2.domain()) + ")");
  if (!st.events_close(g1.back(), g2.front()))
    throw InputError("concat: endpoint mismatch " + st.describe(g1.back()) + " vs " +
                     st.describe(g2.front()));
  std::vector<Node> nodes = g1.nodes();
  nodes.insert(nodes.end(), g2.nodes().begin() + 1, g2.nodes().end());
  Interval dom;
  using K = Interval::Kind;
  const bool lo_b = g1.domain().bounded_below();
  const bool hi_b = g2.domain().bounded_above();
  if (lo_b && hi_b) dom = Interval::compact(g1.domain().lo, g2.domain().hi);
  else if (lo_b) dom = Interval::future_ray(g1.domain().lo);
  else if (hi_b) dom = Interval::past_ray(g2.domain().hi);
  else dom = Interval{K::line};
  std::optional<double> c;
  const bool same_T = g1.time_function() && g2.time_function() &&
                      (g1.time_function() == g2.time_function() ||
                       *g1.time_function() == *g2.time_function());
  if (g1.c() && g2.c() && same_T && std::abs(*g1.c() - *g2.c()) <= kWeightTol) c = g1.c();
  return CausalCurve(dom, std::move(nodes), c, g1.time_function(), g1.past_rate(),
                     g2.future_rate());
}

/// max d_w(gamma1(s), gamma2(s)) over n uniform samples of [lo, hi] and all
/// node parameters of both curves inside it.
inline double sup_distance(const Spacetime& st, const CausalCurve& g1, const CausalCurve& g2,
                           double lo, double hi, std::size_t samples = 257) {
  std::vector<double> params;
  for (std::size_t k = 0; k < samples; ++k)
    params.push_back(lo + (hi - lo) * static_cast<double>(k) /
                              static_cast<double>(std::max<std::size_t>(samples - 1, 1)));
  for (const auto* g : {&g1, &g2})
    for (const auto& n : g->nodes())
      if (n.param >= lo && n.param <= hi) params.push_back(n.param);
  double best = 0.0;
  for (double s : params) best = std::max(best, dw_distance(st, g1.at(st, s), g2.at(st, s)));
  return best;
}

/// Lipschitz constant of T = t + f w.r.t. d_w:
/// |dT| <= |dt| + Lip |dx| <= sqrt(1 + Lip^2) d_w / sqrt(u alpha).
inline double time_function_dw_lipschitz(const Spacetime& st, const TimeFunction& T) {
  const double lip = T.lipschitz(st);
  return std::sqrt(1.0 + lip * lip) / std::sqrt(st.u() * st.alpha());
}

/// Bound on |c_{gamma_n} - c_gamma| for curves on [a, b] at uniform d_w
/// distance `sup_dw`.
inline double c_convergence_bound(const Spacetime& st, const TimeFunction& T, double sup_dw,
                                  double a, double b) {
  return 2.0 * time_function_dw_lipschitz(st, T) * sup_dw / (b - a);
}

// ---------------------------------------------------------------------------
// Local bi-Lipschitz bounds

struct Envelope {
  double lower = 0.0;
  double upper = 0.0;
};

struct BiLipschitzReport {
  std::size_t curves = 0;
  std::size_t pairs = 0;
  double c_min = 0.0;
  double c_max = 0.0;
  // d_w(gamma(s), gamma(t)) / |s - t|
  double dw_ratio_min = std::numeric_limits<double>::infinity();
  double dw_ratio_max = 0.0;
  Envelope dw_envelope;
  bool dw_within = true;
  // |T2(gamma(s)) - T2(gamma(t))| / |s - t|
  double time_ratio_min = std::numeric_limits<double>::infinity();
  double time_ratio_max = 0.0;
  Envelope time_envelope;
  bool time_within = true;

  [[nodiscard]] bool ok() const { return dw_within && time_within; }
};

/// Empirical bi-Lipschitz constants of a family of T-affine curves on [a, b]
/// against the analytic envelopes
///
///   d_w:   c_min sqrt(u alpha) / sqrt(1 + L^2)  <=  ratio  <=  c_max sqrt(2 u alpha) / (1 - L)
///   T2:    c_min (1 - L2) / (1 + L)              <=  ratio  <=  c_max (1 + L2) / (1 - L)
///
/// with L, L2 the spatial Lipschitz constants of T and T2; for T = T0 these
/// are the constants inf c / Lip_dw(T) and sup c * max sqrt(2 u alpha).
/// The d_w test is done on squared quantities so exact data compares exactly.
inline BiLipschitzReport bilipschitz_report(const Spacetime& st, const TimeFunctionRef& T,
                                            const std::vector<CausalCurve>& curves, double a,
                                            double b, const TimeFunctionRef& T2_in = nullptr,
                                            std::size_t samples = 9, double tol = 0.0) {
  if (curves.empty()) throw InputError("bilipschitz_report needs at least one curve");
  if (!(a < b)) throw InputError("bilipschitz_report needs a < b");
  const TimeFunctionRef& T2 = T2_in ? T2_in : T;
  require_valid(st, *T);
  require_valid(st, *T2);
  constexpr double kUlpSlack = 8.0 * std::numeric_limits<double>::epsilon();
  BiLipschitzReport r;
  r.curves = curves.size();
  std::vector<double> cs;
  for (const auto& g : curves) {
    if (!g.domain().contains(a, 0.0) || !g.domain().contains(b, 0.0))
      throw PreconditionError("curve domain " + to_string(g.domain()) + " does not contain [a, b]");
    auto c = affine_constant(st, *T, g);
    if (!c) throw PreconditionError("curve is not affine w.r.t. '" + T->name() + "'");
    cs.push_back(*c);
  }
  r.c_min = *std::min_element(cs.begin(), cs.end());
  r.c_max = *std::max_element(cs.begin(), cs.end());
  const double ua = st.u() * st.alpha();
  const double L1 = T->lipschitz(st);
  const double L2 = T2->lipschitz(st);
  r.dw_envelope = {r.c_min * std::sqrt(ua) / std::sqrt(1.0 + L1 * L1),
                   r.c_max * std::sqrt(2.0 * ua) / (1.0 - L1)};
  const double lower_sq = r.c_min * r.c_min * ua / (1.0 + L1 * L1);
  const double upper_sq = r.c_max * r.c_max * 2.0 * ua / ((1.0 - L1) * (1.0 - L1));
  r.time_envelope = {r.c_min * (1.0 - L2) / (1.0 + L1), r.c_max * (1.0 + L2) / (1.0 - L1)};

  for (const auto& g : curves) {
    std::vector<double> params;
    for (std::size_t k = 0; k < samples; ++k)
      params.push_back(a + (b - a) * static_cast<double>(k) /
                               static_cast<double>(std::max<std::size_t>(samples - 1, 1)));
    for (const auto& n : g.nodes())
      if (n.param > a && n.param < b) params.push_back(n.param);
    std::sort(params.begin(), params.end());
    const double gap = kGeomTol * (b - a);
    params.erase(std::unique(params.begin(), params.end(),
                             [gap](double x, double y) { return y - x <= gap; }),
                 params.end());
    std::vector<Event> ev;
    for (double s : params) ev.push_back(g.at(st, s));
    for (std::size_t i = 0; i < ev.size(); ++i) {
      for (std::size_t j = i + 1; j < ev.size(); ++j) {
        const double dtau = params[j] - params[i];
        const double dt = ev[j].t - ev[i].t;
        const double dx = st.optical_distance(ev[i].x, ev[j].x);
        const double dw_sq = ua * (dt * dt + dx * dx);
        const double dtau_sq = dtau * dtau;
        const double ratio = std::sqrt(dw_sq) / dtau;
        r.dw_ratio_min = std::min(r.dw_ratio_min, ratio);
        r.dw_ratio_max = std::max(r.dw_ratio_max, ratio);
        if (dw_sq < lower_sq * dtau_sq * (1.0 - kUlpSlack) - tol * dtau_sq) r.dw_within = false;
        if (dw_sq > upper_sq * dtau_sq * (1.0 + kUlpSlack) + tol * dtau_sq) r.dw_within = false;
        const double dT2 = std::abs((*T2)(st, ev[j]) - (*T2)(st, ev[i]));
        const double tr = dT2 / dtau;
        r.time_ratio_min = std::min(r.time_ratio_min, tr);
        r.time_ratio_max = std::max(r.time_ratio_max, tr);
        if (dT2 < r.time_envelope.lower * dtau * (1.0 - kUlpSlack) - tol * dtau) r.time_within = false;
        if (dT2 > r.time_envelope.upper * dtau * (1.0 + kUlpSlack) + tol * dtau) r.time_within = false;
        ++r.pairs;
      }
    }
  }
  return r;
}

}  // namespace lot
