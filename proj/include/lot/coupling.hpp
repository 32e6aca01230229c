#pragma once

// Causal couplings between slice measures and causality of measure-valued
// evolutions. mu precedes nu iff some coupling of them is concentrated on
// J+ = {(p, q) : p precedes q}; for finite supports this is a bipartite
// max-flow feasibility problem, and by the discrete Strassen theorem it is
// equivalent to mu(A) <= nu(J+(A)) for every A within supp mu.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lot/flow.hpp"
#include "lot/measures.hpp"
#include "lot/numeric.hpp"
#include "lot/spacetime.hpp"
#include "lot/timefunc.hpp"

namespace lot {

namespace detail {

// Smallest q <= max_den with |w - p/q| <= tol, by continued fractions.
inline std::optional<std::int64_t> rational_denominator(double w, std::int64_t max_den,
                                                        double tol) {
  double x = w;
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    if (a > 1e15) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    if (std::abs(w - static_cast<double>(h2) / static_cast<double>(k2)) <= tol) return k2;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = x - a;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

/// Common denominator D such that every weight is an integer multiple of
/// 1/D (to 1e-13) and both integer totals equal D; nullopt otherwise.
inline std::optional<std::int64_t> common_denominator(const std::vector<double>& a,
                                                      const std::vector<double>& b) {
  constexpr std::int64_t kMaxDen = std::int64_t{1} << 20;
  constexpr std::int64_t kMaxCommon = std::int64_t{1} << 40;
  std::int64_t D = 1;
  for (const auto* v : {&a, &b}) {
    for (double w : *v) {
      auto q = rational_denominator(w, kMaxDen, 1e-13);
      if (!q) return std::nullopt;
      D = std::lcm(D, *q);
      if (D > kMaxCommon) return std::nullopt;
    }
  }
  for (const auto* v : {&a, &b}) {
    std::int64_t total = 0;
    for (double w : *v) total += std::llround(w * static_cast<double>(D));
    if (total != D) return std::nullopt;
  }
  return D;
}

// Cancels undirected cycles in the support of a bipartite flow so that the
// support becomes a forest (a vertex of the transport polytope).
template <typename Cap>
void cancel_support_cycles(std::size_t nodes, std::vector<std::pair<std::size_t, std::size_t>>& ends,
                           std::vector<Cap>& amount, Cap eps) {
  while (true) {
    std::vector<std::size_t> live;
    for (std::size_t e = 0; e < ends.size(); ++e)
      if (amount[e] > eps) live.push_back(e);
    // Grow a spanning forest; the first edge closing a cycle is returned
    // with the forest path between its endpoints.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> forest(nodes);
    std::vector<std::size_t> comp(nodes);
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](std::size_t x) {
      while (comp[x] != x) x = comp[x] = comp[comp[x]];
      return x;
    };
    std::optional<std::size_t> closing;
    for (std::size_t e : live) {
      const auto [u, v] = ends[e];
      const std::size_t ru = find(u), rv = find(v);
      if (ru == rv) {
        closing = e;
        break;
      }
      comp[ru] = rv;
      forest[u].push_back({v, e});
      forest[v].push_back({u, e});
    }
    if (!closing) return;
    const auto [u, v] = ends[*closing];
    // BFS path v -> u in the forest.
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> prev(nodes);
    std::vector<bool> seen(nodes, false);
    std::vector<std::size_t> queue{v};
    seen[v] = true;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t x = queue[qi];
      for (const auto& [y, e] : forest[x]) {
        if (!seen[y]) {
          seen[y] = true;
          prev[y] = std::make_pair(x, e);
          queue.push_back(y);
        }
      }
    }
    // Cycle: closing edge (u -> v) then the forest path v -> ... -> u.
    std::vector<std::size_t> cycle{*closing};
    std::vector<std::size_t> path;
    for (std::size_t x = u; x != v; x = prev[x]->first) path.push_back(prev[x]->second);
    std::reverse(path.begin(), path.end());
    cycle.insert(cycle.end(), path.begin(), path.end());
    // Alternate signs: even positions gain, odd positions lose.
    Cap delta = amount[cycle[1]];
    for (std::size_t i = 1; i < cycle.size(); i += 2) delta = std::min(delta, amount[cycle[i]]);
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (i % 2 == 0) amount[cycle[i]] += delta;
      else amount[cycle[i]] -= delta;
    }
  }
}

}  // namespace detail

/// Outcome of the feasibility decision: a witness coupling when mu precedes
/// nu, otherwise a Hall-violating subset A of supp mu with
/// mu(A) > nu(J+(A)).
struct CouplingDecision {
  std::optional<Coupling> witness;
  std::vector<std::size_t> violating_subset;  // indices into mu.atoms()
  double subset_mass = 0.0;                   // mu(A)
  double reachable_mass = 0.0;                // nu(J+(A))
  double flow_value = 0.0;                    // max-flow, normalized to total mass 1
  bool exact = false;                         // integer-scaled capacities were used

  [[nodiscard]] bool feasible() const { return witness.has_value(); }
};

inline std::vector<std::vector<bool>> causal_matrix(const Spacetime& st, const SliceMeasure& mu,
                                                    const SliceMeasure& nu) {
  std::vector<std::vector<bool>> rel(mu.size(), std::vector<bool>(nu.size(), false));
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      rel[i][j] = causally_precedes(st, mu.atoms()[i].value, nu.atoms()[j].value);
  return rel;
}

namespace detail {

template <typename Cap>
CouplingDecision solve_coupling(const Spacetime& st, const SliceMeasure& mu,
                                const SliceMeasure& nu, const std::vector<Cap>& cap_mu,
                                const std::vector<Cap>& cap_nu, Cap total, Cap unbounded, Cap eps,
                                double scale) {
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  const std::size_t source = n + m;
  const std::size_t sink = n + m + 1;
  const auto rel = causal_matrix(st, mu, nu);
  flow::MaxFlow<Cap> mf(n + m + 2);
  for (std::size_t i = 0; i < n; ++i) mf.add_arc(source, i, cap_mu[i]);
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  std::vector<std::size_t> arc_ids;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (rel[i][j]) {
        arc_ids.push_back(mf.add_arc(i, n + j, unbounded));
        ends.push_back({i, n + j});
      }
  for (std::size_t j = 0; j < m; ++j) mf.add_arc(n + j, sink, cap_nu[j]);
  const Cap value = mf.run(source, sink, eps);

  CouplingDecision d;
  d.flow_value = static_cast<double>(value) / scale;
  d.exact = std::is_integral_v<Cap>;
  const bool feasible = std::is_integral_v<Cap>
                            ? value == total
                            : static_cast<double>(value) >= 1.0 - kGeomTol;
  if (feasible) {
    std::vector<Cap> amount;
    for (std::size_t id : arc_ids) amount.push_back(mf.flow(id));
    cancel_support_cycles<Cap>(n + m, ends, amount, eps);
    std::vector<Atom<EventPair>> atoms;
    for (std::size_t e = 0; e < ends.size(); ++e)
      if (amount[e] > eps)
        atoms.push_back({{mu.atoms()[ends[e].first].value, nu.atoms()[ends[e].second - n].value},
                         static_cast<double>(amount[e]) / scale});
    d.witness = Coupling::make(st, std::move(atoms), mu, nu, true);
    return d;
  }
  const auto side = mf.source_side();
  KahanSum a_mass, reach_mass;
  for (std::size_t i = 0; i < n; ++i)
    if (side[i]) {
      d.violating_subset.push_back(i);
      a_mass.add(mu.atoms()[i].weight);
    }
  for (std::size_t j = 0; j < m; ++j) {
    bool reached = false;
    for (std::size_t i : d.violating_subset) reached = reached || rel[i][j];
    if (reached) reach_mass.add(nu.atoms()[j].weight);
  }
  d.subset_mass = a_mass.value();
  d.reachable_mass = reach_mass.value();
  return d;
}

}  // namespace detail

/// Decides mu <= nu by max-flow on the bipartite support graph. Rational
/// weights are solved exactly with integer-scaled capacities; otherwise the
/// flow value is compared at 1e-9. The witness is sparsified to a forest.
inline CouplingDecision decide_causal_coupling(const Spacetime& st, const SliceMeasure& mu,
                                               const SliceMeasure& nu) {
  std::vector<double> a, b;
  for (const auto& x : mu.atoms()) a.push_back(x.weight);
  for (const auto& y : nu.atoms()) b.push_back(y.weight);
  if (auto D = detail::common_denominator(a, b)) {
    std::vector<std::int64_t> ca, cb;
    for (double w : a) ca.push_back(std::llround(w * static_cast<double>(*D)));
    for (double w : b) cb.push_back(std::llround(w * static_cast<double>(*D)));
    return detail::solve_coupling<std::int64_t>(st, mu, nu, ca, cb, *D, *D, 0,
                                                static_cast<double>(*D));
  }
  return detail::solve_coupling<double>(st, mu, nu, a, b, 1.0, 2.0, 1e-15, 1.0);
}

inline std::optional<Coupling> exists_causal_coupling(const Spacetime& st, const SliceMeasure& mu,
                                                      const SliceMeasure& nu) {
  return decide_causal_coupling(st, mu, nu).witness;
}

inline constexpr std::size_t kUpsetEnumerationLimit = 20;

/// Exhaustive discrete Strassen check: returns the first subset A of supp mu
/// (in bitmask order) with mu(A) > nu(J+(A)) + 1e-12, or nullopt.
inline std::optional<std::vector<std::size_t>> upset_violation(const Spacetime& st,
                                                               const SliceMeasure& mu,
                                                               const SliceMeasure& nu) {
  const std::size_t n = mu.size();
  if (n > kUpsetEnumerationLimit)
    throw InputError("upset characterization enumerates 2^|supp mu| subsets; |supp mu| = " +
                     std::to_string(n) + " exceeds " + std::to_string(kUpsetEnumerationLimit) +
                     ", use exists_causal_coupling");
  if (nu.size() > 64) throw InputError("upset characterization supports |supp nu| <= 64");
  const auto rel = causal_matrix(st, mu, nu);
  std::vector<std::uint64_t> reach(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      if (rel[i][j]) reach[i] |= std::uint64_t{1} << j;
  const std::uint64_t subsets = std::uint64_t{1} << n;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    KahanSum left;
    std::uint64_t up = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1U) {
        left.add(mu.atoms()[i].weight);
        up |= reach[i];
      }
    KahanSum right;
    for (std::size_t j = 0; j < nu.size(); ++j)
      if (up >> j & 1U) right.add(nu.atoms()[j].weight);
    if (left.value() > right.value() + kWeightTol) {
      std::vector<std::size_t> A;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1U) A.push_back(i);
      return A;
    }
  }
  return std::nullopt;
}

inline bool upset_characterization(const Spacetime& st, const SliceMeasure& mu,
                                   const SliceMeasure& nu) {
  return !upset_violation(st, mu, nu).has_value();
}

// ---------------------------------------------------------------------------
// Evolutions

enum class MeshKind : std::uint8_t { dyadic, integer, explicit_list };

inline std::vector<double> dyadic_times(double a, double b, unsigned depth) {
  const std::size_t n = std::size_t{1} << depth;
  std::vector<double> t;
  for (std::size_t i = 0; i <= n; ++i)
    t.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
  return t;
}

inline std::vector<double> integer_times(long lo, long hi) {
  std::vector<double> t;
  for (long i = lo; i <= hi; ++i) t.push_back(static_cast<double>(i));
  return t;
}

/// Mesh of [a, b) accumulating at b: b + (a - b) 2^-i, i = 0..count-1.
inline std::vector<double> geometric_times(double a, double b, std::size_t count) {
  std::vector<double> t;
  for (std::size_t i = 0; i < count; ++i) t.push_back(b + (a - b) * std::ldexp(1.0, -static_cast<int>(i)));
  return t;
}

struct EvolutionSlice {
  double t = 0.0;
  SliceMeasure mu;
};

class Evolution {
 public:
  /// Validates: strictly increasing times, each slice on T^-1(t_i), mesh
  /// shape matching `kind`.
  static Evolution make(const Spacetime& st, TimeFunctionRef T, std::vector<EvolutionSlice> slices,
                        MeshKind kind = MeshKind::explicit_list) {
    if (slices.empty()) throw InputError("evolution needs at least one slice");
    require_valid(st, *T);
    for (std::size_t i = 1; i < slices.size(); ++i)
      if (!(slices[i].t > slices[i - 1].t))
        throw InputError("evolution times must be strictly increasing");
    for (auto& s : slices) s.mu = s.mu.tagged(st, T, s.t);
    const std::size_t n = slices.size();
    if (kind == MeshKind::integer) {
      for (const auto& s : slices)
        if (s.t != std::round(s.t)) throw InputError("integer mesh needs integer times");
      for (std::size_t i = 1; i < n; ++i)
        if (slices[i].t - slices[i - 1].t != 1.0)
          throw InputError("integer mesh needs consecutive integer times");
    } else if (kind == MeshKind::dyadic) {
      if (n < 2 || ((n - 1) & (n - 2)) != 0)
        throw InputError("dyadic mesh needs 2^n + 1 slices");
      const double a = slices.front().t, b = slices.back().t;
      for (std::size_t i = 0; i < n; ++i) {
        const double expect = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        if (std::abs(slices[i].t - expect) > kGeomTol)
          throw InputError("dyadic mesh times must be a + (b - a) i / 2^n");
      }
    }
    Evolution e;
    e.T_ = std::move(T);
    e.slices_ = std::move(slices);
    e.kind_ = kind;
    return e;
  }

  [[nodiscard]] const TimeFunctionRef& time_function() const { return T_; }
  [[nodiscard]] const std::vector<EvolutionSlice>& slices() const { return slices_; }
  [[nodiscard]] MeshKind mesh() const { return kind_; }
  [[nodiscard]] std::size_t size() const { return slices_.size(); }
  [[nodiscard]] double front_time() const { return slices_.front().t; }
  [[nodiscard]] double back_time() const { return slices_.back().t; }

  /// Index of the slice at time t (tolerance 1e-9).
  [[nodiscard]] std::optional<std::size_t> index_of(double t) const {
    for (std::size_t i = 0; i < slices_.size(); ++i)
      if (std::abs(slices_[i].t - t) <= kGeomTol) return i;
    return std::nullopt;
  }

  /// The sub-evolution at the given times; each must be present.
  [[nodiscard]] Evolution select(const Spacetime& st, const std::vector<double>& times,
                                 MeshKind kind) const {
    std::vector<EvolutionSlice> out;
    for (double t : times) {
      auto i = index_of(t);
      if (!i) throw InputError("evolution has no slice at t = " + std::to_string(t));
      out.push_back(slices_[*i]);
    }
    return make(st, T_, std::move(out), kind);
  }

 private:
  TimeFunctionRef T_;
  std::vector<EvolutionSlice> slices_;
  MeshKind kind_ = MeshKind::explicit_list;
};

struct StepFailure {
  std::size_t from = 0;
  std::size_t to = 0;
  double t_from = 0.0;
  double t_to = 0.0;
  std::vector<Event> subset;  // A within supp mu_from
  double subset_mass = 0.0;
  double reachable_mass = 0.0;
};

enum class EvolutionCheckMode : std::uint8_t { consecutive, all_pairs };

struct EvolutionReport {
  bool causal = true;
  std::size_t checked_pairs = 0;
  std::optional<StepFailure> failure;
  std::vector<Coupling> witnesses;  // consecutive witnesses, in order, when causal
};

inline StepFailure make_failure(const Evolution& E, std::size_t i, std::size_t j,
                                const CouplingDecision& d) {
  StepFailure f{i, j, E.slices()[i].t, E.slices()[j].t, {}, d.subset_mass, d.reachable_mass};
  for (std::size_t k : d.violating_subset) f.subset.push_back(E.slices()[i].mu.atoms()[k].value);
  return f;
}

/// mu_s <= mu_t for s <= t. Consecutive mode checks neighbours only, which
/// suffices because witnesses glue through the shared slice.
inline EvolutionReport is_causal_evolution(const Spacetime& st, const Evolution& E,
                                           EvolutionCheckMode mode = EvolutionCheckMode::consecutive) {
  EvolutionReport r;
  for (const auto& s : E.slices())
    if (auto bad = s.mu.off_level_atom(st, *E.time_function(), s.t))
      throw InputError("slice at t = " + std::to_string(s.t) + " has atom " + st.describe(*bad) +
                       " off the level set of '" + E.time_function()->name() + "'");
  const std::size_t n = E.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t last = mode == EvolutionCheckMode::consecutive ? i + 1 : n - 1;
    for (std::size_t j = i + 1; j <= last; ++j) {
      auto d = decide_causal_coupling(st, E.slices()[i].mu, E.slices()[j].mu);
      ++r.checked_pairs;
      if (!d.feasible()) {
        r.causal = false;
        r.failure = make_failure(E, i, j, d);
        r.witnesses.clear();
        return r;
      }
      if (j == i + 1) r.witnesses.push_back(std::move(*d.witness));
    }
  }
  return r;
}

class NonCausalEvolution : public PreconditionError {
 public:
  explicit NonCausalEvolution(StepFailure f)
      : PreconditionError("evolution is not causal between t = " + std::to_string(f.t_from) +
                          " and t = " + std::to_string(f.t_to)),
        failure_(std::move(f)) {}
  [[nodiscard]] const StepFailure& failure() const { return failure_; }

 private:
  StepFailure failure_;
};

}  // namespace lot
