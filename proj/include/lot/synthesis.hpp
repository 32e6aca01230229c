#pragma once

// From a causal evolution to a measure on T-affine causal curves, and back.
//
// Compact meshes: one witness coupling per consecutive pair of slices, each
// lifted atomwise to geodesics canonically parametrized over its mesh cell,
// folded left to right with concat_measures.
//
// Integer slabs: chain measures sigma_n on n-tuples of slab curves grown by
//   sigma_{n+1} = sum_x mu_n(x) (sigma_n^x  x  lift_{n+1}^x),
// with the projection that forgets the last slab checked against sigma_n at
// every step, then glued slabwise into curves on a half-line or the line.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lot/coupling.hpp"
#include "lot/curves.hpp"
#include "lot/measures.hpp"
#include "lot/numeric.hpp"
#include "lot/spacetime.hpp"
#include "lot/timefunc.hpp"

namespace lot {

/// Each coupling atom (p, q, w) becomes the geodesic p -> q canonically
/// parametrized by T over [a, b], with weight w.
inline CurveMeasure lift_coupling(const Spacetime& st, const TimeFunctionRef& T, const Coupling& w,
                                  double a, double b) {
  std::vector<Atom<CausalCurve>> out;
  out.reserve(w.atoms().size());
  for (const auto& atom : w.atoms()) {
    const auto& [p, q] = atom.value;
    if (std::abs((*T)(st, p) - a) > kGeomTol || std::abs((*T)(st, q) - b) > kGeomTol)
      throw PreconditionError("lift_coupling: atom " + st.describe(p) + " -> " + st.describe(q) +
                              " is not on the levels " + T->name() + " = " + std::to_string(a) +
                              ", " + std::to_string(b));
    if (!causally_precedes(st, p, q))
      throw PreconditionError("lift_coupling: no causal curve from " + st.describe(p) + " to " +
                              st.describe(q));
    const CausalCurve g = causal_geodesic(st, p, q);
    out.push_back({canonicalize_compact(st, T, g.path(), a, b), atom.weight});
  }
  return CurveMeasure::make(st, std::move(out));
}

/// (ev_s, ev_t)# sigma.
inline Coupling extract_coupling(const Spacetime& st, const CurveMeasure& sigma, double s, double t) {
  if (s > t) throw InputError("extract_coupling needs s <= t");
  for (double x : {s, t})
    if (!sigma.domain().contains(x, 0.0))
      throw InputError("extract_coupling: time " + std::to_string(x) + " outside domain " +
                       to_string(sigma.domain()));
  std::vector<Atom<EventPair>> atoms;
  atoms.reserve(sigma.size());
  for (const auto& a : sigma.atoms()) atoms.push_back({{a.value.at(st, s), a.value.at(st, t)}, a.weight});
  return Coupling::make(st, std::move(atoms), ev_marginal(st, sigma, s), ev_marginal(st, sigma, t),
                        true);
}

namespace detail {

inline std::vector<Coupling> witnesses_or_throw(const Spacetime& st, const Evolution& E) {
  auto r = is_causal_evolution(st, E, EvolutionCheckMode::consecutive);
  if (!r.causal) throw NonCausalEvolution(*r.failure);
  return std::move(r.witnesses);
}

}  // namespace detail

/// Synthesis over an arbitrary strictly increasing mesh t_0 < ... < t_n;
/// the result lives on [t_0, t_n] and reproduces every mesh slice.
inline CurveMeasure synthesize_on_mesh(const Spacetime& st, const Evolution& E) {
  if (E.size() < 2) throw InputError("synthesis over a compact interval needs at least two slices");
  const auto witnesses = detail::witnesses_or_throw(st, E);
  const auto& T = E.time_function();
  std::optional<CurveMeasure> sigma;
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    CurveMeasure lifted =
        lift_coupling(st, T, witnesses[i], E.slices()[i].t, E.slices()[i + 1].t);
    sigma = sigma ? concat_measures(st, *sigma, lifted) : std::move(lifted);
  }
  return std::move(*sigma);
}

/// The compact engine on a dyadic mesh t_i = a + (b - a) i / 2^n.
inline CurveMeasure synthesize_compact(const Spacetime& st, const Evolution& E) {
  if (E.mesh() != MeshKind::dyadic)
    throw InputError("synthesize_compact needs an evolution on a dyadic mesh");
  return synthesize_on_mesh(st, E);
}

// ---------------------------------------------------------------------------
// Slab chains

enum class SlabDirection : std::uint8_t { forward, backward, both };

using SlabChain = std::vector<CausalCurve>;  // consecutive unit slabs in time order

struct ChainMeasure {
  double lo = 0.0;  // chains cover [lo, hi]
  double hi = 0.0;
  std::vector<Atom<SlabChain>> atoms;

  [[nodiscard]] std::size_t slabs() const { return static_cast<std::size_t>(hi - lo); }
};

inline bool chains_equal(const SlabChain& a, const SlabChain& b) { return a == b; }

/// Image under the map forgetting the slab at the far end (the last one for
/// a forward chain, the first one for a backward chain).
inline ChainMeasure project_chain(const ChainMeasure& m, bool drop_last) {
  if (m.slabs() == 0) throw InputError("cannot project an empty chain measure");
  ChainMeasure out{drop_last ? m.lo : m.lo + 1.0, drop_last ? m.hi - 1.0 : m.hi, {}};
  std::vector<Atom<SlabChain>> shortened;
  for (const auto& a : m.atoms) {
    SlabChain c = drop_last ? SlabChain(a.value.begin(), a.value.end() - 1)
                            : SlabChain(a.value.begin() + 1, a.value.end());
    shortened.push_back({std::move(c), a.weight});
  }
  out.atoms = detail::merge_atoms(std::move(shortened), chains_equal);
  return out;
}

/// Same chains bitwise, weights within 1e-12.
inline bool chain_measures_agree(const ChainMeasure& a, const ChainMeasure& b,
                                 double tol = kWeightTol) {
  if (a.lo != b.lo || a.hi != b.hi || a.atoms.size() != b.atoms.size()) return false;
  for (const auto& x : a.atoms) {
    auto it = std::find_if(b.atoms.begin(), b.atoms.end(),
                           [&](const Atom<SlabChain>& y) { return chains_equal(x.value, y.value); });
    if (it == b.atoms.end() || std::abs(it->weight - x.weight) > tol) return false;
  }
  return true;
}

namespace detail {

inline Event chain_end(const SlabChain& c, bool at_back) {
  return at_back ? c.back().back() : c.front().front();
}

// One recursion step: attach the lifted slab measure at the junction.
inline ChainMeasure extend_chain(const Spacetime& st, const ChainMeasure& m,
                                 const CurveMeasure& lifted, bool forward) {
  const double junction = forward ? m.hi : m.lo;
  const Disintegration d = disintegrate(st, lifted, junction);
  ChainMeasure out{forward ? m.lo : m.lo - 1.0, forward ? m.hi + 1.0 : m.hi, {}};
  for (const auto& a : m.atoms) {
    const Event x = chain_end(a.value, forward);
    std::size_t k = 0;
    while (k < d.base.size() && !st.events_close(d.base.atoms()[k].value, x)) ++k;
    if (k == d.base.size())
      throw std::logic_error("slab recursion: chain end " + st.describe(x) +
                             " is not charged by the next witness");
    for (const auto& c : d.conditionals[k].atoms()) {
      SlabChain chain;
      chain.reserve(a.value.size() + 1);
      if (!forward) chain.push_back(c.value);
      chain.insert(chain.end(), a.value.begin(), a.value.end());
      if (forward) chain.push_back(c.value);
      out.atoms.push_back({std::move(chain), a.weight * c.weight});
    }
  }
  return out;
}

inline ChainMeasure seed_chain(const CurveMeasure& lifted) {
  ChainMeasure m{lifted.domain().lo, lifted.domain().hi, {}};
  for (const auto& a : lifted.atoms()) m.atoms.push_back({SlabChain{a.value}, a.weight});
  return m;
}

}  // namespace detail

struct SlabSynthesis {
  SlabDirection direction = SlabDirection::forward;
  double anchor = 0.0;
  std::size_t horizon = 0;
  // Chain measures sigma_1, ..., sigma_N for each growth direction used.
  std::vector<ChainMeasure> forward_chains;
  std::vector<ChainMeasure> backward_chains;
  CurveMeasure curves;  // glued result on the requested unbounded domain
};

namespace detail {

inline std::vector<ChainMeasure> grow_chains(const Spacetime& st, const Evolution& E, double anchor,
                                             std::size_t N, bool forward) {
  std::vector<double> times;
  for (std::size_t i = 0; i <= N; ++i)
    times.push_back(forward ? anchor + static_cast<double>(i) : anchor - static_cast<double>(N - i));
  const Evolution sub = E.select(st, times, MeshKind::integer);
  const auto witnesses = witnesses_or_throw(st, sub);
  const auto& T = E.time_function();
  auto lift_step = [&](std::size_t n) {
    // n-th unit slab away from the anchor, n = 0..N-1.
    const std::size_t i = forward ? n : N - 1 - n;
    return lift_coupling(st, T, witnesses[i], times[i], times[i + 1]);
  };
  std::vector<ChainMeasure> chains;
  chains.push_back(seed_chain(lift_step(0)));
  for (std::size_t n = 1; n < N; ++n) {
    chains.push_back(extend_chain(st, chains.back(), lift_step(n), forward));
    if (!chain_measures_agree(project_chain(chains.back(), forward), chains[n - 1]))
      throw std::logic_error("slab recursion: projection of sigma_" + std::to_string(n + 1) +
                             " differs from sigma_" + std::to_string(n));
  }
  return chains;
}

inline CausalCurve glue(const Spacetime& st, const SlabChain& chain, const Interval& domain,
                        const TimeFunctionRef& T) {
  CausalCurve g = chain.front();
  for (std::size_t i = 1; i < chain.size(); ++i) g = concat(st, g, chain[i]);
  if (!g.c()) throw std::logic_error("glued slab chain lost its affine constant");
  const double c = *g.c();
  return CausalCurve(domain, g.nodes(), c, T, c, c);
}

}  // namespace detail

/// Slab synthesis on the integer grid around `anchor` with horizon N:
/// forward gives curves on [anchor, inf), backward on (-inf, anchor], both
/// on R; node windows span the N slabs on each side.
inline SlabSynthesis synthesize_slabs(const Spacetime& st, const Evolution& E, std::size_t N,
                                      SlabDirection direction, double anchor = 0.0) {
  if (N < 1) throw InputError("slab synthesis needs horizon N >= 1");
  if (anchor != std::round(anchor)) throw InputError("slab anchor must be an integer time");
  const auto& T = E.time_function();
  SlabSynthesis out{direction, anchor, N, {}, {}, CurveMeasure{}};
  const bool fwd = direction != SlabDirection::backward;
  const bool bwd = direction != SlabDirection::forward;
  if (fwd) out.forward_chains = detail::grow_chains(st, E, anchor, N, true);
  if (bwd) out.backward_chains = detail::grow_chains(st, E, anchor, N, false);

  const Interval domain = direction == SlabDirection::forward    ? Interval::future_ray(anchor)
                          : direction == SlabDirection::backward ? Interval::past_ray(anchor)
                                                                 : Interval::line();
  std::vector<Atom<CausalCurve>> atoms;
  if (direction == SlabDirection::both) {
    // sigma_- |_| sigma_+ through the anchor slice.
    const auto& past = out.backward_chains.back();
    const auto& future = out.forward_chains.back();
    std::vector<Atom<Event>> junction;
    for (const auto& a : past.atoms) junction.push_back({a.value.back().back(), a.weight});
    const SliceMeasure nu = SliceMeasure::make(st, std::move(junction));
    for (const auto& a : past.atoms) {
      const Event x = a.value.back().back();
      for (const auto& b : future.atoms) {
        if (!st.events_close(b.value.front().front(), x)) continue;
        const double nx = nu.mass_at(st, x);
        SlabChain chain = a.value;
        chain.insert(chain.end(), b.value.begin(), b.value.end());
        atoms.push_back({detail::glue(st, chain, domain, T), nx * (a.weight / nx) * (b.weight / nx)});
      }
    }
  } else {
    const auto& chains = fwd ? out.forward_chains.back() : out.backward_chains.back();
    for (const auto& a : chains.atoms) atoms.push_back({detail::glue(st, a.value, domain, T), a.weight});
  }
  out.curves = CurveMeasure::make(st, std::move(atoms));
  return out;
}

// ---------------------------------------------------------------------------
// I_T

class NotInIT : public PreconditionError {
 public:
  NotInIT(const std::string& what, CausalCurve atom) : PreconditionError(what), atom_(std::move(atom)) {}
  [[nodiscard]] const CausalCurve& atom() const { return atom_; }

 private:
  CausalCurve atom_;
};

/// A curve measure all of whose atoms satisfy T o gamma = id.
class ITMeasure {
 public:
  [[nodiscard]] const CurveMeasure& measure() const { return sigma_; }
  [[nodiscard]] const TimeFunctionRef& time_function() const { return T_; }

 private:
  ITMeasure(CurveMeasure s, TimeFunctionRef T) : sigma_(std::move(s)), T_(std::move(T)) {}
  friend ITMeasure normalize_to_IT(const Spacetime&, const TimeFunctionRef&, const CurveMeasure&);
  CurveMeasure sigma_;
  TimeFunctionRef T_;
};

inline ITMeasure normalize_to_IT(const Spacetime& st, const TimeFunctionRef& T,
                                 const CurveMeasure& sigma) {
  if (sigma.domain().kind != Interval::Kind::line)
    throw PreconditionError("normalize_to_IT needs a measure on full-line curves");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const auto& g = sigma.atoms()[i].value;
    if (!in_IT(st, *T, g)) {
      const auto c = affine_constant(st, *T, g);
      throw NotInIT("atom " + std::to_string(i) + " (from " + st.describe(g.front()) + ", c = " +
                        (c ? std::to_string(*c) : std::string("n/a")) + ") is not in I_" +
                        T->name(),
                    g);
    }
  }
  return ITMeasure(sigma, T);
}

// ---------------------------------------------------------------------------
// Verification helpers

struct MarginalCheck {
  double max_transport = 0.0;         // max_i W1(ev_{t_i} sigma, mu_i)
  double max_weight_deviation = 0.0;  // max_i weight_deviation(ev_{t_i} sigma, mu_i)
  std::vector<double> times;
  std::vector<double> transport;
  [[nodiscard]] bool exact() const { return max_transport == 0.0 && max_weight_deviation <= kWeightTol; }
};

inline MarginalCheck check_mesh_marginals(const Spacetime& st, const CurveMeasure& sigma,
                                          const Evolution& E) {
  MarginalCheck r;
  for (const auto& s : E.slices()) {
    if (!sigma.domain().contains(s.t, 0.0)) continue;
    const SliceMeasure m = ev_marginal(st, sigma, s.t);
    const double w = transport_distance_dw(st, m, s.mu);
    r.times.push_back(s.t);
    r.transport.push_back(w);
    r.max_transport = std::max(r.max_transport, w);
    r.max_weight_deviation = std::max(r.max_weight_deviation, weight_deviation(st, m, s.mu));
  }
  return r;
}

/// The evolution t -> (ev_t)# sigma at the given times, sliced by T. Only
/// meaningful for measures whose atoms satisfy T o gamma = id.
inline Evolution marginal_evolution(const Spacetime& st, const TimeFunctionRef& T,
                                    const CurveMeasure& sigma, const std::vector<double>& times,
                                    MeshKind kind = MeshKind::explicit_list) {
  std::vector<EvolutionSlice> slices;
  for (double t : times) slices.push_back({t, ev_marginal(st, sigma, t)});
  return Evolution::make(st, T, std::move(slices), kind);
}

/// Every node-to-node step shares a carrier and
/// consecutive nodes are causally ordered.
inline bool atoms_connected(const Spacetime& st, const CurveMeasure& sigma) {
  for (const auto& a : sigma.atoms()) {
    const auto& n = a.value.nodes();
    for (std::size_t i = 1; i < n.size(); ++i) {
      if (!st.carrier(n[i - 1].event.x, n[i].event.x)) return false;
      if (!causally_precedes(st, n[i - 1].event, n[i].event, kGeomTol)) return false;
    }
  }
  return true;
}

inline std::vector<RawPath> path_multiset(const CurveMeasure& sigma) {
  std::vector<RawPath> paths;
  paths.reserve(sigma.size());
  for (const auto& a : sigma.atoms()) paths.push_back(a.value.path());
  std::sort(paths.begin(), paths.end());
  return paths;
}

struct ObserverInvarianceReport {
  std::size_t horizon = 0;
  std::vector<double> taus;
  bool slices_tagged = true;
  std::optional<double> untagged_tau;
  bool causal = true;
  std::optional<StepFailure> failure;
  bool paths_equal = true;
  std::size_t atoms = 0;
  [[nodiscard]] bool ok() const { return slices_tagged && causal && paths_equal; }
};

/// Synthesizes upsilon_1 from E1 (integer grid, both directions around 0),
/// pushes it to T2's parametrization and checks the T2 evolution it induces
/// at integer tau in [-N, N].
inline ObserverInvarianceReport observer_invariance_check(const Spacetime& st,
                                                          const TimeFunctionRef& T2,
                                                          const Evolution& E1, std::size_t N,
                                                          double anchor = 0.0) {
  const auto& T1 = E1.time_function();
  require_valid(st, *T1);
  require_valid(st, *T2);
  const auto slabs = synthesize_slabs(st, E1, N, SlabDirection::both, anchor);
  const ITMeasure ups1 = normalize_to_IT(st, T1, slabs.curves);
  const CurveMeasure ups1_tilde = pushforward_by_reparam(st, ups1.measure(), T1, T2);

  ObserverInvarianceReport r;
  r.horizon = N;
  r.atoms = ups1_tilde.size();
  std::vector<EvolutionSlice> slices;
  for (long k = -static_cast<long>(N); k <= static_cast<long>(N); ++k) {
    const double tau = anchor + static_cast<double>(k);
    r.taus.push_back(tau);
    SliceMeasure nu = ev_marginal(st, ups1_tilde, tau);
    if (nu.off_level_atom(st, *T2, tau)) {
      r.slices_tagged = false;
      if (!r.untagged_tau) r.untagged_tau = tau;
    }
    slices.push_back({tau, std::move(nu)});
  }
  if (r.slices_tagged) {
    const Evolution E2 = Evolution::make(st, T2, std::move(slices), MeshKind::integer);
    auto ev = is_causal_evolution(st, E2, EvolutionCheckMode::consecutive);
    r.causal = ev.causal;
    r.failure = ev.failure;
  } else {
    r.causal = false;
  }
  r.paths_equal = path_multiset(ups1.measure()) == path_multiset(ups1_tilde);
  return r;
}

// ---------------------------------------------------------------------------
// Plans

struct SynthesisPlan {
  Interval request;
  Evolution mesh;
  std::size_t horizon = 1;
  std::string selector = "geodesic-lex";
};

/// Dispatches on the interval kind: dyadic compact engine for [a, b], slab
/// engine with horizon N for half-lines (anchored at the finite end) and R
/// (anchored at 0).
inline CurveMeasure synthesize(const Spacetime& st, const SynthesisPlan& plan) {
  if (plan.selector != "geodesic-lex")
    throw InputError("unknown curve selector '" + plan.selector + "'");
  switch (plan.request.kind) {
    case Interval::Kind::compact: {
      const auto& E = plan.mesh;
      if (std::abs(E.front_time() - plan.request.lo) > kGeomTol ||
          std::abs(E.back_time() - plan.request.hi) > kGeomTol)
        throw InputError("mesh does not span the requested interval " + to_string(plan.request));
      return synthesize_compact(st, E);
    }
    case Interval::Kind::future_ray:
      return synthesize_slabs(st, plan.mesh, plan.horizon, SlabDirection::forward, plan.request.lo)
          .curves;
    case Interval::Kind::past_ray:
      return synthesize_slabs(st, plan.mesh, plan.horizon, SlabDirection::backward, plan.request.hi)
          .curves;
    case Interval::Kind::line:
      return synthesize_slabs(st, plan.mesh, plan.horizon, SlabDirection::both, 0.0).curves;
  }
  throw std::logic_error("unreachable interval kind");
}

}  // namespace lot
