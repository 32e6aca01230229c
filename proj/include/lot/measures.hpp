#pragma once

// Finitely supported probability measures on events (slices), on curves and
// on event pairs (couplings), with the operations needed to move between
// them: evaluation pushforwards, disintegration along ev_t, concatenation of
// compatible curve measures and an exact 1-Wasserstein distance for d_w.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lot/curves.hpp"
#include "lot/flow.hpp"
#include "lot/numeric.hpp"
#include "lot/spacetime.hpp"
#include "lot/timefunc.hpp"

namespace lot {

template <typename T>
struct Atom {
  T value;
  double weight = 0.0;
};

namespace detail {

template <typename T>
void check_weights(const std::vector<Atom<T>>& atoms, const char* what) {
  if (atoms.empty()) throw InputError(std::string(what) + " needs at least one atom");
  for (const auto& a : atoms)
    if (!(a.weight > 0.0) || !std::isfinite(a.weight))
      throw InputError(std::string(what) + " weights must be positive and finite");
  const double total = kahan_sum(atoms, [](const Atom<T>& a) { return a.weight; });
  if (std::abs(total - 1.0) > kWeightTol)
    throw InputError(std::string(what) + " weights sum to " + std::to_string(total) +
                     ", expected 1");
}

/// Merges atoms whose values are identified by `same`, keeping the first
/// representative and first-appearance order.
template <typename T, typename Same>
std::vector<Atom<T>> merge_atoms(std::vector<Atom<T>> atoms, Same same) {
  std::vector<Atom<T>> out;
  std::vector<KahanSum> sums;
  out.reserve(atoms.size());
  for (auto& a : atoms) {
    std::size_t k = 0;
    while (k < out.size() && !same(out[k].value, a.value)) ++k;
    if (k == out.size()) {
      out.push_back(std::move(a));
      sums.emplace_back();
      sums.back().add(out.back().weight);
    } else {
      sums[k].add(a.weight);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k].weight = sums[k].value();
  return out;
}

}  // namespace detail

struct SliceTag {
  TimeFunctionRef T;
  double tau = 0.0;
};

class SliceMeasure {
 public:
  /// Merges coincident events (tolerance 1e-9) and validates the weights.
  static SliceMeasure make(const Spacetime& st, std::vector<Atom<Event>> atoms) {
    for (auto& a : atoms) a.value = st.normalize(a.value);
    auto merged = detail::merge_atoms(std::move(atoms), [&](const Event& p, const Event& q) {
      return st.events_close(p, q);
    });
    detail::check_weights(merged, "slice measure");
    SliceMeasure m;
    m.atoms_ = std::move(merged);
    return m;
  }

  static SliceMeasure dirac(const Spacetime& st, const Event& p) { return make(st, {{p, 1.0}}); }

  /// Tags the measure as living on T^-1(tau); throws naming the first atom
  /// off the level set.
  [[nodiscard]] SliceMeasure tagged(const Spacetime& st, TimeFunctionRef T, double tau) const {
    if (auto bad = off_level_atom(st, *T, tau))
      throw InputError("slice atom " + st.describe(*bad) + " is not on the level set " +
                       T->name() + " = " + std::to_string(tau));
    SliceMeasure m = *this;
    m.tag_ = SliceTag{std::move(T), tau};
    return m;
  }

  [[nodiscard]] std::optional<Event> off_level_atom(const Spacetime& st, const TimeFunction& T,
                                                    double tau) const {
    for (const auto& a : atoms_)
      if (std::abs(T(st, a.value) - tau) > kGeomTol) return a.value;
    return std::nullopt;
  }

  [[nodiscard]] const std::vector<Atom<Event>>& atoms() const { return atoms_; }
  [[nodiscard]] const std::optional<SliceTag>& tag() const { return tag_; }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }

  /// Mass sitting at p (tolerance 1e-9), 0 if p is not an atom.
  [[nodiscard]] double mass_at(const Spacetime& st, const Event& p) const {
    for (const auto& a : atoms_)
      if (st.events_close(a.value, p)) return a.weight;
    return 0.0;
  }

 private:
  std::vector<Atom<Event>> atoms_;
  std::optional<SliceTag> tag_;
};

/// Largest weight discrepancy between two slice measures, matching atoms by
/// event identity (a missing atom counts with its full weight).
inline double weight_deviation(const Spacetime& st, const SliceMeasure& a, const SliceMeasure& b) {
  double worst = 0.0;
  for (const auto& x : a.atoms())
    worst = std::max(worst, std::abs(x.weight - b.mass_at(st, x.value)));
  for (const auto& y : b.atoms())
    worst = std::max(worst, std::abs(y.weight - a.mass_at(st, y.value)));
  return worst;
}

class CurveMeasure {
 public:
  /// Requires a common domain, merges duplicate curves, validates weights.
  static CurveMeasure make(const Spacetime& st, std::vector<Atom<CausalCurve>> atoms) {
    if (atoms.empty()) throw InputError("curve measure needs at least one atom");
    const Interval dom = atoms.front().value.domain();
    for (const auto& a : atoms)
      if (!(a.value.domain() == dom))
        throw InputError("curve measure atoms must share a domain; got " + to_string(dom) +
                         " and " + to_string(a.value.domain()));
    auto merged = detail::merge_atoms(std::move(atoms), [&](const CausalCurve& x,
                                                            const CausalCurve& y) {
      return curves_close(st, x, y);
    });
    detail::check_weights(merged, "curve measure");
    CurveMeasure m;
    m.domain_ = dom;
    m.atoms_ = std::move(merged);
    return m;
  }

  static CurveMeasure dirac(const Spacetime& st, CausalCurve g) {
    return make(st, {{std::move(g), 1.0}});
  }

  [[nodiscard]] const Interval& domain() const { return domain_; }
  [[nodiscard]] const std::vector<Atom<CausalCurve>>& atoms() const { return atoms_; }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }
  [[nodiscard]] double total_mass() const {
    return kahan_sum(atoms_, [](const Atom<CausalCurve>& a) { return a.weight; });
  }

 private:
  Interval domain_;
  std::vector<Atom<CausalCurve>> atoms_;
};

using EventPair = std::pair<Event, Event>;

class Coupling {
 public:
  /// Builds a coupling of `left` and `right`. Marginal equality and, when
  /// `causal`, concentration on J+ are enforced.
  static Coupling make(const Spacetime& st, std::vector<Atom<EventPair>> atoms, SliceMeasure left,
                       SliceMeasure right, bool causal) {
    for (auto& a : atoms) {
      a.value.first = st.normalize(a.value.first);
      a.value.second = st.normalize(a.value.second);
    }
    auto merged = detail::merge_atoms(std::move(atoms), [&](const EventPair& x, const EventPair& y) {
      return st.events_close(x.first, y.first) && st.events_close(x.second, y.second);
    });
    detail::check_weights(merged, "coupling");
    Coupling w;
    w.atoms_ = std::move(merged);
    w.left_ = std::move(left);
    w.right_ = std::move(right);
    w.causal_ = causal;
    auto chk = w.check(st);
    if (chk.marginal_error > kWeightTol)
      throw InputError("coupling marginals deviate from the referenced measures by " +
                       std::to_string(chk.marginal_error));
    if (causal && !chk.causal)
      throw InputError("coupling flagged causal has an atom outside J+");
    return w;
  }

  struct Check {
    double marginal_error = 0.0;
    bool causal = true;
    [[nodiscard]] bool ok(bool need_causal) const {
      return marginal_error <= kWeightTol && (causal || !need_causal);
    }
  };

  /// Re-verifies both defining conditions.
  [[nodiscard]] Check check(const Spacetime& st) const {
    Check c;
    c.marginal_error = std::max(weight_deviation(st, marginal(st, true), left_),
                                weight_deviation(st, marginal(st, false), right_));
    for (const auto& a : atoms_)
      if (!causally_precedes(st, a.value.first, a.value.second)) c.causal = false;
    return c;
  }

  [[nodiscard]] SliceMeasure marginal(const Spacetime& st, bool left_side) const {
    std::vector<Atom<Event>> ev;
    ev.reserve(atoms_.size());
    for (const auto& a : atoms_)
      ev.push_back({left_side ? a.value.first : a.value.second, a.weight});
    return SliceMeasure::make(st, std::move(ev));
  }

  [[nodiscard]] const std::vector<Atom<EventPair>>& atoms() const { return atoms_; }
  [[nodiscard]] const SliceMeasure& left() const { return left_; }
  [[nodiscard]] const SliceMeasure& right() const { return right_; }
  [[nodiscard]] bool causal() const { return causal_; }

 private:
  std::vector<Atom<EventPair>> atoms_;
  SliceMeasure left_;
  SliceMeasure right_;
  bool causal_ = false;
};

/// Coupling of mu and rho through the shared middle marginal nu:
/// omega(p, r) = sum_q omega1(p, q) omega2(q, r) / nu(q).
inline Coupling compose(const Spacetime& st, const Coupling& w1, const Coupling& w2) {
  if (weight_deviation(st, w1.right(), w2.left()) > kWeightTol)
    throw InputError("compose: middle marginals differ");
  std::vector<Atom<EventPair>> out;
  for (const auto& a : w1.atoms()) {
    const double nq = w1.right().mass_at(st, a.value.second);
    for (const auto& b : w2.atoms())
      if (st.events_close(a.value.second, b.value.first))
        out.push_back({{a.value.first, b.value.second}, a.weight * b.weight / nq});
  }
  const bool causal = w1.causal() && w2.causal();
  return Coupling::make(st, std::move(out), w1.left(), w2.right(), causal);
}

// ---------------------------------------------------------------------------

/// (ev_t)# sigma.
inline SliceMeasure ev_marginal(const Spacetime& st, const CurveMeasure& sigma, double t) {
  if (!sigma.domain().contains(t, 0.0))
    throw InputError("evaluation time " + std::to_string(t) + " outside domain " +
                     to_string(sigma.domain()));
  std::vector<Atom<Event>> ev;
  ev.reserve(sigma.size());
  for (const auto& a : sigma.atoms()) ev.push_back({a.value.at(st, t), a.weight});
  return SliceMeasure::make(st, std::move(ev));
}

/// Disintegration of sigma w.r.t. ev_at: base = (ev_at)# sigma and, for each
/// base atom x, the conditional sigma^x (aligned with base.atoms()).
struct Disintegration {
  double at = 0.0;
  SliceMeasure base;
  std::vector<CurveMeasure> conditionals;
};

inline Disintegration disintegrate(const Spacetime& st, const CurveMeasure& sigma, double at) {
  Disintegration d{at, ev_marginal(st, sigma, at), {}};
  std::vector<std::vector<Atom<CausalCurve>>> fibers(d.base.size());
  for (const auto& a : sigma.atoms()) {
    const Event x = a.value.at(st, at);
    std::size_t k = 0;
    while (!st.events_close(d.base.atoms()[k].value, x)) ++k;
    fibers[k].push_back({a.value, a.weight / d.base.atoms()[k].weight});
  }
  for (auto& f : fibers) d.conditionals.push_back(CurveMeasure::make(st, std::move(f)));
  return d;
}

/// sum_x nu(x) sigma^x.
inline CurveMeasure reconstruct(const Spacetime& st, const Disintegration& d) {
  std::vector<Atom<CausalCurve>> out;
  for (std::size_t k = 0; k < d.base.size(); ++k)
    for (const auto& a : d.conditionals[k].atoms())
      out.push_back({a.value, d.base.atoms()[k].weight * a.weight});
  return CurveMeasure::make(st, std::move(out));
}

/// sigma1 |_| sigma2: sum over the common junction marginal nu of the
/// product of conditionals, pushed through curve concatenation.
inline CurveMeasure concat_measures(const Spacetime& st, const CurveMeasure& s1,
                                    const CurveMeasure& s2) {
  if (!s1.domain().bounded_above() || !s2.domain().bounded_below() ||
      s1.domain().hi != s2.domain().lo)
    throw InputError("concat_measures: domains " + to_string(s1.domain()) + " and " +
                     to_string(s2.domain()) + " do not meet");
  const double b = s1.domain().hi;
  const Disintegration d1 = disintegrate(st, s1, b);
  const Disintegration d2 = disintegrate(st, s2, b);
  const double dev = weight_deviation(st, d1.base, d2.base);
  if (dev > kWeightTol) {
    std::string detail;
    for (const auto& x : d1.base.atoms()) {
      const double w2 = d2.base.mass_at(st, x.value);
      if (std::abs(x.weight - w2) > kWeightTol)
        detail += " " + st.describe(x.value) + ": " + std::to_string(x.weight) + " vs " +
                  std::to_string(w2) + ";";
    }
    for (const auto& y : d2.base.atoms())
      if (d1.base.mass_at(st, y.value) == 0.0)
        detail += " " + st.describe(y.value) + ": 0 vs " + std::to_string(y.weight) + ";";
    throw InputError("concat_measures: incompatible junction marginals at t = " +
                     std::to_string(b) + ":" + detail);
  }
  std::vector<Atom<CausalCurve>> out;
  for (std::size_t k = 0; k < d1.base.size(); ++k) {
    const Event& x = d1.base.atoms()[k].value;
    const double nu = d1.base.atoms()[k].weight;
    std::size_t j = 0;
    while (!st.events_close(d2.base.atoms()[j].value, x)) ++j;
    for (const auto& a : d1.conditionals[k].atoms())
      for (const auto& c : d2.conditionals[j].atoms())
        out.push_back({concat(st, a.value, c.value), nu * a.weight * c.weight});
  }
  return CurveMeasure::make(st, std::move(out));
}

/// Atomwise reparametrization between full-line canonical parametrizations.
inline CurveMeasure pushforward_by_reparam(const Spacetime& st, const CurveMeasure& sigma,
                                           const TimeFunctionRef& T1, const TimeFunctionRef& T2) {
  if (sigma.domain().kind != Interval::Kind::line)
    throw PreconditionError("pushforward_by_reparam needs full-line curves");
  std::vector<Atom<CausalCurve>> out;
  out.reserve(sigma.size());
  for (const auto& a : sigma.atoms()) out.push_back({reparametrize(st, a.value, T1, T2), a.weight});
  return CurveMeasure::make(st, std::move(out));
}

/// Exact 1-Wasserstein distance of two slice measures for the cost d_w.
inline double transport_distance_dw(const Spacetime& st, const SliceMeasure& mu,
                                    const SliceMeasure& nu) {
  std::vector<double> a, b;
  for (const auto& x : mu.atoms()) a.push_back(x.weight);
  for (const auto& y : nu.atoms()) b.push_back(y.weight);
  std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      cost[i][j] = dw_distance(st, mu.atoms()[i].value, nu.atoms()[j].value);
  return flow::min_cost_transport(a, b, cost).cost;
}

}  // namespace lot
