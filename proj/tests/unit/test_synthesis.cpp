#include <gtest/gtest.h>

#include <cmath>

#include "../support/cases.hpp"
#include "lot/lot.hpp"

using namespace lot;

namespace {

const Spacetime kMink = Spacetime::minkowski();
const Spacetime kPair = Spacetime::graph({"A", "B"}, {{"A", "B", 1.0}});
Event ev(double t, double x) { return {t, SpatialPoint::on_line(x)}; }
TimeFunctionRef T0(const Spacetime& st) { return share(TimeFunction::canonical(st)); }

Evolution static_pair(const std::vector<double>& times, MeshKind kind) {
  std::vector<EvolutionSlice> slices;
  for (double t : times)
    slices.push_back({t, SliceMeasure::make(kPair, {{{t, SpatialPoint::at_vertex(0)}, 0.5},
                                                    {{t, SpatialPoint::at_vertex(1)}, 0.5}})});
  return Evolution::make(kPair, T0(kPair), std::move(slices), kind);
}

// Every slice splits each atom in two: x -> x +- 1/2 per unit of time.
Evolution branching(long lo, long hi) {
  std::vector<EvolutionSlice> slices;
  std::vector<Atom<Event>> atoms{{ev(static_cast<double>(lo), 0), 1.0}};
  for (long k = lo; k <= hi; ++k) {
    const double t = static_cast<double>(k);
    std::vector<Atom<Event>> here;
    for (const auto& a : atoms) here.push_back({ev(t, a.value.x.coord), a.weight});
    slices.push_back({t, SliceMeasure::make(kMink, here)});
    std::vector<Atom<Event>> next;
    for (const auto& a : slices.back().mu.atoms()) {
      next.push_back({ev(t + 1, a.value.x.coord - 0.5), a.weight / 2});
      next.push_back({ev(t + 1, a.value.x.coord + 0.5), a.weight / 2});
    }
    atoms = std::move(next);
  }
  return Evolution::make(kMink, T0(kMink), std::move(slices), MeshKind::integer);
}

}  // namespace

TEST(Lift, GeodesicAtoms) {
  auto mu = SliceMeasure::dirac(kMink, ev(0, 0));
  auto nu = SliceMeasure::make(kMink, {{ev(1, 1), 0.5}, {ev(1, -0.5), 0.5}});
  auto w = Coupling::make(kMink, {{{ev(0, 0), ev(1, 1)}, 0.5}, {{ev(0, 0), ev(1, -0.5)}, 0.5}}, mu, nu, true);
  auto s = lift_coupling(kMink, T0(kMink), w, 0, 1);
  ASSERT_EQ(s.size(), 2u);
  for (const auto& a : s.atoms()) {
    EXPECT_EQ(a.value.c(), 1.0);
    EXPECT_TRUE(verify_causal(kMink, a.value).ok);
  }
  EXPECT_EQ(s.atoms()[0].value.at(kMink, 0.5), ev(0.5, 0.5));
  EXPECT_THROW(lift_coupling(kMink, T0(kMink), w, 0, 2), PreconditionError);
}

TEST(Extract, RecoversCouplingAndRejectsBadTimes) {
  auto E = static_pair({0, 0.5, 1}, MeshKind::dyadic);
  auto s = synthesize_compact(kPair, E);
  auto w = extract_coupling(kPair, s, 0, 1);
  EXPECT_TRUE(w.check(kPair).ok(true));
  EXPECT_LE(weight_deviation(kPair, w.left(), E.slices()[0].mu), 1e-12);
  EXPECT_THROW(extract_coupling(kPair, s, 1, 0), InputError);
  EXPECT_THROW(extract_coupling(kPair, s, 0, 2), InputError);
}

TEST(Compact, StaticEvolutionGivesStaticCurves) {
  auto s = synthesize_compact(kPair, static_pair(dyadic_times(0, 1, 2), MeshKind::dyadic));
  ASSERT_EQ(s.size(), 2u);
  for (const auto& a : s.atoms()) {
    EXPECT_EQ(a.weight, 0.5);
    EXPECT_EQ(a.value.front().x, a.value.back().x);
  }
}

TEST(Compact, RequiresDyadicMeshAndCausality) {
  EXPECT_THROW(synthesize_compact(kPair, static_pair({0, 1, 2}, MeshKind::integer)), InputError);
  std::vector<EvolutionSlice> slices{{0, SliceMeasure::dirac(kMink, ev(0, 0))},
                                     {0.5, SliceMeasure::dirac(kMink, ev(0.5, 2))},
                                     {1, SliceMeasure::dirac(kMink, ev(1, 2))}};
  auto E = Evolution::make(kMink, T0(kMink), slices, MeshKind::dyadic);
  try {
    synthesize_compact(kMink, E);
    FAIL();
  } catch (const NonCausalEvolution& e) {
    EXPECT_EQ(e.failure().from, 0u);
  }
}

TEST(Compact, RandomRoundTrips) {
  cases::Rng rng(21);
  for (int k = 0; k < 60; ++k) {
    auto st = k % 2 ? cases::random_graph(rng, 5) : cases::random_minkowski(rng);
    auto T = cases::random_time_function(rng, st);
    const unsigned depth = static_cast<unsigned>(cases::uniform_int(rng, 1, 3));
    auto E = cases::random_causal_evolution(rng, st, T, dyadic_times(0, 2, depth), MeshKind::dyadic, 4);
    auto s = synthesize_compact(st, E);
    EXPECT_TRUE(check_mesh_marginals(st, s, E).exact());
    EXPECT_TRUE(atoms_connected(st, s));
    for (const auto& a : s.atoms()) {
      EXPECT_TRUE(verify_causal(st, a.value).ok);
      EXPECT_LE(affinity_residual(st, *T, a.value, *a.value.c()), 1e-9);
    }
  }
}

TEST(Compact, GeometricMeshThroughGenericEngine) {
  auto times = geometric_times(0, 1, 5);
  times.push_back(1);
  auto s = synthesize_on_mesh(kPair, static_pair(times, MeshKind::explicit_list));
  EXPECT_EQ(s.domain(), Interval::compact(0, 1));
}

TEST(Slabs, StaticGraphEvolution) {
  auto E = static_pair({-3, -2, -1, 0, 1, 2, 3}, MeshKind::integer);
  auto r = synthesize_slabs(kPair, E, 3, SlabDirection::both);
  EXPECT_EQ(r.curves.domain(), Interval::line());
  ASSERT_EQ(r.curves.size(), 2u);
  auto sigma = normalize_to_IT(kPair, T0(kPair), r.curves);
  for (double t : {-10.0, 0.0, 2.5, 10.0})
    EXPECT_LE(weight_deviation(kPair, ev_marginal(kPair, sigma.measure(), t),
                               SliceMeasure::make(kPair, {{{t, SpatialPoint::at_vertex(0)}, 0.5},
                                                          {{t, SpatialPoint::at_vertex(1)}, 0.5}})),
              1e-12);
}

TEST(Slabs, BranchingProductWeights) {
  for (std::size_t N = 1; N <= 4; ++N) {
    auto E = branching(0, static_cast<long>(N));
    auto r = synthesize_slabs(kMink, E, N, SlabDirection::forward);
    EXPECT_EQ(r.curves.domain(), Interval::future_ray(0));
    EXPECT_EQ(r.forward_chains.size(), N);
    EXPECT_TRUE(check_mesh_marginals(kMink, r.curves, E).exact());
    for (const auto& a : r.curves.atoms()) EXPECT_DOUBLE_EQ(a.weight, std::ldexp(1.0, -static_cast<int>(N)));
  }
}

TEST(Slabs, TruncationConsistency) {
  cases::Rng rng(22);
  for (int k = 0; k < 20; ++k) {
    auto st = k % 2 ? cases::random_graph(rng, 4) : Spacetime::minkowski();
    auto E = cases::random_causal_evolution(rng, st, T0(st), integer_times(-4, 4), MeshKind::integer, 3);
    for (auto dir : {SlabDirection::forward, SlabDirection::backward}) {
      auto r = synthesize_slabs(st, E, 4, dir);
      const auto& chains = dir == SlabDirection::forward ? r.forward_chains : r.backward_chains;
      for (std::size_t n = 1; n < chains.size(); ++n)
        EXPECT_TRUE(chain_measures_agree(project_chain(chains[n], dir == SlabDirection::forward), chains[n - 1]));
    }
  }
}

TEST(Slabs, ErrorsAndRays) {
  auto E = static_pair({-2, -1, 0, 1, 2}, MeshKind::integer);
  EXPECT_THROW(synthesize_slabs(kPair, E, 0, SlabDirection::forward), InputError);
  EXPECT_THROW(synthesize_slabs(kPair, E, 1, SlabDirection::forward, 0.5), InputError);
  EXPECT_THROW(synthesize_slabs(kPair, E, 3, SlabDirection::forward), InputError);
  auto past = synthesize_slabs(kPair, E, 2, SlabDirection::backward, 0);
  EXPECT_EQ(past.curves.domain(), Interval::past_ray(0));
}

TEST(NormalizeToIT, AcceptsCanonicalAndRejectsScaled) {
  auto E = static_pair({-1, 0, 1}, MeshKind::integer);
  auto r = synthesize_slabs(kPair, E, 1, SlabDirection::both);
  EXPECT_NO_THROW(normalize_to_IT(kPair, T0(kPair), r.curves));
  auto g = r.curves.atoms()[0].value;
  auto scaled = canonicalize_noncompact(kPair, T0(kPair), {g.path(), true, true}, Interval::line(), 2.0);
  auto bad = CurveMeasure::make(kPair, {{g, 0.5}, {scaled, 0.5}});
  try {
    normalize_to_IT(kPair, T0(kPair), bad);
    FAIL();
  } catch (const NotInIT& e) {
    EXPECT_NE(std::string(e.what()).find("c = 2"), std::string::npos);
    EXPECT_TRUE(e.atom() == scaled);
  }
  auto compact = synthesize_on_mesh(kPair, E);
  EXPECT_THROW(normalize_to_IT(kPair, T0(kPair), compact), PreconditionError);
}

TEST(Observer, StaticIsInvariant) {
  auto E = static_pair({-2, -1, 0, 1, 2}, MeshKind::integer);
  auto T2 = share(TimeFunction::offsets(std::vector<double>{0.0, 0.5}, "Tf"));
  auto r = observer_invariance_check(kPair, T2, E, 2);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.taus.size(), 5u);
}

TEST(Observer, RandomTilts) {
  cases::Rng rng(23);
  for (int k = 0; k < 20; ++k) {
    auto st = k % 2 ? cases::random_graph(rng, 4) : Spacetime::minkowski();
    auto E = cases::random_causal_evolution(rng, st, T0(st), integer_times(-3, 3), MeshKind::integer, 3);
    auto r = observer_invariance_check(st, cases::random_time_function(rng, st, "T2"), E, 3);
    EXPECT_TRUE(r.ok()) << k;
  }
}

TEST(Plan, DispatchesOnInterval) {
  auto E = static_pair({0, 0.5, 1}, MeshKind::dyadic);
  auto s = synthesize(kPair, {Interval::compact(0, 1), E, 1});
  EXPECT_EQ(s.domain(), Interval::compact(0, 1));
  EXPECT_THROW(synthesize(kPair, {Interval::compact(0, 2), E, 1}), InputError);
  EXPECT_THROW(synthesize(kPair, {Interval::compact(0, 1), E, 1, "other"}), InputError);
  auto F = static_pair({0, 1, 2}, MeshKind::integer);
  EXPECT_EQ(synthesize(kPair, {Interval::future_ray(0), F, 2}).domain(), Interval::future_ray(0));
  EXPECT_EQ(synthesize(kPair, {Interval::past_ray(2), F, 2}).domain(), Interval::past_ray(2));
}
