#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/cases.hpp"
#include "lot/lot.hpp"

using namespace lot;

namespace {

Spacetime path_abc() { return Spacetime::graph({"A", "B", "C"}, {{"A", "B", 1.0}, {"B", "C", 2.0}}); }
Event ev(double t, double x) { return {t, SpatialPoint::on_line(x)}; }
Event at(const Spacetime& st, double t, const char* v) {
  return {t, SpatialPoint::at_vertex(*st.vertex_index(v))};
}

}  // namespace

TEST(Causality, Reflexive) {
  auto st = Spacetime::minkowski();
  EXPECT_TRUE(causally_precedes(st, ev(0, 3), ev(0, 3)));
  auto g = path_abc();
  EXPECT_TRUE(causally_precedes(g, at(g, 1, "B"), at(g, 1, "B")));
}

TEST(Causality, MinkowskiClosedForm) {
  auto st = Spacetime::minkowski();
  EXPECT_TRUE(causally_precedes(st, ev(0, 0), ev(1, 0.5)));
  EXPECT_FALSE(causally_precedes(st, ev(0, 0), ev(1, 1.5)));
  EXPECT_TRUE(causally_precedes(st, ev(0, 0), ev(1, 1.0)));  // null boundary
  EXPECT_FALSE(causally_precedes(st, ev(1, 0), ev(0, 0)));
}

TEST(Causality, TwoVertexGraph) {
  auto st = Spacetime::graph({"A", "B"}, {{"A", "B", 2.0}});
  EXPECT_FALSE(causally_precedes(st, at(st, 0, "A"), at(st, 1, "B")));
  EXPECT_TRUE(causally_precedes(st, at(st, 0, "A"), at(st, 2, "B")));
}

TEST(Causality, ToleranceWidensTheCone) {
  auto st = Spacetime::minkowski(1.0, 1.0, 1e-9);
  EXPECT_TRUE(causally_precedes(st, ev(0, 0), ev(1, 1.0 + 5e-10)));
  EXPECT_FALSE(causally_precedes(st, ev(0, 0), ev(1, 1.0 + 5e-9)));
}

TEST(Causality, InvalidPointIsInputError) {
  auto st = path_abc();
  EXPECT_THROW(causally_precedes(st, {0, SpatialPoint::on_line(0)}, at(st, 1, "A")), InputError);
  EXPECT_THROW(causally_precedes(st, {0, SpatialPoint::on_edge(0, 3.0)}, at(st, 1, "A")), InputError);
  auto mk = Spacetime::minkowski();
  EXPECT_THROW(causally_precedes(mk, {0, SpatialPoint::at_vertex(0)}, ev(1, 0)), InputError);
}

TEST(OpticalDistance, Examples) {
  auto st = path_abc();
  EXPECT_EQ(st.optical_distance(SpatialPoint::at_vertex(0), SpatialPoint::at_vertex(0)), 0.0);
  EXPECT_EQ(st.optical_distance(SpatialPoint::at_vertex(0), SpatialPoint::at_vertex(2)), 3.0);
  auto two = Spacetime::graph({"A", "B"}, {{"A", "B", 2.0}});
  EXPECT_EQ(two.optical_distance(SpatialPoint::on_edge(0, 0.5), SpatialPoint::at_vertex(1)), 1.5);
}

TEST(OpticalDistance, InteriorPointsOnSameEdgeAndAcrossCycle) {
  // Triangle: direct along the edge or around the other two sides.
  auto st = Spacetime::graph({"A", "B", "C"}, {{"A", "B", 4.0}, {"B", "C", 1.0}, {"C", "A", 1.0}});
  const auto e = *st.edge_between(0, 1);
  EXPECT_DOUBLE_EQ(st.optical_distance(SpatialPoint::on_edge(e, 1.0), SpatialPoint::on_edge(e, 3.0)), 2.0);
  EXPECT_DOUBLE_EQ(st.optical_distance(SpatialPoint::on_edge(e, 0.25), SpatialPoint::on_edge(e, 3.75)), 2.5);
}

TEST(Construction, RejectsBadGraphs) {
  EXPECT_THROW(Spacetime::graph({"A", "B"}, {}), InputError);
  EXPECT_THROW(Spacetime::graph({"A", "A"}, {{"A", "A", 1.0}}), InputError);
  EXPECT_THROW(Spacetime::graph({"A", "B"}, {{"A", "B", 0.0}}), InputError);
  EXPECT_THROW(Spacetime::graph({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 2.0}}), InputError);
  EXPECT_THROW(Spacetime::graph({"A", "B"}, {{"A", "Z", 1.0}}), InputError);
  EXPECT_THROW(Spacetime::minkowski(0.0), InputError);
  EXPECT_THROW(Spacetime::minkowski(1.0, -1.0), InputError);
}

TEST(DwDistance, Examples) {
  EXPECT_EQ(dw_distance(Spacetime::minkowski(), ev(0, 0), ev(0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(dw_distance(Spacetime::minkowski(), ev(0, 0), ev(3, 4)), 5.0);
  EXPECT_DOUBLE_EQ(dw_distance(Spacetime::minkowski(4.0, 1.0), ev(0, 0), ev(3, 4)), 10.0);
}

TEST(SlabBound, Examples) {
  EXPECT_NEAR(slab_bound_constant(Spacetime::minkowski(), 0, 1), 1.41421356, 1e-8);
  EXPECT_DOUBLE_EQ(slab_bound_constant(Spacetime::minkowski(2.0, 1.0), 0, 1), 2.0);
  EXPECT_DOUBLE_EQ(slab_bound_constant(Spacetime::minkowski(1.0, 0.5), 0, 1), 1.0);
  EXPECT_THROW(slab_bound_constant(Spacetime::minkowski(), 1, 0), InputError);
}

TEST(Geodesic, StaticCurve) {
  auto st = path_abc();
  auto g = causal_geodesic(st, at(st, 0, "A"), at(st, 1, "A"));
  EXPECT_EQ(g.c(), 1.0);
  EXPECT_EQ(g.at(st, 0.5), at(st, 0.5, "A"));
}

TEST(Geodesic, MinkowskiStraightLine) {
  auto st = Spacetime::minkowski();
  auto g = causal_geodesic(st, ev(0, 0), ev(2, 1));
  for (double s : {0.0, 0.5, 1.0, 1.5, 2.0}) EXPECT_EQ(g.at(st, s), ev(s, s / 2));
}

TEST(Geodesic, PassesIntermediateVertexAtConstantSpeed) {
  auto st = path_abc();
  auto g = causal_geodesic(st, at(st, 0, "A"), at(st, 4, "C"));
  ASSERT_EQ(g.nodes().size(), 3u);
  EXPECT_DOUBLE_EQ(g.nodes()[1].param, 4.0 / 3.0);
  EXPECT_TRUE(st.points_close(g.nodes()[1].event.x, SpatialPoint::at_vertex(1)));
  EXPECT_TRUE(verify_causal(st, g).ok);
}

TEST(Geodesic, Errors) {
  auto st = Spacetime::minkowski();
  EXPECT_THROW(causal_geodesic(st, ev(0, 0), ev(1, 2)), PreconditionError);
  EXPECT_THROW(causal_geodesic(st, ev(0, 0), ev(0, 1)), DegenerateError);
  EXPECT_THROW(causal_geodesic(st, ev(0, 0), ev(0, 0)), DegenerateError);
}

TEST(Geodesic, LexicographicTieBreak) {
  // Square A-B-D and A-C-D of equal length: the route through B wins.
  auto st = Spacetime::graph({"D", "C", "B", "A"},
                             {{"A", "C", 1.0}, {"C", "D", 1.0}, {"A", "B", 1.0}, {"B", "D", 1.0}});
  auto g = causal_geodesic(st, at(st, 0, "A"), at(st, 2, "D"));
  ASSERT_EQ(g.nodes().size(), 3u);
  EXPECT_EQ(g.nodes()[1].event.x, SpatialPoint::at_vertex(*st.vertex_index("B")));
}

TEST(Geodesic, DeterministicAndCausal) {
  cases::Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    auto st = cases::random_graph(rng, cases::uniform_int(rng, 2, 6));
    const auto x = cases::random_point(rng, st);
    const auto y = cases::random_point(rng, st);
    const Event p{0.0, x};
    const Event q{st.optical_distance(x, y) + cases::uniform_int(rng, 1, 4) / 4.0, y};
    auto g1 = causal_geodesic(st, p, q);
    auto g2 = causal_geodesic(st, p, q);
    EXPECT_TRUE(g1 == g2);
    EXPECT_EQ(g1.c(), 1.0);
    EXPECT_TRUE(verify_causal(st, g1).ok);
  }
}

TEST(Properties, PartialOrderOnRandomEventSets) {
  cases::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto st = trial % 2 ? cases::random_graph(rng, 5) : Spacetime::minkowski();
    std::vector<Event> E;
    for (int i = 0; i < 20; ++i) E.push_back({cases::uniform_int(rng, 0, 16) / 4.0, cases::random_point(rng, st)});
    for (const auto& p : E) {
      EXPECT_TRUE(causally_precedes(st, p, p));
      for (const auto& q : E) {
        if (causally_precedes(st, p, q) && causally_precedes(st, q, p)) {
          EXPECT_TRUE(st.events_close(p, q));
        }
        for (const auto& r : E)
          if (causally_precedes(st, p, q) && causally_precedes(st, q, r)) {
            EXPECT_TRUE(causally_precedes(st, p, r));
          }
      }
    }
  }
}

TEST(Properties, MetricAxiomsOnRandomTriples) {
  cases::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto st = trial % 2 ? cases::random_graph(rng, 6) : cases::random_minkowski(rng);
    Event p{cases::uniform_int(rng, -8, 8) / 4.0, cases::random_point(rng, st)};
    Event q{cases::uniform_int(rng, -8, 8) / 4.0, cases::random_point(rng, st)};
    Event r{cases::uniform_int(rng, -8, 8) / 4.0, cases::random_point(rng, st)};
    EXPECT_NEAR(st.optical_distance(p.x, q.x), st.optical_distance(q.x, p.x), 1e-9);
    EXPECT_LE(st.optical_distance(p.x, r.x), st.optical_distance(p.x, q.x) + st.optical_distance(q.x, r.x) + 1e-9);
    EXPECT_NEAR(dw_distance(st, p, q), dw_distance(st, q, p), 1e-9);
    EXPECT_LE(dw_distance(st, p, r), dw_distance(st, p, q) + dw_distance(st, q, r) + 1e-9);
  }
}

TEST(Normalize, EdgeEndpointsBecomeVertices) {
  auto st = path_abc();
  EXPECT_EQ(st.normalize(SpatialPoint::on_edge(0, 0.0)), SpatialPoint::at_vertex(0));
  EXPECT_EQ(st.normalize(SpatialPoint::on_edge(0, 1.0)), SpatialPoint::at_vertex(1));
  EXPECT_TRUE(st.points_close(SpatialPoint::on_edge(0, 1e-12), SpatialPoint::at_vertex(0)));
}
