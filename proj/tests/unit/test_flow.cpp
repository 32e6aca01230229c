#include <gtest/gtest.h>

#include "lot/flow.hpp"

using lot::flow::MaxFlow;
using lot::flow::min_cost_transport;

TEST(MaxFlow, ClassicNetwork) {
  MaxFlow<long long> f(6);
  f.add_arc(0, 1, 16);
  f.add_arc(0, 2, 13);
  f.add_arc(1, 2, 10);
  f.add_arc(2, 1, 4);
  f.add_arc(1, 3, 12);
  f.add_arc(3, 2, 9);
  f.add_arc(2, 4, 14);
  f.add_arc(4, 3, 7);
  f.add_arc(3, 5, 20);
  f.add_arc(4, 5, 4);
  EXPECT_EQ(f.run(0, 5), 23);
  auto side = f.source_side();
  EXPECT_TRUE(side[0]);
  EXPECT_FALSE(side[5]);
}

TEST(MaxFlow, MinCutMatchesFlow) {
  MaxFlow<long long> f(4);
  const auto a = f.add_arc(0, 1, 3);
  const auto b = f.add_arc(0, 2, 2);
  f.add_arc(1, 3, 1);
  f.add_arc(2, 3, 5);
  f.add_arc(1, 2, 1);
  EXPECT_EQ(f.run(0, 3), 4);
  EXPECT_EQ(f.flow(a), 2);
  EXPECT_EQ(f.flow(b), 2);
  auto side = f.source_side();
  EXPECT_TRUE(side[1]);
  EXPECT_FALSE(side[2]);
}

TEST(MaxFlow, DoubleCapacities) {
  MaxFlow<double> f(3);
  f.add_arc(0, 1, 0.75);
  f.add_arc(1, 2, 0.5);
  EXPECT_DOUBLE_EQ(f.run(0, 2, 1e-15), 0.5);
}

TEST(Transport, IdentityAndShift) {
  auto p = min_cost_transport({0.5, 0.5}, {0.5, 0.5}, {{0, 1}, {1, 0}});
  EXPECT_DOUBLE_EQ(p.cost, 0.0);
  auto q = min_cost_transport({1.0}, {0.25, 0.75}, {{2, 4}});
  EXPECT_DOUBLE_EQ(q.cost, 3.5);
  EXPECT_DOUBLE_EQ(q.mass[0][1], 0.75);
}

TEST(Transport, PrefersCheaperCrossing) {
  auto p = min_cost_transport({0.5, 0.5}, {0.5, 0.5}, {{1, 3}, {3, 10}});
  EXPECT_DOUBLE_EQ(p.cost, 3.0);
  EXPECT_DOUBLE_EQ(p.mass[0][1], 0.5);
}
