#pragma once

// Seeded random instances with dyadic data (integer edge lengths, positions
// and offsets in multiples of 1/8, weights k/D) so exact checks stay exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "lot/lot.hpp"

namespace cases {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool coin(Rng& rng) { return uniform_int(rng, 0, 1) == 1; }

/// Connected graph on n vertices V0..V{n-1}: random tree plus a few chords,
/// integer lengths in [1, 3]. With `pendant`, vertex F hangs off V0 by an
/// edge of length `pendant_length`.
inline lot::Spacetime random_graph(Rng& rng, int n, bool pendant = false, double pendant_length = 6.0) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("V" + std::to_string(i));
  std::vector<std::tuple<std::string, std::string, double>> edges;
  std::vector<std::pair<int, int>> used;
  auto has = [&](int a, int b) {
    return std::find(used.begin(), used.end(), std::make_pair(std::min(a, b), std::max(a, b))) != used.end();
  };
  auto add = [&](int a, int b) {
    used.emplace_back(std::min(a, b), std::max(a, b));
    edges.emplace_back(names[a], names[b], static_cast<double>(uniform_int(rng, 1, 3)));
  };
  for (int i = 1; i < n; ++i) add(uniform_int(rng, 0, i - 1), i);
  const int chords = n > 2 ? uniform_int(rng, 0, 2) : 0;
  for (int k = 0; k < chords; ++k) {
    const int a = uniform_int(rng, 0, n - 1);
    const int b = uniform_int(rng, 0, n - 1);
    if (a != b && !has(a, b)) add(a, b);
  }
  if (pendant) {
    names.push_back("F");
    edges.emplace_back("V0", "F", pendant_length);
  }
  return lot::Spacetime::graph(names, edges);
}

inline lot::Spacetime random_minkowski(Rng& rng) {
  static const double alphas[] = {1.0, 2.0, 0.5};
  static const double us[] = {1.0, 0.5, 2.0};
  return lot::Spacetime::minkowski(alphas[uniform_int(rng, 0, 2)], us[uniform_int(rng, 0, 2)]);
}

/// Number of "main" vertices (excluding a pendant F).
inline std::size_t main_vertices(const lot::Spacetime& st) {
  std::size_t n = st.vertex_count();
  if (st.vertex_index("F")) --n;
  return n;
}

inline lot::SpatialPoint random_point(Rng& rng, const lot::Spacetime& st) {
  if (!st.is_graph()) return lot::SpatialPoint::on_line(uniform_int(rng, -16, 16) / 8.0);
  const std::size_t nv = main_vertices(st);
  if (coin(rng)) return lot::SpatialPoint::at_vertex(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(nv) - 1)));
  std::vector<std::size_t> main_edges;
  for (std::size_t e = 0; e < st.edges().size(); ++e)
    if (st.edges()[e].a < nv && st.edges()[e].b < nv) main_edges.push_back(e);
  if (main_edges.empty()) return lot::SpatialPoint::at_vertex(0);
  const std::size_t e = main_edges[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(main_edges.size()) - 1))];
  const double len = st.edges()[e].length;
  return st.normalize(lot::SpatialPoint::on_edge(e, len * uniform_int(rng, 1, 3) / 4.0));
}

/// Moves x by optical distance at most 3d/4 toward a random main vertex
/// (graph) or by a signed multiple of d/4 (line).
inline lot::SpatialPoint random_step(Rng& rng, const lot::Spacetime& st, const lot::SpatialPoint& x, double d) {
  const double frac = uniform_int(rng, 0, 3) / 4.0;
  if (!st.is_graph()) return lot::SpatialPoint::on_line(x.coord + (coin(rng) ? 1.0 : -1.0) * frac * d);
  const std::size_t nv = main_vertices(st);
  const auto target = lot::SpatialPoint::at_vertex(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(nv) - 1)));
  const double L = st.optical_distance(x, target);
  if (L == 0.0 || frac == 0.0) return x;
  const auto g = lot::causal_geodesic(st, lot::Event{0.0, x}, lot::Event{L, target});
  return g.at(st, std::min(frac * d, L)).x;
}

inline std::vector<double> random_weights(Rng& rng, int k) {
  static const int dens[] = {4, 8, 16, 12, 10};
  int D = dens[uniform_int(rng, 0, 4)];
  while (D < k) D *= 2;
  std::vector<int> parts(static_cast<std::size_t>(k), 1);
  for (int r = D - k; r > 0; --r) ++parts[static_cast<std::size_t>(uniform_int(rng, 0, k - 1))];
  std::vector<double> w;
  for (int p : parts) w.push_back(static_cast<double>(p) / D);
  return w;
}

/// Time function with spatial Lipschitz constant <= 1/2.
inline lot::TimeFunctionRef random_time_function(Rng& rng, const lot::Spacetime& st, const std::string& name = "T") {
  if (!st.is_graph()) {
    static const double slopes[] = {0.0, 0.25, -0.25, 0.5, -0.5, 0.125};
    return lot::share(lot::TimeFunction::slope(slopes[uniform_int(rng, 0, 5)], name));
  }
  const std::size_t r = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(st.vertex_count()) - 1));
  const double s = uniform_int(rng, -4, 4) / 8.0;
  std::vector<double> f;
  for (std::size_t v = 0; v < st.vertex_count(); ++v)
    f.push_back(s * st.optical_distance(lot::SpatialPoint::at_vertex(r), lot::SpatialPoint::at_vertex(v)));
  return lot::share(lot::TimeFunction::offsets(f, name));
}

inline lot::SliceMeasure random_slice(Rng& rng, const lot::Spacetime& st, const lot::TimeFunction& T,
                                      double tau, int max_atoms) {
  const int k = uniform_int(rng, 1, max_atoms);
  const auto w = random_weights(rng, k);
  std::vector<lot::Atom<lot::Event>> atoms;
  for (int i = 0; i < k; ++i)
    atoms.push_back({lot::level_event(st, T, tau, random_point(rng, st)), w[static_cast<std::size_t>(i)]});
  return lot::SliceMeasure::make(st, std::move(atoms));
}

/// Causal evolution on `times` built from k independent level-to-level
/// walkers: each step covers optical distance <= dtau / (1 + Lip T), which
/// keeps consecutive level events causally related.
inline lot::Evolution random_causal_evolution(Rng& rng, const lot::Spacetime& st, const lot::TimeFunctionRef& T,
                                              const std::vector<double>& times, lot::MeshKind kind, int max_atoms) {
  const int k = uniform_int(rng, 1, max_atoms);
  const auto w = random_weights(rng, k);
  const double speed = 1.0 / (1.0 + T->lipschitz(st));
  std::vector<lot::SpatialPoint> pos;
  for (int i = 0; i < k; ++i) pos.push_back(random_point(rng, st));
  std::vector<lot::EvolutionSlice> slices;
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (j > 0)
      for (auto& x : pos) x = random_step(rng, st, x, speed * (times[j] - times[j - 1]));
    std::vector<lot::Atom<lot::Event>> atoms;
    for (int i = 0; i < k; ++i)
      atoms.push_back({lot::level_event(st, *T, times[j], pos[static_cast<std::size_t>(i)]), w[static_cast<std::size_t>(i)]});
    slices.push_back({times[j], lot::SliceMeasure::make(st, std::move(atoms))});
  }
  return lot::Evolution::make(st, T, std::move(slices), kind);
}

/// As above but every slice after index `jump` is moved out of causal reach
/// of slice `jump`: all mass goes to the pendant vertex F (graph) or far to
/// the right (line), and stays there.
inline lot::Evolution inject_superluminal(const lot::Spacetime& st, const lot::Evolution& E, std::size_t jump) {
  const auto& T = E.time_function();
  std::vector<lot::EvolutionSlice> slices;
  for (std::size_t j = 0; j < E.size(); ++j) {
    if (j <= jump) {
      slices.push_back(E.slices()[j]);
      continue;
    }
    const double tau = E.slices()[j].t;
    lot::SpatialPoint far = st.is_graph() ? lot::SpatialPoint::at_vertex(*st.vertex_index("F"))
                                          : lot::SpatialPoint::on_line(1000.0);
    slices.push_back({tau, lot::SliceMeasure::dirac(st, lot::level_event(st, *T, tau, far))});
  }
  return lot::Evolution::make(st, T, std::move(slices), E.mesh());
}

/// Random causal curve canonically parametrized by T over [a, b]: a chain
/// of level-to-level walker steps from level a to level b.
inline lot::CausalCurve random_compact_curve(Rng& rng, const lot::Spacetime& st, const lot::TimeFunctionRef& T,
                                             double a, double b, int steps) {
  const double speed = 1.0 / (1.0 + T->lipschitz(st));
  lot::SpatialPoint x = random_point(rng, st);
  std::vector<lot::Event> way{lot::level_event(st, *T, a, x)};
  for (int i = 1; i <= steps; ++i) {
    const double tau = a + (b - a) * i / steps;
    x = random_step(rng, st, x, speed * (b - a) / steps);
    way.push_back(lot::level_event(st, *T, tau, x));
  }
  return lot::canonicalize_compact(st, T, lot::RawPath::through(st, way), a, b);
}

/// Random full-line curve in C^R_T: waypoints at integer levels -n..n,
/// static beyond, with slope A and offset B.
inline lot::CausalCurve random_line_curve(Rng& rng, const lot::Spacetime& st, const lot::TimeFunctionRef& T, int n,
                                          double A = 1.0, double B = 0.0) {
  const double speed = 1.0 / (1.0 + T->lipschitz(st));
  lot::SpatialPoint x = random_point(rng, st);
  std::vector<lot::Event> way{lot::level_event(st, *T, -n, x)};
  for (int i = -n + 1; i <= n; ++i) {
    x = random_step(rng, st, x, speed);
    way.push_back(lot::level_event(st, *T, i, x));
  }
  lot::NoncompactPath np{lot::RawPath::through(st, way), true, true};
  return lot::canonicalize_noncompact(st, T, np, lot::Interval::line(), A, B);
}

}  // namespace cases
