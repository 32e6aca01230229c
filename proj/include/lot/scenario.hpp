#pragma once

// JSON scenarios and reports. A scenario declares one spacetime, named time
// functions, slice measures, evolutions and full-line curves, plus optional
// per-verb default parameters. Every cross-reference is resolved at load
// time; errors carry a JSON-pointer-like location.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lot/lot.hpp"

namespace lot {

using json = nlohmann::ordered_json;

inline constexpr const char* kScenarioSchemaVersion = "1.0";
inline constexpr const char* kReportSchemaVersion = "1.0";

class ScenarioError : public InputError {
 public:
  ScenarioError(const std::string& where, const std::string& what)
      : InputError(where + ": " + what), where_(where) {}
  [[nodiscard]] const std::string& where() const { return where_; }

 private:
  std::string where_;
};

namespace io {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ScenarioError(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(where, "missing field '" + key + "'");
  return *it;
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ScenarioError(where, "expected a number");
  return j.get<double>();
}

inline std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ScenarioError(where, "expected a string");
  return j.get<std::string>();
}

inline double number_or(const json& j, const std::string& key, double fallback,
                        const std::string& where) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, where + "/" + key);
}

/// Minkowski: a number. Graph: a vertex name, or {"edge": [a, b], "offset": s}
/// with s measured from a.
inline SpatialPoint parse_point(const Spacetime& st, const json& j, const std::string& where) {
  if (!st.is_graph()) return SpatialPoint::on_line(number(j, where));
  if (j.is_string()) {
    auto v = st.vertex_index(j.get<std::string>());
    if (!v) throw ScenarioError(where, "unknown vertex '" + j.get<std::string>() + "'");
    return SpatialPoint::at_vertex(*v);
  }
  const json& e = field(j, "edge", where);
  if (!e.is_array() || e.size() != 2) throw ScenarioError(where + "/edge", "expected [a, b]");
  const std::string a = text(e[0], where + "/edge/0");
  const std::string b = text(e[1], where + "/edge/1");
  auto ia = st.vertex_index(a);
  auto ib = st.vertex_index(b);
  if (!ia || !ib) throw ScenarioError(where + "/edge", "unknown vertex");
  auto id = st.edge_between(*ia, *ib);
  if (!id) throw ScenarioError(where + "/edge", "no edge between '" + a + "' and '" + b + "'");
  double s = number(field(j, "offset", where), where + "/offset");
  const auto& ge = st.edges()[*id];
  if (s < 0.0 || s > ge.length) throw ScenarioError(where + "/offset", "offset outside the edge");
  if (ge.a != *ia) s = ge.length - s;
  return st.normalize(SpatialPoint::on_edge(*id, s));
}

inline Event parse_event(const Spacetime& st, const json& j, const std::string& where) {
  return st.normalize(Event{number(field(j, "t", where), where + "/t"),
                            parse_point(st, field(j, "x", where), where + "/x")});
}

inline json point_json(const Spacetime& st, const SpatialPoint& x) {
  switch (x.kind) {
    case SpatialPoint::Kind::line: return x.coord;
    case SpatialPoint::Kind::vertex: return st.vertex_names()[x.id];
    case SpatialPoint::Kind::edge: {
      const auto& e = st.edges()[x.id];
      return json{{"edge", {st.vertex_names()[e.a], st.vertex_names()[e.b]}}, {"offset", x.coord}};
    }
  }
  return nullptr;
}

inline json event_json(const Spacetime& st, const Event& p) {
  return json{{"t", p.t}, {"x", point_json(st, p.x)}};
}

inline json interval_json(const Interval& I) {
  switch (I.kind) {
    case Interval::Kind::compact: return json{{"kind", "compact"}, {"lo", I.lo}, {"hi", I.hi}};
    case Interval::Kind::future_ray: return json{{"kind", "future_ray"}, {"lo", I.lo}};
    case Interval::Kind::past_ray: return json{{"kind", "past_ray"}, {"hi", I.hi}};
    case Interval::Kind::line: return json{{"kind", "line"}};
  }
  return nullptr;
}

inline json slice_json(const Spacetime& st, const SliceMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"event", event_json(st, a.value)}, {"w", a.weight}});
  return atoms;
}

inline json curve_json(const Spacetime& st, const CausalCurve& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    json e = event_json(st, n.event);
    nodes.push_back({{"s", n.param}, {"t", e["t"]}, {"x", e["x"]}});
  }
  json j{{"domain", interval_json(g.domain())}};
  j["c"] = g.c() ? json(*g.c()) : json(nullptr);
  j["time_function"] = g.time_function() ? json(g.time_function()->name()) : json(nullptr);
  if (!g.domain().bounded_below()) j["past_rate"] = g.past_rate();
  if (!g.domain().bounded_above()) j["future_rate"] = g.future_rate();
  j["nodes"] = std::move(nodes);
  return j;
}

inline json curve_measure_json(const Spacetime& st, const CurveMeasure& sigma) {
  json atoms = json::array();
  for (const auto& a : sigma.atoms()) {
    json c = curve_json(st, a.value);
    atoms.push_back({{"w", a.weight}, {"curve", std::move(c)}});
  }
  return json{{"domain", interval_json(sigma.domain())}, {"atoms", std::move(atoms)}};
}

inline json coupling_json(const Spacetime& st, const Coupling& w) {
  json atoms = json::array();
  for (const auto& a : w.atoms())
    atoms.push_back(
        {{"p", event_json(st, a.value.first)}, {"q", event_json(st, a.value.second)}, {"w", a.weight}});
  return atoms;
}

inline json failure_json(const Spacetime& st, const StepFailure& f) {
  json subset = json::array();
  for (const auto& p : f.subset) subset.push_back(event_json(st, p));
  return json{{"from_index", f.from},   {"to_index", f.to},
              {"t_from", f.t_from},     {"t_to", f.t_to},
              {"subset", subset},       {"subset_mass", f.subset_mass},
              {"reachable_mass", f.reachable_mass}};
}

}  // namespace io

/// "[a, b]", "[a, inf)", "(-inf, b]" or "R".
inline Interval parse_interval(const std::string& spec) {
  std::string s;
  for (char ch : spec)
    if (ch != ' ') s.push_back(ch);
  if (s == "R" || s == "(-inf,inf)") return Interval::line();
  auto fail = [&]() -> Interval { throw InputError("cannot parse interval '" + spec + "'"); };
  if (s.size() < 5) return fail();
  const auto comma = s.find(',');
  if (comma == std::string::npos) return fail();
  const std::string lo = s.substr(1, comma - 1);
  const std::string hi = s.substr(comma + 1, s.size() - comma - 2);
  auto num = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) fail();
      return d;
    } catch (const std::logic_error&) {
      fail();
    }
    return 0.0;
  };
  if (s.front() == '[' && s.back() == ']') return Interval::compact(num(lo), num(hi));
  if (s.front() == '[' && s.back() == ')' && (hi == "inf" || hi == "+inf"))
    return Interval::future_ray(num(lo));
  if (s.front() == '(' && s.back() == ']' && lo == "-inf") return Interval::past_ray(num(hi));
  return fail();
}

struct CurveSpec {
  NoncompactPath path;
  TimeFunctionRef T;
  double slope = 1.0;
  double offset = 0.0;
  CausalCurve curve;
};

class Scenario {
 public:
  static Scenario parse(const json& j) {
    Scenario sc;
    if (!j.is_object()) throw ScenarioError("", "scenario must be a JSON object");
    const std::string version = io::text(io::field(j, "schema_version", ""), "/schema_version");
    if (version != kScenarioSchemaVersion)
      throw ScenarioError("/schema_version", "unsupported version '" + version + "', expected '" +
                                                 kScenarioSchemaVersion + "'");
    sc.name_ = j.contains("name") ? io::text(j["name"], "/name") : std::string("scenario");
    sc.st_ = parse_spacetime(io::field(j, "spacetime", ""));
    const Spacetime& st = *sc.st_;

    sc.time_functions_["T0"] = share(TimeFunction::canonical(st, "T0"));
    if (j.contains("time_functions")) {
      for (const auto& [name, tj] : j["time_functions"].items()) {
        const std::string where = "/time_functions/" + name;
        if (name == "T0") throw ScenarioError(where, "'T0' is reserved for the canonical time");
        sc.time_functions_[name] = share(parse_time_function(st, tj, name, where));
      }
    }
    if (j.contains("measures")) {
      for (const auto& [name, mj] : j["measures"].items()) {
        const std::string where = "/measures/" + name;
        sc.measures_.emplace(name, sc.parse_slice(mj, where, nullptr, 0.0));
      }
    }
    if (j.contains("evolutions")) {
      for (const auto& [name, ej] : j["evolutions"].items())
        sc.evolutions_.emplace(name, sc.parse_evolution(ej, "/evolutions/" + name));
    }
    if (j.contains("curves")) {
      for (const auto& [name, cj] : j["curves"].items())
        sc.curves_.emplace(name, sc.parse_curve(cj, "/curves/" + name));
    }
    if (j.contains("commands")) {
      const json& c = j["commands"];
      if (!c.is_object()) throw ScenarioError("/commands", "expected an object keyed by verb");
      sc.commands_ = c;
    }
    return sc;
  }

  static Scenario load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario '" + path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError("scenario '" + path + "' is not valid JSON: " + e.what());
    }
    return parse(j);
  }

  [[nodiscard]] const Spacetime& spacetime() const { return *st_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::map<std::string, TimeFunctionRef>& time_functions() const {
    return time_functions_;
  }
  [[nodiscard]] const std::map<std::string, SliceMeasure>& measures() const { return measures_; }
  [[nodiscard]] const std::map<std::string, Evolution>& evolutions() const { return evolutions_; }
  [[nodiscard]] const std::map<std::string, CurveSpec>& curves() const { return curves_; }

  [[nodiscard]] const TimeFunctionRef& time_function(const std::string& n) const {
    return lookup(time_functions_, n, "time function");
  }
  [[nodiscard]] const SliceMeasure& measure(const std::string& n) const {
    return lookup(measures_, n, "measure");
  }
  [[nodiscard]] const Evolution& evolution(const std::string& n) const {
    return lookup(evolutions_, n, "evolution");
  }
  [[nodiscard]] const CurveSpec& curve(const std::string& n) const { return lookup(curves_, n, "curve"); }

  /// Default parameters for a verb, or an empty object.
  [[nodiscard]] json command_defaults(const std::string& verb) const {
    auto it = commands_.find(verb);
    return it == commands_.end() ? json::object() : *it;
  }

 private:
  template <typename M>
  static const typename M::mapped_type& lookup(const M& m, const std::string& n, const char* what) {
    auto it = m.find(n);
    if (it == m.end()) throw InputError(std::string("unknown ") + what + " '" + n + "'");
    return it->second;
  }

  static Spacetime parse_spacetime(const json& j) {
    const std::string where = "/spacetime";
    const std::string backend = io::text(io::field(j, "backend", where), where + "/backend");
    const double alpha = io::number_or(j, "alpha", 1.0, where);
    const double u = io::number_or(j, "u", 1.0, where);
    const double tol = io::number_or(j, "causal_tolerance", 0.0, where);
    try {
      if (backend == "minkowski") return Spacetime::minkowski(alpha, u, tol);
      if (backend == "graph") {
        std::vector<std::string> names;
        const json& vs = io::field(j, "vertices", where);
        if (!vs.is_array()) throw ScenarioError(where + "/vertices", "expected an array");
        for (std::size_t i = 0; i < vs.size(); ++i)
          names.push_back(io::text(vs[i], where + "/vertices/" + std::to_string(i)));
        std::vector<std::tuple<std::string, std::string, double>> edges;
        const json& es = io::field(j, "edges", where);
        if (!es.is_array()) throw ScenarioError(where + "/edges", "expected an array");
        for (std::size_t i = 0; i < es.size(); ++i) {
          const std::string w = where + "/edges/" + std::to_string(i);
          if (!es[i].is_array() || es[i].size() != 3)
            throw ScenarioError(w, "expected [from, to, length]");
          edges.emplace_back(io::text(es[i][0], w + "/0"), io::text(es[i][1], w + "/1"),
                             io::number(es[i][2], w + "/2"));
        }
        return Spacetime::graph(std::move(names), edges, alpha, u, tol);
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const InputError& e) {
      throw ScenarioError(where, e.what());
    }
    throw ScenarioError(where + "/backend", "unknown backend '" + backend + "'");
  }

  static TimeFunction parse_time_function(const Spacetime& st, const json& j, const std::string& name,
                                          const std::string& where) {
    try {
      if (j.contains("slope")) {
        if (st.is_graph()) throw ScenarioError(where, "slope time functions need the Minkowski backend");
        return TimeFunction::slope(io::number(j["slope"], where + "/slope"), name);
      }
      if (j.contains("offsets")) {
        if (!st.is_graph()) throw ScenarioError(where, "vertex offsets need the graph backend");
        std::map<std::string, double> by_vertex;
        for (const auto& [v, val] : j["offsets"].items())
          by_vertex[v] = io::number(val, where + "/offsets/" + v);
        return TimeFunction::offsets(st, by_vertex, name);
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const InputError& e) {
      throw ScenarioError(where, e.what());
    }
    throw ScenarioError(where, "expected 'slope' or 'offsets'");
  }

  /// Atoms are {"event": {t, x}, "w"} or, inside a tagged slice, {"x", "w"}
  /// placed on the level set.
  SliceMeasure parse_slice(const json& j, const std::string& where, const TimeFunction* T,
                           double tau) const {
    const json& arr = j.is_array() ? j : io::field(j, "atoms", where);
    const std::string base = j.is_array() ? where : where + "/atoms";
    if (!arr.is_array()) throw ScenarioError(base, "expected an array of atoms");
    std::vector<Atom<Event>> atoms;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = base + "/" + std::to_string(i);
      const json& a = arr[i];
      Event e;
      if (a.contains("event")) {
        e = io::parse_event(*st_, a["event"], w + "/event");
      } else if (T) {
        e = level_event(*st_, *T, tau, io::parse_point(*st_, io::field(a, "x", w), w + "/x"));
      } else {
        throw ScenarioError(w, "missing field 'event'");
      }
      atoms.push_back({e, io::number(io::field(a, "w", w), w + "/w")});
    }
    try {
      return SliceMeasure::make(*st_, std::move(atoms));
    } catch (const InputError& e) {
      throw ScenarioError(where, e.what());
    }
  }

  Evolution parse_evolution(const json& j, const std::string& where) const {
    const std::string tname =
        j.contains("time_function") ? io::text(j["time_function"], where + "/time_function") : "T0";
    auto tf = time_functions_.find(tname);
    if (tf == time_functions_.end())
      throw ScenarioError(where + "/time_function", "unknown time function '" + tname + "'");
    const std::string mesh = j.contains("mesh") ? io::text(j["mesh"], where + "/mesh") : "explicit";
    MeshKind kind = MeshKind::explicit_list;
    if (mesh == "dyadic") kind = MeshKind::dyadic;
    else if (mesh == "integer") kind = MeshKind::integer;
    else if (mesh != "explicit") throw ScenarioError(where + "/mesh", "unknown mesh kind '" + mesh + "'");
    const json& sl = io::field(j, "slices", where);
    if (!sl.is_array()) throw ScenarioError(where + "/slices", "expected an array");
    std::vector<EvolutionSlice> slices;
    for (std::size_t i = 0; i < sl.size(); ++i) {
      const std::string w = where + "/slices/" + std::to_string(i);
      const double t = io::number(io::field(sl[i], "t", w), w + "/t");
      if (sl[i].contains("measure")) {
        const std::string m = io::text(sl[i]["measure"], w + "/measure");
        auto it = measures_.find(m);
        if (it == measures_.end()) throw ScenarioError(w + "/measure", "unknown measure '" + m + "'");
        slices.push_back({t, it->second});
      } else {
        slices.push_back({t, parse_slice(io::field(sl[i], "atoms", w), w + "/atoms", tf->second.get(), t)});
      }
    }
    try {
      return Evolution::make(*st_, tf->second, std::move(slices), kind);
    } catch (const InputError& e) {
      throw ScenarioError(where, e.what());
    }
  }

  /// {"waypoints": [...], "time_function", "past": "static" | "stop",
  ///  "future": ..., "slope", "offset"}; the default is a full-line curve.
  CurveSpec parse_curve(const json& j, const std::string& where) const {
    const std::string tname =
        j.contains("time_function") ? io::text(j["time_function"], where + "/time_function") : "T0";
    auto tf = time_functions_.find(tname);
    if (tf == time_functions_.end())
      throw ScenarioError(where + "/time_function", "unknown time function '" + tname + "'");
    const json& wp = io::field(j, "waypoints", where);
    if (!wp.is_array() || wp.empty()) throw ScenarioError(where + "/waypoints", "expected a non-empty array");
    std::vector<Event> events;
    for (std::size_t i = 0; i < wp.size(); ++i)
      events.push_back(io::parse_event(*st_, wp[i], where + "/waypoints/" + std::to_string(i)));
    auto ends = [&](const char* key) {
      if (!j.contains(key)) return true;
      const std::string v = io::text(j[key], where + "/" + key);
      if (v == "static") return true;
      if (v == "stop") return false;
      throw ScenarioError(where + "/" + key, "expected 'static' or 'stop'");
    };
    try {
      NoncompactPath np{RawPath::through(*st_, events), ends("past"), ends("future")};
      const double slope = io::number_or(j, "slope", 1.0, where);
      const double offset = io::number_or(j, "offset", 0.0, where);
      Interval req = Interval::line();
      if (j.contains("domain")) req = parse_interval(io::text(j["domain"], where + "/domain"));
      CausalCurve g = canonicalize_noncompact(*st_, tf->second, np, req, slope, offset);
      return CurveSpec{std::move(np), tf->second, slope, offset, std::move(g)};
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw ScenarioError(where, e.what());
    }
  }

  std::optional<Spacetime> st_;
  std::string name_;
  std::map<std::string, TimeFunctionRef> time_functions_;
  std::map<std::string, SliceMeasure> measures_;
  std::map<std::string, Evolution> evolutions_;
  std::map<std::string, CurveSpec> curves_;
  json commands_ = json::object();
};

}  // namespace lot
