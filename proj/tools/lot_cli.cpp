#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lot/scenario.hpp"

namespace {

using lot::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitVerification = 2;

struct Options {
  std::string verb;
  std::string scenario;
  std::string report_dir;
  std::string csv;
  std::string mu, nu, evolution, curve, observer, to, interval;
  std::optional<unsigned> mesh_depth;
  std::optional<std::size_t> horizon;
  bool to_it = false;
  bool all_pairs = false;
};

struct Outcome {
  bool pass = true;
  json result = json::object();
  std::vector<std::pair<double, double>> csv_rows;  // (t, transport distance)
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Fills unset options from the scenario's per-verb defaults.
void apply_defaults(Options& o, const lot::Scenario& sc) {
  const json d = sc.command_defaults(o.verb);
  auto str = [&](std::string& target, const char* key) {
    if (target.empty() && d.contains(key)) target = d[key].get<std::string>();
  };
  str(o.mu, "mu");
  str(o.nu, "nu");
  str(o.evolution, "evolution");
  str(o.curve, "curve");
  str(o.observer, "observer");
  str(o.to, "to");
  str(o.interval, "interval");
  if (!o.mesh_depth && d.contains("mesh_depth")) o.mesh_depth = d["mesh_depth"].get<unsigned>();
  if (!o.horizon && d.contains("horizon")) o.horizon = d["horizon"].get<std::size_t>();
  if (!o.to_it && d.contains("to_IT")) o.to_it = d["to_IT"].get<bool>();
  if (!o.all_pairs && d.contains("all_pairs")) o.all_pairs = d["all_pairs"].get<bool>();
  auto only = [](std::string& target, const auto& m, const char* what) {
    if (!target.empty()) return;
    if (m.size() != 1)
      throw lot::InputError(std::string("specify --") + what + " (scenario defines " +
                            std::to_string(m.size()) + ")");
    target = m.begin()->first;
  };
  if (o.verb == "check-evolution" || o.verb == "synthesize" || o.verb == "bounds-report" ||
      o.verb == "invariance-check")
    only(o.evolution, sc.evolutions(), "evolution");
  if (o.verb == "reparametrize") only(o.curve, sc.curves(), "curve");
}

json tf_report(const lot::Spacetime& st, const lot::TimeFunction& T) {
  const auto r = lot::validate(st, T);
  json viol = json::array();
  for (const auto& v : r.violations) {
    json e{{"slope", v.slope}};
    if (st.is_graph())
      e["edge"] = {st.vertex_names()[st.edges()[v.edge].a], st.vertex_names()[st.edges()[v.edge].b]};
    viol.push_back(e);
  }
  return json{{"ok", r.ok}, {"lipschitz", r.lipschitz}, {"violations", viol}};
}

Outcome run_validate(const lot::Scenario& sc) {
  const auto& st = sc.spacetime();
  Outcome out;
  json sp{{"backend", std::string(lot::backend_name(st.backend()))}, {"alpha", st.alpha()}, {"u", st.u()}};
  if (st.is_graph()) {
    sp["vertices"] = st.vertex_names().size();
    sp["edges"] = st.edges().size();
  }
  out.result["spacetime"] = sp;
  json tfs = json::object();
  for (const auto& [name, T] : sc.time_functions()) {
    tfs[name] = tf_report(st, *T);
    out.pass = out.pass && tfs[name]["ok"].get<bool>();
  }
  out.result["time_functions"] = tfs;
  json ms = json::object();
  for (const auto& [name, m] : sc.measures()) ms[name] = {{"atoms", m.size()}};
  out.result["measures"] = ms;
  json es = json::object();
  for (const auto& [name, E] : sc.evolutions())
    es[name] = {{"slices", E.size()}, {"time_function", E.time_function()->name()},
                {"t_first", E.front_time()}, {"t_last", E.back_time()}};
  out.result["evolutions"] = es;
  json cs = json::object();
  for (const auto& [name, spec] : sc.curves()) {
    const auto rep = lot::verify_causal(st, spec.curve);
    cs[name] = {{"causal", rep.ok}, {"c", spec.curve.c() ? json(*spec.curve.c()) : json(nullptr)},
                {"nodes", spec.curve.nodes().size()}};
    out.pass = out.pass && rep.ok;
  }
  out.result["curves"] = cs;
  return out;
}

Outcome run_check_coupling(const lot::Scenario& sc, const Options& o) {
  if (o.mu.empty() || o.nu.empty()) throw lot::InputError("check-coupling needs --mu and --nu");
  const auto& st = sc.spacetime();
  const auto& mu = sc.measure(o.mu);
  const auto& nu = sc.measure(o.nu);
  const auto d = lot::decide_causal_coupling(st, mu, nu);
  Outcome out;
  out.pass = d.feasible();
  out.result["mu"] = o.mu;
  out.result["nu"] = o.nu;
  out.result["feasible"] = d.feasible();
  out.result["exact_arithmetic"] = d.exact;
  out.result["flow_value"] = d.flow_value;
  if (d.feasible()) {
    out.result["witness"] = lot::io::coupling_json(st, *d.witness);
  } else {
    json subset = json::array();
    for (std::size_t i : d.violating_subset) subset.push_back(lot::io::event_json(st, mu.atoms()[i].value));
    out.result["violating_subset"] = subset;
    out.result["subset_mass"] = d.subset_mass;
    out.result["reachable_mass"] = d.reachable_mass;
  }
  if (mu.size() <= lot::kUpsetEnumerationLimit && nu.size() <= 64)
    out.result["upset_characterization"] = lot::upset_characterization(st, mu, nu);
  return out;
}

Outcome run_check_evolution(const lot::Scenario& sc, const Options& o) {
  const auto& st = sc.spacetime();
  const auto& E = sc.evolution(o.evolution);
  const auto mode = o.all_pairs ? lot::EvolutionCheckMode::all_pairs : lot::EvolutionCheckMode::consecutive;
  const auto r = lot::is_causal_evolution(st, E, mode);
  Outcome out;
  out.pass = r.causal;
  out.result["evolution"] = o.evolution;
  out.result["mode"] = o.all_pairs ? "all_pairs" : "consecutive";
  out.result["causal"] = r.causal;
  out.result["checked_pairs"] = r.checked_pairs;
  if (r.failure) out.result["failing_step"] = lot::io::failure_json(st, *r.failure);
  return out;
}

struct Synthesized {
  lot::CurveMeasure sigma;
  lot::Evolution mesh;
  lot::Interval domain;
  double lo = 0.0, hi = 0.0;  // node window
  std::size_t horizon = 0;
};

Synthesized synthesize_from(const lot::Scenario& sc, const Options& o) {
  const auto& st = sc.spacetime();
  const auto& E = sc.evolution(o.evolution);
  const lot::Interval I = o.interval.empty() ? lot::Interval::compact(E.front_time(), E.back_time())
                                             : lot::parse_interval(o.interval);
  using K = lot::Interval::Kind;
  if (I.kind == K::compact) {
    lot::Evolution mesh = E;
    if (o.mesh_depth) mesh = E.select(st, lot::dyadic_times(I.lo, I.hi, *o.mesh_depth), lot::MeshKind::dyadic);
    else if (E.front_time() != I.lo || E.back_time() != I.hi || E.mesh() != lot::MeshKind::dyadic) {
      std::vector<double> times;
      for (const auto& s : E.slices())
        if (s.t >= I.lo && s.t <= I.hi) times.push_back(s.t);
      mesh = E.select(st, times, lot::MeshKind::dyadic);
    }
    lot::SynthesisPlan plan{I, mesh, 1, "geodesic-lex"};
    return {lot::synthesize(st, plan), mesh, I, I.lo, I.hi, 0};
  }
  const double anchor = I.kind == K::future_ray ? I.lo : I.kind == K::past_ray ? I.hi : 0.0;
  std::size_t N = o.horizon.value_or(0);
  if (N == 0) {
    const double ahead = E.back_time() - anchor;
    const double behind = anchor - E.front_time();
    const double span = I.kind == K::future_ray ? ahead : I.kind == K::past_ray ? behind : std::min(ahead, behind);
    if (span < 1.0) throw lot::InputError("evolution has no integer slab around the anchor");
    N = static_cast<std::size_t>(std::floor(span));
  }
  const double n = static_cast<double>(N);
  const double lo = I.kind == K::future_ray ? anchor : anchor - n;
  const double hi = I.kind == K::past_ray ? anchor : anchor + n;
  std::vector<double> times = lot::integer_times(static_cast<long>(lo), static_cast<long>(hi));
  lot::Evolution mesh = E.select(st, times, lot::MeshKind::integer);
  lot::SynthesisPlan plan{I, mesh, N, "geodesic-lex"};
  return {lot::synthesize(st, plan), mesh, I, lo, hi, N};
}

json synthesis_checks(const lot::Spacetime& st, const Synthesized& s, Outcome& out) {
  const auto mc = lot::check_mesh_marginals(st, s.sigma, s.mesh);
  bool causal = true;
  for (const auto& a : s.sigma.atoms()) causal = causal && lot::verify_causal(st, a.value).ok;
  const bool connected = lot::atoms_connected(st, s.sigma);
  for (std::size_t i = 0; i < mc.times.size(); ++i) out.csv_rows.emplace_back(mc.times[i], mc.transport[i]);
  out.pass = out.pass && mc.exact() && causal && connected;
  return json{{"mesh_times", mc.times.size()},
              {"max_mesh_transport", mc.max_transport},
              {"max_mesh_weight_deviation", mc.max_weight_deviation},
              {"marginals_exact", mc.exact()},
              {"atoms_causal", causal},
              {"atoms_connected", connected}};
}

Outcome run_synthesize(const lot::Scenario& sc, const Options& o) {
  const auto& st = sc.spacetime();
  Outcome out;
  const Synthesized s = synthesize_from(sc, o);
  out.result["evolution"] = o.evolution;
  out.result["domain"] = lot::io::interval_json(s.domain);
  if (s.horizon) out.result["horizon"] = s.horizon;
  out.result["atoms"] = s.sigma.size();
  out.result["verification"] = synthesis_checks(st, s, out);
  if (o.to_it) {
    try {
      lot::normalize_to_IT(st, s.mesh.time_function(), s.sigma);
      out.result["in_IT"] = true;
    } catch (const lot::NotInIT& e) {
      out.result["in_IT"] = false;
      out.result["in_IT_error"] = e.what();
      out.pass = false;
    }
  }
  if (!o.observer.empty()) {
    if (s.domain.kind != lot::Interval::Kind::line)
      throw lot::InputError("--observer needs --interval R");
    const auto& T2 = sc.time_function(o.observer);
    const auto r = lot::observer_invariance_check(st, T2, s.mesh, s.horizon);
    out.result["observer"] = {{"time_function", o.observer},
                              {"slices_tagged", r.slices_tagged},
                              {"causal", r.causal},
                              {"paths_equal", r.paths_equal}};
    out.pass = out.pass && r.ok();
  }
  out.result["curve_measure"] = lot::io::curve_measure_json(st, s.sigma);
  return out;
}

Outcome run_reparametrize(const lot::Scenario& sc, const Options& o) {
  if (o.to.empty()) throw lot::InputError("reparametrize needs --to <time function>");
  const auto& st = sc.spacetime();
  const auto& spec = sc.curve(o.curve);
  const auto& T1 = spec.T;
  const auto& T2 = sc.time_function(o.to);
  const lot::CausalCurve g2 = lot::reparametrize(st, spec.curve, T1, T2);
  const lot::CausalCurve back = lot::reparametrize(st, g2, T2, T1);
  double residual = 0.0, round_trip = 0.0;
  for (std::size_t i = 0; i < g2.nodes().size(); ++i) {
    const double s = g2.nodes()[i].param;
    residual = std::max(residual, std::abs((*T2)(st, g2.at(st, s)) - (*T1)(st, spec.curve.at(st, s))));
    round_trip = std::max(round_trip, std::abs(back.nodes()[i].param - spec.curve.nodes()[i].param));
  }
  const bool path_same = g2.path() == spec.curve.path();
  const double c_err = std::abs(*g2.c() - *spec.curve.c());
  Outcome out;
  out.pass = residual <= lot::kGeomTol && round_trip <= lot::kGeomTol && path_same && c_err <= lot::kGeomTol;
  out.result["curve"] = o.curve;
  out.result["from"] = T1->name();
  out.result["to"] = o.to;
  out.result["max_breakpoint_residual"] = residual;
  out.result["round_trip_error"] = round_trip;
  out.result["c_error"] = c_err;
  out.result["raw_path_preserved"] = path_same;
  out.result["input"] = lot::io::curve_json(st, spec.curve);
  out.result["output"] = lot::io::curve_json(st, g2);
  return out;
}

Outcome run_bounds_report(const lot::Scenario& sc, const Options& o) {
  const auto& st = sc.spacetime();
  Outcome out;
  const Synthesized s = synthesize_from(sc, o);
  const double K = lot::slab_bound_constant(st, s.lo, s.hi);
  double worst_ratio = 0.0;
  bool within = true;
  const auto& times = s.mesh.slices();
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      const double dt = times[j].t - times[i].t;
      const double w = lot::transport_distance_dw(st, lot::ev_marginal(st, s.sigma, times[i].t),
                                                  lot::ev_marginal(st, s.sigma, times[j].t));
      worst_ratio = std::max(worst_ratio, w / (dt * K));
      within = within && w <= dt * K + lot::kGeomTol;
    }
  }
  std::vector<lot::CausalCurve> curves;
  for (const auto& a : s.sigma.atoms()) curves.push_back(a.value);
  const double tol = st.is_graph() ? lot::kGeomTol : 0.0;
  const auto bl = lot::bilipschitz_report(st, s.mesh.time_function(), curves, s.lo, s.hi, nullptr, 9, tol);
  out.pass = within && bl.ok();
  out.result["evolution"] = o.evolution;
  out.result["domain"] = lot::io::interval_json(s.domain);
  out.result["slab_bound_constant"] = K;
  out.result["continuity"] = {{"within_bound", within}, {"max_ratio_to_bound", worst_ratio}};
  out.result["bilipschitz"] = {
      {"pairs", bl.pairs},
      {"c_min", bl.c_min},
      {"c_max", bl.c_max},
      {"dw_ratio", {{"min", bl.dw_ratio_min}, {"max", bl.dw_ratio_max}}},
      {"dw_envelope", {{"lower", bl.dw_envelope.lower}, {"upper", bl.dw_envelope.upper}}},
      {"dw_within", bl.dw_within},
      {"time_ratio", {{"min", bl.time_ratio_min}, {"max", bl.time_ratio_max}}},
      {"time_envelope", {{"lower", bl.time_envelope.lower}, {"upper", bl.time_envelope.upper}}},
      {"time_within", bl.time_within}};
  return out;
}

Outcome run_invariance_check(const lot::Scenario& sc, const Options& o) {
  if (o.observer.empty()) throw lot::InputError("invariance-check needs --observer <time function>");
  const auto& st = sc.spacetime();
  const auto& E = sc.evolution(o.evolution);
  std::size_t N = o.horizon.value_or(0);
  if (N == 0) {
    const double span = std::min(E.back_time(), -E.front_time());
    if (span < 1.0) throw lot::InputError("evolution does not cover [-1, 1]");
    N = static_cast<std::size_t>(std::floor(span));
  }
  const auto r = lot::observer_invariance_check(st, sc.time_function(o.observer), E, N);
  Outcome out;
  out.pass = r.ok();
  out.result["evolution"] = o.evolution;
  out.result["observer"] = o.observer;
  out.result["horizon"] = N;
  out.result["atoms"] = r.atoms;
  out.result["slices_tagged"] = r.slices_tagged;
  if (r.untagged_tau) out.result["untagged_tau"] = *r.untagged_tau;
  out.result["causal"] = r.causal;
  if (r.failure) out.result["failing_step"] = lot::io::failure_json(st, *r.failure);
  out.result["paths_equal"] = r.paths_equal;
  return out;
}

Outcome dispatch(const lot::Scenario& sc, const Options& o) {
  if (o.verb == "validate") return run_validate(sc);
  if (o.verb == "check-coupling") return run_check_coupling(sc, o);
  if (o.verb == "check-evolution") return run_check_evolution(sc, o);
  if (o.verb == "synthesize") return run_synthesize(sc, o);
  if (o.verb == "reparametrize") return run_reparametrize(sc, o);
  if (o.verb == "bounds-report") return run_bounds_report(sc, o);
  if (o.verb == "invariance-check") return run_invariance_check(sc, o);
  throw lot::InputError("unknown verb '" + o.verb + "'");
}

void emit(const Options& o, const std::string& scenario_name, const std::string& status,
          const json& result, const std::vector<std::pair<double, double>>& csv_rows) {
  json report;
  report["schema"] = "lot-report";
  report["schema_version"] = lot::kReportSchemaVersion;
  report["header"] = {{"generated_at", utc_now()}, {"tool", "lot"}};
  report["verb"] = o.verb;
  report["scenario"] = scenario_name;
  report["status"] = status;
  report["result"] = result;
  const std::string text = report.dump(2) + "\n";

  std::string dir = o.report_dir;
  if (dir.empty())
    if (const char* env = std::getenv("LOT_REPORT_DIR")) dir = env;
  if (dir.empty()) {
    std::cout << text;
  } else {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / (scenario_name + "." + o.verb + ".json");
    std::ofstream(path) << text;
    std::cout << status << " " << path.string() << "\n";
  }
  if (!o.csv.empty()) {
    std::ofstream csv(o.csv);
    csv << "t,transport_dw\n" << std::setprecision(17);
    for (const auto& [t, w] : csv_rows) csv << t << "," << w << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal transport toolkit: coupling checks, curve-measure synthesis, observer changes"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> verbs{"validate",      "check-coupling", "check-evolution", "synthesize",
                                       "reparametrize", "bounds-report",  "invariance-check"};
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v);
    sub->add_option("scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", o.report_dir, "report directory (default: $LOT_REPORT_DIR, else stdout)");
    sub->add_option("--csv", o.csv, "write marginal distances as CSV");
    if (v == "check-coupling") {
      sub->add_option("--mu", o.mu, "source measure");
      sub->add_option("--nu", o.nu, "target measure");
    }
    if (v == "check-evolution" || v == "synthesize" || v == "bounds-report" || v == "invariance-check")
      sub->add_option("--evolution", o.evolution, "evolution name");
    if (v == "check-evolution") sub->add_flag("--all-pairs", o.all_pairs, "check every ordered pair");
    if (v == "synthesize" || v == "bounds-report") {
      sub->add_option("--interval", o.interval, "[a, b], [a, inf), (-inf, b] or R");
      sub->add_option("--mesh-depth", o.mesh_depth, "dyadic depth n for compact intervals");
      sub->add_option("--horizon", o.horizon, "slab count N for unbounded intervals");
    }
    if (v == "synthesize") {
      sub->add_flag("--to-IT", o.to_it, "check that every atom satisfies T o gamma = id");
      sub->add_option("--observer", o.observer, "second time function for the observer change");
    }
    if (v == "invariance-check") {
      sub->add_option("--observer", o.observer, "second time function");
      sub->add_option("--horizon", o.horizon, "slab count N");
    }
    if (v == "reparametrize") {
      sub->add_option("--curve", o.curve, "curve name");
      sub->add_option("--to", o.to, "target time function");
    }
    sub->callback([&o, v] { o.verb = v; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  std::string scenario_name = std::filesystem::path(o.scenario).stem().string();
  try {
    const lot::Scenario sc = lot::Scenario::load(o.scenario);
    scenario_name = sc.name();
    apply_defaults(o, sc);
    Outcome out;
    try {
      out = dispatch(sc, o);
    } catch (const lot::NonCausalEvolution& e) {
      std::cerr << "verification failure: " << e.what() << "\n";
      out.pass = false;
      out.result = {{"error", e.what()}, {"failing_step", lot::io::failure_json(sc.spacetime(), e.failure())}};
    }
    emit(o, scenario_name, out.pass ? "pass" : "fail", out.result, out.csv_rows);
    return out.pass ? kExitOk : kExitVerification;
  } catch (const lot::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    emit(o, scenario_name, "error", json{{"error", e.what()}}, {});
    return kExitInput;
  } catch (const lot::PreconditionError& e) {
    std::cerr << "verification failure: " << e.what() << "\n";
    emit(o, scenario_name, "fail", json{{"error", e.what()}}, {});
    return kExitVerification;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    emit(o, scenario_name, "error", json{{"error", e.what()}}, {});
    return kExitInput;
  }
}
