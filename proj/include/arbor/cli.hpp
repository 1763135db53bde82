#pragma once

// Command-line front end. Every pipeline lives in the library; this file
// parses flags, resolves them into library objects and serializes reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "arbor/capacity.hpp"
#include "arbor/counterexample.hpp"
#include "arbor/dirichlet.hpp"
#include "arbor/io.hpp"
#include "arbor/parallel.hpp"
#include "arbor/sobolev_carleson.hpp"
#include "arbor/stochastic.hpp"
#include "arbor/tree_spec.hpp"
#include "arbor/version.hpp"
#include "arbor/wiener.hpp"

namespace arbor::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolver = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string command;
  std::string tree = "homogeneous:2";
  std::optional<int> depth;
  std::optional<int> spine_depth;
  std::string depths = "2..10";
  double p = 2.0;
  std::string set = "full";
  std::string ray = "leftmost";
  std::optional<int> horizon;
  std::uint64_t seed = 0;
  std::uint64_t n = 100000;
  std::optional<std::size_t> vertex;
  std::string phi = "constant:1";
  std::optional<double> value_at_o;
  std::string solver = "recursive";
  std::string measure = "equilibrium";
  std::size_t candidates = 0;
  std::string quantity = "capacity";
  double probe = 0.5;
  double tol = 1e-10;
  int max_sweeps = 200000;
  std::string output;
  std::string format = "json";
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end)
    throw ParameterError(std::string("cannot read ") + what + " from '" + s + "'");
  return v;
}

inline std::vector<std::size_t> parse_path(const std::string& s) {
  std::vector<std::size_t> path;
  if (s.empty()) return path;
  for (const std::string& part : split(s, ',')) path.push_back(parse_number<std::size_t>(part, "son index"));
  return path;
}

inline std::pair<std::string, std::string> head_tail(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return {s, ""};
  return {s.substr(0, colon), s.substr(colon + 1)};
}

}  // namespace detail

/// homogeneous:q, spherical:d1,d2,..., path:L, counterexample, or a JSON file.
inline TreeSpec resolve_tree(const RunConfig& cfg) {
  const auto [kind, args] = detail::head_tail(cfg.tree);
  TreeSpec spec;
  if (kind == "homogeneous") {
    spec = TreeSpec::homogeneous(detail::parse_number<int>(args, "degree"), cfg.depth.value_or(8));
  } else if (kind == "spherical") {
    std::vector<int> degrees;
    for (const std::string& d : detail::split(args, ',')) degrees.push_back(detail::parse_number<int>(d, "degree"));
    spec = TreeSpec::spherical(std::move(degrees), cfg.depth.value_or(8));
  } else if (kind == "path") {
    spec = TreeSpec::explicit_tree(NestedShape::path(detail::parse_number<int>(args, "path length")));
  } else if (kind == "counterexample" && args.empty()) {
    spec = TreeSpec::counterexample(cfg.spine_depth.value_or(6), cfg.depth.value_or(1));
  } else if (!args.empty() || kind == "counterexample") {
    throw ParameterError("unknown tree '" + cfg.tree + "'");
  } else {
    json j;
    try {
      j = json::parse(io::read_file(cfg.tree));
    } catch (const json::exception& e) {
      throw ParameterError("tree file '" + cfg.tree + "' is not valid JSON: " + e.what());
    }
    spec = io::tree_spec_from_json(j);
    if (spec.kind == TreeSpec::Kind::counterexample) {
      if (cfg.spine_depth) spec.spine_depth = *cfg.spine_depth;
      if (cfg.depth) spec.depth = *cfg.depth;
    } else if (cfg.depth && spec.kind != TreeSpec::Kind::explicit_shape) {
      spec.depth = *cfg.depth;
    }
  }
  spec.validate();
  return spec;
}

/// "full", or tents as son paths: "0;1,1" is T_{ω0} ∪ T_{ω11}.
inline SetRule resolve_set(const std::string& s) {
  if (s == "full") return SetRule::whole();
  std::vector<std::vector<std::size_t>> tents;
  for (const std::string& part : detail::split(s, ';')) tents.push_back(detail::parse_path(part));
  return SetRule::of_tents(std::move(tents));
}

inline GeodesicRay resolve_ray(const std::string& s) {
  if (s == "leftmost") return GeodesicRay::leftmost();
  if (s == "rightmost") return GeodesicRay::rightmost();
  const auto [kind, args] = detail::head_tail(s);
  if (kind == "path") return GeodesicRay::along(detail::parse_path(args));
  throw ParameterError("unknown ray '" + s + "'");
}

inline BoundaryRule resolve_phi(const std::string& s, std::optional<double> value_at_o) {
  const auto [kind, args] = detail::head_tail(s);
  BoundaryRule rule = [&] {
    if (kind == "constant") return BoundaryRule::constant(detail::parse_number<double>(args, "constant"));
    if (kind == "tent") return BoundaryRule::tent_indicator(detail::parse_path(args));
    if (kind == "binary") return BoundaryRule::binary_expansion();
    throw ParameterError("unknown boundary data '" + s + "'");
  }();
  if (!value_at_o) return rule;
  return BoundaryRule([rule](const Tree& t, EdgeId leaf) { return rule.at(t, leaf); }, *value_at_o, rule.name());
}

/// "2..12", "2..12:2" or "2,4,8"; strictly increasing.
inline std::vector<int> resolve_depths(const std::string& s) {
  std::vector<int> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto [hi_s, step_s] = detail::head_tail(s.substr(dots + 2));
    const int lo = detail::parse_number<int>(s.substr(0, dots), "depth");
    const int hi = detail::parse_number<int>(hi_s, "depth");
    const int step = step_s.empty() ? 1 : detail::parse_number<int>(step_s, "step");
    if (step < 1) throw ParameterError("depth step must be >= 1");
    for (int d = lo; d <= hi; d += step) out.push_back(d);
  } else {
    for (const std::string& d : detail::split(s, ',')) out.push_back(detail::parse_number<int>(d, "depth"));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) throw ParameterError("depths must be strictly increasing");
  return out;
}

/// Reads a leaf-indexed charge from a JSON array file.
inline std::vector<double> charge_from_file(const std::string& path, const Tree& t) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParameterError("measure file '" + path + "' is not valid JSON: " + e.what());
  }
  const Charge mu = io::charge_from_json(j);
  if (mu.size() != t.leaf_count()) throw ParameterError("measure file does not cover every leaf");
  return {mu.masses().begin(), mu.masses().end()};
}

/// What a command produced. `result` may be partial when a solver fails.
struct Output {
  json result = json::object();
  std::optional<io::CsvTable> table;
};

namespace detail {

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json potential_range(const Tree& tree, const BoundarySet& set, const EdgeFn& f) {
  const VertexFn g = potential(tree, f);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (EdgeId leaf : set.members()) {
    lo = std::min(lo, g[tree.end_vertex(leaf)]);
    hi = std::max(hi, g[tree.end_vertex(leaf)]);
  }
  return set.empty() ? json(nullptr) : json{{"min", lo}, {"max", hi}};
}

inline void cmd_gen(const RunConfig&, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  std::vector<std::int64_t> parents;
  io::CsvTable table({"edge", "parent", "level", "leaf"});
  for (EdgeId a = 0; a < t.edge_count(); ++a) {
    const auto up = t.parent(a);
    const std::int64_t pa = up ? static_cast<std::int64_t>(*up) : -1;
    parents.push_back(pa);
    table.add_row({static_cast<double>(a), static_cast<double>(pa), static_cast<double>(t.level(a)),
                   t.is_leaf(a) ? 1.0 : 0.0});
  }
  o.result = {{"edges", t.edge_count()}, {"leaves", t.leaf_count()}, {"depth", t.depth()}, {"parents", parents}};
  o.table = std::move(table);
}

inline EquilibriumResult solve(const RunConfig& cfg, const Tree& t, const BoundarySet& set, const Exponent& p) {
  if (cfg.solver == "optimize") return capacity_optimize(t, set, p, cfg.tol);
  return capacity_recursive(t, set, p);
}

inline void cmd_capacity(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  const Exponent p(cfg.p);
  const BoundarySet set = resolve_set(cfg.set).resolve(t);
  o.result = {{"edges", t.edge_count()}, {"leaves", t.leaf_count()}, {"set_size", set.size()}};
  std::vector<std::string> header{"capacity", "edges", "leaves"};
  std::vector<double> row;
  if (cfg.solver == "both") {
    const double rec = capacity_recursive(t, set, p).capacity;
    o.result["recursive"] = rec;
    const double opt = capacity_optimize(t, set, p, cfg.tol).capacity;
    o.result["optimize"] = opt;
    o.result["capacity"] = rec;
    o.result["difference"] = std::abs(rec - opt);
    header = {"capacity", "optimize", "edges", "leaves"};
    row = {rec, opt};
  } else {
    const double c = solve(cfg, t, set, p).capacity;
    o.result["capacity"] = c;
    row = {c};
  }
  o.result["solver"] = cfg.solver;
  const bool symmetric = spec.kind == TreeSpec::Kind::homogeneous || spec.kind == TreeSpec::Kind::spherical;
  if (symmetric && resolve_set(cfg.set).full) o.result["series_formula"] = spherical_capacity(spec.degrees, spec.depth + 1, p);
  row.push_back(static_cast<double>(t.edge_count()));
  row.push_back(static_cast<double>(t.leaf_count()));
  o.table = io::CsvTable(header);
  o.table->add_row(row);
}

inline void cmd_equilibrium(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  const Exponent p(cfg.p);
  const BoundarySet set = resolve_set(cfg.set).resolve(t);
  const EquilibriumResult eq = solve(cfg, t, set, p);
  o.result = io::to_json(eq);
  o.result["potential_on_set"] = potential_range(t, set, eq.eq_fn);
  const EdgeFn m = copotential(t, eq.eq_measure);
  io::CsvTable table({"edge", "level", "eq_fn", "M"});
  for (EdgeId a = 0; a < t.edge_count(); ++a)
    table.add_row({static_cast<double>(a), static_cast<double>(t.level(a)), eq.eq_fn[a], m[a]});
  o.table = std::move(table);
}

inline void cmd_wiener(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  const Exponent p(cfg.p);
  const BoundarySet set = resolve_set(cfg.set).resolve(t);
  const GeodesicRay ray = resolve_ray(cfg.ray);
  const WienerReport r = wiener_series(t, set, ray, p, cfg.horizon);
  o.result = io::to_json(r);
  o.result["prefix"] = r.prefix;
  io::CsvTable table({"n", "level", "c", "t", "partial_sum", "product"});
  for (std::size_t n = 0; n < r.c_seq.size(); ++n)
    table.add_row({static_cast<double>(n), static_cast<double>(r.levels[n]), r.c_seq[n], r.t_seq[n],
                   r.partial_sums[n], r.product_seq[n]});
  o.table = std::move(table);
  o.result["capacity_form"] = capacity_form_terms(t, set, ray, p, cfg.horizon);
}

inline void cmd_walk(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  const VertexId x = cfg.vertex.value_or(t.end_vertex(t.root_edge()));
  if (x >= t.vertex_count()) throw ParameterError("start vertex outside the tree");
  const double exact = harmonic_measure_exact(t, x).boundary_total();
  o.result["vertex"] = x;
  o.result["exact_escape"] = exact;
  if (x == t.end_vertex(t.root_edge())) o.result["capacity"] = capacity_recursive(t, BoundarySet::full(t), Exponent(2.0)).capacity;
  const WalkEstimate est = simulate_escape(t, x, cfg.n, cfg.seed);
  o.result["estimate"] = est.value;
  o.result["std_error"] = est.std_error;
  o.result["n_walks"] = est.n_walks;
  o.result["seed"] = est.seed;
  o.result["within_3se"] = std::abs(est.value - exact) <= 3.0 * est.std_error;
  std::vector<std::string> header{"exact_escape", "estimate", "std_error", "n_walks", "seed"};
  std::vector<double> row{exact, est.value, est.std_error, static_cast<double>(est.n_walks),
                          static_cast<double>(est.seed)};
  if (o.result.contains("capacity")) {
    header.insert(header.begin(), "capacity");
    row.insert(row.begin(), o.result["capacity"].get<double>());
  }
  o.table = io::CsvTable(header);
  o.table->add_row(row);
}

inline void cmd_dirichlet(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  const Exponent p(cfg.p);
  const BoundaryRule rule = resolve_phi(cfg.phi, cfg.value_at_o);
  const BoundaryData phi = rule.realize(t);
  o.result["phi"] = rule.name();
  o.result["value_at_o"] = phi.value_at_o;
  o.result["solver"] = p.p() == 2.0 ? "poisson" : "gauss-seidel";
  const VertexFn u = p.p() == 2.0 ? poisson(t, phi)
                                  : p_harmonic_extension(t, phi, p, ExtensionOptions{cfg.tol, cfg.max_sweeps});
  o.result["residual"] = p_laplacian(t, u, p).max_interior_abs();
  o.result["values"] = io::to_json(u);
  io::CsvTable table({"vertex", "value"});
  for (VertexId x = 0; x < t.vertex_count(); ++x) table.add_row({static_cast<double>(x), u[x]});
  o.table = std::move(table);
}

inline Charge carleson_measure(const RunConfig& cfg, const Tree& t, const BoundarySet& set, const Exponent& p) {
  if (cfg.measure == "equilibrium") return capacity_recursive(t, set, p).eq_measure;
  std::vector<double> m(t.leaf_count(), 0.0);
  if (cfg.measure == "uniform") {
    for (EdgeId leaf : set.members()) m[t.leaf_index(leaf)] = 1.0 / static_cast<double>(set.size());
  } else if (cfg.measure == "random") {
    arbor::detail::WalkRng rng(cfg.seed, 0);
    for (EdgeId leaf : set.members()) m[t.leaf_index(leaf)] = rng.uniform();
  } else {
    m = charge_from_file(cfg.measure, t);
  }
  return Charge(std::move(m));
}

inline void cmd_carleson(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const Tree t = build(spec);
  const Exponent p(cfg.p);
  const BoundarySet set = resolve_set(cfg.set).resolve(t);
  const double cap = capacity_recursive(t, set, p).capacity;
  o.result["capacity"] = cap;
  const Charge mu = carleson_measure(cfg, t, set, p);
  const CarlesonReport r = carleson_norm(t, mu, p);
  o.result["measure"] = cfg.measure;
  o.result["cm_norm"] = number_or_null(r.cm_norm);
  o.result["infinite"] = r.infinite;
  o.result["attaining_edge"] = r.attaining_edge == kNoEdge ? json(nullptr) : json(r.attaining_edge);
  o.result["capacity_lower_bound"] = r.capacity_lower_bound;
  o.result["bound_holds"] = r.capacity_lower_bound <= cap * (1.0 + 1e-9);
  io::CsvTable table({"capacity", "cm_norm", "capacity_lower_bound"});
  table.add_row({cap, r.cm_norm, r.capacity_lower_bound});
  if (cfg.candidates > 0) {
    std::vector<Charge> cands;
    for (std::size_t k = 0; k < cfg.candidates; ++k) {
      arbor::detail::WalkRng rng(cfg.seed, k + 1);
      std::vector<double> m(t.leaf_count(), 0.0);
      for (EdgeId leaf : set.members()) m[t.leaf_index(leaf)] = rng.uniform();
      cands.emplace_back(std::move(m));
    }
    const CarlesonBound b = capacity_via_carleson(t, set, p, cands);
    o.result["candidates"] = {{"count", cfg.candidates}, {"best", b.best}, {"worst_sandwich_gap", b.worst_sandwich_gap}};
  }
  o.table = std::move(table);
}

inline void cmd_paper_example(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const int s = spec.spine_depth, g = spec.depth;
  const Exponent p(cfg.p);
  json checks = json::object();
  json rows = json::array();
  io::CsvTable table({"spine_depth", "edges", "forward_defect", "off_spine_nonzero", "partial_sum"});
  double previous = -1.0;
  bool increasing = true, additive = true, vanishing = true;
  for (int k = 2; k <= s; ++k) {
    const Counterexample ce = counterexample(k, g);
    const bool exact = exact_forward_defect(ce.tree, ce.copotential) == Dyadic() &&
                       exact_copotential(ce.tree, ce.leaf_masses) == ce.copotential;
    const auto im = exact_ray_potentials(ce);
    std::size_t nonzero = 0;
    for (EdgeId leaf : ce.tree.leaves())
      if (leaf != ce.spine.back() && im[ce.tree.leaf_index(leaf)] != Dyadic()) ++nonzero;
    const WienerReport w = wiener_series(ce.tree, BoundarySet::full(ce.tree), GeodesicRay::leftmost(), p);
    const double sum = w.partial_sums.back();
    additive = additive && exact;
    vanishing = vanishing && nonzero == 0;
    increasing = increasing && sum > previous;
    previous = sum;
    rows.push_back({{"spine_depth", k}, {"edges", ce.tree.edge_count()}, {"forward_defect_zero", exact},
                    {"off_spine_nonzero", nonzero}, {"partial_sum", sum}});
    table.add_row({static_cast<double>(k), static_cast<double>(ce.tree.edge_count()), exact ? 0.0 : 1.0,
                   static_cast<double>(nonzero), sum});
  }
  o.result["sweep"] = rows;
  o.table = std::move(table);

  const Counterexample ce = counterexample(s, g);
  std::vector<std::string> spine_m;
  for (EdgeId a : ce.spine) spine_m.push_back(ce.copotential[a].to_string());
  const auto im = exact_ray_potentials(ce);
  o.result["edges"] = ce.tree.edge_count();
  o.result["leaves"] = ce.tree.leaf_count();
  o.result["spine_M"] = spine_m;
  o.result["spine_potential"] = im[ce.tree.leaf_index(ce.spine.back())].to_string();
  o.result["charge_total"] = ce.charge.total();

  const Charge zero = gram_solve(ce.tree, std::vector<double>(ce.tree.leaf_count(), 0.0));
  double zero_max = 0.0;
  for (double m : zero.masses()) zero_max = std::max(zero_max, std::abs(m));
  const VertexFn pot = potential(ce.tree, copotential(ce.tree, ce.charge));
  std::vector<double> values;
  for (EdgeId leaf : ce.tree.leaves()) values.push_back(pot[ce.tree.end_vertex(leaf)]);
  const Charge back = gram_solve(ce.tree, values);
  double round_trip = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) round_trip = std::max(round_trip, std::abs(back[i] - ce.charge[i]));
  o.result["gram_round_trip_error"] = round_trip;

  checks["forward_additive"] = additive;
  checks["potential_vanishes_off_spine"] = vanishing;
  checks["spine_partial_sums_increase"] = increasing;
  checks["zero_data_gives_zero_charge"] = zero_max == 0.0;
  checks["gram_round_trip"] = round_trip <= 1e-9;
  o.result["checks"] = checks;
  for (const auto& [name, ok] : checks.items())
    if (!ok.get<bool>()) throw NumericalError("counterexample check failed: " + name);
}

inline void cmd_sweep(const RunConfig& cfg, const TreeSpec& spec, Output& o) {
  const std::vector<int> depths = resolve_depths(cfg.depths);
  if (depths.size() < 2) throw ParameterError("a sweep needs at least two depths");
  const Exponent p(cfg.p);
  const SetRule rule = resolve_set(cfg.set);
  const GeodesicRay ray = resolve_ray(cfg.ray);
  std::vector<std::vector<double>> rows(depths.size());
  std::vector<std::string> header;
  // Column checked for monotonicity, and the direction it should move in.
  std::size_t watch = 1;
  int direction = -1;
  bool strict = false;
  bool checked = true;

  if (cfg.quantity == "capacity") {
    header = {"depth", "capacity", "edges"};
    parallel_for(depths.size(), [&](std::size_t i) {
      const Tree t = build(spec.with_depth(depths[i]));
      rows[i] = {static_cast<double>(depths[i]), capacity_recursive(t, rule.resolve(t), p).capacity,
                 static_cast<double>(t.edge_count())};
    });
  } else if (cfg.quantity == "deficit") {
    header = {"depth", "epsilon"};
    // At a fixed probe vertex ε grows with depth, and the probe moves down in whole levels, so ε only tends to 0.
    checked = false;
    const auto eps = deficit(spec, rule, ray, p, depths, DeficitOptions{cfg.probe});
    for (std::size_t i = 0; i < depths.size(); ++i) rows[i] = {static_cast<double>(depths[i]), eps[i]};
    o.result["probe_fraction"] = cfg.probe;
  } else if (cfg.quantity == "wiener") {
    header = {"depth", "partial_sum", "product", "epsilon"};
    direction = 1;
    strict = true;
    parallel_for(depths.size(), [&](std::size_t i) {
      const Tree t = build(spec.with_depth(depths[i]));
      const WienerReport w = wiener_series(t, rule.resolve(t), ray, p);
      const double sum = w.partial_sums.empty() ? 0.0 : w.partial_sums.back();
      const double prod = w.product_seq.empty() ? 1.0 : w.product_seq.back();
      rows[i] = {static_cast<double>(depths[i]), sum, prod, w.epsilon};
    });
    std::vector<double> eps;
    for (const auto& r : rows) eps.push_back(r[3]);
    o.result["verdict"] = to_string(classify(rows.back()[2], eps));
  } else if (cfg.quantity == "dirichlet") {
    header = {"depth", "value", "target", "gap"};
    watch = 3;
    const BoundaryRule phi = resolve_phi(cfg.phi, cfg.value_at_o);
    const auto conv = regular_convergence(spec, phi, ray, depths);
    for (std::size_t i = 0; i < conv.size(); ++i)
      rows[i] = {static_cast<double>(conv[i].depth), conv[i].value, conv[i].target, conv[i].gap};
    o.result["phi"] = phi.name();
  } else {
    throw ParameterError("unknown sweep quantity '" + cfg.quantity + "'");
  }

  std::vector<int> violations;
  for (std::size_t i = 1; checked && i < rows.size(); ++i) {
    const double step = (rows[i][watch] - rows[i - 1][watch]) * direction;
    const double slack = 1e-12 * std::max(1.0, std::abs(rows[i - 1][watch]));
    if (strict ? !(step > 0.0) : step < -slack) violations.push_back(depths[i]);
  }
  if (checked) header.push_back("violation");
  io::CsvTable table(header);
  json jrows = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool bad = std::find(violations.begin(), violations.end(), depths[i]) != violations.end();
    json r = json::object();
    for (std::size_t c = 0; c < rows[i].size(); ++c) r[header[c]] = rows[i][c];
    // Counts stay integers in JSON.
    for (const char* key : {"depth", "edges"})
      if (r.contains(key)) r[key] = static_cast<long long>(r[key].get<double>());
    if (checked) {
      r["violation"] = bad;
      rows[i].push_back(bad ? 1.0 : 0.0);
    }
    jrows.push_back(r);
    table.add_row(rows[i]);
  }
  o.result["quantity"] = cfg.quantity;
  o.result["rows"] = jrows;
  o.table = std::move(table);
  if (!checked) {
    o.result["expected"] = "tends to 0";
    return;
  }
  o.result["monotone_column"] = header[watch];
  o.result["expected"] = direction < 0 ? "non-increasing" : "increasing";
  o.result["monotone"] = violations.empty();
  o.result["violations"] = violations;
}

}  // namespace detail

namespace detail {

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> flags;
  std::function<void(const RunConfig&, const TreeSpec&, Output&)> body;
};

inline std::vector<Command> commands() {
  const std::vector<std::string> tree{"tree", "depth", "spine-depth"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> f = tree;
    f.insert(f.end(), extra.begin(), extra.end());
    return f;
  };
  return {
      {"gen", "build a tree and list its edges", with({}), cmd_gen},
      {"capacity", "p-capacity of a boundary set", with({"p", "set", "solver", "tol"}), cmd_capacity},
      {"equilibrium", "equilibrium function and measure", with({"p", "set", "solver", "tol"}), cmd_equilibrium},
      {"wiener", "Wiener series along a ray", with({"p", "set", "ray", "horizon"}), cmd_wiener},
      {"walk", "escape probability, exact and by simulation", with({"seed", "n", "vertex"}), cmd_walk},
      {"dirichlet", "harmonic or p-harmonic extension of boundary data",
       with({"p", "phi", "value-at-o", "tol", "max-sweeps"}), cmd_dirichlet},
      {"carleson", "Carleson norm and the capacity lower bound",
       with({"p", "set", "measure", "seed", "candidates"}), cmd_carleson},
      {"paper-example", "non-uniqueness example: additivity, vanishing potential, Wiener sums",
       {"spine-depth", "depth", "p"}, cmd_paper_example},
      {"sweep", "one quantity across truncation depths",
       with({"depths", "quantity", "p", "set", "ray", "probe", "phi", "value-at-o"}), cmd_sweep},
  };
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

/// The resolved value of every flag the command accepts.
inline json config_json(const RunConfig& cfg, const TreeSpec& spec, const std::vector<std::string>& flags) {
  const std::map<std::string, std::function<json()>> values{
      {"tree", [&] { return io::to_json(spec); }},
      {"depth", [&] { return spec.kind == TreeSpec::Kind::explicit_shape ? json(nullptr) : json(spec.depth); }},
      {"spine-depth",
       [&] { return spec.kind == TreeSpec::Kind::counterexample ? json(spec.spine_depth) : json(nullptr); }},
      {"depths", [&] { return resolve_depths(cfg.depths); }},
      {"p", [&] { return cfg.p; }},
      {"set", [&] { return io::to_json(resolve_set(cfg.set)); }},
      {"ray", [&] { return cfg.ray; }},
      {"horizon", [&] { return opt_json(cfg.horizon); }},
      {"seed", [&] { return cfg.seed; }},
      {"n", [&] { return cfg.n; }},
      {"vertex", [&] { return opt_json(cfg.vertex); }},
      {"phi", [&] { return cfg.phi; }},
      {"value-at-o", [&] { return opt_json(cfg.value_at_o); }},
      {"solver", [&] { return cfg.solver; }},
      {"measure", [&] { return cfg.measure; }},
      {"candidates", [&] { return cfg.candidates; }},
      {"quantity", [&] { return cfg.quantity; }},
      {"probe", [&] { return cfg.probe; }},
      {"tol", [&] { return cfg.tol; }},
      {"max-sweeps", [&] { return cfg.max_sweeps; }},
  };
  json j{{"command", cfg.command}, {"format", cfg.format}};
  for (const std::string& f : flags) j[f] = values.at(f)();
  return j;
}

inline void add_flag(CLI::App& sub, RunConfig& cfg, const std::string& name) {
  if (name == "tree") {
    sub.add_option("--tree", cfg.tree, "homogeneous:q, spherical:d1,d2,..., path:L, counterexample, or a JSON file")
        ->capture_default_str();
  } else if (name == "depth") {
    sub.add_option("--depth", cfg.depth, "truncation depth (generations below each branch for counterexample)");
  } else if (name == "spine-depth") {
    sub.add_option("--spine-depth", cfg.spine_depth, "spine length of the counterexample tree");
  } else if (name == "depths") {
    sub.add_option("--depths", cfg.depths, "depth list: 2..12, 2..12:2 or 2,4,8")->capture_default_str();
  } else if (name == "p") {
    sub.add_option("--p", cfg.p, "exponent in (1, inf)")->capture_default_str();
  } else if (name == "set") {
    sub.add_option("--set", cfg.set, "boundary set: full, or tents as son paths like 0;1,1")->capture_default_str();
  } else if (name == "ray") {
    sub.add_option("--ray", cfg.ray, "leftmost, rightmost or path:i,j,...")->capture_default_str();
  } else if (name == "horizon") {
    sub.add_option("--horizon", cfg.horizon, "last level of the ray prefix");
  } else if (name == "seed") {
    sub.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  } else if (name == "n") {
    sub.add_option("--n", cfg.n, "number of walks")->capture_default_str()->check(CLI::PositiveNumber);
  } else if (name == "vertex") {
    sub.add_option("--vertex", cfg.vertex, "start vertex (default e(omega))");
  } else if (name == "phi") {
    sub.add_option("--phi", cfg.phi, "boundary data: constant:c, tent:i,j,... or binary")->capture_default_str();
  } else if (name == "value-at-o") {
    sub.add_option("--value-at-o", cfg.value_at_o, "value of the data at the root vertex");
  } else if (name == "solver") {
    sub.add_option("--solver", cfg.solver, "recursive, optimize or both")
        ->capture_default_str()
        ->check(CLI::IsMember({"recursive", "optimize", "both"}));
  } else if (name == "measure") {
    sub.add_option("--measure", cfg.measure, "equilibrium, uniform, random, or a JSON array file")
        ->capture_default_str();
  } else if (name == "candidates") {
    sub.add_option("--candidates", cfg.candidates, "random candidate measures for the capacity bound")
        ->capture_default_str();
  } else if (name == "quantity") {
    sub.add_option("--quantity", cfg.quantity, "capacity, deficit, wiener or dirichlet")
        ->capture_default_str()
        ->check(CLI::IsMember({"capacity", "deficit", "wiener", "dirichlet"}));
  } else if (name == "probe") {
    sub.add_option("--probe", cfg.probe, "fraction along the ray where the deficit is read")->capture_default_str();
  } else if (name == "tol") {
    sub.add_option("--tol", cfg.tol, "solver tolerance")->capture_default_str();
  } else if (name == "max-sweeps") {
    sub.add_option("--max-sweeps", cfg.max_sweeps, "Gauss-Seidel sweep budget")->capture_default_str();
  }
}

inline std::string render(const RunConfig& cfg, const json& config, const Output& o, bool ok) {
  if (cfg.format == "csv" && ok && o.table) {
    std::string out = "# arbor " + std::string(kVersion) + "\n# config " + config.dump() + "\n";
    return out + o.table->str();
  }
  return json{{"tool", "arbor"}, {"version", kVersion}, {"config", config}, {"status", ok ? "ok" : "error"},
              {"result", o.result}}
             .dump(2) +
         "\n";
}

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output.empty()) {
    out << text;
    out.flush();
  } else {
    io::write_atomic(cfg.output, text);
  }
}

}  // namespace detail

/**
 * Parses argv and runs one subcommand. Exit status: 0 on success, 1 when a
 * solver fails (a partial JSON report is still written), 2 on usage errors.
 */
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app("Potential theory on trees: capacities, Wiener series, walks, Dirichlet problems.", "arbor");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  const auto cmds = detail::commands();
  std::map<CLI::App*, const detail::Command*> by_app;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    for (const auto& f : c.flags) detail::add_flag(*sub, cfg, f);
    sub->add_option("--output", cfg.output, "report path (stdout when omitted)");
    sub->add_option("--format", cfg.format, "json or csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
    by_app[sub] = &c;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const detail::Command* cmd = nullptr;
  for (const auto& [sub, c] : by_app)
    if (sub->parsed()) cmd = c;
  cfg.command = cmd->name;

  TreeSpec spec;
  json config;
  try {
    if (cmd->name == "paper-example") {
      spec = TreeSpec::counterexample(cfg.spine_depth.value_or(8), cfg.depth.value_or(2));
      spec.validate();
    } else {
      spec = resolve_tree(cfg);
    }
    config = detail::config_json(cfg, spec, cmd->flags);
  } catch (const Error& e) {
    err << "arbor: " << e.what() << "\n";
    return kExitUsage;
  }

  Output o;
  try {
    cmd->body(cfg, spec, o);
    detail::emit(cfg, detail::render(cfg, config, o, true), out);
    if (o.result.contains("monotone") && !o.result["monotone"].get<bool>())
      err << "arbor: monotonicity violated at depths " << o.result["violations"].dump() << "\n";
    return kExitOk;
  } catch (const SolverError& e) {
    o.result["error"] = e.what();
    o.result["best_upper"] = detail::number_or_null(e.best_upper());
    o.result["best_lower"] = detail::number_or_null(e.best_lower());
  } catch (const NumericalError& e) {
    o.result["error"] = e.what();
  } catch (const Error& e) {
    err << "arbor: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    o.result["error"] = e.what();
  }
  err << "arbor: " << o.result["error"].get<std::string>() << "\n";
  try {
    detail::emit(cfg, detail::render(cfg, config, o, false), out);
  } catch (const Error& e) {
    err << "arbor: " << e.what() << "\n";
  }
  return kExitSolver;
}

}  // namespace arbor::cli
