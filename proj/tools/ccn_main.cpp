// Command-line front end: validate / isomorphisms / colorings / quotient /
// simulate / analyze / experiment. Exit codes: 0 success, 1 negative domain
// verdict, 2 usage error, 3 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ccn/analyze.hpp"
#include "ccn/coloring.hpp"
#include "ccn/dsl.hpp"
#include "ccn/experiment.hpp"
#include "ccn/field.hpp"
#include "ccn/network.hpp"
#include "ccn/network_io.hpp"
#include "ccn/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ccn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string format = "table";
  std::uint64_t seed = 2026;
  bool seed_given = false;
  int jobs = 1;
  std::string plot_path;
  std::vector<std::string> params;
};

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (const std::string& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CLI::ValidationError("-P", "expected name=value, got '" + s + "'");
    char* end = nullptr;
    double v = std::strtod(s.c_str() + eq + 1, &end);
    if (end != s.c_str() + s.size())
      throw CLI::ValidationError("-P", "bad numeric value in '" + s + "'");
    out[s.substr(0, eq)] = v;
  }
  return out;
}

TypedNetwork load_network(const std::string& path) {
  ValidationReport rep = validate_network(read_network_file(path));
  if (!rep.valid()) {
    std::string msg = "network '" + path + "' is invalid:";
    for (const Violation& v : rep.violations)
      msg += "\n  [" + v.code + "] " + v.message;
    throw std::invalid_argument(msg);
  }
  return *std::move(rep.network);
}

Trajectory load_trajectory(const std::string& path, const TypedNetwork& net) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".bin")
    return read_trajectory_bin(path, net);
  return read_trajectory_csv(path, net);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
}

/// Gnuplot-ready CSV: time, then the sup distance of every same-type cell
/// pair, the raw material of synchrony plots.
void write_pair_distances(const std::string& path, const TypedNetwork& net,
                          const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "t";
  for (CellIndex a = 0; a < net.n_cells(); ++a)
    for (CellIndex b = a + 1; b < net.n_cells(); ++b)
      if (net.cell(a).type == net.cell(b).type)
        out << "," << net.cell(a).id << "~" << net.cell(b).id;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
    out << buf;
    for (CellIndex a = 0; a < net.n_cells(); ++a)
      for (CellIndex b = a + 1; b < net.n_cells(); ++b) {
        if (net.cell(a).type != net.cell(b).type) continue;
        std::snprintf(buf, sizeof buf, "%.17g",
                      net.cell_distance(traj.states[i], a, b));
        out << "," << buf;
      }
    out << "\n";
  }
}

// ---------------------------------------------------------------- reports --

json coloring_json(const TypedNetwork& net, const Coloring& col) {
  json classes = json::array();
  for (const auto& cls : col.classes()) {
    json ids = json::array();
    for (CellIndex c : cls) ids.push_back(net.cell(c).id);
    classes.push_back(ids);
  }
  return classes;
}

json pattern_report_json(const TypedNetwork& net, const PatternReport& rep) {
  json pairs = json::array();
  for (const PairEvidence& ev : rep.pairs)
    pairs.push_back({{"a", net.cell(ev.a).id},
                     {"b", net.cell(ev.b).id},
                     {"same_color", ev.same_color},
                     {"max_deviation", ev.max_deviation},
                     {"min_separation", ev.min_separation},
                     {"ambiguous", ev.ambiguous}});
  return {{"t_begin", rep.t_begin},
          {"t_end", rep.t_end},
          {"tol", rep.tol},
          {"pattern", coloring_json(net, rep.pattern)},
          {"balanced", rep.balanced()},
          {"pairs", pairs}};
}

json window_report_json(const TypedNetwork& net, const WindowReport& rep) {
  json windows = json::array();
  for (const PatternWindow& w : rep.windows)
    windows.push_back({{"t_begin", w.t_begin},
                       {"t_end", w.t_end},
                       {"pattern", coloring_json(net, w.pattern)}});
  return {{"resolution", rep.resolution},
          {"tol", rep.tol},
          {"windows", windows},
          {"notes", rep.notes}};
}

json phase_report_json(const TypedNetwork& net, const DoubledNetwork& doubled,
                       const PhaseShiftReport& rep) {
  json shift = json::array();
  for (const auto& [a, b] : rep.shift_pairs)
    shift.push_back({net.cell(a).id, net.cell(b).id});
  json nong = json::array();
  for (const auto& [a, b] : rep.non_generic_pairs)
    nong.push_back({net.cell(a).id, net.cell(b).id});
  json periodic = json::array();
  for (CellIndex c : rep.theta_periodic) periodic.push_back(net.cell(c).id);
  return {{"theta", rep.theta},
          {"tol", rep.tol},
          {"t_begin", rep.t_begin},
          {"t_end", rep.t_end},
          {"doubled_pattern", coloring_json(doubled.net, rep.doubled_pattern)},
          {"shift_pairs", shift},
          {"theta_periodic", periodic},
          {"balanced", rep.balanced},
          {"non_generic_pairs", nong},
          {"notes", rep.notes}};
}

json stationary_report_json(const TypedNetwork& net,
                            const StationaryReport& rep) {
  json stationary = json::array();
  for (CellIndex c : rep.stationary) stationary.push_back(net.cell(c).id);
  json rates = json::object();
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    rates[net.cell(c).id] = rep.max_rate[static_cast<std::size_t>(c)];
  json viol = json::array();
  for (const auto& v : rep.violations)
    viol.push_back({{"cell", net.cell(v.cell).id},
                    {"moving_input", net.cell(v.moving_input).id}});
  return {{"t_begin", rep.t_begin},
          {"t_end", rep.t_end},
          {"tol_rate", rep.tol_rate},
          {"stationary", stationary},
          {"max_rate", rates},
          {"violations", viol},
          {"propagation_holds", rep.propagation_holds()},
          {"notes", rep.notes}};
}

json periodicity_report_json(const TypedNetwork& net,
                             const PeriodicityReport& rep) {
  json cells = json::array();
  for (const CellPeriod& cp : rep.cells) {
    const char* kind = cp.kind == CellPeriod::Kind::constant ? "constant"
                       : cp.kind == CellPeriod::Kind::periodic ? "periodic"
                                                               : "aperiodic";
    cells.push_back({{"cell", net.cell(cp.cell).id},
                     {"kind", kind},
                     {"period", cp.period},
                     {"peak_correlation", cp.peak_correlation}});
  }
  json viol = json::array();
  for (const auto& v : rep.violations)
    viol.push_back({{"cell", net.cell(v.cell).id},
                    {"input", v.input < 0 ? std::string("<whole state>")
                                          : net.cell(v.input).id},
                    {"reason", v.reason}});
  return {{"cells", cells},
          {"violations", viol},
          {"transitive", rep.transitive},
          {"whole_state_period", rep.whole_state_period},
          {"propagation_holds", rep.propagation_holds()},
          {"notes", rep.notes}};
}

void print_report(const Options& opt, const json& j) {
  if (opt.format == "json") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  // Table form: flattened key/value lines, arrays one per line.
  std::function<void(const json&, const std::string&)> walk =
      [&](const json& node, const std::string& prefix) {
        if (node.is_object()) {
          for (auto it = node.begin(); it != node.end(); ++it)
            walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
        } else if (node.is_array()) {
          if (node.empty()) {
            std::cout << prefix << ": (none)\n";
            return;
          }
          for (std::size_t i = 0; i < node.size(); ++i)
            walk(node[i], prefix + "[" + std::to_string(i) + "]");
        } else {
          std::cout << prefix << ": " << node.dump() << "\n";
        }
      };
  walk(j, "");
}

// ------------------------------------------------------------ subcommands --

int run_validate(const std::string& net_path, const Options& opt) {
  ValidationReport rep = validate_network(read_network_file(net_path));
  json j = {{"valid", rep.valid()}};
  json viol = json::array();
  for (const Violation& v : rep.violations)
    viol.push_back({{"code", v.code}, {"message", v.message}, {"ids", v.ids}});
  j["violations"] = viol;
  if (rep.valid()) {
    j["cells"] = rep.network->n_cells();
    j["arrows"] = rep.network->n_arrows();
    j["state_dim"] = rep.network->state_dim();
  }
  print_report(opt, j);
  return rep.valid() ? kExitOk : kExitVerdict;
}

int run_isomorphisms(const std::string& net_path, const std::string& source,
                     const std::string& target, const Options& opt) {
  TypedNetwork net = load_network(net_path);
  auto sc = net.find_cell(source);
  auto tc = net.find_cell(target);
  if (!sc || !tc)
    throw std::invalid_argument("unknown cell id '" +
                                (sc ? target : source) + "'");
  std::vector<InputIsomorphism> isos = input_isomorphisms(net, *sc, *tc);
  json list = json::array();
  for (const InputIsomorphism& iso : isos) {
    json m = json::array();
    for (const auto& [a, b] : iso.map) {
      if (net.arrow(a).internal) continue;
      m.push_back({net.arrow(a).id, net.arrow(b).id});
    }
    list.push_back(m);
  }
  print_report(opt, {{"source", source},
                     {"target", target},
                     {"count", isos.size()},
                     {"isomorphisms", list}});
  return kExitOk;
}

int run_colorings(const std::string& net_path, const std::string& lattice_path,
                  const Options& opt) {
  TypedNetwork net = load_network(net_path);
  std::vector<Coloring> balanced = enumerate_balanced(net);
  json list = json::array();
  for (std::size_t i = 0; i < balanced.size(); ++i)
    list.push_back({{"index", i},
                    {"classes", coloring_json(net, balanced[i])},
                    {"n_colors", balanced[i].n_colors()}});
  print_report(opt, {{"count", balanced.size()}, {"colorings", list}});

  if (!lattice_path.empty()) {
    // Cover edges of the refinement order among balanced colorings:
    // finer -> coarser, transitively reduced.
    std::string dot = "digraph balanced_colorings {\n  rankdir=BT;\n";
    for (std::size_t i = 0; i < balanced.size(); ++i)
      dot += "  n" + std::to_string(i) + " [label=\"" +
             to_string(net, balanced[i]) + "\"];\n";
    auto strictly_finer = [&](std::size_t a, std::size_t b) {
      return !(balanced[a] == balanced[b]) &&
             is_finer(balanced[a], balanced[b]);
    };
    for (std::size_t i = 0; i < balanced.size(); ++i)
      for (std::size_t j = 0; j < balanced.size(); ++j) {
        if (!strictly_finer(i, j)) continue;
        bool covered = false;
        for (std::size_t k = 0; k < balanced.size() && !covered; ++k)
          covered = strictly_finer(i, k) && strictly_finer(k, j);
        if (!covered)
          dot += "  n" + std::to_string(i) + " -> n" + std::to_string(j) +
                 ";\n";
      }
    dot += "}\n";
    write_file(lattice_path, dot);
  }
  return kExitOk;
}

int run_quotient(const std::string& net_path, const std::string& col_path,
                 const std::string& out_path, const Options& opt) {
  TypedNetwork net = load_network(net_path);
  Coloring col = read_coloring(net, slurp_file(col_path));
  BalancednessCertificate cert = is_balanced(net, col);
  if (!cert.balanced) {
    json j = {{"balanced", false},
              {"witness_a", net.cell(cert.witness_a).id},
              {"witness_b", net.cell(cert.witness_b).id}};
    print_report(opt, j);
    return kExitVerdict;
  }
  QuotientNetwork q = quotient_network(net, col);
  std::string doc = write_network(q.net);
  if (out_path.empty())
    std::cout << doc << "\n";
  else
    write_file(out_path, doc);
  if (opt.format == "json" && !out_path.empty())
    print_report(opt, {{"balanced", true},
                       {"quotient_cells", q.net.n_cells()},
                       {"out", out_path}});
  return kExitOk;
}

int run_simulate(const std::string& net_path, const std::string& field_path,
                 const std::string& x0_path, SimParams sp,
                 const std::string& out_path, const Options& opt) {
  TypedNetwork net = load_network(net_path);
  auto field = FieldSpec::parse(slurp_file(field_path), net,
                                parse_params(opt.params));
  Vec x0 = read_state_file(net, x0_path);
  Trajectory traj = integrate(*field, x0, sp);

  if (!out_path.empty()) {
    if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".bin")
      write_trajectory_bin(out_path, net, traj);
    else
      write_trajectory_csv(out_path, net, traj);
  }
  if (!opt.plot_path.empty()) write_pair_distances(opt.plot_path, net, traj);

  print_report(opt, {{"status", to_string(traj.status)},
                     {"message", traj.message},
                     {"samples", traj.size()},
                     {"t_end", traj.size() ? traj.t_end() : sp.t0},
                     {"accepted", traj.n_accepted},
                     {"rejected", traj.n_rejected}});
  return traj.ok() ? kExitOk : kExitVerdict;
}

struct AnalyzeArgs {
  std::string net_path, traj_path, field_path;
  double theta = -1.0;  ///< negative = no phase analysis
  double tol = 1e-6;
  double t0 = 0.0, t1 = 0.0;
  bool do_periods = false;
  double stationary_tol = -1.0;  ///< negative = no stationarity analysis
  int windows = 201;
};

int run_analyze(const AnalyzeArgs& a, const Options& opt) {
  TypedNetwork net = load_network(a.net_path);
  Trajectory traj = load_trajectory(a.traj_path, net);
  double t0 = a.t0, t1 = a.t1;
  if (t1 <= t0) {
    t0 = traj.t_begin();
    t1 = traj.t_end();
  }

  json out;
  out["interval"] =
      pattern_report_json(net, pattern_on_interval(net, traj, t0, t1, a.tol));
  if (t1 > t0)
    out["windows"] = window_report_json(
        net, constant_pattern_window(net, traj, t0, t1, a.tol, a.windows));

  if (a.theta >= 0.0) {
    DoubledNetwork doubled = doubled_network(net);
    out["phase_shift"] = phase_report_json(
        net, doubled, detect_phase_shift(net, traj, a.theta, a.tol));
  }
  if (a.do_periods)
    out["periodicity"] = periodicity_report_json(net, periodicity_report(net, traj));
  if (a.stationary_tol >= 0.0) {
    std::shared_ptr<FieldSpec> field;
    if (!a.field_path.empty())
      field = FieldSpec::parse(slurp_file(a.field_path), net,
                               parse_params(opt.params));
    out["stationary"] = stationary_report_json(
        net,
        stationary_cells(net, field.get(), traj, t0, t1, a.stationary_tol));
  }
  if (!opt.plot_path.empty()) write_pair_distances(opt.plot_path, net, traj);
  print_report(opt, out);
  return kExitOk;
}

// ------------------------------------------------------------- experiment --

struct ExperimentSpec {
  std::string kind;  ///< decay | equilibrium | rigidity
  std::string network;
  std::string field;
  std::string x0;             ///< rigidity: starting guess
  std::string solution_kind;  ///< rigidity: equilibrium | periodic_orbit
  std::vector<std::vector<std::string>> pattern_groups;  ///< decay
  std::map<std::string, double> params;
  ExperimentConfig cfg;
};

ExperimentSpec read_experiment_spec(const std::string& path) {
  json j = json::parse(slurp_file(path), nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument("malformed experiment config JSON");
  ExperimentSpec spec;
  fs::path dir = fs::path(path).parent_path();
  auto rel = [&](const std::string& p) {
    return p.empty() || fs::path(p).is_absolute() ? p : (dir / p).string();
  };

  spec.kind = j.at("kind").get<std::string>();
  spec.network = rel(j.at("network").get<std::string>());
  spec.field = rel(j.at("field").get<std::string>());
  if (j.contains("x0")) spec.x0 = rel(j["x0"].get<std::string>());
  if (j.contains("solution_family"))
    spec.solution_kind = j["solution_family"].get<std::string>();
  if (j.contains("pattern"))
    spec.pattern_groups = j["pattern"].at("groups")
                              .get<std::vector<std::vector<std::string>>>();
  if (j.contains("params"))
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
      spec.params[it.key()] = it.value().get<double>();

  ExperimentConfig& c = spec.cfg;
  if (j.contains("family"))
    c.family = parse_family(j["family"].get<std::string>());
  if (j.contains("eps")) c.eps = j["eps"];
  if (j.contains("seeds")) c.n_seeds = j["seeds"];
  if (j.contains("seed_base")) c.seed_base = j["seed_base"].get<std::uint64_t>();
  if (j.contains("t0")) c.t0 = j["t0"];
  if (j.contains("t1")) c.t1 = j["t1"];
  if (j.contains("breakout_threshold"))
    c.breakout_threshold = j["breakout_threshold"];
  if (j.contains("pattern_tol")) c.pattern_tol = j["pattern_tol"];
  if (j.contains("success_threshold"))
    c.success_threshold = j["success_threshold"];
  if (j.contains("n_bumps")) c.n_bumps = j["n_bumps"];
  if (j.contains("n_starts")) c.n_starts = j["n_starts"];
  if (j.contains("period_guess")) c.period_guess = j["period_guess"];
  if (j.contains("rtol")) c.sim.rtol = j["rtol"];
  if (j.contains("atol")) c.sim.atol = j["atol"];
  return spec;
}

/// Seed-range chunking for --jobs: disjoint (offset, count) windows tile the
/// experiment; per-seed streams are counter-mode substreams of the seed
/// base, so the merged result is identical to a single-threaded run.
DecayStats run_decay_chunked(const TypedNetwork& net,
                             const std::shared_ptr<const Field>& base,
                             const Coloring& pattern,
                             const ExperimentConfig& cfg, int jobs) {
  int n = cfg.n_seeds;
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) return unbalanced_decay_experiment(net, base, pattern, cfg);

  std::vector<ExperimentConfig> chunk_cfgs;
  for (int c = 0; c < jobs; ++c) {
    int lo = n * c / jobs, hi = n * (c + 1) / jobs;
    ExperimentConfig cc = cfg;
    cc.seed_offset = cfg.seed_offset + lo;
    cc.n_seeds = hi - lo;
    chunk_cfgs.push_back(cc);
  }
  std::vector<DecayStats> parts(chunk_cfgs.size());
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < chunk_cfgs.size(); ++c)
    workers.emplace_back([&, c] {
      parts[c] = unbalanced_decay_experiment(net, base, pattern, chunk_cfgs[c]);
    });
  for (std::thread& w : workers) w.join();

  DecayStats merged = parts.front();
  merged.n_seeds = n;
  merged.breakout_times.clear();
  merged.max_deviation.clear();
  merged.n_breakout = 0;
  merged.notes.clear();
  for (const DecayStats& p : parts) {
    merged.breakout_times.insert(merged.breakout_times.end(),
                                 p.breakout_times.begin(),
                                 p.breakout_times.end());
    merged.max_deviation.insert(merged.max_deviation.end(),
                                p.max_deviation.begin(),
                                p.max_deviation.end());
    merged.n_breakout += p.n_breakout;
    for (const std::string& note : p.notes)
      if (note.find("statistical verdict") == std::string::npos)
        merged.notes.push_back(note);
  }
  merged.fraction = static_cast<double>(merged.n_breakout) /
                    static_cast<double>(merged.n_seeds);
  merged.verdict_valid = merged.n_seeds >= 30;
  merged.success = merged.verdict_valid &&
                   merged.fraction >= merged.success_threshold;
  return merged;
}

int run_experiment(const std::string& config_path, const std::string& out_dir,
                   const Options& opt) {
  ExperimentSpec spec = read_experiment_spec(config_path);
  if (opt.seed_given) spec.cfg.seed_base = opt.seed;
  TypedNetwork net = load_network(spec.network);
  std::shared_ptr<const Field> base =
      FieldSpec::parse(slurp_file(spec.field), net, spec.params);
  fs::create_directories(out_dir);

  json result;
  std::string csv = "metric,value\n";
  result["kind"] = spec.kind;
  result["config"] = config_path;

  if (spec.kind == "decay") {
    if (spec.pattern_groups.empty())
      throw std::invalid_argument(
          "decay experiments need pattern.groups in the config");
    Coloring pattern = merge_cells(net, spec.pattern_groups);
    DecayStats st =
        run_decay_chunked(net, base, pattern, spec.cfg, opt.jobs);
    json times = json::array();
    for (double t : st.breakout_times)
      times.push_back(std::isnan(t) ? json() : json(t));
    result["stats"] = {{"pattern_balanced", st.pattern_balanced},
                       {"n_seeds", st.n_seeds},
                       {"seed_base", st.seed_base},
                       {"eps", st.eps},
                       {"threshold", st.threshold},
                       {"success_threshold", st.success_threshold},
                       {"n_breakout", st.n_breakout},
                       {"fraction", st.fraction},
                       {"breakout_times", times},
                       {"max_deviation", st.max_deviation},
                       {"verdict_valid", st.verdict_valid},
                       {"success", st.success},
                       {"notes", st.notes}};
    csv += "n_seeds," + std::to_string(st.n_seeds) + "\n";
    csv += "n_breakout," + std::to_string(st.n_breakout) + "\n";
    csv += "fraction," + std::to_string(st.fraction) + "\n";
    csv += "success," + std::to_string(st.success ? 1 : 0) + "\n";
  } else if (spec.kind == "equilibrium") {
    EquilibriumStats st = equilibrium_pattern_experiment(net, base, spec.cfg);
    json eqs = json::array();
    for (const EquilibriumRecord& rec : st.base_equilibria) {
      std::vector<double> x(rec.x.data(), rec.x.data() + rec.x.size());
      eqs.push_back({{"x", x},
                     {"residual", rec.residual},
                     {"pattern", coloring_json(net, rec.pattern)},
                     {"balanced", rec.balanced}});
    }
    result["stats"] = {{"base_equilibria", eqs},
                       {"n_base_unbalanced", st.n_base_unbalanced},
                       {"n_failed_starts", st.n_failed_starts},
                       {"n_seeds", st.n_seeds},
                       {"seed_base", st.seed_base},
                       {"eps", st.eps},
                       {"n_continued", st.n_continued},
                       {"n_continued_unbalanced", st.n_continued_unbalanced},
                       {"n_seeds_clean", st.n_seeds_clean},
                       {"n_seeds_effective", st.n_seeds_effective},
                       {"verdict_valid", st.verdict_valid},
                       {"success", st.success},
                       {"notes", st.notes}};
    csv += "n_equilibria," + std::to_string(st.base_equilibria.size()) + "\n";
    csv += "n_base_unbalanced," + std::to_string(st.n_base_unbalanced) + "\n";
    csv += "n_seeds_effective," + std::to_string(st.n_seeds_effective) + "\n";
    csv += "n_seeds_clean," + std::to_string(st.n_seeds_clean) + "\n";
    csv += "success," + std::to_string(st.success ? 1 : 0) + "\n";
  } else if (spec.kind == "rigidity") {
    if (spec.x0.empty())
      throw std::invalid_argument("rigidity experiments need an x0 file");
    Vec x0 = read_state_file(net, spec.x0);
    SolutionFamily fam = spec.solution_kind == "periodic_orbit"
                             ? SolutionFamily::periodic_orbit
                             : SolutionFamily::equilibrium;
    RigidityVerdict v = rigidity_probe(net, base, x0, fam, spec.cfg);
    std::vector<double> xs(v.base_solution.data(),
                           v.base_solution.data() + v.base_solution.size());
    result["stats"] = {
        {"family", fam == SolutionFamily::periodic_orbit ? "periodic_orbit"
                                                         : "equilibrium"},
        {"rigid", v.rigid},
        {"balanced", v.balanced},
        {"base_pattern", coloring_json(net, v.base_pattern)},
        {"base_solution", xs},
        {"base_period", v.base_period},
        {"eps", v.eps},
        {"n_seeds", v.n_seeds},
        {"n_effective", v.n_effective},
        {"n_pattern_changes", v.n_pattern_changes},
        {"seed_base", v.seed_base},
        {"notes", v.notes}};
    csv += "rigid," + std::to_string(v.rigid ? 1 : 0) + "\n";
    csv += "balanced," + std::to_string(v.balanced ? 1 : 0) + "\n";
    csv += "n_effective," + std::to_string(v.n_effective) + "\n";
    csv += "n_pattern_changes," + std::to_string(v.n_pattern_changes) + "\n";
  } else {
    throw std::invalid_argument("unknown experiment kind '" + spec.kind +
                                "' (decay | equilibrium | rigidity)");
  }

  write_file((fs::path(out_dir) / "result.json").string(), result.dump(2) + "\n");
  write_file((fs::path(out_dir) / "summary.csv").string(), csv);
  print_report(opt, result);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled cell network toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  ///< global options may follow the subcommand

  Options opt;
  app.add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  app.add_option("--seed", opt.seed, "Seed base for stochastic subcommands")
      ->capture_default_str();
  app.add_option("--jobs", opt.jobs, "Worker threads where supported")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--emit-plot-data", opt.plot_path,
                 "Write gnuplot-ready pair-distance CSV to this path");
  app.add_option("-P", opt.params, "Field parameter override name=value")
      ->take_all();

  std::string net_path, traj_path, field_path, x0_path, out_path;
  std::string source, target, col_path, lattice_path, config_path;
  std::string out_dir = "experiment-out";
  std::string method = "dopri54";
  SimParams sp;
  AnalyzeArgs an;

  CLI::App* validate = app.add_subcommand("validate", "Check a network file");
  validate->add_option("--net", net_path, "Network JSON")->required();

  CLI::App* isos =
      app.add_subcommand("isomorphisms", "List input isomorphisms B(a, b)");
  isos->add_option("--net", net_path, "Network JSON")->required();
  isos->add_option("--source", source, "Source cell id")->required();
  isos->add_option("--target", target, "Target cell id")->required();

  CLI::App* colorings =
      app.add_subcommand("colorings", "Enumerate balanced colorings");
  colorings->add_option("--net", net_path, "Network JSON")->required();
  colorings->add_option("--lattice", lattice_path,
                        "Write the refinement-order DOT graph here");

  CLI::App* quotient =
      app.add_subcommand("quotient", "Quotient network of a balanced coloring");
  quotient->add_option("--net", net_path, "Network JSON")->required();
  quotient->add_option("--coloring", col_path, "Coloring JSON")->required();
  quotient->add_option("--out", out_path, "Output network JSON path");

  CLI::App* simulate = app.add_subcommand("simulate", "Integrate a field");
  simulate->add_option("--net", net_path, "Network JSON")->required();
  simulate->add_option("--field", field_path, "Field source file")->required();
  simulate->add_option("--x0", x0_path, "Initial state JSON")->required();
  simulate->add_option("--t0", sp.t0, "Start time")->capture_default_str();
  simulate->add_option("--t1", sp.t1, "End time")->capture_default_str();
  simulate->add_option("--method", method, "rk4 | dopri54")
      ->capture_default_str();
  simulate->add_option("--dt", sp.dt, "Fixed step (rk4) or initial trial step");
  simulate->add_option("--rtol", sp.rtol, "Relative tolerance")
      ->capture_default_str();
  simulate->add_option("--atol", sp.atol, "Absolute tolerance")
      ->capture_default_str();
  simulate->add_option("--out", out_path, "Trajectory output (.csv or .bin)");

  CLI::App* analyze =
      app.add_subcommand("analyze", "Synchrony analysis of a trajectory");
  analyze->add_option("--net", an.net_path, "Network JSON")->required();
  analyze->add_option("--traj", an.traj_path, "Trajectory (.csv or .bin)")
      ->required();
  analyze->add_option("--field", an.field_path,
                      "Field source (exact rates for stationarity)");
  analyze->add_option("--theta", an.theta, "Phase shift to test");
  analyze->add_option("--tol", an.tol, "State equality tolerance")
      ->capture_default_str();
  analyze->add_option("--t0", an.t0, "Analysis window start");
  analyze->add_option("--t1", an.t1, "Analysis window end");
  analyze->add_flag("--periods", an.do_periods, "Per-cell period estimation");
  analyze->add_option("--stationary", an.stationary_tol,
                      "Stationarity rate tolerance");
  analyze->add_option("--windows", an.windows,
                      "Samples for constant-pattern windows")
      ->capture_default_str();

  CLI::App* experiment =
      app.add_subcommand("experiment", "Run a perturbation experiment");
  experiment->add_option("--config", config_path, "Experiment JSON")
      ->required();
  experiment->add_option("--out", out_dir, "Output directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  opt.seed_given = app.count("--seed") > 0;

  try {
    if (validate->parsed()) return run_validate(net_path, opt);
    if (isos->parsed()) return run_isomorphisms(net_path, source, target, opt);
    if (colorings->parsed()) return run_colorings(net_path, lattice_path, opt);
    if (quotient->parsed())
      return run_quotient(net_path, col_path, out_path, opt);
    if (simulate->parsed()) {
      sp.method = parse_method(method);
      return run_simulate(net_path, field_path, x0_path, sp, out_path, opt);
    }
    if (analyze->parsed()) return run_analyze(an, opt);
    if (experiment->parsed()) return run_experiment(config_path, out_dir, opt);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerdict;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
