// Acceptance gate: one binary, one line per release criterion, exit code =
// number of failed criteria. Each criterion states its tolerance and budget
// inline so a failure is diagnosable from the output alone.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ccn/analyze.hpp"
#include "ccn/coloring.hpp"
#include "ccn/dsl.hpp"
#include "ccn/experiment.hpp"
#include "ccn/field.hpp"
#include "ccn/network.hpp"
#include "ccn/network_io.hpp"
#include "ccn/simulate.hpp"
#include "fixtures.hpp"

using namespace ccn;
using ccn::testing::build;
using ccn::testing::fixture_path;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

int failures = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

void criterion(int n, const char* label,
               const std::function<void(Check&)>& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  if (c.ok) {
    std::printf("[PASS] criterion %d: %s\n", n, label);
  } else {
    ++failures;
    std::printf("[FAIL] criterion %d: %s  (%s)\n", n, label, c.detail.c_str());
  }
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool contains(const std::vector<Coloring>& catalogue, const Coloring& c) {
  for (const Coloring& k : catalogue)
    if (k == c) return true;
  return false;
}

/// Largest same-color cell distance of one state.
double color_deviation(const TypedNetwork& net, const Coloring& col,
                       const Vec& x) {
  double worst = 0.0;
  for (const auto& cls : col.classes())
    for (std::size_t i = 0; i < cls.size(); ++i)
      for (std::size_t j = i + 1; j < cls.size(); ++j)
        worst = std::max(worst, net.cell_distance(x, cls[i], cls[j]));
  return worst;
}

/// A reproducible synchrony-subspace point for a coloring.
Vec random_synchrony_point(const TypedNetwork& net, const Coloring& col,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> per_color(static_cast<std::size_t>(col.n_colors()));
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    Vec& block = per_color[static_cast<std::size_t>(col.color[c])];
    if (block.size() == 0) {
      block.resize(net.cell_dim(c));
      for (int k = 0; k < block.size(); ++k) block[k] = u(rng);
    }
  }
  return synchrony_point(net, col, per_color);
}

/// x1 = sin t, x2 = sin 2t, x3 = -sin t, x4 = cos 2t on the four-cell
/// two-type fixture: a half-period-shift pattern with analytic derivatives.
Trajectory shifted_pattern_traj(double t1, int n) {
  Trajectory traj;
  for (int i = 0; i < n; ++i) {
    double t = t1 * static_cast<double>(i) / static_cast<double>(n - 1);
    Vec x(4), d(4);
    x << std::sin(t), std::sin(2.0 * t), -std::sin(t), std::cos(2.0 * t);
    d << std::cos(t), 2.0 * std::cos(2.0 * t), -std::cos(t),
        -2.0 * std::sin(2.0 * t);
    traj.times.push_back(t);
    traj.states.push_back(std::move(x));
    traj.derivs.push_back(std::move(d));
  }
  return traj;
}

struct NamedNet {
  std::string name;
  TypedNetwork net;
};

std::vector<NamedNet> all_fixture_networks() {
  std::vector<NamedNet> nets;
  nets.push_back({"fig1", build(ccn::testing::fig1_spec())});
  nets.push_back({"fig3", build(ccn::testing::fig3_spec())});
  nets.push_back({"chain2", build(ccn::testing::chain2_spec())});
  nets.push_back({"triple", build(ccn::testing::triple_spec())});
  nets.push_back({"single", build(ccn::testing::single_spec())});
  nets.push_back({"duo2d", build(ccn::testing::duo2d_spec())});
  nets.push_back({"ring6", build(ccn::testing::ring6_spec())});
  return nets;
}

}  // namespace

int main() {
  const TypedNetwork fig1 = build(ccn::testing::fig1_spec());
  const TypedNetwork fig3 = build(ccn::testing::fig3_spec());
  const TypedNetwork chain2 = build(ccn::testing::chain2_spec());
  const TypedNetwork single = build(ccn::testing::single_spec());

  // -------------------------------------------------------------------- 1
  criterion(1, "four-cell fixture: full balanced catalogue in under 1 s",
            [&](Check& c) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Coloring> catalogue = enumerate_balanced(fig1);
    double dt = seconds_since(t0);

    c.require(catalogue.size() == 4,
              "expected 4 colorings, got " + std::to_string(catalogue.size()));
    c.require(contains(catalogue, merge_cells(fig1, {})), "missing trivial");
    c.require(contains(catalogue, merge_cells(fig1, {{"c1", "c3"}})),
              "missing {c1 c3}");
    c.require(contains(catalogue, merge_cells(fig1, {{"c2", "c4"}})),
              "missing {c2 c4}");
    c.require(contains(catalogue,
                       merge_cells(fig1, {{"c1", "c3"}, {"c2", "c4"}})),
              "missing {c1 c3}{c2 c4}");
    c.require(dt < 1.0, "took " + std::to_string(dt) + " s");
  });

  // -------------------------------------------------------------------- 2
  criterion(2, "ten-cell fixture: required patterns present, forbidden merge absent, under 10 s",
            [&](Check& c) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Coloring> catalogue = enumerate_balanced(fig3);
    double dt = seconds_since(t0);

    c.require(catalogue.size() == 8,
              "expected 8 colorings, got " + std::to_string(catalogue.size()));
    c.require(contains(catalogue, merge_cells(fig3, {{"c3", "c7"}})),
              "missing {c3 c7}");
    c.require(contains(catalogue,
                       merge_cells(fig3, {{"c3", "c4", "c7"}, {"c5", "c6"}})),
              "missing {c3 c4 c7}{c5 c6}");
    c.require(contains(catalogue, merge_cells(fig3, {{"c1", "c2"}})),
              "missing {c1 c2}");

    auto c2i = *fig3.find_cell("c2");
    auto c9i = *fig3.find_cell("c9");
    for (const Coloring& col : catalogue)
      c.require(!col.same(c2i, c9i),
                "a catalogue entry merges c2 with c9: " + to_string(fig3, col));
    c.require(dt < 10.0, "took " + std::to_string(dt) + " s");
  });

  // -------------------------------------------------------------------- 3
  criterion(3, "lattice walk matches the brute-force oracle on every fixture with at most 8 cells",
            [&](Check& c) {
    for (const NamedNet& nn : all_fixture_networks()) {
      if (nn.net.n_cells() > 8) continue;
      std::vector<Coloring> fast = enumerate_balanced(nn.net);
      std::vector<Coloring> slow = brute_force_balanced(nn.net);
      c.require(fast.size() == slow.size(),
                nn.name + ": " + std::to_string(fast.size()) + " vs oracle " +
                    std::to_string(slow.size()));
      for (const Coloring& col : slow)
        c.require(contains(fast, col),
                  nn.name + ": oracle coloring missing: " +
                      to_string(nn.net, col));
    }
  });

  // -------------------------------------------------------------------- 4
  criterion(4, "every bundled field and symmetrized field passes the admissibility gate at 1e-12 over 1000 states",
            [&](Check& c) {
    const std::vector<std::pair<std::string, const TypedNetwork*>> fields = {
        {"fig1_contraction.dsl", &fig1},
        {"fig1_breakout_base.dsl", &fig1},
        {"fig1_rigid_base.dsl", &fig1},
        {"fig3_field.dsl", &fig3},
        {"chain2_frozen.dsl", &chain2},
        {"chain2_cancel.dsl", &chain2},
    };
    const TypedNetwork duo = build(ccn::testing::duo2d_spec());
    const TypedNetwork triple = build(ccn::testing::triple_spec());

    auto gate = [&](const Field& f, const std::string& name) {
      AdmissibilityReport rep = check_admissibility(f, 1000, 1e-12);
      c.require(rep.passed(), name + ": max violation " +
                                  std::to_string(rep.max_violation));
    };

    for (const auto& [file, net] : fields)
      gate(*parse_field(slurp_file(fixture_path(file)), *net), file);
    gate(*parse_field(slurp_file(fixture_path("duo2d_spiral.dsl")), duo),
         "duo2d_spiral.dsl");
    gate(*parse_field(slurp_file(fixture_path("triple_eq.dsl")), triple),
         "triple_eq.dsl");

    // Symmetrization of a deliberately order-sensitive raw component.
    Vec y(1);
    y << 1.0;
    auto raw = FieldSpec::parse("raw class RL(c1) { dx = input(rl, 0)^2; }",
                                fig1, {}, /*require_all_classes=*/false);
    gate(*symmetrize(fig1, raw, {{"c1", y}}), "symmetrized raw square");

    const TypedNetwork ring6 = build(ccn::testing::ring6_spec());
    RawCellFn phi = [](const Vec& self, const std::vector<Vec>& inputs) {
      return std::sin(self[0]) * inputs[0][0];
    };
    gate(*symmetrize_callable(ring6, 0, phi, y), "symmetrized ring callable");
  });

  // -------------------------------------------------------------------- 5
  criterion(5, "balanced synchrony subspaces are flow-invariant (drift <= 1e-8) and quotient-consistent (<= 1e-7)",
            [&](Check& c) {
    SimParams sp;
    sp.t1 = 10.0;
    sp.rtol = 1e-10;
    sp.atol = 1e-12;

    std::uint64_t seed = 50'000;
    for (const NamedNet& nn : all_fixture_networks()) {
      std::vector<Coloring> catalogue = enumerate_balanced(nn.net);
      for (const Coloring& col : catalogue) {
        QuotientNetwork q = quotient_network(nn.net, col);
        for (int s = 0; s < 5; ++s) {
          ++seed;
          Perturbation pert = random_admissible_perturbation(
              nn.net, PerturbationFamily::coefficients, 1.0, seed);
          std::mt19937_64 rng(seed);
          Vec x0 = random_synchrony_point(nn.net, col, rng);

          Trajectory traj = integrate(*pert.field, x0, sp);
          c.require(traj.ok(), nn.name + ": integration failed: " +
                                   traj.message);
          double drift = 0.0;
          for (const Vec& x : traj.states)
            drift = std::max(drift, color_deviation(nn.net, col, x));
          c.require(drift <= 1e-8,
                    nn.name + " " + to_string(nn.net, col) + ": drift " +
                        std::to_string(drift));

          double dev = quotient_consistency(*pert.field, q, x0, sp);
          c.require(dev <= 1e-7,
                    nn.name + " " + to_string(nn.net, col) +
                        ": quotient deviation " + std::to_string(dev));
        }
      }
    }
  });

  // -------------------------------------------------------------------- 6
  criterion(6, "unbalanced equality breaks out in >= 95/100 seeds; balanced control in 0/100; under 5 min",
            [&](Check& c) {
    auto t0 = std::chrono::steady_clock::now();
    std::shared_ptr<const Field> base =
        parse_field(slurp_file(fixture_path("fig1_breakout_base.dsl")), fig1);

    ExperimentConfig cfg;
    cfg.family = PerturbationFamily::coefficients;
    cfg.eps = 1e-2;
    cfg.n_seeds = 100;
    cfg.t1 = 10.0;
    cfg.breakout_threshold = 1e-3;
    cfg.success_threshold = 0.95;

    DecayStats broken = unbalanced_decay_experiment(
        fig1, base, merge_cells(fig1, {{"c1", "c2", "c3"}}), cfg);
    c.require(!broken.pattern_balanced, "test pattern should be unbalanced");
    c.require(broken.n_breakout >= 95,
              "breakouts: " + std::to_string(broken.n_breakout) + "/100");
    c.require(broken.success, "verdict not reached");

    cfg.breakout_threshold = 1e-6;
    DecayStats control = unbalanced_decay_experiment(
        fig1, base, merge_cells(fig1, {{"c1", "c3"}}), cfg);
    c.require(control.pattern_balanced, "control pattern should be balanced");
    c.require(control.n_breakout == 0,
              "control breakouts: " + std::to_string(control.n_breakout));

    double dt = seconds_since(t0);
    c.require(dt < 300.0, "took " + std::to_string(dt) + " s");
  });

  // -------------------------------------------------------------------- 7
  criterion(7, "half-period shift pattern: exact pair list, balanced doubled pattern, commensurable periods",
            [&](Check& c) {
    Trajectory traj = shifted_pattern_traj(4.0 * kPi, 1001);

    PhaseShiftReport half = detect_phase_shift(fig1, traj, kPi, 1e-6);
    c.require(half.shift_pairs.size() == 1 &&
                  half.shift_pairs[0] == std::pair<CellIndex, CellIndex>{0, 2},
              "expected exactly the shift pair (c1, c3)");
    c.require(half.theta_periodic == std::vector<CellIndex>{1, 3},
              "expected c2 and c4 half-period periodic");
    c.require(half.balanced, "doubled pattern should be balanced");
    c.require(half.non_generic_pairs.empty(), "no exceptional pairs expected");

    PhaseShiftReport zero = detect_phase_shift(fig1, traj, 0.0, 1e-6);
    c.require(zero.theta_periodic == std::vector<CellIndex>{0, 1, 2, 3},
              "zero shift should match every cell to its copy");
    c.require(zero.shift_pairs.empty(), "zero shift pairs should be empty");

    Trajectory longer = shifted_pattern_traj(8.0 * kPi, 2001);
    PeriodicityReport periods = periodicity_report(fig1, longer);
    for (const CellPeriod& cp : periods.cells)
      c.require(cp.kind == CellPeriod::Kind::periodic,
                "every cell should be periodic");
    c.require(std::fabs(periods.cells[0].period - 2.0 * kPi) < 0.01 &&
                  std::fabs(periods.cells[1].period - kPi) < 0.01,
              "period estimates off");
    c.require(periods.propagation_holds(),
              "commensurability propagation failed");
    c.require(std::fabs(periods.whole_state_period - 2.0 * kPi) < 0.01,
              "whole-state period off");
  });

  // -------------------------------------------------------------------- 8
  criterion(8, "stationary-cell propagation: genuine freeze passes, exact cancellation is flagged and dissolves in >= 95/100 perturbed seeds",
            [&](Check& c) {
    Vec x0(2);
    x0 << 0.7, -0.2;
    SimParams sp;
    sp.t1 = 20.0;

    auto frozen =
        parse_field(slurp_file(fixture_path("chain2_frozen.dsl")), chain2);
    Trajectory ft = integrate(*frozen, x0, sp);
    StationaryReport fr = stationary_cells(chain2, frozen.get(), ft, 0.0,
                                           10.0, 1e-6);
    c.require(fr.stationary == std::vector<CellIndex>{0},
              "frozen source should be the only stationary cell");
    c.require(fr.propagation_holds(), "freeze should be unflagged");

    std::shared_ptr<const Field> cancel =
        parse_field(slurp_file(fixture_path("chain2_cancel.dsl")), chain2);
    Trajectory ct = integrate(*cancel, x0, sp);
    StationaryReport cr = stationary_cells(chain2, cancel.get(), ct, 0.0,
                                           20.0, 1e-6);
    c.require(cr.violations.size() == 1 && cr.violations[0].cell == 1 &&
                  cr.violations[0].moving_input == 0,
              "cancellation should be flagged as non-generic");

    int persists = 0;
    for (int i = 0; i < 100; ++i) {
      Perturbation pert = random_admissible_perturbation(
          chain2, PerturbationFamily::coefficients, 1e-2,
          90'000 + static_cast<std::uint64_t>(i));
      FieldSum field(chain2, {cancel, pert.field});
      Trajectory traj = integrate(field, x0, sp);
      if (!traj.ok()) continue;
      StationaryReport rep =
          stationary_cells(chain2, &field, traj, 0.0, 20.0, 1e-6);
      if (!rep.violations.empty()) ++persists;
    }
    c.require(persists <= 5,
              "cancellation persisted in " + std::to_string(persists) +
                  "/100 perturbed seeds");
  });

  // -------------------------------------------------------------------- 9
  criterion(9, "integrator validation: 4th-order convergence, dense output at 1e-6, reversibility at 1e-6",
            [&](Check& c) {
    auto decay = parse_field("class S(x) { dx = -self; }", single);
    Vec one(1);
    one << 1.0;

    // Fixed-step error must shrink 16-fold per halving (asymptotically).
    auto endpoint_error = [&](double h) {
      SimParams sp;
      sp.method = Method::rk4;
      sp.dt = h;
      sp.t1 = 2.0;
      Trajectory t = integrate(*decay, one, sp);
      return std::fabs(t.states.back()[0] - std::exp(-2.0));
    };
    double e1 = endpoint_error(1e-2);
    double e2 = endpoint_error(5e-3);
    double e3 = endpoint_error(2.5e-3);
    c.require(e1 / e2 > 12.0 && e1 / e2 < 20.0 && e2 / e3 > 12.0 &&
                  e2 / e3 < 20.0,
              "order ratios " + std::to_string(e1 / e2) + ", " +
                  std::to_string(e2 / e3));

    SimParams ad;
    ad.t1 = 2.0;
    Trajectory traj = integrate(*decay, one, ad);
    c.require(traj.ok(), "adaptive run failed");
    for (int i = 0; i <= 200; ++i) {
      double t = 2.0 * static_cast<double>(i) / 200.0;
      c.require(std::fabs(traj.dense_eval(t)[0] - std::exp(-t)) <= 1e-6,
                "dense output error above 1e-6 at t = " + std::to_string(t));
    }

    auto contraction =
        parse_field(slurp_file(fixture_path("fig1_contraction.dsl")), fig1);
    Vec x0(4);
    x0 << 0.3, -0.1, 0.8, 0.5;
    SimParams fwd;
    fwd.t1 = 5.0;
    fwd.rtol = 1e-11;
    fwd.atol = 1e-13;
    Trajectory f = integrate(*contraction, x0, fwd);
    SimParams bwd = fwd;
    bwd.t0 = 5.0;
    bwd.t1 = 0.0;
    Trajectory b = integrate(*contraction, f.states.back(), bwd);
    c.require(f.ok() && b.ok(), "round-trip integration failed");
    double err = (b.states.back() - x0).cwiseAbs().maxCoeff();
    c.require(err <= 1e-6, "round-trip error " + std::to_string(err));
  });

  if (failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
