#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ccn/analyze.hpp"
#include "ccn/coloring.hpp"
#include "ccn/field.hpp"
#include "ccn/network.hpp"
#include "ccn/simulate.hpp"

namespace ccn {

// ===========================================================================
// Statistical experiments: random admissible perturbations against synchrony
// patterns. Every statistical verdict carries (threshold, n_seeds, seed
// base) and is bit-for-bit reproducible from the seed base; per-seed streams
// are split in counter mode, so aggregation order cannot matter.
// ===========================================================================

enum class PerturbationFamily {
  /// Random bounded coefficients on sine atoms, emitted as expression
  /// source and compiled; certifies the sup norm (sum of |coefficients|).
  coefficients,
  /// Disjoint-support bumps along a reference segment, symmetrized;
  /// certifies the C1 norm and vanishes outside a reported ball.
  bumps,
};

[[nodiscard]] std::string to_string(PerturbationFamily family);
[[nodiscard]] PerturbationFamily parse_family(const std::string& name);

struct ExperimentConfig {
  PerturbationFamily family = PerturbationFamily::coefficients;
  double eps = 1e-2;               ///< certified perturbation size, >= 0
  int n_seeds = 100;               ///< >= 30 for any statistical verdict
  std::uint64_t seed_base = 2026;  ///< root of all per-seed substreams
  /// First global seed index of this run. Seed i uses substream(seed_base,
  /// seed_offset + i), so disjoint index ranges tile one experiment exactly
  /// and chunked runs merge into the single-run result.
  int seed_offset = 0;
  double t0 = 0.0;                 ///< integration window
  double t1 = 10.0;
  double breakout_threshold = 1e-3;  ///< same-color deviation = breakout
  double pattern_tol = 1e-9;         ///< state-equality tolerance
  double success_threshold = 0.95;   ///< statistical acceptance fraction
  int n_bumps = 5;                   ///< bump family only
  int n_starts = 20;                 ///< random root-finding starts
  int admissibility_samples = 64;    ///< per-perturbation gate samples
  double period_guess = 0.0;         ///< shooting initial period
  SimParams sim;                     ///< integrator settings; t0/t1 ignored

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

// ===========================================================================
// Random admissible perturbations
// ===========================================================================

struct Perturbation {
  std::shared_ptr<const Field> field;
  double certified_norm = 0.0;  ///< sup-norm bound; also C1 for bumps
  bool c1_certified = false;
  AdmissibilityReport admissibility;  ///< gate run before returning
  std::string source;                 ///< coefficients family: emitted text
  Vec support_center;                 ///< bumps family: enclosing ball
  double support_radius = 0.0;
};

/// Draws one admissible perturbation of certified size <= eps. The bump
/// family needs a reference segment (states along a trajectory) to place
/// supports; eps = 0 yields the zero field. Throws std::runtime_error when
/// the admissibility gate fails.
[[nodiscard]] Perturbation random_admissible_perturbation(
    const TypedNetwork& net, PerturbationFamily family, double eps,
    std::uint64_t seed, const std::vector<Vec>& reference_segment = {},
    int n_bumps = 5, int admissibility_samples = 64);

// ===========================================================================
// Root finding (shared by the experiments; exposed for tests)
// ===========================================================================

struct NewtonResult {
  Vec x;
  double residual = 0.0;  ///< sup norm of f at x
  bool converged = false;
  int iterations = 0;
};

/// Damped Newton on f(x) = 0 with a central-difference Jacobian and
/// backtracking line search; converges at sup-norm residual <= tol.
[[nodiscard]] NewtonResult damped_newton(const Field& f, Vec x,
                                         int max_iterations = 50,
                                         double tol = 1e-12);

// ===========================================================================
// Synchrony breakout under perturbation
// ===========================================================================

struct DecayStats {
  bool pattern_balanced = false;  ///< balancedness of the starting pattern
  int n_seeds = 0;
  std::uint64_t seed_base = 0;
  double eps = 0.0;
  double threshold = 0.0;
  double success_threshold = 0.0;
  /// Per seed: first time the largest same-color deviation exceeded the
  /// threshold; quiet NaN where it never did.
  std::vector<double> breakout_times;
  /// Per seed: largest same-color deviation over the whole window.
  std::vector<double> max_deviation;
  int n_breakout = 0;
  double fraction = 0.0;
  bool verdict_valid = false;  ///< n_seeds >= 30
  bool success = false;        ///< verdict_valid and fraction >= threshold
  std::vector<std::string> notes;
};

/// Per seed: perturb the base field, start exactly on the pattern's
/// equality set (colors separated), integrate, and record the first
/// breakout time. Unbalanced patterns are expected to break out in nearly
/// every seed; balanced ones serve as the negative control at a drift
/// threshold.
[[nodiscard]] DecayStats unbalanced_decay_experiment(
    const TypedNetwork& net, const std::shared_ptr<const Field>& base,
    const Coloring& pattern, const ExperimentConfig& cfg);

// ===========================================================================
// Equilibrium patterns
// ===========================================================================

struct EquilibriumRecord {
  Vec x;
  double residual = 0.0;
  Coloring pattern;
  bool balanced = false;
};

struct EquilibriumStats {
  std::vector<EquilibriumRecord> base_equilibria;  ///< deduplicated
  int n_base_unbalanced = 0;
  int n_failed_starts = 0;  ///< non-convergent random starts (not fatal)
  int n_seeds = 0;
  std::uint64_t seed_base = 0;
  double eps = 0.0;
  int n_continued = 0;            ///< converged continuations over all seeds
  int n_continued_unbalanced = 0; ///< continued equilibria, unbalanced pattern
  int n_seeds_clean = 0;          ///< seeds whose continuations stayed balanced
  int n_seeds_effective = 0;      ///< seeds with at least one continuation
  bool verdict_valid = false;
  bool success = false;  ///< clean fraction >= success threshold
  std::vector<std::string> notes;
};

/// Finds base-field equilibria from random starts, colors each state and
/// checks balancedness; then, per seed, perturbs the field, re-finds each
/// equilibrium from its base position and verifies the continued patterns
/// stay balanced.
[[nodiscard]] EquilibriumStats equilibrium_pattern_experiment(
    const TypedNetwork& net, const std::shared_ptr<const Field>& base,
    const ExperimentConfig& cfg);

// ===========================================================================
// Rigidity probing
// ===========================================================================

enum class SolutionFamily { equilibrium, periodic_orbit };

struct RigidityVerdict {
  SolutionFamily family = SolutionFamily::equilibrium;
  bool rigid = false;  ///< every continued pattern equals the base pattern
  Coloring base_pattern;
  bool balanced = false;  ///< base pattern balancedness
  Vec base_solution;
  double base_period = 0.0;  ///< periodic family only
  double eps = 0.0;
  int n_seeds = 0;
  int n_effective = 0;  ///< continuations that converged
  int n_pattern_changes = 0;
  std::uint64_t seed_base = 0;
  std::vector<std::string> notes;
};

/// Continues one solution of the base field (equilibria by Newton, periodic
/// orbits by fixed-phase shooting from cfg.period_guess) under n_seeds
/// random perturbations and compares synchrony patterns. "Rigid" is always
/// a statement at resolution (eps, n_seeds). Throws std::runtime_error when
/// the base solution itself cannot be found.
[[nodiscard]] RigidityVerdict rigidity_probe(
    const TypedNetwork& net, const std::shared_ptr<const Field>& base,
    const Vec& x0_guess, SolutionFamily family, const ExperimentConfig& cfg);

}  // namespace ccn
