#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccn/coloring.hpp"
#include "ccn/field.hpp"
#include "ccn/network.hpp"
#include "ccn/simulate.hpp"

namespace ccn {

// ===========================================================================
// Synchrony patterns from states and trajectories
//
// Equality is decided in the sup norm: within tol means equal, beyond
// 10*tol means distinct, and the band between the two is flagged as
// ambiguous rather than silently resolved. Only cells of one type are
// compared. Continuous-time statements are discretized over sample grids;
// every verdict is therefore a statement at the sampling resolution.
// ===========================================================================

/// Finest coloring merging cells whose states agree within tol, closed
/// transitively (union-find).
[[nodiscard]] Coloring pattern_at(const TypedNetwork& net, const Vec& x,
                                  double tol);

struct PairEvidence {
  CellIndex a = -1;
  CellIndex b = -1;
  bool same_color = false;
  double max_deviation = 0.0;  ///< over samples; equality evidence
  double min_separation = 0.0; ///< over samples; distinctness evidence
  bool ambiguous = false;      ///< deviation landed in (tol, 10*tol], or the
                               ///< pair matched at some samples but not all
};

struct PatternReport {
  double t_begin = 0.0;
  double t_end = 0.0;
  double tol = 0.0;
  Coloring pattern;
  std::vector<PairEvidence> pairs;  ///< every same-type pair
  BalancednessCertificate certificate;
  [[nodiscard]] bool balanced() const { return certificate.balanced; }
};

/// Report for a single state: the interval degenerates to one time.
[[nodiscard]] PatternReport pattern_at_report(const TypedNetwork& net,
                                              const Vec& x, double tol,
                                              double t = 0.0);

/// Meet over sampled times (stored grid plus dense midpoints within the
/// window): two cells share a color iff they share one at every sample.
[[nodiscard]] PatternReport pattern_on_interval(const TypedNetwork& net,
                                                const Trajectory& traj,
                                                double t_begin, double t_end,
                                                double tol);

// ===========================================================================
// Constant-pattern windows
// ===========================================================================

struct PatternWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
  Coloring pattern;
};

struct WindowReport {
  std::vector<PatternWindow> windows;
  double resolution = 0.0;  ///< sample spacing underlying the verdict
  double tol = 0.0;
  /// Semicontinuity findings: a window pattern is expected to be finer than
  /// or equal to the pattern at the samples bordering the window.
  std::vector<std::string> notes;
};

/// Maximal subintervals of constant pattern_at over a uniform sample grid.
[[nodiscard]] WindowReport constant_pattern_window(const TypedNetwork& net,
                                                   const Trajectory& traj,
                                                   double t_begin,
                                                   double t_end, double tol,
                                                   int n_samples = 201);

// ===========================================================================
// Stationary cells and the upstream propagation test
// ===========================================================================

struct StationaryReport {
  double t_begin = 0.0;
  double t_end = 0.0;
  double tol_rate = 0.0;
  std::vector<CellIndex> stationary;
  std::vector<double> max_rate;  ///< per cell, sup of the rate sup norm
  struct Violation {
    CellIndex cell = -1;          ///< stationary cell
    CellIndex moving_input = -1;  ///< one of its input cells that moves
  };
  /// Generic fields freeze a cell only when its inputs are frozen; each
  /// violation is a non-generic configuration finding, not an error.
  std::vector<Violation> violations;
  std::vector<std::string> notes;
  [[nodiscard]] bool propagation_holds() const { return violations.empty(); }
};

/// Rates come from field evaluation at sampled states, never from
/// differencing. Without a field, stored exact derivatives are used; a
/// trajectory with merely estimated tangents is rejected.
[[nodiscard]] StationaryReport stationary_cells(const TypedNetwork& net,
                                                const Field* f,
                                                const Trajectory& traj,
                                                double t_begin, double t_end,
                                                double tol_rate);

// ===========================================================================
// Phase-shift synchrony via the doubled network
// ===========================================================================

struct PhaseShiftReport {
  double theta = 0.0;
  double tol = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;  ///< window of s with both s and s + theta in span
  /// Interval pattern of the doubled-network trajectory (x(s), x(s+theta)).
  Coloring doubled_pattern;
  /// Unordered cell pairs {a, b} with x_a(t) = x_b(t + theta) across the
  /// window (cross-copy colors), excluding self-pairs.
  std::vector<std::pair<CellIndex, CellIndex>> shift_pairs;
  /// Cells matching their own shifted copy, i.e. theta-periodic cells.
  std::vector<CellIndex> theta_periodic;
  /// Necessary condition when the relation is generic: the doubled pattern
  /// is balanced, so related cells admit shift-aligning isomorphisms.
  bool balanced = false;
  std::vector<std::pair<CellIndex, CellIndex>> non_generic_pairs;
  std::vector<std::string> notes;
};

[[nodiscard]] PhaseShiftReport detect_phase_shift(const TypedNetwork& net,
                                                  const Trajectory& traj,
                                                  double theta, double tol,
                                                  int n_samples = 129);

// ===========================================================================
// Per-cell periods and the oscillation propagation test
// ===========================================================================

struct CellPeriod {
  CellIndex cell = -1;
  enum class Kind { constant, periodic, aperiodic } kind = Kind::aperiodic;
  double period = 0.0;
  double peak_correlation = 0.0;
};

struct PeriodicityOptions {
  double tol = 1e-7;             ///< amplitude below which a cell is constant
  int max_harmonic = 8;          ///< K in the k*theta commensurability scan
  double rel_tol = 1e-3;         ///< relative tolerance on period matching
  double min_correlation = 0.98; ///< autocorrelation peak acceptance
  int n_resample = 4096;         ///< uniform resampling for autocorrelation
};

struct PeriodicityReport {
  std::vector<CellPeriod> cells;
  struct Violation {
    CellIndex cell = -1;   ///< periodic cell whose statement fails
    CellIndex input = -1;  ///< upstream cell breaking it
    std::string reason;
  };
  /// A periodic cell's upstream cells must each be constant or admit a
  /// period k*theta (k small); failures are non-generic findings.
  std::vector<Violation> violations;
  bool transitive = false;        ///< every cell reaches every other
  double whole_state_period = 0.0;  ///< 0 when not established
  std::vector<std::string> notes;
  PeriodicityOptions options;
  [[nodiscard]] bool propagation_holds() const { return violations.empty(); }
};

/// Periods by normalized autocorrelation with parabolic peak refinement,
/// floored at ten mean grid steps; propagation checked over the transitive
/// closure of user arrows.
[[nodiscard]] PeriodicityReport periodicity_report(
    const TypedNetwork& net, const Trajectory& traj,
    const PeriodicityOptions& opt = {});

}  // namespace ccn
