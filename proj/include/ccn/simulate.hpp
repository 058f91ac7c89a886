#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ccn/coloring.hpp"
#include "ccn/field.hpp"
#include "ccn/network.hpp"

namespace ccn {

enum class SimStatus { ok, blowup, nonfinite, step_underflow, field_error };

[[nodiscard]] std::string to_string(SimStatus s);

enum class Method { rk4, dopri54 };

[[nodiscard]] Method parse_method(const std::string& name);
[[nodiscard]] std::string to_string(Method m);

struct SimParams {
  double t0 = 0.0;
  double t1 = 10.0;
  Method method = Method::dopri54;
  /// rk4: fixed step size. dopri54: initial trial step (0 picks one).
  double dt = 0.0;
  double rtol = 1e-9;
  double atol = 1e-12;
  /// Sup-norm bound; crossing it aborts cleanly with SimStatus::blowup.
  double blowup = 1e8;
  long max_steps = 50'000'000;
};

/// Sampled solution. Every accepted step is stored along with the field
/// value there, which makes cubic Hermite reconstruction fourth order.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> derivs;
  SimStatus status = SimStatus::ok;
  std::string message;
  std::string method;
  long n_accepted = 0;
  long n_rejected = 0;
  /// True when derivs were estimated from the samples rather than stored.
  bool derivs_estimated = false;

  [[nodiscard]] bool ok() const { return status == SimStatus::ok; }
  [[nodiscard]] std::size_t size() const { return times.size(); }
  [[nodiscard]] double t_begin() const { return times.front(); }
  [[nodiscard]] double t_end() const { return times.back(); }

  /// Cubic Hermite interpolation on the stored grid. Requires a forward
  /// time grid and per-sample derivatives; throws std::out_of_range outside
  /// the stored span.
  [[nodiscard]] Vec dense_eval(double t) const;

  /// Fills derivs with centered difference tangents when they are absent,
  /// for trajectories imported from plain sample files.
  void estimate_tangents();
};

[[nodiscard]] Trajectory integrate(const Field& f, const Vec& x0,
                                   const SimParams& p = {});

/// Integrates the full system and the quotient system from a synchronous
/// initial state and returns the largest deviation between each cell and
/// its quotient representative over a shared checkpoint grid of exactly
/// stored states. The initial state must lie on the synchrony subspace
/// within 1e-12.
[[nodiscard]] double quotient_consistency(const Field& f,
                                          const QuotientNetwork& q,
                                          const Vec& x0, const SimParams& p);

// ===========================================================================
// Trajectory files
// ===========================================================================

/// Column layout: t, then one column per state component named cell[k],
/// full precision. Reading estimates tangents, so dense evaluation works,
/// but stationarity analysis will want exact derivatives.
void write_trajectory_csv(const std::string& path, const TypedNetwork& net,
                          const Trajectory& traj);
[[nodiscard]] Trajectory read_trajectory_csv(const std::string& path,
                                             const TypedNetwork& net);

/// Binary cache with the cell table, exact derivatives and status included.
void write_trajectory_bin(const std::string& path, const TypedNetwork& net,
                          const Trajectory& traj);
[[nodiscard]] Trajectory read_trajectory_bin(const std::string& path,
                                             const TypedNetwork& net);

}  // namespace ccn
