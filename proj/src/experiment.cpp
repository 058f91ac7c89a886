#include "ccn/experiment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "ccn/dsl.hpp"
#include "ccn/rng.hpp"

namespace ccn {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Largest same-color cell distance at one state.
double pattern_deviation(const TypedNetwork& net, const Coloring& col,
                         const Vec& x) {
  double worst = 0.0;
  for (const auto& cls : col.classes())
    for (std::size_t i = 0; i < cls.size(); ++i)
      for (std::size_t j = i + 1; j < cls.size(); ++j)
        worst = std::max(worst, net.cell_distance(x, cls[i], cls[j]));
  return worst;
}

/// Random point of the coloring's synchrony space with same-type colors
/// separated well beyond the ambiguity band.
Vec synchrony_start(const TypedNetwork& net, const Coloring& col,
                    std::mt19937_64& rng) {
  auto classes = col.classes();
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<Vec> blocks;
    blocks.reserve(classes.size());
    for (const auto& cls : classes) {
      Vec b(net.cell_dim(cls.front()));
      for (int i = 0; i < b.size(); ++i) b[i] = uniform(rng, -1.0, 1.0);
      blocks.push_back(std::move(b));
    }
    bool separated = true;
    for (std::size_t i = 0; i < classes.size() && separated; ++i)
      for (std::size_t j = i + 1; j < classes.size() && separated; ++j) {
        if (net.cell(classes[i].front()).type !=
            net.cell(classes[j].front()).type)
          continue;
        if ((blocks[i] - blocks[j]).cwiseAbs().maxCoeff() < 0.2)
          separated = false;
      }
    if (separated) return synchrony_point(net, col, blocks);
  }
  throw std::runtime_error("could not separate the coloring's color values");
}

/// Downsampled stored states of a short base-field run, for placing bump
/// supports along an actual orbit.
std::vector<Vec> orbit_segment(const Field& base, const Vec& x0,
                               const ExperimentConfig& cfg) {
  SimParams sp = cfg.sim;
  sp.t0 = cfg.t0;
  sp.t1 = cfg.t0 + std::min(2.0, cfg.t1 - cfg.t0);
  Trajectory traj = integrate(base, x0, sp);
  if (traj.size() < 2)
    throw std::runtime_error("reference segment integration failed: " +
                             to_string(traj.status));
  std::vector<Vec> seg;
  std::size_t stride = std::max<std::size_t>(1, traj.size() / 128);
  for (std::size_t i = 0; i < traj.size(); i += stride)
    seg.push_back(traj.states[i]);
  return seg;
}

}  // namespace

std::string to_string(PerturbationFamily family) {
  return family == PerturbationFamily::coefficients ? "coefficients" : "bumps";
}

PerturbationFamily parse_family(const std::string& name) {
  if (name == "coefficients") return PerturbationFamily::coefficients;
  if (name == "bumps") return PerturbationFamily::bumps;
  throw std::invalid_argument("unknown perturbation family '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  if (seed_offset < 0) throw std::invalid_argument("seed_offset must be >= 0");
  if (!(t1 > t0)) throw std::invalid_argument("t1 must exceed t0");
  if (!(breakout_threshold > 0.0))
    throw std::invalid_argument("breakout threshold must be positive");
  if (!(pattern_tol > 0.0))
    throw std::invalid_argument("pattern tolerance must be positive");
  if (!(success_threshold > 0.0 && success_threshold <= 1.0))
    throw std::invalid_argument("success threshold must lie in (0, 1]");
  if (n_bumps < 1) throw std::invalid_argument("n_bumps must be >= 1");
  if (n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
  if (admissibility_samples < 1)
    throw std::invalid_argument("admissibility_samples must be >= 1");
}

// ===========================================================================
// Random admissible perturbations
// ===========================================================================

namespace {

/// Emits one class program per input-isomorphism class: a sum of sine atoms
/// with random frequencies and phases. Each atom is bounded by its
/// coefficient, so the sup norm is certified by the coefficient sum, which
/// is normalized to eps per class.
std::string coefficient_source(const TypedNetwork& net, double eps,
                               std::mt19937_64& rng) {
  constexpr int kTerms = 3;
  std::string src;
  auto classes = input_isomorphism_classes(net);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    CellIndex rep = classes[k].front();

    // Arrow types present at the representative, with their tail dims.
    std::vector<std::pair<std::string, int>> in_types;
    for (ArrowIndex a : net.input_arrows(rep)) {
      const Arrow& ar = net.arrow(a);
      if (ar.internal) continue;
      std::string tid = net.arrow_type_id(ar.type);
      bool seen = false;
      for (const auto& [id, dim] : in_types) seen = seen || id == tid;
      if (!seen) in_types.emplace_back(tid, net.cell_dim(ar.tail));
    }

    double csum = 0.0;
    std::array<double, kTerms> c{};
    for (int j = 0; j < kTerms; ++j) {
      c[static_cast<std::size_t>(j)] = uniform(rng, -1.0, 1.0);
      csum += std::fabs(c[static_cast<std::size_t>(j)]);
    }
    double scale = csum > 0.0 ? eps / csum : 0.0;

    src += "class P" + std::to_string(k) + "(" + net.cell(rep).id + ") {\n";
    src += "  dx = ";
    for (int j = 0; j < kTerms; ++j) {
      if (j) src += "\n     + ";
      src += fmt(c[static_cast<std::size_t>(j)] * scale) + "*sin(" +
             fmt(uniform(rng, 0.5, 2.5)) + "*self";
      for (const auto& [tid, dim] : in_types) {
        src += " + " + fmt(uniform(rng, -1.5, 1.5)) + "*agg_mean(" + tid +
               ", u -> ";
        for (int d = 0; d < dim; ++d) {
          if (d) src += " + ";
          src += "comp(u, " + std::to_string(d) + ")";
        }
        src += ")";
      }
      src += " + " + fmt(uniform(rng, 0.0, 6.283185307179586)) + ")";
    }
    src += ";\n}\n";
  }
  return src;
}

}  // namespace

Perturbation random_admissible_perturbation(
    const TypedNetwork& net, PerturbationFamily family, double eps,
    std::uint64_t seed, const std::vector<Vec>& reference_segment, int n_bumps,
    int admissibility_samples) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  Perturbation pert;
  std::mt19937_64 rng = make_rng(substream(seed, 0));

  if (family == PerturbationFamily::coefficients) {
    pert.source = coefficient_source(net, eps, rng);
    pert.field = parse_field(pert.source, net);
    pert.certified_norm = eps;
    pert.c1_certified = false;
  } else {
    if (reference_segment.empty())
      throw std::invalid_argument(
          "the bump family needs a reference segment of states");

    CellIndex rep = input_isomorphism_classes(net).front().front();
    int self_dim = net.cell_dim(rep);
    std::vector<CellIndex> tails;
    for (ArrowIndex a : net.input_arrows(rep)) {
      if (net.arrow(a).internal) continue;
      tails.push_back(net.arrow(a).tail);
    }

    // Project the segment into the (own state, input states) space the raw
    // function sees.
    int point_dim = self_dim;
    for (CellIndex t : tails) point_dim += net.cell_dim(t);
    std::vector<Vec> points;
    points.reserve(reference_segment.size());
    for (const Vec& x : reference_segment) {
      if (x.size() != net.state_dim())
        throw std::invalid_argument("segment state has the wrong dimension");
      Vec p(point_dim);
      p.segment(0, self_dim) = net.cell_state(x, rep);
      int off = self_dim;
      for (CellIndex t : tails) {
        p.segment(off, net.cell_dim(t)) = net.cell_state(x, t);
        off += net.cell_dim(t);
      }
      points.push_back(std::move(p));
    }

    BumpBasis basis = build_bump_basis(points, n_bumps, substream(seed, 1));
    int order = static_cast<int>(input_isomorphisms(net, rep, rep).size());

    // Disjoint unit-C1 bumps: the C1 norm of the sum is max |z_n|; the
    // symmetrized field adds `order` aligned copies, so bound each
    // coefficient by eps / order.
    std::vector<double> z(static_cast<std::size_t>(n_bumps));
    double zmax = 0.0;
    for (double& v : z) {
      v = uniform(rng, 0.5, 1.0) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      zmax = std::max(zmax, std::fabs(v));
    }
    for (double& v : z) v *= order > 0 ? eps / (zmax * order) : 0.0;

    Vec y(self_dim);
    for (int i = 0; i < self_dim; ++i) y[i] = uniform(rng, -1.0, 1.0);
    double ymax = sup(y);
    if (ymax == 0.0) y[0] = 1.0; else y /= ymax;

    auto phi = [basis, z, self_dim, point_dim](
                   const Vec& self, const std::vector<Vec>& inputs) {
      Vec p(point_dim);
      p.segment(0, self_dim) = self;
      int off = self_dim;
      for (const Vec& in : inputs) {
        p.segment(off, in.size()) = in;
        off += static_cast<int>(in.size());
      }
      return basis.eval(p, z);
    };
    pert.field = symmetrize_callable(net, rep, phi, std::move(y));
    pert.certified_norm = eps;
    pert.c1_certified = true;
    pert.support_center = basis.ball_center;
    pert.support_radius = basis.ball_radius;
  }

  pert.admissibility = check_admissibility(*pert.field, admissibility_samples,
                                           1e-12, substream(seed, 2));
  if (!pert.admissibility.passed())
    throw std::runtime_error(
        "certification failure: perturbation admissibility violation " +
        std::to_string(pert.admissibility.max_violation));
  return pert;
}

// ===========================================================================
// Damped Newton
// ===========================================================================

NewtonResult damped_newton(const Field& f, Vec x, int max_iterations,
                           double tol) {
  NewtonResult res;
  res.residual = std::numeric_limits<double>::infinity();
  try {
    Vec fx = f.eval(x);
    double r = sup(fx);
    int it = 0;
    while (std::isfinite(r) && r > tol && it < max_iterations) {
      ++it;
      int n = static_cast<int>(x.size());
      Eigen::MatrixXd jac(n, n);
      for (int j = 0; j < n; ++j) {
        double h = 1e-6 * std::max(1.0, std::fabs(x[j]));
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        jac.col(j) = (f.eval(xp) - f.eval(xm)) / (2.0 * h);
      }
      Vec delta = jac.fullPivLu().solve(-fx);
      if (!delta.allFinite()) break;
      double lambda = 1.0;
      bool accepted = false;
      while (lambda >= 1e-4) {
        Vec xn = x + lambda * delta;
        Vec fn = f.eval(xn);
        double rn = sup(fn);
        if (std::isfinite(rn) && rn <= (1.0 - 0.5 * lambda) * r) {
          x = std::move(xn);
          fx = std::move(fn);
          r = rn;
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) break;
    }
    res.x = std::move(x);
    res.residual = r;
    res.iterations = it;
    res.converged = std::isfinite(r) && r <= tol;
  } catch (const EvalError&) {
    res.converged = false;
  }
  return res;
}

// ===========================================================================
// Synchrony breakout
// ===========================================================================

DecayStats unbalanced_decay_experiment(const TypedNetwork& net,
                                       const std::shared_ptr<const Field>& base,
                                       const Coloring& pattern,
                                       const ExperimentConfig& cfg) {
  cfg.validate();
  if (pattern.n_cells() != net.n_cells())
    throw std::invalid_argument("pattern size does not match the network");

  DecayStats stats;
  stats.pattern_balanced = is_balanced(net, pattern).balanced;
  stats.n_seeds = cfg.n_seeds;
  stats.seed_base = cfg.seed_base;
  stats.eps = cfg.eps;
  stats.threshold = cfg.breakout_threshold;
  stats.success_threshold = cfg.success_threshold;
  stats.breakout_times.assign(static_cast<std::size_t>(cfg.n_seeds),
                              std::numeric_limits<double>::quiet_NaN());
  stats.max_deviation.assign(static_cast<std::size_t>(cfg.n_seeds), 0.0);

  for (int i = 0; i < cfg.n_seeds; ++i) {
    std::uint64_t s = substream(
        cfg.seed_base, static_cast<std::uint64_t>(cfg.seed_offset + i));
    std::mt19937_64 rng = make_rng(substream(s, 2));
    Vec x0 = synchrony_start(net, pattern, rng);

    std::vector<Vec> segment;
    if (cfg.family == PerturbationFamily::bumps)
      segment = orbit_segment(*base, x0, cfg);
    Perturbation pert = random_admissible_perturbation(
        net, cfg.family, cfg.eps, substream(s, 1), segment, cfg.n_bumps,
        cfg.admissibility_samples);

    FieldSum field(net, {base, pert.field});
    SimParams sp = cfg.sim;
    sp.t0 = cfg.t0;
    sp.t1 = cfg.t1;
    Trajectory traj = integrate(field, x0, sp);
    if (!traj.ok())
      stats.notes.push_back("seed " + std::to_string(i) +
                            ": integration ended with status " +
                            to_string(traj.status));

    double& worst = stats.max_deviation[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < traj.size(); ++k) {
      double dev = pattern_deviation(net, pattern, traj.states[k]);
      worst = std::max(worst, dev);
      if (dev > cfg.breakout_threshold) {
        stats.breakout_times[static_cast<std::size_t>(i)] = traj.times[k];
        ++stats.n_breakout;
        break;
      }
    }
  }

  stats.fraction =
      static_cast<double>(stats.n_breakout) / static_cast<double>(cfg.n_seeds);
  stats.verdict_valid = cfg.n_seeds >= 30;
  if (!stats.verdict_valid)
    stats.notes.push_back("no statistical verdict: fewer than 30 seeds");
  stats.success = stats.verdict_valid && stats.fraction >= cfg.success_threshold;
  return stats;
}

// ===========================================================================
// Equilibrium patterns
// ===========================================================================

EquilibriumStats equilibrium_pattern_experiment(
    const TypedNetwork& net, const std::shared_ptr<const Field>& base,
    const ExperimentConfig& cfg) {
  cfg.validate();
  EquilibriumStats stats;
  stats.n_seeds = cfg.n_seeds;
  stats.seed_base = cfg.seed_base;
  stats.eps = cfg.eps;

  std::mt19937_64 rng = make_rng(substream(cfg.seed_base, 0xE0));
  for (int s = 0; s < cfg.n_starts; ++s) {
    Vec x0(net.state_dim());
    for (int i = 0; i < x0.size(); ++i) x0[i] = uniform(rng, -2.0, 2.0);
    NewtonResult nr = damped_newton(*base, std::move(x0));
    if (!nr.converged) {
      ++stats.n_failed_starts;
      continue;
    }
    bool fresh = true;
    for (const EquilibriumRecord& rec : stats.base_equilibria)
      fresh = fresh && sup(rec.x - nr.x) > 1e-6;
    if (!fresh) continue;
    EquilibriumRecord rec;
    rec.x = nr.x;
    rec.residual = nr.residual;
    rec.pattern = pattern_at(net, nr.x, cfg.pattern_tol);
    rec.balanced = is_balanced(net, rec.pattern).balanced;
    if (!rec.balanced) ++stats.n_base_unbalanced;
    stats.base_equilibria.push_back(std::move(rec));
  }
  if (stats.base_equilibria.empty()) {
    stats.notes.push_back("no equilibria found from " +
                          std::to_string(cfg.n_starts) + " starts");
    return stats;
  }

  for (int i = 0; i < cfg.n_seeds; ++i) {
    std::uint64_t s = substream(
        cfg.seed_base, static_cast<std::uint64_t>(cfg.seed_offset + i));
    std::vector<Vec> segment;
    if (cfg.family == PerturbationFamily::bumps)
      segment = orbit_segment(*base, stats.base_equilibria.front().x +
                                         Vec::Constant(net.state_dim(), 0.1),
                              cfg);
    Perturbation pert = random_admissible_perturbation(
        net, cfg.family, cfg.eps, substream(s, 1), segment, cfg.n_bumps,
        cfg.admissibility_samples);
    FieldSum field(net, {base, pert.field});

    bool any = false, clean = true;
    for (const EquilibriumRecord& rec : stats.base_equilibria) {
      NewtonResult nr = damped_newton(field, rec.x);
      if (!nr.converged) continue;
      any = true;
      ++stats.n_continued;
      Coloring pat = pattern_at(net, nr.x, cfg.pattern_tol);
      if (!is_balanced(net, pat).balanced) {
        ++stats.n_continued_unbalanced;
        clean = false;
      }
    }
    if (any) {
      ++stats.n_seeds_effective;
      if (clean) ++stats.n_seeds_clean;
    }
  }

  if (stats.n_seeds_effective < stats.n_seeds)
    stats.notes.push_back(
        std::to_string(stats.n_seeds - stats.n_seeds_effective) +
        " seed(s) had no converged continuation");
  stats.verdict_valid = stats.n_seeds_effective >= 30;
  if (!stats.verdict_valid)
    stats.notes.push_back(
        "no statistical verdict: fewer than 30 effective seeds");
  stats.success =
      stats.verdict_valid &&
      static_cast<double>(stats.n_seeds_clean) >=
          cfg.success_threshold * static_cast<double>(stats.n_seeds_effective);
  return stats;
}

// ===========================================================================
// Rigidity probing
// ===========================================================================

namespace {

struct ShootResult {
  Vec x0;
  double period = 0.0;
  bool converged = false;
};

/// Fixed-phase single shooting for a periodic orbit: unknowns (x0, T),
/// equations (flow_T(x0) - x0, x0[anchor] - anchor_value).
ShootResult shoot_periodic(const Field& f, Vec x0, double period, int anchor,
                           double anchor_value, const SimParams& sim_base) {
  ShootResult out;
  int n = static_cast<int>(x0.size());
  auto flow = [&](const Vec& start, double T) -> Vec {
    SimParams sp = sim_base;
    sp.t0 = 0.0;
    sp.t1 = T;
    Trajectory traj = integrate(f, start, sp);
    if (!traj.ok()) throw EvalError("", "shooting integration failed");
    return traj.states.back();
  };
  auto residual = [&](const Vec& start, double T) -> Vec {
    Vec r(n + 1);
    r.segment(0, n) = flow(start, T) - start;
    r[n] = start[anchor] - anchor_value;
    return r;
  };

  try {
    Vec fx = residual(x0, period);
    double r = sup(fx);
    for (int it = 0; it < 30 && r > 1e-9; ++it) {
      Eigen::MatrixXd jac(n + 1, n + 1);
      for (int j = 0; j <= n; ++j) {
        double base_v = j < n ? x0[j] : period;
        double h = 1e-6 * std::max(1.0, std::fabs(base_v));
        Vec xp = x0, xm = x0;
        double tp = period, tm = period;
        if (j < n) {
          xp[j] += h;
          xm[j] -= h;
        } else {
          tp += h;
          tm -= h;
        }
        jac.col(j) = (residual(xp, tp) - residual(xm, tm)) / (2.0 * h);
      }
      Vec delta = jac.fullPivLu().solve(-fx);
      if (!delta.allFinite()) break;
      double lambda = 1.0;
      bool accepted = false;
      while (lambda >= 1e-4) {
        Vec xn = x0 + lambda * delta.segment(0, n);
        double tn = period + lambda * delta[n];
        if (tn > 0.0) {
          Vec fn = residual(xn, tn);
          double rn = sup(fn);
          if (std::isfinite(rn) && rn <= (1.0 - 0.5 * lambda) * r) {
            x0 = std::move(xn);
            period = tn;
            fx = std::move(fn);
            r = rn;
            accepted = true;
            break;
          }
        }
        lambda *= 0.5;
      }
      if (!accepted) break;
    }
    out.converged = r <= 1e-9;
    out.x0 = std::move(x0);
    out.period = period;
  } catch (const EvalError&) {
    out.converged = false;
  }
  return out;
}

Coloring orbit_pattern(const TypedNetwork& net, const Field& f, const Vec& x0,
                       double period, double tol, const SimParams& sim_base) {
  SimParams sp = sim_base;
  sp.t0 = 0.0;
  sp.t1 = period;
  Trajectory traj = integrate(f, x0, sp);
  if (!traj.ok())
    throw std::runtime_error("orbit integration failed: " +
                             to_string(traj.status));
  return pattern_on_interval(net, traj, 0.0, period, tol).pattern;
}

}  // namespace

RigidityVerdict rigidity_probe(const TypedNetwork& net,
                               const std::shared_ptr<const Field>& base,
                               const Vec& x0_guess, SolutionFamily family,
                               const ExperimentConfig& cfg) {
  cfg.validate();
  RigidityVerdict v;
  v.family = family;
  v.eps = cfg.eps;
  v.n_seeds = cfg.n_seeds;
  v.seed_base = cfg.seed_base;

  SimParams sim = cfg.sim;
  int anchor = 0;
  double anchor_value = 0.0;

  if (family == SolutionFamily::equilibrium) {
    NewtonResult nr = damped_newton(*base, x0_guess);
    if (!nr.converged)
      throw std::runtime_error("base equilibrium continuation failed");
    v.base_solution = nr.x;
    v.base_pattern = pattern_at(net, nr.x, cfg.pattern_tol);
  } else {
    if (!(cfg.period_guess > 0.0))
      throw std::invalid_argument("period_guess must be positive");
    Vec rate = base->eval(x0_guess);
    rate.cwiseAbs().maxCoeff(&anchor);
    anchor_value = x0_guess[anchor];
    ShootResult sr = shoot_periodic(*base, x0_guess, cfg.period_guess, anchor,
                                    anchor_value, sim);
    if (!sr.converged)
      throw std::runtime_error("base periodic orbit continuation failed");
    v.base_solution = sr.x0;
    v.base_period = sr.period;
    v.base_pattern =
        orbit_pattern(net, *base, sr.x0, sr.period, cfg.pattern_tol, sim);
  }
  v.balanced = is_balanced(net, v.base_pattern).balanced;

  for (int i = 0; i < cfg.n_seeds; ++i) {
    std::uint64_t s = substream(
        cfg.seed_base, static_cast<std::uint64_t>(cfg.seed_offset + i));
    std::vector<Vec> segment;
    if (cfg.family == PerturbationFamily::bumps) {
      if (family == SolutionFamily::periodic_orbit) {
        segment = orbit_segment(*base, v.base_solution, cfg);
      } else {
        // An equilibrium orbit is a point; place supports on a short line
        // through it so the perturbation acts where the solution lives.
        std::mt19937_64 rng = make_rng(substream(s, 3));
        Vec dir(net.state_dim());
        for (int k = 0; k < dir.size(); ++k) dir[k] = uniform(rng, -1.0, 1.0);
        double dn = dir.norm();
        if (dn == 0.0) dir[0] = 1.0; else dir /= dn;
        for (int k = 0; k < 64; ++k)
          segment.push_back(v.base_solution +
                            (static_cast<double>(k) / 63.0 - 0.5) * dir);
      }
    }
    Perturbation pert = random_admissible_perturbation(
        net, cfg.family, cfg.eps, substream(s, 1), segment, cfg.n_bumps,
        cfg.admissibility_samples);
    FieldSum field(net, {base, pert.field});

    Coloring continued;
    bool converged = false;
    if (family == SolutionFamily::equilibrium) {
      NewtonResult nr = damped_newton(field, v.base_solution);
      if (nr.converged) {
        continued = pattern_at(net, nr.x, cfg.pattern_tol);
        converged = true;
      }
    } else {
      ShootResult sr = shoot_periodic(field, v.base_solution, v.base_period,
                                      anchor, anchor_value, sim);
      if (sr.converged && sr.period > 0.1 * v.base_period &&
          sr.period < 10.0 * v.base_period) {
        try {
          continued = orbit_pattern(net, field, sr.x0, sr.period,
                                    cfg.pattern_tol, sim);
          converged = true;
        } catch (const std::runtime_error&) {
          converged = false;
        }
      }
    }
    if (!converged) continue;
    ++v.n_effective;
    if (!(continued == v.base_pattern)) ++v.n_pattern_changes;
  }

  v.rigid = v.n_effective >= 1 && v.n_pattern_changes == 0;
  if (v.n_effective < v.n_seeds)
    v.notes.push_back(std::to_string(v.n_seeds - v.n_effective) +
                      " continuation(s) failed; effective n = " +
                      std::to_string(v.n_effective));
  v.notes.push_back(
      std::string(v.rigid ? "rigid" : "not rigid") + " at resolution (eps = " +
      std::to_string(cfg.eps) + ", seeds = " + std::to_string(v.n_effective) +
      ")");
  return v;
}

}  // namespace ccn
