#include "ccn/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ccn {
namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

Coloring coloring_from_uf(UnionFind& uf, int n) {
  Coloring col;
  col.color.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) col.color[static_cast<std::size_t>(c)] = uf.find(c);
  col.canonicalize();
  return col;
}

/// Meet of two partitions: cells share a class iff they do in both.
Coloring meet(const Coloring& a, const Coloring& b) {
  std::map<std::pair<int, int>, int> remap;
  Coloring out;
  out.color.resize(a.color.size());
  for (std::size_t c = 0; c < a.color.size(); ++c) {
    auto key = std::make_pair(a.color[c], b.color[c]);
    auto it = remap.emplace(key, static_cast<int>(remap.size())).first;
    out.color[c] = it->second;
  }
  out.canonicalize();
  return out;
}

/// Stored grid times inside [a, b], the endpoints, and the midpoints of
/// consecutive retained times, sorted.
std::vector<double> sample_times(const Trajectory& traj, double a, double b) {
  std::vector<double> base;
  base.push_back(a);
  for (double t : traj.times)
    if (t > a && t < b) base.push_back(t);
  if (b > a) base.push_back(b);
  std::vector<double> out;
  out.reserve(2 * base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out.push_back(base[i]);
    if (i + 1 < base.size()) out.push_back(0.5 * (base[i] + base[i + 1]));
  }
  return out;
}

}  // namespace

// ===========================================================================
// Patterns
// ===========================================================================

Coloring pattern_at(const TypedNetwork& net, const Vec& x, double tol) {
  UnionFind uf(net.n_cells());
  for (CellIndex a = 0; a < net.n_cells(); ++a)
    for (CellIndex b = a + 1; b < net.n_cells(); ++b) {
      if (net.cell(a).type != net.cell(b).type) continue;
      if (net.cell_distance(x, a, b) <= tol) uf.unite(a, b);
    }
  return coloring_from_uf(uf, net.n_cells());
}

namespace {

PatternReport report_over_samples(const TypedNetwork& net,
                                  const std::vector<double>& times,
                                  const std::vector<Vec>& states, double tol) {
  PatternReport rep;
  rep.t_begin = times.front();
  rep.t_end = times.back();
  rep.tol = tol;

  Coloring pat = pattern_at(net, states.front(), tol);
  for (std::size_t i = 1; i < states.size(); ++i)
    pat = meet(pat, pattern_at(net, states[i], tol));
  rep.pattern = pat;

  for (CellIndex a = 0; a < net.n_cells(); ++a) {
    for (CellIndex b = a + 1; b < net.n_cells(); ++b) {
      if (net.cell(a).type != net.cell(b).type) continue;
      PairEvidence ev;
      ev.a = a;
      ev.b = b;
      ev.same_color = pat.same(a, b);
      ev.max_deviation = 0.0;
      ev.min_separation = std::numeric_limits<double>::infinity();
      bool matched_somewhere = false;
      for (const Vec& x : states) {
        double d = net.cell_distance(x, a, b);
        ev.max_deviation = std::max(ev.max_deviation, d);
        ev.min_separation = std::min(ev.min_separation, d);
        if (d <= tol) matched_somewhere = true;
      }
      if (ev.same_color) {
        // Transitive closure can merge a pair whose direct deviation sits in
        // the gray band; that merge is reported, not trusted silently.
        ev.ambiguous = ev.max_deviation > tol;
      } else {
        ev.ambiguous = matched_somewhere || ev.min_separation <= 10.0 * tol;
      }
      rep.pairs.push_back(ev);
    }
  }
  rep.certificate = is_balanced(net, rep.pattern);
  return rep;
}

}  // namespace

PatternReport pattern_at_report(const TypedNetwork& net, const Vec& x,
                                double tol, double t) {
  return report_over_samples(net, {t}, {x}, tol);
}

PatternReport pattern_on_interval(const TypedNetwork& net,
                                  const Trajectory& traj, double t_begin,
                                  double t_end, double tol) {
  if (t_begin > t_end)
    throw std::invalid_argument("empty interval: t_begin > t_end");
  std::vector<double> times = sample_times(traj, t_begin, t_end);
  std::vector<Vec> states;
  states.reserve(times.size());
  for (double t : times) states.push_back(traj.dense_eval(t));
  return report_over_samples(net, times, states, tol);
}

// ===========================================================================
// Constant-pattern windows
// ===========================================================================

WindowReport constant_pattern_window(const TypedNetwork& net,
                                     const Trajectory& traj, double t_begin,
                                     double t_end, double tol, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("need at least two samples");
  if (t_begin >= t_end)
    throw std::invalid_argument("empty interval: t_begin >= t_end");

  WindowReport rep;
  rep.tol = tol;
  double h = (t_end - t_begin) / static_cast<double>(n_samples - 1);
  rep.resolution = h;

  std::vector<double> times(static_cast<std::size_t>(n_samples));
  std::vector<Coloring> pats(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    double t = i + 1 == n_samples ? t_end
                                  : t_begin + static_cast<double>(i) * h;
    times[static_cast<std::size_t>(i)] = t;
    pats[static_cast<std::size_t>(i)] = pattern_at(net, traj.dense_eval(t), tol);
  }

  std::size_t i = 0;
  while (i < times.size()) {
    std::size_t j = i;
    while (j + 1 < times.size() && pats[j + 1] == pats[i]) ++j;
    PatternWindow w;
    w.t_begin = times[i];
    w.t_end = times[j];
    w.pattern = pats[i];
    rep.windows.push_back(w);

    // Equalities are closed conditions, so as the window's pattern breaks
    // it may only coarsen at the bordering sample; anything else is a
    // resolution artifact worth surfacing.
    auto check_neighbor = [&](std::size_t k) {
      if (!is_finer(pats[i], pats[k]))
        rep.notes.push_back(
            "semicontinuity violated at resolution " + std::to_string(h) +
            " near t = " + std::to_string(times[k]) +
            ": the bordering sample's pattern is not a coarsening");
    };
    if (i > 0) check_neighbor(i - 1);
    if (j + 1 < times.size()) check_neighbor(j + 1);
    i = j + 1;
  }
  return rep;
}

// ===========================================================================
// Stationary cells
// ===========================================================================

StationaryReport stationary_cells(const TypedNetwork& net, const Field* f,
                                  const Trajectory& traj, double t_begin,
                                  double t_end, double tol_rate) {
  if (t_begin > t_end)
    throw std::invalid_argument("empty interval: t_begin > t_end");
  StationaryReport rep;
  rep.t_begin = t_begin;
  rep.t_end = t_end;
  rep.tol_rate = tol_rate;
  rep.max_rate.assign(static_cast<std::size_t>(net.n_cells()), 0.0);

  auto absorb_rate = [&](const Vec& rate) {
    for (CellIndex c = 0; c < net.n_cells(); ++c) {
      double r = rate.segment(net.cell_offset(c), net.cell_dim(c))
                     .cwiseAbs()
                     .maxCoeff();
      rep.max_rate[static_cast<std::size_t>(c)] =
          std::max(rep.max_rate[static_cast<std::size_t>(c)], r);
    }
  };

  if (f != nullptr) {
    for (double t : sample_times(traj, t_begin, t_end))
      absorb_rate(f->eval(traj.dense_eval(t)));
  } else {
    if (traj.derivs.size() != traj.times.size() || traj.derivs_estimated)
      throw std::invalid_argument(
          "stationarity needs field-evaluated rates: pass the field or use a "
          "trajectory with exact stored derivatives");
    bool any = false;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      if (traj.times[i] < t_begin || traj.times[i] > t_end) continue;
      absorb_rate(traj.derivs[i]);
      any = true;
    }
    if (!any) throw std::invalid_argument("no stored samples in the interval");
    rep.notes.push_back(
        "rates taken from stored derivatives at grid points only");
  }

  std::vector<bool> is_stat(static_cast<std::size_t>(net.n_cells()), false);
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    if (rep.max_rate[static_cast<std::size_t>(c)] <= tol_rate) {
      is_stat[static_cast<std::size_t>(c)] = true;
      rep.stationary.push_back(c);
    }
  }

  for (CellIndex c : rep.stationary) {
    for (ArrowIndex a : net.input_arrows(c)) {
      const Arrow& ar = net.arrow(a);
      if (ar.internal) continue;
      if (!is_stat[static_cast<std::size_t>(ar.tail)]) {
        rep.violations.push_back({c, ar.tail});
        rep.notes.push_back(
            "non-generic configuration detected: cell '" + net.cell(c).id +
            "' is stationary while its input cell '" + net.cell(ar.tail).id +
            "' moves");
      }
    }
  }
  return rep;
}

// ===========================================================================
// Phase shifts
// ===========================================================================

PhaseShiftReport detect_phase_shift(const TypedNetwork& net,
                                    const Trajectory& traj, double theta,
                                    double tol, int n_samples) {
  if (theta < 0.0) throw std::invalid_argument("theta must be nonnegative");
  if (n_samples < 2) throw std::invalid_argument("need at least two samples");
  double span = traj.t_end() - traj.t_begin();
  if (theta >= span)
    throw std::invalid_argument("theta exceeds the trajectory span");

  PhaseShiftReport rep;
  rep.theta = theta;
  rep.tol = tol;
  rep.t_begin = traj.t_begin();
  rep.t_end = traj.t_end() - theta;

  DoubledNetwork doubled = doubled_network(net);
  const TypedNetwork& dnet = doubled.net;
  int dim = net.state_dim();

  Coloring pat;
  bool first = true;
  Vec X(2 * dim);
  for (int i = 0; i < n_samples; ++i) {
    double s = rep.t_begin + (rep.t_end - rep.t_begin) * static_cast<double>(i) /
                                 static_cast<double>(n_samples - 1);
    X.segment(0, dim) = traj.dense_eval(s);
    X.segment(dim, dim) = traj.dense_eval(s + theta);
    Coloring p = pattern_at(dnet, X, tol);
    pat = first ? p : meet(pat, p);
    first = false;
  }
  rep.doubled_pattern = pat;

  std::set<std::pair<CellIndex, CellIndex>> pairs;
  for (CellIndex a = 0; a < net.n_cells(); ++a) {
    for (CellIndex b = 0; b < net.n_cells(); ++b) {
      CellIndex a1 = doubled.copy1[static_cast<std::size_t>(a)];
      CellIndex b2 = doubled.copy2[static_cast<std::size_t>(b)];
      if (!pat.same(a1, b2)) continue;
      if (a == b)
        rep.theta_periodic.push_back(a);
      else
        pairs.insert({std::min(a, b), std::max(a, b)});
    }
  }
  rep.shift_pairs.assign(pairs.begin(), pairs.end());

  BalancednessCertificate cert = is_balanced(dnet, pat);
  rep.balanced = cert.balanced;
  if (!cert.balanced) {
    rep.notes.push_back(
        "doubled-network pattern is unbalanced (witness cells '" +
        dnet.cell(cert.witness_a).id + "', '" + dnet.cell(cert.witness_b).id +
        "'): the phase relation cannot be generic");
    auto aligns = [&](CellIndex a, CellIndex b) {
      return has_color_preserving_iso(
          dnet, pat, doubled.copy1[static_cast<std::size_t>(a)],
          doubled.copy2[static_cast<std::size_t>(b)]);
    };
    for (const auto& [a, b] : rep.shift_pairs) {
      if (!aligns(a, b) || !aligns(b, a)) {
        rep.non_generic_pairs.push_back({a, b});
        rep.notes.push_back("non-generic configuration detected: cells '" +
                            net.cell(a).id + "' and '" + net.cell(b).id +
                            "' are shift-related without a shift-aligning "
                            "input isomorphism");
      }
    }
    for (CellIndex c : rep.theta_periodic) {
      if (!aligns(c, c)) {
        rep.non_generic_pairs.push_back({c, c});
        rep.notes.push_back("non-generic configuration detected: cell '" +
                            net.cell(c).id +
                            "' is shift-periodic without a shift-aligning "
                            "input isomorphism");
      }
    }
  }
  return rep;
}

// ===========================================================================
// Periodicity
// ===========================================================================

namespace {

/// Normalized autocorrelation of the (dim x n) series rows, aggregated:
/// r(L) = sum_d A_d / sqrt(sum_d B_d * sum_d C_d) over the overlap windows.
std::vector<double> autocorrelation(const std::vector<std::vector<double>>& z,
                                    int n, int max_lag) {
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int lag = 1; lag <= max_lag; ++lag) {
    double a = 0.0, bsum = 0.0, csum = 0.0;
    for (const auto& comp : z) {
      for (int i = 0; i + lag < n; ++i) {
        a += comp[static_cast<std::size_t>(i)] *
             comp[static_cast<std::size_t>(i + lag)];
        bsum += comp[static_cast<std::size_t>(i)] *
                comp[static_cast<std::size_t>(i)];
        csum += comp[static_cast<std::size_t>(i + lag)] *
                comp[static_cast<std::size_t>(i + lag)];
      }
    }
    double denom = std::sqrt(bsum * csum);
    r[static_cast<std::size_t>(lag)] = denom > 0.0 ? a / denom : 0.0;
  }
  return r;
}

struct PeriodEstimate {
  CellPeriod::Kind kind = CellPeriod::Kind::aperiodic;
  double period = 0.0;
  double peak = 0.0;
};

PeriodEstimate estimate_period(const std::vector<std::vector<double>>& series,
                               int n, double dt, int min_lag, double amp_tol,
                               double min_corr) {
  PeriodEstimate est;
  double amp = 0.0;
  std::vector<std::vector<double>> z = series;
  for (auto& comp : z) {
    double mean = std::accumulate(comp.begin(), comp.end(), 0.0) /
                  static_cast<double>(n);
    for (double& v : comp) v -= mean;
    for (double v : comp) amp = std::max(amp, std::fabs(v));
  }
  if (amp <= amp_tol) {
    est.kind = CellPeriod::Kind::constant;
    return est;
  }

  int max_lag = n / 3;  // at least three putative periods in the window
  if (min_lag >= max_lag) return est;
  std::vector<double> r = autocorrelation(z, n, max_lag);
  for (int lag = std::max(min_lag, 2); lag + 1 <= max_lag; ++lag) {
    double r0 = r[static_cast<std::size_t>(lag)];
    if (r0 < min_corr) continue;
    double rm = r[static_cast<std::size_t>(lag) - 1];
    double rp = r[static_cast<std::size_t>(lag) + 1];
    if (r0 < rm || r0 < rp) continue;
    double denom = rm - 2.0 * r0 + rp;
    double delta = std::fabs(denom) > 1e-14 ? 0.5 * (rm - rp) / denom : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    est.kind = CellPeriod::Kind::periodic;
    est.period = (static_cast<double>(lag) + delta) * dt;
    est.peak = r0;
    return est;
  }
  return est;
}

/// Does the cell admit a period k*theta (k = 1..K) compatible with its own
/// minimal period p, i.e. k*theta is an integer multiple of p within tol?
bool admits_multiple_period(double theta, double p, int max_k, double rel_tol) {
  for (int k = 1; k <= max_k; ++k) {
    double target = static_cast<double>(k) * theta;
    double m = std::rint(target / p);
    if (m < 1.0) continue;
    if (std::fabs(target - m * p) <= rel_tol * target) return true;
  }
  return false;
}

}  // namespace

PeriodicityReport periodicity_report(const TypedNetwork& net,
                                     const Trajectory& traj,
                                     const PeriodicityOptions& opt) {
  if (traj.size() < 8 || traj.t_end() <= traj.t_begin())
    throw std::invalid_argument("insufficient span for period estimation");

  PeriodicityReport rep;
  rep.options = opt;

  int n = opt.n_resample;
  double a = traj.t_begin(), b = traj.t_end();
  double dt = (b - a) / static_cast<double>(n - 1);
  double mean_grid =
      (b - a) / static_cast<double>(traj.size() - 1);
  int min_lag = std::max(2, static_cast<int>(std::ceil(10.0 * mean_grid / dt)));

  // Uniform resample, one row per state component.
  std::vector<std::vector<double>> resampled(
      static_cast<std::size_t>(net.state_dim()),
      std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    double t = i + 1 == n ? b : a + static_cast<double>(i) * dt;
    Vec x = traj.dense_eval(t);
    for (int j = 0; j < x.size(); ++j)
      resampled[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = x[j];
  }

  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    std::vector<std::vector<double>> series;
    for (int j = 0; j < net.cell_dim(c); ++j)
      series.push_back(
          resampled[static_cast<std::size_t>(net.cell_offset(c) + j)]);
    PeriodEstimate est = estimate_period(series, n, dt, min_lag, opt.tol,
                                         opt.min_correlation);
    CellPeriod cp;
    cp.cell = c;
    cp.kind = est.kind;
    cp.period = est.period;
    cp.peak_correlation = est.peak;
    rep.cells.push_back(cp);
  }

  // Reachability over user arrows: upstream[u][c] = u can influence c.
  int nc = net.n_cells();
  std::vector<std::vector<bool>> reach(
      static_cast<std::size_t>(nc),
      std::vector<bool>(static_cast<std::size_t>(nc), false));
  for (ArrowIndex a2 = 0; a2 < net.n_arrows(false); ++a2)
    reach[static_cast<std::size_t>(net.arrow(a2).tail)]
         [static_cast<std::size_t>(net.arrow(a2).head)] = true;
  for (int k = 0; k < nc; ++k)
    for (int u = 0; u < nc; ++u)
      for (int v = 0; v < nc; ++v)
        if (reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)] &&
            reach[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)])
          reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = true;

  rep.transitive = true;
  for (int u = 0; u < nc && rep.transitive; ++u)
    for (int v = 0; v < nc && rep.transitive; ++v)
      if (u != v && !reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)])
        rep.transitive = false;

  for (const CellPeriod& cp : rep.cells) {
    if (cp.kind != CellPeriod::Kind::periodic) continue;
    for (CellIndex u = 0; u < nc; ++u) {
      if (u == cp.cell ||
          !reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(cp.cell)])
        continue;
      const CellPeriod& up = rep.cells[static_cast<std::size_t>(u)];
      if (up.kind == CellPeriod::Kind::constant) continue;
      if (up.kind == CellPeriod::Kind::aperiodic) {
        rep.violations.push_back(
            {cp.cell, u,
             "non-generic configuration detected: upstream cell '" +
                 net.cell(u).id + "' of periodic cell '" +
                 net.cell(cp.cell).id + "' is not periodic"});
        continue;
      }
      if (!admits_multiple_period(cp.period, up.period, opt.max_harmonic,
                                  opt.rel_tol)) {
        rep.violations.push_back(
            {cp.cell, u,
             "non-generic configuration detected: upstream cell '" +
                 net.cell(u).id + "' (period " + std::to_string(up.period) +
                 ") admits no period k*" + std::to_string(cp.period) +
                 " for k <= " + std::to_string(opt.max_harmonic)});
      }
    }
  }

  bool any_periodic = std::any_of(rep.cells.begin(), rep.cells.end(),
                                  [](const CellPeriod& cp) {
                                    return cp.kind == CellPeriod::Kind::periodic;
                                  });
  if (rep.transitive && any_periodic) {
    PeriodEstimate whole = estimate_period(resampled, n, dt, min_lag, opt.tol,
                                           opt.min_correlation);
    if (whole.kind == CellPeriod::Kind::periodic) {
      rep.whole_state_period = whole.period;
      for (const CellPeriod& cp : rep.cells) {
        if (cp.kind != CellPeriod::Kind::periodic) continue;
        bool ok = false;
        for (int k = 1; k <= opt.max_harmonic && !ok; ++k)
          ok = std::fabs(whole.period - static_cast<double>(k) * cp.period) <=
               opt.rel_tol * whole.period;
        if (!ok)
          rep.violations.push_back(
              {cp.cell, -1,
               "non-generic configuration detected: whole-state period " +
                   std::to_string(whole.period) +
                   " is not a small multiple of cell period " +
                   std::to_string(cp.period)});
      }
    } else {
      rep.notes.push_back(
          "transitive network with periodic cells, but no whole-state period "
          "was established at this resolution");
    }
  }
  return rep;
}

}  // namespace ccn
