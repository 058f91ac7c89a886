#include "ccn/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ccn/network_io.hpp"

namespace ccn {

static_assert(std::endian::native == std::endian::little,
              "trajectory cache assumes a little-endian host");

std::string to_string(SimStatus s) {
  switch (s) {
    case SimStatus::ok: return "ok";
    case SimStatus::blowup: return "blowup";
    case SimStatus::nonfinite: return "nonfinite";
    case SimStatus::step_underflow: return "step-underflow";
    case SimStatus::field_error: return "field-error";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "rk4") return Method::rk4;
  if (name == "dopri54") return Method::dopri54;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected rk4 or dopri54)");
}

std::string to_string(Method m) {
  return m == Method::rk4 ? "rk4" : "dopri54";
}

// ===========================================================================
// Dense output
// ===========================================================================

Vec Trajectory::dense_eval(double t) const {
  if (times.empty()) throw std::out_of_range("empty trajectory");
  if (derivs.size() != times.size())
    throw std::logic_error(
        "dense evaluation needs per-sample derivatives; call "
        "estimate_tangents() on imported data");
  if (times.front() > times.back())
    throw std::logic_error("dense evaluation requires a forward time grid");

  double pad = 1e-9 * std::max(1.0, times.back() - times.front());
  if (t < times.front() - pad || t > times.back() + pad)
    throw std::out_of_range("time " + std::to_string(t) +
                            " outside the stored span");
  t = std::clamp(t, times.front(), times.back());
  if (times.size() == 1) return states.front();

  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i = static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(it - times.begin() - 1, 0,
                                 static_cast<std::ptrdiff_t>(times.size()) - 2));
  double h = times[i + 1] - times[i];
  double s = (t - times[i]) / h;
  double s2 = s * s, s3 = s2 * s;
  double h00 = 2 * s3 - 3 * s2 + 1;
  double h10 = s3 - 2 * s2 + s;
  double h01 = -2 * s3 + 3 * s2;
  double h11 = s3 - s2;
  return h00 * states[i] + (h10 * h) * derivs[i] + h01 * states[i + 1] +
         (h11 * h) * derivs[i + 1];
}

void Trajectory::estimate_tangents() {
  if (derivs.size() == times.size() && !times.empty()) return;
  derivs.assign(times.size(), Vec());
  std::size_t n = times.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (n == 1) {
      derivs[i] = Vec::Zero(states[i].size());
    } else if (i == 0) {
      derivs[i] = (states[1] - states[0]) / (times[1] - times[0]);
    } else if (i == n - 1) {
      derivs[i] = (states[n - 1] - states[n - 2]) / (times[n - 1] - times[n - 2]);
    } else {
      derivs[i] = (states[i + 1] - states[i - 1]) / (times[i + 1] - times[i - 1]);
    }
  }
  derivs_estimated = true;
}

// ===========================================================================
// Integration
// ===========================================================================

namespace {

bool all_finite(const Vec& x) { return x.allFinite(); }

/// Wraps field evaluation so guarded-domain failures abort the run instead
/// of propagating.
struct SafeField {
  const Field& f;
  Trajectory& traj;
  bool failed = false;

  bool eval(const Vec& x, Vec& out) {
    try {
      out = f.eval(x);
      return true;
    } catch (const EvalError& e) {
      traj.status = SimStatus::field_error;
      traj.message = e.what();
      failed = true;
      return false;
    }
  }
};

void store(Trajectory& traj, double t, const Vec& x, const Vec& dx) {
  traj.times.push_back(t);
  traj.states.push_back(x);
  traj.derivs.push_back(dx);
}

}  // namespace

Trajectory integrate(const Field& f, const Vec& x0, const SimParams& p) {
  const TypedNetwork& net = f.net();
  if (static_cast<int>(x0.size()) != net.state_dim())
    throw std::invalid_argument("initial state has the wrong dimension");

  Trajectory traj;
  traj.method = to_string(p.method);
  SafeField sf{f, traj};

  if (!all_finite(x0)) {
    traj.status = SimStatus::nonfinite;
    traj.message = "initial state is not finite";
    return traj;
  }
  if (x0.cwiseAbs().maxCoeff() > p.blowup) {
    traj.status = SimStatus::blowup;
    traj.message = "initial state exceeds the blow-up bound";
    return traj;
  }

  Vec x = x0;
  Vec k1(x.size());
  if (!sf.eval(x, k1)) return traj;
  store(traj, p.t0, x, k1);

  double span = p.t1 - p.t0;
  if (span == 0.0) return traj;
  double dir = span > 0.0 ? 1.0 : -1.0;
  double span_abs = std::fabs(span);

  auto check_accepted = [&](double t, const Vec& y, const Vec& dy) -> bool {
    if (!all_finite(y)) {
      traj.status = SimStatus::nonfinite;
      traj.message = "state became non-finite near t = " + std::to_string(t);
      return false;
    }
    store(traj, t, y, dy);
    ++traj.n_accepted;
    if (y.cwiseAbs().maxCoeff() > p.blowup) {
      traj.status = SimStatus::blowup;
      traj.message = "sup-norm bound " + std::to_string(p.blowup) +
                     " crossed near t = " + std::to_string(t);
      return false;
    }
    return true;
  };

  if (p.method == Method::rk4) {
    if (p.dt <= 0.0)
      throw std::invalid_argument("rk4 requires a positive dt");
    long nsteps = std::max<long>(1, static_cast<long>(std::ceil(span_abs / p.dt)));
    if (nsteps > p.max_steps)
      throw std::invalid_argument("rk4 step count exceeds max_steps");
    double h = span / static_cast<double>(nsteps);
    Vec k2(x.size()), k3(x.size()), k4(x.size()), dx(x.size());
    for (long i = 0; i < nsteps; ++i) {
      if (!sf.eval(x + (h / 2) * k1, k2)) return traj;
      if (!sf.eval(x + (h / 2) * k2, k3)) return traj;
      if (!sf.eval(x + h * k3, k4)) return traj;
      x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
      double t = i + 1 == nsteps ? p.t1 : p.t0 + static_cast<double>(i + 1) * h;
      if (!all_finite(x)) {
        traj.status = SimStatus::nonfinite;
        traj.message = "state became non-finite near t = " + std::to_string(t);
        return traj;
      }
      if (!sf.eval(x, dx)) return traj;
      k1 = dx;
      if (!check_accepted(t, x, dx)) return traj;
    }
    return traj;
  }

  // Dormand-Prince 5(4), FSAL: the last stage of an accepted step is the
  // first stage of the next.
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double h = p.dt > 0.0 ? std::min(p.dt, span_abs) : span_abs / 100.0;
  double t = p.t0;
  Vec k2(x.size()), k3(x.size()), k4(x.size()), k5(x.size()), k6(x.size()),
      k7(x.size()), y1(x.size());
  long attempts = 0;

  while ((p.t1 - t) * dir > 1e-14 * span_abs) {
    if (++attempts > p.max_steps) {
      traj.status = SimStatus::step_underflow;
      traj.message = "maximum step count reached near t = " + std::to_string(t);
      return traj;
    }
    double remaining = std::fabs(p.t1 - t);
    bool last = h >= remaining * (1.0 - 1e-12);
    double hs = dir * std::min(h, remaining);

    if (std::fabs(hs) < 1e-14 * std::max(1.0, std::fabs(t))) {
      traj.status = SimStatus::step_underflow;
      traj.message = "step size underflow near t = " + std::to_string(t);
      return traj;
    }

    bool ok = sf.eval(x + hs * a21 * k1, k2) &&
              sf.eval(x + hs * (a31 * k1 + a32 * k2), k3) &&
              sf.eval(x + hs * (a41 * k1 + a42 * k2 + a43 * k3), k4) &&
              sf.eval(x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4),
                      k5) &&
              sf.eval(x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 +
                                a65 * k5),
                      k6);
    if (!ok) return traj;
    y1 = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    if (!sf.eval(y1, k7)) return traj;

    if (!all_finite(y1) || !all_finite(k7)) {
      // Retry with a smaller step; give up once the step is already tiny.
      if (h < 1e-12 * span_abs) {
        traj.status = SimStatus::nonfinite;
        traj.message = "state became non-finite near t = " + std::to_string(t);
        return traj;
      }
      h *= 0.5;
      ++traj.n_rejected;
      continue;
    }

    double err = 0.0;
    for (int i = 0; i < y1.size(); ++i) {
      double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                        e6 * k6[i] + e7 * k7[i]);
      double sc =
          p.atol + p.rtol * std::max(std::fabs(x[i]), std::fabs(y1[i]));
      double q = ei / sc;
      err += q * q;
    }
    err = std::sqrt(err / static_cast<double>(y1.size()));

    if (err <= 1.0) {
      t = last ? p.t1 : t + hs;
      x = y1;
      k1 = k7;
      if (!check_accepted(t, x, k1)) return traj;
    } else {
      ++traj.n_rejected;
    }
    double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    h = std::fabs(hs) * std::clamp(factor, 0.2, 5.0);
  }
  return traj;
}

// ===========================================================================
// Quotient consistency
// ===========================================================================

double quotient_consistency(const Field& f, const QuotientNetwork& q,
                            const Vec& x0, const SimParams& p) {
  const TypedNetwork& net = f.net();
  if (p.t1 <= p.t0)
    throw std::invalid_argument("quotient consistency needs t1 > t0");

  for (const auto& cls : q.coloring.classes()) {
    for (std::size_t i = 1; i < cls.size(); ++i) {
      double d = net.cell_distance(x0, cls[0], cls[i]);
      if (d > 1e-12)
        throw std::invalid_argument(
            "initial state is off the synchrony subspace: cells '" +
            net.cell(cls[0]).id + "' and '" + net.cell(cls[i]).id +
            "' differ by " + std::to_string(d));
    }
  }

  auto noop_field = std::shared_ptr<const Field>(&f, [](const Field*) {});
  auto noop_q = std::shared_ptr<const QuotientNetwork>(
      &q, [](const QuotientNetwork*) {});
  QuotientField qf(noop_field, noop_q);

  double dev = 0.0;
  auto compare_at = [&](const Vec& fx, const Vec& qx) {
    for (CellIndex c = 0; c < net.n_cells(); ++c) {
      CellIndex k = q.cell_color[static_cast<std::size_t>(c)];
      double d = (fx.segment(net.cell_offset(c), net.cell_dim(c)) -
                  qx.segment(q.net.cell_offset(k), q.net.cell_dim(k)))
                     .cwiseAbs()
                     .maxCoeff();
      dev = std::max(dev, d);
    }
  };

  // Both systems are advanced segment by segment over one shared checkpoint
  // grid, so every comparison uses exactly stored endpoint states. The two
  // adaptive runs choose different step sequences (the error norm sees the
  // duplicated components of the full system), and reconstructing one grid
  // from the other would floor the measurement at the interpolation error
  // instead of the integration error.
  constexpr int kCheckpoints = 64;
  Vec xf = x0;
  Vec xq = q.project(net, x0);
  compare_at(xf, xq);
  for (int k = 1; k <= kCheckpoints; ++k) {
    SimParams seg = p;
    seg.t0 = p.t0 + (p.t1 - p.t0) * (k - 1) / kCheckpoints;
    seg.t1 = p.t0 + (p.t1 - p.t0) * k / kCheckpoints;
    Trajectory full = integrate(f, xf, seg);
    Trajectory quot = integrate(qf, xq, seg);
    if (!full.ok())
      throw std::runtime_error("full integration failed: " + full.message);
    if (!quot.ok())
      throw std::runtime_error("quotient integration failed: " + quot.message);
    xf = full.states.back();
    xq = quot.states.back();
    compare_at(xf, xq);
  }
  return dev;
}

// ===========================================================================
// Trajectory files
// ===========================================================================

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

constexpr char kMagic[8] = {'C', 'C', 'N', 'T', 'R', 'J', '0', '1'};

}  // namespace

void write_trajectory_csv(const std::string& path, const TypedNetwork& net,
                          const Trajectory& traj) {
  if (traj.states.size() != traj.times.size())
    throw std::invalid_argument("inconsistent trajectory");
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");

  os << "t";
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    const std::string& id = net.cell(c).id;
    if (id.find(',') != std::string::npos ||
        id.find('\n') != std::string::npos)
      throw FormatError("cell id '" + id + "' cannot appear in a csv header");
    for (int k = 0; k < net.cell_dim(c); ++k)
      os << "," << id << "[" << k << "]";
  }
  os << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << fmt17(traj.times[i]);
    const Vec& x = traj.states[i];
    for (int j = 0; j < x.size(); ++j) os << "," << fmt17(x[j]);
    os << "\n";
  }
  if (!os) throw FormatError("failed writing '" + path + "'");
}

Trajectory read_trajectory_csv(const std::string& path,
                               const TypedNetwork& net) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open '" + path + "'");

  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string tok = line.substr(
          start, comma == std::string::npos ? comma : comma - start);
      if (!tok.empty() && tok.back() == '\r') tok.pop_back();
      out.push_back(tok);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };

  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty trajectory file");
  std::vector<std::string> header = split(line);
  std::vector<std::string> expected = {"t"};
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    for (int k = 0; k < net.cell_dim(c); ++k)
      expected.push_back(net.cell(c).id + "[" + std::to_string(k) + "]");
  if (header != expected)
    throw FormatError("csv header does not match the network's state layout");

  Trajectory traj;
  traj.method = "imported-csv";
  int dim = net.state_dim();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> toks = split(line);
    if (static_cast<int>(toks.size()) != dim + 1)
      throw FormatError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(dim + 1) + " columns");
    auto parse = [&](const std::string& s) {
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0')
        throw FormatError("line " + std::to_string(lineno) +
                          ": malformed number '" + s + "'");
      return v;
    };
    double t = parse(toks[0]);
    if (!traj.times.empty() && t <= traj.times.back())
      throw FormatError("line " + std::to_string(lineno) +
                        ": times must increase strictly");
    Vec x(dim);
    for (int j = 0; j < dim; ++j)
      x[j] = parse(toks[static_cast<std::size_t>(j) + 1]);
    traj.times.push_back(t);
    traj.states.push_back(std::move(x));
  }
  if (traj.times.empty()) throw FormatError("trajectory file has no samples");
  traj.estimate_tangents();
  traj.message = "tangents estimated from samples";
  return traj;
}

void write_trajectory_bin(const std::string& path, const TypedNetwork& net,
                          const Trajectory& traj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof kMagic);
  put_u32(os, static_cast<std::uint32_t>(net.n_cells()));
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    const std::string& id = net.cell(c).id;
    put_u32(os, static_cast<std::uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
    put_u32(os, static_cast<std::uint32_t>(net.cell_dim(c)));
  }
  os.put(static_cast<char>(traj.status));
  os.put(traj.derivs_estimated ? 1 : 0);
  put_u32(os, static_cast<std::uint32_t>(traj.method.size()));
  os.write(traj.method.data(),
           static_cast<std::streamsize>(traj.method.size()));
  put_u64(os, traj.times.size());
  for (double t : traj.times)
    os.write(reinterpret_cast<const char*>(&t), sizeof t);
  for (const Vec& x : traj.states)
    os.write(reinterpret_cast<const char*>(x.data()),
             static_cast<std::streamsize>(sizeof(double) *
                                          static_cast<std::size_t>(x.size())));
  os.put(traj.derivs.size() == traj.times.size() ? 1 : 0);
  if (traj.derivs.size() == traj.times.size())
    for (const Vec& x : traj.derivs)
      os.write(reinterpret_cast<const char*>(x.data()),
               static_cast<std::streamsize>(
                   sizeof(double) * static_cast<std::size_t>(x.size())));
  if (!os) throw FormatError("failed writing '" + path + "'");
}

Trajectory read_trajectory_bin(const std::string& path,
                               const TypedNetwork& net) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("not a trajectory cache file");

  std::uint32_t ncells = get_u32(is);
  if (ncells != static_cast<std::uint32_t>(net.n_cells()))
    throw FormatError("cell table does not match the network");
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    std::uint32_t len = get_u32(is);
    if (len > 1u << 20) throw FormatError("corrupt cell table");
    std::string id(len, '\0');
    is.read(id.data(), len);
    std::uint32_t dim = get_u32(is);
    if (!is || id != net.cell(c).id ||
        dim != static_cast<std::uint32_t>(net.cell_dim(c)))
      throw FormatError("cell table does not match the network");
  }

  Trajectory traj;
  int status = is.get();
  if (status < 0 || status > static_cast<int>(SimStatus::field_error))
    throw FormatError("corrupt status byte");
  traj.status = static_cast<SimStatus>(status);
  traj.derivs_estimated = is.get() == 1;
  std::uint32_t mlen = get_u32(is);
  if (mlen > 1u << 10) throw FormatError("corrupt method string");
  traj.method.resize(mlen);
  is.read(traj.method.data(), mlen);

  std::uint64_t n = get_u64(is);
  if (!is || n > (1ull << 32)) throw FormatError("corrupt sample count");
  int dim = net.state_dim();
  traj.times.resize(n);
  for (std::uint64_t i = 0; i < n; ++i)
    is.read(reinterpret_cast<char*>(&traj.times[i]), sizeof(double));
  traj.states.assign(n, Vec(dim));
  for (std::uint64_t i = 0; i < n; ++i)
    is.read(reinterpret_cast<char*>(traj.states[i].data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         static_cast<std::size_t>(dim)));
  int has_derivs = is.get();
  if (has_derivs == 1) {
    traj.derivs.assign(n, Vec(dim));
    for (std::uint64_t i = 0; i < n; ++i)
      is.read(reinterpret_cast<char*>(traj.derivs[i].data()),
              static_cast<std::streamsize>(sizeof(double) *
                                           static_cast<std::size_t>(dim)));
  }
  if (!is) throw FormatError("truncated trajectory cache");
  return traj;
}

}  // namespace ccn
