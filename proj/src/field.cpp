#include "ccn/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "ccn/dsl.hpp"
#include "ccn/rng.hpp"

namespace ccn {

// ===========================================================================
// Field base
// ===========================================================================

std::vector<Vec> Field::natural_inputs(CellIndex c, const Vec& x) const {
  std::vector<Vec> vals;
  for (ArrowIndex a : net_->input_arrows(c)) {
    const Arrow& ar = net_->arrow(a);
    if (ar.internal) continue;
    vals.emplace_back(net_->cell_state(x, ar.tail));
  }
  return vals;
}

Vec Field::eval(const Vec& x) const {
  if (static_cast<int>(x.size()) != net_->state_dim())
    throw std::invalid_argument("state has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(net_->state_dim()));
  Vec out(net_->state_dim());
  for (CellIndex c = 0; c < net_->n_cells(); ++c) {
    Vec self = net_->cell_state(x, c);
    out.segment(net_->cell_offset(c), net_->cell_dim(c)) =
        eval_cell(c, self, natural_inputs(c, x));
  }
  return out;
}

// ===========================================================================
// FieldSum
// ===========================================================================

FieldSum::FieldSum(const TypedNetwork& net,
                   std::vector<std::shared_ptr<const Field>> terms)
    : Field(net), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (!t) throw std::invalid_argument("null field term");
    if (&t->net() != &net)
      throw std::invalid_argument("field terms live on different networks");
  }
}

Vec FieldSum::eval_cell(CellIndex c, const Vec& self,
                        const std::vector<Vec>& user_inputs) const {
  Vec out = Vec::Zero(net_->cell_dim(c));
  for (const auto& t : terms_) out += t->eval_cell(c, self, user_inputs);
  return out;
}

// ===========================================================================
// Admissibility verification
// ===========================================================================

namespace {

/// Per user arrow of I(c): its position within the user input list of the
/// target cell, after mapping through the isomorphism.
std::vector<int> user_alignment(const TypedNetwork& net,
                                const InputIsomorphism& beta) {
  std::vector<int> pos_of_arrow(static_cast<std::size_t>(net.n_arrows(true)),
                                -1);
  int p = 0;
  for (ArrowIndex a : net.input_arrows(beta.target)) {
    if (net.arrow(a).internal) continue;
    pos_of_arrow[static_cast<std::size_t>(a)] = p++;
  }
  std::vector<int> perm;
  for (const auto& [src, dst] : beta.map) {
    if (net.arrow(src).internal) continue;
    perm.push_back(pos_of_arrow[static_cast<std::size_t>(dst)]);
  }
  return perm;
}

}  // namespace

AdmissibilityReport check_admissibility(const Field& f, int samples,
                                        double tol, std::uint64_t seed) {
  const TypedNetwork& net = f.net();
  AdmissibilityReport rep;
  rep.samples = samples;
  rep.tol = tol;
  rep.seed = seed;

  struct PairIsos {
    CellIndex c, c2;
    std::vector<std::vector<int>> perms;  ///< one alignment per isomorphism
  };
  std::vector<PairIsos> pairs;
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    for (CellIndex c2 = 0; c2 < net.n_cells(); ++c2) {
      auto isos = input_isomorphisms(net, c, c2);
      if (isos.empty()) continue;
      PairIsos pi;
      pi.c = c;
      pi.c2 = c2;
      for (const auto& beta : isos)
        pi.perms.push_back(user_alignment(net, beta));
      pairs.push_back(std::move(pi));
    }
  }

  auto rng = make_rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vec x(net.state_dim());
    for (int i = 0; i < x.size(); ++i) x[i] = uniform(rng, -2.0, 2.0);

    for (const PairIsos& pi : pairs) {
      Vec self = net.cell_state(x, pi.c);
      std::vector<Vec> vals1;
      for (ArrowIndex a : net.input_arrows(pi.c)) {
        const Arrow& ar = net.arrow(a);
        if (ar.internal) continue;
        vals1.emplace_back(net.cell_state(x, ar.tail));
      }
      Vec lhs = f.eval_cell(pi.c, self, vals1);

      std::vector<Vec> vals2(vals1.size());
      for (std::size_t k = 0; k < pi.perms.size(); ++k) {
        const std::vector<int>& perm = pi.perms[k];
        for (std::size_t i = 0; i < vals1.size(); ++i)
          vals2[static_cast<std::size_t>(perm[i])] = vals1[i];
        Vec rhs = f.eval_cell(pi.c2, self, vals2);
        double dev = (lhs - rhs).cwiseAbs().maxCoeff();
        if (dev > rep.max_violation) {
          rep.max_violation = dev;
          rep.worst_source = pi.c;
          rep.worst_target = pi.c2;
          rep.worst_iso = static_cast<int>(k);
        }
      }
    }
  }
  return rep;
}

// ===========================================================================
// SymmetrizedField
// ===========================================================================

SymmetrizedField::SymmetrizedField(const TypedNetwork& net,
                                   std::vector<ClassDef> defs)
    : Field(net), defs_(std::move(defs)) {
  auto classes = input_isomorphism_classes(net);
  std::vector<int> class_of(static_cast<std::size_t>(net.n_cells()), -1);
  for (std::size_t k = 0; k < classes.size(); ++k)
    for (CellIndex c : classes[k])
      class_of[static_cast<std::size_t>(c)] = static_cast<int>(k);

  std::vector<int> def_of_class(classes.size(), -1);
  for (std::size_t d = 0; d < defs_.size(); ++d) {
    const ClassDef& def = defs_[d];
    if (def.rep < 0 || def.rep >= net.n_cells())
      throw std::invalid_argument("representative cell index out of range");
    if (!def.phi) throw std::invalid_argument("missing raw function");
    if (static_cast<int>(def.y.size()) != net.cell_dim(def.rep))
      throw std::invalid_argument(
          "direction vector dimension does not match cell '" +
          net.cell(def.rep).id + "'");
    int k = class_of[static_cast<std::size_t>(def.rep)];
    if (def_of_class[static_cast<std::size_t>(k)] >= 0)
      throw std::invalid_argument("two definitions cover the class of cell '" +
                                  net.cell(def.rep).id + "'");
    def_of_class[static_cast<std::size_t>(k)] = static_cast<int>(d);
  }

  members_.resize(static_cast<std::size_t>(net.n_cells()));
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    int k = class_of[static_cast<std::size_t>(c)];
    int d = def_of_class[static_cast<std::size_t>(k)];
    Member& m = members_[static_cast<std::size_t>(c)];
    m.def = d;
    if (d < 0) continue;
    for (const auto& beta :
         input_isomorphisms(net, defs_[static_cast<std::size_t>(d)].rep, c))
      m.alignments.push_back(user_alignment(net, beta));
  }
}

Vec SymmetrizedField::eval_cell(CellIndex c, const Vec& self,
                                const std::vector<Vec>& user_inputs) const {
  const Member& m = members_[static_cast<std::size_t>(c)];
  if (m.def < 0) return Vec::Zero(net_->cell_dim(c));
  const ClassDef& def = defs_[static_cast<std::size_t>(m.def)];

  std::vector<double> terms;
  terms.reserve(m.alignments.size());
  std::vector<Vec> vals(user_inputs.size());
  for (const std::vector<int>& perm : m.alignments) {
    // Slot i of the representative's input list receives the value carried
    // by the image arrow at cell c.
    for (std::size_t i = 0; i < perm.size(); ++i)
      vals[i] = user_inputs[static_cast<std::size_t>(perm[i])];
    terms.push_back(def.phi(self, vals));
  }
  std::sort(terms.begin(), terms.end(), [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  double s = 0.0;
  for (double t : terms) s += t;
  return s * def.y;
}

int SymmetrizedField::class_order(CellIndex c) const {
  const Member& m = members_[static_cast<std::size_t>(c)];
  if (m.def < 0) return 0;
  CellIndex rep = defs_[static_cast<std::size_t>(m.def)].rep;
  return static_cast<int>(
      members_[static_cast<std::size_t>(rep)].alignments.size());
}

std::shared_ptr<SymmetrizedField> symmetrize(
    const TypedNetwork& net, const std::shared_ptr<const FieldSpec>& raw,
    const std::map<std::string, Vec>& y_by_rep) {
  if (!raw) throw std::invalid_argument("null donor field");
  if (&raw->net() != &net)
    throw std::invalid_argument("donor field lives on a different network");

  std::vector<int> y_class;
  std::vector<SymmetrizedField::ClassDef> defs;
  std::vector<bool> has_y(static_cast<std::size_t>(raw->n_classes()), false);
  for (const auto& [cell_id, y] : y_by_rep) {
    auto c = net.find_cell(cell_id);
    if (!c) throw std::invalid_argument("unknown cell '" + cell_id + "'");
    int k = raw->class_of(*c);
    if (!raw->class_defined(k))
      throw std::invalid_argument("cell '" + cell_id +
                                  "' belongs to an undefined class");
    if (has_y[static_cast<std::size_t>(k)])
      throw std::invalid_argument(
          "two direction vectors cover the class of cell '" + cell_id + "'");
    has_y[static_cast<std::size_t>(k)] = true;

    SymmetrizedField::ClassDef def;
    def.rep = raw->class_rep(k);
    auto base = raw->raw_fn(k);
    def.phi = [raw, base](const Vec& self, const std::vector<Vec>& inputs) {
      return base(self, inputs);
    };
    def.y = y;
    defs.push_back(std::move(def));
  }
  for (int k = 0; k < raw->n_classes(); ++k) {
    if (raw->class_defined(k) && !has_y[static_cast<std::size_t>(k)])
      throw std::invalid_argument("no direction vector for the class of cell '" +
                                  net.cell(raw->class_rep(k)).id + "'");
  }
  return std::make_shared<SymmetrizedField>(net, std::move(defs));
}

std::shared_ptr<SymmetrizedField> symmetrize_callable(const TypedNetwork& net,
                                                      CellIndex rep,
                                                      RawCellFn phi, Vec y) {
  std::vector<SymmetrizedField::ClassDef> defs(1);
  defs[0].rep = rep;
  defs[0].phi = std::move(phi);
  defs[0].y = std::move(y);
  return std::make_shared<SymmetrizedField>(net, std::move(defs));
}

// ===========================================================================
// Bump bases
// ===========================================================================

double BumpBasis::eval_one(int n, const Vec& p) const {
  const Bump& b = bumps.at(static_cast<std::size_t>(n));
  double r2 = (p - b.center).squaredNorm() / (b.radius * b.radius);
  if (r2 >= 1.0) return 0.0;
  double t = 1.0 - r2;
  return b.amplitude * t * t;
}

double BumpBasis::eval(const Vec& p, const std::vector<double>& z) const {
  if (z.size() != bumps.size())
    throw std::invalid_argument("coefficient count does not match basis size");
  double s = 0.0;
  for (std::size_t n = 0; n < bumps.size(); ++n)
    s += z[n] * eval_one(static_cast<int>(n), p);
  return s;
}

BumpBasis build_bump_basis(const std::vector<Vec>& segment, int n_bumps,
                           std::uint64_t seed) {
  if (n_bumps < 1) throw std::invalid_argument("need at least one bump");
  if (segment.size() < 2)
    throw std::invalid_argument("segment needs at least two points");
  int dim = static_cast<int>(segment.front().size());
  for (const Vec& p : segment)
    if (static_cast<int>(p.size()) != dim)
      throw std::invalid_argument("inconsistent segment point dimensions");

  auto rng = make_rng(seed);
  double length = static_cast<double>(segment.size() - 1);
  double t_star = length * uniform(rng, 0.10, 0.35);
  double eta = (length - t_star) * uniform(rng, 0.6, 1.8);

  auto point_at = [&](double t) -> Vec {
    int i = std::clamp(static_cast<int>(std::floor(t)), 0,
                       static_cast<int>(segment.size()) - 2);
    double f = t - static_cast<double>(i);
    return (1.0 - f) * segment[static_cast<std::size_t>(i)] +
           f * segment[static_cast<std::size_t>(i) + 1];
  };

  // Geometrically spaced parameters accumulate toward the anchor point, so
  // the centers stay distinct while crowding into a bounded region.
  std::vector<Vec> centers;
  double scale = 0.5;
  for (int n = 0; n < n_bumps; ++n, scale *= 0.5)
    centers.push_back(point_at(t_star + eta * scale));
  Vec anchor = point_at(t_star);

  std::vector<double> radii(static_cast<std::size_t>(n_bumps), 0.0);
  for (int n = 0; n < n_bumps; ++n) {
    double dmin = (centers[static_cast<std::size_t>(n)] - anchor).norm();
    for (int m = 0; m < n_bumps; ++m) {
      if (m == n) continue;
      dmin = std::min(dmin, (centers[static_cast<std::size_t>(n)] -
                             centers[static_cast<std::size_t>(m)])
                                .norm());
    }
    if (dmin <= 0.0)
      throw std::runtime_error(
          "bump centers collide at floating precision; the segment is too "
          "short or too many bumps were requested");
    radii[static_cast<std::size_t>(n)] = 0.45 * dmin;
  }

  // Shrink until the supports are pairwise disjoint in exact float terms.
  for (int iter = 0;; ++iter) {
    bool overlap = false;
    for (int n = 0; n < n_bumps && !overlap; ++n)
      for (int m = n + 1; m < n_bumps && !overlap; ++m)
        overlap = radii[static_cast<std::size_t>(n)] +
                      radii[static_cast<std::size_t>(m)] >=
                  (centers[static_cast<std::size_t>(n)] -
                   centers[static_cast<std::size_t>(m)])
                      .norm();
    if (!overlap) break;
    if (iter > 200)
      throw std::runtime_error("cannot separate bump supports");
    for (double& r : radii) r *= 0.9;
  }

  BumpBasis basis;
  basis.ball_center = Vec::Zero(dim);
  for (const Vec& p : segment) basis.ball_center += p;
  basis.ball_center /= static_cast<double>(segment.size());

  constexpr double kGradFactor = 8.0 / (3.0 * 1.7320508075688772);
  double reach = 0.0;
  for (int n = 0; n < n_bumps; ++n) {
    Bump b;
    b.center = centers[static_cast<std::size_t>(n)];
    b.radius = radii[static_cast<std::size_t>(n)];
    // Unit C1 norm: max(sup |phi|, sup |grad phi|) = 1, where the gradient
    // peak of (1 - r^2)^2 is 8/(3 sqrt 3) times amplitude/radius.
    b.amplitude = std::min(1.0, b.radius / kGradFactor);
    reach = std::max(reach, (b.center - basis.ball_center).norm() + b.radius);
    basis.bumps.push_back(std::move(b));
  }
  basis.ball_radius = reach * 1.25 + 1e-12;
  return basis;
}

// ===========================================================================
// QuotientField
// ===========================================================================

QuotientField::QuotientField(std::shared_ptr<const Field> base,
                             std::shared_ptr<const QuotientNetwork> q)
    : Field(q->net), base_(std::move(base)), q_(std::move(q)) {
  if (!base_) throw std::invalid_argument("null base field");
  for (CellIndex k = 0; k < q_->net.n_cells(); ++k) {
    CellIndex r = q_->rep[static_cast<std::size_t>(k)];
    std::size_t want = base_->net().input_arrows(r).size();
    std::size_t have = q_->net.input_arrows(k).size();
    if (want != have)
      throw std::invalid_argument(
          "quotient input layout does not match the representative");
  }
}

Vec QuotientField::eval_cell(CellIndex c, const Vec& self,
                             const std::vector<Vec>& user_inputs) const {
  // The quotient cell carries a one to one copy of its representative's
  // input arrows, in order, so the values transfer unchanged.
  return base_->eval_cell(q_->rep[static_cast<std::size_t>(c)], self,
                          user_inputs);
}

std::shared_ptr<QuotientField> make_quotient_field(
    std::shared_ptr<const Field> base, QuotientNetwork q) {
  auto qp = std::make_shared<const QuotientNetwork>(std::move(q));
  return std::make_shared<QuotientField>(std::move(base), std::move(qp));
}

}  // namespace ccn
