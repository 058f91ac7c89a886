#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ccn/coloring.hpp"
#include "ccn/network.hpp"

namespace ccn {

/// Guarded-domain violation during field evaluation (log of a nonpositive
/// value, division by zero, ...). Carries the offending cell's id.
class EvalError : public std::runtime_error {
 public:
  EvalError(std::string cell_id, const std::string& msg)
      : std::runtime_error("cell '" + cell_id + "': " + msg),
        cell(std::move(cell_id)) {}
  std::string cell;
};

// ===========================================================================
// Vector fields over a network's state space.
//
// A field's component for cell c depends only on the cell's own state and
// the states of its input cells, and it is symmetric under every input
// isomorphism: evaluating cell c2's component with input values aligned
// along any beta in B(c, c2) reproduces cell c's component.
// ===========================================================================

class Field {
 public:
  explicit Field(const TypedNetwork& net) : net_(&net) {}
  virtual ~Field() = default;

  [[nodiscard]] const TypedNetwork& net() const { return *net_; }

  /// Component of cell c, given the cell's own state and one value per user
  /// input arrow of I(c), in canonical order.
  [[nodiscard]] virtual Vec eval_cell(
      CellIndex c, const Vec& self, const std::vector<Vec>& user_inputs) const = 0;

  /// Full right-hand side f(x).
  [[nodiscard]] virtual Vec eval(const Vec& x) const;

 protected:
  /// Natural input values of cell c: x at the tails of its user arrows.
  [[nodiscard]] std::vector<Vec> natural_inputs(CellIndex c,
                                                const Vec& x) const;
  const TypedNetwork* net_;
};

[[nodiscard]] inline Vec eval_field(const Field& f, const Vec& x) {
  return f.eval(x);
}

/// Pointwise sum of fields over one network.
class FieldSum final : public Field {
 public:
  FieldSum(const TypedNetwork& net,
           std::vector<std::shared_ptr<const Field>> terms);
  [[nodiscard]] Vec eval_cell(CellIndex c, const Vec& self,
                              const std::vector<Vec>& user_inputs) const override;

 private:
  std::vector<std::shared_ptr<const Field>> terms_;
};

/// Arbitrary right-hand side for integrator tests. Not admissible in
/// general; eval_cell is unsupported.
class LambdaField final : public Field {
 public:
  LambdaField(const TypedNetwork& net, std::function<Vec(const Vec&)> rhs)
      : Field(net), rhs_(std::move(rhs)) {}
  [[nodiscard]] Vec eval(const Vec& x) const override { return rhs_(x); }
  [[nodiscard]] Vec eval_cell(CellIndex, const Vec&,
                              const std::vector<Vec>&) const override {
    throw std::logic_error("LambdaField has no per-cell decomposition");
  }

 private:
  std::function<Vec(const Vec&)> rhs_;
};

// ===========================================================================
// Admissibility verification
// ===========================================================================

struct AdmissibilityReport {
  double max_violation = 0.0;
  CellIndex worst_source = -1;
  CellIndex worst_target = -1;
  int worst_iso = -1;  ///< index into input_isomorphisms(worst_source, ...)
  int samples = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;

  [[nodiscard]] bool passed() const { return max_violation <= tol; }
};

/// Draws random states and, for every ordered input-isomorphic cell pair and
/// every isomorphism between them, compares the two component evaluations.
[[nodiscard]] AdmissibilityReport check_admissibility(
    const Field& f, int samples, double tol, std::uint64_t seed = 0xCC17);

// ===========================================================================
// Symmetrization: admissible fields from arbitrary raw per-class functions
// ===========================================================================

class FieldSpec;  // DSL-compiled field, see dsl.hpp

/// Raw scalar function of (own state, user input values in canonical order).
using RawCellFn = std::function<double(const Vec&, const std::vector<Vec>&)>;

/// For one representative cell r per covered class, with direction y:
///   g_c(self, inputs) = sum over beta in B(r, c) of phi(self, beta-aligned
///   inputs) * y, for cells c in the class of r; zero on uncovered classes.
/// The sum ranges over the whole isomorphism set, so the result does not
/// depend on any propagation choice, and operands are sorted before summing
/// so the symmetry holds bitwise.
class SymmetrizedField final : public Field {
 public:
  struct ClassDef {
    CellIndex rep = -1;
    RawCellFn phi;
    Vec y;
  };
  SymmetrizedField(const TypedNetwork& net, std::vector<ClassDef> defs);

  [[nodiscard]] Vec eval_cell(CellIndex c, const Vec& self,
                              const std::vector<Vec>& user_inputs) const override;

  /// Number of self-isomorphisms |B(rep, rep)| of the class covering c,
  /// or 0 when c's class is uncovered.
  [[nodiscard]] int class_order(CellIndex c) const;

 private:
  struct Member {
    int def = -1;  ///< index into defs_, -1 for uncovered classes
    /// For each beta in B(rep, c): position, per user arrow of I(rep), of
    /// the image arrow within the user input list of I(c).
    std::vector<std::vector<int>> alignments;
  };
  std::vector<ClassDef> defs_;
  std::vector<Member> members_;  ///< per cell
};

/// Wraps the raw classes of a partial DSL field (positional input access
/// unlocked) into a symmetrized admissible field. `y_by_rep` assigns the
/// direction vector per covered class, keyed by any cell id of the class.
[[nodiscard]] std::shared_ptr<SymmetrizedField> symmetrize(
    const TypedNetwork& net, const std::shared_ptr<const FieldSpec>& raw,
    const std::map<std::string, Vec>& y_by_rep);

/// Single-class symmetrization of a programmatic raw function.
[[nodiscard]] std::shared_ptr<SymmetrizedField> symmetrize_callable(
    const TypedNetwork& net, CellIndex rep, RawCellFn phi, Vec y);

// ===========================================================================
// Bump bases: localized perturbations with certified norms
// ===========================================================================

/// One radial polynomial bump amplitude*(1 - (|p-center|/radius)^2)^2 on
/// |p-center| < radius, zero outside. Continuously differentiable; the
/// amplitude is chosen so max(sup |phi|, sup |grad phi|) = 1.
struct Bump {
  Vec center;
  double radius = 0.0;
  double amplitude = 0.0;  ///< peak value, attained at the center
};

class BumpBasis {
 public:
  std::vector<Bump> bumps;
  Vec ball_center;      ///< enclosing ball containing every support
  double ball_radius = 0.0;

  [[nodiscard]] double eval_one(int n, const Vec& p) const;
  /// sum_n z_n phi_n(p); at most one term is nonzero at any point because
  /// the supports are pairwise disjoint.
  [[nodiscard]] double eval(const Vec& p, const std::vector<double>& z) const;
};

/// Centers are placed at geometrically spaced parameters t_n = t* + eta/2^n
/// along the sampled segment; radii are shrunk until the support balls are
/// pairwise disjoint and inside the enclosing ball. Throws when the segment
/// cannot separate n_bumps centers at floating precision.
[[nodiscard]] BumpBasis build_bump_basis(const std::vector<Vec>& segment,
                                         int n_bumps, std::uint64_t seed);

// ===========================================================================
// Quotient dynamics
// ===========================================================================

/// The base field's dynamics transported onto a quotient network: quotient
/// cell k evaluates the representative's component. The representative's
/// input arrows transfer one to one, so this is exact, not approximate.
class QuotientField final : public Field {
 public:
  QuotientField(std::shared_ptr<const Field> base,
                std::shared_ptr<const QuotientNetwork> q);
  [[nodiscard]] Vec eval_cell(CellIndex c, const Vec& self,
                              const std::vector<Vec>& user_inputs) const override;

 private:
  std::shared_ptr<const Field> base_;
  std::shared_ptr<const QuotientNetwork> q_;
};

[[nodiscard]] std::shared_ptr<QuotientField> make_quotient_field(
    std::shared_ptr<const Field> base, QuotientNetwork q);

}  // namespace ccn
