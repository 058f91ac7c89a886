#pragma once

#include <string>
#include <vector>

#include "ccn/network.hpp"

namespace ccn {

// ===========================================================================
// Colorings (partitions of the cell set) in canonical form.
// ===========================================================================

struct Coloring {
  /// Color of each cell, indexed by cell index. Canonical form: colors are
  /// numbered by first occurrence in cell order (color[0] == 0, and each new
  /// color is the smallest unused integer).
  std::vector<int> color;

  [[nodiscard]] int n_cells() const { return static_cast<int>(color.size()); }
  [[nodiscard]] int n_colors() const;
  [[nodiscard]] bool same(CellIndex a, CellIndex b) const {
    return color.at(a) == color.at(b);
  }
  /// Color classes, each in ascending cell order, ordered by color.
  [[nodiscard]] std::vector<std::vector<CellIndex>> classes() const;

  /// Renumbers colors into canonical form.
  void canonicalize();

  friend bool operator==(const Coloring& a, const Coloring& b) = default;
  /// Lexicographic order on the canonical color vectors.
  friend bool operator<(const Coloring& a, const Coloring& b) {
    return a.color < b.color;
  }
};

/// All-singletons coloring.
[[nodiscard]] Coloring trivial_coloring(const TypedNetwork& net);

/// Coloring merging the listed groups (each group one color), all other
/// cells singletons. Groups are given as cell ids.
[[nodiscard]] Coloring merge_cells(
    const TypedNetwork& net,
    const std::vector<std::vector<std::string>>& groups);

/// Human-readable form "{c1 c3} {c2} {c4}".
[[nodiscard]] std::string to_string(const TypedNetwork& net,
                                    const Coloring& col);

/// Coloring interchange: { "colors": { "<cellId>": <colorIndex>, ... } }.
[[nodiscard]] Coloring read_coloring(const TypedNetwork& net,
                                     const std::string& json_text);
[[nodiscard]] std::string write_coloring(const TypedNetwork& net,
                                         const Coloring& col);

/// True iff every color class of a is contained in one color class of b.
/// Requires equal cell counts.
[[nodiscard]] bool is_finer(const Coloring& a, const Coloring& b);

// ===========================================================================
// Balancedness
// ===========================================================================

struct BalancednessCertificate {
  bool balanced = false;
  /// When balanced: one color-preserving input isomorphism per ordered pair
  /// of distinct same-color cells.
  std::vector<InputIsomorphism> isos;
  /// When unbalanced: an offending pair and the reason.
  enum class Reason { none, type_mismatch, no_color_preserving_iso };
  Reason reason = Reason::none;
  CellIndex witness_a = -1;
  CellIndex witness_b = -1;
};

/// A coloring is balanced iff every ordered pair of same-color cells admits
/// an input isomorphism carrying each input arrow to one of the same type
/// whose tail has the same color. Same-color cells of different cell types
/// make the coloring unbalanced with a type-mismatch witness.
[[nodiscard]] BalancednessCertificate is_balanced(const TypedNetwork& net,
                                                  const Coloring& col);

/// Whether some input isomorphism from a to b preserves tail colors. This
/// is the single-pair test underlying is_balanced.
[[nodiscard]] bool has_color_preserving_iso(const TypedNetwork& net,
                                            const Coloring& col, CellIndex a,
                                            CellIndex b);

/// Every balanced coloring, in lexicographic canonical order. Works by a
/// memoized top-down lattice walk: the coarsest balanced refinement of the
/// by-type partition is computed by iterated signature splitting, then each
/// discovered coloring is split one class at a time and re-refined.
/// Throws std::invalid_argument when the network exceeds max_cells.
[[nodiscard]] std::vector<Coloring> enumerate_balanced(const TypedNetwork& net,
                                                       int max_cells = 24);

/// Reference oracle: scans every partition whose classes respect cell types
/// and filters with is_balanced. Hard cap of 10 cells.
[[nodiscard]] std::vector<Coloring> brute_force_balanced(
    const TypedNetwork& net);

/// Coarsest balanced coloring finer than `seed`, by iterated splitting on
/// (cell type, per (arrow type, tail color) input multiplicities).
[[nodiscard]] Coloring balanced_refinement(const TypedNetwork& net,
                                           Coloring seed);

// ===========================================================================
// Synchrony spaces
// ===========================================================================

/// True iff same-color cells are equal within tol (sup norm) AND
/// different-color same-dimension cells differ by more than 10*tol.
/// The coloring defines the pattern exactly, so coarser agreement fails too.
/// States in the gray band (tol, 10*tol] yield false.
[[nodiscard]] bool in_synchrony_space(const TypedNetwork& net,
                                      const Coloring& col, const Vec& x,
                                      double tol);

/// A point of the synchrony subspace: same-color cells share one block.
/// per_color holds one block per color, sized by that color's cell dim.
[[nodiscard]] Vec synchrony_point(const TypedNetwork& net, const Coloring& col,
                                  const std::vector<Vec>& per_color);

// ===========================================================================
// Quotient networks
// ===========================================================================

struct QuotientNetwork {
  TypedNetwork net;  ///< one cell per color; ids reuse the representatives'
  Coloring coloring;                  ///< the balanced coloring quotiented by
  std::vector<CellIndex> rep;        ///< color -> representative cell (lowest)
  std::vector<CellIndex> cell_color; ///< original cell -> quotient cell index

  /// Projection of a full state: representative blocks, in quotient layout.
  [[nodiscard]] Vec project(const TypedNetwork& full, const Vec& x) const;
  /// Lift of a quotient state onto the synchrony space of the full network.
  [[nodiscard]] Vec lift(const TypedNetwork& full, const Vec& q) const;
};

/// Builds the quotient: the representative of each color keeps its input
/// arrows with tails mapped to color representatives. Requires a balanced
/// coloring (throws std::invalid_argument otherwise).
[[nodiscard]] QuotientNetwork quotient_network(const TypedNetwork& net,
                                               const Coloring& col);

}  // namespace ccn
