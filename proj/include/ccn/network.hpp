#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ccn {

using Vec = Eigen::VectorXd;
using CellIndex = std::int32_t;
using ArrowIndex = std::int32_t;

/// Prefix of the reserved arrow/arrow-type ids used for the implicit
/// self-dependence arrows inserted by validation. User ids must not use it.
inline constexpr std::string_view kInternalPrefix = "~self:";

// ===========================================================================
// Raw declaration form, as read from files or assembled by a builder.
// Nothing about it is trusted until validate_network has accepted it.
// ===========================================================================

struct NetworkSpec {
  struct CellTypeDecl {
    std::string id;
    long long dim = 1;  ///< per-cell state dimension
  };
  struct CellDecl {
    std::string id;
    std::string type;
  };
  struct ArrowDecl {
    std::string id;
    std::string type;
    std::string tail;
    std::string head;
  };

  std::vector<CellTypeDecl> cell_types;
  std::vector<std::string> arrow_types;
  std::vector<CellDecl> cells;
  std::vector<ArrowDecl> arrows;

  NetworkSpec& cell_type(std::string id, long long dim = 1);
  NetworkSpec& arrow_type(std::string id);
  NetworkSpec& cell(std::string id, std::string type);
  NetworkSpec& arrow(std::string id, std::string type, std::string tail,
                     std::string head);
};

// ===========================================================================
// Validated network. Immutable; safe for concurrent reads.
// ===========================================================================

struct CellType {
  std::string id;
  int dim = 1;
};

struct Cell {
  std::string id;
  int type = -1;
};

struct Arrow {
  std::string id;
  int type = -1;
  CellIndex tail = -1;
  CellIndex head = -1;
  bool internal = false;  ///< inserted by validation, one per cell
};

struct ValidationReport;
ValidationReport validate_network(const NetworkSpec& raw);

class TypedNetwork {
 public:
  [[nodiscard]] int n_cells() const { return static_cast<int>(cells_.size()); }
  [[nodiscard]] int n_cell_types() const {
    return static_cast<int>(cell_types_.size());
  }
  /// User arrows precede internal arrows in the arrow array.
  [[nodiscard]] int n_arrows(bool include_internal = false) const {
    return include_internal ? static_cast<int>(arrows_.size()) : n_user_arrows_;
  }
  [[nodiscard]] int n_arrow_types(bool include_internal = false) const {
    return include_internal ? static_cast<int>(arrow_types_.size())
                            : n_user_arrow_types_;
  }

  [[nodiscard]] const Cell& cell(CellIndex c) const { return cells_.at(c); }
  [[nodiscard]] const Arrow& arrow(ArrowIndex a) const { return arrows_.at(a); }
  [[nodiscard]] const CellType& cell_type(int t) const {
    return cell_types_.at(t);
  }
  [[nodiscard]] const std::string& arrow_type_id(int t) const {
    return arrow_types_.at(t);
  }

  [[nodiscard]] std::optional<CellIndex> find_cell(std::string_view id) const;
  [[nodiscard]] std::optional<ArrowIndex> find_arrow(std::string_view id) const;
  [[nodiscard]] std::optional<int> find_arrow_type(std::string_view id) const;
  [[nodiscard]] std::optional<int> find_cell_type(std::string_view id) const;

  /// Full canonical input list of a cell: user arrows in declaration order,
  /// then the cell's internal self-arrow last.
  [[nodiscard]] const std::vector<ArrowIndex>& input_arrows(CellIndex c) const {
    return input_arrows_.at(c);
  }
  [[nodiscard]] ArrowIndex internal_arrow(CellIndex c) const {
    return internal_arrow_.at(c);
  }

  // ----- state layout (sup-norm convention throughout) -----
  [[nodiscard]] int state_dim() const { return state_dim_; }
  [[nodiscard]] int cell_dim(CellIndex c) const {
    return cell_types_[cells_[c].type].dim;
  }
  [[nodiscard]] int cell_offset(CellIndex c) const { return offsets_.at(c); }
  [[nodiscard]] auto cell_state(const Vec& x, CellIndex c) const {
    return x.segment(cell_offset(c), cell_dim(c));
  }
  [[nodiscard]] auto cell_state(Vec& x, CellIndex c) const {
    return x.segment(cell_offset(c), cell_dim(c));
  }
  /// Sup-norm distance between the states of two cells (equal dims required).
  [[nodiscard]] double cell_distance(const Vec& x, CellIndex a,
                                     CellIndex b) const;

 private:
  std::vector<CellType> cell_types_;
  std::vector<std::string> arrow_types_;
  std::vector<Cell> cells_;
  std::vector<Arrow> arrows_;
  int n_user_arrows_ = 0;
  int n_user_arrow_types_ = 0;
  std::vector<std::vector<ArrowIndex>> input_arrows_;
  std::vector<ArrowIndex> internal_arrow_;
  std::vector<int> offsets_;
  int state_dim_ = 0;

  friend struct ValidationReport;
  friend ValidationReport validate_network(const NetworkSpec& raw);
};

// ===========================================================================
// Validation
// ===========================================================================

struct Violation {
  std::string code;     ///< stable machine-readable tag
  std::string message;  ///< human-readable description
  std::vector<std::string> ids;  ///< offending element ids
};

struct ValidationReport {
  std::vector<Violation> violations;
  /// Present iff there are no violations; carries the inserted internal
  /// self-arrows (one per cell, reserved arrow type unique per cell type).
  std::optional<TypedNetwork> network;

  [[nodiscard]] bool valid() const { return violations.empty(); }
};

/// Checks every structural invariant of the raw declaration: id hygiene,
/// positive dimensions, endpoint existence, and arrow-type compatibility
/// (same arrow type implies same head cell type and same tail cell type).
/// Violations are data, not exceptions.
[[nodiscard]] ValidationReport validate_network(const NetworkSpec& raw);

/// Convenience for fixtures: validate and throw std::invalid_argument
/// listing the violations if any.
[[nodiscard]] TypedNetwork make_validated(const NetworkSpec& raw);

// ===========================================================================
// Input sets and input isomorphisms
// ===========================================================================

struct InputSet {
  CellIndex cell = -1;
  std::vector<ArrowIndex> arrows;  ///< canonical order = declaration order
};

/// Arrows whose head is c. Internal self-arrows are excluded unless asked for.
[[nodiscard]] InputSet inputs(const TypedNetwork& net, CellIndex c,
                              bool include_internal = false);

/// A type-preserving bijection from the input set of source onto the input
/// set of target. The map covers the full input sets (internal pair included;
/// it is forced, since internal arrow types are unique per cell type).
struct InputIsomorphism {
  CellIndex source = -1;
  CellIndex target = -1;
  /// Pairs (a, beta(a)) listed in canonical order of the source input set.
  std::vector<std::pair<ArrowIndex, ArrowIndex>> map;

  [[nodiscard]] ArrowIndex image(ArrowIndex a) const;
  /// Composition: this after first (first: I(c)->I(c2), this: I(c2)->I(c3)).
  [[nodiscard]] InputIsomorphism after(const InputIsomorphism& first) const;
  [[nodiscard]] InputIsomorphism inverse() const;
};

/// All type-preserving bijections I(c) -> I(c2), enumerated by backtracking
/// over per-arrow-type blocks, in lexicographic order of the image sequence.
/// Empty iff the cells are not input isomorphic.
[[nodiscard]] std::vector<InputIsomorphism> input_isomorphisms(
    const TypedNetwork& net, CellIndex c, CellIndex c2);

/// Existence test without enumeration: per-arrow-type input multiplicities
/// of the two cells coincide (and the cell types match).
[[nodiscard]] bool input_isomorphic(const TypedNetwork& net, CellIndex c,
                                    CellIndex c2);

/// Partition of the cell set into input-isomorphism classes, each class
/// listed in canonical cell order; classes ordered by their representative
/// (lowest member). The representative is class.front().
[[nodiscard]] std::vector<std::vector<CellIndex>> input_isomorphism_classes(
    const TypedNetwork& net);

/// Values x_{T(beta(a))} for the user arrows a of I(source), canonical order.
[[nodiscard]] std::vector<Vec> pullback(const TypedNetwork& net,
                                        const InputIsomorphism& beta,
                                        const Vec& x);

// ===========================================================================
// Doubled network
// ===========================================================================

struct DoubledNetwork {
  TypedNetwork net;  ///< two disconnected typed copies, ids suffixed #1 / #2
  std::vector<CellIndex> copy1;  ///< original cell index -> first-copy index
  std::vector<CellIndex> copy2;  ///< original cell index -> second-copy index
};

/// Duplicates cells and arrows with types preserved; the copies share no
/// arrows. Ids gain #1 / #2 suffixes, so original ids must not contain '#'.
[[nodiscard]] DoubledNetwork doubled_network(const TypedNetwork& net);

}  // namespace ccn
