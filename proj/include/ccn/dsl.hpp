#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "ccn/field.hpp"
#include "ccn/network.hpp"

namespace ccn {

/// Parse or binding failure with source position.
class DslError : public std::runtime_error {
 public:
  DslError(int line_, int col_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ", col " +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
  int line;
  int col;
};

// ===========================================================================
// Field definition language
//
//   file        = { param_decl | class_def } ;
//   param_decl  = "param" ident "=" number ";" ;
//   class_def   = [ "raw" ] "class" ident "(" ident ")"
//                 "{" "dx" "=" expr ";" "}" ;
//
// The parenthesized identifier names a cell; the definition applies to that
// cell's whole input-isomorphism class. Expressions are built from numbers,
// parameters, `self`, arithmetic (+ - * / ^, right-associative ^), the
// functions sin cos tan exp log sqrt tanh abs min max pow, vector helpers
// `vec(e1, ..., en)` and `comp(e, k)`, and aggregates over the cell's input
// arrows of one type:
//
//   agg_sum(T, u -> expr)      agg_mean(T, u -> expr)  agg_prod(T, u -> expr)
//   agg_esym(T, k, u -> expr)  agg_psum(T, k, u -> expr)
//
// Aggregates are symmetric in the inputs, and their operands are sorted
// before reduction so the symmetry holds bitwise. Positional access
// `input(T, k)` is rejected unless the class is declared `raw`; raw classes
// are the donor half of symmetrize() and are not admissible by themselves.
// Scalars broadcast against vectors; all dimensions are checked at parse
// time against the network. Comments run from '#' to end of line.
// ===========================================================================

/// A field compiled from definition-language source, bound to a network.
class FieldSpec final : public Field {
 public:
  /// Parses and binds `src`. Every input-isomorphism class must be covered
  /// by exactly one class definition unless `require_all_classes` is false,
  /// in which case uncovered classes evaluate to zero. `params` overrides
  /// declared parameter defaults; overriding an undeclared name throws.
  [[nodiscard]] static std::shared_ptr<FieldSpec> parse(
      const std::string& src, const TypedNetwork& net,
      const std::map<std::string, double>& params = {},
      bool require_all_classes = true);

  ~FieldSpec() override;

  [[nodiscard]] Vec eval_cell(CellIndex c, const Vec& self,
                              const std::vector<Vec>& user_inputs) const override;

  [[nodiscard]] int n_classes() const;
  [[nodiscard]] int class_of(CellIndex c) const;
  [[nodiscard]] CellIndex class_rep(int k) const;
  [[nodiscard]] bool class_defined(int k) const;
  [[nodiscard]] bool class_raw(int k) const;
  /// Scalar raw function of a defined class, for symmetrization. Throws
  /// when the class is undefined or its expression is not scalar.
  [[nodiscard]] RawCellFn raw_fn(int k) const;

  [[nodiscard]] std::map<std::string, double> params() const;
  [[nodiscard]] const std::string& source() const;

  struct Impl;  ///< defined in the implementation file only

 private:
  explicit FieldSpec(const TypedNetwork& net, std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Shorthand for FieldSpec::parse with every class required.
[[nodiscard]] std::shared_ptr<FieldSpec> parse_field(
    const std::string& src, const TypedNetwork& net,
    const std::map<std::string, double>& params = {});

}  // namespace ccn
