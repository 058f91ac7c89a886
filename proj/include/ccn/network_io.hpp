#pragma once

#include <iosfwd>
#include <string>

#include "ccn/network.hpp"

namespace ccn {

/// Malformed interchange data (bad JSON, unknown fields, wrong types).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network interchange document, version 1:
///   { "version": 1,
///     "cell_types": [{"id": "...", "dim": 1}, ...],
///     "arrow_types": ["...", ...],
///     "cells":  [{"id": "...", "type": "..."}, ...],
///     "arrows": [{"id": "...", "type": "...", "tail": "...", "head": "..."}] }
/// Unknown fields are rejected; ids are nonempty strings.
[[nodiscard]] NetworkSpec read_network_spec(const std::string& json_text);
[[nodiscard]] NetworkSpec read_network_file(const std::string& path);

/// Serializes the user-declared part of a validated network (internal
/// self-arrows are omitted; validation reinserts them on read).
[[nodiscard]] std::string write_network(const TypedNetwork& net);

/// State document: { "state": { "<cellId>": [x0, x1, ...] | x0, ... } }.
/// Every cell must be assigned; scalars are accepted for dimension-1 cells.
[[nodiscard]] Vec read_state(const TypedNetwork& net,
                             const std::string& json_text);
[[nodiscard]] Vec read_state_file(const TypedNetwork& net,
                                  const std::string& path);
[[nodiscard]] std::string write_state(const TypedNetwork& net, const Vec& x);

/// Reads a whole file into memory.
[[nodiscard]] std::string slurp_file(const std::string& path);

}  // namespace ccn
