#pragma once

// Shared network builders for the test suites. Each builder mirrors the JSON
// fixture of the same name under fixtures/, so file-IO tests can cross-check
// the parsed result against the in-code construction.

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ccn/network.hpp"

namespace ccn::testing {

/// Four cells in two alternating types; every cell listens to both cells of
/// the opposite type through one arrow type per direction.
inline NetworkSpec fig1_spec() {
  NetworkSpec s;
  s.cell_type("L", 1).cell_type("R", 1);
  s.arrow_type("rl").arrow_type("lr");
  s.cell("c1", "L").cell("c2", "R").cell("c3", "L").cell("c4", "R");
  s.arrow("a1", "rl", "c2", "c1").arrow("a2", "rl", "c4", "c1");
  s.arrow("a3", "lr", "c1", "c2").arrow("a4", "lr", "c3", "c2");
  s.arrow("a5", "rl", "c2", "c3").arrow("a6", "rl", "c4", "c3");
  s.arrow("a7", "lr", "c1", "c4").arrow("a8", "lr", "c3", "c4");
  return s;
}

/// Ten cells, three cell types, seventeen arrows in five types. Disconnected
/// on purpose (c8 only talks to itself) and with one deliberately mismatched
/// arrow type (qp_alt into c10) that blocks any left/right synchrony.
inline NetworkSpec fig3_spec() {
  NetworkSpec s;
  s.cell_type("P", 1).cell_type("Q", 1).cell_type("R", 1);
  s.arrow_type("pp").arrow_type("qp").arrow_type("qp_alt");
  s.arrow_type("rq").arrow_type("qr");
  s.cell("c1", "P").cell("c2", "P");
  s.cell("c3", "Q").cell("c4", "Q");
  s.cell("c5", "R").cell("c6", "R");
  s.cell("c7", "Q").cell("c8", "P").cell("c9", "P").cell("c10", "P");
  s.arrow("a1", "pp", "c1", "c1").arrow("a2", "pp", "c1", "c2");
  s.arrow("a3", "qp", "c4", "c1").arrow("a4", "qp", "c4", "c2");
  s.arrow("a5", "qr", "c3", "c5").arrow("a6", "rq", "c5", "c3");
  s.arrow("a7", "qr", "c4", "c6").arrow("a8", "rq", "c6", "c4");
  s.arrow("a9", "qr", "c7", "c6").arrow("a10", "qr", "c4", "c5");
  s.arrow("a11", "rq", "c5", "c7");
  s.arrow("a12", "pp", "c8", "c8").arrow("a13", "pp", "c8", "c8");
  s.arrow("a14", "pp", "c10", "c10").arrow("a15", "qp_alt", "c7", "c10");
  s.arrow("a16", "pp", "c10", "c9").arrow("a17", "qp", "c7", "c9");
  return s;
}

/// Two identical cells, one arrow from u down to d.
inline NetworkSpec chain2_spec() {
  NetworkSpec s;
  s.cell_type("S", 1);
  s.arrow_type("t");
  s.cell("u", "S").cell("d", "S");
  s.arrow("a1", "t", "u", "d");
  return s;
}

/// Three identical cells where only A has an input (from C); B and C are
/// input-isomorphic to each other but not to A.
inline NetworkSpec triple_spec() {
  NetworkSpec s;
  s.cell_type("S", 1);
  s.arrow_type("t");
  s.cell("A", "S").cell("B", "S").cell("C", "S");
  s.arrow("a1", "t", "C", "A");
  return s;
}

/// One isolated cell, no user arrows.
inline NetworkSpec single_spec() {
  NetworkSpec s;
  s.cell_type("S", 1);
  s.cell("x", "S");
  return s;
}

/// Two planar cells coupled both ways through a single arrow type.
inline NetworkSpec duo2d_spec() {
  NetworkSpec s;
  s.cell_type("M", 2);
  s.arrow_type("t");
  s.cell("m1", "M").cell("m2", "M");
  s.arrow("a1", "t", "m1", "m2").arrow("a2", "t", "m2", "m1");
  return s;
}

/// Directed six-cycle of identical cells.
inline NetworkSpec ring6_spec() {
  NetworkSpec s;
  s.cell_type("S", 1);
  s.arrow_type("t");
  for (int k = 1; k <= 6; ++k) s.cell("r" + std::to_string(k), "S");
  for (int k = 1; k <= 6; ++k) {
    s.arrow("e" + std::to_string(k), "t", "r" + std::to_string(k),
            "r" + std::to_string(k % 6 + 1));
  }
  return s;
}

[[nodiscard]] inline TypedNetwork build(const NetworkSpec& spec) {
  return make_validated(spec);
}

/// Directory holding the JSON/DSL fixtures, exported by the test harness.
[[nodiscard]] inline std::string fixture_dir() {
  const char* dir = std::getenv("CCN_FIXTURE_DIR");
  if (dir == nullptr || *dir == '\0') {
    throw std::runtime_error("CCN_FIXTURE_DIR is not set");
  }
  return dir;
}

[[nodiscard]] inline std::string fixture_path(const std::string& name) {
  return fixture_dir() + "/" + name;
}

/// Path of the command line binary, exported by the test harness.
[[nodiscard]] inline std::string cli_path() {
  const char* bin = std::getenv("CCN_BIN");
  if (bin == nullptr || *bin == '\0') {
    throw std::runtime_error("CCN_BIN is not set");
  }
  return bin;
}

}  // namespace ccn::testing
