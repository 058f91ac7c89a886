#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ccn/coloring.hpp"
#include "ccn/network.hpp"
#include "fixtures.hpp"

using namespace ccn;
using namespace ccn::testing;

namespace {

std::set<std::string> catalogue(const TypedNetwork& net,
                                const std::vector<Coloring>& cols) {
  std::set<std::string> out;
  for (const auto& c : cols) out.insert(to_string(net, c));
  return out;
}

bool contains(const TypedNetwork&, const std::vector<Coloring>& cols,
              const Coloring& wanted) {
  return std::any_of(cols.begin(), cols.end(),
                     [&](const Coloring& c) { return c == wanted; });
}

}  // namespace

// ===========================================================================
// Coloring basics
// ===========================================================================

TEST_CASE("colorings canonicalize by first appearance") {
  auto net = build(fig1_spec());
  Coloring c;
  c.color = {2, 0, 2, 1};
  c.canonicalize();
  CHECK(c.color == std::vector<int>{0, 1, 0, 2});
  CHECK(c.n_colors() == 3);
  CHECK(c.same(0, 2));
  CHECK_FALSE(c.same(0, 1));
  CHECK(to_string(net, c) == "{c1 c3} {c2} {c4}");
  CHECK(c.classes() ==
        std::vector<std::vector<CellIndex>>{{0, 2}, {1}, {3}});
}

TEST_CASE("merge_cells builds the requested partition") {
  auto net = build(fig3_spec());
  auto col = merge_cells(net, {{"c3", "c4", "c7"}, {"c5", "c6"}});
  CHECK(col.n_colors() == 7);
  CHECK(col.same(*net.find_cell("c3"), *net.find_cell("c7")));
  CHECK_FALSE(col.same(*net.find_cell("c1"), *net.find_cell("c2")));
  CHECK_THROWS_AS(merge_cells(net, {{"c3", "nope"}}), std::invalid_argument);
}

TEST_CASE("is_finer is a partial order on colorings") {
  auto net = build(fig1_spec());
  auto all = enumerate_balanced(net);
  REQUIRE_FALSE(all.empty());
  auto trivial = trivial_coloring(net);
  for (const auto& a : all) {
    CHECK(is_finer(trivial, a));
    CHECK(is_finer(a, a));  // reflexive
    for (const auto& b : all) {
      if (is_finer(a, b) && is_finer(b, a)) CHECK(a == b);  // antisymmetric
      for (const auto& c : all)
        if (is_finer(a, b) && is_finer(b, c)) CHECK(is_finer(a, c));
    }
  }
}

TEST_CASE("coloring files round-trip") {
  auto net = build(fig1_spec());
  auto col = merge_cells(net, {{"c1", "c3"}});
  auto text = write_coloring(net, col);
  CHECK(read_coloring(net, text) == col);
  CHECK_THROWS(read_coloring(net, R"({"colors": {"c1": 0}})"));  // missing cells
  CHECK_THROWS(read_coloring(net, R"({"colors": {"c1": 0, "c2": 0,
                                       "c3": 0, "c4": 0, "zz": 1}})"));
}

// ===========================================================================
// Balancedness
// ===========================================================================

TEST_CASE("cross-type merges are unbalanced with a type-mismatch witness") {
  auto net = build(fig1_spec());
  auto cert = is_balanced(net, merge_cells(net, {{"c1", "c2"}}));
  REQUIRE_FALSE(cert.balanced);
  CHECK(cert.reason == BalancednessCertificate::Reason::type_mismatch);
  std::set<std::string> witness = {net.cell(cert.witness_a).id,
                                   net.cell(cert.witness_b).id};
  CHECK(witness == std::set<std::string>{"c1", "c2"});
}

TEST_CASE("balanced certificates carry one iso per ordered same-color pair") {
  auto net = build(fig1_spec());
  auto cert = is_balanced(net, merge_cells(net, {{"c1", "c3"}, {"c2", "c4"}}));
  REQUIRE(cert.balanced);
  // Ordered distinct pairs: (c1,c3), (c3,c1), (c2,c4), (c4,c2).
  CHECK(cert.isos.size() == 4);
  for (const auto& iso : cert.isos) {
    CHECK(iso.source != iso.target);
    CHECK(net.cell(iso.source).type == net.cell(iso.target).type);
  }
}

TEST_CASE("four-cell fixture: the balanced catalogue is exactly four") {
  auto net = build(fig1_spec());
  auto cols = enumerate_balanced(net);
  REQUIRE(cols.size() == 4);
  auto got = catalogue(net, cols);
  std::set<std::string> want = {
      "{c1 c3} {c2 c4}",
      "{c1 c3} {c2} {c4}",
      "{c1} {c2 c4} {c3}",
      "{c1} {c2} {c3} {c4}",
  };
  CHECK(got == want);
  for (const auto& c : cols) CHECK(is_balanced(net, c).balanced);
}

TEST_CASE("ten-cell fixture: catalogue contents") {
  auto net = build(fig3_spec());
  auto cols = enumerate_balanced(net);
  CHECK(cols.size() == 8);

  // Pairs with a shared input cell may merge alone.
  CHECK(contains(net, cols, merge_cells(net, {{"c3", "c7"}})));
  // The full middle merge needs both levels at once.
  CHECK(contains(net, cols,
                 merge_cells(net, {{"c3", "c4", "c7"}, {"c5", "c6"}})));
  CHECK_FALSE(contains(net, cols, merge_cells(net, {{"c3", "c4", "c7"}})));
  CHECK_FALSE(contains(net, cols, merge_cells(net, {{"c5", "c6"}})));
  // A self-loop aligned with a plain arrow still balances.
  CHECK(contains(net, cols, merge_cells(net, {{"c1", "c2"}})));

  // No balanced coloring merges c2 with c9: that would force c1 with c10,
  // whose input arrow types differ.
  auto c2 = *net.find_cell("c2");
  auto c9 = *net.find_cell("c9");
  for (const auto& c : cols) CHECK_FALSE(c.same(c2, c9));
  auto cert = is_balanced(net, merge_cells(net, {{"c2", "c9"}}));
  REQUIRE_FALSE(cert.balanced);
  CHECK(cert.reason ==
        BalancednessCertificate::Reason::no_color_preserving_iso);
}

TEST_CASE("directed six-cycle: balanced colorings are the modular ones") {
  auto net = build(ring6_spec());
  auto cols = enumerate_balanced(net);
  auto got = catalogue(net, cols);
  std::set<std::string> want = {
      "{r1 r2 r3 r4 r5 r6}",
      "{r1 r3 r5} {r2 r4 r6}",
      "{r1 r4} {r2 r5} {r3 r6}",
      "{r1} {r2} {r3} {r4} {r5} {r6}",
  };
  CHECK(got == want);
}

TEST_CASE("enumeration matches the brute-force oracle on small fixtures") {
  const NetworkSpec specs[] = {fig1_spec(),   chain2_spec(), triple_spec(),
                               single_spec(), duo2d_spec(),  ring6_spec()};
  for (const auto& spec : specs) {
    auto net = build(spec);
    INFO("fixture with " << net.n_cells() << " cells");
    auto fast = enumerate_balanced(net);
    auto slow = brute_force_balanced(net);
    auto key = [](const Coloring& c) { return c.color; };
    std::vector<std::vector<int>> a, b;
    for (const auto& c : fast) a.push_back(key(c));
    for (const auto& c : slow) b.push_back(key(c));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("enumeration refuses oversized networks instead of hanging") {
  NetworkSpec s;
  s.cell_type("S", 1);
  for (int i = 0; i < 30; ++i) s.cell("n" + std::to_string(i), "S");
  auto net = build(s);
  CHECK_THROWS_AS(enumerate_balanced(net, 24), std::invalid_argument);
}

TEST_CASE("balanced_refinement finds the coarsest balanced refinement") {
  auto fig3 = build(fig3_spec());
  // Refining the all-in-one seed yields the top of the balanced lattice.
  Coloring seed;
  seed.color.assign(static_cast<std::size_t>(fig3.n_cells()), 0);
  auto top = balanced_refinement(fig3, seed);
  CHECK(to_string(fig3, top) ==
        "{c1 c2} {c3 c4 c7} {c5 c6} {c8} {c9} {c10}");
  CHECK(is_balanced(fig3, top).balanced);
  // Every balanced coloring is finer than the top.
  for (const auto& c : enumerate_balanced(fig3)) CHECK(is_finer(c, top));
  // Refinement is idempotent and never coarsens.
  CHECK(balanced_refinement(fig3, top) == top);
  auto fine = merge_cells(fig3, {{"c3", "c4"}});
  auto r = balanced_refinement(fig3, fine);
  CHECK(is_finer(r, fine));
  CHECK(is_balanced(fig3, r).balanced);
}

TEST_CASE("has_color_preserving_iso distinguishes directions of evidence") {
  auto net = build(fig3_spec());
  auto col = merge_cells(net, {{"c3", "c7"}, {"c5", "c6"}});
  REQUIRE(is_balanced(net, col).balanced);
  // With only c3~c7 merged, c5 and c6 still admit the cross mapping.
  CHECK(has_color_preserving_iso(net, col, *net.find_cell("c5"),
                                 *net.find_cell("c6")));
  auto bad = merge_cells(net, {{"c3", "c4"}, {"c5", "c6"}});
  CHECK_FALSE(has_color_preserving_iso(net, bad, *net.find_cell("c5"),
                                       *net.find_cell("c6")));
}

// ===========================================================================
// Synchrony spaces
// ===========================================================================

TEST_CASE("synchrony membership needs equality inside and separation outside") {
  auto net = build(fig1_spec());
  auto col = merge_cells(net, {{"c1", "c3"}});
  const double tol = 1e-9;

  Vec x(4);
  x << 0.5, 0.2, 0.5, 0.9;
  CHECK(in_synchrony_space(net, col, x, tol));

  SECTION("violated equality") {
    x(2) = 0.5 + 1e-6;
    CHECK_FALSE(in_synchrony_space(net, col, x, tol));
  }
  SECTION("gray-band separation fails") {
    x(3) = x(1) + 5 * tol;  // distinct cells closer than 10*tol
    CHECK_FALSE(in_synchrony_space(net, col, x, tol));
  }
  SECTION("coarser agreement than declared fails") {
    x(3) = x(1);  // c2 = c4 although the coloring separates them
    CHECK_FALSE(in_synchrony_space(net, col, x, tol));
  }
}

TEST_CASE("synchrony_point lays one block per color") {
  auto net = build(duo2d_spec());
  auto col = merge_cells(net, {{"m1", "m2"}});
  Vec block(2);
  block << 3.0, -1.0;
  Vec x = synchrony_point(net, col, {block});
  REQUIRE(x.size() == 4);
  CHECK(x(0) == 3.0);
  CHECK(x(2) == 3.0);
  CHECK(x(3) == -1.0);
  CHECK_THROWS_AS(synchrony_point(net, col, {block, block}),
                  std::invalid_argument);
}

// ===========================================================================
// Quotients
// ===========================================================================

TEST_CASE("quotient of a balanced coloring is a valid network") {
  auto net = build(fig1_spec());
  auto q = quotient_network(net, merge_cells(net, {{"c1", "c3"}}));
  CHECK(q.net.n_cells() == 3);
  CHECK(q.net.n_arrows(false) == 6);
  // Representatives keep their ids; arrows land on representative tails.
  CHECK(q.net.find_cell("c1").has_value());
  CHECK(q.net.find_cell("c3") == std::nullopt);
  for (ArrowIndex a = 0; a < q.net.n_arrows(false); ++a)
    CHECK_FALSE(q.net.arrow(a).internal);

  // Input multiplicities per arrow type survive the projection.
  auto c2_inputs = inputs(q.net, *q.net.find_cell("c2"));
  CHECK(c2_inputs.arrows.size() == 2);
  for (ArrowIndex a : c2_inputs.arrows)
    CHECK(q.net.cell(q.net.arrow(a).tail).id == "c1");
}

TEST_CASE("quotient rejects unbalanced colorings") {
  auto net = build(fig1_spec());
  CHECK_THROWS_AS(quotient_network(net, merge_cells(net, {{"c2", "c4"},
                                                          {"c1", "c2"}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(quotient_network(net, merge_cells(net, {{"c1", "c2"}})),
                  std::invalid_argument);
}

TEST_CASE("project and lift are mutually inverse on the synchrony space") {
  auto net = build(fig3_spec());
  auto col = merge_cells(net, {{"c3", "c4", "c7"}, {"c5", "c6"}});
  auto q = quotient_network(net, col);
  CHECK(q.net.n_cells() == 7);

  Vec blocks(7);
  blocks << 1, 2, 3, 4, 5, 6, 7;
  std::vector<Vec> per_color;
  for (int k = 0; k < 7; ++k) per_color.push_back(blocks.segment(k, 1));
  Vec x = synchrony_point(net, col, per_color);

  Vec qx = q.project(net, x);
  REQUIRE(qx.size() == q.net.state_dim());
  Vec back = q.lift(net, qx);
  CHECK((back - x).cwiseAbs().maxCoeff() == 0.0);

  // Projection after lift is the identity on quotient states.
  CHECK((q.project(net, q.lift(net, qx)) - qx).cwiseAbs().maxCoeff() == 0.0);
}
