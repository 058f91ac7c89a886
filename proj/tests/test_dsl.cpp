#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ccn/dsl.hpp"
#include "ccn/field.hpp"
#include "ccn/network.hpp"
#include "ccn/network_io.hpp"
#include "fixtures.hpp"

using namespace ccn;
using ccn::testing::build;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

/// Hub cell with three same-type inputs, for order-k aggregate oracles.
NetworkSpec hub3_spec() {
  NetworkSpec s;
  s.cell_type("S", 1);
  s.arrow_type("t");
  s.cell("h", "S").cell("s1", "S").cell("s2", "S").cell("s3", "S");
  s.arrow("e1", "t", "s1", "h");
  s.arrow("e2", "t", "s2", "h");
  s.arrow("e3", "t", "s3", "h");
  return s;
}

/// Evaluates `expr` as the dx of the lone no-input cell `x`, at state x0.
double eval1(const std::string& expr, double x0,
             const std::map<std::string, double>& params = {},
             const std::string& prelude = "") {
  static const TypedNetwork net = build(ccn::testing::single_spec());
  auto f = parse_field(prelude + "class C(x) { dx = " + expr + "; }", net,
                       params);
  Vec x(1);
  x << x0;
  return f->eval(x)(0);
}

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

// ===========================================================================
// Parsing and binding errors
// ===========================================================================

TEST_CASE("parse errors carry source positions and name the offence") {
  const TypedNetwork fig1 = build(ccn::testing::fig1_spec());

  SECTION("missing semicolon") {
    REQUIRE_THROWS_AS(parse_field("class A(c1) { dx = self }", fig1),
                      DslError);
  }
  SECTION("unknown cell") {
    REQUIRE_THROWS_WITH(parse_field("class A(zz) { dx = 0; }", fig1),
                        ContainsSubstring("unknown cell 'zz'"));
  }
  SECTION("unknown arrow type") {
    REQUIRE_THROWS_WITH(
        parse_field("class A(c1) { dx = agg_sum(nope, u -> u); }", fig1),
        ContainsSubstring("unknown arrow type 'nope'"));
  }
  SECTION("aggregate over a type the class never receives") {
    // c1 only has rl inputs.
    REQUIRE_THROWS_WITH(
        parse_field("class A(c1) { dx = agg_sum(lr, u -> u); }", fig1),
        ContainsSubstring("no inputs of type 'lr'"));
  }
  SECTION("duplicate class name") {
    REQUIRE_THROWS_WITH(
        parse_field("class A(c1) { dx = 0; } class A(c2) { dx = 0; }", fig1),
        ContainsSubstring("already defined"));
  }
  SECTION("two definitions for one input class") {
    // c1 and c3 receive isomorphic inputs, so a second definition clashes.
    REQUIRE_THROWS_WITH(
        parse_field("class A(c1) { dx = 0; } class B(c3) { dx = 0; }", fig1),
        ContainsSubstring("shares its input class"));
  }
  SECTION("duplicate parameter") {
    REQUIRE_THROWS_WITH(
        parse_field("param a = 1; param a = 2; class A(c1) { dx = 0; }",
                    fig1),
        ContainsSubstring("already declared"));
  }
  SECTION("unknown identifier") {
    REQUIRE_THROWS_WITH(parse_field("class A(c1) { dx = sinh(self); }", fig1),
                        ContainsSubstring("unknown identifier 'sinh'"));
  }
  SECTION("wrong arity") {
    REQUIRE_THROWS_WITH(parse_field("class A(c1) { dx = min(self); }", fig1),
                        ContainsSubstring("takes 2 argument(s)"));
  }
  SECTION("positions point at the offending token") {
    try {
      (void)parse_field(
          "param a = 1;\nclass A(c1) { dx = agg_sum(lr, u -> u); }", fig1);
      FAIL("expected a DslError");
    } catch (const DslError& e) {
      CHECK(e.line == 2);
      CHECK(e.col > 1);
      CHECK_THAT(e.what(), ContainsSubstring("line 2"));
    }
  }
}

TEST_CASE("dimension checks run at parse time") {
  const TypedNetwork duo = build(ccn::testing::duo2d_spec());
  const TypedNetwork single = build(ccn::testing::single_spec());

  SECTION("vec arity must match the cell dimension") {
    REQUIRE_THROWS_WITH(
        parse_field("class V(x) { dx = vec(self, self); }", single),
        ContainsSubstring("dx has dimension 2"));
  }
  SECTION("comp index is zero-based and bounds-checked") {
    REQUIRE_THROWS_WITH(
        parse_field("class V(m1) { dx = comp(self, 2) + self; }", duo),
        ContainsSubstring("component index 2 out of range"));
    REQUIRE_NOTHROW(
        parse_field("class V(m1) { dx = comp(self, 1) + self; }", duo));
  }
  SECTION("mismatched vector dimensions are rejected") {
    NetworkSpec s;
    s.cell_type("A", 2).cell_type("B", 3);
    s.arrow_type("t");
    s.cell("a", "A").cell("b", "B");
    s.arrow("e1", "t", "b", "a");
    const TypedNetwork net = build(s);
    REQUIRE_THROWS_WITH(
        parse_field("class CA(a) { dx = self + agg_sum(t, u -> u); } "
                    "class CB(b) { dx = self; }",
                    net),
        ContainsSubstring("dimension mismatch: 2 vs 3"));
  }
}

// ===========================================================================
// Parameters
// ===========================================================================

TEST_CASE("parameters default, override, and reject unknown names") {
  CHECK_THAT(eval1("a*self + b", 2.0, {}, "param a = 0.5; param b = -0.25;"),
             WithinAbs(0.75, 1e-15));
  CHECK_THAT(eval1("a*self + b", 2.0, {{"a", 3.0}},
                   "param a = 0.5; param b = -0.25;"),
             WithinAbs(5.75, 1e-15));

  const TypedNetwork single = build(ccn::testing::single_spec());
  REQUIRE_THROWS_AS(
      parse_field("param a = 1; class C(x) { dx = a; }", single, {{"zz", 1}}),
      std::invalid_argument);

  auto f = parse_field("param a = 1; class C(x) { dx = a; }", single,
                       {{"a", 7.0}});
  CHECK(f->params().at("a") == 7.0);
  CHECK_THAT(f->source(), ContainsSubstring("param a = 1;"));
}

// ===========================================================================
// Expression semantics
// ===========================================================================

TEST_CASE("arithmetic precedence and associativity") {
  CHECK(eval1("2 + 3 * 4 ^ 2", 0.0) == 50.0);
  CHECK(eval1("-2^2", 0.0) == -4.0);        // unary minus binds looser than ^
  CHECK(eval1("(-2)^2", 0.0) == 4.0);
  CHECK(eval1("2^3^2", 0.0) == 512.0);      // right-associative
  CHECK(eval1("(2^3)^2", 0.0) == 64.0);
  CHECK(eval1("6 / 3 / 2", 0.0) == 1.0);    // left-associative
  CHECK(eval1("2 - 3 - 4", 0.0) == -5.0);
  CHECK(eval1("-self^2", 3.0) == -9.0);
  CHECK(eval1("+5 - +2", 0.0) == 3.0);
  CHECK(eval1("2^-1", 0.0) == 0.5);
}

TEST_CASE("scalar functions match the standard library") {
  CHECK_THAT(eval1("sin(self)", 0.7), WithinAbs(std::sin(0.7), 1e-15));
  CHECK_THAT(eval1("cos(self)", 0.7), WithinAbs(std::cos(0.7), 1e-15));
  CHECK_THAT(eval1("tan(self)", 0.7), WithinAbs(std::tan(0.7), 1e-15));
  CHECK_THAT(eval1("exp(self)", 0.7), WithinAbs(std::exp(0.7), 1e-15));
  CHECK_THAT(eval1("log(self)", 0.7), WithinAbs(std::log(0.7), 1e-15));
  CHECK_THAT(eval1("sqrt(self)", 0.7), WithinAbs(std::sqrt(0.7), 1e-15));
  CHECK_THAT(eval1("tanh(self)", 0.7), WithinAbs(std::tanh(0.7), 1e-15));
  CHECK(eval1("abs(self)", -0.7) == 0.7);
  CHECK(eval1("min(self, 0.5)", 0.7) == 0.5);
  CHECK(eval1("max(self, 0.5)", 0.7) == 0.7);
  CHECK_THAT(eval1("pow(self, 3)", 0.7), WithinAbs(0.343, 1e-15));
}

TEST_CASE("guarded evaluation failures name the cell") {
  auto expect_eval_error = [](const std::string& expr, double x0,
                              const std::string& what) {
    try {
      (void)eval1(expr, x0);
      FAIL("expected an EvalError for " + expr);
    } catch (const EvalError& e) {
      CHECK(e.cell == "x");
      CHECK_THAT(e.what(), ContainsSubstring(what));
    }
  };
  expect_eval_error("log(self)", 0.0, "log of a nonpositive value");
  expect_eval_error("sqrt(self)", -1.0, "sqrt of a negative value");
  expect_eval_error("1 / self", 0.0, "division by zero");
  expect_eval_error("self ^ 0.5", -1.0, "fractional power of a negative");
  expect_eval_error("self ^ -1", 0.0, "zero raised to a negative power");
}

TEST_CASE("comments and signed parameter literals") {
  const std::string src =
      "# leading comment\n"
      "param a = -0.25;  # trailing comment\n"
      "class C(x) {\n"
      "  # inside the body\n"
      "  dx = a * self;\n"
      "}\n";
  const TypedNetwork single = build(ccn::testing::single_spec());
  auto f = parse_field(src, single);
  CHECK(f->eval(v1(4.0))(0) == -1.0);
}

// ===========================================================================
// Vector cells
// ===========================================================================

TEST_CASE("vector helpers, broadcasting, and elementwise maps") {
  const TypedNetwork duo = build(ccn::testing::duo2d_spec());
  const Vec self = v2(0.5, 1.5);
  const std::vector<Vec> in = {v2(-1.0, 2.0)};

  auto dx = [&](const std::string& body) {
    auto f = parse_field("class V(m1) { dx = " + body + "; }", duo);
    return f->eval_cell(0, self, in);
  };

  SECTION("one-argument functions act elementwise") {
    Vec r = dx("sin(self)");
    CHECK_THAT(r(0), WithinAbs(std::sin(0.5), 1e-15));
    CHECK_THAT(r(1), WithinAbs(std::sin(1.5), 1e-15));
  }
  SECTION("comp extracts zero-based components") {
    Vec r = dx("vec(comp(self, 1), comp(self, 0))");
    CHECK(r == v2(1.5, 0.5));
  }
  SECTION("scalars broadcast against vectors") {
    CHECK(dx("self + 1") == v2(1.5, 2.5));
    CHECK(dx("2 * self") == v2(1.0, 3.0));
    CHECK(dx("max(self, 1)") == v2(1.0, 1.5));
  }
  SECTION("a scalar dx fills every component") {
    CHECK(dx("3") == v2(3.0, 3.0));
  }
  SECTION("aggregates carry the input dimension") {
    CHECK(dx("agg_sum(t, u -> u) - self") == v2(-1.5, 0.5));
    CHECK(dx("agg_sum(t, u -> comp(u, 0) * self)") == v2(-0.5, -1.5));
  }
}

// ===========================================================================
// Aggregates
// ===========================================================================

TEST_CASE("first-order aggregates against hand-computed values") {
  const TypedNetwork fig1 = build(ccn::testing::fig1_spec());
  Vec x(4);
  x << 1.0, 2.0, 3.0, 4.0;

  auto full = [&](const std::string& gl, const std::string& gr) {
    auto f = parse_field("class GL(c1) { dx = " + gl +
                             "; } class GR(c2) { dx = " + gr + "; }",
                         fig1);
    return f->eval(x);
  };

  SECTION("sum") {
    Vec f = full("-self + agg_sum(rl, u -> u)", "-self + agg_sum(lr, u -> u)");
    // c1 hears c2,c4; c2 hears c1,c3; c3 hears c2,c4; c4 hears c1,c3.
    CHECK(f(0) == 5.0);
    CHECK(f(1) == 2.0);
    CHECK(f(2) == 3.0);
    CHECK(f(3) == 0.0);
  }
  SECTION("mean") {
    Vec f = full("agg_mean(rl, u -> u)", "agg_mean(lr, u -> u)");
    CHECK(f(0) == 3.0);
    CHECK(f(1) == 2.0);
  }
  SECTION("product with a kernel") {
    Vec f = full("agg_prod(rl, u -> u + 1)", "agg_prod(lr, u -> u + 1)");
    CHECK(f(0) == 15.0);  // (2+1)(4+1)
    CHECK(f(1) == 8.0);   // (1+1)(3+1)
  }
  SECTION("kernels close over self") {
    Vec f = full("agg_sum(rl, u -> u * self)", "0");
    CHECK(f(0) == 6.0);   // (2+4)*1
    CHECK(f(2) == 18.0);  // (2+4)*3
  }
}

TEST_CASE("higher-order symmetric aggregates") {
  const TypedNetwork hub = build(hub3_spec());
  const CellIndex h = *hub.find_cell("h");
  const Vec self = v1(0.0);
  const std::vector<Vec> in = {v1(2.0), v1(3.0), v1(5.0)};

  auto at_h = [&](const std::string& body) {
    auto f = FieldSpec::parse("class H(h) { dx = " + body + "; }", hub, {},
                              /*require_all_classes=*/false);
    return f->eval_cell(h, self, in)(0);
  };

  CHECK(at_h("agg_psum(t, 1, u -> u)") == 10.0);
  CHECK(at_h("agg_psum(t, 2, u -> u)") == 38.0);   // 4 + 9 + 25
  CHECK(at_h("agg_psum(t, 3, u -> u)") == 160.0);  // 8 + 27 + 125
  CHECK(at_h("agg_esym(t, 1, u -> u)") == 10.0);
  CHECK(at_h("agg_esym(t, 2, u -> u)") == 31.0);   // 6 + 10 + 15
  CHECK(at_h("agg_esym(t, 3, u -> u)") == 30.0);
  CHECK(at_h("agg_esym(t, 2, u -> u - 1)") == 14.0);  // 1*2 + 1*4 + 2*4

  SECTION("order bounds are enforced at parse time") {
    REQUIRE_THROWS_WITH(at_h("agg_esym(t, 4, u -> u)"),
                        ContainsSubstring("order must lie in [1, 3]"));
    REQUIRE_THROWS_WITH(at_h("agg_esym(t, 0, u -> u)"),
                        ContainsSubstring("order must lie in [1, 3]"));
    REQUIRE_THROWS_WITH(at_h("agg_psum(t, 0, u -> u)"),
                        ContainsSubstring("order must be at least 1"));
  }
}

TEST_CASE("aggregate reductions are bitwise permutation-invariant") {
  const TypedNetwork hub = build(hub3_spec());
  const CellIndex h = *hub.find_cell("h");
  const Vec self = v1(0.3);

  // 0.1 + (0.2 + 0.3) differs from (0.1 + 0.2) + 0.3 in the last ulp, so an
  // unsorted reduction would leak the input order into the result.
  const std::vector<double> base = {0.1, 0.2, 0.3};
  const std::vector<std::string> bodies = {
      "agg_sum(t, u -> u)",      "agg_mean(t, u -> u * u)",
      "agg_prod(t, u -> u + self)", "agg_esym(t, 2, u -> u)",
      "agg_psum(t, 2, u -> u)"};

  for (const std::string& body : bodies) {
    auto f = FieldSpec::parse("class H(h) { dx = " + body + "; }", hub, {},
                              false);
    std::vector<double> perm = base;
    std::sort(perm.begin(), perm.end());
    double reference = 0.0;
    bool first = true;
    do {
      const std::vector<Vec> in = {v1(perm[0]), v1(perm[1]), v1(perm[2])};
      double got = f->eval_cell(h, self, in)(0);
      if (first) {
        reference = got;
        first = false;
      } else {
        INFO(body << " at {" << perm[0] << ", " << perm[1] << ", " << perm[2]
                  << "}");
        CHECK(got == reference);  // exact, not approximate
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

// ===========================================================================
// Raw classes and positional access
// ===========================================================================

TEST_CASE("positional input access is restricted to raw classes") {
  const TypedNetwork hub = build(hub3_spec());

  REQUIRE_THROWS_WITH(
      FieldSpec::parse("class H(h) { dx = input(t, 0); }", hub, {}, false),
      ContainsSubstring("only available in a raw class"));

  auto f = FieldSpec::parse(
      "raw class H(h) { dx = input(t, 0) - input(t, 2); }", hub, {}, false);
  const CellIndex h = *hub.find_cell("h");
  CHECK(f->eval_cell(h, v1(0.0), {v1(2.0), v1(3.0), v1(5.0)})(0) == -3.0);
  CHECK(f->class_raw(f->class_of(h)));

  SECTION("positions are bounds-checked at parse time") {
    REQUIRE_THROWS_WITH(
        FieldSpec::parse("raw class H(h) { dx = input(t, 3); }", hub, {},
                         false),
        ContainsSubstring("input position 3 out of range"));
  }
  SECTION("raw scalar programs are exposed for symmetrization") {
    RawCellFn fn = f->raw_fn(f->class_of(h));
    CHECK(fn(v1(0.0), {v1(2.0), v1(3.0), v1(5.0)}) == -3.0);
  }
}

// ===========================================================================
// Class coverage and accessors
// ===========================================================================

TEST_CASE("uncovered input classes are rejected unless explicitly allowed") {
  const TypedNetwork fig1 = build(ccn::testing::fig1_spec());
  const std::string gl_only = "class GL(c1) { dx = -self + agg_sum(rl, u -> u); }";

  REQUIRE_THROWS_WITH(parse_field(gl_only, fig1),
                      ContainsSubstring("no class definition covers cell 'c2'"));

  auto f = FieldSpec::parse(gl_only, fig1, {}, /*require_all_classes=*/false);
  Vec x(4);
  x << 1.0, 2.0, 3.0, 4.0;
  Vec dx = f->eval(x);
  CHECK(dx(0) == 5.0);
  CHECK(dx(1) == 0.0);  // uncovered class evaluates to zero
  CHECK(dx(2) == 3.0);
  CHECK(dx(3) == 0.0);
  CHECK(f->class_defined(f->class_of(0)));
  CHECK_FALSE(f->class_defined(f->class_of(1)));
}

TEST_CASE("class accessors expose the input-isomorphism partition") {
  const TypedNetwork fig3 = build(ccn::testing::fig3_spec());
  auto f = FieldSpec::parse("class Z(c1) { dx = 0; }", fig3, {}, false);

  CHECK(f->n_classes() == 5);

  auto ix = [&](const std::string& id) { return *fig3.find_cell(id); };
  // {c1 c2 c9}, {c3 c4 c7}, {c5 c6}, {c8}, {c10}
  CHECK(f->class_of(ix("c2")) == f->class_of(ix("c1")));
  CHECK(f->class_of(ix("c9")) == f->class_of(ix("c1")));
  CHECK(f->class_of(ix("c4")) == f->class_of(ix("c3")));
  CHECK(f->class_of(ix("c7")) == f->class_of(ix("c3")));
  CHECK(f->class_of(ix("c6")) == f->class_of(ix("c5")));
  CHECK(f->class_of(ix("c8")) != f->class_of(ix("c1")));
  CHECK(f->class_of(ix("c10")) != f->class_of(ix("c8")));
  CHECK(f->class_of(ix("c10")) != f->class_of(ix("c1")));
  CHECK(f->class_of(ix("c5")) != f->class_of(ix("c3")));

  // Representatives are the first cell of each class in network order.
  CHECK(f->class_rep(f->class_of(ix("c9"))) == ix("c1"));
  CHECK(f->class_rep(f->class_of(ix("c7"))) == ix("c3"));
  CHECK(f->class_rep(f->class_of(ix("c6"))) == ix("c5"));
  CHECK(f->class_rep(f->class_of(ix("c8"))) == ix("c8"));

  SECTION("raw_fn refuses undefined classes") {
    REQUIRE_THROWS_AS(f->raw_fn(f->class_of(ix("c3"))), std::exception);
  }
}

TEST_CASE("the shipped fixture sources parse against their networks") {
  struct Pair {
    const char* net;
    const char* dsl;
  };
  const std::vector<Pair> pairs = {
      {"fig1.json", "fig1_contraction.dsl"},
      {"fig1.json", "fig1_breakout_base.dsl"},
      {"fig1.json", "fig1_rigid_base.dsl"},
      {"fig3.json", "fig3_field.dsl"},
      {"chain2.json", "chain2_frozen.dsl"},
      {"chain2.json", "chain2_cancel.dsl"},
      {"triple.json", "triple_eq.dsl"},
      {"duo2d.json", "duo2d_spiral.dsl"},
  };
  for (const Pair& p : pairs) {
    INFO(p.dsl);
    const TypedNetwork net =
        make_validated(read_network_file(ccn::testing::fixture_path(p.net)));
    REQUIRE_NOTHROW(
        parse_field(slurp_file(ccn::testing::fixture_path(p.dsl)), net));
  }
}
