#include "ccn/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <utility>
#include <vector>

namespace ccn {
namespace {

// ===========================================================================
// Lexer
// ===========================================================================

enum class Tok {
  end,
  ident,
  number,
  kw_param,
  kw_class,
  kw_raw,
  kw_dx,
  kw_self,
  kw_input,
  kw_vec,
  kw_comp,
  kw_agg_sum,
  kw_agg_mean,
  kw_agg_prod,
  kw_agg_esym,
  kw_agg_psum,
  lparen,
  rparen,
  lbrace,
  rbrace,
  comma,
  semi,
  eq,
  plus,
  minus,
  star,
  slash,
  caret,
  arrow,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double num = 0.0;
  int line = 1;
  int col = 1;
};

const std::map<std::string, Tok>& keyword_table() {
  static const std::map<std::string, Tok> kws = {
      {"param", Tok::kw_param},       {"class", Tok::kw_class},
      {"raw", Tok::kw_raw},           {"dx", Tok::kw_dx},
      {"self", Tok::kw_self},         {"input", Tok::kw_input},
      {"vec", Tok::kw_vec},           {"comp", Tok::kw_comp},
      {"agg_sum", Tok::kw_agg_sum},   {"agg_mean", Tok::kw_agg_mean},
      {"agg_prod", Tok::kw_agg_prod}, {"agg_esym", Tok::kw_agg_esym},
      {"agg_psum", Tok::kw_agg_psum},
  };
  return kws;
}

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
      if (src[i + j] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) ||
                                src[j] == '_'))
        ++j;
      t.text = src.substr(i, j - i);
      auto kw = keyword_table().find(t.text);
      t.kind = kw == keyword_table().end() ? Tok::ident : kw->second;
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      const char* begin = src.c_str() + i;
      char* endp = nullptr;
      t.num = std::strtod(begin, &endp);
      std::size_t n = static_cast<std::size_t>(endp - begin);
      if (n == 0) throw DslError(line, col, "malformed number");
      t.kind = Tok::number;
      t.text = src.substr(i, n);
      advance(n);
      out.push_back(std::move(t));
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      t.kind = Tok::arrow;
      advance(2);
      out.push_back(std::move(t));
      continue;
    }
    switch (c) {
      case '(': t.kind = Tok::lparen; break;
      case ')': t.kind = Tok::rparen; break;
      case '{': t.kind = Tok::lbrace; break;
      case '}': t.kind = Tok::rbrace; break;
      case ',': t.kind = Tok::comma; break;
      case ';': t.kind = Tok::semi; break;
      case '=': t.kind = Tok::eq; break;
      case '+': t.kind = Tok::plus; break;
      case '-': t.kind = Tok::minus; break;
      case '*': t.kind = Tok::star; break;
      case '/': t.kind = Tok::slash; break;
      case '^': t.kind = Tok::caret; break;
      default:
        throw DslError(line, col,
                       std::string("unexpected character '") + c + "'");
    }
    advance(1);
    out.push_back(std::move(t));
  }
  Token e;
  e.line = line;
  e.col = col;
  out.push_back(std::move(e));
  return out;
}

// ===========================================================================
// AST
// ===========================================================================

enum class EK {
  number,
  param,
  self_ref,
  local,
  unary,
  binary,
  call,
  agg,
  slot,
  make_vec,
  component,
};

enum Fn {
  fn_sin,
  fn_cos,
  fn_tan,
  fn_exp,
  fn_log,
  fn_sqrt,
  fn_tanh,
  fn_abs,
  fn_min,
  fn_max,
  fn_pow,
};

enum Agg { agg_sum, agg_mean, agg_prod, agg_esym, agg_psum };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  EK k;
  int line = 0;
  int col = 0;
  int dim = 1;      ///< static result dimension
  double num = 0.0;
  int index = 0;    ///< param index / local depth / slot or component index / Fn
  char op = 0;
  int atype = -1;   ///< user arrow type of an aggregate or slot
  int agg = 0;
  int agg_k = 0;
  ExprPtr a;
  ExprPtr b;
  std::vector<ExprPtr> args;
};

struct FnInfo {
  int id;
  int arity;
};

const std::map<std::string, FnInfo>& fn_table() {
  static const std::map<std::string, FnInfo> fns = {
      {"sin", {fn_sin, 1}},  {"cos", {fn_cos, 1}},  {"tan", {fn_tan, 1}},
      {"exp", {fn_exp, 1}},  {"log", {fn_log, 1}},  {"sqrt", {fn_sqrt, 1}},
      {"tanh", {fn_tanh, 1}}, {"abs", {fn_abs, 1}}, {"min", {fn_min, 2}},
      {"max", {fn_max, 2}},  {"pow", {fn_pow, 2}},
  };
  return fns;
}

struct ClassProgram {
  bool defined = false;
  bool raw = false;
  std::string name;
  CellIndex rep = -1;
  ExprPtr dx;
  int out_dim = 0;  ///< dx dimension, 1 or the cell dimension
};

}  // namespace

// ===========================================================================
// Compiled field state
// ===========================================================================

struct FieldSpec::Impl {
  std::string source;
  std::vector<ClassProgram> programs;
  std::vector<int> class_of_cell;
  std::vector<std::vector<CellIndex>> class_members;
  /// [cell][user arrow type] -> positions within the cell's user input list.
  std::vector<std::vector<std::vector<int>>> pos_by_type;
  /// [cell] -> expected dimension per user input position.
  std::vector<std::vector<int>> input_dims;
  std::vector<std::pair<std::string, double>> params;
  std::map<std::string, int> param_ix;

  [[nodiscard]] Vec eval_program(const TypedNetwork& net, CellIndex c,
                                 const Vec& self,
                                 const std::vector<Vec>& inputs) const;
};

namespace {

// ===========================================================================
// Parser and per-class binder
// ===========================================================================

struct Binder {
  const TypedNetwork* net = nullptr;
  CellIndex rep = -1;
  bool raw = false;
  int self_dim = 1;
  std::vector<int> count_by_type;     ///< user inputs of rep per user type
  std::vector<int> tail_dim_by_type;  ///< -1 when the type is absent
  std::vector<std::pair<std::string, int>> locals;  ///< kernel vars: name, dim
};

class Parser {
 public:
  Parser(const std::string& src, const TypedNetwork& net)
      : net_(net), toks_(lex(src)) {}

  void parse_file(FieldSpec::Impl& impl) {
    impl.class_members = input_isomorphism_classes(net_);
    impl.class_of_cell.assign(static_cast<std::size_t>(net_.n_cells()), -1);
    for (std::size_t k = 0; k < impl.class_members.size(); ++k)
      for (CellIndex c : impl.class_members[k])
        impl.class_of_cell[static_cast<std::size_t>(c)] = static_cast<int>(k);
    impl.programs.resize(impl.class_members.size());

    while (peek().kind != Tok::end) {
      if (peek().kind == Tok::kw_param) {
        parse_param(impl);
      } else if (peek().kind == Tok::kw_class || peek().kind == Tok::kw_raw) {
        parse_class(impl);
      } else {
        fail(peek(), "expected 'param' or 'class'");
      }
    }
  }

 private:
  const TypedNetwork& net_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, int> class_names_;

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& get() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::end) ++pos_;
    return t;
  }
  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw DslError(t.line, t.col, msg);
  }
  const Token& expect(Tok kind, const char* what) {
    const Token& t = get();
    if (t.kind != kind) fail(t, std::string("expected ") + what);
    return t;
  }

  double parse_signed_number() {
    double sign = 1.0;
    while (peek().kind == Tok::minus || peek().kind == Tok::plus) {
      if (get().kind == Tok::minus) sign = -sign;
    }
    const Token& t = expect(Tok::number, "a number");
    return sign * t.num;
  }

  int parse_int_literal(const char* what) {
    const Token& t = peek();
    double v = parse_signed_number();
    if (v != std::rint(v) || std::fabs(v) > 1e9)
      fail(t, std::string("expected an integer ") + what);
    return static_cast<int>(v);
  }

  void parse_param(FieldSpec::Impl& impl) {
    expect(Tok::kw_param, "'param'");
    const Token& name = expect(Tok::ident, "a parameter name");
    if (impl.param_ix.count(name.text))
      fail(name, "parameter '" + name.text + "' already declared");
    expect(Tok::eq, "'='");
    double v = parse_signed_number();
    expect(Tok::semi, "';'");
    impl.param_ix[name.text] = static_cast<int>(impl.params.size());
    impl.params.emplace_back(name.text, v);
  }

  void parse_class(FieldSpec::Impl& impl) {
    bool raw = false;
    if (peek().kind == Tok::kw_raw) {
      get();
      raw = true;
    }
    expect(Tok::kw_class, "'class'");
    const Token& name = expect(Tok::ident, "a class name");
    if (class_names_.count(name.text))
      fail(name, "class '" + name.text + "' already defined");
    expect(Tok::lparen, "'('");
    const Token& cell_tok = expect(Tok::ident, "a cell id");
    auto ci = net_.find_cell(cell_tok.text);
    if (!ci) fail(cell_tok, "unknown cell '" + cell_tok.text + "'");
    expect(Tok::rparen, "')'");

    int k = impl.class_of_cell[static_cast<std::size_t>(*ci)];
    ClassProgram& prog = impl.programs[static_cast<std::size_t>(k)];
    if (prog.defined)
      fail(cell_tok, "cell '" + cell_tok.text +
                         "' shares its input class with class '" + prog.name +
                         "', which is already defined");
    class_names_[name.text] = k;

    Binder b;
    b.net = &net_;
    b.rep = impl.class_members[static_cast<std::size_t>(k)].front();
    b.raw = raw;
    b.self_dim = net_.cell_dim(b.rep);
    int ntypes = net_.n_arrow_types(false);
    b.count_by_type.assign(static_cast<std::size_t>(ntypes), 0);
    b.tail_dim_by_type.assign(static_cast<std::size_t>(ntypes), -1);
    for (ArrowIndex a : net_.input_arrows(b.rep)) {
      const Arrow& ar = net_.arrow(a);
      if (ar.internal) continue;
      ++b.count_by_type[static_cast<std::size_t>(ar.type)];
      b.tail_dim_by_type[static_cast<std::size_t>(ar.type)] =
          net_.cell_dim(ar.tail);
    }

    expect(Tok::lbrace, "'{'");
    expect(Tok::kw_dx, "'dx'");
    expect(Tok::eq, "'='");
    const Token& body = peek();
    ExprPtr dx = parse_expr(b, impl);
    expect(Tok::semi, "';'");
    expect(Tok::rbrace, "'}'");

    if (dx->dim != 1 && dx->dim != b.self_dim)
      fail(body, "dx has dimension " + std::to_string(dx->dim) +
                     " but the cell has dimension " +
                     std::to_string(b.self_dim));

    prog.defined = true;
    prog.raw = raw;
    prog.name = name.text;
    prog.rep = b.rep;
    prog.dx = std::move(dx);
    prog.out_dim = b.self_dim;
  }

  /// Resolves a user arrow type that the class actually receives.
  int parse_input_type(const Binder& b) {
    const Token& t = expect(Tok::ident, "an arrow type");
    auto at = b.net->find_arrow_type(t.text);
    if (!at || *at >= b.net->n_arrow_types(false))
      fail(t, "unknown arrow type '" + t.text + "'");
    if (b.count_by_type[static_cast<std::size_t>(*at)] == 0)
      fail(t, "the class has no inputs of type '" + t.text + "'");
    return *at;
  }

  static ExprPtr make(EK k, const Token& at) {
    auto e = std::make_unique<Expr>();
    e->k = k;
    e->line = at.line;
    e->col = at.col;
    return e;
  }

  static int broadcast_dim(const Token& at, int da, int db) {
    if (da == db) return da;
    if (da == 1) return db;
    if (db == 1) return da;
    fail(at, "dimension mismatch: " + std::to_string(da) + " vs " +
                 std::to_string(db));
  }

  ExprPtr parse_expr(Binder& b, FieldSpec::Impl& impl) {
    return parse_additive(b, impl);
  }

  ExprPtr parse_additive(Binder& b, FieldSpec::Impl& impl) {
    ExprPtr lhs = parse_multiplicative(b, impl);
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = get();
      ExprPtr rhs = parse_multiplicative(b, impl);
      auto e = make(EK::binary, op);
      e->op = op.kind == Tok::plus ? '+' : '-';
      e->dim = broadcast_dim(op, lhs->dim, rhs->dim);
      e->a = std::move(lhs);
      e->b = std::move(rhs);
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_multiplicative(Binder& b, FieldSpec::Impl& impl) {
    ExprPtr lhs = parse_unary(b, impl);
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Token& op = get();
      ExprPtr rhs = parse_unary(b, impl);
      auto e = make(EK::binary, op);
      e->op = op.kind == Tok::star ? '*' : '/';
      e->dim = broadcast_dim(op, lhs->dim, rhs->dim);
      e->a = std::move(lhs);
      e->b = std::move(rhs);
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_unary(Binder& b, FieldSpec::Impl& impl) {
    if (peek().kind == Tok::minus || peek().kind == Tok::plus) {
      const Token& op = get();
      ExprPtr operand = parse_unary(b, impl);
      if (op.kind == Tok::plus) return operand;
      auto e = make(EK::unary, op);
      e->op = '-';
      e->dim = operand->dim;
      e->a = std::move(operand);
      return e;
    }
    return parse_power(b, impl);
  }

  ExprPtr parse_power(Binder& b, FieldSpec::Impl& impl) {
    ExprPtr base = parse_primary(b, impl);
    if (peek().kind == Tok::caret) {
      const Token& op = get();
      ExprPtr exponent = parse_unary(b, impl);  // right-associative
      auto e = make(EK::binary, op);
      e->op = '^';
      e->dim = broadcast_dim(op, base->dim, exponent->dim);
      e->a = std::move(base);
      e->b = std::move(exponent);
      return e;
    }
    return base;
  }

  ExprPtr parse_aggregate(Binder& b, FieldSpec::Impl& impl, int agg,
                          const Token& at) {
    expect(Tok::lparen, "'('");
    int atype = parse_input_type(b);
    int order = 0;
    if (agg == agg_esym || agg == agg_psum) {
      expect(Tok::comma, "','");
      const Token& kt = peek();
      order = parse_int_literal("order");
      int n = b.count_by_type[static_cast<std::size_t>(atype)];
      if (agg == agg_esym && (order < 1 || order > n))
        fail(kt, "agg_esym order must lie in [1, " + std::to_string(n) + "]");
      if (agg == agg_psum && order < 1)
        fail(kt, "agg_psum order must be at least 1");
    }
    expect(Tok::comma, "','");
    const Token& var = expect(Tok::ident, "a kernel variable");
    expect(Tok::arrow, "'->'");
    b.locals.emplace_back(
        var.text, b.tail_dim_by_type[static_cast<std::size_t>(atype)]);
    ExprPtr kernel = parse_expr(b, impl);
    b.locals.pop_back();
    expect(Tok::rparen, "')'");

    auto e = make(EK::agg, at);
    e->agg = agg;
    e->agg_k = order;
    e->atype = atype;
    e->dim = kernel->dim;
    e->a = std::move(kernel);
    return e;
  }

  ExprPtr parse_primary(Binder& b, FieldSpec::Impl& impl) {
    const Token& t = get();
    switch (t.kind) {
      case Tok::number: {
        auto e = make(EK::number, t);
        e->num = t.num;
        return e;
      }
      case Tok::lparen: {
        ExprPtr e = parse_expr(b, impl);
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::kw_self: {
        auto e = make(EK::self_ref, t);
        e->dim = b.self_dim;
        return e;
      }
      case Tok::kw_vec: {
        expect(Tok::lparen, "'('");
        auto e = make(EK::make_vec, t);
        while (true) {
          ExprPtr arg = parse_expr(b, impl);
          if (arg->dim != 1)
            fail(t, "vec components must be scalar");
          e->args.push_back(std::move(arg));
          if (peek().kind != Tok::comma) break;
          get();
        }
        expect(Tok::rparen, "')'");
        e->dim = static_cast<int>(e->args.size());
        return e;
      }
      case Tok::kw_comp: {
        expect(Tok::lparen, "'('");
        ExprPtr inner = parse_expr(b, impl);
        expect(Tok::comma, "','");
        const Token& kt = peek();
        int idx = parse_int_literal("component index");
        expect(Tok::rparen, "')'");
        if (idx < 0 || idx >= inner->dim)
          fail(kt, "component index " + std::to_string(idx) +
                       " out of range for dimension " +
                       std::to_string(inner->dim));
        auto e = make(EK::component, t);
        e->index = idx;
        e->a = std::move(inner);
        return e;
      }
      case Tok::kw_input: {
        if (!b.raw)
          fail(t,
               "positional input access is only available in a raw class");
        expect(Tok::lparen, "'('");
        int atype = parse_input_type(b);
        expect(Tok::comma, "','");
        const Token& kt = peek();
        int idx = parse_int_literal("input position");
        expect(Tok::rparen, "')'");
        int n = b.count_by_type[static_cast<std::size_t>(atype)];
        if (idx < 0 || idx >= n)
          fail(kt, "input position " + std::to_string(idx) +
                       " out of range: the class has " + std::to_string(n) +
                       " inputs of that type");
        auto e = make(EK::slot, t);
        e->atype = atype;
        e->index = idx;
        e->dim = b.tail_dim_by_type[static_cast<std::size_t>(atype)];
        return e;
      }
      case Tok::kw_agg_sum: return parse_aggregate(b, impl, agg_sum, t);
      case Tok::kw_agg_mean: return parse_aggregate(b, impl, agg_mean, t);
      case Tok::kw_agg_prod: return parse_aggregate(b, impl, agg_prod, t);
      case Tok::kw_agg_esym: return parse_aggregate(b, impl, agg_esym, t);
      case Tok::kw_agg_psum: return parse_aggregate(b, impl, agg_psum, t);
      case Tok::ident: {
        for (int d = static_cast<int>(b.locals.size()) - 1; d >= 0; --d) {
          if (b.locals[static_cast<std::size_t>(d)].first == t.text) {
            auto e = make(EK::local, t);
            e->index = d;
            e->dim = b.locals[static_cast<std::size_t>(d)].second;
            return e;
          }
        }
        auto fn = fn_table().find(t.text);
        if (fn != fn_table().end() && peek().kind == Tok::lparen) {
          get();
          auto e = make(EK::call, t);
          e->index = fn->second.id;
          while (true) {
            e->args.push_back(parse_expr(b, impl));
            if (peek().kind != Tok::comma) break;
            get();
          }
          expect(Tok::rparen, "')'");
          if (static_cast<int>(e->args.size()) != fn->second.arity)
            fail(t, "'" + t.text + "' takes " +
                        std::to_string(fn->second.arity) + " argument(s)");
          e->dim = e->args[0]->dim;
          for (std::size_t j = 1; j < e->args.size(); ++j)
            e->dim = broadcast_dim(t, e->dim, e->args[j]->dim);
          return e;
        }
        auto p = impl.param_ix.find(t.text);
        if (p != impl.param_ix.end()) {
          auto e = make(EK::param, t);
          e->index = p->second;
          return e;
        }
        fail(t, "unknown identifier '" + t.text + "'");
      }
      default:
        fail(t, "expected an expression");
    }
  }
};

// ===========================================================================
// Evaluator
// ===========================================================================

/// Runtime value: scalar fast path, vector otherwise.
struct Value {
  bool isv = false;
  double s = 0.0;
  Vec v;

  static Value scalar(double x) {
    Value r;
    r.s = x;
    return r;
  }
  static Value from_vec(const Vec& x) {
    if (x.size() == 1) return scalar(x[0]);
    Value r;
    r.isv = true;
    r.v = x;
    return r;
  }
  static Value zero(int dim) {
    if (dim == 1) return scalar(0.0);
    Value r;
    r.isv = true;
    r.v = Vec::Zero(dim);
    return r;
  }
  [[nodiscard]] int dim() const { return isv ? static_cast<int>(v.size()) : 1; }
  [[nodiscard]] double at(int i) const { return isv ? v[i] : s; }
};

struct EvalCtx {
  const FieldSpec::Impl* impl = nullptr;
  const Vec* self = nullptr;
  const std::vector<Vec>* inputs = nullptr;
  const std::vector<std::vector<int>>* pos = nullptr;
  const std::string* cell_id = nullptr;
};

[[noreturn]] void eval_fail(const EvalCtx& ctx, const std::string& msg) {
  throw EvalError(*ctx.cell_id, msg);
}

/// Total order on doubles treating every NaN as the greatest value, so the
/// sort done before symmetric reductions is deterministic.
bool dless(double a, double b) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return a < b;
}

bool value_less(const Value& x, const Value& y) {
  if (!x.isv && !y.isv) return dless(x.s, y.s);
  int n = x.dim();
  for (int i = 0; i < n; ++i) {
    if (dless(x.at(i), y.at(i))) return true;
    if (dless(y.at(i), x.at(i))) return false;
  }
  return false;
}

double scalar_pow(double a, double b, const EvalCtx& ctx) {
  if (a < 0.0 && b != std::rint(b))
    eval_fail(ctx, "fractional power of a negative value");
  if (a == 0.0 && b < 0.0) eval_fail(ctx, "zero raised to a negative power");
  return std::pow(a, b);
}

double scalar_bin(char op, double a, double b, const EvalCtx& ctx) {
  switch (op) {
    case '+': return a + b;
    case '-': return a - b;
    case '*': return a * b;
    case '/':
      if (b == 0.0) eval_fail(ctx, "division by zero");
      return a / b;
    case '^': return scalar_pow(a, b, ctx);
    default: eval_fail(ctx, "bad operator");
  }
}

Value bin_apply(char op, const Value& a, const Value& b, const EvalCtx& ctx) {
  if (!a.isv && !b.isv) return Value::scalar(scalar_bin(op, a.s, b.s, ctx));
  int n = std::max(a.dim(), b.dim());
  Value r;
  r.isv = true;
  r.v.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = a.isv ? a.v[i] : a.s;
    double y = b.isv ? b.v[i] : b.s;
    r.v[i] = scalar_bin(op, x, y, ctx);
  }
  return r;
}

double scalar_fn1(int f, double x, const EvalCtx& ctx) {
  switch (f) {
    case fn_sin: return std::sin(x);
    case fn_cos: return std::cos(x);
    case fn_tan: return std::tan(x);
    case fn_exp: return std::exp(x);
    case fn_log:
      if (x <= 0.0) eval_fail(ctx, "log of a nonpositive value");
      return std::log(x);
    case fn_sqrt:
      if (x < 0.0) eval_fail(ctx, "sqrt of a negative value");
      return std::sqrt(x);
    case fn_tanh: return std::tanh(x);
    case fn_abs: return std::fabs(x);
    default: eval_fail(ctx, "bad function");
  }
}

double scalar_fn2(int f, double a, double b, const EvalCtx& ctx) {
  switch (f) {
    case fn_min: return std::fmin(a, b);
    case fn_max: return std::fmax(a, b);
    case fn_pow: return scalar_pow(a, b, ctx);
    default: eval_fail(ctx, "bad function");
  }
}

Value fn_apply(int f, const std::vector<Value>& args, const EvalCtx& ctx) {
  if (args.size() == 1) {
    const Value& a = args[0];
    if (!a.isv) return Value::scalar(scalar_fn1(f, a.s, ctx));
    Value r;
    r.isv = true;
    r.v.resize(a.v.size());
    for (int i = 0; i < a.v.size(); ++i) r.v[i] = scalar_fn1(f, a.v[i], ctx);
    return r;
  }
  const Value& a = args[0];
  const Value& b = args[1];
  if (!a.isv && !b.isv) return Value::scalar(scalar_fn2(f, a.s, b.s, ctx));
  int n = std::max(a.dim(), b.dim());
  Value r;
  r.isv = true;
  r.v.resize(n);
  for (int i = 0; i < n; ++i)
    r.v[i] = scalar_fn2(f, a.isv ? a.v[i] : a.s, b.isv ? b.v[i] : b.s, ctx);
  return r;
}

/// Elementwise integer power by repeated multiplication.
Value int_pow(const Value& x, int k) {
  Value r = x;
  if (!x.isv) {
    for (int j = 1; j < k; ++j) r.s *= x.s;
    return r;
  }
  for (int j = 1; j < k; ++j)
    for (int i = 0; i < r.v.size(); ++i) r.v[i] *= x.v[i];
  return r;
}

Value eval_expr(const Expr& e, const EvalCtx& ctx, std::vector<Value>& locals);

Value eval_aggregate(const Expr& e, const EvalCtx& ctx,
                     std::vector<Value>& locals) {
  const std::vector<int>& positions =
      (*ctx.pos)[static_cast<std::size_t>(e.atype)];
  std::vector<Value> vals;
  vals.reserve(positions.size());
  locals.emplace_back();
  for (int p : positions) {
    locals.back() = Value::from_vec((*ctx.inputs)[static_cast<std::size_t>(p)]);
    vals.push_back(eval_expr(*e.a, ctx, locals));
  }
  locals.pop_back();

  if (e.agg == agg_psum)
    for (Value& v : vals) v = int_pow(v, e.agg_k);

  // Sorting the operands makes the reduction invariant under any input
  // permutation, bitwise, not merely up to rounding.
  std::sort(vals.begin(), vals.end(), value_less);

  switch (e.agg) {
    case agg_sum:
    case agg_mean:
    case agg_psum: {
      Value acc = vals[0];
      for (std::size_t i = 1; i < vals.size(); ++i)
        acc = bin_apply('+', acc, vals[i], ctx);
      if (e.agg == agg_mean)
        acc = bin_apply('/', acc,
                        Value::scalar(static_cast<double>(vals.size())), ctx);
      return acc;
    }
    case agg_prod: {
      Value acc = vals[0];
      for (std::size_t i = 1; i < vals.size(); ++i)
        acc = bin_apply('*', acc, vals[i], ctx);
      return acc;
    }
    case agg_esym: {
      // Elementwise elementary symmetric polynomial over the sorted values.
      int k = e.agg_k;
      std::vector<Value> dp(static_cast<std::size_t>(k) + 1,
                            Value::zero(e.dim));
      dp[0] = e.dim == 1 ? Value::scalar(1.0)
                         : Value::from_vec(Vec::Ones(e.dim));
      for (const Value& v : vals)
        for (int j = k; j >= 1; --j)
          dp[static_cast<std::size_t>(j)] =
              bin_apply('+', dp[static_cast<std::size_t>(j)],
                        bin_apply('*', dp[static_cast<std::size_t>(j) - 1], v,
                                  ctx),
                        ctx);
      return dp[static_cast<std::size_t>(k)];
    }
    default: eval_fail(ctx, "bad aggregate");
  }
}

Value eval_expr(const Expr& e, const EvalCtx& ctx, std::vector<Value>& locals) {
  switch (e.k) {
    case EK::number: return Value::scalar(e.num);
    case EK::param:
      return Value::scalar(
          ctx.impl->params[static_cast<std::size_t>(e.index)].second);
    case EK::self_ref: return Value::from_vec(*ctx.self);
    case EK::local: return locals[static_cast<std::size_t>(e.index)];
    case EK::unary: {
      Value a = eval_expr(*e.a, ctx, locals);
      if (!a.isv) return Value::scalar(-a.s);
      a.v = -a.v;
      return a;
    }
    case EK::binary: {
      Value a = eval_expr(*e.a, ctx, locals);
      Value b = eval_expr(*e.b, ctx, locals);
      return bin_apply(e.op, a, b, ctx);
    }
    case EK::call: {
      std::vector<Value> args;
      args.reserve(e.args.size());
      for (const ExprPtr& arg : e.args)
        args.push_back(eval_expr(*arg, ctx, locals));
      return fn_apply(e.index, args, ctx);
    }
    case EK::agg: return eval_aggregate(e, ctx, locals);
    case EK::slot: {
      int p = (*ctx.pos)[static_cast<std::size_t>(e.atype)]
                        [static_cast<std::size_t>(e.index)];
      return Value::from_vec((*ctx.inputs)[static_cast<std::size_t>(p)]);
    }
    case EK::make_vec: {
      Value r;
      r.isv = true;
      r.v.resize(static_cast<int>(e.args.size()));
      for (std::size_t i = 0; i < e.args.size(); ++i)
        r.v[static_cast<int>(i)] = eval_expr(*e.args[i], ctx, locals).s;
      return r;
    }
    case EK::component: {
      Value a = eval_expr(*e.a, ctx, locals);
      return Value::scalar(a.at(e.index));
    }
    default: eval_fail(ctx, "bad expression");
  }
}

}  // namespace

Vec FieldSpec::Impl::eval_program(const TypedNetwork& net, CellIndex c,
                                  const Vec& self,
                                  const std::vector<Vec>& inputs) const {
  const std::vector<int>& dims = input_dims[static_cast<std::size_t>(c)];
  if (inputs.size() != dims.size())
    throw std::invalid_argument("cell '" + net.cell(c).id + "' expects " +
                                std::to_string(dims.size()) +
                                " input values, got " +
                                std::to_string(inputs.size()));
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (static_cast<int>(inputs[i].size()) != dims[i])
      throw std::invalid_argument("input value " + std::to_string(i) +
                                  " of cell '" + net.cell(c).id +
                                  "' has the wrong dimension");
  int d = net.cell_dim(c);
  if (static_cast<int>(self.size()) != d)
    throw std::invalid_argument("own state of cell '" + net.cell(c).id +
                                "' has the wrong dimension");

  const ClassProgram& prog =
      programs[static_cast<std::size_t>(class_of_cell[static_cast<std::size_t>(c)])];
  if (!prog.defined) return Vec::Zero(d);

  EvalCtx ctx;
  ctx.impl = this;
  ctx.self = &self;
  ctx.inputs = &inputs;
  ctx.pos = &pos_by_type[static_cast<std::size_t>(c)];
  ctx.cell_id = &net.cell(c).id;
  std::vector<Value> locals;
  Value r = eval_expr(*prog.dx, ctx, locals);

  Vec out(d);
  if (!r.isv) {
    out.setConstant(r.s);
  } else {
    out = r.v;
  }
  return out;
}

// ===========================================================================
// FieldSpec surface
// ===========================================================================

FieldSpec::FieldSpec(const TypedNetwork& net, std::unique_ptr<Impl> impl)
    : Field(net), impl_(std::move(impl)) {}

FieldSpec::~FieldSpec() = default;

std::shared_ptr<FieldSpec> FieldSpec::parse(
    const std::string& src, const TypedNetwork& net,
    const std::map<std::string, double>& params, bool require_all_classes) {
  auto impl = std::make_unique<Impl>();
  impl->source = src;
  Parser parser(src, net);
  parser.parse_file(*impl);

  for (const auto& [name, value] : params) {
    auto it = impl->param_ix.find(name);
    if (it == impl->param_ix.end())
      throw std::invalid_argument("unknown parameter '" + name + "'");
    impl->params[static_cast<std::size_t>(it->second)].second = value;
  }

  if (require_all_classes) {
    for (std::size_t k = 0; k < impl->programs.size(); ++k) {
      if (impl->programs[k].defined) continue;
      CellIndex rep = impl->class_members[k].front();
      throw DslError(1, 1,
                     "no class definition covers cell '" + net.cell(rep).id +
                         "' (and its input class)");
    }
  }

  // Per-cell input layout: positions of each user arrow type within the
  // cell's user input list, and the expected value dimensions.
  int ntypes = net.n_arrow_types(false);
  impl->pos_by_type.resize(static_cast<std::size_t>(net.n_cells()));
  impl->input_dims.resize(static_cast<std::size_t>(net.n_cells()));
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    auto& pos = impl->pos_by_type[static_cast<std::size_t>(c)];
    pos.assign(static_cast<std::size_t>(ntypes), {});
    auto& dims = impl->input_dims[static_cast<std::size_t>(c)];
    int p = 0;
    for (ArrowIndex a : net.input_arrows(c)) {
      const Arrow& ar = net.arrow(a);
      if (ar.internal) continue;
      pos[static_cast<std::size_t>(ar.type)].push_back(p++);
      dims.push_back(net.cell_dim(ar.tail));
    }
  }

  return std::shared_ptr<FieldSpec>(new FieldSpec(net, std::move(impl)));
}

std::shared_ptr<FieldSpec> parse_field(
    const std::string& src, const TypedNetwork& net,
    const std::map<std::string, double>& params) {
  return FieldSpec::parse(src, net, params, true);
}

Vec FieldSpec::eval_cell(CellIndex c, const Vec& self,
                         const std::vector<Vec>& user_inputs) const {
  if (c < 0 || c >= net().n_cells())
    throw std::out_of_range("cell index out of range");
  return impl_->eval_program(net(), c, self, user_inputs);
}

int FieldSpec::n_classes() const {
  return static_cast<int>(impl_->programs.size());
}

int FieldSpec::class_of(CellIndex c) const {
  if (c < 0 || c >= net().n_cells())
    throw std::out_of_range("cell index out of range");
  return impl_->class_of_cell[static_cast<std::size_t>(c)];
}

CellIndex FieldSpec::class_rep(int k) const {
  return impl_->class_members.at(static_cast<std::size_t>(k)).front();
}

bool FieldSpec::class_defined(int k) const {
  return impl_->programs.at(static_cast<std::size_t>(k)).defined;
}

bool FieldSpec::class_raw(int k) const {
  return impl_->programs.at(static_cast<std::size_t>(k)).raw;
}

RawCellFn FieldSpec::raw_fn(int k) const {
  const ClassProgram& prog = impl_->programs.at(static_cast<std::size_t>(k));
  if (!prog.defined)
    throw std::invalid_argument("class " + std::to_string(k) +
                                " has no definition");
  if (prog.dx->dim != 1)
    throw std::invalid_argument(
        "class '" + prog.name +
        "' is not scalar-valued; symmetrization donors must be");
  CellIndex rep = prog.rep;
  const TypedNetwork* netp = &net();
  const Impl* impl = impl_.get();
  return [impl, netp, rep](const Vec& self, const std::vector<Vec>& inputs) {
    Vec r = impl->eval_program(*netp, rep, self, inputs);
    return r[0];
  };
}

std::map<std::string, double> FieldSpec::params() const {
  std::map<std::string, double> out;
  for (const auto& [name, value] : impl_->params) out[name] = value;
  return out;
}

const std::string& FieldSpec::source() const { return impl_->source; }

}  // namespace ccn
