#include "subreg/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <utility>

#include "subreg/errors.hpp"
#include "subreg/numfmt.hpp"

namespace subreg {

struct Expr::Node {
  Op op;
  double cval = 0;  // Const payload
  int var = 0;      // Var payload
  int expo = 0;     // Pow payload
  std::shared_ptr<const Node> a, b;
};

Expr Expr::make(Op op, Expr a, Expr b, double cval, int ival) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->cval = cval;
  if (op == Op::Var) n->var = ival;
  if (op == Op::Pow) n->expo = ival;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  return Expr(std::move(n));
}

Expr Expr::constant(double c) { return make(Op::Const, {}, {}, c, 0); }

Expr Expr::var(int index) {
  if (index < 0 || index >= static_cast<int>(kMaxDim))
    throw ArgumentError("Expr::var: index " + std::to_string(index) + " out of range");
  return make(Op::Var, {}, {}, 0, index);
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::make(Op::Add, a, b, 0, 0); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::make(Op::Sub, a, b, 0, 0); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::make(Op::Mul, a, b, 0, 0); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::make(Op::Div, a, b, 0, 0); }
Expr Expr::operator-() const { return make(Op::Neg, *this, {}, 0, 0); }

Expr pow(const Expr& a, int k) {
  if (k < 0) throw ArgumentError("pow: exponent must be a nonnegative integer");
  return Expr::make(Op::Pow, a, {}, 0, k);
}
Expr abs(const Expr& a) { return Expr::make(Op::Abs, a, {}, 0, 0); }
Expr min(const Expr& a, const Expr& b) { return Expr::make(Op::Min, a, b, 0, 0); }
Expr max(const Expr& a, const Expr& b) { return Expr::make(Op::Max, a, b, 0, 0); }
Expr sqrt(const Expr& a) { return Expr::make(Op::Sqrt, a, {}, 0, 0); }
Expr sin(const Expr& a) { return Expr::make(Op::Sin, a, {}, 0, 0); }
Expr cos(const Expr& a) { return Expr::make(Op::Cos, a, {}, 0, 0); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double eval_node(const Expr::Node* n, const Vec& x);

double int_pow(double u, int k) {
  double r = 1;
  while (k > 0) {
    if (k & 1) r *= u;
    u *= u;
    k >>= 1;
  }
  return r;
}

double eval_node(const Expr::Node* n, const Vec& x) {
  switch (n->op) {
    case Op::Const: return n->cval;
    case Op::Var:
      if (n->var >= static_cast<int>(x.dim()))
        throw ArgumentError("expression uses x" + std::to_string(n->var + 1) +
                            " but the point has dimension " + std::to_string(x.dim()));
      return x[static_cast<std::size_t>(n->var)];
    case Op::Add: return eval_node(n->a.get(), x) + eval_node(n->b.get(), x);
    case Op::Sub: return eval_node(n->a.get(), x) - eval_node(n->b.get(), x);
    case Op::Mul: return eval_node(n->a.get(), x) * eval_node(n->b.get(), x);
    case Op::Div: {
      const double d = eval_node(n->b.get(), x);
      if (d == 0) return std::numeric_limits<double>::quiet_NaN();
      return eval_node(n->a.get(), x) / d;
    }
    case Op::Neg: return -eval_node(n->a.get(), x);
    case Op::Pow: {
      const double u = eval_node(n->a.get(), x);
      if (n->expo == 0) return std::isnan(u) ? u : 1.0;
      return int_pow(u, n->expo);
    }
    case Op::Abs: return std::fabs(eval_node(n->a.get(), x));
    case Op::Min: {
      const double u = eval_node(n->a.get(), x);
      const double w = eval_node(n->b.get(), x);
      if (std::isnan(u) || std::isnan(w)) return std::numeric_limits<double>::quiet_NaN();
      return std::min(u, w);
    }
    case Op::Max: {
      const double u = eval_node(n->a.get(), x);
      const double w = eval_node(n->b.get(), x);
      if (std::isnan(u) || std::isnan(w)) return std::numeric_limits<double>::quiet_NaN();
      return std::max(u, w);
    }
    case Op::Sqrt: {
      const double u = eval_node(n->a.get(), x);
      if (u < 0) return std::numeric_limits<double>::quiet_NaN();
      return std::sqrt(u);
    }
    case Op::Sin: return std::sin(eval_node(n->a.get(), x));
    case Op::Cos: return std::cos(eval_node(n->a.get(), x));
  }
  throw Error("eval: corrupt expression node");
}

}  // namespace

double Expr::eval(const Vec& x) const {
  if (!node_) throw ArgumentError("eval on empty expression");
  return eval_node(node_.get(), x);
}

// ---------------------------------------------------------------------------
// Second-order forward AD
// ---------------------------------------------------------------------------

struct JetEval {
  const Vec& x;
  std::size_t n;

  Jet2 run(const Expr::Node* nd) const {
    Jet2 r(n);
    switch (nd->op) {
      case Op::Const:
        r.v = nd->cval;
        return r;
      case Op::Var: {
        if (nd->var >= static_cast<int>(n))
          throw ArgumentError("expression uses x" + std::to_string(nd->var + 1) +
                              " but the point has dimension " + std::to_string(n));
        r.v = x[static_cast<std::size_t>(nd->var)];
        r.g[static_cast<std::size_t>(nd->var)] = 1;
        return r;
      }
      case Op::Add: {
        Jet2 a = run(nd->a.get()), b = run(nd->b.get());
        r.v = a.v + b.v;
        r.g = a.g + b.g;
        r.h = a.h + b.h;
        merge_flags(r, a, b);
        return r;
      }
      case Op::Sub: {
        Jet2 a = run(nd->a.get()), b = run(nd->b.get());
        r.v = a.v - b.v;
        r.g = a.g - b.g;
        r.h = a.h + (-1.0 * b.h);
        merge_flags(r, a, b);
        return r;
      }
      case Op::Mul: {
        Jet2 a = run(nd->a.get()), b = run(nd->b.get());
        r.v = a.v * b.v;
        r.g = a.v * b.g + b.v * a.g;
        r.h = a.v * b.h + b.v * a.h + sym_outer(a.g, b.g);
        merge_flags(r, a, b);
        return r;
      }
      case Op::Div: {
        Jet2 a = run(nd->a.get()), b = run(nd->b.get());
        if (b.v == 0) return nan_jet();
        // a/b = a * w with w = 1/b
        Jet2 w(n);
        w.v = 1.0 / b.v;
        const double inv2 = w.v * w.v;
        w.g = -inv2 * b.g;
        w.h = (-inv2) * b.h + (2.0 * w.v * inv2) * sym_outer_half(b.g, b.g);
        r.v = a.v * w.v;
        r.g = a.v * w.g + w.v * a.g;
        r.h = a.v * w.h + w.v * a.h + sym_outer(a.g, w.g);
        merge_flags(r, a, b);
        return r;
      }
      case Op::Neg: {
        Jet2 a = run(nd->a.get());
        r.v = -a.v;
        r.g = -a.g;
        r.h = -1.0 * a.h;
        r.grad_ok = a.grad_ok;
        r.hess_ok = a.hess_ok;
        return r;
      }
      case Op::Pow: {
        Jet2 a = run(nd->a.get());
        if (std::isnan(a.v)) return nan_jet();
        const int k = nd->expo;
        if (k == 0) {
          r.v = 1;
          return r;
        }
        if (k == 1) return a;
        const double ukm2 = int_pow(a.v, k - 2);
        const double ukm1 = ukm2 * a.v;
        r.v = ukm1 * a.v;
        r.g = (k * ukm1) * a.g;
        r.h = (k * ukm1) * a.h +
              (static_cast<double>(k) * (k - 1) * ukm2) * sym_outer_half(a.g, a.g);
        r.grad_ok = a.grad_ok;
        r.hess_ok = a.hess_ok;
        return r;
      }
      case Op::Abs: {
        Jet2 a = run(nd->a.get());
        if (std::isnan(a.v)) return nan_jet();
        if (a.v == 0) {
          r.v = 0;
          r.grad_ok = false;
          r.hess_ok = false;
          return r;
        }
        const double s = a.v > 0 ? 1.0 : -1.0;
        r.v = s * a.v;
        r.g = s * a.g;
        r.h = s * a.h;
        r.grad_ok = a.grad_ok;
        r.hess_ok = a.hess_ok;
        return r;
      }
      case Op::Min:
      case Op::Max: {
        Jet2 a = run(nd->a.get()), b = run(nd->b.get());
        if (std::isnan(a.v) || std::isnan(b.v)) return nan_jet();
        const bool is_min = nd->op == Op::Min;
        const double tie_tol = 1e-13 * (1 + std::max(std::fabs(a.v), std::fabs(b.v)));
        if (std::fabs(a.v - b.v) <= tie_tol) {
          r = a;
          r.v = is_min ? std::min(a.v, b.v) : std::max(a.v, b.v);
          if (!grads_match(a, b)) {
            r.grad_ok = false;
            r.hess_ok = false;
          } else if (!hessians_match(a, b)) {
            r.hess_ok = false;
          }
          r.grad_ok = r.grad_ok && a.grad_ok && b.grad_ok;
          r.hess_ok = r.hess_ok && a.hess_ok && b.hess_ok;
          return r;
        }
        const bool take_a = is_min ? (a.v < b.v) : (a.v > b.v);
        return take_a ? a : b;
      }
      case Op::Sqrt: {
        Jet2 a = run(nd->a.get());
        if (std::isnan(a.v) || a.v < 0) return nan_jet();
        if (a.v == 0) {
          r.v = 0;
          r.grad_ok = false;
          r.hess_ok = false;
          return r;
        }
        const double s = std::sqrt(a.v);
        const double d1 = 0.5 / s;
        const double d2 = -0.25 / (s * a.v);
        return chain(a, s, d1, d2);
      }
      case Op::Sin: {
        Jet2 a = run(nd->a.get());
        return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v));
      }
      case Op::Cos: {
        Jet2 a = run(nd->a.get());
        return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v));
      }
    }
    throw Error("jet: corrupt expression node");
  }

 private:
  Jet2 nan_jet() const {
    Jet2 r(n);
    r.v = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  // Scalar chain rule: y = f(u): y' = f'(u) u', y'' = f'(u) u'' + f''(u) u' u'^T.
  Jet2 chain(const Jet2& a, double fv, double d1, double d2) const {
    Jet2 r(n);
    r.v = fv;
    r.g = d1 * a.g;
    r.h = d1 * a.h + d2 * sym_outer_half(a.g, a.g);
    r.grad_ok = a.grad_ok;
    r.hess_ok = a.hess_ok;
    return r;
  }

  Mat sym_outer(const Vec& a, const Vec& b) const {
    Mat m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i] * b[j] + b[i] * a[j];
    return m;
  }

  // Plain outer product a a^T (already symmetric when both args coincide).
  Mat sym_outer_half(const Vec& a, const Vec& b) const {
    Mat m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i] * b[j];
    return m;
  }

  static void merge_flags(Jet2& r, const Jet2& a, const Jet2& b) {
    r.grad_ok = a.grad_ok && b.grad_ok;
    r.hess_ok = a.hess_ok && b.hess_ok;
  }

  bool grads_match(const Jet2& a, const Jet2& b) const {
    const double tol = 1e-11 * (1 + std::max(norm(a.g), norm(b.g)));
    return dist(a.g, b.g) <= tol;
  }

  bool hessians_match(const Jet2& a, const Jet2& b) const {
    double m = 0, d = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        m = std::max({m, std::fabs(a.h(i, j)), std::fabs(b.h(i, j))});
        d = std::max(d, std::fabs(a.h(i, j) - b.h(i, j)));
      }
    return d <= 1e-10 * (1 + m);
  }
};

Jet2 Expr::jet(const Vec& x) const {
  if (!node_) throw ArgumentError("jet on empty expression");
  JetEval je{x, x.dim()};
  return je.run(node_.get());
}

// ---------------------------------------------------------------------------
// Structure queries
// ---------------------------------------------------------------------------

namespace {

int max_var_node(const Expr::Node* n) {
  if (!n) return -1;
  if (n->op == Op::Var) return n->var;
  return std::max(max_var_node(n->a.get()), max_var_node(n->b.get()));
}

bool is_poly_node(const Expr::Node* n) {
  if (!n) return true;
  switch (n->op) {
    case Op::Const:
    case Op::Var:
      return true;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
      return is_poly_node(n->a.get()) && is_poly_node(n->b.get());
    case Op::Neg:
    case Op::Pow:
      return is_poly_node(n->a.get());
    case Op::Div:
      return is_poly_node(n->a.get()) && max_var_node(n->b.get()) < 0;
    default:
      return false;
  }
}

}  // namespace

int Expr::max_var() const { return max_var_node(node_.get()); }
bool Expr::is_polynomial() const { return node_ && is_poly_node(node_.get()); }
bool Expr::is_constant() const { return node_ && max_var() < 0; }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, Rel, End };

struct Token {
  Tok kind;
  std::string text;
  double num = 0;
  Rel rel = Rel::Lt;
  int line = 1, col = 1;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string t) {
    out.push_back({k, std::move(t), 0, Rel::Lt, line, col});
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++col;
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      Token t{Tok::Num, s.substr(i, j - i), 0, Rel::Lt, line, col};
      try {
        std::size_t used = 0;
        t.num = std::stod(t.text, &used);
        if (used != t.text.size()) throw std::invalid_argument(t.text);
      } catch (const std::exception&) {
        throw ParseError("bad numeric literal '" + t.text + "'", line, col);
      }
      out.push_back(std::move(t));
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
        ++j;
      push(Tok::Ident, s.substr(i, j - i));
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    auto rel2 = [&](Rel r, const char* t) {
      Token tk{Tok::Rel, t, 0, r, line, col};
      out.push_back(tk);
    };
    switch (c) {
      case '+': push(Tok::Plus, "+"); break;
      case '-': push(Tok::Minus, "-"); break;
      case '*': push(Tok::Star, "*"); break;
      case '/': push(Tok::Slash, "/"); break;
      case '^': push(Tok::Caret, "^"); break;
      case '(': push(Tok::LParen, "("); break;
      case ')': push(Tok::RParen, ")"); break;
      case ',': push(Tok::Comma, ","); break;
      case '<':
        if (i + 1 < s.size() && s[i + 1] == '=') {
          rel2(Rel::Le, "<=");
          ++i;
          ++col;
        } else {
          rel2(Rel::Lt, "<");
        }
        break;
      case '>':
        if (i + 1 < s.size() && s[i + 1] == '=') {
          rel2(Rel::Ge, ">=");
          ++i;
          ++col;
        } else {
          rel2(Rel::Gt, ">");
        }
        break;
      case '=':
        if (i + 1 < s.size() && s[i + 1] == '=') {
          rel2(Rel::Eq, "==");
          ++i;
          ++col;
        } else {
          throw ParseError("single '=' (use '==' in guards)", line, col);
        }
        break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    ++col;
    ++i;
  }
  out.push_back({Tok::End, "", 0, Rel::Lt, line, col});
  return out;
}

}  // namespace

class ExprParser {
 public:
  ExprParser(std::vector<Token> toks, std::size_t dim)
      : toks_(std::move(toks)), dim_(dim) {}

  Expr parse_expr() {
    Expr e = parse_term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const bool plus = next().kind == Tok::Plus;
      Expr rhs = parse_term();
      e = plus ? e + rhs : e - rhs;
    }
    return e;
  }

  void expect_end() {
    if (peek().kind != Tok::End)
      throw ParseError("unexpected trailing input '" + peek().text + "'", peek().line,
                       peek().col);
  }

  bool at_rel() const { return peek().kind == Tok::Rel; }
  Rel take_rel() { return next().rel; }
  const Token& peek() const { return toks_[pos_]; }

 private:
  const Token& next() { return toks_[pos_++]; }

  Expr parse_term() {
    Expr e = parse_unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const bool star = next().kind == Tok::Star;
      Expr rhs = parse_unary();
      e = star ? e * rhs : e / rhs;
    }
    return e;
  }

  Expr parse_unary() {
    if (peek().kind == Tok::Minus) {
      next();
      return -parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (peek().kind == Tok::Caret) {
      const Token caret = next();
      const Token& e = peek();
      if (e.kind != Tok::Num || e.num != std::floor(e.num) || e.num < 0 ||
          e.text.find_first_of(".eE") != std::string::npos)
        throw ParseError("exponent must be a nonnegative integer literal", caret.line,
                         caret.col);
      next();
      return pow(base, static_cast<int>(e.num));
    }
    return base;
  }

  Expr parse_primary() {
    const Token t = next();
    switch (t.kind) {
      case Tok::Num:
        return Expr::constant(t.num);
      case Tok::LParen: {
        Expr e = parse_expr();
        if (peek().kind != Tok::RParen)
          throw ParseError("expected ')'", peek().line, peek().col);
        next();
        return e;
      }
      case Tok::Ident:
        if (peek().kind == Tok::LParen) return parse_call(t);
        return make_var(t);
      default:
        throw ParseError("unexpected token '" + t.text + "'", t.line, t.col);
    }
  }

  Expr parse_call(const Token& name) {
    next();  // '('
    std::vector<Expr> args;
    args.push_back(parse_expr());
    while (peek().kind == Tok::Comma) {
      next();
      args.push_back(parse_expr());
    }
    if (peek().kind != Tok::RParen)
      throw ParseError("expected ')' after arguments of " + name.text, peek().line,
                       peek().col);
    next();
    auto arity = [&](std::size_t k) {
      if (args.size() != k)
        throw ParseError(name.text + " takes " + std::to_string(k) + " argument" +
                             (k == 1 ? "" : "s"),
                         name.line, name.col);
    };
    if (name.text == "abs") { arity(1); return abs(args[0]); }
    if (name.text == "sqrt") { arity(1); return sqrt(args[0]); }
    if (name.text == "sin") { arity(1); return sin(args[0]); }
    if (name.text == "cos") { arity(1); return cos(args[0]); }
    if (name.text == "min") { arity(2); return min(args[0], args[1]); }
    if (name.text == "max") { arity(2); return max(args[0], args[1]); }
    throw ParseError("unknown function '" + name.text + "'", name.line, name.col);
  }

  Expr make_var(const Token& t) {
    int idx = -1;
    if (t.text == "x" || t.text == "t" || t.text == "x1") idx = 0;
    else if (t.text == "y" || t.text == "x2") idx = 1;
    else if (t.text == "z" || t.text == "x3") idx = 2;
    if (idx < 0) throw ParseError("unknown identifier '" + t.text + "'", t.line, t.col);
    if (idx >= static_cast<int>(dim_))
      throw ParseError("variable '" + t.text + "' exceeds dimension " +
                           std::to_string(dim_),
                       t.line, t.col);
    return Expr::var(idx);
  }

  std::vector<Token> toks_;
  std::size_t dim_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(const std::string& text, std::size_t dim) {
  ExprParser p(tokenize(text), dim);
  Expr e = p.parse_expr();
  p.expect_end();
  return e;
}

GuardClause parse_guard(const std::string& text, std::size_t dim) {
  ExprParser p(tokenize(text), dim);
  GuardClause g;
  g.lhs = p.parse_expr();
  if (!p.at_rel())
    throw ParseError("guard needs a comparison operator", p.peek().line, p.peek().col);
  g.rel = p.take_rel();
  g.rhs = p.parse_expr();
  p.expect_end();
  if (!g.lhs.is_polynomial() || !g.rhs.is_polynomial())
    throw UnsupportedStructure("guard sides must be polynomial: '" + text + "'");
  return g;
}

bool GuardClause::holds(const Vec& x, double tol) const {
  const double d = lhs.eval(x) - rhs.eval(x);
  if (std::isnan(d)) return false;
  if (tol > 0) {
    // Closure membership: strict and non-strict inequalities both get slack.
    switch (rel) {
      case Rel::Lt:
      case Rel::Le: return d <= tol;
      case Rel::Gt:
      case Rel::Ge: return d >= -tol;
      case Rel::Eq: return std::fabs(d) <= tol;
    }
  }
  switch (rel) {
    case Rel::Lt: return d < 0;
    case Rel::Le: return d <= 0;
    case Rel::Gt: return d > 0;
    case Rel::Ge: return d >= 0;
    case Rel::Eq: return d == 0;
  }
  return false;
}

std::string rel_str(Rel r) {
  switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
    case Rel::Eq: return "==";
  }
  return "?";
}

std::string GuardClause::str() const {
  return lhs.str() + " " + rel_str(rel) + " " + rhs.str();
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

// Precedence levels: 1 add/sub, 2 mul/div, 3 unary minus, 4 power, 5 atoms.
int level(const Expr::Node* n) {
  switch (n->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n->cval < 0 ? 3 : 5;
    default: return 5;
  }
}

std::string print_node(const Expr::Node* n);

std::string wrap(const Expr::Node* n, int min_level) {
  const std::string s = print_node(n);
  if (level(n) < min_level) return "(" + s + ")";
  return s;
}

std::string print_node(const Expr::Node* n) {
  switch (n->op) {
    case Op::Const: return fmt_double(n->cval);
    case Op::Var: return "x" + std::to_string(n->var + 1);
    case Op::Add: return wrap(n->a.get(), 1) + " + " + wrap(n->b.get(), 1);
    case Op::Sub: return wrap(n->a.get(), 1) + " - " + wrap(n->b.get(), 2);
    case Op::Mul: return wrap(n->a.get(), 2) + "*" + wrap(n->b.get(), 3);
    case Op::Div: return wrap(n->a.get(), 2) + "/" + wrap(n->b.get(), 3);
    case Op::Neg: return "-" + wrap(n->a.get(), 3);
    case Op::Pow: return wrap(n->a.get(), 5) + "^" + std::to_string(n->expo);
    case Op::Abs: return "abs(" + print_node(n->a.get()) + ")";
    case Op::Min:
      return "min(" + print_node(n->a.get()) + ", " + print_node(n->b.get()) + ")";
    case Op::Max:
      return "max(" + print_node(n->a.get()) + ", " + print_node(n->b.get()) + ")";
    case Op::Sqrt: return "sqrt(" + print_node(n->a.get()) + ")";
    case Op::Sin: return "sin(" + print_node(n->a.get()) + ")";
    case Op::Cos: return "cos(" + print_node(n->a.get()) + ")";
  }
  return "?";
}

}  // namespace

std::string Expr::str() const {
  if (!node_) return "<empty>";
  return print_node(node_.get());
}

}  // namespace subreg
