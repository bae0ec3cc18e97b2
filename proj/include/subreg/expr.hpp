#pragma once

#include <memory>
#include <string>
#include <vector>

#include "subreg/linalg.hpp"

namespace subreg {

// Value, gradient and Hessian of a scalar expression at a point, propagated
// by forward-mode rules. grad_ok / hess_ok drop to false when the point hits
// a kink (abs at 0, min/max tie with different branch derivatives, sqrt at 0);
// the value itself stays usable. Domain failures (division by zero, sqrt of a
// negative) surface as NaN values instead.
struct Jet2 {
  double v = 0;
  Vec g;
  Mat h;
  bool grad_ok = true;
  bool hess_ok = true;

  explicit Jet2(std::size_t n) : g(n), h(n) {}
};

enum class Op {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,  // integer exponent >= 0
  Abs,
  Min,
  Max,
  Sqrt,
  Sin,
  Cos,
};

enum class Rel { Lt, Le, Gt, Ge, Eq };

// Immutable scalar expression over variables x1..x3 (aliases x, y, z, t).
class Expr {
 public:
  struct Node;  // tree node; defined in the implementation file

  Expr() = default;

  static Expr constant(double c);
  static Expr var(int index);  // 0-based

  // Body grammar: + - * / unary minus, ^ with a nonnegative integer literal
  // exponent, abs/min/max/sqrt/sin/cos calls, parentheses, decimal and
  // scientific literals. Variables above index dim-1 are rejected.
  static Expr parse(const std::string& text, std::size_t dim);

  bool valid() const { return node_ != nullptr; }
  double eval(const Vec& x) const;
  double eval1(double t) const { return eval(Vec{t}); }
  Jet2 jet(const Vec& x) const;

  // Reparseable text form; numeric literals use shortest round-trip format.
  std::string str() const;

  int max_var() const;        // highest variable index used, -1 if none
  bool is_polynomial() const; // +,-,*,^ and division by constants only
  bool is_constant() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr operator-() const;

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr make(Op op, Expr a, Expr b, double cval, int ival);
  std::shared_ptr<const Node> node_;

  friend Expr pow(const Expr&, int);
  friend Expr abs(const Expr&);
  friend Expr min(const Expr&, const Expr&);
  friend Expr max(const Expr&, const Expr&);
  friend Expr sqrt(const Expr&);
  friend Expr sin(const Expr&);
  friend Expr cos(const Expr&);
  friend class ExprParser;
  friend class ExprPrinter;
  friend struct JetEval;
};

Expr pow(const Expr& a, int k);
Expr abs(const Expr& a);
Expr min(const Expr& a, const Expr& b);
Expr max(const Expr& a, const Expr& b);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);

// One comparison "lhs REL rhs" with polynomial sides.
struct GuardClause {
  Expr lhs;
  Rel rel;
  Expr rhs;

  bool holds(const Vec& x, double tol = 0.0) const;
  std::string str() const;
};

// Parses e.g. "x1 < 0", "x1^2 + x2^2 <= 1", "x1 == 0". Sides must be
// polynomial so membership is exact and cells have clean boundaries.
GuardClause parse_guard(const std::string& text, std::size_t dim);

std::string rel_str(Rel r);

}  // namespace subreg
