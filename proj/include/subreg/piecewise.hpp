#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subreg/expr.hpp"
#include "subreg/extreal.hpp"
#include "subreg/linalg.hpp"

namespace subreg {

// One branch of a piecewise definition: a conjunction of polynomial guard
// clauses and a body expression. An empty guard list is "everywhere".
struct Piece {
  std::vector<GuardClause> guard;
  Expr body;

  bool active(const Vec& x) const {
    for (const auto& g : guard)
      if (!g.holds(x)) return false;
    return true;
  }
  bool in_closure(const Vec& x, double tol) const {
    for (const auto& g : guard)
      if (!g.holds(x, tol)) return false;
    return true;
  }
};

// User-asserted metadata; absent means unknown.
struct FnFlags {
  std::optional<bool> claims_semialgebraic;
  std::optional<bool> claims_lsc;
};

// A piece together with an interior witness point, for reporting and for
// seeding per-piece probes.
struct Cell {
  std::size_t piece;
  std::vector<std::string> guard_text;
  Vec witness;
};

// Extended-real piecewise function on a box. Where several guards hold the
// value is the minimum of the active bodies; where none holds it is +inf.
class PiecewiseFn {
 public:
  std::size_t dim = 1;
  std::vector<Piece> pieces;
  FnFlags flags;
  Box box;
  std::string name;  // optional label carried from the DSL file

  static PiecewiseFn from_json(const nlohmann::json& j);
  static PiecewiseFn load_file(const std::string& path);
  nlohmann::ordered_json to_json() const;
  void save_file(const std::string& path) const;

  // Single-expression convenience constructor covering the whole box.
  static PiecewiseFn single(std::size_t dim, Expr body, Box box);

  ExtReal eval(const Vec& x) const;
  // eval that insists on a finite value.
  double eval_finite(const Vec& x) const;

  std::vector<std::size_t> active_pieces(const Vec& x) const;

  // Gradient / Hessian of the uniquely-active piece body. Empty when x is
  // within boundary_tol of any guard boundary, when the active piece is
  // ambiguous (value tie with disagreeing derivatives), or when the body
  // itself has a kink at x.
  std::optional<Vec> piece_gradient(const Vec& x, double boundary_tol = 1e-9) const;
  std::optional<Mat> piece_hessian(const Vec& x, double boundary_tol = 1e-9) const;

  // Full jet of the uniquely-active piece; shared machinery for the two
  // accessors above and for the smooth fast paths elsewhere.
  std::optional<Jet2> smooth_jet(const Vec& x, double boundary_tol = 1e-9) const;

  // Pieces with an interior witness found on a scan grid.
  std::vector<Cell> cells(std::size_t grid_per_dim = 33) const;

  // Guard-boundary locations inside the box (1-D only), by sign scan plus
  // bisection on each guard polynomial.
  std::vector<double> guard_breakpoints_1d(std::size_t scan = 4096) const;

  // Crude local slope bound from sampled difference quotients around x.
  double lipschitz_estimate(const Vec& x, double radius) const;
};

// Lower-semicontinuity probe: flags grid points whose value exceeds the
// minimum over a shrinking punctured neighborhood by more than the local
// slope allows.
struct LscViolation {
  Vec x;
  double fx;
  double nearby_min;
};
struct LscReport {
  bool ok = true;
  std::vector<LscViolation> violations;
  std::size_t points_checked = 0;
};
LscReport lsc_probe(const PiecewiseFn& f, std::size_t grid_per_dim = 65,
                    double f_tol = 1e-6);

// Points of the scan grid where no piece is active (value +inf).
struct CoverageReport {
  std::size_t points_checked = 0;
  std::vector<Vec> holes;
};
CoverageReport coverage_probe(const PiecewiseFn& f, std::size_t grid_per_dim = 65);

}  // namespace subreg
