#include "subreg/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "subreg/errors.hpp"
#include "subreg/grids.hpp"

namespace subreg {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ArgumentError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

PiecewiseFn PiecewiseFn::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("function DSL root must be an object");
  check_keys(j, {"name", "dim", "pieces", "flags", "box"}, "function DSL");
  PiecewiseFn f;
  if (j.contains("name")) f.name = j.at("name").get<std::string>();
  if (!j.contains("dim") || !j.at("dim").is_number_integer())
    throw ArgumentError("function DSL needs an integer 'dim'");
  const long dim = j.at("dim").get<long>();
  if (dim < 1 || dim > static_cast<long>(kMaxDim))
    throw ArgumentError("dim must be 1, 2 or 3");
  f.dim = static_cast<std::size_t>(dim);

  if (!j.contains("pieces") || !j.at("pieces").is_array() || j.at("pieces").empty())
    throw ArgumentError("function DSL needs a non-empty 'pieces' array");
  std::size_t pi = 0;
  for (const auto& pj : j.at("pieces")) {
    check_keys(pj, {"guard", "body"}, "piece " + std::to_string(pi));
    Piece p;
    if (pj.contains("guard")) {
      for (const auto& gj : pj.at("guard")) {
        try {
          p.guard.push_back(parse_guard(gj.get<std::string>(), f.dim));
        } catch (const ParseError& e) {
          throw ParseError("piece " + std::to_string(pi) + " guard: " + e.what(), e.line,
                           e.column);
        }
      }
    }
    if (!pj.contains("body")) throw ArgumentError("piece " + std::to_string(pi) + " lacks 'body'");
    try {
      p.body = Expr::parse(pj.at("body").get<std::string>(), f.dim);
    } catch (const ParseError& e) {
      throw ParseError("piece " + std::to_string(pi) + " body: " + e.what(), e.line, e.column);
    }
    f.pieces.push_back(std::move(p));
    ++pi;
  }

  if (j.contains("flags")) {
    const auto& fj = j.at("flags");
    check_keys(fj, {"claims_semialgebraic", "claims_lsc"}, "flags");
    if (fj.contains("claims_semialgebraic"))
      f.flags.claims_semialgebraic = fj.at("claims_semialgebraic").get<bool>();
    if (fj.contains("claims_lsc")) f.flags.claims_lsc = fj.at("claims_lsc").get<bool>();
  }

  if (j.contains("box")) {
    const auto& bj = j.at("box");
    if (!bj.is_array() || bj.size() != f.dim)
      throw ArgumentError("box must list one [lo, hi] pair per dimension");
    for (const auto& pair : bj) {
      if (!pair.is_array() || pair.size() != 2)
        throw ArgumentError("box entries must be [lo, hi] pairs");
      const double lo = pair.at(0).get<double>();
      const double hi = pair.at(1).get<double>();
      if (!(lo < hi)) throw ArgumentError("box entry needs lo < hi");
      f.box.bounds.push_back({lo, hi});
    }
  } else {
    for (std::size_t i = 0; i < f.dim; ++i) f.box.bounds.push_back({-1.0, 1.0});
  }
  return f;
}

PiecewiseFn PiecewiseFn::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open function file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("JSON error in '" + path + "': " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json PiecewiseFn::to_json() const {
  nlohmann::ordered_json j;
  if (!name.empty()) j["name"] = name;
  j["dim"] = dim;
  auto pieces_j = nlohmann::ordered_json::array();
  for (const auto& p : pieces) {
    nlohmann::ordered_json pj;
    auto guards = nlohmann::ordered_json::array();
    for (const auto& g : p.guard) guards.push_back(g.str());
    pj["guard"] = guards;
    pj["body"] = p.body.str();
    pieces_j.push_back(pj);
  }
  j["pieces"] = pieces_j;
  nlohmann::ordered_json fj = nlohmann::ordered_json::object();
  if (flags.claims_semialgebraic) fj["claims_semialgebraic"] = *flags.claims_semialgebraic;
  if (flags.claims_lsc) fj["claims_lsc"] = *flags.claims_lsc;
  j["flags"] = fj;
  auto bj = nlohmann::ordered_json::array();
  for (const auto& b : box.bounds) bj.push_back({b[0], b[1]});
  j["box"] = bj;
  return j;
}

void PiecewiseFn::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write function file '" + path + "'");
  out << to_json().dump(2) << "\n";
}

PiecewiseFn PiecewiseFn::single(std::size_t dim, Expr body, Box box) {
  PiecewiseFn f;
  f.dim = dim;
  Piece p;
  p.body = std::move(body);
  f.pieces.push_back(std::move(p));
  f.box = std::move(box);
  return f;
}

ExtReal PiecewiseFn::eval(const Vec& x) const {
  bool any = false;
  double best = 0;
  for (const auto& p : pieces) {
    if (!p.active(x)) continue;
    const double v = p.body.eval(x);
    if (std::isnan(v))
      throw DomainError("expression value undefined at " + x.str());
    if (!any || v < best) best = v;
    any = true;
  }
  if (!any) return ExtReal::pos_inf();
  return ExtReal(best);
}

double PiecewiseFn::eval_finite(const Vec& x) const {
  const ExtReal v = eval(x);
  if (!v.finite()) throw DomainError("f is +inf at " + x.str());
  return v.value();
}

std::vector<std::size_t> PiecewiseFn::active_pieces(const Vec& x) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pieces.size(); ++i)
    if (pieces[i].active(x)) out.push_back(i);
  return out;
}

std::optional<Jet2> PiecewiseFn::smooth_jet(const Vec& x, double boundary_tol) const {
  const auto act = active_pieces(x);
  if (act.empty()) return std::nullopt;
  for (const auto& p : pieces)
    for (const auto& g : p.guard)
      if (std::fabs(g.lhs.eval(x) - g.rhs.eval(x)) <= boundary_tol) return std::nullopt;

  double best = 0;
  std::vector<std::size_t> argmin;
  for (std::size_t idx : act) {
    const double v = pieces[idx].body.eval(x);
    if (std::isnan(v)) throw DomainError("expression value undefined at " + x.str());
    if (argmin.empty() || v < best - 1e-12 * (1 + std::fabs(best))) {
      best = std::min(v, argmin.empty() ? v : best);
      argmin.assign(1, idx);
    } else if (v <= best + 1e-12 * (1 + std::fabs(best))) {
      argmin.push_back(idx);
    }
  }

  std::optional<Jet2> out;
  for (std::size_t idx : argmin) {
    Jet2 jet = pieces[idx].body.jet(x);
    if (!jet.grad_ok) return std::nullopt;
    if (!out) {
      out = jet;
      continue;
    }
    if (dist(out->g, jet.g) > 1e-9 * (1 + norm(out->g))) return std::nullopt;
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        if (std::fabs(out->h(i, j) - jet.h(i, j)) > 1e-8 * (1 + std::fabs(out->h(i, j))))
          out->hess_ok = false;
  }
  return out;
}

std::optional<Vec> PiecewiseFn::piece_gradient(const Vec& x, double boundary_tol) const {
  const auto jet = smooth_jet(x, boundary_tol);
  if (!jet) return std::nullopt;
  return jet->g;
}

std::optional<Mat> PiecewiseFn::piece_hessian(const Vec& x, double boundary_tol) const {
  const auto jet = smooth_jet(x, boundary_tol);
  if (!jet || !jet->hess_ok) return std::nullopt;
  return jet->h;
}

std::vector<Cell> PiecewiseFn::cells(std::size_t grid_per_dim) const {
  const auto grid = box_grid(box, grid_per_dim);
  std::vector<Cell> out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    bool found = false;
    double best_score = 0;
    Vec best_x(dim);
    for (const Vec& x : grid) {
      if (!p.active(x)) continue;
      // Prefer witnesses deep inside the strict region; equality clauses
      // contribute score 0 (they have no interior).
      double score = std::numeric_limits<double>::infinity();
      for (const auto& g : p.guard) {
        const double d = g.lhs.eval(x) - g.rhs.eval(x);
        const double margin = (g.rel == Rel::Eq) ? 0.0
                              : (g.rel == Rel::Lt || g.rel == Rel::Le) ? -d
                                                                       : d;
        score = std::min(score, margin);
      }
      if (p.guard.empty()) score = 1.0;
      if (!found || score > best_score) {
        found = true;
        best_score = score;
        best_x = x;
      }
    }
    if (found) {
      Cell c;
      c.piece = i;
      for (const auto& g : p.guard) c.guard_text.push_back(g.str());
      c.witness = best_x;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<double> PiecewiseFn::guard_breakpoints_1d(std::size_t scan) const {
  if (dim != 1)
    throw UnsupportedStructure("guard_breakpoints_1d requires a 1-D function");
  const double lo = box.bounds[0][0], hi = box.bounds[0][1];
  std::vector<double> roots;
  for (const auto& p : pieces) {
    for (const auto& g : p.guard) {
      auto val = [&](double t) { return g.lhs.eval(Vec{t}) - g.rhs.eval(Vec{t}); };
      double prev_t = lo, prev_v = val(lo);
      if (prev_v == 0) roots.push_back(lo);
      for (std::size_t i = 1; i <= scan; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan);
        const double v = val(t);
        if (v == 0) {
          roots.push_back(t);
        } else if (prev_v != 0 && ((prev_v < 0) != (v < 0))) {
          double a = prev_t, b = t, fa = prev_v;
          for (int it = 0; it < 80; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = val(m);
            if (fm == 0) {
              a = b = m;
              break;
            }
            if ((fa < 0) != (fm < 0)) {
              b = m;
            } else {
              a = m;
              fa = fm;
            }
          }
          roots.push_back(0.5 * (a + b));
        }
        prev_t = t;
        prev_v = v;
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || std::fabs(r - out.back()) > 1e-10 * (1 + std::fabs(r)))
      out.push_back(r);
  return out;
}

double PiecewiseFn::lipschitz_estimate(const Vec& x, double radius) const {
  const ExtReal fx = eval(x);
  if (!fx.finite()) throw DomainError("lipschitz_estimate at a +inf point");
  double L = 1e-3;
  for (double r : {radius, radius / 2, radius / 4}) {
    for (const Vec& y : sphere_points(x, r, 16)) {
      const ExtReal fy = eval(y);
      if (!fy.finite()) continue;
      L = std::max(L, std::fabs(fy.value() - fx.value()) / r);
    }
  }
  return L;
}

LscReport lsc_probe(const PiecewiseFn& f, std::size_t grid_per_dim, double f_tol) {
  LscReport rep;
  const auto grid = box_grid(f.box, grid_per_dim);
  const double h = f.box.max_extent() / static_cast<double>(grid_per_dim - 1);
  for (const Vec& x : grid) {
    ++rep.points_checked;
    const ExtReal fx = f.eval(x);
    std::vector<double> mins;
    bool all_infinite = true;
    for (int k = 0; k <= 6; ++k) {
      const double rad = h * std::pow(0.5, k);
      double m = std::numeric_limits<double>::infinity();
      for (const Vec& y : sphere_points(x, rad, 16)) {
        const ExtReal fy = f.eval(y);
        if (fy.finite()) m = std::min(m, fy.value());
      }
      if (std::isfinite(m)) all_infinite = false;
      mins.push_back(m);
    }
    if (!fx.finite()) {
      // +inf value: lsc demands the nearby values blow up too.
      if (std::isfinite(mins.back()) && mins.back() < 1e15) {
        rep.ok = false;
        rep.violations.push_back({x, std::numeric_limits<double>::infinity(), mins.back()});
      }
      continue;
    }
    if (all_infinite) continue;
    const double g0 = fx.value() - mins.front();
    const double g_last = fx.value() - mins.back();
    // A persistent gap across shrinking radii marks a downward jump.
    if (g_last > std::max(f_tol, 1e-9 * (1 + std::fabs(fx.value()))) && g0 > f_tol &&
        g_last >= 0.5 * g0) {
      rep.ok = false;
      rep.violations.push_back({x, fx.value(), mins.back()});
    }
  }
  return rep;
}

CoverageReport coverage_probe(const PiecewiseFn& f, std::size_t grid_per_dim) {
  CoverageReport rep;
  for (const Vec& x : box_grid(f.box, grid_per_dim)) {
    ++rep.points_checked;
    if (f.active_pieces(x).empty()) rep.holes.push_back(x);
  }
  return rep;
}

}  // namespace subreg
