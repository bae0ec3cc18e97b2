#include "subreg/subdiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "subreg/errors.hpp"
#include "subreg/grids.hpp"
#include "subreg/numfmt.hpp"

namespace subreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec zero_vec(std::size_t n) {
  std::vector<double> z(n, 0.0);
  return Vec::from(z);
}

struct GridPoint {
  Vec dy;
  double dy2 = 0;
  double fy = 0;
};

// Cached finite evaluations over the probe ball, nearest offsets first.
struct ProbeGrid {
  Vec x;
  double fx = 0;
  std::vector<GridPoint> pts;
};

ProbeGrid build_probe_grid(const PiecewiseFn& f, const Vec& x, double delta,
                           double step, std::size_t cap) {
  auto lattice = ball_lattice(x, delta, step);
  if (lattice.size() > cap) {
    throw BudgetExceeded("probe grid has " + std::to_string(lattice.size()) +
                         " points, cap is " + std::to_string(cap));
  }
  ProbeGrid g;
  g.x = x;
  g.fx = f.eval_finite(x);
  g.pts.reserve(lattice.size());
  for (const auto& y : lattice) {
    ExtReal e = f.eval(y);
    if (!e.finite()) continue;
    Vec dy = y - x;
    double d2 = dot(dy, dy);
    if (d2 == 0) continue;
    g.pts.push_back({dy, d2, e.value()});
  }
  std::stable_sort(g.pts.begin(), g.pts.end(),
                   [](const GridPoint& a, const GridPoint& b) { return a.dy2 < b.dy2; });
  return g;
}

// Worst signed violation of the quadratic minorant at v over the grid.
// Positive means some probed y falls below the minorant.
double worst_violation(const ProbeGrid& g, const Vec& v, double c, double stop_above) {
  double worst = -kInf;
  for (const auto& p : g.pts) {
    double m = g.fx + dot(v, p.dy) - 0.5 * c * p.dy2 - p.fy;
    if (m > worst) {
      worst = m;
      if (worst > stop_above) return worst;
    }
  }
  return worst;
}

struct LatticeGeom {
  Vec center;
  double step = 0;
  int m = 0;        // index range is [-m, m] per coordinate
  double bound = 0; // m * step
};

LatticeGeom lattice_geometry(const PiecewiseFn& f, const Vec& x,
                             const ResolvedProbeParams& rp) {
  LatticeGeom geom;
  auto g0 = f.piece_gradient(x);
  geom.center = g0 ? *g0 : zero_vec(f.dim);
  double extent = 2.0 * f.lipschitz_estimate(x, rp.delta);
  geom.step = rp.lattice_step > 0 ? rp.lattice_step : extent / 32.0;
  geom.m = std::max<int>(1, static_cast<int>(std::llround(std::ceil(extent / geom.step))));
  geom.bound = geom.m * geom.step;
  double count = std::pow(2.0 * geom.m + 1.0, static_cast<double>(f.dim));
  if (count > static_cast<double>(rp.budget_cap)) {
    throw BudgetExceeded("candidate lattice has " + fmt_double(count) +
                         " points, cap is " + std::to_string(rp.budget_cap));
  }
  return geom;
}

std::vector<Vec> lattice_candidates(const LatticeGeom& geom, std::size_t dim) {
  std::vector<Vec> out;
  std::vector<int> k(dim, -geom.m);
  bool done = false;
  while (!done) {
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = geom.center[i] + geom.step * k[i];
    out.push_back(Vec::from(v));
    done = true;
    for (std::size_t i = dim; i-- > 0;) {
      if (k[i] < geom.m) {
        ++k[i];
        for (std::size_t j = i + 1; j < dim; ++j) k[j] = -geom.m;
        done = false;
        break;
      }
    }
  }
  return out;
}

struct RegularResult {
  std::vector<SubgradientSample> samples;
  bool truncated = false;
  LatticeGeom geom;
};

RegularResult regular_probe(const PiecewiseFn& f, const Vec& x,
                            const ResolvedProbeParams& rp, SubdiffKind tag) {
  ProbeGrid grid = build_probe_grid(f, x, rp.delta, rp.grid_step, rp.budget_cap);
  RegularResult out;
  out.geom = lattice_geometry(f, x, rp);
  auto cands = lattice_candidates(out.geom, f.dim);
  const double slack = 1e-9 * (1.0 + std::abs(grid.fx));

  std::vector<double> verdict(cands.size(), -1.0);
  parallel_for(cands.size(), rp.threads, [&](std::size_t i) {
    double w = worst_violation(grid, cands[i], rp.c, slack);
    if (w <= slack) verdict[i] = std::max(0.0, w);
  });

  const double edge = out.geom.bound - 0.5 * out.geom.step;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (verdict[i] < 0) continue;
    SubgradientSample s;
    s.x = x;
    s.v = cands[i];
    s.kind = tag;
    s.c = rp.c;
    s.delta = rp.delta;
    s.residual = verdict[i];
    out.samples.push_back(std::move(s));
    for (std::size_t d = 0; d < f.dim; ++d) {
      if (std::abs(cands[i][d] - out.geom.center[d]) >= edge) out.truncated = true;
    }
  }
  return out;
}

bool lex_less(const Vec& a, const Vec& b) {
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

void sort_samples(std::vector<SubgradientSample>& ss) {
  std::stable_sort(ss.begin(), ss.end(),
                   [](const SubgradientSample& a, const SubgradientSample& b) {
                     if (lex_less(a.v, b.v)) return true;
                     if (lex_less(b.v, a.v)) return false;
                     return lex_less(a.x, b.x);
                   });
}

std::vector<Vec> cluster_vectors(const std::vector<Vec>& vs, double radius) {
  const std::size_t n = vs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist(vs[i], vs[j]) <= radius) {
        std::size_t ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  std::vector<Vec> reps;
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (find(i) == i) roots.push_back(i);
  }
  for (std::size_t r : roots) {
    std::vector<double> acc(vs[r].dim(), 0.0);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (find(i) != r) continue;
      for (std::size_t d = 0; d < vs[i].dim(); ++d) acc[d] += vs[i][d];
      ++cnt;
    }
    for (double& a : acc) a /= static_cast<double>(cnt);
    reps.push_back(Vec::from(acc));
  }
  std::sort(reps.begin(), reps.end(), lex_less);
  return reps;
}

std::vector<std::array<double, 2>> merge_values_1d(std::vector<double> vals, double gap) {
  std::vector<std::array<double, 2>> out;
  if (vals.empty()) return out;
  std::sort(vals.begin(), vals.end());
  double lo = vals.front(), hi = vals.front();
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] - hi > gap) {
      out.push_back({lo, hi});
      lo = vals[i];
    }
    hi = vals[i];
  }
  out.push_back({lo, hi});
  return out;
}

void finalize_numeric_set(SubdiffSet& set, std::size_t dim) {
  sort_samples(set.samples);
  std::vector<Vec> vs;
  vs.reserve(set.samples.size());
  for (const auto& s : set.samples) vs.push_back(s.v);
  double radius = 3.0 * set.lattice_step;
  set.cluster_reps = cluster_vectors(vs, radius);
  if (dim == 1) {
    std::vector<double> vals;
    vals.reserve(vs.size());
    for (const auto& v : vs) vals.push_back(v[0]);
    set.intervals = merge_values_1d(std::move(vals), radius);
  }
}

// One-sided derivative by Richardson extrapolation of one-sided quotients.
double one_sided_slope(const PiecewiseFn& f, double x, double fx, int side) {
  const double scale = 1.0 + std::abs(x);
  double h0 = 1e-4 * scale;
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::array<double, 5> q{};
    bool ok = true;
    for (int k = 0; k < 5 && ok; ++k) {
      double h = h0 / std::pow(2.0, k);
      ExtReal e = f.eval(Vec::from({x + side * h}));
      if (!e.finite()) {
        ok = false;
        break;
      }
      q[k] = (e.value() - fx) / (side * h);
    }
    if (!ok) {
      h0 *= 0.125;
      continue;
    }
    if (std::abs(q[4]) > 1e3 && std::abs(q[4]) > 1.25 * std::abs(q[3])) {
      throw UnsupportedStructure("one-sided slope appears unbounded at x=" + fmt_double(x));
    }
    std::array<double, 4> r1{};
    for (int k = 0; k < 4; ++k) r1[k] = 2.0 * q[k + 1] - q[k];
    std::array<double, 3> r2{};
    for (int k = 0; k < 3; ++k) r2[k] = (4.0 * r1[k + 1] - r1[k]) / 3.0;
    double result = r2[2];
    // Cusp slopes approach their limit like c * h^p with p not an integer,
    // which the polynomial ladder cannot cancel. A stable quotient-difference
    // ratio away from 1/2 flags the geometric tail; one Aitken step then
    // removes it exactly.
    const double d1 = q[2] - q[1], d2 = q[3] - q[2], d3 = q[4] - q[3];
    if (d1 != 0 && d2 != 0 && d3 != d2) {
      const double rho1 = d2 / d1, rho2 = d3 / d2;
      if (std::isfinite(rho1) && std::isfinite(rho2) &&
          std::abs(rho2 - rho1) <= 0.05 * std::abs(rho1) &&
          std::abs(rho1 - 0.5) > 0.05 && std::abs(rho1) < 0.97) {
        result = q[4] - d3 * d3 / (d3 - d2);
      }
    }
    return result;
  }
  throw UnsupportedStructure("no finite one-sided values near x=" + fmt_double(x));
}

struct SideInfo {
  bool present = false;
  double g = 0;
};

SideInfo probe_side(const PiecewiseFn& f, double x, double fx, int side) {
  SideInfo info;
  const double scale = 1.0 + std::abs(x);
  const double h = 1e-7 * scale;
  Vec xs = Vec::from({x + side * h});
  auto actives = f.active_pieces(xs);
  if (actives.empty()) return info;

  std::size_t best = actives[0];
  double best_val = kInf;
  for (std::size_t idx : actives) {
    double val = f.pieces[idx].body.eval(xs);
    if (std::isnan(val)) continue;
    if (val < best_val) {
      best_val = val;
      best = idx;
    }
  }
  const Expr& body = f.pieces[best].body;

  double limit = body.eval1(x);
  double cont_tol = 1e-7 * (1.0 + std::abs(fx));
  if (std::isnan(limit)) {
    limit = body.eval1(x + side * 1e-9 * scale);
  }
  if (std::isnan(limit) || std::abs(limit - fx) > cont_tol) {
    throw UnsupportedStructure("one-sided limit " + fmt_double(limit) + " differs from f(x)=" +
                               fmt_double(fx) + " at x=" + fmt_double(x));
  }

  Jet2 j = body.jet(Vec::from({x}));
  bool jet_usable = j.grad_ok && std::isfinite(j.g[0]);
  info.present = true;
  info.g = jet_usable ? j.g[0] : one_sided_slope(f, x, fx, side);
  return info;
}

SubdiffSet make_analytic_set(double x, SubdiffKind kind) {
  SubdiffSet set;
  set.x = Vec::from({x});
  set.kind = kind;
  set.completeness = Completeness::AnalyticExact;
  return set;
}

void push_analytic_interval(SubdiffSet& set, double lo, double hi, SubdiffKind kind) {
  set.intervals.push_back({lo, hi});
  for (double e : {lo, hi}) {
    if (!std::isfinite(e)) continue;
    if (!set.samples.empty() && set.samples.back().v[0] == e) continue;
    SubgradientSample s;
    s.x = set.x;
    s.v = Vec::from({e});
    s.kind = kind;
    set.samples.push_back(std::move(s));
  }
  double rep = 0;
  if (std::isfinite(lo) && std::isfinite(hi)) {
    rep = 0.5 * (lo + hi);
  } else if (std::isfinite(lo)) {
    rep = lo;
  } else if (std::isfinite(hi)) {
    rep = hi;
  }
  set.cluster_reps.push_back(Vec::from({rep}));
}

std::vector<Vec> direction_samples(std::size_t dim) {
  if (dim == 1) return {Vec::from({-1.0}), Vec::from({1.0})};
  if (dim == 2) return sphere_points(zero_vec(2), 1.0, 16);
  return sphere_points(zero_vec(3), 1.0, 26);
}

}  // namespace

std::string kind_str(SubdiffKind k) {
  switch (k) {
    case SubdiffKind::Regular: return "regular";
    case SubdiffKind::Limiting: return "limiting";
    case SubdiffKind::Horizon: return "horizon";
  }
  return "regular";
}

SubdiffKind kind_from_str(const std::string& s) {
  if (s == "regular") return SubdiffKind::Regular;
  if (s == "limiting") return SubdiffKind::Limiting;
  if (s == "horizon") return SubdiffKind::Horizon;
  throw ArgumentError("unknown subdifferential kind: " + s);
}

ResolvedProbeParams resolve_probe_params(const ProbeParams& p) {
  if (p.delta <= 0) throw ArgumentError("probe radius delta must be positive");
  ResolvedProbeParams r;
  r.delta = p.delta;
  r.c = p.c > 0 ? p.c : 10.0 / r.delta;
  r.grid_step = p.grid_step > 0 ? p.grid_step : r.delta / 64.0;
  if (r.grid_step > r.delta) throw ArgumentError("grid_step exceeds delta");
  r.rho = p.rho > 0 ? p.rho : 4.0 * r.grid_step;
  r.lambda_tol = p.lambda_tol > 0 ? p.lambda_tol : 1e-3;
  r.f_tol = p.f_tol > 0 ? p.f_tol : std::max(10.0 * r.grid_step, 1e-6);
  r.lattice_step = p.lattice_step;
  r.budget_cap = p.budget_cap > 0 ? p.budget_cap : (std::size_t{1} << 22);
  r.threads = resolve_threads(p.threads);
  return r;
}

ExtReal set_distance(const SubdiffSet& set, const Vec& target) {
  if (!set.intervals.empty() && target.dim() == 1) {
    double t = target[0];
    double best = kInf;
    for (const auto& iv : set.intervals) {
      double d = 0;
      if (t < iv[0]) {
        d = iv[0] - t;
      } else if (t > iv[1]) {
        d = t - iv[1];
      }
      best = std::min(best, d);
    }
    return ExtReal(best);
  }
  if (set.samples.empty()) return ExtReal::pos_inf();
  double best = kInf;
  for (const auto& s : set.samples) best = std::min(best, dist(s.v, target));
  return ExtReal(best);
}

std::optional<Vec> set_closest(const SubdiffSet& set, const Vec& target) {
  if (!set.intervals.empty() && target.dim() == 1) {
    double t = target[0];
    double best = kInf;
    double arg = 0;
    for (const auto& iv : set.intervals) {
      double p = std::clamp(t, iv[0], iv[1]);
      double d = std::abs(p - t);
      if (d < best) {
        best = d;
        arg = p;
      }
    }
    if (!std::isfinite(arg)) return std::nullopt;
    return Vec::from({arg});
  }
  if (set.samples.empty()) return std::nullopt;
  double best = kInf;
  Vec arg = set.samples.front().v;
  for (const auto& s : set.samples) {
    double d = dist(s.v, target);
    if (d < best) {
      best = d;
      arg = s.v;
    }
  }
  return arg;
}

SubdiffSet analytic_subdiff_1d(const PiecewiseFn& f, double x, SubdiffKind kind) {
  if (f.dim != 1) throw UnsupportedStructure("the analytic oracle handles only 1-D functions");
  Vec xv = Vec::from({x});
  double fx = f.eval_finite(xv);

  SideInfo left = probe_side(f, x, fx, -1);
  SideInfo right = probe_side(f, x, fx, +1);

  SubdiffSet set = make_analytic_set(x, kind);

  if (kind == SubdiffKind::Horizon) {
    if (!left.present) push_analytic_interval(set, -1.0, -1.0, kind);
    if (!right.present) push_analytic_interval(set, 1.0, 1.0, kind);
    return set;
  }

  if (!left.present && !right.present) {
    push_analytic_interval(set, -kInf, kInf, kind);
    return set;
  }
  if (!left.present) {
    push_analytic_interval(set, -kInf, right.g, kind);
    return set;
  }
  if (!right.present) {
    push_analytic_interval(set, left.g, kInf, kind);
    return set;
  }

  double tie = 1e-9 * (1.0 + std::max(std::abs(left.g), std::abs(right.g)));
  if (std::abs(left.g - right.g) <= tie) {
    double g = 0.5 * (left.g + right.g);
    push_analytic_interval(set, g, g, kind);
    return set;
  }
  if (left.g < right.g) {
    push_analytic_interval(set, left.g, right.g, kind);
    return set;
  }
  if (kind == SubdiffKind::Limiting) {
    push_analytic_interval(set, right.g, right.g, kind);
    push_analytic_interval(set, left.g, left.g, kind);
  }
  return set;
}

std::vector<EpigraphNormalSample> epigraph_normals(const PiecewiseFn& f, const Vec& x,
                                                   const ProbeParams& params) {
  ResolvedProbeParams rp = resolve_probe_params(params);
  double grid_step = f.dim == 3 ? std::max(rp.grid_step, rp.delta / 16.0) : rp.grid_step;
  ProbeGrid grid = build_probe_grid(f, x, rp.delta, grid_step, rp.budget_cap);

  std::vector<std::pair<Vec, double>> exterior;
  const std::array<double, 5> heights = {-0.5 * rp.delta, -0.25 * rp.delta, 0.25 * rp.delta,
                                         0.5 * rp.delta, rp.delta};
  for (const Vec& w : direction_samples(f.dim)) {
    for (double radius : {0.25 * rp.delta, 0.5 * rp.delta}) {
      for (double eta : heights) {
        exterior.emplace_back(x + radius * w, grid.fx + eta);
      }
    }
  }
  exterior.emplace_back(x, grid.fx - 0.25 * rp.delta);
  exterior.emplace_back(x, grid.fx - 0.5 * rp.delta);

  std::vector<EpigraphNormalSample> out;
  for (const auto& [xe, re] : exterior) {
    ExtReal fe = f.eval(xe);
    if (fe.finite() && re >= fe.value()) continue;

    double best = kInf;
    const GridPoint* foot = nullptr;
    bool foot_at_x = false;
    for (const auto& p : grid.pts) {
      Vec y = x + p.dy;
      Vec dh = y - xe;
      double vert = std::max(p.fy - re, 0.0);
      double d2 = dot(dh, dh) + vert * vert;
      if (d2 < best) {
        best = d2;
        foot = &p;
      }
    }
    {
      Vec dh = x - xe;
      double vert = std::max(grid.fx - re, 0.0);
      double d2 = dot(dh, dh) + vert * vert;
      if (d2 < best) {
        best = d2;
        foot = nullptr;
        foot_at_x = true;
      }
    }
    if (foot == nullptr && !foot_at_x) continue;

    double gap = std::sqrt(best);
    if (!std::isfinite(gap) || gap <= 1e-12) continue;

    Vec fy = foot ? x + foot->dy : x;
    double fval = foot ? foot->fy : grid.fx;
    double foot_r = std::max(fval, re);

    EpigraphNormalSample s;
    s.x = fy;
    s.fx = fval;
    s.v = (1.0 / gap) * (xe - fy);
    s.lambda = std::max(foot_r - re, 0.0) / gap;
    s.gap = gap;
    out.push_back(std::move(s));
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const EpigraphNormalSample& a, const EpigraphNormalSample& b) {
                     if (lex_less(a.x, b.x)) return true;
                     if (lex_less(b.x, a.x)) return false;
                     if (lex_less(a.v, b.v)) return true;
                     if (lex_less(b.v, a.v)) return false;
                     return a.lambda < b.lambda;
                   });
  std::vector<EpigraphNormalSample> dedup;
  for (auto& s : out) {
    bool dup = false;
    if (!dedup.empty()) {
      const auto& t = dedup.back();
      dup = dist(t.x, s.x) <= 1e-9 && dist(t.v, s.v) <= 1e-9 && std::abs(t.lambda - s.lambda) <= 1e-9;
    }
    if (!dup) dedup.push_back(std::move(s));
  }
  return dedup;
}

double proximal_residual(const PiecewiseFn& f, const Vec& x, const Vec& v, double c,
                         double delta, double grid_step) {
  ProbeParams p;
  p.delta = delta;
  p.grid_step = grid_step;
  ResolvedProbeParams rp = resolve_probe_params(p);
  ProbeGrid grid = build_probe_grid(f, x, rp.delta, rp.grid_step, rp.budget_cap);
  return worst_violation(grid, v, c, kInf);
}

SubdiffSet numeric_subdiff(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                           const ProbeParams& params) {
  if (x.dim() != f.dim) throw ArgumentError("point dimension does not match the function");
  ResolvedProbeParams rp = resolve_probe_params(params);
  double fx = f.eval_finite(x);

  SubdiffSet set;
  set.x = x;
  set.kind = kind;
  set.completeness = Completeness::NumericSampled;
  set.c = rp.c;
  set.delta = rp.delta;
  LatticeGeom geom = lattice_geometry(f, x, rp);
  set.lattice_step = geom.step;
  set.lattice_bound = geom.bound;
  set.lattice_center = geom.center;

  if (kind == SubdiffKind::Regular) {
    RegularResult rr = regular_probe(f, x, rp, kind);
    set.samples = std::move(rr.samples);
    set.truncated = rr.truncated;
    finalize_numeric_set(set, f.dim);
    return set;
  }

  if (kind == SubdiffKind::Limiting) {
    double base_step = std::max(rp.grid_step, rp.rho / 4.0);
    auto bases = ball_lattice(x, rp.rho, base_step);
    for (const Vec& xb : bases) {
      ExtReal fe = f.eval(xb);
      if (!fe.finite() || std::abs(fe.value() - fx) > rp.f_tol) continue;
      auto jet = f.smooth_jet(xb);
      if (jet && jet->grad_ok) {
        bool finite_grad = true;
        for (std::size_t d = 0; d < f.dim; ++d) {
          if (!std::isfinite(jet->g[d])) finite_grad = false;
        }
        if (finite_grad) {
          SubgradientSample s;
          s.x = xb;
          s.v = jet->g;
          s.kind = kind;
          s.c = rp.c;
          s.delta = rp.delta;
          set.samples.push_back(std::move(s));
          continue;
        }
      }
      RegularResult rr = regular_probe(f, xb, rp, kind);
      for (auto& s : rr.samples) set.samples.push_back(std::move(s));
      set.truncated = set.truncated || rr.truncated;
    }
    finalize_numeric_set(set, f.dim);
    return set;
  }

  auto normals = epigraph_normals(f, x, params);
  double foot_tol = std::max(rp.rho, 2.0 * rp.grid_step);
  std::vector<Vec> dirs;
  for (const auto& n : normals) {
    if (n.lambda > rp.lambda_tol) continue;
    if (dist(n.x, x) > foot_tol) continue;
    if (std::abs(n.fx - fx) > rp.f_tol) continue;
    double nv = norm(n.v);
    if (nv < 1e-12) continue;
    Vec unit = (1.0 / nv) * n.v;
    SubgradientSample s;
    s.x = n.x;
    s.v = unit;
    s.kind = kind;
    s.c = rp.c;
    s.delta = rp.delta;
    s.residual = n.gap;
    set.samples.push_back(std::move(s));
    dirs.push_back(unit);
  }
  sort_samples(set.samples);
  set.cluster_reps = cluster_vectors(dirs, 0.05);
  if (f.dim == 1) {
    for (const auto& rep : set.cluster_reps) set.intervals.push_back({rep[0], rep[0]});
  }
  return set;
}

SubdiffSet subdiff_dispatch(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                            const ProbeParams& params) {
  auto jet = f.smooth_jet(x);
  if (jet && jet->grad_ok) {
    bool finite_grad = true;
    for (std::size_t d = 0; d < f.dim; ++d) {
      if (!std::isfinite(jet->g[d])) finite_grad = false;
    }
    if (finite_grad) {
      SubdiffSet set;
      set.x = x;
      set.kind = kind;
      set.completeness = Completeness::AnalyticExact;
      if (kind != SubdiffKind::Horizon) {
        SubgradientSample s;
        s.x = x;
        s.v = jet->g;
        s.kind = kind;
        set.samples.push_back(std::move(s));
        set.cluster_reps.push_back(jet->g);
        if (f.dim == 1) set.intervals.push_back({jet->g[0], jet->g[0]});
      }
      return set;
    }
  }
  if (f.dim == 1) {
    try {
      return analytic_subdiff_1d(f, x[0], kind);
    } catch (const UnsupportedStructure&) {
    }
  }
  return numeric_subdiff(f, x, kind, params);
}

MinNormResult min_norm_subgradient(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                                   const ProbeParams& params) {
  SubdiffSet set = subdiff_dispatch(f, x, kind, params);
  MinNormResult out;
  Vec zero = zero_vec(f.dim);
  out.value = set_distance(set, zero);
  out.witness = set_closest(set, zero);
  out.source = set.completeness;
  return out;
}

ContinuityReport subdiff_continuity_probe(const PiecewiseFn& f, const Vec& xbar,
                                          const Vec& vbar, std::vector<double> radii,
                                          const ProbeParams& params, double gap_tol) {
  if (radii.empty()) throw ArgumentError("continuity probe needs a nonempty radius list");
  std::sort(radii.begin(), radii.end(), std::greater<double>());

  ContinuityReport rep;
  rep.xbar = xbar;
  rep.vbar = vbar;
  rep.fbar = f.eval_finite(xbar);
  rep.gap_tol = gap_tol;

  SubdiffSet s0 = subdiff_dispatch(f, xbar, SubdiffKind::Limiting, params);
  ExtReal d0 = set_distance(s0, vbar);
  double pre_tol = std::max(1e-6, 3.0 * s0.lattice_step);
  if (!d0.finite() || d0.value() > pre_tol) {
    throw PreconditionError("reference vector is not a limiting subgradient at the reference point "
                            "(distance " + d0.str() + ", tolerance " + fmt_double(pre_tol) + ")");
  }

  for (double r : radii) {
    ContinuityRow row;
    row.radius = r;
    std::vector<Vec> xs;
    if (f.dim == 1) {
      for (double t : linspace(xbar[0] - r, xbar[0] + r, 41)) xs.push_back(Vec::from({t}));
    } else if (f.dim == 2) {
      xs = ball_lattice(xbar, r, r / 6.0);
    } else {
      xs = ball_lattice(xbar, r, r / 3.0);
    }
    for (const Vec& xp : xs) {
      ExtReal fe = f.eval(xp);
      if (!fe.finite()) continue;
      SubdiffSet s = subdiff_dispatch(f, xp, SubdiffKind::Limiting, params);
      if (s.empty()) continue;
      ExtReal d = set_distance(s, vbar);
      double slack = s.completeness == Completeness::NumericSampled ? 2.0 * s.lattice_step : 0.0;
      if (!d.finite() || d.value() > r + slack) continue;
      double gap = std::abs(fe.value() - rep.fbar);
      if (!row.found || gap > row.gap) {
        row.found = true;
        row.gap = gap;
        row.witness_x = xp;
        row.witness_f = fe.value();
        if (auto w = set_closest(s, vbar)) row.witness_v = *w;
      }
    }
    rep.rows.push_back(std::move(row));
  }

  double first_gap = 0;
  bool any = false;
  for (const auto& row : rep.rows) {
    if (row.found) {
      if (!any) first_gap = row.gap;
      any = true;
    }
  }
  if (any) {
    const ContinuityRow* last = nullptr;
    for (const auto& row : rep.rows) {
      if (row.found) last = &row;
    }
    rep.continuous = last->gap <= std::max(gap_tol, 0.05 * first_gap);
  }
  return rep;
}

Curve Curve::parse(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ArgumentError("curve needs at least one component");
  Curve c;
  for (const auto& t : texts) c.comps.push_back(Expr::parse(t, 1));
  return c;
}

Vec Curve::at(double t) const {
  std::vector<double> x(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) x[i] = comps[i].eval1(t);
  return Vec::from(x);
}

Vec Curve::velocity(double t) const {
  std::vector<double> v(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    Jet2 j = comps[i].jet(Vec::from({t}));
    if (!j.grad_ok || !std::isfinite(j.g[0])) {
      throw UnsupportedStructure("curve component " + std::to_string(i + 1) +
                                 " is not differentiable at t=" + fmt_double(t));
    }
    v[i] = j.g[0];
  }
  return Vec::from(v);
}

std::vector<std::string> Curve::str() const {
  std::vector<std::string> out;
  for (const auto& c : comps) out.push_back(c.str());
  return out;
}

ChainRuleReport chain_rule_check(const PiecewiseFn& f, const Curve& curve,
                                 const std::vector<double>& t_samples,
                                 const ProbeParams& params) {
  if (curve.dim() != f.dim) throw ArgumentError("curve dimension does not match the function");
  ChainRuleReport rep;
  for (double t : t_samples) {
    Vec x = curve.at(t);
    Vec xd = curve.velocity(t);
    ExtReal f0 = f.eval(x);
    if (!f0.finite()) throw DomainError("curve leaves the domain at t=" + fmt_double(t));
    double h = 1e-5 * (1.0 + std::abs(t));
    ExtReal fp = f.eval(curve.at(t + h));
    ExtReal fm = f.eval(curve.at(t - h));
    if (!fp.finite() || !fm.finite()) {
      throw DomainError("curve leaves the domain near t=" + fmt_double(t));
    }
    double composed = (fp.value() - fm.value()) / (2.0 * h);

    SubdiffSet s = subdiff_dispatch(f, x, SubdiffKind::Limiting, params);
    std::vector<Vec> reps;
    if (s.completeness == Completeness::AnalyticExact) {
      for (const auto& smp : s.samples) reps.push_back(smp.v);
    } else {
      reps = s.cluster_reps;
    }
    if (reps.empty()) {
      for (const auto& smp : s.samples) reps.push_back(smp.v);
    }
    for (const Vec& v : reps) {
      ChainRuleRow row;
      row.t = t;
      row.x = x;
      row.v = v;
      row.along = dot(v, xd);
      row.composed = composed;
      row.residual = std::abs(row.along - composed);
      rep.max_residual = std::max(rep.max_residual, row.residual);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

std::string subdiff_to_csv(const SubdiffSet& set) {
  std::ostringstream os;
  std::size_t n = set.x.dim();
  for (std::size_t i = 0; i < n; ++i) os << "x" << i + 1 << ",";
  for (std::size_t i = 0; i < n; ++i) os << "v" << i + 1 << ",";
  os << "kind,residual\n";
  for (const auto& s : set.samples) {
    for (std::size_t i = 0; i < n; ++i) os << fmt_double(s.x[i]) << ",";
    for (std::size_t i = 0; i < n; ++i) os << fmt_double(s.v[i]) << ",";
    os << kind_str(s.kind) << "," << fmt_double(s.residual) << "\n";
  }
  return os.str();
}

}  // namespace subreg
