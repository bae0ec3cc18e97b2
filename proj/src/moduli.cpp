#include "subreg/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "subreg/grids.hpp"
#include "subreg/numfmt.hpp"

namespace subreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest sampled dip of f below its secant midpoints around x: the local
// concavity scale that the quadratic-minorant probe must dominate. Convex
// kinks contribute nothing, so they do not inflate the probe's slack.
double concavity_scale(const PiecewiseFn& f, const Vec& x, double radius) {
  const std::size_t n = f.dim;
  const ExtReal f0 = f.eval(x);
  if (!f0.finite()) return 0;
  double worst = 0;
  auto probe_dir = [&](const Vec& u) {
    for (double s : {radius, 0.5 * radius}) {
      const ExtReal fp = f.eval(x + s * u);
      const ExtReal fm = f.eval(x - s * u);
      if (!fp.finite() || !fm.finite()) continue;
      const double dip = 2 * f0.value() - fp.value() - fm.value();
      if (dip > 0) worst = std::max(worst, dip / (s * s));
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    Vec u(n);
    u[i] = 1;
    probe_dir(u);
  }
  if (n >= 2) {
    Vec u(n);
    u[0] = M_SQRT1_2;
    u[1] = M_SQRT1_2;
    probe_dir(u);
    u[1] = -M_SQRT1_2;
    probe_dir(u);
  }
  if (n == 3) {
    Vec u(n);
    u[0] = u[1] = u[2] = 1.0 / std::sqrt(3.0);
    probe_dir(u);
  }
  return worst;
}

}  // namespace

// Probe parameters matched to the radius scale r: the candidate lattice
// resolves subgradient norms of order r, and the quadratic slack sits just
// above the sampled concavity so the acceptance band stays near one lattice
// step.
ProbeParams radius_scaled_probe(const PiecewiseFn& f, const Vec& x, double r) {
  ProbeParams p;
  const double delta = std::max(0.15 * r, 1e-9);
  const double curv = std::max(4.0, 1.5 * concavity_scale(f, x, delta));
  const double step = std::max(r / 24.0, 1e-12);
  const double h = std::min(delta / 64.0, step / curv);
  p.delta = delta;
  p.grid_step = h;
  p.c = curv + 2.0 * step / h;
  p.lattice_step = step;
  p.rho = h;
  return p;
}

double probe_resolution(const PiecewiseFn& f, const Vec& x, const ProbeParams& params) {
  const ResolvedProbeParams rp = resolve_probe_params(params);
  const ExtReal fx = f.eval(x);
  const double slack = 1e-9 * (1.0 + (fx.finite() ? std::abs(fx.value()) : 0.0));
  return (1.0 + 0.5 * rp.c) * rp.grid_step + slack / rp.grid_step;
}

bool lattice_unresolvable(const PiecewiseFn& f, const Vec& x, double t,
                          const ProbeParams& params, double trust,
                          double target_norm) {
  if (f.dim == 1 || f.smooth_jet(x).has_value()) return false;
  const double floor = trust * probe_resolution(f, x, params);
  const double scale =
      2.0 * f.lipschitz_estimate(x, std::max(0.15 * t, 1e-9)) + target_norm;
  return floor >= scale;
}

NearestSubgradient nearest_subgradient(const PiecewiseFn& f, const Vec& x,
                                       const Vec& target, SubdiffKind kind,
                                       double scale_r, const ProbeParams& fallback) {
  NearestSubgradient out;
  const ExtReal fx = f.eval(x);
  if (!fx.finite()) return out;
  out.valid = true;
  const ProbeParams params =
      (f.dim == 1 || scale_r <= 0) ? fallback : radius_scaled_probe(f, x, scale_r);
  const SubdiffSet set = subdiff_dispatch(f, x, kind, params);
  out.dist = set_distance(set, target);
  out.closest = set_closest(set, target);
  out.analytic = set.completeness == Completeness::AnalyticExact;
  if (!out.analytic) out.resolution = probe_resolution(f, x, params);
  return out;
}

namespace {

// Nearest-subgradient norm at x, with probe parameters matched to the scan
// radius in dimensions where the lattice probe is the only oracle.
NearestSubgradient point_min_norm(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                                  double scale_r, const ProbeParams& fallback = {}) {
  return nearest_subgradient(f, x, Vec(f.dim), kind, scale_r, fallback);
}

std::vector<double> clean_radii(std::vector<double> radii, const char* who) {
  if (radii.empty()) throw ArgumentError(std::string(who) + ": empty radius list");
  for (double t : radii)
    if (!(t > 0)) throw ArgumentError(std::string(who) + ": radii must be positive");
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  return radii;
}

std::vector<Vec> annulus_grid(const Vec& xbar, double t, std::size_t dirs,
                              std::size_t shells, std::size_t scan) {
  std::vector<Vec> pts;
  if (xbar.dim() == 1) {
    const auto ss = linspace(0.5 * t, t, std::max<std::size_t>(scan, 2));
    pts.reserve(2 * ss.size());
    for (double s : ss) pts.push_back(Vec{xbar[0] - s});
    for (double s : ss) pts.push_back(Vec{xbar[0] + s});
    return pts;
  }
  return annulus_points(xbar, t, std::max<std::size_t>(dirs, 8),
                        std::max<std::size_t>(shells, 2));
}

// Greedy doubling subchain: witnesses sorted by ratio, keeping an entry only
// when its ratio at least doubles the previously kept one.
std::vector<WitnessPoint> doubling_chain(std::vector<WitnessPoint> all) {
  std::stable_sort(all.begin(), all.end(), [](const WitnessPoint& a, const WitnessPoint& b) {
    return a.ratio < b.ratio;
  });
  std::vector<WitnessPoint> chain;
  for (const auto& w : all) {
    if (chain.empty() || w.ratio >= 2.0 * chain.back().ratio) chain.push_back(w);
  }
  return chain;
}

struct TrendDecision {
  TrendVerdict verdict = TrendVerdict::Degenerate;
  bool tail_stable = false;
  ExtReal extrapolated = ExtReal::pos_inf();
  std::string note;
};

// Verdict rules for a kappa-style (nondecreasing-is-suspicious) sequence:
// a stabilized tail wins, then a strictly increasing window that at least
// doubles, otherwise the sequence is treated as settled.
TrendDecision decide_kappa_trend(const std::vector<RadiusValue>& rows) {
  TrendDecision out;
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].samples > 0) valid.push_back(i);
  if (valid.empty()) {
    out.note = "no valid ratio samples";
    return out;
  }
  const std::size_t tail_n = std::min<std::size_t>(4, valid.size());
  double tail_max = 0, tail_min = kInf;
  for (std::size_t j = valid.size() - tail_n; j < valid.size(); ++j) {
    tail_max = std::max(tail_max, rows[valid[j]].value);
    tail_min = std::min(tail_min, rows[valid[j]].value);
  }
  if (tail_n == 4 && tail_min > 0 && tail_max <= 1.5 * tail_min) {
    out.verdict = TrendVerdict::Finite;
    out.tail_stable = true;
    out.extrapolated = ExtReal(tail_max);
    out.note = "tail stable over the last 4 radii";
    return out;
  }
  for (std::size_t k = 0; k + 3 < rows.size(); ++k) {
    bool ok = true;
    for (std::size_t j = 0; j < 4; ++j) ok = ok && rows[k + j].samples > 0;
    for (std::size_t j = 0; ok && j < 3; ++j)
      ok = rows[k + j + 1].value > rows[k + j].value;
    if (ok && rows[k].value > 0 && rows[k + 3].value >= 2.0 * rows[k].value) {
      out.verdict = TrendVerdict::Divergent;
      out.extrapolated = ExtReal::pos_inf();
      out.note = "ratio at least doubled over radii " + fmt_double(rows[k].radius) +
                 " .. " + fmt_double(rows[k + 3].radius);
      return out;
    }
  }
  out.verdict = TrendVerdict::Finite;
  out.extrapolated = ExtReal(tail_max);
  out.note = "no doubling trend; extrapolated from the last " +
             std::to_string(tail_n) + " valid radii";
  return out;
}

struct SignedNearest {
  bool valid = false;
  bool analytic = false;
  double dist = kInf;
  double signed_v = 0;
};

SignedNearest nearest_signed_1d(const PiecewiseFn& f, double x, SubdiffKind kind,
                                double target = 0.0) {
  SignedNearest out;
  const Vec xv{x};
  if (!f.eval(xv).finite()) return out;
  const SubdiffSet set = subdiff_dispatch(f, xv, kind);
  const ExtReal d = set_distance(set, Vec{target});
  if (!d.finite()) return out;
  const auto closest = set_closest(set, Vec{target});
  out.valid = true;
  out.analytic = set.completeness == Completeness::AnalyticExact;
  out.dist = d.value();
  out.signed_v = closest ? (*closest)[0] - target : 0.0;
  return out;
}

// One kappa accumulation pass over a radius.
struct RadiusAccum {
  RadiusValue rv;
  std::optional<WitnessPoint> zero_witness;

  void note_zero(const Vec& x, double numer, double denom) {
    WitnessPoint w;
    w.x = x;
    w.ratio = kInf;
    w.numer = numer;
    w.denom = denom;
    if (!zero_witness) zero_witness = w;
    if (!rv.witness) rv.witness = w;
  }

  void consider(const Vec& x, double numer, double denom) {
    const double ratio = numer / denom;
    rv.samples += 1;
    if (ratio > rv.value || !rv.witness) {
      rv.value = std::max(rv.value, ratio);
      rv.raw = rv.value;
      WitnessPoint w;
      w.x = x;
      w.ratio = ratio;
      w.numer = numer;
      w.denom = denom;
      if (!rv.witness || ratio > rv.witness->ratio) rv.witness = w;
    }
  }
};

// Shared kappa driver; numer(x) < 0 marks a skipped point, target_of(x) is the
// vector whose distance to the subdifferential forms the denominator. Only an
// analytic zero denominator certifies divergence directly. A radius where any
// sampled denominator sits at or below trust * (its probe resolution) is
// recorded with samples = 0 and excluded from the trend, since its ratios
// could be inflated arbitrarily by lattice quantization.
template <typename NumerFn, typename TargetFn>
ModulusEstimate kappa_estimate(const PiecewiseFn& f, const Vec& xbar,
                               const std::vector<double>& radii_in, SubdiffKind kind,
                               const KappaParams& kp, ModulusKind mk,
                               const NumerFn& numer_of, const TargetFn& target_of,
                               double uncertainty) {
  const auto radii = clean_radii(radii_in, "estimate_kappa");
  ModulusEstimate est;
  est.kind = mk;
  est.xbar = xbar;
  est.uncertainty = uncertainty;

  std::vector<WitnessPoint> chain_pool;
  std::size_t unresolved_rows = 0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double t = radii[k];
    RadiusAccum acc;
    acc.rv.radius = t;

    struct Rec {
      Vec x;
      double numer;
      double denom;
      double resolution;
      bool analytic;
    };
    std::vector<Rec> recs;
    std::vector<std::vector<std::pair<double, double>>> sides;  // 1-D: (x, signed v)
    auto pts = annulus_grid(xbar, t, kp.dirs, kp.shells, kp.scan);
    if (f.dim >= 2) {
      const std::size_t shells = std::max<std::size_t>(kp.shells, 2);
      for (const Vec& u : kp.extra_dirs) {
        if (u.dim() != f.dim) continue;
        const double nu = norm(u);
        if (!(nu > 0)) continue;
        for (std::size_t s = 0; s < shells; ++s) {
          const double rad =
              t * (0.5 + 0.5 * static_cast<double>(s) / static_cast<double>(shells - 1));
          pts.push_back(xbar + (rad / nu) * u);
          pts.push_back(xbar - (rad / nu) * u);
        }
      }
    }
    const bool one_d = f.dim == 1;
    if (one_d) sides.resize(2);
    double denom_scale = 0;
    bool blind = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec& x = pts[i];
      const double nu = numer_of(x);
      if (nu < 0) continue;
      const Vec tgt = target_of(x);
      NearestSubgradient mn;
      try {
        if (f.dim >= 2 && !f.smooth_jet(x).has_value() &&
            lattice_unresolvable(f, x, t, radius_scaled_probe(f, x, t),
                                 kp.trust, norm(tgt))) {
          blind = true;
          continue;
        }
        mn = nearest_subgradient(f, x, tgt, kind, t);
      } catch (const BudgetExceeded&) {
        blind = true;
        continue;
      }
      if (!mn.valid || !mn.dist.finite()) continue;
      recs.push_back({x, nu, mn.dist.value(), mn.resolution, mn.analytic});
      denom_scale = std::max(denom_scale, mn.dist.value());
      if (one_d) {
        const double sv = mn.closest ? (*mn.closest)[0] - tgt[0] : 0.0;
        sides[x[0] < xbar[0] ? 0 : 1].push_back({x[0], sv});
      }
    }
    const double zero_abs = kp.zero_tol * std::max(1.0, denom_scale);
    bool unresolved = blind;
    for (const auto& r : recs) {
      if (r.analytic && r.denom <= zero_abs) {
        acc.note_zero(r.x, r.numer, r.denom);
      } else if (!r.analytic && r.denom <= kp.trust * r.resolution) {
        unresolved = true;
      } else {
        acc.consider(r.x, r.numer, r.denom);
      }
    }

    if (one_d && kp.refine && !acc.zero_witness && !unresolved) {
      const double target =
          std::max(kp.base_ratio_target * std::pow(kp.target_growth, static_cast<double>(k)),
                   kp.target_growth * acc.rv.value);
      for (auto& side : sides) {
        std::sort(side.begin(), side.end());
        for (std::size_t i = 0; i + 1 < side.size(); ++i) {
          double a = side[i].first, b = side[i + 1].first;
          double sa = side[i].second;
          const double sb = side[i + 1].second;
          if (sa == 0 || sb == 0 || (sa > 0) == (sb > 0)) continue;
          for (int iter = 0; iter < 80 && !acc.zero_witness; ++iter) {
            const double m = 0.5 * (a + b);
            if (m == a || m == b) break;
            const SignedNearest sn = nearest_signed_1d(f, m, kind, target_of(Vec{m})[0]);
            if (!sn.valid || !std::isfinite(sn.dist) || !sn.analytic) break;
            const double nu = numer_of(Vec{m});
            if (nu >= 0) {
              if (sn.dist <= zero_abs) acc.note_zero(Vec{m}, nu, sn.dist);
              else acc.consider(Vec{m}, nu, sn.dist);
            }
            if (acc.zero_witness || acc.rv.value >= target) break;
            if ((sn.signed_v > 0) == (sa > 0)) {
              a = m;
              sa = sn.signed_v;
            } else {
              b = m;
            }
          }
          if (acc.zero_witness) break;
        }
        if (acc.zero_witness) break;
      }
    }

    if (unresolved && !acc.zero_witness) {
      acc.rv.samples = 0;
      acc.rv.value = 0;
      acc.rv.raw = 0;
      acc.rv.witness.reset();
      ++unresolved_rows;
    }
    if (acc.zero_witness) {
      est.zero_denominator = true;
      if (!acc.rv.witness) acc.rv.witness = acc.zero_witness;
      chain_pool.push_back(*acc.zero_witness);
    }
    if (acc.rv.witness && acc.rv.witness->ratio < kInf) chain_pool.push_back(*acc.rv.witness);
    est.per_radius.push_back(acc.rv);
  }

  est.witness_chain = doubling_chain(std::move(chain_pool));
  if (est.zero_denominator) {
    est.verdict = TrendVerdict::Divergent;
    est.extrapolated = ExtReal::pos_inf();
    const auto zw = std::find_if(est.witness_chain.begin(), est.witness_chain.end(),
                                 [](const WitnessPoint& w) { return !std::isfinite(w.ratio); });
    est.trend_note = "zero denominator away from the reference point";
    if (zw != est.witness_chain.end())
      est.trend_note += " at x=" + zw->x.str() + " (d=" + fmt_double(zw->denom) + ")";
  } else {
    const TrendDecision d = decide_kappa_trend(est.per_radius);
    est.verdict = d.verdict;
    est.tail_stable = d.tail_stable;
    est.extrapolated = d.extrapolated;
    est.trend_note = d.note;
  }
  if (unresolved_rows > 0)
    est.trend_note +=
        "; " + std::to_string(unresolved_rows) + " radii below probe resolution";
  return est;
}

}  // namespace

std::string modulus_kind_str(ModulusKind k) {
  switch (k) {
    case ModulusKind::Alpha: return "alpha";
    case ModulusKind::KappaStrong: return "kappa_strong";
    case ModulusKind::KappaSubreg: return "kappa_subreg";
    case ModulusKind::Ell: return "ell";
  }
  return "?";
}

std::string trend_verdict_str(TrendVerdict v) {
  switch (v) {
    case TrendVerdict::Finite: return "FINITE";
    case TrendVerdict::Divergent: return "DIVERGENT";
    case TrendVerdict::Degenerate: return "DEGENERATE";
  }
  return "?";
}

RadialProfile radial_profile(const PiecewiseFn& f, const Vec& xbar,
                             const std::vector<double>& radii, std::size_t sphere_grid) {
  if (xbar.dim() != f.dim) throw ArgumentError("radial_profile: dimension mismatch");
  if (!f.eval(xbar).finite())
    throw PreconditionError("radial_profile: f not finite at " + xbar.str());
  const auto ts = clean_radii(radii, "radial_profile");

  RadialProfile out;
  out.xbar = xbar;
  for (double t : ts) {
    RadialSample row;
    row.radius = t;
    const auto pts = sphere_points(xbar, t, sphere_grid);
    for (const auto& p : pts) {
      const ExtReal v = f.eval(p);
      if (v < row.phi) {
        row.phi = v;
        if (v.finite()) row.argmin = p;
      }
    }
    if (row.argmin) {
      const Vec d = *row.argmin - xbar;
      const SubdiffSet set =
          subdiff_dispatch(f, *row.argmin, SubdiffKind::Limiting,
                           f.dim == 1 ? ProbeParams{} : radius_scaled_probe(f, *row.argmin, t));
      std::vector<Vec> cands;
      for (const auto& s : set.samples) cands.push_back(s.v);
      if (cands.empty())
        for (const auto& iv : set.intervals) {
          if (std::isfinite(iv[0])) cands.push_back(Vec{iv[0]});
          if (std::isfinite(iv[1])) cands.push_back(Vec{iv[1]});
          if (iv[0] < 0 && iv[1] > 0) cands.push_back(Vec{0.0});
        }
      double best_gap = kInf;
      for (const auto& v : cands) {
        const double proj = std::max(0.0, dot(v, d) / (t * t));
        const double gap = dist(v, proj * d);
        if (gap < best_gap - 1e-15 ||
            (gap < best_gap + 1e-15 && row.v_near && norm(v) < norm(*row.v_near))) {
          best_gap = gap;
          row.v_near = v;
          row.lambda = proj;
          row.multiplier_gap = gap;
        }
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

ModulusEstimate estimate_alpha(const PiecewiseFn& f, const Vec& xbar, double eps,
                               std::size_t grid) {
  if (grid == 0) throw ArgumentError("estimate_alpha: empty probe grid");
  if (!(eps > 0)) throw ArgumentError("estimate_alpha: eps must be positive");
  if (xbar.dim() != f.dim) throw ArgumentError("estimate_alpha: dimension mismatch");
  const ExtReal fb = f.eval(xbar);
  if (!fb.finite())
    throw PreconditionError("estimate_alpha: f not finite at " + xbar.str());
  const double fbar = fb.value();

  ModulusEstimate est;
  est.kind = ModulusKind::Alpha;
  est.xbar = xbar;

  double raw_min = kInf;
  std::optional<WitnessPoint> worst;
  for (double t : geometric_radii(eps)) {
    RadiusValue rv;
    rv.radius = t;
    rv.raw = kInf;
    rv.value = kInf;
    const auto pts =
        annulus_grid(xbar, t, grid, std::max<std::size_t>(4, grid / 8), grid);
    for (const auto& x : pts) {
      const ExtReal fe = f.eval(x);
      if (!fe.finite()) continue;
      const double d2 = dot(x - xbar, x - xbar);
      if (d2 <= 0) continue;
      const double q = 2.0 * (fe.value() - fbar) / d2;
      rv.samples += 1;
      if (q < rv.raw) {
        rv.raw = q;
        rv.value = std::max(q, 0.0);
        WitnessPoint w;
        w.x = x;
        w.ratio = q;
        w.numer = fe.value() - fbar;
        w.denom = d2;
        rv.witness = w;
      }
    }
    if (rv.samples > 0 && rv.raw < raw_min) {
      raw_min = rv.raw;
      worst = rv.witness;
    }
    est.per_radius.push_back(rv);
  }

  if (!std::isfinite(raw_min) && raw_min > 0) {
    est.verdict = TrendVerdict::Degenerate;
    est.extrapolated = ExtReal::pos_inf();
    est.trend_note = "no finite probe points in the ball";
    return est;
  }
  if (worst) est.witness_chain.push_back(*worst);
  if (raw_min <= 0) {
    est.verdict = TrendVerdict::Degenerate;
    est.extrapolated = ExtReal(0.0);
    est.trend_note = "nonpositive growth quotient " + fmt_double(raw_min) + " at x=" +
                     (worst ? worst->x.str() : std::string("?"));
  } else {
    est.verdict = TrendVerdict::Finite;
    est.extrapolated = ExtReal(raw_min);
    est.trend_note = "infimum over the full ball";
  }
  return est;
}

ModulusEstimate estimate_kappa_strong(const PiecewiseFn& f, const Vec& xbar,
                                      const std::vector<double>& radii, SubdiffKind kind,
                                      const KappaParams& params) {
  if (xbar.dim() != f.dim)
    throw ArgumentError("estimate_kappa_strong: dimension mismatch");
  const ExtReal fb = f.eval(xbar);
  if (!fb.finite())
    throw PreconditionError("estimate_kappa_strong: f not finite at " + xbar.str());
  const auto ts = clean_radii(radii, "estimate_kappa_strong");
  const NearestSubgradient at_bar = point_min_norm(f, xbar, kind, ts.front());
  const double pre_tol = params.precheck_tol > 0
                             ? params.precheck_tol
                             : 1e-4 * (1.0 + std::fabs(fb.value()));
  if (!at_bar.dist.finite() || at_bar.dist.value() > pre_tol)
    throw PreconditionError(
        "estimate_kappa_strong: nearest subgradient at the reference point has norm " +
        at_bar.dist.str() + " > " + fmt_double(pre_tol));

  const Vec zero(f.dim);
  return kappa_estimate(
      f, xbar, ts, kind, params, ModulusKind::KappaStrong,
      [&](const Vec& x) { return dist(x, xbar); },
      [&](const Vec&) { return zero; }, 0.0);
}

ModulusEstimate estimate_kappa_perturbed(const PiecewiseFn& f, const Vec& xbar,
                                         double r, const std::vector<double>& radii,
                                         SubdiffKind kind, const KappaParams& params) {
  if (xbar.dim() != f.dim)
    throw ArgumentError("estimate_kappa_perturbed: dimension mismatch");
  if (!(r >= 0)) throw ArgumentError("estimate_kappa_perturbed: r must be >= 0");
  const ExtReal fb = f.eval(xbar);
  if (!fb.finite())
    throw PreconditionError("estimate_kappa_perturbed: f not finite at " + xbar.str());
  const auto ts = clean_radii(radii, "estimate_kappa_perturbed");
  const NearestSubgradient at_bar = point_min_norm(f, xbar, kind, ts.front());
  const double pre_tol = params.precheck_tol > 0
                             ? params.precheck_tol
                             : 1e-4 * (1.0 + std::fabs(fb.value()));
  if (!at_bar.dist.finite() || at_bar.dist.value() > pre_tol)
    throw PreconditionError(
        "estimate_kappa_perturbed: nearest subgradient at the reference point has norm " +
        at_bar.dist.str() + " > " + fmt_double(pre_tol));

  return kappa_estimate(
      f, xbar, ts, kind, params, ModulusKind::KappaStrong,
      [&](const Vec& x) { return dist(x, xbar); },
      [&](const Vec& x) { return (-r) * (x - xbar); }, 0.0);
}

double SolutionSetApprox::dist(const Vec& x) const {
  double best = kInf;
  for (const auto& p : cloud) best = std::min(best, subreg::dist(x, p));
  return best;
}

double SolutionSetApprox::dist_eff(const Vec& x) const {
  const double d = dist(x);
  if (!std::isfinite(d)) return d;
  return std::max(0.0, d - 0.5 * spacing);
}

SolutionSetApprox solution_set(const PiecewiseFn& f, const Box& box, double tau_crit,
                               SubdiffKind kind, std::size_t per_axis,
                               const ProbeParams& probe) {
  if (per_axis < 2) throw ArgumentError("solution_set: need at least 2 points per axis");
  if (box.dim() != f.dim) throw ArgumentError("solution_set: box dimension mismatch");
  if (!(tau_crit >= 0)) throw ArgumentError("solution_set: tau_crit must be >= 0");

  SolutionSetApprox out;
  out.tau_crit = tau_crit;
  out.kind = kind;
  out.box = box;
  for (const auto& b : box.bounds)
    out.spacing = std::max(out.spacing, (b[1] - b[0]) / static_cast<double>(per_axis - 1));

  for (const auto& x : box_grid(box, per_axis)) {
    const NearestSubgradient mn = point_min_norm(f, x, kind, 0.0, probe);
    if (!mn.valid || !mn.dist.finite()) continue;
    if (mn.dist.value() <= tau_crit) out.cloud.push_back(x);
  }
  return out;
}

ModulusEstimate estimate_kappa_subreg(const PiecewiseFn& f, const Vec& xbar,
                                      const SolutionSetApprox& S,
                                      const std::vector<double>& radii, SubdiffKind kind,
                                      const KappaParams& params) {
  if (xbar.dim() != f.dim)
    throw ArgumentError("estimate_kappa_subreg: dimension mismatch");
  if (S.cloud.empty())
    throw PreconditionError("estimate_kappa_subreg: empty solution-set cloud");
  const double skip_below = 2.0 * S.spacing;
  const Vec zero(f.dim);
  return kappa_estimate(
      f, xbar, radii, kind, params, ModulusKind::KappaSubreg,
      [&](const Vec& x) {
        const double d = S.dist_eff(x);
        return d < skip_below ? -1.0 : d;
      },
      [&](const Vec&) { return zero; }, 0.5 * S.spacing);
}

Certificate check_growth_to_solution_set(const PiecewiseFn& f, const Vec& xbar,
                                         const SolutionSetApprox& S, double alpha_target,
                                         double eps, std::size_t grid) {
  if (!(eps > 0) || grid < 2)
    throw ArgumentError("check_growth_to_solution_set: bad eps or grid");
  if (xbar.dim() != f.dim)
    throw ArgumentError("check_growth_to_solution_set: dimension mismatch");
  const double fbar = f.eval_finite(xbar);

  Certificate cert;
  cert.clause = "GROWTH_SET";
  cert.params = {{"alpha_target", alpha_target}, {"eps", eps},
                 {"tau_crit", S.tau_crit},       {"spacing", S.spacing},
                 {"uncertainty", 0.5 * S.spacing}, {"grid", static_cast<double>(grid)}};

  std::vector<Vec> pts;
  if (f.dim == 1) {
    const double lo = std::max(S.box.bounds[0][0], xbar[0] - eps);
    const double hi = std::min(S.box.bounds[0][1], xbar[0] + eps);
    for (double x : linspace(lo, hi, grid)) pts.push_back(Vec{x});
  } else {
    for (const auto& x : box_grid(S.box, grid))
      if (dist(x, xbar) <= eps) pts.push_back(x);
  }

  ConditionRecord rec;
  rec.id = "f(x) - f(xbar) >= (alpha/2) * dist_eff(x, cloud)^2";
  rec.margin = kInf;
  std::size_t checked = 0, violations = 0;
  const double slack = 1e-12 * (1.0 + std::fabs(fbar));
  for (const auto& x : pts) {
    const ExtReal fe = f.eval(x);
    if (!fe.finite()) continue;
    const double de = S.dist_eff(x);
    const double margin = (fe.value() - fbar) - 0.5 * alpha_target * de * de;
    checked += 1;
    if (margin < rec.margin) {
      rec.margin = margin;
      rec.witness = x;
    }
    if (margin < -slack) violations += 1;
  }
  rec.pass = violations == 0 && checked > 0;
  rec.note = std::to_string(checked) + " points checked, " + std::to_string(violations) +
             " violations";
  cert.conditions.push_back(rec);
  cert.verdict = rec.pass ? Verdict::Pass : Verdict::Fail;
  cert.summary = std::string("quadratic growth toward the critical cloud ") +
                 (rec.pass ? "holds" : "fails") + " at alpha=" + fmt_double(alpha_target) +
                 " (worst margin " + fmt_double(rec.margin) + ")";
  return cert;
}

SetMapSpec SetMapSpec::from_json(const nlohmann::json& j) {
  SetMapSpec spec;
  if (!j.is_object() || !j.contains("kind"))
    throw ArgumentError("set mapping: expected an object with a \"kind\" field");
  spec.kind = j.at("kind").get<std::string>();
  if (spec.kind == "exprs") {
    if (!j.contains("exprs") || !j.at("exprs").is_array() || j.at("exprs").empty())
      throw ArgumentError("set mapping: \"exprs\" must be a nonempty array");
    for (const auto& e : j.at("exprs"))
      spec.exprs.push_back(Expr::parse(e.get<std::string>(), 1));
  } else if (spec.kind == "interval") {
    if (!j.contains("lo") || !j.contains("hi"))
      throw ArgumentError("set mapping: interval kind needs \"lo\" and \"hi\"");
    spec.lo = Expr::parse(j.at("lo").get<std::string>(), 1);
    spec.hi = Expr::parse(j.at("hi").get<std::string>(), 1);
    spec.samples = j.value("samples", std::size_t{9});
    if (spec.samples < 2) throw ArgumentError("set mapping: samples must be >= 2");
  } else {
    throw ArgumentError("set mapping: kind must be \"exprs\" or \"interval\", got \"" +
                        spec.kind + "\"");
  }
  return spec;
}

SetMapSpec SetMapSpec::parse_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("set mapping: invalid JSON: ") + e.what());
  }
  return from_json(j);
}

std::vector<double> SetMapSpec::values(double x) const {
  std::vector<double> out;
  if (kind == "exprs") {
    out.reserve(exprs.size());
    for (const auto& e : exprs) out.push_back(e.eval1(x));
    return out;
  }
  double a = lo.eval1(x), b = hi.eval1(x);
  if (a > b) std::swap(a, b);
  return linspace(a, b, samples);
}

std::string SetMapSpec::str() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  if (kind == "exprs") {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : exprs) arr.push_back(e.str());
    j["exprs"] = arr;
  } else {
    j["lo"] = lo.str();
    j["hi"] = hi.str();
    j["samples"] = samples;
  }
  return j.dump();
}

Certificate perturbation_check(const SetMapSpec& F, const SetMapSpec& G, double kappa,
                               double ell, double eps, double ybar,
                               const PerturbationParams& params) {
  if (!(kappa > 0)) throw ArgumentError("perturbation_check: kappa must be positive");
  if (!(ell >= 0)) throw ArgumentError("perturbation_check: ell must be >= 0");
  if (!(ell < 1.0 / kappa))
    throw ArgumentError("perturbation_check: requires ell < 1/kappa, got ell=" +
                        fmt_double(ell) + ", 1/kappa=" + fmt_double(1.0 / kappa));
  if (!(eps > 0) || params.grid < 3)
    throw ArgumentError("perturbation_check: bad eps or grid");

  const auto xs = linspace(-eps, eps, params.grid);
  const double h = 2 * eps / static_cast<double>(params.grid - 1);
  const std::size_t n = xs.size();

  std::vector<std::vector<double>> fv(n), gv(n);
  std::vector<double> dF(n), dFG(n);
  for (std::size_t i = 0; i < n; ++i) {
    fv[i] = F.values(xs[i]);
    gv[i] = G.values(xs[i]);
    if (fv[i].empty() || gv[i].empty())
      throw ArgumentError("perturbation_check: a mapping produced no values at x=" +
                          fmt_double(xs[i]));
    double df = kInf, dfg = kInf;
    for (double a : fv[i]) df = std::min(df, std::fabs(a - ybar));
    for (double a : fv[i])
      for (double b : gv[i]) dfg = std::min(dfg, std::fabs(a + b - ybar));
    dF[i] = df;
    dFG[i] = dfg;
  }

  auto slope_of = [&](const std::vector<double>& d) {
    double L = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) L = std::max(L, std::fabs(d[i + 1] - d[i]) / h);
    return std::max(L, 1e-9);
  };
  const double LF = slope_of(dF), LFG = slope_of(dFG);
  const double tauF = params.inv_tol > 0 ? params.inv_tol : LF * h;
  const double tauFG = params.inv_tol > 0 ? params.inv_tol : LFG * h;

  std::vector<double> cloudF, cloudFG;
  for (std::size_t i = 0; i < n; ++i) {
    if (dF[i] <= tauF) cloudF.push_back(xs[i]);
    if (dFG[i] <= tauFG) cloudFG.push_back(xs[i]);
  }

  Certificate cert;
  cert.clause = "PERTURBATION";
  const double bound = 1.0 / (1.0 / kappa - ell);
  cert.params = {{"kappa", kappa}, {"ell", ell},   {"eps", eps},
                 {"ybar", ybar},   {"grid", static_cast<double>(params.grid)},
                 {"tol", params.tol}, {"modulus_bound", bound},
                 {"preimage_tol_F", tauF}, {"preimage_tol_FG", tauFG}};
  cert.summary = "F=" + F.str() + ", G=" + G.str();

  if (cloudF.empty() || cloudFG.empty()) {
    cert.verdict = Verdict::Inconclusive;
    ConditionRecord rec;
    rec.id = "preimage located on the grid";
    rec.pass = false;
    rec.note = cloudF.empty() ? "no grid preimage of ybar under F"
                              : "no grid preimage of ybar under F+G";
    cert.conditions.push_back(rec);
    return cert;
  }

  auto cloud_dist = [](const std::vector<double>& cloud, double x) {
    double best = kInf;
    for (double c : cloud) best = std::min(best, std::fabs(x - c));
    return best;
  };

  ConditionRecord dom;
  dom.id = "G dominated by ell * dist(x, F^-1(ybar))";
  dom.margin = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    double gmax = 0;
    for (double b : gv[i]) gmax = std::max(gmax, std::fabs(b));
    const double allowance = ell * (cloud_dist(cloudF, xs[i]) + h) + params.tol;
    const double margin = allowance - gmax;
    if (margin < dom.margin) {
      dom.margin = margin;
      dom.witness = Vec{xs[i]};
      dom.note = "|g|=" + fmt_double(gmax) + " vs allowance " + fmt_double(allowance);
    }
  }
  dom.pass = dom.margin >= 0;
  cert.conditions.push_back(dom);
  if (!dom.pass)
    throw PreconditionError("perturbation_check: G exceeds its domination bound at x=" +
                            fmt_double((*dom.witness)[0]) + ": " + dom.note);

  ConditionRecord sub;
  sub.id = "dist(x, (F+G)^-1(ybar)) <= bound * dist(ybar, (F+G)(x)) + tol";
  sub.margin = kInf;
  ConditionRecord mod;
  mod.id = "measured modulus of F+G within the bound";
  double measured = 0;
  std::optional<Vec> mod_witness;
  for (std::size_t i = 0; i < n; ++i) {
    const double lhs = cloud_dist(cloudFG, xs[i]);
    const double margin = bound * dFG[i] + params.tol + h - lhs;
    if (margin < sub.margin) {
      sub.margin = margin;
      sub.witness = Vec{xs[i]};
    }
    if (dFG[i] > tauFG && lhs > 0) {
      const double ratio = lhs / dFG[i];
      if (ratio > measured) {
        measured = ratio;
        mod_witness = Vec{xs[i]};
      }
    }
  }
  sub.pass = sub.margin >= 0;
  sub.note = "grid slack " + fmt_double(h) + " included";
  cert.conditions.push_back(sub);

  mod.margin = bound + params.tol - measured;
  mod.pass = mod.margin >= 0;
  mod.witness = mod_witness;
  mod.note = "measured " + fmt_double(measured) + " vs bound " + fmt_double(bound);
  cert.conditions.push_back(mod);
  cert.params.push_back({"measured_modulus", measured});

  cert.verdict = (sub.pass && mod.pass) ? Verdict::Pass : Verdict::Fail;
  return cert;
}

EquivalenceReport check_equivalence(const PiecewiseFn& f, const Vec& xbar,
                                    const EquivalenceParams& params) {
  if (xbar.dim() != f.dim) throw ArgumentError("check_equivalence: dimension mismatch");
  const double fbar = f.eval_finite(xbar);
  const double mt =
      params.minimizer_tol > 0 ? params.minimizer_tol : 1e-9 * (1.0 + std::fabs(fbar));

  EquivalenceReport rep;
  rep.semialgebraic = params.semialgebraic ? params.semialgebraic
                                           : f.flags.claims_semialgebraic;

  double descent = 0;
  for (double t : geometric_radii(params.eps)) {
    for (const auto& x : annulus_grid(xbar, t, params.grid,
                                      std::max<std::size_t>(4, params.grid / 8),
                                      params.grid)) {
      const ExtReal fe = f.eval(x);
      if (!fe.finite()) continue;
      const double gap = fe.value() - fbar;
      if (gap < descent) {
        descent = gap;
        WitnessPoint w;
        w.x = x;
        w.ratio = gap;
        w.numer = gap;
        w.denom = dist(x, xbar);
        rep.minimizer_witness = w;
      }
    }
  }
  rep.minimizer_ok = descent >= -mt;

  rep.alpha = estimate_alpha(f, xbar, params.eps, params.grid);
  try {
    rep.kappa = estimate_kappa_strong(f, xbar, geometric_radii(params.eps), params.kind,
                                      params.kappa);
  } catch (const PreconditionError& e) {
    rep.kappa.kind = ModulusKind::KappaStrong;
    rep.kappa.xbar = xbar;
    rep.kappa.verdict = TrendVerdict::Degenerate;
    rep.kappa.trend_note = e.what();
  }

  const bool alpha_pos = rep.alpha.verdict == TrendVerdict::Finite &&
                         rep.alpha.extrapolated.finite() &&
                         rep.alpha.extrapolated.value() > 0;
  const bool kappa_fin =
      rep.kappa.verdict == TrendVerdict::Finite && rep.kappa.extrapolated.finite();
  const bool kappa_div = rep.kappa.verdict == TrendVerdict::Divergent;

  if (alpha_pos || kappa_div) {
    const NearestSubgradient mnb = point_min_norm(f, xbar, params.kind, 0.0);
    const Vec vbar = mnb.closest ? *mnb.closest : Vec(f.dim, 0.0);
    try {
      rep.continuity =
          subdiff_continuity_probe(f, xbar, vbar, geometric_radii(params.eps, 6));
    } catch (const PreconditionError&) {
    }
  }

  if (!rep.minimizer_ok) {
    std::string d = "descent point below f(xbar)";
    if (rep.minimizer_witness)
      d += " at x=" + rep.minimizer_witness->x.str() + " (gap " +
           fmt_double(rep.minimizer_witness->numer) + ")";
    rep.rows.push_back({"minimizer-precheck", "HYPOTHESIS_FAILED", d});
  }

  // Stabilized subregularity forces growth at nearly the reciprocal rate.
  {
    EquivalenceRow row{"subreg-implies-growth", "NOT_APPLICABLE", ""};
    if (!rep.minimizer_ok) {
      row.detail = "local-minimizer precheck failed";
    } else if (!kappa_fin) {
      row.detail = "kappa not finite at resolution (" +
                   trend_verdict_str(rep.kappa.verdict) + ")";
    } else if (!rep.kappa.tail_stable) {
      row.detail = "kappa tail not stabilized; reciprocal bound not binding";
    } else if (rep.kappa.extrapolated.value() <= 0) {
      row.detail = "kappa estimate is zero";
    } else {
      const double need = (1.0 - params.tol) / rep.kappa.extrapolated.value();
      const double got =
          rep.alpha.verdict == TrendVerdict::Finite && rep.alpha.extrapolated.finite()
              ? rep.alpha.extrapolated.value()
              : 0.0;
      row.verdict = got >= need ? "CONSISTENT" : "INCONSISTENT";
      row.detail = "alpha=" + fmt_double(got) + " vs (1-tol)/kappa=" + fmt_double(need);
    }
    rep.rows.push_back(row);
  }

  // Positive growth plus the structural hypotheses forces finite kappa.
  {
    EquivalenceRow row{"growth-implies-subreg", "NOT_APPLICABLE", ""};
    if (!rep.minimizer_ok) {
      row.detail = "local-minimizer precheck failed";
    } else if (!alpha_pos) {
      row.detail = "no positive growth measured (alpha " +
                   trend_verdict_str(rep.alpha.verdict) + ")";
    } else if (!rep.semialgebraic.has_value()) {
      row.detail = "semialgebraicity not declared";
    } else if (!*rep.semialgebraic) {
      row.detail = "declared non-semialgebraic";
    } else if (rep.continuity && !rep.continuity->continuous) {
      row.detail = "subdifferential continuity probe VIOLATED";
    } else {
      row.verdict = kappa_fin ? "CONSISTENT" : "INCONSISTENT";
      row.detail = "kappa " + trend_verdict_str(rep.kappa.verdict);
    }
    rep.rows.push_back(row);
  }

  // When growth holds but subregularity diverges, name the failing hypothesis.
  {
    EquivalenceRow row{"hypothesis-audit", "NOT_APPLICABLE", ""};
    if (alpha_pos && kappa_div) {
      if (!rep.minimizer_ok) {
        row.verdict = "EXPLAINED";
        row.detail = "reference point is not a probed local minimizer";
      } else if (rep.semialgebraic.has_value() && !*rep.semialgebraic) {
        row.verdict = "EXPLAINED";
        row.detail = "function declared non-semialgebraic";
      } else if (!rep.semialgebraic.has_value()) {
        row.verdict = "EXPLAINED";
        row.detail = "semialgebraicity undeclared";
      } else if (rep.continuity && !rep.continuity->continuous) {
        double gap = 0;
        for (const auto& r : rep.continuity->rows)
          if (r.found) gap = r.gap;
        row.verdict = "EXPLAINED";
        row.detail = "subdifferential continuity violated (terminal gap " +
                     fmt_double(gap) + ")";
      } else {
        row.verdict = "INCONSISTENT";
        row.detail = "divergent kappa with all probed hypotheses holding";
      }
    } else {
      row.detail = "no divergence to audit";
    }
    rep.rows.push_back(row);
  }

  if (alpha_pos && kappa_fin)
    rep.product = rep.alpha.extrapolated.value() * rep.kappa.extrapolated.value();
  return rep;
}

std::string modulus_to_csv(const ModulusEstimate& est) {
  const std::size_t n = est.xbar.dim();
  std::string out = "radius,value,raw,samples";
  for (std::size_t i = 0; i < n; ++i) out += ",witness_x" + std::to_string(i + 1);
  out += ",witness_numer,witness_denom\n";
  for (const auto& rv : est.per_radius) {
    out += fmt_double(rv.radius) + "," + fmt_double(rv.value) + "," + fmt_double(rv.raw) +
           "," + std::to_string(rv.samples);
    for (std::size_t i = 0; i < n; ++i)
      out += "," + (rv.witness ? fmt_double(rv.witness->x[i]) : std::string());
    out += "," + (rv.witness ? fmt_double(rv.witness->numer) : std::string());
    out += "," + (rv.witness ? fmt_double(rv.witness->denom) : std::string());
    out += "\n";
  }
  return out;
}

std::string radial_profile_to_csv(const RadialProfile& profile) {
  const std::size_t n = profile.xbar.dim();
  std::string out = "radius,phi";
  for (std::size_t i = 0; i < n; ++i) out += ",argmin_x" + std::to_string(i + 1);
  out += ",lambda,multiplier_gap\n";
  for (const auto& r : profile.rows) {
    out += fmt_double(r.radius) + "," + fmt_double(r.phi.raw());
    for (std::size_t i = 0; i < n; ++i)
      out += "," + (r.argmin ? fmt_double((*r.argmin)[i]) : std::string());
    out += "," + (r.lambda ? fmt_double(*r.lambda) : std::string());
    out += "," + (r.argmin ? fmt_double(r.multiplier_gap) : std::string());
    out += "\n";
  }
  return out;
}

}  // namespace subreg
