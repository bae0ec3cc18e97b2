#include "subreg/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subreg/grids.hpp"
#include "subreg/moduli.hpp"
#include "subreg/numfmt.hpp"

namespace subreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> clean_radii(std::vector<double> radii, const char* who) {
  if (radii.empty()) throw ArgumentError(std::string(who) + ": empty radius list");
  for (double t : radii)
    if (!(t > 0)) throw ArgumentError(std::string(who) + ": radii must be positive");
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  return radii;
}

double psi_slope(const Expr& psi, double t) {
  const Jet2 j = psi.jet(Vec{t});
  if (!j.grad_ok)
    throw ArgumentError("minorant slope is undefined at t=" + fmt_double(t));
  return j.g[0];
}

}  // namespace

std::string gauge_bound_str(GaugeBound b) {
  switch (b) {
    case GaugeBound::Exact: return "exact";
    case GaugeBound::Upper: return "upper";
  }
  return "?";
}

GaugeResult gauge_of_set(const SubdiffSet& K, const Vec& y, double theta_tol_deg,
                         double sample_floor) {
  const double ny = norm(y);
  if (!(ny > 0)) throw ArgumentError("gauge_of_set: direction must be nonzero");
  GaugeResult out;
  out.y = y;
  out.theta_tol_deg = theta_tol_deg;
  out.truncated = K.truncated;
  out.empty_set = K.empty();
  out.bound = K.completeness == Completeness::AnalyticExact ? GaugeBound::Exact
                                                            : GaugeBound::Upper;
  if (out.empty_set) return out;

  double best = 0;
  std::optional<Vec> arg;
  bool unbounded = false;
  if (!K.intervals.empty() && y.dim() == 1) {
    const double sy = y[0] > 0 ? 1.0 : -1.0;
    for (const auto& iv : K.intervals) {
      const double reach = sy > 0 ? iv[1] : -iv[0];
      if (!(reach > 0)) continue;
      if (std::isinf(reach)) {
        unbounded = true;
        continue;
      }
      if (reach > best) {
        best = reach;
        arg = Vec{sy * reach};
      }
    }
  } else {
    const double cos_tol = std::cos(theta_tol_deg * M_PI / 180.0);
    for (const auto& s : K.samples) {
      const double ns = norm(s.v);
      if (!(ns > 0) || ns <= sample_floor) continue;
      if (y.dim() == 1) {
        if ((s.v[0] > 0) != (y[0] > 0)) continue;
      } else if (dot(s.v, y) < cos_tol * ns * ny) {
        continue;
      }
      if (ns > best) {
        best = ns;
        arg = s.v;
      }
    }
  }
  if (unbounded) {
    out.value = ExtReal(0.0);
    out.witness.reset();
    return out;
  }
  if (best > 0) {
    out.value = ExtReal(ny / best);
    out.witness = arg;
  }
  return out;
}

GaugeResult parametric_gauge(const PiecewiseFn& f, const Vec& x, const Vec& xbar,
                             const GaugeParams& params) {
  if (x.dim() != f.dim || xbar.dim() != f.dim)
    throw ArgumentError("parametric_gauge: dimension mismatch");
  const double r = dist(x, xbar);
  if (!(r > 0)) throw ArgumentError("parametric_gauge: x must differ from xbar");
  if (!f.eval(x).finite())
    throw PreconditionError("parametric_gauge: f not finite at " + x.str());
  const ProbeParams probe = f.dim == 1 ? params.probe : radius_scaled_probe(f, x, r);
  const SubdiffSet set = subdiff_dispatch(f, x, params.kind, probe);
  double floor = 0;
  if (set.completeness != Completeness::AnalyticExact)
    floor = params.trust * probe_resolution(f, x, probe);
  return gauge_of_set(set, xbar - x, params.theta_tol_deg, floor);
}

Certificate minorant_bound_check(const PiecewiseFn& f, const Vec& xbar, const Expr& psi,
                                 const std::vector<double>& radii,
                                 const MinorantCheckParams& params) {
  if (xbar.dim() != f.dim)
    throw ArgumentError("minorant_bound_check: dimension mismatch");
  const double fbar = f.eval_finite(xbar);
  const auto ts = clean_radii(radii, "minorant_bound_check");
  const double value_slack = params.tol * (1.0 + std::abs(fbar));

  const double psi0 = psi.eval1(0.0);
  if (std::abs(psi0 - fbar) > value_slack)
    throw PreconditionError("minorant_bound_check: psi(0)=" + fmt_double(psi0) +
                            " differs from f(xbar)=" + fmt_double(fbar));

  Certificate cert;
  cert.clause = "MINORANT_SLOPE";
  cert.params = {{"tol", params.tol},
                 {"theta_tol_deg", params.gauge.theta_tol_deg},
                 {"radii", static_cast<double>(ts.size())},
                 {"dirs", static_cast<double>(params.dirs)}};

  ConditionRecord pre;
  pre.id = "f(x) >= psi(||x - xbar||) on the probe grid";
  pre.pass = true;
  pre.margin = kInf;

  std::vector<std::pair<Vec, double>> pts;
  for (double t : ts) {
    for (const auto& x : sphere_points(xbar, t, params.dirs)) {
      const ExtReal fx = f.eval(x);
      if (!fx.finite()) continue;
      const double m = fx.value() - psi.eval1(t);
      if (m < pre.margin) {
        pre.margin = m;
        pre.witness = x;
      }
      if (m < -value_slack)
        throw PreconditionError("minorant_bound_check: f(x)=" + fmt_double(fx.value()) +
                                " < psi(t)=" + fmt_double(psi.eval1(t)) + " at x=" +
                                x.str());
      pts.push_back({x, t});
    }
  }
  cert.conditions.push_back(pre);

  double first_fail_radius = 0;
  std::size_t unattained = 0;
  for (double t : ts) {
    ConditionRecord rec;
    rec.id = "psi'(t)/t <= -1/gauge at t=" + fmt_double(t);
    rec.pass = true;
    rec.margin = kInf;
    const double slope = psi_slope(psi, t) / t;
    std::size_t probed = 0;
    std::size_t finite_gauge = 0;
    for (const auto& [x, tx] : pts) {
      if (tx != t) continue;
      const GaugeResult g = parametric_gauge(f, x, xbar, params.gauge);
      probed += 1;
      if (g.value.is_pos_inf()) continue;  // the bound only binds at finite gauges
      finite_gauge += 1;
      double margin;
      if (g.value.raw() == 0) {
        margin = -kInf;
        unattained += 1;
      } else {
        margin = -reciprocal(g.value).raw() - slope;
      }
      if (margin < rec.margin) {
        rec.margin = margin;
        rec.witness = x;
      }
    }
    rec.pass = probed > 0 && rec.margin >= -params.tol;
    if (probed == 0)
      rec.note = "no finite-valued probe points at this radius";
    else if (finite_gauge == 0)
      rec.note = "no finite-gauge points; the bound is vacuous at this radius";
    if (!rec.pass && first_fail_radius == 0) first_fail_radius = t;
    cert.conditions.push_back(rec);
  }

  const bool all_pass = std::all_of(cert.conditions.begin(), cert.conditions.end(),
                                    [](const ConditionRecord& c) { return c.pass; });
  double worst = kInf;
  for (const auto& c : cert.conditions) worst = std::min(worst, c.margin);
  cert.verdict = all_pass ? Verdict::Pass : Verdict::Fail;
  cert.summary = std::string("minorant slope bound ") + (all_pass ? "holds" : "fails") +
                 " (worst margin " + fmt_double(worst) + ")";
  if (first_fail_radius > 0)
    cert.summary += "; first failure at radius " + fmt_double(first_fail_radius);
  if (unattained > 0)
    cert.summary += "; " + std::to_string(unattained) +
                    " points with an unattained gauge infimum of 0";
  return cert;
}

Certificate parabolic_minorant_check(const PiecewiseFn& f, const Vec& xbar, double r,
                                     double eps, const MinorantCheckParams& params) {
  if (xbar.dim() != f.dim)
    throw ArgumentError("parabolic_minorant_check: dimension mismatch");
  if (!(r > 0)) throw ArgumentError("parabolic_minorant_check: r must be positive");
  if (!(eps > 0)) throw ArgumentError("parabolic_minorant_check: eps must be positive");
  const double fbar = f.eval_finite(xbar);
  const auto ts = geometric_radii(eps);
  const double value_slack = params.tol * (1.0 + std::abs(fbar));
  const ExtReal inv_r = reciprocal(ExtReal(r));

  Certificate cert;
  cert.clause = "MINORANT_PARABOLIC";
  cert.params = {{"r", r},
                 {"eps", eps},
                 {"tol", params.tol},
                 {"theta_tol_deg", params.gauge.theta_tol_deg},
                 {"dirs", static_cast<double>(params.dirs)}};

  ConditionRecord pre;
  pre.id = "f(x) >= f(xbar) - (r/2)||x - xbar||^2 on the probe grid";
  pre.pass = true;
  pre.margin = kInf;

  std::vector<std::pair<Vec, double>> pts;
  for (double t : ts) {
    for (const auto& x : sphere_points(xbar, t, params.dirs)) {
      const ExtReal fx = f.eval(x);
      if (!fx.finite()) continue;
      const double m = fx.value() - (fbar - 0.5 * r * t * t);
      if (m < pre.margin) {
        pre.margin = m;
        pre.witness = x;
      }
      if (m < -value_slack)
        throw PreconditionError("parabolic_minorant_check: f(x)=" +
                                fmt_double(fx.value()) + " dips below the parabola at x=" +
                                x.str());
      pts.push_back({x, t});
    }
  }
  cert.conditions.push_back(pre);

  double first_fail_radius = 0;
  for (double t : ts) {
    ConditionRecord rec;
    rec.id = "gauge >= 1/r at t=" + fmt_double(t);
    rec.pass = true;
    rec.margin = kInf;
    std::size_t probed = 0;
    for (const auto& [x, tx] : pts) {
      if (tx != t) continue;
      const GaugeResult g = parametric_gauge(f, x, xbar, params.gauge);
      probed += 1;
      const double margin = g.value.raw() - inv_r.raw();
      if (margin < rec.margin) {
        rec.margin = margin;
        rec.witness = x;
      }
    }
    rec.pass = probed > 0 && rec.margin >= -params.tol;
    if (probed == 0) rec.note = "no finite-valued probe points at this radius";
    if (!rec.pass && first_fail_radius == 0) first_fail_radius = t;
    cert.conditions.push_back(rec);
  }

  const bool all_pass = std::all_of(cert.conditions.begin(), cert.conditions.end(),
                                    [](const ConditionRecord& c) { return c.pass; });
  double worst = kInf;
  for (const auto& c : cert.conditions) worst = std::min(worst, c.margin);
  cert.verdict = all_pass ? Verdict::Pass : Verdict::Fail;
  cert.summary = std::string("parabolic minorant gauge bound ") +
                 (all_pass ? "holds" : "fails") + " at r=" + fmt_double(r) +
                 " (worst margin " + fmt_double(worst) + ")";
  if (first_fail_radius > 0)
    cert.summary += "; first failure at radius " + fmt_double(first_fail_radius);
  return cert;
}

}  // namespace subreg
