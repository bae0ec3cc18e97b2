#include "subreg/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subreg/certificate.hpp"
#include "subreg/errors.hpp"
#include "subreg/extreal.hpp"
#include "subreg/gauge.hpp"
#include "subreg/grids.hpp"
#include "subreg/moduli.hpp"
#include "subreg/numfmt.hpp"
#include "subreg/subdiff.hpp"

namespace subreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double critical_point_check(const PiecewiseFn& f, const Vec& xbar,
                            const CertifyParams& p, const char* who) {
  if (xbar.dim() != f.dim)
    throw ArgumentError(std::string(who) + ": xbar has dimension " +
                        std::to_string(xbar.dim()) + ", expected " +
                        std::to_string(f.dim));
  const ExtReal fb = f.eval(xbar);
  if (!fb.finite())
    throw PreconditionError(std::string(who) + ": f is not finite at " + xbar.str());
  const double pre_tol =
      p.precheck_tol > 0 ? p.precheck_tol : 1e-4 * (1.0 + std::abs(fb.value()));
  const NearestSubgradient at_bar =
      nearest_subgradient(f, xbar, Vec(f.dim), SubdiffKind::Regular, 0.0);
  if (!at_bar.valid || !at_bar.dist.finite() || at_bar.dist.value() > pre_tol)
    throw PreconditionError(std::string(who) +
                            ": zero is not a regular subgradient at the reference "
                            "point (nearest has norm " +
                            at_bar.dist.str() + ")");
  return fb.value();
}

void validate_positive(const std::vector<double>& vals, const char* who,
                       const char* what) {
  if (vals.empty())
    throw ArgumentError(std::string(who) + ": empty " + what + " list");
  for (double v : vals)
    if (!(v > 0) || !std::isfinite(v))
      throw ArgumentError(std::string(who) + ": " + what +
                          " values must be positive and finite");
}

// Structural hypotheses the refutation direction leans on. When one is
// missing or fails its probe, a FAIL verdict is downgraded to INCONCLUSIVE
// and flagged advisory.
struct Hypotheses {
  bool ok = false;
  std::vector<std::string> notes;
};

Hypotheses gather_hypotheses(const PiecewiseFn& f, const Vec& xbar,
                             const CertifyParams& p) {
  Hypotheses h;
  bool semi = false;
  if (f.flags.claims_semialgebraic.has_value()) {
    semi = *f.flags.claims_semialgebraic;
    h.notes.push_back(std::string("semialgebraic: declared ") +
                      (semi ? "true" : "false"));
  } else {
    h.notes.push_back("semialgebraic: not declared");
  }
  bool cont = false;
  try {
    const ContinuityReport rep =
        subdiff_continuity_probe(f, xbar, Vec(f.dim), geometric_radii(p.eps, 6));
    cont = rep.continuous;
    h.notes.push_back(std::string("graph continuity probe at (xbar, 0): ") +
                      (cont ? "consistent" : "gap detected"));
  } catch (const Error& e) {
    h.notes.push_back(std::string("graph continuity probe failed: ") + e.what());
  }
  h.ok = semi && cont;
  return h;
}

std::string missing_hypothesis(const Hypotheses& hyp) {
  std::string out;
  for (const auto& n : hyp.notes) {
    if (n.find("declared true") != std::string::npos) continue;
    if (n.find(": consistent") != std::string::npos) continue;
    if (!out.empty()) out += "; ";
    out += n;
  }
  return out.empty() ? std::string("hypotheses not established") : out;
}

KappaParams scan_params(const CertifyParams& p) {
  KappaParams kp = p.kappa;
  kp.trust = p.trust;
  if (p.precheck_tol > 0) kp.precheck_tol = p.precheck_tol;
  return kp;
}


// Directions where a radially perturbed gradient map degenerates tend to be
// eigendirections; probing axes and diagonals hits them bitwise-exactly for
// the common diagonal and antidiagonal Hessians.
std::vector<Vec> principal_dirs(std::size_t n) {
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    Vec e(n);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  if (n == 2) {
    dirs.push_back(Vec{1.0, 1.0});
    dirs.push_back(Vec{1.0, -1.0});
  }
  if (n == 3) {
    dirs.push_back(Vec{1.0, 1.0, 1.0});
    dirs.push_back(Vec{1.0, 1.0, -1.0});
    dirs.push_back(Vec{1.0, -1.0, 1.0});
    dirs.push_back(Vec{-1.0, 1.0, 1.0});
  }
  return dirs;
}

// Shared row builder for "the radially perturbed map is strongly subregular
// at r": sign is +1 when the ratio trend is bounded, -1 when it diverges,
// 0 when the scan produced no usable ratios.
struct ScanRow {
  ConditionRecord rec;
  int sign = 0;
};

ScanRow perturbed_scan_row(const PiecewiseFn& f, const Vec& xbar, double r,
                           const std::vector<double>& radii, const KappaParams& kp,
                           const std::string& id) {
  ScanRow row;
  row.rec.id = id;
  const ModulusEstimate est =
      estimate_kappa_perturbed(f, xbar, r, radii, SubdiffKind::Limiting, kp);
  row.rec.note = trend_verdict_str(est.verdict);
  if (!est.trend_note.empty()) row.rec.note += "; " + est.trend_note;
  if (!est.witness_chain.empty()) row.rec.witness = est.witness_chain.back().x;
  switch (est.verdict) {
    case TrendVerdict::Finite:
      row.sign = 1;
      row.rec.pass = true;
      row.rec.margin = reciprocal(est.extrapolated).raw();
      break;
    case TrendVerdict::Divergent: {
      row.sign = -1;
      row.rec.pass = false;
      double worst = 0;
      for (const auto& rv : est.per_radius) worst = std::max(worst, rv.value);
      row.rec.margin = est.zero_denominator ? -kInf : -worst;
      break;
    }
    case TrendVerdict::Degenerate:
      row.sign = 0;
      row.rec.pass = false;
      row.rec.margin = 0;
      break;
  }
  return row;
}

Certificate nec_a(const PiecewiseFn& f, const Vec& xbar, double r,
                  const std::vector<double>& radii, const Hypotheses& hyp,
                  const CertifyParams& p) {
  Certificate cert;
  cert.clause = "NEC_A";
  cert.params = {{"r", r}, {"eps", p.eps}};
  cert.hypotheses = hyp.notes;
  const ScanRow row = perturbed_scan_row(
      f, xbar, r, radii, scan_params(p),
      "||x - xbar|| / d(-r (x - xbar); subdiff f(x)) bounded as radii shrink");
  cert.conditions.push_back(row.rec);
  if (row.sign > 0) {
    cert.verdict = Verdict::Pass;
    cert.summary = "perturbed-map ratios at r=" + fmt_double(r) +
                   " stay bounded (inverse slope margin " +
                   fmt_double(row.rec.margin) + ")";
  } else if (row.sign < 0) {
    cert.verdict = Verdict::Fail;
    cert.summary = "perturbed-map ratios at r=" + fmt_double(r) + " diverge";
    if (row.rec.margin == -kInf)
      cert.summary += "; a zero denominator pins a critical point of the "
                      "perturbed map away from xbar";
  } else {
    cert.verdict = Verdict::Inconclusive;
    cert.summary = "perturbed-map scan at r=" + fmt_double(r) +
                   " produced no usable ratios";
  }
  if (cert.verdict == Verdict::Fail && !hyp.ok) {
    cert.verdict = Verdict::Inconclusive;
    cert.advisory = true;
    cert.summary += "; refutation is advisory: " + missing_hypothesis(hyp);
  }
  return cert;
}

Certificate nec_b(const PiecewiseFn& f, const Vec& xbar, double r,
                  const std::vector<double>& radii, const Hypotheses& hyp,
                  const CertifyParams& p) {
  Certificate cert;
  cert.clause = "NEC_B";
  const double thr = 1.0 / r;
  cert.params = {{"r", r}, {"eps", p.eps}, {"threshold", thr},
                 {"dirs", static_cast<double>(p.dirs)}};
  cert.hypotheses = hyp.notes;

  GaugeParams gp;
  gp.kind = SubdiffKind::Limiting;
  gp.theta_tol_deg = p.theta_tol_deg;
  gp.trust = p.trust;

  for (double t : radii) {
    ConditionRecord rec;
    rec.id = "gauge(x; xbar - x) >= 1/r at t=" + fmt_double(t);
    rec.margin = kInf;
    std::size_t probed = 0;
    std::size_t over_budget = 0;
    for (const Vec& x : sphere_points(xbar, t, p.dirs)) {
      if (!f.eval(x).finite()) continue;
      GaugeResult g;
      try {
        if (f.dim >= 2 && !f.smooth_jet(x).has_value() &&
            lattice_unresolvable(f, x, t, radius_scaled_probe(f, x, t),
                                 p.trust)) {
          over_budget += 1;
          continue;
        }
        g = parametric_gauge(f, x, xbar, gp);
      } catch (const BudgetExceeded&) {
        over_budget += 1;
        continue;
      }
      probed += 1;
      const double margin = g.value.is_pos_inf() ? kInf : g.value.raw() - thr;
      if (margin < rec.margin) {
        rec.margin = margin;
        rec.witness = x;
      }
    }
    if (probed == 0) {
      rec.pass = true;
      rec.note = "no finite-valued probe points at this radius";
    } else {
      rec.pass = rec.margin >= -p.tol;
    }
    if (over_budget > 0)
      rec.note += (rec.note.empty() ? "" : "; ") + std::to_string(over_budget) +
                  " points were skipped: the lattice probe cannot resolve them "
                  "within budget";
    cert.conditions.push_back(rec);
  }

  bool any_fail = false;
  for (const auto& rec : cert.conditions) any_fail = any_fail || !rec.pass;
  const bool smallest_fail = !cert.conditions.back().pass;
  if (!any_fail) {
    cert.verdict = Verdict::Pass;
    cert.summary = "subgradient gauge stays >= " + fmt_double(thr) +
                   " down to t=" + fmt_double(radii.back());
  } else if (smallest_fail) {
    cert.verdict = Verdict::Fail;
    cert.summary = "gauge bound 1/r=" + fmt_double(thr) +
                   " fails at the smallest probed radius (margin " +
                   fmt_double(cert.conditions.back().margin) + ")";
  } else {
    cert.verdict = Verdict::Inconclusive;
    cert.summary = "gauge bound 1/r=" + fmt_double(thr) +
                   " fails only at outer radii; the smallest probed radii satisfy it";
  }
  if (cert.verdict == Verdict::Fail && !hyp.ok) {
    cert.verdict = Verdict::Inconclusive;
    cert.advisory = true;
    cert.summary += "; refutation is advisory: " + missing_hypothesis(hyp);
  }
  return cert;
}

}  // namespace

std::string verdict_str(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string certificate_to_csv(const Certificate& cert) {
  std::string out = "clause,condition,pass,margin,witness,note\n";
  for (const auto& c : cert.conditions) {
    out += csv_quote(cert.clause) + "," + csv_quote(c.id) + "," +
           (c.pass ? "true" : "false") + "," + fmt_double(c.margin) + "," +
           csv_quote(c.witness ? c.witness->str() : std::string()) + "," +
           csv_quote(c.note) + "\n";
  }
  return out;
}

std::vector<double> default_r_list() { return {0.125, 0.25, 0.5, 1.0, 2.0, 4.0}; }

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  const std::size_t n = 33;
  grid.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    grid.push_back(std::pow(10.0, -3.0 + 5.0 * static_cast<double>(k) /
                                             static_cast<double>(n - 1)));
  return grid;
}

std::vector<Certificate> necessary_conditions(const PiecewiseFn& f, const Vec& xbar,
                                              const CertifyParams& params) {
  critical_point_check(f, xbar, params, "necessary_conditions");
  validate_positive(params.r_list, "necessary_conditions", "r");
  const std::vector<double> radii = geometric_radii(params.eps, params.radii_steps);
  const Hypotheses hyp = gather_hypotheses(f, xbar, params);
  std::vector<Certificate> out;
  out.reserve(2 * params.r_list.size());
  for (double r : params.r_list) {
    out.push_back(nec_a(f, xbar, r, radii, hyp, params));
    out.push_back(nec_b(f, xbar, r, radii, hyp, params));
  }
  return out;
}

Certificate sufficient_condition(const PiecewiseFn& f, const Vec& xbar,
                                 const CertifyParams& params) {
  critical_point_check(f, xbar, params, "sufficient_condition");
  validate_positive(params.r_list, "sufficient_condition", "r");
  validate_positive(params.lambda_grid, "sufficient_condition", "lambda");
  std::vector<double> grid = params.lambda_grid;
  std::sort(grid.begin(), grid.end());

  Certificate cert;
  cert.clause = "SUFF";
  cert.params = {{"eps", params.eps},
                 {"dirs", static_cast<double>(params.dirs)},
                 {"lambda_grid_size", static_cast<double>(grid.size())}};
  if (f.flags.claims_lsc.has_value())
    cert.hypotheses.push_back(std::string("lower semicontinuous: declared ") +
                              (*f.flags.claims_lsc ? "true" : "false"));

  const std::vector<double> radii = geometric_radii(params.eps, params.radii_steps);

  struct ProbePoint {
    Vec x;
    double t = 0;
    SubdiffSet limiting;
    bool analytic = false;
    double resolution = 0;
    ExtReal gauge = ExtReal::pos_inf();
  };
  GaugeParams gp;
  gp.kind = SubdiffKind::Regular;
  gp.theta_tol_deg = params.theta_tol_deg;
  gp.trust = params.trust;
  std::vector<ProbePoint> pts;
  std::size_t over_budget = 0;
  const double r_max =
      params.r_list.empty()
          ? 0.0
          : *std::max_element(params.r_list.begin(), params.r_list.end());
  for (double t : radii) {
    for (const Vec& x : sphere_points(xbar, t, params.dirs)) {
      if (!f.eval(x).finite()) continue;
      try {
        ProbePoint pp;
        pp.x = x;
        pp.t = dist(x, xbar);
        const ProbeParams probe =
            f.dim == 1 ? ProbeParams{} : radius_scaled_probe(f, x, pp.t);
        if (lattice_unresolvable(f, x, pp.t, probe, params.trust,
                                 r_max * pp.t)) {
          over_budget += 1;
          continue;
        }
        pp.limiting = subdiff_dispatch(f, x, SubdiffKind::Limiting, probe);
        pp.analytic = pp.limiting.completeness == Completeness::AnalyticExact;
        if (!pp.analytic) pp.resolution = probe_resolution(f, x, probe);
        pp.gauge = parametric_gauge(f, x, xbar, gp).value;
        pts.push_back(std::move(pp));
      } catch (const BudgetExceeded&) {
        over_budget += 1;
      }
    }
  }
  if (pts.empty()) {
    cert.verdict = Verdict::Inconclusive;
    cert.summary = "no finite-valued probe points in the eps-ball";
    return cert;
  }

  std::vector<double> rs = {0.0};
  for (double r : params.r_list) rs.push_back(r);
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());

  struct REval {
    double r = 0;
    double lambda_max = kInf;
    std::optional<Vec> slope_witness;
    double gauge_margin = kInf;
    std::optional<Vec> gauge_witness;
    std::size_t unresolved = 0;
    std::size_t resolved = 0;
    double lambda_best = 0;
    bool slope_ok = false;
    bool gauge_ok = false;
  };
  std::vector<REval> evals;
  for (double r : rs) {
    REval ev;
    ev.r = r;
    for (const ProbePoint& pp : pts) {
      const double gm = pp.gauge.is_pos_inf()
                            ? kInf
                            : (r > 0 ? pp.gauge.raw() - 0.5 / r : -kInf);
      if (gm < ev.gauge_margin) {
        ev.gauge_margin = gm;
        ev.gauge_witness = pp.x;
      }
      const ExtReal d = set_distance(pp.limiting, (-r) * (pp.x - xbar));
      double slope;
      if (!d.finite()) {
        slope = kInf;
      } else if (!pp.analytic && d.value() <= params.trust * pp.resolution) {
        // The probe cannot separate this sampled distance from zero, so the
        // point carries no evidence either way at this resolution.
        ev.unresolved += 1;
        continue;
      } else {
        slope = d.value() / pp.t - r;
      }
      ev.resolved += 1;
      if (slope < ev.lambda_max) {
        ev.lambda_max = slope;
        ev.slope_witness = pp.x;
      }
    }
    for (double lam : grid)
      if (lam <= ev.lambda_max + params.tol) ev.lambda_best = lam;
    ev.slope_ok = ev.resolved > 0 && ev.lambda_best > 0;
    ev.gauge_ok = ev.gauge_margin >= -params.tol;
    evals.push_back(ev);
  }

  const REval* found = nullptr;
  for (const REval& ev : evals) {
    ConditionRecord slope_rec;
    slope_rec.id =
        "d(0; subdiff f(x) + r (x - xbar)) >= (lambda + r) ||x - xbar|| at r=" +
        fmt_double(ev.r);
    slope_rec.pass = ev.slope_ok;
    slope_rec.margin = ev.resolved == 0 ? 0 : ev.lambda_max - grid.front();
    slope_rec.witness = ev.slope_witness;
    if (ev.resolved == 0)
      slope_rec.note = "no resolvable probe points";
    else if (ev.slope_ok)
      slope_rec.note = "largest feasible lambda " + fmt_double(ev.lambda_best);
    else
      slope_rec.note = "no grid lambda fits (min slope " +
                       fmt_double(ev.lambda_max) + ")";
    if (ev.unresolved > 0)
      slope_rec.note += "; " + std::to_string(ev.unresolved) +
                        " sampled points below the probe resolution were skipped";
    cert.conditions.push_back(slope_rec);

    ConditionRecord gauge_rec;
    gauge_rec.id = ev.r > 0
                       ? "gauge_regular(x; xbar - x) >= 1/(2 r) at r=" + fmt_double(ev.r)
                       : "gauge_regular(x; xbar - x) infinite at r=0";
    gauge_rec.pass = ev.gauge_ok;
    gauge_rec.margin = ev.gauge_margin;
    gauge_rec.witness = ev.gauge_witness;
    cert.conditions.push_back(gauge_rec);

    if (found == nullptr && ev.slope_ok && ev.gauge_ok) found = &ev;
  }

  if (found != nullptr) {
    cert.verdict = Verdict::Pass;
    cert.params.push_back({"lambda", found->lambda_best});
    cert.params.push_back({"r", found->r});
    cert.summary = "both conditions hold at (lambda=" +
                   fmt_double(found->lambda_best) + ", r=" + fmt_double(found->r) +
                   ") on the eps=" + fmt_double(params.eps) + " ball";
    ConditionRecord cross;
    cross.id = "quadratic growth cross-check: alpha > 0";
    const ModulusEstimate alpha = estimate_alpha(f, xbar, params.eps);
    cross.pass = alpha.verdict != TrendVerdict::Degenerate;
    cross.margin = alpha.extrapolated.raw();
    cross.note = trend_verdict_str(alpha.verdict);
    if (!alpha.witness_chain.empty()) cross.witness = alpha.witness_chain.back().x;
    cert.conditions.push_back(cross);
    if (!cross.pass) {
      cert.verdict = Verdict::Inconclusive;
      cert.summary += "; growth cross-check disagrees (" + cross.note + ")";
    }
  } else {
    cert.verdict = Verdict::Fail;
    cert.summary =
        "no (lambda, r) pair from the grids satisfies both conditions at this "
        "resolution";
  }
  if (over_budget > 0)
    cert.summary += "; " + std::to_string(over_budget) +
                    " probe points were skipped: the lattice probe cannot "
                    "resolve them within budget";
  return cert;
}

std::vector<Certificate> c2_conditions(const PiecewiseFn& f, const Vec& xbar,
                                       const CertifyParams& params) {
  if (xbar.dim() != f.dim)
    throw ArgumentError("c2_conditions: xbar has dimension " +
                        std::to_string(xbar.dim()) + ", expected " +
                        std::to_string(f.dim));
  const std::optional<Jet2> jet = f.smooth_jet(xbar);
  if (!jet || !jet->grad_ok || !jet->hess_ok)
    throw UnsupportedStructure(
        "c2_conditions: f does not have a C2 jet at the reference point");
  const double grad_tol = params.precheck_tol > 0
                              ? params.precheck_tol
                              : 1e-9 * (1.0 + std::abs(jet->v));
  if (norm(jet->g) > grad_tol)
    throw PreconditionError("c2_conditions: gradient at the reference point has norm " +
                            fmt_double(norm(jet->g)));
  validate_positive(params.r_list, "c2_conditions", "r");
  validate_positive(params.lambda_grid, "c2_conditions", "lambda");
  std::vector<double> grid = params.lambda_grid;
  std::sort(grid.begin(), grid.end());

  const std::vector<double> eigs = sym_eigenvalues(jet->h);
  double eig_min = kInf, eig_abs = 0;
  std::string eig_list;
  for (double e : eigs) {
    eig_min = std::min(eig_min, e);
    eig_abs = std::max(eig_abs, std::abs(e));
    if (!eig_list.empty()) eig_list += ", ";
    eig_list += fmt_double(e);
  }
  const double eig_tol = 1e-9 * (1.0 + eig_abs);
  const bool psd = eig_min >= -eig_tol;
  const bool pd = eig_min > eig_tol;

  const std::vector<double> radii = geometric_radii(params.eps, params.radii_steps);
  const std::vector<Vec> dirs = principal_dirs(f.dim);
  KappaParams kp = scan_params(params);
  if (kp.extra_dirs.empty() && f.dim >= 2) kp.extra_dirs = dirs;

  std::vector<Certificate> out;

  Certificate psd_cert;
  psd_cert.clause = "C2_PSD_EQ";
  psd_cert.params = {{"eps", params.eps}, {"eig_min", eig_min}};
  psd_cert.hypotheses.push_back("f has a C2 jet at the reference point");
  ConditionRecord eig_rec;
  eig_rec.id = "hessian eigenvalues all nonnegative";
  eig_rec.pass = psd;
  eig_rec.margin = eig_min;
  eig_rec.note = "eigenvalues: " + eig_list;
  psd_cert.conditions.push_back(eig_rec);
  bool scan_pos = true, scan_neg = false;
  for (double r : params.r_list) {
    const ScanRow row = perturbed_scan_row(
        f, xbar, r, radii, kp,
        "gradient-map distance ratios bounded at r=" + fmt_double(r));
    psd_cert.conditions.push_back(row.rec);
    scan_pos = scan_pos && row.sign > 0;
    scan_neg = scan_neg || row.sign < 0;
  }
  if (psd && scan_pos) {
    psd_cert.verdict = Verdict::Pass;
    psd_cert.summary =
        "eigenvalue test and perturbed gradient-map scan agree: bounded at every "
        "probed r";
  } else if (!psd && scan_neg) {
    psd_cert.verdict = Verdict::Fail;
    psd_cert.summary =
        "eigenvalue test and perturbed gradient-map scan agree: a negative "
        "eigenvalue and a divergent ratio trend";
  } else {
    psd_cert.verdict = Verdict::Inconclusive;
    psd_cert.summary = std::string("eigenvalue test (") + (psd ? "psd" : "not psd") +
                       ") and perturbed gradient-map scan disagree at this "
                       "resolution";
    if (!psd && scan_pos)
      psd_cert.summary += "; no probed r exposed the negative eigenvalue";
  }
  out.push_back(std::move(psd_cert));

  Certificate pd_cert;
  pd_cert.clause = "C2_PD_EQ";
  pd_cert.params = {{"eps", params.eps}, {"eig_min", eig_min}};
  pd_cert.hypotheses.push_back("f has a C2 jet at the reference point");
  ConditionRecord pd_eig_rec;
  pd_eig_rec.id = "hessian eigenvalues all positive";
  pd_eig_rec.pass = pd;
  pd_eig_rec.margin = eig_min;
  pd_eig_rec.note = "eigenvalues: " + eig_list;
  pd_cert.conditions.push_back(pd_eig_rec);

  std::vector<double> rs = {0.0};
  for (double r : params.r_list) rs.push_back(r);
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());

  bool scan_pass = true;
  double lambda_uniform = kInf;
  for (double r : rs) {
    ConditionRecord rec;
    rec.id = "||grad f(x) + r (x - xbar)|| >= (lambda + r) ||x - xbar|| at r=" +
             fmt_double(r);
    double lambda_max = kInf;
    std::size_t probed = 0;
    for (double t : radii) {
      std::vector<Vec> shell = sphere_points(xbar, t, params.dirs);
      for (const Vec& u : dirs) {
        shell.push_back(xbar + (t / norm(u)) * u);
        shell.push_back(xbar - (t / norm(u)) * u);
      }
      for (const Vec& x : shell) {
        if (!f.eval(x).finite()) continue;
        const std::optional<Jet2> jx = f.smooth_jet(x);
        if (!jx || !jx->grad_ok) continue;
        probed += 1;
        const double slope = norm(jx->g + r * (x - xbar)) / dist(x, xbar) - r;
        if (slope < lambda_max) {
          lambda_max = slope;
          rec.witness = x;
        }
      }
    }
    if (probed == 0) {
      rec.pass = false;
      rec.margin = 0;
      rec.note = "no smooth probe points";
    } else {
      rec.margin = lambda_max - grid.front();
      rec.pass = rec.margin >= -params.tol;
      rec.note = "min slope " + fmt_double(lambda_max);
    }
    pd_cert.conditions.push_back(rec);
    scan_pass = scan_pass && rec.pass;
    lambda_uniform = std::min(lambda_uniform, lambda_max);
  }
  if (scan_pass) {
    double lambda_best = 0;
    for (double lam : grid)
      if (lam <= lambda_uniform + params.tol) lambda_best = lam;
    pd_cert.params.push_back({"lambda", lambda_best});
    pd_cert.summary = "one lambda=" + fmt_double(lambda_best) +
                      " satisfies the slope bound at every probed r";
  }
  if (pd && scan_pass) {
    pd_cert.verdict = Verdict::Pass;
  } else if (!pd && !scan_pass) {
    pd_cert.verdict = Verdict::Fail;
    pd_cert.summary =
        "eigenvalue test and uniform-lambda slope scan agree: no positive "
        "definite certificate";
  } else {
    pd_cert.verdict = Verdict::Inconclusive;
    pd_cert.summary = std::string("eigenvalue test (") + (pd ? "pd" : "not pd") +
                      ") and uniform-lambda slope scan disagree at this resolution";
  }
  out.push_back(std::move(pd_cert));
  return out;
}

}  // namespace subreg
