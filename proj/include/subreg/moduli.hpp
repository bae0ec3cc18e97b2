#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subreg/certificate.hpp"
#include "subreg/extreal.hpp"
#include "subreg/piecewise.hpp"
#include "subreg/subdiff.hpp"

namespace subreg {

enum class ModulusKind { Alpha, KappaStrong, KappaSubreg, Ell };
enum class TrendVerdict { Finite, Divergent, Degenerate };

std::string modulus_kind_str(ModulusKind k);
std::string trend_verdict_str(TrendVerdict v);

// One probed point entering a modulus ratio: numer / denom, where numer is
// the distance from the reference point (or to the solution set) and denom
// the nearest-subgradient norm there.
struct WitnessPoint {
  Vec x;
  double ratio = 0;
  double numer = 0;
  double denom = 0;
};

struct RadiusValue {
  double radius = 0;
  double value = 0;          // clipped at 0; raw kept for the alpha verdict
  double raw = 0;
  std::size_t samples = 0;   // probed points that produced a valid ratio
  std::optional<WitnessPoint> witness;  // extremal point at this radius
};

// Multi-scale estimate of a growth or subregularity constant. The verdict
// separates stabilized values from ratios that keep doubling as the radius
// shrinks and from scans where the defining quantity degenerates.
struct ModulusEstimate {
  ModulusKind kind = ModulusKind::Alpha;
  Vec xbar;
  std::vector<RadiusValue> per_radius;  // radii in decreasing order
  ExtReal extrapolated = ExtReal::pos_inf();
  TrendVerdict verdict = TrendVerdict::Degenerate;
  // Witnesses sorted by increasing ratio; on a Divergent verdict consecutive
  // ratios at least double, or a single entry carries a zero denominator.
  std::vector<WitnessPoint> witness_chain;
  bool zero_denominator = false;
  bool tail_stable = false;  // last four valid radii agree within a factor 1.5
  double uncertainty = 0;  // half grid spacing when distances use a point cloud
  std::string trend_note;
};

// Sphere-restricted minimum of f around xbar at each radius, with the
// argmin, the subgradient nearest to the outward ray there, and the scalar
// multiplier aligning the two.
struct RadialSample {
  double radius = 0;
  ExtReal phi = ExtReal::pos_inf();  // min of f over the probed sphere
  std::optional<Vec> argmin;
  std::optional<Vec> v_near;
  std::optional<double> lambda;
  double multiplier_gap = 0;  // || lambda * (argmin - xbar) - v_near ||
};

struct RadialProfile {
  Vec xbar;
  std::vector<RadialSample> rows;
};

RadialProfile radial_profile(const PiecewiseFn& f, const Vec& xbar,
                             const std::vector<double>& radii,
                             std::size_t sphere_grid = 64);

// Infimum of 2*(f(x) - f(xbar)) / |x - xbar|^2 over a multi-scale grid in
// the eps-ball. Degenerate when the raw infimum is nonpositive (the point is
// not a strict quadratic minimizer at this resolution).
ModulusEstimate estimate_alpha(const PiecewiseFn& f, const Vec& xbar, double eps,
                               std::size_t grid = 64);

// Probe parameters matched to a radius scale r: the candidate lattice
// resolves subgradient norms of order r and the proximal slack sits just
// above the sampled concavity around x.
ProbeParams radius_scaled_probe(const PiecewiseFn& f, const Vec& x, double r);

// Norm floor below which a distance sampled by the lattice probe at x is
// indistinguishable from zero: the probe accepts any candidate whose minorant
// violation at the first grid shell stays inside its value-noise slack.
double probe_resolution(const PiecewiseFn& f, const Vec& x, const ProbeParams& params);

// True when a lattice probe at a nonsmooth point cannot produce a trusted
// sample: the trust floor already covers the local slope scale plus the
// target offset, so every candidate distance would be discarded. Callers
// use this to skip the dispatch instead of grinding through the lattice.
bool lattice_unresolvable(const PiecewiseFn& f, const Vec& x, double t,
                          const ProbeParams& params, double trust,
                          double target_norm = 0.0);

// Nearest point of the kind-subdifferential at x to a target vector, with
// the probe matched to scale_r when positive (fallback otherwise).
struct NearestSubgradient {
  bool valid = false;  // f(x) finite
  ExtReal dist = ExtReal::pos_inf();
  std::optional<Vec> closest;
  bool analytic = false;
  double resolution = 0;  // sampled results: trust floor for dist
};
NearestSubgradient nearest_subgradient(const PiecewiseFn& f, const Vec& x,
                                       const Vec& target, SubdiffKind kind,
                                       double scale_r, const ProbeParams& fallback = {});

struct KappaParams {
  std::size_t dirs = 32;   // sphere directions per shell (2-D / 3-D)
  std::size_t shells = 5;  // spheres per annulus [t/2, t]
  std::size_t scan = 65;   // 1-D probe points per side of xbar
  bool refine = true;      // 1-D: bisect sign changes of the nearest subgradient
  // Analytic denominators at or below zero_tol * (local slope scale) count as
  // exact zeros. The default trusts only a bitwise zero.
  double zero_tol = 0.0;
  // A sampled (non-analytic) denominator is usable only when it exceeds
  // trust * (the probe's own resolution bound); otherwise the whole radius is
  // marked unresolved instead of feeding junk ratios into the trend.
  double trust = 16.0;
  double precheck_tol = 0;  // <= 0: 1e-4 * (1 + |f(xbar)|)
  // Bisection at radius index k stops once the ratio reaches
  // base_ratio_target * target_growth^k, so divergent ratios are certified
  // with geometrically growing witnesses instead of raw float noise.
  double base_ratio_target = 1e4;
  double target_growth = 2.5;
  // Additional probe directions (unit vectors from the reference point),
  // sampled at the same shell radii as the built-in annulus grid. Lets a
  // caller aim the scan at directions where the denominator degenerates.
  std::vector<Vec> extra_dirs;
};

// Per radius t: max of |x - xbar| / d(0; subdiff f(x)) over the annulus
// [t/2, t]. A denominator of zero away from xbar is immediate divergence.
ModulusEstimate estimate_kappa_strong(const PiecewiseFn& f, const Vec& xbar,
                                      const std::vector<double>& radii,
                                      SubdiffKind kind = SubdiffKind::Limiting,
                                      const KappaParams& params = {});

// Same scan for the radially perturbed map x -> subdiff f(x) + r (x - xbar):
// denominators are d(-r (x - xbar); subdiff f(x)), so a zero denominator
// certifies a critical point of the perturbed map away from xbar.
ModulusEstimate estimate_kappa_perturbed(const PiecewiseFn& f, const Vec& xbar,
                                         double r, const std::vector<double>& radii,
                                         SubdiffKind kind = SubdiffKind::Limiting,
                                         const KappaParams& params = {});

// Grid points of the box whose nearest-subgradient norm is at most tau_crit.
struct SolutionSetApprox {
  double tau_crit = 0;
  double spacing = 0;  // grid step; distances carry spacing/2 uncertainty
  SubdiffKind kind = SubdiffKind::Regular;
  Box box;
  std::vector<Vec> cloud;

  double dist(const Vec& x) const;      // raw distance to the cloud
  double dist_eff(const Vec& x) const;  // max(0, dist - spacing/2)
};

SolutionSetApprox solution_set(const PiecewiseFn& f, const Box& box, double tau_crit,
                               SubdiffKind kind = SubdiffKind::Regular,
                               std::size_t per_axis = 201,
                               const ProbeParams& probe = {});

// Per radius t: max of dist_eff(x; S) / d(0; subdiff f(x)) over the annulus,
// skipping points indistinguishable from the cloud at grid resolution.
ModulusEstimate estimate_kappa_subreg(const PiecewiseFn& f, const Vec& xbar,
                                      const SolutionSetApprox& S,
                                      const std::vector<double>& radii,
                                      SubdiffKind kind = SubdiffKind::Limiting,
                                      const KappaParams& params = {});

// Grid check of f(x) >= f(xbar) + (alpha_target/2) * dist_eff(x; S)^2 on the
// eps-ball around xbar.
Certificate check_growth_to_solution_set(const PiecewiseFn& f, const Vec& xbar,
                                         const SolutionSetApprox& S,
                                         double alpha_target, double eps,
                                         std::size_t grid = 801);

// Sampled set-valued mapping on the line: either a finite list of branch
// expressions or an expression-bounded interval sampled uniformly.
struct SetMapSpec {
  std::string kind;  // "exprs" | "interval"
  std::vector<Expr> exprs;
  Expr lo, hi;
  std::size_t samples = 9;

  static SetMapSpec from_json(const nlohmann::json& j);
  static SetMapSpec parse_text(const std::string& json_text);
  std::vector<double> values(double x) const;
  std::string str() const;
};

struct PerturbationParams {
  std::size_t grid = 1001;  // scan points across [-eps, eps]
  double tol = 1e-6;        // slack added to the modulus bound
  double inv_tol = 0;       // preimage threshold; <= 0: slope-scaled from the grid
};

// Checks that adding a mapping G, small against the distance to F's
// ybar-preimage with factor ell < 1/kappa, keeps F+G subregular with modulus
// at most (1/kappa - ell)^-1 on the sampled grid.
Certificate perturbation_check(const SetMapSpec& F, const SetMapSpec& G, double kappa,
                               double ell, double eps, double ybar,
                               const PerturbationParams& params = {});

struct EquivalenceParams {
  double eps = 1e-2;
  double tol = 0.15;  // relative slack in the alpha >= (1 - tol)/kappa bound
  SubdiffKind kind = SubdiffKind::Limiting;
  // Overrides the function's own semialgebraicity claim when set.
  std::optional<bool> semialgebraic;
  std::size_t grid = 64;
  KappaParams kappa;
  double minimizer_tol = 0;  // <= 0: 1e-9 * (1 + |f(xbar)|)
};

struct EquivalenceRow {
  std::string name;
  std::string verdict;  // CONSISTENT | INCONSISTENT | NOT_APPLICABLE | EXPLAINED
  std::string detail;
};

// Two-way consistency report between the quadratic growth estimate and the
// strong subregularity estimate at a probed local minimizer, with hypothesis
// auditing when the two disagree.
struct EquivalenceReport {
  bool minimizer_ok = false;
  std::optional<WitnessPoint> minimizer_witness;  // descent point when not ok
  ModulusEstimate alpha;
  ModulusEstimate kappa;
  std::optional<ContinuityReport> continuity;
  std::optional<bool> semialgebraic;
  std::vector<EquivalenceRow> rows;
  std::optional<double> product;  // alpha * kappa when both are finite
};

EquivalenceReport check_equivalence(const PiecewiseFn& f, const Vec& xbar,
                                    const EquivalenceParams& params = {});

// CSV exports: one row per radius.
std::string modulus_to_csv(const ModulusEstimate& est);
std::string radial_profile_to_csv(const RadialProfile& profile);

}  // namespace subreg
