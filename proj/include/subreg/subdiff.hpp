#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "subreg/extreal.hpp"
#include "subreg/piecewise.hpp"

namespace subreg {

enum class SubdiffKind { Regular, Limiting, Horizon };

std::string kind_str(SubdiffKind k);
SubdiffKind kind_from_str(const std::string& s);

// One vector that passed the quadratic-minorant probe (or, for the horizon
// kind, one unit direction recovered from a near-horizontal epigraph normal).
struct SubgradientSample {
  Vec x;              // base point the sample was certified at
  Vec v;
  SubdiffKind kind = SubdiffKind::Regular;
  double c = 0;       // proximal curvature bound used by the probe
  double delta = 0;   // probe radius
  double residual = 0;  // worst minorant violation observed (<= slack when accepted)
};

// Outward direction (v, -lambda) from an exterior point to its nearest
// epigraph point (x, fx); lambda >= 0 after normalization.
struct EpigraphNormalSample {
  Vec x;
  double fx = 0;
  Vec v;
  double lambda = 0;
  double gap = 0;  // distance from the exterior point to the epigraph
};

enum class Completeness { AnalyticExact, NumericSampled };

// Probe configuration. Nonpositive entries are resolved to the documented
// defaults at call time; resolved values are recorded on the output set.
struct ProbeParams {
  double c = 0;             // <= 0: 10 / delta
  double delta = 0.05;      // probe ball radius
  double grid_step = 0;     // <= 0: delta / 64
  double rho = 0;           // base-point radius for the limiting kind; <= 0: 4 * grid_step
  double lambda_tol = 1e-3; // horizon threshold on the normalized vertical part
  double f_tol = 0;         // f-attentive window; <= 0: max(10 * grid_step, 1e-6)
  double lattice_step = 0;  // candidate spacing; <= 0: lattice extent / 32
  std::size_t budget_cap = 1u << 22;  // max probe-grid or lattice cardinality
  unsigned threads = 0;     // 0: SUBREG_THREADS env or 1
};

struct ResolvedProbeParams {
  double c = 0, delta = 0, grid_step = 0, rho = 0, lambda_tol = 0, f_tol = 0,
         lattice_step = 0;
  std::size_t budget_cap = 0;
  unsigned threads = 1;
};
ResolvedProbeParams resolve_probe_params(const ProbeParams& p);

// Sampled (or exact) subdifferential at a point.
struct SubdiffSet {
  Vec x;
  SubdiffKind kind = SubdiffKind::Regular;
  Completeness completeness = Completeness::NumericSampled;
  std::vector<SubgradientSample> samples;  // deterministic lattice order
  std::vector<Vec> cluster_reps;           // single-linkage representatives
  // 1-D only: interval union [lo, hi] pairs; exact for the analytic oracle,
  // gap-merged reconstruction for the numeric one. +-inf endpoints allowed
  // in analytic sets.
  std::vector<std::array<double, 2>> intervals;
  bool truncated = false;   // accepted candidates reached the lattice edge
  double lattice_bound = 0; // half-width of the candidate lattice around its center
  double lattice_step = 0;
  Vec lattice_center;
  double c = 0, delta = 0;

  bool empty() const { return samples.empty() && intervals.empty(); }
};

// Distance from a target vector to the set (exact on analytic intervals,
// sample minimum otherwise). +inf for the empty set.
ExtReal set_distance(const SubdiffSet& set, const Vec& target);
// Closest set member to the target, when the set is nonempty.
std::optional<Vec> set_closest(const SubdiffSet& set, const Vec& target);

// Exact 1-D oracle via one-sided derivatives of the adjacent pieces.
// Requires continuity at x (value agreement of both one-sided limits);
// discontinuous inputs are UnsupportedStructure by contract.
SubdiffSet analytic_subdiff_1d(const PiecewiseFn& f, double x, SubdiffKind kind);

// Lattice probe oracle in any supported dimension.
SubdiffSet numeric_subdiff(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                           const ProbeParams& params = {});

// Cheap dispatcher used by downstream estimators: exact gradient at smooth
// points, analytic oracle in 1-D, lattice probe otherwise.
SubdiffSet subdiff_dispatch(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                            const ProbeParams& params = {});

struct MinNormResult {
  ExtReal value;               // +inf when the set is empty
  std::optional<Vec> witness;  // attaining vector when finite
  Completeness source = Completeness::NumericSampled;
};
MinNormResult min_norm_subgradient(const PiecewiseFn& f, const Vec& x, SubdiffKind kind,
                                   const ProbeParams& params = {});

// All epigraph-projection normals found around x (both steep and horizontal).
std::vector<EpigraphNormalSample> epigraph_normals(const PiecewiseFn& f, const Vec& x,
                                                   const ProbeParams& params = {});

// Worst violation of f(y) >= f(x) + <v, y-x> - (c/2)|y-x|^2 over the probe
// grid in B_delta(x); <= 0 means the minorant holds everywhere probed.
double proximal_residual(const PiecewiseFn& f, const Vec& x, const Vec& v, double c,
                         double delta, double grid_step);

struct ContinuityRow {
  double radius = 0;
  double gap = 0;        // max |f(x) - f(xbar)| over qualifying graph points
  bool found = false;    // any (x, v) qualified at this radius
  Vec witness_x;
  Vec witness_v;
  double witness_f = 0;
};
struct ContinuityReport {
  bool continuous = true;
  std::vector<ContinuityRow> rows;
  Vec xbar;
  Vec vbar;
  double fbar = 0;
  double gap_tol = 0;
};
// Graph-local value-continuity diagnostic at (xbar, vbar).
ContinuityReport subdiff_continuity_probe(const PiecewiseFn& f, const Vec& xbar,
                                          const Vec& vbar, std::vector<double> radii,
                                          const ProbeParams& params = {},
                                          double gap_tol = 1e-3);

// Parametric curve with AD velocity; components are expressions in t.
struct Curve {
  std::vector<Expr> comps;

  static Curve parse(const std::vector<std::string>& texts);
  std::size_t dim() const { return comps.size(); }
  Vec at(double t) const;
  Vec velocity(double t) const;
  std::vector<std::string> str() const;
};

struct ChainRuleRow {
  double t = 0;
  Vec x;
  Vec v;
  double along = 0;       // <v, x'(t)>
  double composed = 0;    // d/dt f(x(t)) by central differences
  double residual = 0;
};
struct ChainRuleReport {
  double max_residual = 0;
  std::vector<ChainRuleRow> rows;
};
ChainRuleReport chain_rule_check(const PiecewiseFn& f, const Curve& curve,
                                 const std::vector<double>& t_samples,
                                 const ProbeParams& params = {});

// CSV export: x1..xn, v1..vn, kind, residual.
std::string subdiff_to_csv(const SubdiffSet& set);

}  // namespace subreg
