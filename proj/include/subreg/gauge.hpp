#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "subreg/certificate.hpp"
#include "subreg/expr.hpp"
#include "subreg/extreal.hpp"
#include "subreg/linalg.hpp"
#include "subreg/piecewise.hpp"
#include "subreg/subdiff.hpp"

namespace subreg {

// Direction of the reported gauge value relative to the true one. Sampling a
// set can only miss elements, so the largest aligned norm is underestimated
// and the sampled gauge can only overshoot; analytic interval sets are exact.
enum class GaugeBound { Exact, Upper };

std::string gauge_bound_str(GaugeBound b);

struct GaugeResult {
  Vec y;                               // probed direction
  ExtReal value = ExtReal::pos_inf();  // smallest lambda > 0 with y in lambda * set
  std::optional<Vec> witness;          // aligned element attaining the value
  double theta_tol_deg = 2.0;          // angular alignment tolerance used
  bool truncated = false;              // candidate lattice clipped the set
  bool empty_set = false;              // the set had no elements at all
  GaugeBound bound = GaugeBound::Upper;

  // value = 0 encodes an aligned part of unbounded norm: the infimum is 0 and
  // is not attained, so there is no witness.
  bool attained() const { return witness.has_value(); }
};

// Gauge of the direction y relative to the elements of K: over the elements
// aligned with y (angle at most theta_tol_deg, exact sign match in one
// dimension), value = ||y|| / max ||s||; +inf when nothing aligns. Sampled
// elements with norm at or below sample_floor are ignored as lattice noise.
GaugeResult gauge_of_set(const SubdiffSet& K, const Vec& y, double theta_tol_deg = 2.0,
                         double sample_floor = 0.0);

struct GaugeParams {
  SubdiffKind kind = SubdiffKind::Limiting;
  double theta_tol_deg = 2.0;
  // Sampled candidates with norm at or below trust * (the probe's own
  // resolution bound) are ignored, mirroring nearest_subgradient.
  double trust = 16.0;
  ProbeParams probe;  // used in one dimension, where no radius scale is needed
};

// Gauge of the direction xbar - x relative to the subdifferential at x, with
// probe parameters matched to ||x - xbar|| above one dimension.
GaugeResult parametric_gauge(const PiecewiseFn& f, const Vec& x, const Vec& xbar,
                             const GaugeParams& params = {});

struct MinorantCheckParams {
  GaugeParams gauge;
  double tol = 1e-9;      // slack on the slope and gauge inequalities
  std::size_t dirs = 16;  // sphere directions probed per radius above 1-D
};

// Checks that the radial minorant psi (a 1-D expression in the radius t)
// descends at least as fast as the gauge allows: at every probed x,
// psi'(t)/t <= -1/gauge(x; xbar - x) with t = ||x - xbar||, using the
// conventions 1/inf = 0 and 1/0 = +inf. Requires psi(0) = f(xbar) and
// f(x) >= psi(||x - xbar||) on the probe grid; a violation of either raises
// PreconditionError with a witness point.
Certificate minorant_bound_check(const PiecewiseFn& f, const Vec& xbar, const Expr& psi,
                                 const std::vector<double>& radii,
                                 const MinorantCheckParams& params = {});

// Checks the gauge lower bound implied by a parabolic minorant: when
// f(x) >= f(xbar) - (r/2)||x - xbar||^2 holds on the probe grid in the
// eps-ball, every probed point must satisfy gauge(x; xbar - x) >= 1/r.
Certificate parabolic_minorant_check(const PiecewiseFn& f, const Vec& xbar, double r,
                                     double eps, const MinorantCheckParams& params = {});

}  // namespace subreg
