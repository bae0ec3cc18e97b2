#pragma once

#include <cstddef>
#include <vector>

#include "subreg/certificate.hpp"
#include "subreg/gauge.hpp"
#include "subreg/linalg.hpp"
#include "subreg/moduli.hpp"
#include "subreg/piecewise.hpp"

namespace subreg {

// {0.125, 0.25, 0.5, 1, 2, 4}
std::vector<double> default_r_list();

// Logarithmic grid of 33 values spanning [1e-3, 1e2].
std::vector<double> default_lambda_grid();

struct CertifyParams {
  double eps = 1e-2;             // ball radius probed around the reference point
  std::size_t radii_steps = 12;  // probe radii eps * 2^-k, k = 0..radii_steps
  std::size_t dirs = 16;         // sphere directions per radius above 1-D
  double tol = 1e-9;             // slack on inequality margins
  double theta_tol_deg = 2.0;    // gauge alignment tolerance
  double trust = 16.0;           // resolution multiple guarding sampled values
  double precheck_tol = 0;       // <= 0: 1e-4 * (1 + |f(xbar)|)
  KappaParams kappa;             // forwarded to the perturbed-map scans
  std::vector<double> r_list = default_r_list();
  std::vector<double> lambda_grid = default_lambda_grid();
};

// First-order necessary scans at the reference point: for each r in r_list,
// one NEC_A certificate (the radially perturbed subgradient map keeps a
// bounded distance ratio over shrinking radii) and one NEC_B certificate
// (the parametric gauge stays at or above 1/r on the probed ball). A FAIL
// refutes local minimality only under the structural hypotheses recorded on
// the certificate; when those are not established the verdict downgrades to
// INCONCLUSIVE with the advisory flag set.
std::vector<Certificate> necessary_conditions(const PiecewiseFn& f, const Vec& xbar,
                                              const CertifyParams& params = {});

// Searches (lambda, r) over lambda_grid x ({0} + r_list) for a pair where
// both displayed inequalities hold at every probed point of the eps-ball:
//   (i)  d(0; subdiff f(x) + r (x - xbar)) >= (lambda + r) ||x - xbar||
//   (ii) gauge_regular(x; xbar - x) >= 1 / (2r)
// with the conventions 1/0 = +inf and 1/inf = 0. A PASS records the witness
// pair and is cross-checked against estimate_alpha reporting a positive
// growth constant; an exhausted search is a FAIL at this resolution.
Certificate sufficient_condition(const PiecewiseFn& f, const Vec& xbar,
                                 const CertifyParams& params = {});

// Second-order cross-checks for C^2 points: compares the Hessian eigenvalue
// signs against gradient-map scans. Returns two certificates:
//   C2_PSD_EQ: eigenvalues nonnegative <=> the map x -> grad f(x) + r(x-xbar)
//              keeps a bounded distance ratio at every probed r > 0;
//   C2_PD_EQ:  eigenvalues positive <=> one lambda > 0 satisfies
//              ||grad f(x) + r(x-xbar)|| >= (lambda + r)||x - xbar|| on the
//              probed ball for every probed r >= 0.
// Agreement yields PASS (both sides positive) or FAIL (both negative);
// a mismatch at this resolution yields INCONCLUSIVE with diagnostics.
std::vector<Certificate> c2_conditions(const PiecewiseFn& f, const Vec& xbar,
                                       const CertifyParams& params = {});

}  // namespace subreg
