#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "subreg/errors.hpp"
#include "subreg/grids.hpp"
#include "subreg/moduli.hpp"
#include "subreg/numfmt.hpp"
#include "subreg/piecewise.hpp"

using namespace subreg;

namespace {

PiecewiseFn from_json_text(const std::string& text) {
  return PiecewiseFn::from_json(nlohmann::json::parse(text));
}

PiecewiseFn fn_quad1(double c) {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": ")js" +
                        fmt_double(c) + R"js(*x1^2"}]})js");
}

PiecewiseFn fn_quad2(double c) {
  return from_json_text(R"js({"dim": 2, "flags": {"claims_semialgebraic": true},
    "pieces": [{"body": ")js" + fmt_double(c) + R"js(*(x1^2 + x2^2)"}]})js");
}

PiecewiseFn fn_xabsx() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "x1*abs(x1)"}]})js");
}

PiecewiseFn fn_l1sq() {
  return from_json_text(R"js({
    "dim": 2,
    "flags": {"claims_semialgebraic": true},
    "pieces": [{"body": "(abs(x1) + abs(x2))^2"}]
  })js");
}

// Quadratic on the right of a unit jump: lower semicontinuous, quadratic
// growth holds, yet the nearest-subgradient norm collapses like 4|x|^3 on
// the left branch.
PiecewiseFn fn_jump_quartic() {
  return from_json_text(R"js({
    "dim": 1,
    "flags": {"claims_semialgebraic": true, "claims_lsc": true},
    "pieces": [
      {"guard": ["x1 < 0"], "body": "1 + x1^4"},
      {"guard": ["x1 >= 0"], "body": "x1^2"}
    ],
    "box": [[-0.5, 0.5]]
  })js");
}

// Oscillating quadratic-growth well: f(x) = 2x^2 + (x^2/2) sin(1/x), with a
// separate piece pinning f(0) = 0 so the body never evaluates sin(1/0).
PiecewiseFn fn_oscillating_well() {
  return from_json_text(R"js({
    "dim": 1,
    "flags": {"claims_semialgebraic": false, "claims_lsc": true},
    "pieces": [
      {"guard": ["x1 < 0"], "body": "2*x1^2 + 0.5*x1^2*sin(1/x1)"},
      {"guard": ["x1 == 0"], "body": "0"},
      {"guard": ["x1 > 0"], "body": "2*x1^2 + 0.5*x1^2*sin(1/x1)"}
    ],
    "box": [[-0.5, 0.5]]
  })js");
}

PiecewiseFn fn_flat_well() {
  return from_json_text(R"js({
    "dim": 1,
    "flags": {"claims_semialgebraic": true, "claims_lsc": true},
    "pieces": [
      {"guard": ["x1 < -1"], "body": "(x1 + 1)^2"},
      {"guard": ["x1 >= -1", "x1 <= 1"], "body": "0"},
      {"guard": ["x1 > 1"], "body": "(x1 - 1)^2"}
    ],
    "box": [[-2.5, 2.5]]
  })js");
}

PiecewiseFn fn_boxed_quad() {
  return from_json_text(R"js({
    "dim": 1,
    "pieces": [{"guard": ["x1 >= -1", "x1 <= 1"], "body": "x1^2"}]
  })js");
}

const Vec kZero1{0.0};
const Vec kZero2{0.0, 0.0};

double tail_value(const ModulusEstimate& est) {
  REQUIRE(est.extrapolated.finite());
  return est.extrapolated.value();
}

const EquivalenceRow& row_named(const EquivalenceReport& rep, const std::string& name) {
  for (const auto& r : rep.rows)
    if (r.name == name) return r;
  REQUIRE_MESSAGE(false, ("missing row " + name));
  static EquivalenceRow dummy;
  return dummy;
}

}  // namespace

TEST_CASE("alpha on quadratics recovers twice the leading coefficient") {
  for (double c : {0.5, 1.0, 2.0}) {
    auto f1 = fn_quad1(c);
    auto est = estimate_alpha(f1, kZero1, 0.5, 33);
    CHECK(est.verdict == TrendVerdict::Finite);
    CHECK(tail_value(est) == doctest::Approx(2.0 * c).epsilon(1e-12));
    CHECK(est.per_radius.size() == 13);
    for (const auto& rv : est.per_radius) {
      CHECK(rv.samples > 0);
      CHECK(rv.value >= 0.0);
      CHECK(rv.value == doctest::Approx(2.0 * c).epsilon(1e-12));
    }

    auto f2 = fn_quad2(c);
    auto est2 = estimate_alpha(f2, kZero2, 0.5, 16);
    CHECK(est2.verdict == TrendVerdict::Finite);
    CHECK(tail_value(est2) == doctest::Approx(2.0 * c).epsilon(1e-12));
  }
}

TEST_CASE("alpha flags a nonpositive growth quotient as degenerate") {
  auto f = fn_xabsx();
  auto est = estimate_alpha(f, kZero1, 0.25, 33);
  CHECK(est.verdict == TrendVerdict::Degenerate);
  CHECK(est.extrapolated.finite());
  CHECK(est.extrapolated.value() == 0.0);
  REQUIRE(!est.witness_chain.empty());
  CHECK(est.witness_chain[0].x[0] < 0.0);
  CHECK(est.witness_chain[0].ratio == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("alpha on the oscillating well lands at the worst phase") {
  auto f = fn_oscillating_well();
  auto est = estimate_alpha(f, kZero1, 0.01, 64);
  CHECK(est.verdict == TrendVerdict::Finite);
  const double a = tail_value(est);
  CHECK(a >= 2.9);
  CHECK(a <= 3.1);
}

TEST_CASE("alpha argument validation") {
  auto f = fn_quad1(1.0);
  CHECK_THROWS_AS((void)estimate_alpha(f, kZero1, 0.5, 0), ArgumentError);
  CHECK_THROWS_AS((void)estimate_alpha(f, kZero1, 0.0, 16), ArgumentError);
  CHECK_THROWS_AS((void)estimate_alpha(f, kZero1, -1.0, 16), ArgumentError);
  CHECK_THROWS_AS((void)estimate_alpha(f, kZero2, 0.5, 16), ArgumentError);
  auto half = from_json_text(
      R"js({"dim": 1, "pieces": [{"guard": ["x1 >= 0"], "body": "x1^2"}]})js");
  CHECK_THROWS_AS((void)estimate_alpha(half, Vec{-0.5}, 0.1, 16), PreconditionError);
}

TEST_CASE("strong-mode kappa on quadratics recovers the reciprocal slope rate") {
  for (double c : {0.5, 1.0, 2.0}) {
    auto f1 = fn_quad1(c);
    auto est = estimate_kappa_strong(f1, kZero1, geometric_radii(0.5));
    CHECK(est.verdict == TrendVerdict::Finite);
    CHECK(est.tail_stable);
    CHECK(!est.zero_denominator);
    CHECK(tail_value(est) == doctest::Approx(1.0 / (2.0 * c)).epsilon(1e-12));

    KappaParams kp;
    kp.dirs = 16;
    kp.shells = 3;
    auto f2 = fn_quad2(c);
    auto est2 = estimate_kappa_strong(f2, kZero2, geometric_radii(0.5, 6),
                                      SubdiffKind::Limiting, kp);
    CHECK(est2.verdict == TrendVerdict::Finite);
    CHECK(tail_value(est2) == doctest::Approx(1.0 / (2.0 * c)).epsilon(1e-12));
  }
}

TEST_CASE("strong-mode kappa requires a critical reference point") {
  auto f = fn_quad1(1.0);
  CHECK_THROWS_AS((void)estimate_kappa_strong(f, Vec{0.3}, geometric_radii(0.25)),
                  PreconditionError);
  CHECK_THROWS_AS((void)estimate_kappa_strong(f, kZero1, {}), ArgumentError);
  CHECK_THROWS_AS((void)estimate_kappa_strong(f, kZero1, {0.5, -0.1}), ArgumentError);
}

TEST_CASE("strong-mode kappa on the separable kink square stays near one half") {
  auto f = fn_l1sq();
  KappaParams kp;
  kp.dirs = 16;
  kp.shells = 3;
  auto est = estimate_kappa_strong(f, kZero2, geometric_radii(0.5, 6),
                                   SubdiffKind::Limiting, kp);
  CHECK(est.verdict == TrendVerdict::Finite);
  CHECK(est.tail_stable);
  const double k = tail_value(est);
  CHECK(k >= 0.49);
  CHECK(k <= 0.54);
  for (const auto& rv : est.per_radius) {
    REQUIRE(rv.witness.has_value());
    const Vec& w = rv.witness->x;
    CHECK(std::min(std::fabs(w[0]), std::fabs(w[1])) <= 1e-9 * rv.radius);
  }
}

TEST_CASE("kappa divergence by trend: quartic branch past a jump") {
  auto f = fn_jump_quartic();
  auto est = estimate_kappa_strong(f, kZero1, geometric_radii(0.25));
  CHECK(est.verdict == TrendVerdict::Divergent);
  CHECK(!est.zero_denominator);
  CHECK(!est.extrapolated.finite());

  for (const auto& rv : est.per_radius) {
    REQUIRE(rv.witness.has_value());
    const double x = rv.witness->x[0];
    CHECK(x == -rv.radius / 2.0);
    CHECK(rv.witness->denom == doctest::Approx(4.0 * std::pow(rv.radius / 2.0, 3))
                                   .epsilon(1e-12));
    CHECK(rv.value == doctest::Approx(1.0 / (rv.radius * rv.radius)).epsilon(1e-9));
  }

  REQUIRE(est.witness_chain.size() >= 4);
  for (std::size_t i = 1; i < est.witness_chain.size(); ++i)
    CHECK(est.witness_chain[i].ratio >= 2.0 * est.witness_chain[i - 1].ratio);
}

TEST_CASE("kappa divergence by trend: oscillating well with bisection refinement") {
  auto f = fn_oscillating_well();
  auto est = estimate_kappa_strong(f, kZero1, geometric_radii(0.01));
  CHECK(est.verdict == TrendVerdict::Divergent);
  CHECK(!est.zero_denominator);

  REQUIRE(est.witness_chain.size() >= 4);
  for (std::size_t i = 1; i < est.witness_chain.size(); ++i)
    CHECK(est.witness_chain[i].ratio >= 2.0 * est.witness_chain[i - 1].ratio);
  for (const auto& w : est.witness_chain) {
    CHECK(std::fabs(w.x[0]) <= 1e-2);
    CHECK(w.ratio >= 1e3);
  }
  CHECK(est.witness_chain.back().ratio >= 1e6);
}

TEST_CASE("kappa divergence by zero denominator on the flat well") {
  auto f = fn_flat_well();
  auto est = estimate_kappa_strong(f, kZero1, geometric_radii(0.5));
  CHECK(est.verdict == TrendVerdict::Divergent);
  CHECK(est.zero_denominator);
  CHECK(!est.extrapolated.finite());
  bool has_inf = false;
  for (const auto& w : est.witness_chain)
    if (std::isinf(w.ratio) && w.denom == 0.0) has_inf = true;
  CHECK(has_inf);
  CHECK(est.trend_note.find("zero denominator") != std::string::npos);
}

TEST_CASE("solution-set cloud on the flat well matches the flat region") {
  auto f = fn_flat_well();
  auto S = solution_set(f, f.box, 1e-3, SubdiffKind::Regular, 1001);
  CHECK(S.spacing == doctest::Approx(0.005).epsilon(1e-12));
  REQUIRE(!S.cloud.empty());
  double lo = S.cloud.front()[0], hi = lo;
  for (const auto& p : S.cloud) {
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
    const auto mn = min_norm_subgradient(f, p, SubdiffKind::Regular);
    REQUIRE(mn.value.finite());
    CHECK(mn.value.value() <= 1e-3);
  }
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-9));

  CHECK(S.dist(Vec{1.3}) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(S.dist_eff(Vec{1.3}) == doctest::Approx(0.2975).epsilon(1e-9));
  CHECK(S.dist_eff(Vec{0.5}) == 0.0);
}

TEST_CASE("solution-set cloud on a quadratic is the single critical point") {
  auto f = fn_quad1(1.0);
  auto S = solution_set(f, f.box, 1e-6, SubdiffKind::Regular, 1001);
  REQUIRE(S.cloud.size() == 1);
  CHECK(S.cloud[0][0] == 0.0);
  CHECK_THROWS_AS((void)solution_set(f, f.box, -1.0, SubdiffKind::Regular, 101),
                  ArgumentError);
  CHECK_THROWS_AS((void)solution_set(f, f.box, 0.1, SubdiffKind::Regular, 1),
                  ArgumentError);
}

TEST_CASE("set-mode kappa stays near one half for the flat well and the quadratic") {
  auto flat = fn_flat_well();
  auto Sf = solution_set(flat, flat.box, 1e-3, SubdiffKind::Regular, 1001);
  auto ef = estimate_kappa_subreg(flat, kZero1, Sf, geometric_radii(2.0));
  CHECK(ef.verdict == TrendVerdict::Finite);
  CHECK(ef.uncertainty == doctest::Approx(Sf.spacing / 2.0));
  std::size_t valid = 0;
  for (const auto& rv : ef.per_radius)
    if (rv.samples > 0) valid += 1;
  CHECK(valid == 1);
  const double kf = tail_value(ef);
  CHECK(kf >= 0.45);
  CHECK(kf <= 0.52);

  auto quad = fn_quad1(1.0);
  auto Sq = solution_set(quad, quad.box, 1e-6, SubdiffKind::Regular, 1001);
  auto eq = estimate_kappa_subreg(quad, kZero1, Sq, geometric_radii(0.5));
  CHECK(eq.verdict == TrendVerdict::Finite);
  const double kq = tail_value(eq);
  CHECK(kq >= 0.40);
  CHECK(kq <= 0.52);

  SolutionSetApprox empty;
  empty.spacing = 0.01;
  CHECK_THROWS_AS(
      (void)estimate_kappa_subreg(quad, kZero1, empty, geometric_radii(0.5)),
      PreconditionError);
}

TEST_CASE("growth certificate toward the cloud passes below the true rate") {
  auto flat = fn_flat_well();
  auto Sf = solution_set(flat, flat.box, 1e-3, SubdiffKind::Regular, 1001);
  auto pass = check_growth_to_solution_set(flat, kZero1, Sf, 1.9, 1.5, 801);
  CHECK(pass.verdict == Verdict::Pass);
  CHECK(pass.passed());
  auto fail = check_growth_to_solution_set(flat, kZero1, Sf, 2.5, 1.5, 801);
  CHECK(fail.verdict == Verdict::Fail);
  REQUIRE(fail.conditions.size() == 1);
  CHECK(fail.conditions[0].margin < 0.0);
  CHECK(fail.conditions[0].witness.has_value());

  auto quad = fn_quad1(1.0);
  auto Sq = solution_set(quad, quad.box, 1e-6, SubdiffKind::Regular, 1001);
  CHECK(check_growth_to_solution_set(quad, kZero1, Sq, 1.9, 0.5, 801).passed());
  CHECK(!check_growth_to_solution_set(quad, kZero1, Sq, 2.5, 0.5, 801).passed());

  const std::string csv = certificate_to_csv(pass);
  CHECK(csv.rfind("clause,condition,pass,margin,witness,note\n", 0) == 0);
  CHECK(csv.find("GROWTH_SET") != std::string::npos);
}

TEST_CASE("set mapping parsing, evaluation, and validation") {
  auto F = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["2*x1"]})js");
  CHECK(F.values(0.5) == std::vector<double>{1.0});

  auto G = SetMapSpec::parse_text(
      R"js({"kind": "interval", "lo": "abs(x1)", "hi": "-abs(x1)", "samples": 5})js");
  auto vals = G.values(-2.0);
  REQUIRE(vals.size() == 5);
  CHECK(vals.front() == doctest::Approx(-2.0));
  CHECK(vals.back() == doctest::Approx(2.0));

  CHECK(SetMapSpec::parse_text(F.str()).str() == F.str());

  CHECK_THROWS_AS((void)SetMapSpec::parse_text("not json"), ArgumentError);
  CHECK_THROWS_AS((void)SetMapSpec::parse_text(R"js({"kind": "mystery"})js"),
                  ArgumentError);
  CHECK_THROWS_AS((void)SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": []})js"),
                  ArgumentError);
  CHECK_THROWS_AS((void)SetMapSpec::parse_text(R"js({"kind": "interval", "lo": "x1"})js"),
                  ArgumentError);
}

TEST_CASE("perturbation certificate: single-valued tilts within the allowance") {
  auto F = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["2*x1"]})js");

  auto G0 = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["0"]})js");
  auto cert0 = perturbation_check(F, G0, 0.5, 0.0, 1.0, 0.0);
  CHECK(cert0.passed());
  double measured = -1.0;
  for (const auto& [k, v] : cert0.params)
    if (k == "measured_modulus") measured = v;
  CHECK(measured >= 0.45);
  CHECK(measured <= 0.51);

  auto Gh = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["0.5*x1"]})js");
  auto cert1 = perturbation_check(F, Gh, 0.5, 0.5, 1.0, 0.0);
  CHECK(cert1.passed());
  measured = -1.0;
  for (const auto& [k, v] : cert1.params)
    if (k == "measured_modulus") measured = v;
  CHECK(measured >= 0.35);
  CHECK(measured <= 0.41);
}

TEST_CASE("perturbation certificate: interval perturbation at the sharp bound") {
  auto F = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["2*x1"]})js");
  auto G = SetMapSpec::parse_text(
      R"js({"kind": "interval", "lo": "-abs(x1)", "hi": "abs(x1)", "samples": 9})js");
  auto cert = perturbation_check(F, G, 0.5, 1.0, 1.0, 0.0);
  CHECK(cert.passed());
  for (const auto& c : cert.conditions) CHECK(c.pass);
}

TEST_CASE("perturbation certificate rejects oversize perturbations") {
  auto F = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["2*x1"]})js");
  auto Gbig = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["2*x1"]})js");
  CHECK_THROWS_AS((void)perturbation_check(F, Gbig, 0.5, 0.5, 1.0, 0.0),
                  PreconditionError);
  auto G0 = SetMapSpec::parse_text(R"js({"kind": "exprs", "exprs": ["0"]})js");
  CHECK_THROWS_AS((void)perturbation_check(F, G0, 0.5, 2.0, 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS((void)perturbation_check(F, G0, 0.5, 3.0, 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS((void)perturbation_check(F, G0, -1.0, 0.0, 1.0, 0.0), ArgumentError);
}

TEST_CASE("equivalence on a quadratic: both directions consistent, product near one") {
  auto f = fn_quad2(1.0);
  EquivalenceParams ep;
  ep.eps = 0.5;
  ep.grid = 16;
  ep.kappa.dirs = 16;
  ep.kappa.shells = 3;
  auto rep = check_equivalence(f, kZero2, ep);
  CHECK(rep.minimizer_ok);
  CHECK(row_named(rep, "subreg-implies-growth").verdict == "CONSISTENT");
  CHECK(row_named(rep, "growth-implies-subreg").verdict == "CONSISTENT");
  CHECK(row_named(rep, "hypothesis-audit").verdict == "NOT_APPLICABLE");
  REQUIRE(rep.product.has_value());
  CHECK(*rep.product == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("equivalence on the separable kink square: consistent with kink error") {
  auto f = fn_l1sq();
  EquivalenceParams ep;
  ep.eps = 0.5;
  ep.grid = 32;
  ep.kappa.dirs = 16;
  ep.kappa.shells = 3;
  auto rep = check_equivalence(f, kZero2, ep);
  CHECK(rep.minimizer_ok);
  CHECK(rep.alpha.verdict == TrendVerdict::Finite);
  CHECK(rep.alpha.extrapolated.value() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rep.kappa.tail_stable);
  CHECK(row_named(rep, "subreg-implies-growth").verdict == "CONSISTENT");
  CHECK(row_named(rep, "growth-implies-subreg").verdict == "CONSISTENT");
  REQUIRE(rep.product.has_value());
  CHECK(*rep.product >= 0.9);
  CHECK(*rep.product <= 1.1);
}

TEST_CASE("equivalence audit blames the descent direction at a non-minimizer") {
  auto f = fn_xabsx();
  EquivalenceParams ep;
  ep.eps = 0.25;
  ep.grid = 33;
  auto rep = check_equivalence(f, kZero1, ep);
  CHECK(!rep.minimizer_ok);
  REQUIRE(rep.minimizer_witness.has_value());
  CHECK(rep.minimizer_witness->x[0] < 0.0);
  CHECK(row_named(rep, "minimizer-precheck").verdict == "HYPOTHESIS_FAILED");
  CHECK(row_named(rep, "subreg-implies-growth").verdict == "NOT_APPLICABLE");
  CHECK(rep.alpha.verdict == TrendVerdict::Degenerate);
}

TEST_CASE("equivalence audit blames graph discontinuity past the jump") {
  auto f = fn_jump_quartic();
  EquivalenceParams ep;
  ep.eps = 0.25;
  ep.grid = 33;
  auto rep = check_equivalence(f, kZero1, ep);
  CHECK(rep.minimizer_ok);
  CHECK(rep.alpha.extrapolated.value() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rep.kappa.verdict == TrendVerdict::Divergent);
  REQUIRE(rep.continuity.has_value());
  CHECK(!rep.continuity->continuous);
  double last_gap = 0.0;
  for (const auto& r : rep.continuity->rows)
    if (r.found) last_gap = r.gap;
  CHECK(last_gap >= 0.9);
  const auto& audit = row_named(rep, "hypothesis-audit");
  CHECK(audit.verdict == "EXPLAINED");
  CHECK(audit.detail.find("continuity") != std::string::npos);
  CHECK(row_named(rep, "growth-implies-subreg").verdict == "NOT_APPLICABLE");
}

TEST_CASE("equivalence audit blames the declared structure on the oscillating well") {
  auto f = fn_oscillating_well();
  EquivalenceParams ep;
  ep.eps = 0.01;
  ep.grid = 33;
  auto rep = check_equivalence(f, kZero1, ep);
  CHECK(rep.minimizer_ok);
  CHECK(rep.alpha.extrapolated.value() >= 2.9);
  CHECK(rep.kappa.verdict == TrendVerdict::Divergent);
  const auto& audit = row_named(rep, "hypothesis-audit");
  CHECK(audit.verdict == "EXPLAINED");
  CHECK(audit.detail.find("semialgebraic") != std::string::npos);
  CHECK(!rep.product.has_value());
}

TEST_CASE("estimates are monotone under probe refinement on nested grids") {
  auto f = from_json_text(
      R"js({"dim": 1, "pieces": [{"body": "x1^2*(1 + 0.5*sin(3*x1))"}]})js");
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t grid : {17u, 33u, 65u}) {
    auto est = estimate_alpha(f, kZero1, 0.25, grid);
    REQUIRE(est.verdict == TrendVerdict::Finite);
    CHECK(est.extrapolated.value() <= prev + 1e-12);
    prev = est.extrapolated.value();
  }

  auto jumpy = fn_jump_quartic();
  double kprev = 0.0;
  for (std::size_t scan : {17u, 33u, 65u}) {
    KappaParams kp;
    kp.scan = scan;
    kp.refine = false;
    auto est = estimate_kappa_strong(jumpy, kZero1, geometric_radii(0.25, 6),
                                     SubdiffKind::Limiting, kp);
    double worst = 0.0;
    for (const auto& rv : est.per_radius) worst = std::max(worst, rv.value);
    CHECK(worst >= kprev - 1e-12);
    kprev = worst;
  }
}

TEST_CASE("kappa runs are deterministic") {
  auto f = fn_l1sq();
  KappaParams kp;
  kp.dirs = 16;
  kp.shells = 3;
  auto a = estimate_kappa_strong(f, kZero2, geometric_radii(0.5, 4),
                                 SubdiffKind::Limiting, kp);
  auto b = estimate_kappa_strong(f, kZero2, geometric_radii(0.5, 4),
                                 SubdiffKind::Limiting, kp);
  REQUIRE(a.per_radius.size() == b.per_radius.size());
  for (std::size_t i = 0; i < a.per_radius.size(); ++i) {
    CHECK(a.per_radius[i].value == b.per_radius[i].value);
    REQUIRE(a.per_radius[i].witness.has_value());
    REQUIRE(b.per_radius[i].witness.has_value());
    CHECK(a.per_radius[i].witness->x == b.per_radius[i].witness->x);
  }
  CHECK(modulus_to_csv(a) == modulus_to_csv(b));
}

TEST_CASE("radial profile on quadratics aligns multiplier and subgradient") {
  auto f = fn_quad2(1.0);
  auto prof = radial_profile(f, kZero2, {0.5, 0.25}, 64);
  REQUIRE(prof.rows.size() == 2);
  for (const auto& row : prof.rows) {
    REQUIRE(row.phi.finite());
    CHECK(row.phi.value() ==
          doctest::Approx(row.radius * row.radius).epsilon(1e-12));
    REQUIRE(row.argmin.has_value());
    REQUIRE(row.lambda.has_value());
    CHECK(*row.lambda == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(row.multiplier_gap <= 1e-9);
  }
}

TEST_CASE("radial profile on the kink square finds the axis argmin") {
  auto f = fn_l1sq();
  auto prof = radial_profile(f, kZero2, {0.1}, 64);
  REQUIRE(prof.rows.size() == 1);
  const auto& row = prof.rows[0];
  REQUIRE(row.phi.finite());
  CHECK(row.phi.value() == doctest::Approx(0.01).epsilon(1e-12));
  REQUIRE(row.argmin.has_value());
  CHECK(std::min(std::fabs((*row.argmin)[0]), std::fabs((*row.argmin)[1])) <= 1e-12);
  REQUIRE(row.lambda.has_value());
  CHECK(*row.lambda == doctest::Approx(2.0).epsilon(0.06));
  CHECK(row.multiplier_gap <= 1e-9);
}

TEST_CASE("radial profile reports the oscillation depth and infinite spheres") {
  auto osc = fn_oscillating_well();
  auto prof = radial_profile(osc, kZero1, {0.01}, 8);
  REQUIRE(prof.rows.size() == 1);
  REQUIRE(prof.rows[0].phi.finite());
  const double q = prof.rows[0].phi.value() / 1e-4;
  CHECK(q >= 1.5);
  CHECK(q <= 2.5);

  auto boxed = fn_boxed_quad();
  auto prof2 = radial_profile(boxed, kZero1, {1.5, 0.5}, 8);
  REQUIRE(prof2.rows.size() == 2);
  CHECK(!prof2.rows[0].phi.finite());
  CHECK(!prof2.rows[0].argmin.has_value());
  CHECK(!prof2.rows[0].lambda.has_value());
  REQUIRE(prof2.rows[1].phi.finite());
  CHECK(prof2.rows[1].phi.value() == doctest::Approx(0.25).epsilon(1e-12));

  const std::string csv = radial_profile_to_csv(prof2);
  CHECK(csv.rfind("radius,phi,argmin_x1,lambda,multiplier_gap\n", 0) == 0);
  CHECK(csv.find("inf") != std::string::npos);
}

TEST_CASE("modulus CSV lists one row per radius with witnesses") {
  auto f = fn_quad1(1.0);
  auto est = estimate_kappa_strong(f, kZero1, geometric_radii(0.5, 4));
  const std::string csv = modulus_to_csv(est);
  CHECK(csv.rfind("radius,value,raw,samples,witness_x1,witness_numer,witness_denom\n",
                  0) == 0);
  std::size_t lines = 0;
  for (char ch : csv)
    if (ch == '\n') lines += 1;
  CHECK(lines == est.per_radius.size() + 1);
}
