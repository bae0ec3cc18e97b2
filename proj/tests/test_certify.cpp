#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "subreg/certificate.hpp"
#include "subreg/certify.hpp"
#include "subreg/errors.hpp"
#include "subreg/piecewise.hpp"

using namespace subreg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PiecewiseFn from_json_text(const std::string& text) {
  return PiecewiseFn::from_json(nlohmann::json::parse(text));
}

PiecewiseFn fn_quad1() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "x1^2"}]})js");
}

PiecewiseFn fn_quad1_sa() {
  return from_json_text(R"js({
    "dim": 1,
    "flags": {"claims_semialgebraic": true, "claims_lsc": true},
    "pieces": [{"body": "x1^2"}]})js");
}

PiecewiseFn fn_xabsx_sa() {
  return from_json_text(R"js({
    "dim": 1,
    "flags": {"claims_semialgebraic": true, "claims_lsc": true},
    "pieces": [{"body": "x1*abs(x1)"}]})js");
}

PiecewiseFn fn_xabsx() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "x1*abs(x1)"}]})js");
}

PiecewiseFn fn_pow32() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "x1*sqrt(abs(x1))"}]})js");
}

PiecewiseFn fn_l1sq_sa() {
  return from_json_text(R"js({
    "dim": 2,
    "flags": {"claims_semialgebraic": true, "claims_lsc": true},
    "pieces": [{"body": "(abs(x1) + abs(x2))^2"}]})js");
}

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

PiecewiseFn fn_quad2_iso() {
  return from_json_text(R"js({"dim": 2, "pieces": [{"body": "x1^2 + x2^2"}]})js");
}

PiecewiseFn fn_quad2_aniso() {
  return from_json_text(R"js({"dim": 2, "pieces": [{"body": "x1^2 + 0.25*x2^2"}]})js");
}

PiecewiseFn fn_quad2_coupled() {
  return from_json_text(R"js({"dim": 2, "pieces": [{"body": "x1^2 + x1*x2 + x2^2"}]})js");
}

PiecewiseFn fn_saddle_axis() {
  return from_json_text(R"js({"dim": 2, "pieces": [{"body": "x1^2 - x2^2"}]})js");
}

PiecewiseFn fn_saddle_diag() {
  return from_json_text(R"js({"dim": 2, "pieces": [{"body": "2*x1*x2"}]})js");
}

PiecewiseFn fn_concave2() {
  return from_json_text(R"js({"dim": 2, "pieces": [{"body": "-0.5*(x1^2 + x2^2)"}]})js");
}

PiecewiseFn fn_neg_quad1() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "-(x1^2)"}]})js");
}

PiecewiseFn fn_steep_concave1() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "-1.5*x1^2"}]})js");
}

PiecewiseFn fn_quartic1() {
  return from_json_text(R"js({"dim": 1, "pieces": [{"body": "x1^4"}]})js");
}

double param_of(const Certificate& cert, const std::string& key) {
  for (const auto& [k, v] : cert.params)
    if (k == key) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

const Certificate* find_cert(const std::vector<Certificate>& certs,
                             const std::string& clause, double r) {
  for (const auto& c : certs)
    if (c.clause == clause && param_of(c, "r") == r) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("certify: default grids") {
  const std::vector<double> rs = default_r_list();
  REQUIRE(rs.size() == 6);
  CHECK(rs.front() == 0.125);
  CHECK(rs.back() == 4.0);
  const std::vector<double> lams = default_lambda_grid();
  REQUIRE(lams.size() == 33);
  CHECK(lams.front() == doctest::Approx(1e-3));
  CHECK(lams.back() == doctest::Approx(1e2));
  for (std::size_t i = 1; i < lams.size(); ++i) CHECK(lams[i] > lams[i - 1]);
}

TEST_CASE("certify: necessary conditions pass on a strong quadratic minimum") {
  const PiecewiseFn f = fn_quad1_sa();
  const auto certs = necessary_conditions(f, Vec{0.0});
  REQUIRE(certs.size() == 2 * default_r_list().size());
  for (const auto& c : certs) {
    CAPTURE(c.clause);
    CAPTURE(param_of(c, "r"));
    CHECK(c.verdict == Verdict::Pass);
    CHECK_FALSE(c.advisory);
    CHECK_FALSE(c.hypotheses.empty());
  }
  const Certificate* b1 = find_cert(certs, "NEC_B", 1.0);
  REQUIRE(b1 != nullptr);
  for (const auto& rec : b1->conditions) CHECK(rec.margin == kInf);
}

TEST_CASE("certify: NEC_B refutes x*abs(x) at r=1 with an exact margin") {
  const PiecewiseFn f = fn_xabsx_sa();
  const auto certs = necessary_conditions(f, Vec{0.0});
  const Certificate* b1 = find_cert(certs, "NEC_B", 1.0);
  REQUIRE(b1 != nullptr);
  CHECK(b1->verdict == Verdict::Fail);
  CHECK_FALSE(b1->advisory);
  REQUIRE_FALSE(b1->conditions.empty());
  const ConditionRecord& smallest = b1->conditions.back();
  CHECK_FALSE(smallest.pass);
  CHECK(smallest.margin == doctest::Approx(-0.5));
  REQUIRE(smallest.witness.has_value());
  CHECK(f.eval(*smallest.witness).value() < f.eval(Vec{0.0}).value());
}

TEST_CASE("certify: NEC_A divergence at r=2 refutes x*abs(x)") {
  const PiecewiseFn f = fn_xabsx_sa();
  const auto certs = necessary_conditions(f, Vec{0.0});
  const Certificate* a1 = find_cert(certs, "NEC_A", 1.0);
  REQUIRE(a1 != nullptr);
  CHECK(a1->verdict == Verdict::Pass);
  const Certificate* a2 = find_cert(certs, "NEC_A", 2.0);
  REQUIRE(a2 != nullptr);
  CHECK(a2->verdict == Verdict::Fail);
  CHECK_FALSE(a2->advisory);
  REQUIRE(a2->conditions.size() == 1);
  CHECK(a2->conditions.front().margin == -kInf);
  CHECK(a2->summary.find("zero denominator") != std::string::npos);
}

TEST_CASE("certify: NEC_B margins increase with r and flip at the threshold") {
  const PiecewiseFn f = fn_xabsx_sa();
  const auto certs = necessary_conditions(f, Vec{0.0});
  const Certificate* b_half = find_cert(certs, "NEC_B", 0.5);
  const Certificate* b_one = find_cert(certs, "NEC_B", 1.0);
  const Certificate* b_two = find_cert(certs, "NEC_B", 2.0);
  REQUIRE(b_half != nullptr);
  REQUIRE(b_one != nullptr);
  REQUIRE(b_two != nullptr);
  const double m_half = b_half->conditions.back().margin;
  const double m_one = b_one->conditions.back().margin;
  const double m_two = b_two->conditions.back().margin;
  CHECK(m_half == doctest::Approx(-1.5));
  CHECK(m_one == doctest::Approx(-0.5));
  CHECK(m_two == doctest::Approx(0.0));
  CHECK(m_half < m_one);
  CHECK(m_one < m_two);
  CHECK(b_half->verdict == Verdict::Fail);
  CHECK(b_two->verdict == Verdict::Pass);
}

TEST_CASE("certify: refutation downgraded to advisory without hypotheses") {
  const PiecewiseFn f = fn_oscillating_well();
  CertifyParams params;
  params.r_list = {0.125};
  const auto certs = necessary_conditions(f, Vec{0.0}, params);
  const Certificate* a = find_cert(certs, "NEC_A", 0.125);
  REQUIRE(a != nullptr);
  CHECK(a->verdict == Verdict::Inconclusive);
  CHECK(a->advisory);
  CHECK(a->summary.find("advisory") != std::string::npos);
  bool noted = false;
  for (const auto& h : a->hypotheses)
    noted = noted || h.find("declared false") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("certify: necessary conditions on the 2-D kinked quadratic") {
  const PiecewiseFn f = fn_l1sq_sa();
  CertifyParams params;
  params.r_list = {0.5};
  const auto certs = necessary_conditions(f, Vec(2), params);
  REQUIRE(certs.size() == 2);
  const Certificate* a = find_cert(certs, "NEC_A", 0.5);
  const Certificate* b = find_cert(certs, "NEC_B", 0.5);
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  CHECK(a->verdict == Verdict::Pass);
  CHECK(b->verdict == Verdict::Pass);
}

TEST_CASE("certify: sufficient condition passes on x^2 with a recorded pair") {
  const PiecewiseFn f = fn_quad1();
  const Certificate cert = sufficient_condition(f, Vec{0.0});
  CHECK(cert.verdict == Verdict::Pass);
  CHECK(param_of(cert, "r") == 0.0);
  const double lam = param_of(cert, "lambda");
  CHECK(lam > 1.85);
  CHECK(lam < 1.95);
  REQUIRE(cert.conditions.size() == 15);
  const ConditionRecord& cross = cert.conditions.back();
  CHECK(cross.id.find("alpha") != std::string::npos);
  CHECK(cross.pass);
  CHECK(cross.margin == doctest::Approx(2.0).epsilon(0.05));
  CHECK(cert.summary.find("lambda=") != std::string::npos);
}

TEST_CASE("certify: sufficient condition fails on the odd 3/2 power via the gauge") {
  const PiecewiseFn f = fn_pow32();
  const Certificate cert = sufficient_condition(f, Vec{0.0});
  CHECK(cert.verdict == Verdict::Fail);
  CHECK(std::isnan(param_of(cert, "lambda")));
  REQUIRE(cert.conditions.size() == 14);
  for (const auto& rec : cert.conditions) {
    CAPTURE(rec.id);
    if (rec.id.find("gauge") != std::string::npos) {
      CHECK_FALSE(rec.pass);
    } else {
      CHECK(rec.pass);
      CHECK(rec.margin > 0);
    }
  }
}

TEST_CASE("certify: sufficient condition trade-off on x*abs(x)") {
  const PiecewiseFn f = fn_xabsx();
  const Certificate cert = sufficient_condition(f, Vec{0.0});
  CHECK(cert.verdict == Verdict::Fail);
  REQUIRE(cert.conditions.size() == 14);
  const ConditionRecord& slope_r0 = cert.conditions[0];
  const ConditionRecord& gauge_r0 = cert.conditions[1];
  CHECK(slope_r0.id.find("r=0") != std::string::npos);
  CHECK(slope_r0.pass);
  CHECK_FALSE(gauge_r0.pass);
  CHECK(gauge_r0.margin == -kInf);
  const ConditionRecord& slope_r1 = cert.conditions[8];
  const ConditionRecord& gauge_r1 = cert.conditions[9];
  CHECK(slope_r1.id.find("r=1") != std::string::npos);
  CHECK_FALSE(slope_r1.pass);
  CHECK(gauge_r1.pass);
  CHECK(gauge_r1.margin == doctest::Approx(0.0));
}

TEST_CASE("certify: sufficient condition passes on the 2-D kinked quadratic") {
  const PiecewiseFn f = fn_l1sq_sa();
  const Certificate cert = sufficient_condition(f, Vec(2));
  CHECK(cert.verdict == Verdict::Pass);
  CHECK(param_of(cert, "r") == 0.0);
  const double lam = param_of(cert, "lambda");
  CHECK(lam > 1.3);
  CHECK(lam < 2.0);
  bool skipped_noted = false;
  for (const auto& rec : cert.conditions)
    skipped_noted = skipped_noted || rec.note.find("skipped") != std::string::npos;
  CHECK(skipped_noted);
  const ConditionRecord& cross = cert.conditions.back();
  CHECK(cross.id.find("alpha") != std::string::npos);
  CHECK(cross.pass);
}

TEST_CASE("certify: sufficient condition is deterministic") {
  const PiecewiseFn f = fn_xabsx();
  const Certificate a = sufficient_condition(f, Vec{0.0});
  const Certificate b = sufficient_condition(f, Vec{0.0});
  CHECK(a.summary == b.summary);
  CHECK(certificate_to_csv(a) == certificate_to_csv(b));
}

TEST_CASE("certify: precondition and argument errors") {
  const PiecewiseFn f = fn_quad1();
  CHECK_THROWS_AS(necessary_conditions(f, Vec{0.3}), PreconditionError);
  CHECK_THROWS_AS(necessary_conditions(f, Vec{0.0, 0.0}), ArgumentError);
  CertifyParams no_r;
  no_r.r_list.clear();
  CHECK_THROWS_AS(sufficient_condition(f, Vec{0.0}, no_r), ArgumentError);
  CertifyParams bad_lambda;
  bad_lambda.lambda_grid = {0.0, 1.0};
  CHECK_THROWS_AS(sufficient_condition(f, Vec{0.0}, bad_lambda), ArgumentError);
}

TEST_CASE("certify: c2 agreement on definite quadratics") {
  const std::vector<PiecewiseFn> definite = {fn_quad1(), fn_quad2_iso(),
                                             fn_quad2_aniso(), fn_quad2_coupled()};
  for (const auto& f : definite) {
    const auto certs = c2_conditions(f, Vec(f.dim));
    REQUIRE(certs.size() == 2);
    CAPTURE(certs[0].summary);
    CAPTURE(certs[1].summary);
    CHECK(certs[0].clause == "C2_PSD_EQ");
    CHECK(certs[0].verdict == Verdict::Pass);
    CHECK(certs[1].clause == "C2_PD_EQ");
    CHECK(certs[1].verdict == Verdict::Pass);
    CHECK(param_of(certs[1], "lambda") > 0);
  }
}

TEST_CASE("certify: c2 agreement on indefinite and concave quadratics") {
  const std::vector<PiecewiseFn> indefinite = {fn_neg_quad1(), fn_saddle_axis(),
                                               fn_saddle_diag(), fn_concave2()};
  for (const auto& f : indefinite) {
    const auto certs = c2_conditions(f, Vec(f.dim));
    REQUIRE(certs.size() == 2);
    CAPTURE(certs[0].summary);
    CAPTURE(certs[1].summary);
    CHECK(certs[0].verdict == Verdict::Fail);
    CHECK(certs[1].verdict == Verdict::Fail);
    CHECK(certs[0].conditions.front().margin < 0);
  }
}

TEST_CASE("certify: c2 flat quartic separates psd from pd") {
  const auto certs = c2_conditions(fn_quartic1(), Vec{0.0});
  REQUIRE(certs.size() == 2);
  CHECK(certs[0].verdict == Verdict::Pass);
  CHECK(certs[1].verdict == Verdict::Fail);
  CHECK(certs[1].conditions.front().margin == doctest::Approx(0.0));
  bool r0_fails = false;
  for (const auto& rec : certs[1].conditions)
    if (rec.id.find("r=0.") == std::string::npos &&
        rec.id.find("r=0") != std::string::npos)
      r0_fails = !rec.pass;
  CHECK(r0_fails);
}

TEST_CASE("certify: c2 mismatch stays inconclusive") {
  const auto certs = c2_conditions(fn_steep_concave1(), Vec{0.0});
  REQUIRE(certs.size() == 2);
  CHECK(certs[0].verdict == Verdict::Inconclusive);
  CHECK(certs[0].summary.find("disagree") != std::string::npos);
  CHECK(certs[1].verdict == Verdict::Fail);
}

TEST_CASE("certify: c2 rejects nonsmooth and noncritical inputs") {
  CHECK_THROWS_AS(c2_conditions(fn_xabsx(), Vec{0.0}), UnsupportedStructure);
  CHECK_THROWS_AS(c2_conditions(fn_quad1(), Vec{0.5}), PreconditionError);
  CHECK_THROWS_AS(c2_conditions(fn_quad1(), Vec{0.0, 0.0}), ArgumentError);
}

TEST_CASE("certify: csv export covers every condition row") {
  const PiecewiseFn f = fn_xabsx_sa();
  CertifyParams params;
  params.r_list = {1.0};
  const auto certs = necessary_conditions(f, Vec{0.0}, params);
  const Certificate* b = find_cert(certs, "NEC_B", 1.0);
  REQUIRE(b != nullptr);
  const std::string csv = certificate_to_csv(*b);
  const std::size_t lines =
      static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == b->conditions.size() + 1);
  CHECK(csv.find("gauge(x; xbar - x)") != std::string::npos);
}
