#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncert/system.hpp"
#include "testutil.hpp"

using namespace ncert;
using namespace testutil;

namespace {
SamplingPolicy periodic_policy() {
    SamplingPolicy p;
    p.samples = 1001;
    p.period = 6.283185307179586;
    return p;
}
}  // namespace

TEST_CASE("oscillating reference system validates") {
    const auto sys = make_oscillating_system(4);
    const ValidationReport r = validate(sys, periodic_policy());
    CHECK(r.passed);
    // sampled sup of ||A|| is close to the analytic value n*gamma = 0.01
    double a_sup = -1.0;
    for (const auto& f : r.findings)
        if (f.quantity == "A_sup") a_sup = f.value;
    CHECK(a_sup == doctest::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("identity neutral coefficient is rejected") {
    auto sys = scalar_system("1", "t - 0.5", 0.5, "-1", "t", 0.0);
    const ValidationReport r = validate(sys, periodic_policy());
    CHECK(!r.passed);
    bool found = false;
    for (const auto& f : r.findings)
        if (f.severity == Severity::Error &&
            f.message.find(">= 1 violates") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("advanced argument is rejected") {
    auto sys = scalar_system("0", "t", 0.0, "-1", "t + 0.1", 0.1);
    const ValidationReport r = validate(sys, periodic_policy());
    CHECK(!r.passed);
    bool found = false;
    for (const auto& f : r.findings)
        if (f.severity == Severity::Error && f.message.find("negative delay") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("lag exceeding its declared bound is rejected") {
    auto sys = scalar_system("0", "t", 0.0, "-1", "t - 2", 1.0);
    const ValidationReport r = validate(sys, periodic_policy());
    CHECK(!r.passed);
}

TEST_CASE("sampled sup above a declared bound is an error") {
    auto sys = scalar_system("0", "t", 0.0, "-5", "t - 1", 1.0);
    sys.terms[0].B.declared_sup = 1.0;  // wrong: the actual sup is 5
    const ValidationReport r = validate(sys, periodic_policy());
    CHECK(!r.passed);
}

TEST_CASE("near-tight declared bound yields a warning") {
    auto sys = scalar_system("0", "t", 0.0, "-1", "t - 1", 1.0);
    sys.terms[0].B.declared_sup = 1.0 + 1e-6;
    const ValidationReport r = validate(sys, periodic_policy());
    CHECK(r.passed);
    bool warned = false;
    for (const auto& f : r.findings)
        if (f.severity == Severity::Warning) warned = true;
    CHECK(warned);
}

TEST_CASE("declared bounds are validated in the chosen norm") {
    // asymmetric matrix: inf-norm sup 2.25, one-norm sup 2.5
    auto sys = scalar_system("0", "t", 0.0, "-1", "t - 0.5", 0.5);
    sys.n = 2;
    sys.A = ncert::MatrixFunction::zero(2);
    ncert::Mat B(2);
    B(0, 0) = -1.0; B(0, 1) = 0.5; B(1, 0) = -0.25; B(1, 1) = -2.0;
    sys.terms[0].B = testutil::const_mat(B);

    sys.terms[0].B.declared_sup = 2.3;  // fine for inf, wrong for one
    CHECK(validate(sys, periodic_policy(), ncert::NormKind::Inf).passed);
    CHECK(!validate(sys, periodic_policy(), ncert::NormKind::One).passed);

    sys.terms[0].B.declared_sup = 2.5;  // exactly the one-norm sup: warning only
    const ValidationReport one = validate(sys, periodic_policy(), ncert::NormKind::One);
    CHECK(one.passed);
    bool warned = false;
    for (const auto& f : one.findings)
        if (f.severity == Severity::Warning) warned = true;
    CHECK(warned);
}

TEST_CASE("effective delay bounds") {
    const auto sys = make_oscillating_system(3);
    const DelayBounds b = effective_delay_bounds(sys);
    CHECK(b.sigma == 0.1);
    REQUIRE(b.tau.size() == 2);
    CHECK(b.tau[0] == 0.1);
    CHECK(b.tau[1] == 0.1);
    CHECK(b.tau_max == 0.1);

    auto constant = scalar_system("0", "t", 0.0, "-1", "t - 0.25", 0.25);
    CHECK(effective_delay_bounds(constant).tau[0] == 0.25);
}

TEST_CASE("validation is pure and repeatable") {
    const auto sys = make_oscillating_system(2);
    const ValidationReport a = validate(sys, periodic_policy());
    const ValidationReport b = validate(sys, periodic_policy());
    REQUIRE(a.findings.size() == b.findings.size());
    for (std::size_t i = 0; i < a.findings.size(); ++i) {
        CHECK(a.findings[i].message == b.findings[i].message);
        CHECK(a.findings[i].value == b.findings[i].value);
    }
}

TEST_CASE("validated systems evaluate everywhere on the grid") {
    const auto sys = make_oscillating_system(3);
    REQUIRE(validate(sys, periodic_policy()).passed);
    const auto ts = sample_grid(periodic_policy().window_from(sys.t0), 101);
    Mat scratch(sys.n);
    for (double t : ts) {
        CHECK_NOTHROW(sys.A.eval_into(t, scratch));
        for (const auto& term : sys.terms) {
            CHECK_NOTHROW(term.B.eval_into(t, scratch));
            CHECK_NOTHROW(eval(*term.h.h, t));
        }
        CHECK_NOTHROW(eval(*sys.g.h, t));
    }
}
