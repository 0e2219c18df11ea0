#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncert/system.hpp"

namespace ncert {

// Selectable stability tests. thm31/thm31a need a decay rate lambda and yield
// solution bounds; thm32/thm32a are rate-free; cor410 is the scalar form,
// cor41 the non-delayed-term form, cor33a the entrywise-domination form;
// prop1/prop2/prop3 are the comparison baselines for autonomous systems.
enum class TestId { thm31, thm31a, thm32, thm32a, cor33a, cor41, cor410, prop1, prop2, prop3 };

std::string_view test_id_name(TestId id);
TestId parse_test_id(std::string_view name);

enum class Verdict { certified, not_certified, inapplicable };
std::string_view verdict_name(Verdict v);

struct Provenance {
    enum class Kind { Declared, Sampled, Computed };
    Kind kind = Kind::Computed;
    Window window;
    int samples = 0;
    std::vector<std::string> inputs;

    static Provenance declared() { return {Kind::Declared, {}, 0, {}}; }
    static Provenance sampled(Window w, int samples) { return {Kind::Sampled, w, samples, {}}; }
    static Provenance computed(std::vector<std::string> inputs) {
        return {Kind::Computed, {}, 0, std::move(inputs)};
    }
    static Provenance from(const SupEstimate& e) {
        return e.method == SupMethod::Declared ? declared() : sampled(e.window, e.samples);
    }
};

struct ConstantValue {
    double value = 0.0;
    Provenance prov;
};

// One inequality of a test: slack > 0 means satisfied with that much room.
struct InequalitySlack {
    std::string name;
    double slack = 0.0;
};

struct Certificate {
    TestId test_id = TestId::thm32;
    Verdict verdict = Verdict::inapplicable;
    std::vector<std::pair<std::string, ConstantValue>> constants;
    std::vector<InequalitySlack> inequalities;
    // Slack of the binding inequality of the best route; positive iff certified.
    double margin = 0.0;
    // True when any quantity entering the verdict came from grid sampling
    // rather than a declared analytic bound; such verdicts are rigorous only
    // up to grid resolution.
    bool grid_certified = false;
    std::string note;

    void set_constant(const std::string& name, double value, Provenance prov);
    const ConstantValue* find_constant(const std::string& name) const;
    double constant(const std::string& name) const;  // throws if absent
};

struct DeclaredBounds {
    std::optional<double> A_sup;
    std::vector<std::optional<double>> Bk_sup;
    std::optional<double> B_sum_sup;
    // Bound on sup_t mu(B(t)) with B = sum_k B_k; must be negative to be of
    // any use. Enables the fully analytic certificate route.
    std::optional<double> mu_B_sup;
    // Entrywise-dominating constant matrices |A(t)| <= A_bar etc.
    std::optional<Mat> A_bar;
    std::vector<Mat> Bk_bar;
    std::optional<Mat> B_bar;

    bool empty() const {
        return !A_sup && Bk_sup.empty() && !B_sum_sup && !mu_B_sup && !A_bar && Bk_bar.empty() &&
               !B_bar;
    }
};

struct CertifyOptions {
    NormKind norm = NormKind::Inf;
    SamplingPolicy sampling;
    DeclaredBounds declared;
    std::optional<double> lambda;  // consumed by the rate-based tests
    // Evaluate the comparison baseline prop1 with the delayed-term norm in
    // the numerator instead of the non-delayed one (see README).
    bool prop1_alternate_numerator = false;
    // Slacks below this are treated as boundary cases and never certified.
    double boundary_slack = 1e-9;
};

// P(t) = sum_k e^{lambda (t-h_k(t))} B_k(t) - lambda e^{lambda (t-g(t))} A(t) + lambda E.
// Its measure staying below a negative constant is the core rate condition.
Mat build_P(const NeutralSystem& sys, double lambda, double t);

// Rate-based test: checks mu(P(t)) <= -beta plus a contraction constant
// (two routes, M1 and M2); the certificate carries both routes and is
// certified when either applies with its side conditions. M0 uses the
// smaller certified contraction constant.
Certificate certify_with_rate(const NeutralSystem& sys, double lambda, const CertifyOptions& opts);

// Rate-free test on B(t) = sum_k B_k(t): two routes with different
// denominators; certified when either holds.
Certificate certify_rate_free(const NeutralSystem& sys, const CertifyOptions& opts);

// For systems with exactly one non-delayed term (lag bound 0) and one delayed
// term; evaluates both published conditions of that specialization.
Certificate certify_nondelay_form(const NeutralSystem& sys, const CertifyOptions& opts);

// Comparison baselines for autonomous systems with constant delays.
std::pair<Certificate, Certificate> baseline_km_neutral(const NeutralSystem& sys,
                                                        const CertifyOptions& opts);
// Baseline for x'(t) = B(t) x(t-h) with constant h.
Certificate baseline_km_delay(const NeutralSystem& sys, const CertifyOptions& opts);

// Dispatch by test id; thm31/thm31a require opts.lambda.
Certificate run_test(const NeutralSystem& sys, TestId id, const CertifyOptions& opts);

// Explicit exponential bound realized by a certified rate-based test:
//   ||x(t)|| <= M0 e^{-lambda (t-t0)} [ c_x0 ||x(t0)|| + c_psi ||psi||
//               + sum_k c_phi[k] ||phi||_k ] + c_f sup_{[t0,t]} ||f||.
struct ExponentialBound {
    double lambda = 0.0;
    double M0 = 1.0;
    double c_x0 = 1.0;
    double c_psi = 0.0;
    std::vector<double> c_phi;
    double c_f = 0.0;  // already includes the M0 factor

    double value(double t_minus_t0, double x0_norm, double psi_norm,
                 std::span<const double> phi_norms, double f_sup) const;
};

// Requires a certificate from certify_with_rate with verdict certified.
ExponentialBound solution_bound(const NeutralSystem& sys, const Certificate& cert, NormKind norm);

struct RateSearchResult {
    double lambda_star = 0.0;
    Certificate certificate;
    ExponentialBound bound;
};

// Scans a log-uniform lambda grid over (0, lambda_max], keeps the largest
// certified rate, then bisects against the smallest failing rate above it to
// absolute tolerance 1e-6. Throws NoCertifiableRate if every grid rate fails.
RateSearchResult max_decay_rate(const NeutralSystem& sys, const CertifyOptions& opts,
                                double lambda_max, int grid_points);

}  // namespace ncert
