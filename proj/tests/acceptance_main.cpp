// Acceptance suite: each criterion prints one [PASS]/[FAIL] line; the process
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ncert/config.hpp"
#include "ncert/simulate.hpp"
#include "ncert/sweep.hpp"
#include "testutil.hpp"

using namespace ncert;
using namespace testutil;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

bool check(bool ok, std::string& detail, const std::string& msg) {
    if (!ok) detail += (detail.empty() ? "" : "; ") + msg;
    return ok;
}

std::string fixture(const char* name) {
    return std::string(NCERT_FIXTURES_DIR) + "/" + name;
}

// --------------------------------------------------------------------------
// 1. amplitude thresholds of the oscillating scalar equation
// --------------------------------------------------------------------------
bool criterion1(std::string& detail) {
    const double t_start = now_seconds();
    SweepSpec spec;
    spec.parameter = "nu";
    spec.lo = 0.01;
    spec.hi = 0.2;
    spec.points = 39;
    spec.refine = true;
    const SweepResult result = run_sweep(read_config_json(fixture("example410.json")), spec);
    double th32 = -1.0, th32a = -1.0;
    for (const auto& th : result.thresholds) {
        if (th.test == TestId::thm32) th32 = th.value;
        if (th.test == TestId::thm32a) th32a = th.value;
    }
    const double elapsed = now_seconds() - t_start;
    bool ok = true;
    ok &= check(std::fabs(th32 - 1.0 / 16.5) <= 1e-4, detail,
                "first-route threshold " + std::to_string(th32));
    ok &= check(std::fabs(th32a - 1.0 / 8.2) <= 1e-4, detail,
                "second-route threshold " + std::to_string(th32a));
    ok &= check(elapsed < 5.0, detail, "runtime " + std::to_string(elapsed) + " s");
    return ok;
}

// --------------------------------------------------------------------------
// 2. reference certificate constants from declared bounds
// --------------------------------------------------------------------------
bool criterion2(std::string& detail) {
    const double t_start = now_seconds();
    RunConfig cfg = load_config(fixture("example2.json"));
    const Certificate cert = certify_with_rate(cfg.system, 0.06, cfg.certify);
    bool ok = check(cert.verdict == Verdict::certified, detail, "not certified");
    if (!ok) return false;

    const double sup_mu_P = cert.constant("sup_mu_P");
    const double M1 = cert.constant("M1");
    const double M0 = cert.constant("M0");
    ok &= check(sup_mu_P <= -0.2393 && std::fabs(sup_mu_P - (-0.23939)) <= 1e-3, detail,
                "sup_mu_P " + std::to_string(sup_mu_P));
    ok &= check(M1 > 0.45 && M1 <= 0.5, detail, "M1 " + std::to_string(M1));
    ok &= check(M0 <= 2.0, detail, "M0 " + std::to_string(M0));

    const ExponentialBound bound = solution_bound(cfg.system, cert, cfg.certify.norm);
    double phi_sum = 0.0;
    for (double v : bound.c_phi) phi_sum += v;
    ok &= check(std::fabs(bound.c_psi - 0.00102) / 0.00102 <= 0.01, detail,
                "c_psi " + std::to_string(bound.c_psi));
    ok &= check(std::fabs(phi_sum - 0.102) / 0.102 <= 0.01, detail,
                "sum c_phi " + std::to_string(phi_sum));
    ok &= check(std::fabs(bound.c_f - 33.6) / 33.6 <= 0.01, detail,
                "c_f " + std::to_string(bound.c_f));
    const double elapsed = now_seconds() - t_start;
    ok &= check(elapsed < 1.0, detail, "runtime " + std::to_string(elapsed) + " s");
    return ok;
}

// --------------------------------------------------------------------------
// 3. certified bound dominates integrated trajectories
// --------------------------------------------------------------------------
bool criterion3(std::string& detail) {
    const double t_start = now_seconds();
    const auto sys = make_oscillating_system(3);
    const auto opts = oscillating_options();
    const Certificate cert = certify_with_rate(sys, 0.06, opts);
    if (!check(cert.verdict == Verdict::certified, detail, "certificate failed")) return false;
    const ExponentialBound bound = solution_bound(sys, cert, opts.norm);

    std::mt19937_64 rng(424242);
    bool ok = true;
    const auto random_exprs = [&](int n) {
        std::vector<ExprPtr> out;
        for (int i = 0; i < n; ++i) {
            const double c0 = rand_in(rng, -1.0, 1.0);
            const double c1 = rand_in(rng, -1.0, 1.0);
            const double w = rand_in(rng, 0.5, 3.0);
            const double p = rand_in(rng, 0.0, 6.28);
            std::ostringstream s;
            s << c0 << " + " << c1 << "*sin(" << w << "*t + " << p << ")";
            out.push_back(ex(s.str()));
        }
        return out;
    };

    for (int draw = 0; draw < 21 && ok; ++draw) {
        InitialData init;
        init.phi = random_exprs(3);
        init.psi = random_exprs(3);
        NeutralSystem run_sys = sys;
        if (draw == 20) {
            // one non-homogeneous run with constant forcing
            run_sys.f = {c(rand_in(rng, -0.5, 0.5)), c(rand_in(rng, -0.5, 0.5)),
                         c(rand_in(rng, -0.5, 0.5))};
        }
        const Trajectory traj = integrate(run_sys, init, 50.0, 1e-3);
        const DataNorms norms = compute_data_norms(run_sys, init, opts.norm, 1001);
        const BoundCheck chk = verify_bound(traj, run_sys, bound, norms, opts.norm);
        ok &= check(chk.max_ratio <= 1.0, detail,
                    "draw " + std::to_string(draw) + " max_ratio " +
                        std::to_string(chk.max_ratio));
    }
    const double elapsed = now_seconds() - t_start;
    ok &= check(elapsed < 60.0, detail, "runtime " + std::to_string(elapsed) + " s");
    return ok;
}

// --------------------------------------------------------------------------
// 4. matrix-measure axioms
// --------------------------------------------------------------------------
bool criterion4(std::string& detail) {
    std::mt19937_64 rng(17);
    bool ok = true;
    for (int n : {1, 2, 5, 10}) {
        for (int it = 0; it < 1000 && ok; ++it) {
            const Mat C = random_dyadic_mat(rng, n);
            const Mat D = random_dyadic_mat(rng, n);
            for (NormKind k : {NormKind::Inf, NormKind::One}) {
                ok &= check(std::fabs(matrix_measure(C, k)) <= matrix_norm(C, k), detail,
                            "bound axiom");
                Mat sum = C;
                sum += D;
                ok &= check(matrix_measure(sum, k) <=
                                matrix_measure(C, k) + matrix_measure(D, k) + 1e-12,
                            detail, "subadditivity");
                for (double lam : {0.5, 2.0, 10.0}) {
                    Mat scaled = C;
                    scaled *= lam;
                    ok &= check(matrix_measure(scaled, k) == lam * matrix_measure(C, k), detail,
                                "homogeneity");
                }
            }
            const double mu = matrix_measure(C, NormKind::Inf);
            const double e1 = std::fabs(matrix_measure_limit(C, NormKind::Inf, 1e-6) - mu);
            const double e2 = std::fabs(matrix_measure_limit(C, NormKind::Inf, 5e-7) - mu);
            ok &= check(e1 <= 1e-4, detail, "limit error " + std::to_string(e1));
            ok &= check(e2 <= 0.5 * e1 + 1e-8, detail, "limit error halving");
        }
    }
    return ok;
}

// --------------------------------------------------------------------------
// 5. fundamental-matrix exponential estimate for random systems
// --------------------------------------------------------------------------
bool criterion5(std::string& detail) {
    std::mt19937_64 rng(23);
    bool ok = true;
    for (int it = 0; it < 50 && ok; ++it) {
        const int n = 1 + int(rng() % 3);
        // Amplitudes keep mu(C(t)) <= 0 (diag <= -0.3 row-wise, off-diagonal
        // sums <= 0.3), so the measure integral never exceeds 0 and the ratio
        // check below implies the additive form ||Y|| <= e^{int mu} + 1e-3.
        MatrixFunction C;
        C.n = n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                std::ostringstream s;
                if (i == j)
                    s << -rand_in(rng, 0.6, 2.0) << " + " << rand_in(rng, -0.3, 0.3) << "*sin("
                      << rand_in(rng, 0.3, 3.0) << "*t)";
                else
                    s << rand_in(rng, -0.15, 0.15) << "*cos(" << rand_in(rng, 0.3, 3.0) << "*t)";
                C.entries.push_back(ex(s.str()));
            }
        const double worst = coppel_check(C, 0.0, 10.0, 1e-3, NormKind::Inf);
        ok &= check(worst <= 1.0 + 1e-3, detail,
                    "it " + std::to_string(it) + " ratio " + std::to_string(worst));
    }
    return ok;
}

// --------------------------------------------------------------------------
// 6. published specializations agree with the general routes
// --------------------------------------------------------------------------

NeutralSystem random_decaying_system(std::mt19937_64& rng, int n, int m, bool with_neutral) {
    NeutralSystem sys;
    sys.n = n;
    sys.t0 = 0.0;
    sys.A.n = n;
    for (int i = 0; i < n * n; ++i)
        sys.A.entries.push_back(with_neutral ? c(rand_in(rng, -0.15, 0.15) / n) : c(0.0));
    sys.g.h = ex("t - 0.3");
    sys.g.tau = 0.3;
    for (int k = 0; k < m; ++k) {
        Mat D(n);
        for (int i = 0; i < n; ++i) {
            D(i, i) = -rand_in(rng, 0.4, 1.2);
            for (int j = 0; j < n; ++j)
                if (j != i) D(i, j) = rand_in(rng, -1.0, 1.0) * 0.2 * std::fabs(D(i, i)) / n;
        }
        DelayTerm term;
        term.B.n = n;
        const double w = rand_in(rng, 0.5, 3.0);
        const double amp = rand_in(rng, 0.0, 0.4);
        for (int i = 0; i < n * n; ++i) {
            std::ostringstream s;
            s << D.a[static_cast<std::size_t>(i)] << "*(1 + " << amp << "*sin(" << w << "*t))";
            term.B.entries.push_back(ex(s.str()));
        }
        const double tau = rand_in(rng, 0.0, 0.15);
        term.h.tau = tau;
        std::ostringstream h;
        h << "t - " << tau;
        term.h.h = tau == 0.0 ? tv() : ex(h.str());
        sys.terms.push_back(std::move(term));
    }
    return sys;
}

bool criterion6(std::string& detail) {
    std::mt19937_64 rng(31);
    CertifyOptions opts;
    opts.sampling.samples = 401;
    opts.sampling.window_length = 25.0;
    bool ok = true;

    const auto bracket_of = [](const Certificate& cert, std::size_t m) {
        double br = cert.constant("ratio_A_over_muB");
        for (std::size_t k = 1; k <= m; ++k)
            br += cert.constant("tau_" + std::to_string(k)) *
                  cert.constant("ratio_B" + std::to_string(k) + "_over_muB");
        return br;
    };

    for (int it = 0; it < 100 && ok; ++it) {
        // one-delay specialization
        {
            const auto sys = random_decaying_system(rng, 1 + int(rng() % 3), 1, true);
            const Certificate cert = certify_rate_free(sys, opts);
            const double lhs33 = bracket_of(cert, 1) * cert.constant("B1_sup");
            const double general = cert.constant("lhs_thm32") * (1.0 - cert.constant("A_sup"));
            ok &= check(std::fabs(lhs33 - general) <= 1e-12, detail, "one-delay specialization");
        }
        // no-neutral-part specialization, both conditions
        {
            const auto sys = random_decaying_system(rng, 1 + int(rng() % 3), 1 + int(rng() % 2),
                                                    false);
            const std::size_t m = sys.terms.size();
            const Certificate cert = certify_rate_free(sys, opts);
            double sum_b = 0.0, tau_b = 0.0;
            for (std::size_t k = 1; k <= m; ++k) {
                sum_b += cert.constant("B" + std::to_string(k) + "_sup");
                tau_b += cert.constant("tau_" + std::to_string(k)) *
                         cert.constant("B" + std::to_string(k) + "_sup");
            }
            const double br = bracket_of(cert, m);
            ok &= check(std::fabs(sum_b * br - cert.constant("lhs_thm32")) <= 1e-12, detail,
                        "no-neutral condition 1");
            if (cert.find_constant("lhs_thm32a")) {
                const double lhs2 = cert.constant("B_sum_sup") * br;
                const double general = cert.constant("lhs_thm32a") * (1.0 - tau_b);
                ok &= check(std::fabs(lhs2 - general) <= 1e-12, detail, "no-neutral condition 2");
            }
        }
        // single delay and no neutral part
        {
            auto sys = random_decaying_system(rng, 1 + int(rng() % 3), 1, false);
            const Certificate cert = certify_rate_free(sys, opts);
            const double lhs35 = cert.constant("tau_1") * cert.constant("ratio_B1_over_muB") *
                                 cert.constant("B1_sup");
            ok &= check(std::fabs(lhs35 - cert.constant("lhs_thm32")) <= 1e-12, detail,
                        "single-delay no-neutral");
        }
        // scalar forms against both routes
        {
            const auto sys = random_decaying_system(rng, 1, 1 + int(rng() % 2), true);
            const Certificate scalar = run_test(sys, TestId::cor410, opts);
            const Certificate general = certify_rate_free(sys, opts);
            const double lhs411 = scalar.constant("lhs_cond411");
            ok &= check(std::fabs(lhs411 - general.constant("lhs_thm32") *
                                               (1.0 - general.constant("A_sup"))) <= 1e-12,
                        detail, "scalar condition vs first route");
            if (scalar.find_constant("lhs_cond412") && general.find_constant("lhs_thm32a")) {
                const double lhs412 = scalar.constant("lhs_cond412");
                const double thr = scalar.constant("threshold_cond412");
                ok &= check(std::fabs(lhs412 - general.constant("lhs_thm32a") * thr) <= 1e-12,
                            detail, "scalar condition vs second route");
            }
        }
    }

    // constant-coefficient agreement between the non-delayed form and prop2
    for (int it = 0; it < 100 && ok; ++it) {
        NeutralSystem sys;
        sys.n = 1;
        sys.t0 = 0.0;
        sys.A = MatrixFunction::constant(mat1(rand_in(rng, -0.8, 0.8)));
        sys.g.h = ex("t - 0.5");
        sys.g.tau = 0.5;
        DelayTerm t0term;
        t0term.B = MatrixFunction::constant(mat1(-rand_in(rng, 0.2, 3.0)));
        t0term.h.h = tv();
        t0term.h.tau = 0.0;
        DelayTerm t2;
        t2.B = MatrixFunction::constant(mat1(rand_in(rng, -1.5, 1.5)));
        const double h2 = rand_in(rng, 0.0, 1.0);
        std::ostringstream h;
        h << "t - " << h2;
        t2.h.h = h2 == 0.0 ? tv() : ex(h.str());
        t2.h.tau = h2;
        sys.terms.push_back(std::move(t0term));
        sys.terms.push_back(std::move(t2));

        const Certificate c41 = certify_nondelay_form(sys, opts);
        const Certificate p2 = run_test(sys, TestId::prop2, opts);
        double q_slack = -1.0, decay_slack = -1.0;
        for (const auto& s : c41.inequalities) {
            if (s.name == "cond42.neutral_delay_contraction") q_slack = s.slack;
            if (s.name == "cond42.decay_dominates") decay_slack = s.slack;
        }
        const bool c42 = q_slack >= opts.boundary_slack && decay_slack >= opts.boundary_slack;
        ok &= check(c42 == (p2.verdict == Verdict::certified), detail,
                    "constant-coefficient verdict mismatch at it " + std::to_string(it));
    }
    return ok;
}

// --------------------------------------------------------------------------
// 7. the small-rate limit of the rate-based constant matches the rate-free one
// --------------------------------------------------------------------------
bool criterion7(std::string& detail) {
    std::mt19937_64 rng(37);
    CertifyOptions opts;
    opts.sampling.samples = 401;
    opts.sampling.window_length = 25.0;
    bool ok = true;
    for (int it = 0; it < 50 && ok; ++it) {
        const auto sys =
            random_decaying_system(rng, 1 + int(rng() % 3), 1 + int(rng() % 2), true);
        const Certificate rate = certify_with_rate(sys, 1e-8, opts);
        const Certificate free = certify_rate_free(sys, opts);
        if (!rate.find_constant("M1") || !free.find_constant("lhs_thm32")) {
            ok &= check(false, detail, "constants missing at it " + std::to_string(it));
            break;
        }
        const double diff = std::fabs(rate.constant("M1") - free.constant("lhs_thm32"));
        ok &= check(diff <= 1e-5, detail,
                    "it " + std::to_string(it) + " difference " + std::to_string(diff));
    }
    return ok;
}

// --------------------------------------------------------------------------
// 8. integrator order and exact first-interval fixtures
// --------------------------------------------------------------------------
bool criterion8(std::string& detail) {
    bool ok = true;
    {
        const auto sys = make_oscillating_system(4);
        const auto init = make_oscillating_initial(4);
        std::vector<std::vector<double>> ends;
        for (double h : {1e-2, 5e-3, 2.5e-3}) {
            const Trajectory traj = integrate(sys, init, 10.0, h);
            const auto last = traj.x_at(traj.times.size() - 1);
            ends.emplace_back(last.begin(), last.end());
        }
        double d1 = 0.0, d2 = 0.0;
        for (int j = 0; j < 4; ++j) {
            d1 = std::max(d1, std::fabs(ends[0][j] - ends[1][j]));
            d2 = std::max(d2, std::fabs(ends[1][j] - ends[2][j]));
        }
        const double ratio = d1 / d2;
        ok &= check(ratio >= 3.2 && ratio <= 4.8, detail,
                    "convergence ratio " + std::to_string(ratio));
    }
    {
        const auto sys = scalar_system("0", "t", 0.0, "-1", "t - 1", 1.0);
        InitialData init;
        init.phi = {ex("1")};
        const Trajectory traj = integrate(sys, init, 1.0, 1e-3);
        ok &= check(std::fabs(traj.x.back()) <= 1e-9, detail,
                    "delay fixture end " + std::to_string(traj.x.back()));
    }
    {
        const auto sys = scalar_system("0.5", "t - 1", 1.0, "0", "t", 0.0);
        InitialData init;
        init.phi = {ex("0")};
        init.psi = {ex("1")};
        const Trajectory traj = integrate(sys, init, 1.0, 1e-3);
        ok &= check(std::fabs(traj.x.back() - 0.5) <= 1e-9, detail,
                    "neutral fixture end " + std::to_string(traj.x.back()));
    }
    return ok;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"amplitude thresholds 1/16.5 and 1/8.2 within 1e-4, under 5 s", criterion1},
        {"reference certificate: sup_mu_P, M1, M0, bound coefficients", criterion2},
        {"bound dominates 21 integrated trajectories over [0, 50]", criterion3},
        {"matrix-measure axioms on 1000 random matrices per size", criterion4},
        {"fundamental-matrix estimate on 50 random systems", criterion5},
        {"specializations agree with the general routes to 1e-12", criterion6},
        {"small-rate limit matches the rate-free condition to 1e-5", criterion7},
        {"integrator order bracket and exact first-interval fixtures", criterion8},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const double t0 = now_seconds();
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed = now_seconds() - t0;
        std::printf("[%s] criterion %zu: %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name.c_str(), elapsed, detail.empty() ? "" : " -- ",
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
