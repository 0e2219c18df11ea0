#include "ncert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDeclSlack = 1e-9;
}  // namespace

std::string_view test_id_name(TestId id) {
    switch (id) {
        case TestId::thm31: return "thm31";
        case TestId::thm31a: return "thm31a";
        case TestId::thm32: return "thm32";
        case TestId::thm32a: return "thm32a";
        case TestId::cor33a: return "cor33a";
        case TestId::cor41: return "cor41";
        case TestId::cor410: return "cor410";
        case TestId::prop1: return "prop1";
        case TestId::prop2: return "prop2";
        case TestId::prop3: return "prop3";
    }
    return "?";
}

TestId parse_test_id(std::string_view name) {
    for (TestId id : {TestId::thm31, TestId::thm31a, TestId::thm32, TestId::thm32a,
                      TestId::cor33a, TestId::cor41, TestId::cor410, TestId::prop1,
                      TestId::prop2, TestId::prop3})
        if (test_id_name(id) == name) return id;
    throw Error("unknown test id '" + std::string(name) + "'");
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::certified: return "certified";
        case Verdict::not_certified: return "not_certified";
        case Verdict::inapplicable: return "inapplicable";
    }
    return "?";
}

void Certificate::set_constant(const std::string& name, double value, Provenance prov) {
    for (auto& [n, c] : constants) {
        if (n == name) {
            c = {value, std::move(prov)};
            return;
        }
    }
    constants.emplace_back(name, ConstantValue{value, std::move(prov)});
}

const ConstantValue* Certificate::find_constant(const std::string& name) const {
    for (const auto& [n, c] : constants)
        if (n == name) return &c;
    return nullptr;
}

double Certificate::constant(const std::string& name) const {
    const ConstantValue* c = find_constant(name);
    if (!c) throw Error("certificate has no constant '" + name + "'");
    return c->value;
}

Mat build_P(const NeutralSystem& sys, double lambda, double t) {
    if (lambda < 0.0) throw Error("build_P requires lambda >= 0");
    Mat P(sys.n);
    Mat scratch(sys.n);
    for (const auto& term : sys.terms) {
        const double lag = t - eval(*term.h.h, t);
        term.B.eval_into(t, scratch);
        P.add_scaled(scratch, std::exp(lambda * lag));
    }
    const double lag_g = t - eval(*sys.g.h, t);
    sys.A.eval_into(t, scratch);
    P.add_scaled(scratch, -lambda * std::exp(lambda * lag_g));
    for (int i = 0; i < sys.n; ++i) P(i, i) += lambda;
    return P;
}

namespace {

// ---------------------------------------------------------------------------
// One pass over the sampling grid computing every pointwise quantity the
// certificate formulas consume. The quotient sups are pointwise-then-sup.
// ---------------------------------------------------------------------------

struct ScanResult {
    Window window;
    int samples = 0;
    double A_norm_max = 0.0;
    std::vector<double> B_norm_max;
    double B_sum_norm_max = 0.0;
    double mu_B_max = -kInf;
    bool muB_all_negative = true;
    double ratio_A_muB = 0.0;
    std::vector<double> ratio_B_muB;

    bool has_lambda = false;
    double mu_S_max = -kInf;  // S(t) = sum_k e^{lambda lag_k} B_k(t)
    double mu_P_max = -kInf;
    bool muP_all_negative = true;
    double ratio_A_muP = 0.0;
    std::vector<double> ratio_B_muP;
};

ScanResult scan_grid(const NeutralSystem& sys, NormKind norm, Window w, int samples,
                     std::optional<double> lambda) {
    ScanResult r;
    r.window = w;
    r.samples = samples;
    const std::size_t m = sys.terms.size();
    r.B_norm_max.assign(m, 0.0);
    r.ratio_B_muB.assign(m, 0.0);
    r.ratio_B_muP.assign(m, 0.0);
    r.has_lambda = lambda.has_value();

    const auto ts = sample_grid(w, samples);
    Mat A_t(sys.n), B_t(sys.n), B_sum(sys.n), P(sys.n);
    std::vector<double> B_norm_t(m);

    for (double t : ts) {
        sys.A.eval_into(t, A_t);
        const double a_norm = matrix_norm(A_t, norm);
        r.A_norm_max = std::max(r.A_norm_max, a_norm);

        B_sum.set_zero();
        if (lambda) P.set_zero();
        for (std::size_t k = 0; k < m; ++k) {
            sys.terms[k].B.eval_into(t, B_t);
            B_norm_t[k] = matrix_norm(B_t, norm);
            r.B_norm_max[k] = std::max(r.B_norm_max[k], B_norm_t[k]);
            B_sum += B_t;
            if (lambda) {
                const double lag = t - eval(*sys.terms[k].h.h, t);
                P.add_scaled(B_t, std::exp(*lambda * lag));
            }
        }
        r.B_sum_norm_max = std::max(r.B_sum_norm_max, matrix_norm(B_sum, norm));
        const double mu_b = matrix_measure(B_sum, norm);
        r.mu_B_max = std::max(r.mu_B_max, mu_b);
        if (mu_b < 0.0) {
            r.ratio_A_muB = std::max(r.ratio_A_muB, a_norm / -mu_b);
            for (std::size_t k = 0; k < m; ++k)
                r.ratio_B_muB[k] = std::max(r.ratio_B_muB[k], B_norm_t[k] / -mu_b);
        } else {
            r.muB_all_negative = false;
        }

        if (lambda) {
            r.mu_S_max = std::max(r.mu_S_max, matrix_measure(P, norm));
            const double lag_g = t - eval(*sys.g.h, t);
            P.add_scaled(A_t, -*lambda * std::exp(*lambda * lag_g));
            for (int i = 0; i < sys.n; ++i) P(i, i) += *lambda;
            const double mu_p = matrix_measure(P, norm);
            r.mu_P_max = std::max(r.mu_P_max, mu_p);
            if (mu_p < 0.0) {
                r.ratio_A_muP = std::max(r.ratio_A_muP, a_norm / -mu_p);
                for (std::size_t k = 0; k < m; ++k)
                    r.ratio_B_muP[k] = std::max(r.ratio_B_muP[k], B_norm_t[k] / -mu_p);
            } else {
                r.muP_all_negative = false;
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Declared-vs-sampled resolution. Declared analytic bounds win; sampled sups
// are the fallback and mark the certificate grid-certified.
// ---------------------------------------------------------------------------

struct Quantity {
    double value = 0.0;
    Provenance prov;
    bool sampled() const { return prov.kind == Provenance::Kind::Sampled; }
};

struct BaseQuantities {
    ScanResult scan;
    Quantity A_sup;
    std::vector<Quantity> B_sup;
    Quantity B_sum_sup;
    Quantity mu_B;  // resolved sup of mu(B(t))
    Quantity ratio_A;
    std::vector<Quantity> ratio_B;
    bool ratios_valid = false;
    double sigma = 0.0;
    std::vector<double> tau;
    std::string note;

    double beta() const { return -mu_B.value; }
};

std::optional<double> declared_B_sup(const CertifyOptions& opts, const NeutralSystem& sys,
                                     std::size_t k) {
    if (k < opts.declared.Bk_sup.size() && opts.declared.Bk_sup[k]) return opts.declared.Bk_sup[k];
    return sys.terms[k].B.declared_sup;
}

BaseQuantities resolve_base(const NeutralSystem& sys, const CertifyOptions& opts,
                            ScanResult scan) {
    BaseQuantities q;
    q.sigma = sys.sigma();
    for (const auto& term : sys.terms) q.tau.push_back(term.h.tau);

    const Provenance sampled = Provenance::sampled(scan.window, scan.samples);
    // A declared bound contradicted by the grid (e.g. stated for a different
    // norm) is never consumed; the sampled value takes over with a note.
    const auto resolve = [&](const std::optional<double>& declared, double sampled_value,
                             const char* name) {
        if (declared && sampled_value > *declared + kDeclSlack) {
            q.note += std::string("declared ") + name +
                      " contradicted on the sample grid (max sampled " +
                      std::to_string(sampled_value) + "); using the sampled value. ";
            return Quantity{sampled_value, sampled};
        }
        return declared ? Quantity{*declared, Provenance::declared()}
                        : Quantity{sampled_value, sampled};
    };
    const std::optional<double> a_decl =
        opts.declared.A_sup ? opts.declared.A_sup : sys.A.declared_sup;
    q.A_sup = resolve(a_decl, scan.A_norm_max, "A_sup");
    for (std::size_t k = 0; k < sys.terms.size(); ++k)
        q.B_sup.push_back(resolve(declared_B_sup(opts, sys, k), scan.B_norm_max[k],
                                  ("B" + std::to_string(k + 1) + "_sup").c_str()));
    q.B_sum_sup = resolve(opts.declared.B_sum_sup, scan.B_sum_norm_max, "B_sum_sup");

    bool mu_declared = false;
    if (opts.declared.mu_B_sup) {
        if (scan.mu_B_max > *opts.declared.mu_B_sup + kDeclSlack) {
            q.note += "declared mu_B bound contradicted on the sample grid (max sampled " +
                      std::to_string(scan.mu_B_max) + "); using the sampled value. ";
            q.mu_B = {scan.mu_B_max, sampled};
        } else {
            q.mu_B = {*opts.declared.mu_B_sup, Provenance::declared()};
            mu_declared = true;
        }
    } else {
        q.mu_B = {scan.mu_B_max, sampled};
    }

    if (q.mu_B.value < 0.0) {
        q.ratios_valid = true;
        if (mu_declared) {
            const double beta = -q.mu_B.value;
            q.ratio_A = {q.A_sup.value / beta, Provenance::computed({"A_sup", "mu_B_sup"})};
            for (std::size_t k = 0; k < sys.terms.size(); ++k)
                q.ratio_B.push_back({q.B_sup[k].value / beta,
                                     Provenance::computed({"B" + std::to_string(k + 1) + "_sup",
                                                           "mu_B_sup"})});
        } else {
            q.ratio_A = {scan.ratio_A_muB, sampled};
            for (std::size_t k = 0; k < sys.terms.size(); ++k)
                q.ratio_B.push_back({scan.ratio_B_muB[k], sampled});
        }
    } else {
        q.ratio_B.assign(sys.terms.size(), Quantity{});
    }
    q.scan = std::move(scan);
    return q;
}

struct RateQuantities {
    double lambda = 0.0;
    Quantity mu_P;
    Quantity ratio_A;
    std::vector<Quantity> ratio_B;
    bool ratios_valid = false;
    std::string note;

    double beta() const { return -mu_P.value; }
};

RateQuantities resolve_rate(const NeutralSystem& sys, const BaseQuantities& base,
                            double lambda) {
    RateQuantities q;
    q.lambda = lambda;
    const auto& scan = base.scan;
    const Provenance sampled = Provenance::sampled(scan.window, scan.samples);

    bool use_declared = base.mu_B.prov.kind == Provenance::Kind::Declared;
    if (use_declared && scan.mu_S_max > base.mu_B.value + kDeclSlack) {
        // The analytic chain needs mu of the exponentially weighted sum to stay
        // below the declared mu_B bound; the grid contradicts that here.
        q.note += "declared mu_B bound does not dominate the weighted-sum measure on the "
                  "grid; using sampled mu(P). ";
        use_declared = false;
    }
    if (use_declared) {
        const double els = std::exp(lambda * base.sigma);
        q.mu_P = {base.mu_B.value + lambda * els * base.A_sup.value + lambda,
                  Provenance::computed({"mu_B_sup", "A_sup", "lambda", "sigma"})};
        if (q.mu_P.value < 0.0) {
            const double beta = -q.mu_P.value;
            q.ratios_valid = true;
            q.ratio_A = {base.A_sup.value / beta, Provenance::computed({"A_sup", "sup_mu_P"})};
            for (std::size_t k = 0; k < sys.terms.size(); ++k)
                q.ratio_B.push_back({base.B_sup[k].value / beta,
                                     Provenance::computed({"B" + std::to_string(k + 1) + "_sup",
                                                           "sup_mu_P"})});
        }
    } else {
        q.mu_P = {scan.mu_P_max, sampled};
        if (scan.muP_all_negative) {
            q.ratios_valid = true;
            q.ratio_A = {scan.ratio_A_muP, sampled};
            for (std::size_t k = 0; k < sys.terms.size(); ++k)
                q.ratio_B.push_back({scan.ratio_B_muP[k], sampled});
        }
    }
    if (q.ratio_B.empty()) q.ratio_B.assign(sys.terms.size(), Quantity{});
    return q;
}

// ---------------------------------------------------------------------------
// Route bookkeeping
// ---------------------------------------------------------------------------

struct Route {
    std::string name;
    bool applicable = true;
    std::string why;
    std::vector<InequalitySlack> slacks;

    Route() = default;
    explicit Route(std::string route_name) : name(std::move(route_name)) {}

    double margin() const {
        if (!applicable) return -kInf;
        double m = kInf;
        for (const auto& s : slacks) m = std::min(m, s.slack);
        return m;
    }
    Route& require(std::string ineq, double slack) {
        slacks.push_back({std::move(ineq), slack});
        return *this;
    }
};

Certificate assemble(TestId id, const std::vector<Route>& routes, double boundary) {
    Certificate cert;
    cert.test_id = id;
    bool any_applicable = false;
    double best = -kInf;
    std::string fired;
    for (const auto& r : routes) {
        if (!r.applicable) continue;
        any_applicable = true;
        const double m = r.margin();
        if (m > best) best = m;
        if (m >= boundary && fired.empty()) fired = r.name;
        for (const auto& s : r.slacks)
            cert.inequalities.push_back({r.name + "." + s.name, s.slack});
    }
    if (!any_applicable) {
        cert.verdict = Verdict::inapplicable;
        cert.margin = 0.0;
        std::string why;
        for (const auto& r : routes)
            if (!r.why.empty()) why += r.why + " ";
        cert.note = why;
        return cert;
    }
    cert.margin = best;
    if (best >= boundary) {
        cert.verdict = Verdict::certified;
        cert.note = "certified via " + fired;
    } else {
        cert.verdict = Verdict::not_certified;
        if (best > 0.0)
            cert.note = "boundary - not certified (margin below " + std::to_string(boundary) + ")";
    }
    return cert;
}

void record_quantity(Certificate& cert, const std::string& name, const Quantity& q,
                     bool* grid_used) {
    cert.set_constant(name, q.value, q.prov);
    if (grid_used && q.sampled()) *grid_used = true;
}

void record_base(Certificate& cert, const NeutralSystem& sys, const BaseQuantities& base,
                 bool* grid_used) {
    cert.set_constant("sigma", base.sigma, Provenance::declared());
    for (std::size_t k = 0; k < base.tau.size(); ++k)
        cert.set_constant("tau_" + std::to_string(k + 1), base.tau[k], Provenance::declared());
    record_quantity(cert, "A_sup", base.A_sup, grid_used);
    for (std::size_t k = 0; k < sys.terms.size(); ++k)
        record_quantity(cert, "B" + std::to_string(k + 1) + "_sup", base.B_sup[k], grid_used);
}

// Sum of declared lag bounds weighted by the term sups: recurring subterm.
double tau_weighted_B(const BaseQuantities& base) {
    double s = 0.0;
    for (std::size_t k = 0; k < base.tau.size(); ++k) s += base.tau[k] * base.B_sup[k].value;
    return s;
}

double sum_B_sup(const BaseQuantities& base) {
    double s = 0.0;
    for (const auto& b : base.B_sup) s += b.value;
    return s;
}

double bracket_muB(const BaseQuantities& base) {
    double s = base.ratio_A.value;
    for (std::size_t k = 0; k < base.tau.size(); ++k) s += base.tau[k] * base.ratio_B[k].value;
    return s;
}

// ---------------------------------------------------------------------------
// Rate-free routes
// ---------------------------------------------------------------------------

struct RateFreeEval {
    BaseQuantities base;
    Route route32;
    Route route32a;
    std::optional<double> lhs32, lhs32a, pre32a;
};

RateFreeEval eval_rate_free(const NeutralSystem& sys, const CertifyOptions& opts) {
    RateFreeEval ev;
    const Window w = opts.sampling.window_from(sys.t0);
    ev.base = resolve_base(sys, opts, scan_grid(sys, opts.norm, w, opts.sampling.samples, {}));
    const auto& base = ev.base;

    ev.route32.name = "thm32";
    ev.route32.require("mu_B_negative", base.beta());
    ev.route32.require("neutral_contraction", 1.0 - base.A_sup.value);
    if (base.ratios_valid && base.A_sup.value < 1.0) {
        ev.lhs32 = sum_B_sup(base) / (1.0 - base.A_sup.value) * bracket_muB(base);
        ev.route32.require("contraction", 1.0 - *ev.lhs32);
    }

    ev.route32a.name = "thm32a";
    ev.route32a.require("mu_B_negative", base.beta());
    ev.pre32a = base.A_sup.value + tau_weighted_B(base);
    ev.route32a.require("neutral_delay_contraction", 1.0 - *ev.pre32a);
    if (base.ratios_valid && *ev.pre32a < 1.0) {
        ev.lhs32a = base.B_sum_sup.value / (1.0 - *ev.pre32a) * bracket_muB(base);
        ev.route32a.require("contraction", 1.0 - *ev.lhs32a);
    }
    return ev;
}

void record_rate_free(Certificate& cert, const NeutralSystem& sys, const RateFreeEval& ev,
                      bool want32, bool want32a) {
    bool grid = false;
    record_base(cert, sys, ev.base, &grid);
    record_quantity(cert, "sup_mu_B", ev.base.mu_B, &grid);
    cert.set_constant("beta", ev.base.beta(),
                      Provenance::computed({"sup_mu_B"}));
    if (ev.base.ratios_valid) {
        record_quantity(cert, "ratio_A_over_muB", ev.base.ratio_A, &grid);
        for (std::size_t k = 0; k < sys.terms.size(); ++k)
            record_quantity(cert, "ratio_B" + std::to_string(k + 1) + "_over_muB",
                            ev.base.ratio_B[k], &grid);
    }
    if (want32 && ev.lhs32)
        cert.set_constant("lhs_thm32", *ev.lhs32,
                          Provenance::computed({"B*_sup", "A_sup", "ratio_*_over_muB", "tau_*"}));
    if (want32a && ev.pre32a)
        cert.set_constant("precondition_thm32a", *ev.pre32a,
                          Provenance::computed({"A_sup", "tau_*", "B*_sup"}));
    if (want32a && ev.lhs32a)
        cert.set_constant("lhs_thm32a", *ev.lhs32a,
                          Provenance::computed({"B_sum_sup", "precondition_thm32a",
                                                "ratio_*_over_muB", "tau_*"}));
    if (want32a) record_quantity(cert, "B_sum_sup", ev.base.B_sum_sup, &grid);
    cert.grid_certified = grid;
    if (!ev.base.note.empty()) cert.note += " " + ev.base.note;
}

// ---------------------------------------------------------------------------
// Rate-based routes
// ---------------------------------------------------------------------------

struct RateEval {
    BaseQuantities base;
    RateQuantities rate;
    Route route31;
    Route route31a;
    std::optional<double> M1, M2, pre31a;
    double lambda = 0.0;
};

RateEval eval_with_rate(const NeutralSystem& sys, double lambda, const CertifyOptions& opts) {
    if (!(lambda > 0.0)) throw Error("rate-based certification requires lambda > 0");
    RateEval ev;
    ev.lambda = lambda;
    const Window w = opts.sampling.window_from(sys.t0);
    ev.base = resolve_base(sys, opts, scan_grid(sys, opts.norm, w, opts.sampling.samples, lambda));
    ev.rate = resolve_rate(sys, ev.base, lambda);
    const auto& base = ev.base;
    const auto& rate = ev.rate;

    const double els = std::exp(lambda * base.sigma);
    double numer = lambda + lambda * els * base.A_sup.value;
    double bracket = 0.0;
    double tau_weighted = 0.0;
    for (std::size_t k = 0; k < sys.terms.size(); ++k) {
        const double elt = std::exp(lambda * base.tau[k]);
        numer += elt * base.B_sup[k].value;
        tau_weighted += base.tau[k] * elt * base.B_sup[k].value;
        if (rate.ratios_valid) bracket += rate.ratio_B[k].value * elt * base.tau[k];
    }
    if (rate.ratios_valid) bracket += rate.ratio_A.value * (1.0 + lambda * base.sigma) * els;

    ev.route31.name = "thm31";
    ev.route31.require("mu_P_negative", rate.beta());
    ev.route31.require("neutral_contraction", 1.0 - els * base.A_sup.value);
    if (rate.ratios_valid && els * base.A_sup.value < 1.0) {
        ev.M1 = numer / (1.0 - els * base.A_sup.value) * bracket;
        ev.route31.require("contraction_M1", 1.0 - *ev.M1);
    }

    ev.route31a.name = "thm31a";
    ev.route31a.require("mu_P_negative", rate.beta());
    ev.pre31a = (1.0 + lambda * base.sigma) * els * base.A_sup.value + tau_weighted;
    ev.route31a.require("neutral_delay_contraction", 1.0 - *ev.pre31a);
    if (rate.ratios_valid && *ev.pre31a < 1.0) {
        ev.M2 = numer / (1.0 - *ev.pre31a) * bracket;
        ev.route31a.require("contraction_M2", 1.0 - *ev.M2);
    }
    return ev;
}

void record_rate(Certificate& cert, const NeutralSystem& sys, const RateEval& ev, bool want31,
                 bool want31a, double boundary) {
    bool grid = false;
    cert.set_constant("lambda", ev.lambda, Provenance::declared());
    record_base(cert, sys, ev.base, &grid);
    record_quantity(cert, "sup_mu_P", ev.rate.mu_P, &grid);
    cert.set_constant("beta", ev.rate.beta(), Provenance::computed({"sup_mu_P"}));
    if (ev.rate.ratios_valid) {
        record_quantity(cert, "ratio_A_over_muP", ev.rate.ratio_A, &grid);
        for (std::size_t k = 0; k < sys.terms.size(); ++k)
            record_quantity(cert, "ratio_B" + std::to_string(k + 1) + "_over_muP",
                            ev.rate.ratio_B[k], &grid);
    }
    const Provenance from_rate =
        Provenance::computed({"lambda", "A_sup", "B*_sup", "ratio_*_over_muP", "sigma", "tau_*"});
    if (want31 && ev.M1) cert.set_constant("M1", *ev.M1, from_rate);
    if (want31a && ev.pre31a)
        cert.set_constant("precondition_thm31a", *ev.pre31a,
                          Provenance::computed({"lambda", "A_sup", "B*_sup", "sigma", "tau_*"}));
    if (want31a && ev.M2) cert.set_constant("M2", *ev.M2, from_rate);

    // M0 from the smaller certified contraction constant (tighter bound).
    std::optional<double> best_M;
    if (want31 && ev.M1 && ev.route31.margin() >= boundary) best_M = *ev.M1;
    if (want31a && ev.M2 && ev.route31a.margin() >= boundary)
        best_M = best_M ? std::min(*best_M, *ev.M2) : *ev.M2;
    if (best_M) cert.set_constant("M0", 1.0 / (1.0 - *best_M), Provenance::computed({"M1", "M2"}));
    cert.grid_certified = grid;
    if (!ev.base.note.empty()) cert.note += " " + ev.base.note;
    if (!ev.rate.note.empty()) cert.note += " " + ev.rate.note;
}

// ---------------------------------------------------------------------------
// Shape helpers for the specialized forms
// ---------------------------------------------------------------------------

std::optional<Mat> constant_matrix_value(const MatrixFunction& F, Window w, int samples) {
    if (!F.depends_on_time()) return F.eval(w.lo);
    const auto ts = sample_grid(w, std::min(samples, 201));
    Mat first = F.eval(ts.front());
    Mat scratch(F.n);
    for (double t : ts) {
        F.eval_into(t, scratch);
        for (std::size_t i = 0; i < first.a.size(); ++i)
            if (std::fabs(scratch.a[i] - first.a[i]) >
                1e-12 * std::max(1.0, std::fabs(first.a[i])))
                return std::nullopt;
    }
    return first;
}

std::optional<double> constant_lag_value(const ExprPtr& h, Window w, int samples) {
    const auto ts = sample_grid(w, std::min(samples, 201));
    const double first = ts.front() - eval(*h, ts.front());
    for (double t : ts) {
        const double lag = t - eval(*h, t);
        if (std::fabs(lag - first) > 1e-12 * std::max(1.0, std::fabs(first)))
            return std::nullopt;
    }
    return first;
}

// A system "in non-delayed form": exactly one term with lag bound 0 (the
// non-delayed coefficient) and one genuinely delayed term.
struct NonDelayShape {
    std::size_t idx0 = 0;  // term with tau == 0
    std::size_t idx2 = 0;  // delayed term
    double h2 = 0.0;       // its declared lag bound
};

std::optional<NonDelayShape> match_nondelay_shape(const NeutralSystem& sys) {
    if (sys.terms.size() != 2) return std::nullopt;
    const bool z0 = sys.terms[0].h.tau == 0.0;
    const bool z1 = sys.terms[1].h.tau == 0.0;
    if (z0 == z1) return std::nullopt;
    NonDelayShape s;
    s.idx0 = z0 ? 0 : 1;
    s.idx2 = z0 ? 1 : 0;
    s.h2 = sys.terms[s.idx2].h.tau;
    return s;
}

Certificate inapplicable_certificate(TestId id, std::string why) {
    Certificate cert;
    cert.test_id = id;
    cert.verdict = Verdict::inapplicable;
    cert.note = std::move(why);
    return cert;
}

}  // namespace

Certificate certify_with_rate(const NeutralSystem& sys, double lambda,
                              const CertifyOptions& opts) {
    RateEval ev = eval_with_rate(sys, lambda, opts);
    const bool cert31 = ev.route31.margin() >= opts.boundary_slack;
    const bool cert31a = ev.route31a.margin() >= opts.boundary_slack;
    Certificate cert = assemble(cert31 || !cert31a ? TestId::thm31 : TestId::thm31a,
                                {ev.route31, ev.route31a}, opts.boundary_slack);
    record_rate(cert, sys, ev, true, true, opts.boundary_slack);
    return cert;
}

Certificate certify_rate_free(const NeutralSystem& sys, const CertifyOptions& opts) {
    RateFreeEval ev = eval_rate_free(sys, opts);
    const bool cert32 = ev.route32.margin() >= opts.boundary_slack;
    const bool cert32a = ev.route32a.margin() >= opts.boundary_slack;
    Certificate cert = assemble(cert32 || !cert32a ? TestId::thm32 : TestId::thm32a,
                                {ev.route32, ev.route32a}, opts.boundary_slack);
    record_rate_free(cert, sys, ev, true, true);
    return cert;
}

Certificate certify_nondelay_form(const NeutralSystem& sys, const CertifyOptions& opts) {
    const auto shape = match_nondelay_shape(sys);
    if (!shape)
        return inapplicable_certificate(
            TestId::cor41, "system is not in non-delayed form (needs exactly one term with lag "
                           "bound 0 and one delayed term)");
    const Window w = opts.sampling.window_from(sys.t0);
    BaseQuantities base =
        resolve_base(sys, opts, scan_grid(sys, opts.norm, w, opts.sampling.samples, {}));

    const double a1 = base.A_sup.value;
    const double a0 = base.B_sup[shape->idx0].value;
    const double a2 = base.B_sup[shape->idx2].value;
    const double h2 = shape->h2;
    const double beta = base.beta();
    const double q = a1 + h2 * a2;

    Route r41{"cond41"};
    r41.require("mu_sum_negative", beta);
    r41.require("neutral_contraction", 1.0 - a1);
    std::optional<double> lhs41, lhs42;
    if (beta > 0.0 && a1 < 1.0) {
        lhs41 = -beta + (a0 + a2) * q / (1.0 - a1);
        r41.require("decay_dominates", -*lhs41);
    }
    Route r42{"cond42"};
    r42.require("mu_sum_negative", beta);
    r42.require("neutral_delay_contraction", 1.0 - q);
    if (beta > 0.0 && q < 1.0) {
        lhs42 = base.mu_B.value + base.B_sum_sup.value * q / (1.0 - q);
        r42.require("decay_dominates", -*lhs42);
    }

    Certificate cert = assemble(TestId::cor41, {r41, r42}, opts.boundary_slack);
    bool grid = false;
    record_quantity(cert, "A1_sup", base.A_sup, &grid);
    record_quantity(cert, "A0_sup", base.B_sup[shape->idx0], &grid);
    record_quantity(cert, "A2_sup", base.B_sup[shape->idx2], &grid);
    record_quantity(cert, "A0_plus_A2_sup", base.B_sum_sup, &grid);
    record_quantity(cert, "sup_mu_A0_plus_A2", base.mu_B, &grid);
    cert.set_constant("beta", beta, Provenance::computed({"sup_mu_A0_plus_A2"}));
    cert.set_constant("h2", h2, Provenance::declared());
    if (lhs41)
        cert.set_constant("lhs_cond41", *lhs41,
                          Provenance::computed({"beta", "A0_sup", "A2_sup", "A1_sup", "h2"}));
    if (lhs42)
        cert.set_constant("lhs_cond42", *lhs42,
                          Provenance::computed({"sup_mu_A0_plus_A2", "A0_plus_A2_sup", "A1_sup",
                                                "A2_sup", "h2"}));
    cert.grid_certified = grid;
    if (!base.note.empty()) cert.note += " " + base.note;
    return cert;
}

std::pair<Certificate, Certificate> baseline_km_neutral(const NeutralSystem& sys,
                                                        const CertifyOptions& opts) {
    return {run_test(sys, TestId::prop1, opts), run_test(sys, TestId::prop2, opts)};
}

Certificate baseline_km_delay(const NeutralSystem& sys, const CertifyOptions& opts) {
    return run_test(sys, TestId::prop3, opts);
}

namespace {

Certificate run_prop12(const NeutralSystem& sys, TestId id, const CertifyOptions& opts) {
    const auto shape = match_nondelay_shape(sys);
    if (!shape)
        return inapplicable_certificate(id, "baseline needs one non-delayed and one delayed term");
    const Window w = opts.sampling.window_from(sys.t0);
    const int samples = opts.sampling.samples;
    const auto A1c = constant_matrix_value(sys.A, w, samples);
    const auto A0c = constant_matrix_value(sys.terms[shape->idx0].B, w, samples);
    const auto A2c = constant_matrix_value(sys.terms[shape->idx2].B, w, samples);
    if (!A1c || !A0c || !A2c)
        return inapplicable_certificate(id, "baseline needs constant coefficient matrices");
    const auto lag_g = constant_lag_value(sys.g.h, w, samples);
    const auto lag_h2 = constant_lag_value(sys.terms[shape->idx2].h.h, w, samples);
    if (!lag_g || !lag_h2)
        return inapplicable_certificate(id, "baseline needs constant delays");

    const Provenance from_const = Provenance::computed({"constant coefficients"});
    const double n_a1 = matrix_norm(*A1c, opts.norm);
    const double n_a0 = matrix_norm(*A0c, opts.norm);
    const double n_a2 = matrix_norm(*A2c, opts.norm);
    const double h2 = *lag_h2;

    Certificate cert;
    if (id == TestId::prop1) {
        const double mu_a0 = matrix_measure(*A0c, opts.norm);
        const double numerator_norm = opts.prop1_alternate_numerator ? n_a2 : n_a0;
        Route r{"prop1"};
        r.require("neutral_contraction", 1.0 - n_a1);
        std::optional<double> lhs;
        if (n_a1 < 1.0) {
            lhs = mu_a0 + (numerator_norm + n_a1 * n_a2) / (1.0 - n_a1);
            r.require("decay_dominates", -*lhs);
        }
        cert = assemble(TestId::prop1, {r}, opts.boundary_slack);
        cert.set_constant("mu_A0", mu_a0, from_const);
        cert.set_constant("A0_norm", n_a0, from_const);
        cert.set_constant("A1_norm", n_a1, from_const);
        cert.set_constant("A2_norm", n_a2, from_const);
        if (lhs) cert.set_constant("lhs_prop1", *lhs, from_const);
        if (!opts.prop1_alternate_numerator) {
            // As printed the condition cannot hold for an induced norm, since
            // |mu(A0)| <= ||A0|| forces the left side to be nonnegative.
            cert.note += " anomaly: with an induced norm the printed condition is never "
                         "satisfiable; the alternate-numerator variant replaces ||A0|| by "
                         "||A2|| (opt-in flag).";
        } else {
            cert.note += " evaluated with the alternate ||A2|| numerator variant.";
        }
    } else {
        // Sum in term order so constant-coefficient runs agree bit-for-bit
        // with the corresponding route of certify_nondelay_form.
        Mat sum = sys.terms[0].B.eval(sys.t0);
        sum += sys.terms[1].B.eval(sys.t0);
        const double mu_sum = matrix_measure(sum, opts.norm);
        const double n_sum = matrix_norm(sum, opts.norm);
        const double q = n_a1 + h2 * n_a2;
        Route r{"prop2"};
        r.require("neutral_delay_contraction", 1.0 - q);
        std::optional<double> lhs;
        if (q < 1.0) {
            lhs = mu_sum + n_sum * q / (1.0 - q);
            r.require("decay_dominates", -*lhs);
        }
        cert = assemble(TestId::prop2, {r}, opts.boundary_slack);
        cert.set_constant("mu_A0_plus_A2", mu_sum, from_const);
        cert.set_constant("A0_plus_A2_norm", n_sum, from_const);
        cert.set_constant("A1_norm", n_a1, from_const);
        cert.set_constant("A2_norm", n_a2, from_const);
        cert.set_constant("q", q, from_const);
        if (lhs) cert.set_constant("lhs_prop2", *lhs, from_const);
    }
    cert.set_constant("h2", h2, from_const);
    return cert;
}

Certificate run_prop3(const NeutralSystem& sys, const CertifyOptions& opts) {
    if (sys.terms.size() != 1)
        return inapplicable_certificate(TestId::prop3, "baseline needs exactly one delayed term");
    const Window w = opts.sampling.window_from(sys.t0);
    BaseQuantities base =
        resolve_base(sys, opts, scan_grid(sys, opts.norm, w, opts.sampling.samples, {}));
    if (!(sys.A.is_identically_zero() || base.scan.A_norm_max == 0.0))
        return inapplicable_certificate(TestId::prop3, "baseline needs no neutral part");
    const auto lag = constant_lag_value(sys.terms[0].h.h, w, opts.sampling.samples);
    if (!lag)
        return inapplicable_certificate(TestId::prop3, "baseline needs a constant delay");

    const double h = *lag;
    const double beta = base.beta();
    const double b_sup = base.B_sup[0].value;
    Route r{"prop3"};
    r.require("mu_B_negative", beta);
    r.require("delay_product", beta - h * b_sup * b_sup);
    Certificate cert = assemble(TestId::prop3, {r}, opts.boundary_slack);
    bool grid = false;
    record_quantity(cert, "B_sup", base.B_sup[0], &grid);
    record_quantity(cert, "sup_mu_B", base.mu_B, &grid);
    cert.set_constant("beta", beta, Provenance::computed({"sup_mu_B"}));
    cert.set_constant("h", h, Provenance::computed({"constant delay"}));
    cert.set_constant("lhs_prop3", h * b_sup * b_sup, Provenance::computed({"h", "B_sup"}));
    cert.grid_certified = grid;
    return cert;
}

Certificate run_cor410(const NeutralSystem& sys, const CertifyOptions& opts) {
    if (sys.n != 1)
        return inapplicable_certificate(TestId::cor410, "scalar test needs dimension 1");
    RateFreeEval ev = eval_rate_free(sys, opts);
    const auto& base = ev.base;

    Route r411{"cond411"};
    r411.require("mu_b_negative", base.beta());
    std::optional<double> lhs411, lhs412, thr412;
    if (base.ratios_valid) {
        lhs411 = sum_B_sup(base) * bracket_muB(base);
        r411.require("contraction", (1.0 - base.A_sup.value) - *lhs411);
    }
    Route r412{"cond412"};
    r412.require("mu_b_negative", base.beta());
    if (base.ratios_valid) {
        lhs412 = base.B_sum_sup.value * bracket_muB(base);
        thr412 = 1.0 - base.A_sup.value - tau_weighted_B(base);
        r412.require("contraction", *thr412 - *lhs412);
    }
    Certificate cert = assemble(TestId::cor410, {r411, r412}, opts.boundary_slack);
    record_rate_free(cert, sys, ev, false, false);
    bool grid = cert.grid_certified;
    record_quantity(cert, "B_sum_sup", ev.base.B_sum_sup, &grid);
    cert.grid_certified = grid;
    if (lhs411)
        cert.set_constant("lhs_cond411", *lhs411,
                          Provenance::computed({"B*_sup", "ratio_*_over_muB", "tau_*"}));
    if (lhs412) {
        cert.set_constant("lhs_cond412", *lhs412,
                          Provenance::computed({"B_sum_sup", "ratio_*_over_muB", "tau_*"}));
        cert.set_constant("threshold_cond412", *thr412,
                          Provenance::computed({"A_sup", "tau_*", "B*_sup"}));
    }
    return cert;
}

Certificate run_cor33a(const NeutralSystem& sys, const CertifyOptions& opts) {
    const auto& d = opts.declared;
    if (!d.A_bar || d.Bk_bar.size() != sys.terms.size())
        return inapplicable_certificate(
            TestId::cor33a, "entrywise-domination test needs declared dominating matrices for A "
                            "and every B_k");
    // Spot-check the declared dominations on the grid before trusting them.
    const Window w = opts.sampling.window_from(sys.t0);
    const auto ts = sample_grid(w, std::min(opts.sampling.samples, 501));
    Mat scratch(sys.n);
    for (double t : ts) {
        sys.A.eval_into(t, scratch);
        for (int i = 0; i < sys.n; ++i)
            for (int j = 0; j < sys.n; ++j)
                if (std::fabs(scratch(i, j)) > (*d.A_bar)(i, j) + kDeclSlack)
                    return inapplicable_certificate(
                        TestId::cor33a, "declared dominating matrix for A is contradicted on the "
                                        "sample grid at t=" + std::to_string(t));
        for (std::size_t k = 0; k < sys.terms.size(); ++k) {
            sys.terms[k].B.eval_into(t, scratch);
            for (int i = 0; i < sys.n; ++i)
                for (int j = 0; j < sys.n; ++j)
                    if (std::fabs(scratch(i, j)) > d.Bk_bar[k](i, j) + kDeclSlack)
                        return inapplicable_certificate(
                            TestId::cor33a,
                            "declared dominating matrix for B" + std::to_string(k + 1) +
                                " is contradicted on the sample grid at t=" + std::to_string(t));
        }
    }

    BaseQuantities base =
        resolve_base(sys, opts, scan_grid(sys, opts.norm, w, opts.sampling.samples, {}));
    const double beta = base.beta();
    const double n_abar = matrix_norm(*d.A_bar, opts.norm);
    double sum_bbar = 0.0, tau_bbar = 0.0;
    for (std::size_t k = 0; k < sys.terms.size(); ++k) {
        const double nb = matrix_norm(d.Bk_bar[k], opts.norm);
        sum_bbar += nb;
        tau_bbar += base.tau[k] * nb;
    }
    const Provenance from_dom = Provenance::computed({"dominating matrices"});

    Route r1{"domination1"};
    r1.require("mu_B_negative", beta);
    r1.require("neutral_contraction", 1.0 - n_abar);
    std::optional<double> lhs1, lhs2;
    if (beta > 0.0 && n_abar < 1.0) {
        lhs1 = sum_bbar * (n_abar + tau_bbar);
        r1.require("contraction", beta * (1.0 - n_abar) - *lhs1);
    }
    Route r2{"domination2"};
    r2.require("mu_B_negative", beta);
    r2.require("neutral_delay_contraction", 1.0 - n_abar - tau_bbar);
    if (beta > 0.0 && d.B_bar && n_abar + tau_bbar < 1.0) {
        const double n_bbar = matrix_norm(*d.B_bar, opts.norm);
        lhs2 = n_bbar * (n_abar + tau_bbar);
        r2.require("contraction", beta * (1.0 - n_abar - tau_bbar) - *lhs2);
    } else if (!d.B_bar) {
        r2.applicable = false;
        r2.why = "no declared dominating matrix for the coefficient sum;";
    }

    Certificate cert = assemble(TestId::cor33a, {r1, r2}, opts.boundary_slack);
    bool grid = false;
    record_quantity(cert, "sup_mu_B", base.mu_B, &grid);
    cert.set_constant("beta", beta, Provenance::computed({"sup_mu_B"}));
    cert.set_constant("A_bar_norm", n_abar, from_dom);
    cert.set_constant("sum_B_bar_norm", sum_bbar, from_dom);
    cert.set_constant("tau_weighted_B_bar_norm", tau_bbar, from_dom);
    if (lhs1) cert.set_constant("lhs_domination1", *lhs1, from_dom);
    if (lhs2) cert.set_constant("lhs_domination2", *lhs2, from_dom);
    cert.grid_certified = grid;
    return cert;
}

}  // namespace

Certificate run_test(const NeutralSystem& sys, TestId id, const CertifyOptions& opts) {
    switch (id) {
        case TestId::thm31:
        case TestId::thm31a: {
            if (!opts.lambda)
                return inapplicable_certificate(id, "rate-based test needs a decay rate lambda");
            RateEval ev = eval_with_rate(sys, *opts.lambda, opts);
            const bool want31 = id == TestId::thm31;
            Certificate cert =
                assemble(id, {want31 ? ev.route31 : ev.route31a}, opts.boundary_slack);
            record_rate(cert, sys, ev, want31, !want31, opts.boundary_slack);
            return cert;
        }
        case TestId::thm32:
        case TestId::thm32a: {
            RateFreeEval ev = eval_rate_free(sys, opts);
            const bool want32 = id == TestId::thm32;
            Certificate cert =
                assemble(id, {want32 ? ev.route32 : ev.route32a}, opts.boundary_slack);
            record_rate_free(cert, sys, ev, want32, !want32);
            return cert;
        }
        case TestId::cor33a: return run_cor33a(sys, opts);
        case TestId::cor41: return certify_nondelay_form(sys, opts);
        case TestId::cor410: return run_cor410(sys, opts);
        case TestId::prop1: return run_prop12(sys, TestId::prop1, opts);
        case TestId::prop2: return run_prop12(sys, TestId::prop2, opts);
        case TestId::prop3: return run_prop3(sys, opts);
    }
    throw Error("unhandled test id");
}

double ExponentialBound::value(double t_minus_t0, double x0_norm, double psi_norm,
                               std::span<const double> phi_norms, double f_sup) const {
    double bracket = c_x0 * x0_norm + c_psi * psi_norm;
    for (std::size_t k = 0; k < c_phi.size(); ++k) bracket += c_phi[k] * phi_norms[k];
    return M0 * std::exp(-lambda * t_minus_t0) * bracket + c_f * f_sup;
}

ExponentialBound solution_bound(const NeutralSystem& sys, const Certificate& cert,
                                NormKind /*norm*/) {
    if (cert.verdict != Verdict::certified)
        throw Error("solution_bound requires a certified rate-based certificate");
    if (cert.test_id != TestId::thm31 && cert.test_id != TestId::thm31a)
        throw Error("solution_bound requires a certificate from a rate-based test");

    ExponentialBound b;
    b.lambda = cert.constant("lambda");
    b.M0 = cert.constant("M0");
    const double a_sup = cert.constant("A_sup");
    const double sigma = cert.constant("sigma");
    const double denom = b.lambda * (1.0 - a_sup);
    b.c_x0 = 1.0;
    b.c_psi = (std::exp(b.lambda * sigma) - 1.0) / denom * a_sup;
    for (std::size_t k = 0; k < sys.terms.size(); ++k) {
        const double tau = cert.constant("tau_" + std::to_string(k + 1));
        const double b_sup = cert.constant("B" + std::to_string(k + 1) + "_sup");
        b.c_phi.push_back((std::exp(b.lambda * tau) - 1.0) / denom * b_sup);
    }
    b.c_f = b.M0 / denom;
    return b;
}

RateSearchResult max_decay_rate(const NeutralSystem& sys, const CertifyOptions& opts,
                                double lambda_max, int grid_points) {
    if (!(lambda_max > 0.0)) throw Error("max_decay_rate requires lambda_max > 0");
    if (grid_points < 2) throw Error("max_decay_rate requires at least 2 grid points");

    const double lo_log = std::log(lambda_max * 1e-6);
    const double hi_log = std::log(lambda_max);
    std::vector<double> lambdas(static_cast<std::size_t>(grid_points));
    std::vector<bool> ok(lambdas.size(), false);
    std::vector<Certificate> certs(lambdas.size());
    for (int i = 0; i < grid_points; ++i) {
        const double l = std::exp(lo_log + (hi_log - lo_log) * i / (grid_points - 1));
        lambdas[static_cast<std::size_t>(i)] = l;
        certs[static_cast<std::size_t>(i)] = certify_with_rate(sys, l, opts);
        ok[static_cast<std::size_t>(i)] =
            certs[static_cast<std::size_t>(i)].verdict == Verdict::certified;
    }

    int best = -1;
    for (int i = grid_points - 1; i >= 0; --i)
        if (ok[static_cast<std::size_t>(i)]) {
            best = i;
            break;
        }
    if (best < 0) throw NoCertifiableRate("no certifiable decay rate in (0, lambda_max]");

    double lo = lambdas[static_cast<std::size_t>(best)];
    Certificate lo_cert = certs[static_cast<std::size_t>(best)];
    if (best + 1 < grid_points) {
        // Feasibility is not assumed monotone; the bisection only runs on the
        // bracket the scan produced.
        double hi = lambdas[static_cast<std::size_t>(best) + 1];
        while (hi - lo > 1e-6) {
            const double mid = 0.5 * (lo + hi);
            Certificate c = certify_with_rate(sys, mid, opts);
            if (c.verdict == Verdict::certified) {
                lo = mid;
                lo_cert = std::move(c);
            } else {
                hi = mid;
            }
        }
    }
    RateSearchResult result;
    result.lambda_star = lo;
    result.certificate = std::move(lo_cert);
    result.bound = solution_bound(sys, result.certificate, opts.norm);
    return result;
}

}  // namespace ncert
