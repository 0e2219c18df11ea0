#include "ncert/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncert {

double NeutralSystem::max_tau() const {
    double m = 0.0;
    for (const auto& term : terms) m = std::max(m, term.h.tau);
    return m;
}

void ValidationReport::add(Severity s, std::string message, std::string quantity, double value) {
    if (s == Severity::Error) passed = false;
    findings.push_back({s, std::move(message), std::move(quantity), value});
}

namespace {

constexpr double kDelaySlack = 1e-12;

void check_delay(const ExprPtr& h, double tau, const std::string& label,
                 const std::vector<double>& ts, ValidationReport& report) {
    double max_lag = -std::numeric_limits<double>::infinity();
    for (double t : ts) {
        double lag;
        try {
            lag = t - eval(*h, t);
        } catch (const EvalError& e) {
            report.add(Severity::Error, std::string("delay evaluation failed: ") + e.what(),
                       label, t);
            return;
        }
        if (lag < -kDelaySlack) {
            report.add(Severity::Error,
                       "negative delay at sampled t=" + std::to_string(t) +
                           " (advanced argument is not allowed)",
                       label, lag);
            return;
        }
        if (lag > tau + kDelaySlack) {
            report.add(Severity::Error,
                       "sampled lag " + std::to_string(lag) + " exceeds declared bound " +
                           std::to_string(tau) + " at t=" + std::to_string(t),
                       label, lag);
            return;
        }
        max_lag = std::max(max_lag, lag);
    }
    report.add(Severity::Info, "max sampled lag within declared bound", label, max_lag);
}

void check_matrix_sup(const MatrixFunction& F, NormKind norm, const std::string& label,
                      Window w, int samples, ValidationReport& report) {
    SupEstimate sampled;
    try {
        MatrixFunction no_decl = F;
        no_decl.declared_sup.reset();
        sampled = sup_norm_over_window(no_decl, norm, w, samples);
    } catch (const EvalError& e) {
        report.add(Severity::Error, std::string("matrix evaluation failed: ") + e.what(), label, 0.0);
        return;
    }
    if (F.declared_sup) {
        if (sampled.value > *F.declared_sup + kDelaySlack) {
            report.add(Severity::Error,
                       "sampled sup " + std::to_string(sampled.value) +
                           " exceeds declared bound " + std::to_string(*F.declared_sup),
                       label, sampled.value);
        } else if (sampled.value > 0.99 * *F.declared_sup) {
            report.add(Severity::Warning,
                       "sampled sup within 1% of the declared bound", label, sampled.value);
        }
    }
    report.add(Severity::Info, "sampled sup", label, sampled.value);
}

}  // namespace

ValidationReport validate(const NeutralSystem& sys, const SamplingPolicy& sampling,
                          NormKind norm) {
    ValidationReport report;
    if (sys.n < 1) {
        report.add(Severity::Error, "dimension must be >= 1", "n", sys.n);
        return report;
    }
    if (sys.terms.empty()) {
        report.add(Severity::Error, "at least one delayed term is required", "m", 0.0);
        return report;
    }
    if (sys.A.n != sys.n) {
        report.add(Severity::Error, "A has wrong dimension", "A", sys.A.n);
        return report;
    }
    for (std::size_t k = 0; k < sys.terms.size(); ++k) {
        if (sys.terms[k].B.n != sys.n) {
            report.add(Severity::Error, "B has wrong dimension", "B" + std::to_string(k + 1),
                       sys.terms[k].B.n);
            return report;
        }
    }

    const Window w = sampling.window_from(sys.t0);
    const auto ts = sample_grid(w, sampling.samples);

    // Neutral coefficient: sup ||A(t)|| must stay strictly below 1; otherwise
    // the derivative cannot be solved for and every certificate formula fails.
    SupEstimate a_sup;
    try {
        MatrixFunction no_decl = sys.A;
        no_decl.declared_sup.reset();
        a_sup = sup_norm_over_window(no_decl, norm, w, sampling.samples);
    } catch (const EvalError& e) {
        report.add(Severity::Error, std::string("A evaluation failed: ") + e.what(), "A", 0.0);
        return report;
    }
    if (a_sup.value >= 1.0) {
        report.add(Severity::Error,
                   "sup ||A|| = " + std::to_string(a_sup.value) +
                       " >= 1 violates the requirement ||A(t)|| <= a0 < 1",
                   "A_sup", a_sup.value);
    } else {
        report.add(Severity::Info, "sup ||A|| estimate", "A_sup", a_sup.value);
    }
    check_matrix_sup(sys.A, norm, "A", w, sampling.samples, report);
    for (std::size_t k = 0; k < sys.terms.size(); ++k)
        check_matrix_sup(sys.terms[k].B, norm, "B" + std::to_string(k + 1), w,
                         sampling.samples, report);

    check_delay(sys.g.h, sys.g.tau, "g", ts, report);
    for (std::size_t k = 0; k < sys.terms.size(); ++k)
        check_delay(sys.terms[k].h.h, sys.terms[k].h.tau, "h" + std::to_string(k + 1), ts, report);

    if (sys.has_forcing()) {
        if (static_cast<int>(sys.f.size()) != sys.n) {
            report.add(Severity::Error, "forcing vector has wrong dimension", "f",
                       static_cast<double>(sys.f.size()));
        } else {
            for (double t : ts) {
                try {
                    for (const auto& e : sys.f) {
                        const double v = eval(*e, t);
                        if (!std::isfinite(v)) {
                            report.add(Severity::Error, "forcing not finite at sampled t", "f", t);
                            break;
                        }
                    }
                } catch (const EvalError& e) {
                    report.add(Severity::Error, std::string("forcing evaluation failed: ") + e.what(),
                               "f", t);
                    break;
                }
                if (!report.passed) break;
            }
        }
    }
    return report;
}

DelayBounds effective_delay_bounds(const NeutralSystem& sys) {
    DelayBounds b;
    b.sigma = sys.sigma();
    b.tau.reserve(sys.terms.size());
    for (const auto& term : sys.terms) b.tau.push_back(term.h.tau);
    b.tau_max = sys.max_tau();
    return b;
}

void eval_vector(const std::vector<ExprPtr>& exprs, double t, std::span<double> out) {
    for (std::size_t i = 0; i < exprs.size(); ++i) out[i] = eval(*exprs[i], t);
}

std::vector<double> eval_vector(const std::vector<ExprPtr>& exprs, double t) {
    std::vector<double> out(exprs.size());
    eval_vector(exprs, t, out);
    return out;
}

}  // namespace ncert
