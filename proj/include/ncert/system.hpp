#pragma once

#include <string>
#include <vector>

#include "ncert/matfun.hpp"

namespace ncert {

// A delayed argument h(t) together with a declared bound on its lag:
// 0 <= t - h(t) <= tau must hold at every sampled time.
struct DelayArg {
    ExprPtr h;
    double tau = 0.0;
};

struct DelayTerm {
    MatrixFunction B;
    DelayArg h;
};

// The initial value problem under study:
//   x'(t) - A(t) x'(g(t)) = sum_k B_k(t) x(h_k(t)) + f(t),  t >= t0,
// with sup ||A(t)|| < 1 so the derivative can always be solved for.
struct NeutralSystem {
    int n = 0;
    double t0 = 0.0;
    MatrixFunction A;
    DelayArg g;                    // lag bound is called sigma
    std::vector<DelayTerm> terms;  // at least one
    std::vector<ExprPtr> f;        // empty means f == 0

    double sigma() const { return g.tau; }
    double max_tau() const;
    bool has_forcing() const { return !f.empty(); }
};

// Prehistory: x(t) = phi(t) for t <= t0, x'(t) = psi(t) for t < t0.
// psi(t0) is never read; the derivative at t0 comes from the equation.
struct InitialData {
    std::vector<ExprPtr> phi;
    std::vector<ExprPtr> psi;
};

enum class Severity { Info, Warning, Error };

struct Finding {
    Severity severity = Severity::Info;
    std::string message;
    std::string quantity;
    double value = 0.0;
};

struct ValidationReport {
    bool passed = true;
    std::vector<Finding> findings;

    void add(Severity s, std::string message, std::string quantity, double value);
};

// Checks the standing assumptions on a grid: sup ||A|| < 1, every sampled lag
// inside [0, tau] (resp. [0, sigma]), declared bounds not exceeded by sampled
// sups, and all expressions evaluable. Declared bounds are claims about the
// chosen norm, so the check runs in that norm. Measurability-style hypotheses
// are the user's analytic obligation and are not (cannot be) checked
// numerically.
ValidationReport validate(const NeutralSystem& sys, const SamplingPolicy& sampling,
                          NormKind norm = NormKind::Inf);

struct DelayBounds {
    double sigma = 0.0;
    std::vector<double> tau;
    double tau_max = 0.0;
};

DelayBounds effective_delay_bounds(const NeutralSystem& sys);

void eval_vector(const std::vector<ExprPtr>& exprs, double t, std::span<double> out);
std::vector<double> eval_vector(const std::vector<ExprPtr>& exprs, double t);

}  // namespace ncert
