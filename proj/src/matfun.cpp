#include "ncert/matfun.hpp"

#include <algorithm>
#include <cmath>

namespace ncert {

MatrixFunction MatrixFunction::constant(const Mat& m) {
    MatrixFunction f;
    f.n = m.n;
    f.entries.reserve(m.a.size());
    for (double v : m.a) f.entries.push_back(Expr::constant(v));
    return f;
}

MatrixFunction MatrixFunction::zero(int dim) {
    MatrixFunction f;
    f.n = dim;
    f.entries.assign(static_cast<std::size_t>(dim) * dim, Expr::constant(0.0));
    return f;
}

Mat MatrixFunction::eval(double t) const {
    Mat out(n);
    eval_into(t, out);
    return out;
}

void MatrixFunction::eval_into(double t, Mat& out) const {
    if (out.n != n) out = Mat(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            try {
                out(i, j) = ncert::eval(*entry(i, j), t);
            } catch (const EvalError& e) {
                throw EvalError("entry (" + std::to_string(i) + "," + std::to_string(j) +
                                "): " + e.what());
            }
        }
    }
}

bool MatrixFunction::depends_on_time() const {
    for (const auto& e : entries)
        if (ncert::depends_on_time(*e)) return true;
    return false;
}

bool MatrixFunction::is_identically_zero() const {
    for (const auto& e : entries) {
        if (e->kind() == Expr::Kind::Constant && e->constant_value() == 0.0) continue;
        return false;
    }
    return true;
}

std::vector<double> sample_grid(Window w, int samples) {
    if (samples < 2) throw Error("sampling requires at least 2 points");
    if (!(w.hi >= w.lo)) throw Error("degenerate sampling window");
    std::vector<double> ts(static_cast<std::size_t>(samples));
    const double span = w.hi - w.lo;
    for (int i = 0; i < samples; ++i)
        ts[static_cast<std::size_t>(i)] = w.lo + span * i / (samples - 1);
    ts.back() = w.hi;
    return ts;
}

SupEstimate sup_norm_over_window(const MatrixFunction& f, NormKind norm, Window w, int samples) {
    if (f.declared_sup)
        return {*f.declared_sup, SupMethod::Declared, w, 0};
    const auto ts = sample_grid(w, samples);
    Mat scratch(f.n);
    double best = 0.0;
    for (double t : ts) {
        f.eval_into(t, scratch);
        best = std::max(best, matrix_norm(scratch, norm));
    }
    return {best, SupMethod::Sampled, w, samples};
}

SupEstimate sup_ratio_over_window(const MatrixFunction& numer,
                                  const std::function<double(double)>& denom,
                                  NormKind norm, Window w, int samples) {
    const auto ts = sample_grid(w, samples);
    Mat scratch(numer.n);
    double best = 0.0;
    int sign = 0;
    for (double t : ts) {
        const double d = denom(t);
        if (d == 0.0)
            throw Error("ratio denominator vanishes at t=" + std::to_string(t));
        const int s = d > 0.0 ? 1 : -1;
        if (sign == 0) sign = s;
        if (s != sign)
            throw Error("ratio denominator changes sign at t=" + std::to_string(t));
        numer.eval_into(t, scratch);
        best = std::max(best, matrix_norm(scratch, norm) / std::fabs(d));
    }
    return {best, SupMethod::Sampled, w, samples};
}

double sup_abs_over_window(const std::function<double(double)>& f, Window w, int samples) {
    const auto ts = sample_grid(w, samples);
    double best = 0.0;
    for (double t : ts) best = std::max(best, std::fabs(f(t)));
    return best;
}

}  // namespace ncert
