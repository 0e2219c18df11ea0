#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ncert/expr.hpp"
#include "ncert/matrix.hpp"

namespace ncert {

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

// Square matrix whose entries are expressions of t. An optional declared_sup
// is a user-asserted analytic bound on sup_{t>=t0} of the induced norm; when
// present it takes precedence over grid sampling everywhere.
struct MatrixFunction {
    int n = 0;
    std::vector<ExprPtr> entries;  // n*n, row-major
    std::optional<double> declared_sup;

    const ExprPtr& entry(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
    ExprPtr& entry(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }

    static MatrixFunction constant(const Mat& m);
    static MatrixFunction zero(int dim);

    Mat eval(double t) const;
    // Evaluates into a preallocated matrix; domain errors are rethrown with
    // the entry coordinates attached.
    void eval_into(double t, Mat& out) const;
    bool depends_on_time() const;
    bool is_identically_zero() const;
};

enum class SupMethod { Declared, Sampled };

struct SupEstimate {
    double value = 0.0;
    SupMethod method = SupMethod::Sampled;
    Window window;
    int samples = 0;
};

// How sup norms over [t0, infinity) are realized on a finite grid. When the
// coefficients are periodic the window collapses to a single period, which
// attains every sup of the underlying functions.
struct SamplingPolicy {
    double window_length = 100.0;
    int samples = 2001;
    std::optional<double> period;

    Window window_from(double t0) const {
        const double len = period ? *period : window_length;
        return {t0, t0 + len};
    }
};

// Uniform grid of `samples` points over the window, both endpoints included.
std::vector<double> sample_grid(Window w, int samples);

// Max of matrix_norm(F(t_i)) over the grid, unless a declared bound is
// present, which is returned verbatim with method=Declared.
SupEstimate sup_norm_over_window(const MatrixFunction& f, NormKind norm, Window w, int samples);

// Pointwise-then-sup of ||numer(t)|| / |denom(t)|. The quotient quantities in
// the certificates are sups of quotient functions, never quotients of sups.
// Throws Error if the denominator vanishes or changes sign on the grid.
SupEstimate sup_ratio_over_window(const MatrixFunction& numer,
                                  const std::function<double(double)>& denom,
                                  NormKind norm, Window w, int samples);

// Max of |f(t_i)| over the grid; utility shared by scalar sup needs.
double sup_abs_over_window(const std::function<double(double)>& f, Window w, int samples);

}  // namespace ncert
