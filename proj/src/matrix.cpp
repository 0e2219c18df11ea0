#include "ncert/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncert {

NormKind parse_norm_name(std::string_view name) {
    if (name == "inf") return NormKind::Inf;
    if (name == "one" || name == "1") return NormKind::One;
    if (name == "two" || name == "2")
        throw Error("unsupported norm 'two': only 'inf' and 'one' have closed-form "
                    "induced norms here");
    throw Error("unknown norm '" + std::string(name) + "' (expected 'inf' or 'one')");
}

std::string_view norm_name(NormKind k) {
    return k == NormKind::Inf ? "inf" : "one";
}

double matrix_norm(const Mat& c, NormKind k) {
    double best = 0.0;
    if (k == NormKind::Inf) {
        for (int i = 0; i < c.n; ++i) {
            double s = 0.0;
            for (int j = 0; j < c.n; ++j) s += std::fabs(c(i, j));
            best = std::max(best, s);
        }
    } else {
        for (int j = 0; j < c.n; ++j) {
            double s = 0.0;
            for (int i = 0; i < c.n; ++i) s += std::fabs(c(i, j));
            best = std::max(best, s);
        }
    }
    return best;
}

double matrix_measure(const Mat& c, NormKind k) {
    double best = -std::numeric_limits<double>::infinity();
    if (k == NormKind::Inf) {
        for (int i = 0; i < c.n; ++i) {
            double s = c(i, i);
            for (int j = 0; j < c.n; ++j)
                if (j != i) s += std::fabs(c(i, j));
            best = std::max(best, s);
        }
    } else {
        for (int j = 0; j < c.n; ++j) {
            double s = c(j, j);
            for (int i = 0; i < c.n; ++i)
                if (i != j) s += std::fabs(c(i, j));
            best = std::max(best, s);
        }
    }
    return best;
}

double matrix_measure_limit(const Mat& c, NormKind k, double nu) {
    if (!(nu > 0.0)) throw Error("matrix_measure_limit requires nu > 0");
    Mat shifted = c;
    shifted *= nu;
    for (int i = 0; i < c.n; ++i) shifted(i, i) += 1.0;
    return (matrix_norm(shifted, k) - 1.0) / nu;
}

double vector_norm(std::span<const double> v, NormKind k) {
    double s = 0.0;
    if (k == NormKind::Inf) {
        for (double x : v) s = std::max(s, std::fabs(x));
    } else {
        for (double x : v) s += std::fabs(x);
    }
    return s;
}

void mat_vec(const Mat& m, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
}

std::vector<double> solve_linear(Mat m, std::vector<double> rhs) {
    const int n = m.n;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(m(r, col)) > std::fabs(m(pivot, col))) pivot = r;
        if (std::fabs(m(pivot, col)) < 1e-300)
            throw Error("singular linear system in solve_linear");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(m(col, j), m(pivot, j));
            std::swap(rhs[col], rhs[pivot]);
        }
        const double d = m(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = m(r, col) / d;
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
            rhs[r] -= f * rhs[col];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = rhs[i];
        for (int j = i + 1; j < n; ++j) s -= m(i, j) * rhs[j];
        rhs[i] = s / m(i, i);
    }
    return rhs;
}

}  // namespace ncert
