#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "ncert/error.hpp"

namespace ncert {

// Dense square matrix, row-major. Dimensions here are small (the systems
// under study have n up to a few dozen), so no external linear algebra is
// pulled in.
struct Mat {
    int n = 0;
    std::vector<double> a;

    Mat() = default;
    explicit Mat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += o.a[k];
        return *this;
    }
    Mat& operator*=(double c) {
        for (double& v : a) v *= c;
        return *this;
    }
    void set_zero() { a.assign(a.size(), 0.0); }

    // this += c * o
    void add_scaled(const Mat& o, double c) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += c * o.a[k];
    }
};

// The two norms with closed-form induced expressions: "inf" is the maximum
// absolute row sum (induced by the max vector norm), "one" its column dual.
// The spectral norm is deliberately not offered.
enum class NormKind { Inf, One };

NormKind parse_norm_name(std::string_view name);  // throws Error on "two"/"2"/unknown
std::string_view norm_name(NormKind k);

double matrix_norm(const Mat& c, NormKind k);

// Logarithmic norm: for inf, max_i (c_ii + sum_{j!=i} |c_ij|); for one the
// column analogue. Can be negative, which is what drives decay certificates.
double matrix_measure(const Mat& c, NormKind k);

// Finite-nu difference quotient (||E + nu C|| - 1)/nu; converges to
// matrix_measure as nu -> 0+.
double matrix_measure_limit(const Mat& c, NormKind k, double nu);

double vector_norm(std::span<const double> v, NormKind k);

// y = m * x
void mat_vec(const Mat& m, std::span<const double> x, std::span<double> y);

// Solves m * x = rhs by Gaussian elimination with partial pivoting.
// Throws Error on a (numerically) singular matrix.
std::vector<double> solve_linear(Mat m, std::vector<double> rhs);

}  // namespace ncert
