#pragma once

#include <iosfwd>
#include <optional>

#include "ncert/certify.hpp"
#include "ncert/system.hpp"

namespace ncert {

// Uniform-grid trajectory from the method-of-steps integrator. x is
// continuous across t0 (x(t0) = phi(t0)); xd holds the equation value of the
// derivative at each node (the forward, right-limit value at jump points).
struct Trajectory {
    int n = 0;
    double t0 = 0.0;
    double step = 0.0;
    std::vector<double> times;
    std::vector<double> x;   // times.size() x n, row-major
    std::vector<double> xd;  // same layout
    InitialData prehistory;

    std::span<const double> x_at(std::size_t i) const {
        return {x.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
    }
    std::span<const double> xd_at(std::size_t i) const {
        return {xd.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
    }
    double t_end() const { return times.back(); }
};

// Explicit marching with one trapezoidal predictor-corrector pass per step.
// Delayed state values come from the prehistory or linear interpolation of
// the computed grid; delayed derivative values use left-constant lookup
// (derivatives of neutral systems jump, and piecewise-constant lookup avoids
// smearing the jumps). When g(t) = t the step solves (E - A(t)) x' = rhs,
// which is invertible because sup ||A|| < 1.
Trajectory integrate(const NeutralSystem& sys, const InitialData& init, double t_end,
                     double step);

struct SamplePoint {
    std::vector<double> x;
    std::vector<double> xd;
};

// For t < t0 returns (phi(t), psi(t)); inside the grid, x by linear
// interpolation and xd by left-constant lookup. Throws beyond the last node.
SamplePoint sample(const Trajectory& traj, double t);

// Header "t,x1..xn,xd1..xdn", one row per node, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

struct DataNorms {
    double x0 = 0.0;
    double psi = 0.0;
    std::vector<double> phi;  // per delay term, over [t0 - tau_k, t0]
};

DataNorms compute_data_norms(const NeutralSystem& sys, const InitialData& init, NormKind norm,
                             int samples);

struct BoundCheck {
    double max_ratio = 0.0;
    std::optional<double> first_violation;
    std::vector<double> margin_curve;  // per-node ratio ||x(t)|| / bound(t)
};

// Pointwise comparison of the trajectory norm against the certified bound
// curve. The forcing sup is accumulated as a running max along the grid, so
// the bound at time t only charges ||f|| over [t0, t].
BoundCheck verify_bound(const Trajectory& traj, const NeutralSystem& sys,
                        const ExponentialBound& bound, const DataNorms& norms, NormKind norm);

// Integrates the fundamental matrix of y' = C(t) y and the integral of the
// measure of C on the same grid; returns the max over the grid of
// ||Y(t, t0)|| e^{-int mu}. The exponential-estimate inequality makes this
// <= 1 up to discretization error.
double coppel_check(const MatrixFunction& C, double t0, double t_end, double step, NormKind norm);

}  // namespace ncert
