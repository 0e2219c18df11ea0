#include "ncert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace ncert {

namespace {

double eps_eq(double t) { return 1e-12 * std::max(1.0, std::fabs(t)); }

void mat_vec_add(const Mat& m, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        y[i] += s;
    }
}

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) {
            const double v = a(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < a.n; ++j) c(i, j) += v * b(k, j);
        }
    return c;
}

class Integrator {
public:
    Integrator(const NeutralSystem& sys, const InitialData& init, double t_end, double step)
        : sys_(sys), init_(init), step_(step), n_(sys.n) {
        if (!(step > 0.0)) throw Error("integration step must be positive");
        if (!(t_end > sys.t0)) throw Error("t_end must exceed t0");
        if (static_cast<int>(init.phi.size()) != n_)
            throw Error("initial function phi has wrong dimension");
        if (!init.psi.empty() && static_cast<int>(init.psi.size()) != n_)
            throw Error("initial derivative psi has wrong dimension");
        const double span = t_end - sys.t0;
        steps_ = static_cast<std::size_t>(std::ceil(span / step - 1e-9));
        if (steps_ < 1) steps_ = 1;
        A_zero_ = sys.A.is_identically_zero();
        A_t_ = Mat(n_);
        B_t_ = Mat(n_);
        M_ = Mat(n_);
        xk_.resize(n_);
        xdg_.resize(n_);
        rhs_.resize(n_);
        xp_.resize(n_);
        xdp_.resize(n_);
    }

    Trajectory run() {
        Trajectory traj;
        traj.n = n_;
        traj.t0 = sys_.t0;
        traj.step = step_;
        traj.prehistory = init_;
        const std::size_t count = steps_ + 1;
        traj.times.resize(count);
        for (std::size_t i = 0; i < count; ++i) traj.times[i] = sys_.t0 + step_ * i;
        traj.x.assign(count * n_, 0.0);
        traj.xd.assign(count * n_, 0.0);
        times_ = traj.times.data();
        x_ = traj.x.data();
        xd_ = traj.xd.data();

        eval_vector(init_.phi, sys_.t0, {x_, static_cast<std::size_t>(n_)});
        x_avail_ = 1;
        xd_avail_ = 0;

        for (std::size_t i = 0; i < count; ++i) {
            const double t = times_[i];
            corrector_ = false;
            deriv(t, {xd_ + i * n_, static_cast<std::size_t>(n_)});
            xd_avail_ = i + 1;
            if (i + 1 == count) break;

            const double* xi = x_ + i * n_;
            const double* xdi = xd_ + i * n_;
            for (int j = 0; j < n_; ++j) xp_[j] = xi[j] + step_ * xdi[j];
            corrector_ = true;
            deriv(times_[i + 1], xdp_);
            double* xn = x_ + (i + 1) * n_;
            for (int j = 0; j < n_; ++j) xn[j] = xi[j] + 0.5 * step_ * (xdi[j] + xdp_[j]);
            x_avail_ = i + 2;
        }
        return traj;
    }

private:
    const NeutralSystem& sys_;
    const InitialData& init_;
    double step_;
    int n_;
    std::size_t steps_ = 0;
    bool A_zero_ = false;

    const double* times_ = nullptr;
    double* x_ = nullptr;
    double* xd_ = nullptr;
    std::size_t x_avail_ = 0, xd_avail_ = 0;
    bool corrector_ = false;

    Mat A_t_, B_t_, M_;
    std::vector<double> xk_, xdg_, rhs_, xp_, xdp_;

    void psi_value(double s, std::span<double> out) {
        if (init_.psi.empty()) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        eval_vector(init_.psi, s, out);
    }

    void x_value(double s, std::span<double> out) {
        const double t0 = sys_.t0;
        if (s < t0 - eps_eq(t0)) {
            eval_vector(init_.phi, s, out);
            return;
        }
        if (s <= t0 + eps_eq(t0)) {
            std::copy_n(x_, n_, out.begin());
            return;
        }
        const double t_last = times_[x_avail_ - 1];
        if (corrector_ && s > t_last + eps_eq(t_last)) {
            double theta = (s - t_last) / step_;
            theta = std::clamp(theta, 0.0, 1.0);
            const double* xi = x_ + (x_avail_ - 1) * n_;
            for (int j = 0; j < n_; ++j) out[j] = (1.0 - theta) * xi[j] + theta * xp_[j];
            return;
        }
        const double pos = (s - t0) / step_;
        std::size_t i0 = static_cast<std::size_t>(pos);
        if (i0 + 1 >= x_avail_) {
            std::copy_n(x_ + (x_avail_ - 1) * n_, n_, out.begin());
            return;
        }
        const double theta = pos - static_cast<double>(i0);
        const double* a = x_ + i0 * n_;
        const double* b = a + n_;
        for (int j = 0; j < n_; ++j) out[j] = (1.0 - theta) * a[j] + theta * b[j];
    }

    void xd_value(double s, std::span<double> out) {
        const double t0 = sys_.t0;
        if (s < t0 - eps_eq(t0)) {
            psi_value(s, out);
            return;
        }
        if (s <= t0 + eps_eq(t0)) {
            // The derivative jumps at t0. A step integral ending exactly at the
            // image of t0 must see the prehistory (left-limit) value; the stored
            // node value is the forward equation value.
            if (corrector_) {
                psi_value(t0, out);
            } else {
                std::copy_n(xd_, n_, out.begin());
            }
            return;
        }
        const double pos = (s - t0) / step_ + 1e-9;
        std::size_t idx = static_cast<std::size_t>(pos);
        if (idx >= xd_avail_) idx = xd_avail_ - 1;
        std::copy_n(xd_ + idx * n_, n_, out.begin());
    }

    void deriv(double t, std::span<double> out) {
        if (sys_.has_forcing())
            eval_vector(sys_.f, t, rhs_);
        else
            std::fill(rhs_.begin(), rhs_.end(), 0.0);
        for (const auto& term : sys_.terms) {
            x_value(eval(*term.h.h, t), xk_);
            term.B.eval_into(t, B_t_);
            mat_vec_add(B_t_, xk_, rhs_);
        }
        if (A_zero_) {
            std::copy(rhs_.begin(), rhs_.end(), out.begin());
            return;
        }
        const double s_g = eval(*sys_.g.h, t);
        if (s_g >= t - eps_eq(t)) {
            sys_.A.eval_into(t, A_t_);
            M_ = Mat::identity(n_);
            M_.add_scaled(A_t_, -1.0);
            std::vector<double> sol = solve_linear(M_, rhs_);
            std::copy(sol.begin(), sol.end(), out.begin());
            return;
        }
        xd_value(s_g, xdg_);
        sys_.A.eval_into(t, A_t_);
        mat_vec_add(A_t_, xdg_, rhs_);
        std::copy(rhs_.begin(), rhs_.end(), out.begin());
    }
};

}  // namespace

Trajectory integrate(const NeutralSystem& sys, const InitialData& init, double t_end,
                     double step) {
    return Integrator(sys, init, t_end, step).run();
}

SamplePoint sample(const Trajectory& traj, double t) {
    SamplePoint p;
    p.x.resize(traj.n);
    p.xd.resize(traj.n);
    const double t0 = traj.t0;
    if (t > traj.times.back() + eps_eq(traj.times.back()))
        throw Error("sample time beyond trajectory end");
    if (t < t0 - eps_eq(t0)) {
        eval_vector(traj.prehistory.phi, t, p.x);
        if (traj.prehistory.psi.empty())
            std::fill(p.xd.begin(), p.xd.end(), 0.0);
        else
            eval_vector(traj.prehistory.psi, t, p.xd);
        return p;
    }
    const double pos = (t - t0) / traj.step;
    const std::size_t last = traj.times.size() - 1;
    std::size_t i0 = std::min(static_cast<std::size_t>(pos), last);
    if (i0 >= last) {
        std::copy_n(traj.x.data() + last * traj.n, traj.n, p.x.begin());
        std::copy_n(traj.xd.data() + last * traj.n, traj.n, p.xd.begin());
        return p;
    }
    const double theta = pos - static_cast<double>(i0);
    const double* a = traj.x.data() + i0 * traj.n;
    const double* b = a + traj.n;
    for (int j = 0; j < traj.n; ++j) p.x[j] = (1.0 - theta) * a[j] + theta * b[j];
    const std::size_t idx = std::min(static_cast<std::size_t>(pos + 1e-9), last);
    std::copy_n(traj.xd.data() + idx * traj.n, traj.n, p.xd.begin());
    return p;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "t";
    for (int j = 1; j <= traj.n; ++j) out << ",x" << j;
    for (int j = 1; j <= traj.n; ++j) out << ",xd" << j;
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", traj.times[i]);
        out << buf;
        for (int j = 0; j < traj.n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.x_at(i)[j]);
            out << ',' << buf;
        }
        for (int j = 0; j < traj.n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.xd_at(i)[j]);
            out << ',' << buf;
        }
        out << "\n";
    }
}

DataNorms compute_data_norms(const NeutralSystem& sys, const InitialData& init, NormKind norm,
                             int samples) {
    DataNorms norms;
    std::vector<double> v(sys.n);
    eval_vector(init.phi, sys.t0, v);
    norms.x0 = vector_norm(v, norm);

    const auto sup_vec = [&](const std::vector<ExprPtr>& exprs, Window w) {
        if (exprs.empty()) return 0.0;
        double best = 0.0;
        for (double t : sample_grid(w, samples)) {
            eval_vector(exprs, t, v);
            best = std::max(best, vector_norm(v, norm));
        }
        return best;
    };
    norms.psi = sup_vec(init.psi, {sys.t0 - sys.sigma(), sys.t0});
    for (const auto& term : sys.terms)
        norms.phi.push_back(sup_vec(init.phi, {sys.t0 - term.h.tau, sys.t0}));
    return norms;
}

BoundCheck verify_bound(const Trajectory& traj, const NeutralSystem& sys,
                        const ExponentialBound& bound, const DataNorms& norms, NormKind norm) {
    BoundCheck check;
    check.margin_curve.reserve(traj.times.size());
    std::vector<double> fv(sys.n);
    double f_running = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        if (sys.has_forcing()) {
            eval_vector(sys.f, t, fv);
            f_running = std::max(f_running, vector_norm(fv, norm));
        }
        const double b = bound.value(t - traj.t0, norms.x0, norms.psi, norms.phi, f_running);
        const double xn = vector_norm(traj.x_at(i), norm);
        double ratio;
        if (b > 0.0)
            ratio = xn / b;
        else
            ratio = xn == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        check.margin_curve.push_back(ratio);
        if (ratio > check.max_ratio) check.max_ratio = ratio;
        if (ratio > 1.0 && !check.first_violation) check.first_violation = t;
    }
    return check;
}

double coppel_check(const MatrixFunction& C, double t0, double t_end, double step,
                    NormKind norm) {
    if (!(step > 0.0) || !(t_end > t0)) throw Error("coppel_check needs step > 0, t_end > t0");
    const std::size_t steps = static_cast<std::size_t>(std::ceil((t_end - t0) / step - 1e-9));
    Mat Y = Mat::identity(C.n);
    Mat C_t = C.eval(t0);
    double mu_t = matrix_measure(C_t, norm);
    double integral = 0.0;
    double worst = matrix_norm(Y, norm);  // node 0: ratio is exactly ||E||
    for (std::size_t i = 0; i < steps; ++i) {
        const double t_next = t0 + step * (i + 1);
        Mat K1 = mat_mul(C_t, Y);
        Mat Yp = Y;
        Yp.add_scaled(K1, step);
        Mat C_next = C.eval(t_next);
        Mat K2 = mat_mul(C_next, Yp);
        Y.add_scaled(K1, 0.5 * step);
        Y.add_scaled(K2, 0.5 * step);
        const double mu_next = matrix_measure(C_next, norm);
        integral += 0.5 * step * (mu_t + mu_next);
        C_t = std::move(C_next);
        mu_t = mu_next;
        worst = std::max(worst, matrix_norm(Y, norm) * std::exp(-integral));
    }
    return worst;
}

}  // namespace ncert
