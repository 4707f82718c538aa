#include "nsssm/shaw_pierre.hpp"

#include <cmath>

namespace nsssm {

void SpParams::validate() const {
    if (!(m1 > 0 && m2 > 0 && k > 0)) throw ConfigError("Shaw-Pierre: m1, m2, k must be positive");
    if (!(c >= 0 && alpha >= 0 && delta >= 0 && eps >= 0)) {
        throw ConfigError("Shaw-Pierre: c, alpha, delta, eps must be non-negative");
    }
    if (!std::isfinite(omega)) throw ConfigError("Shaw-Pierre: omega must be finite");
}

Mat sp_linear_matrix(const SpParams& p) {
    Mat a(4, 4);
    a << 0, 1, 0, 0,                                              //
        -2 * p.k / p.m1, -p.c / p.m1, p.k / p.m1, p.c / p.m1,     //
        0, 0, 0, 1,                                               //
        p.k / p.m2, p.c / p.m2, -2 * p.k / p.m2, -2 * p.c / p.m2;
    return a;
}

Vec sp_forcing_direction(const SpParams& p) {
    Vec f(4);
    f << 0.0, 1.0 / p.m1, 0.0, 1.0 / p.m2;
    return f / std::sqrt(2.0);
}

Vec sp_field(const SpParams& p, int branch, double t, const Vec& x) {
    const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
    Vec f(4);
    f[0] = x2;
    f[1] = (-2 * p.k * x1 - p.c * x2 + p.k * x3 + p.c * x4 - p.alpha * x1 * x1 * x1) / p.m1 -
           (branch > 0 ? p.delta : -p.delta);
    f[2] = x4;
    f[3] = (p.k * x1 + p.c * x2 - 2 * p.k * x3 - 2 * p.c * x4) / p.m2;
    if (p.eps != 0.0) {
        const double s = p.eps * std::cos(p.omega * t) / std::sqrt(2.0);
        f[1] += s / p.m1;
        f[3] += s / p.m2;
    }
    return f;
}

SwitchingFunction sp_switching() { return SwitchingFunction::coordinate(4, 1); }

double sp_stick_force(const SpParams& p, const Vec& x) {
    const double x1 = x[0];
    return (-2 * p.k * x1 + p.k * x[2] + p.c * x[3] - p.alpha * x1 * x1 * x1) / p.m1;
}

bool sp_sticking_test(const SpParams& p, const Vec& x, double eps_event) {
    if (!(std::abs(x[1]) <= eps_event)) {
        throw PreconditionError("sticking test requires a state on the switching surface");
    }
    return std::abs(sp_stick_force(p, x)) < p.delta;
}

Vec sp_sticking_field(const SpParams& p, double t, const Vec& x) {
    Vec f(4);
    f[0] = 0.0;
    f[1] = 0.0;
    f[2] = x[3];
    f[3] = (p.k * x[0] - 2 * p.k * x[2] - 2 * p.c * x[3]) / p.m2;
    if (p.eps != 0.0) f[3] += p.eps * std::cos(p.omega * t) / (std::sqrt(2.0) * p.m2);
    return f;
}

SpFixedPoints sp_fixed_points(const SpParams& p) {
    // q^3 + P q + Q = 0 with P = 3k/(2 alpha), Q = delta m1 / alpha for the + branch.
    auto root = [&](double sgn) {
        if (p.alpha == 0.0) return -sgn * p.delta * p.m1 / (1.5 * p.k);
        const double P = 1.5 * p.k / p.alpha;
        const double Q = sgn * p.delta * p.m1 / p.alpha;
        const double D = std::sqrt(0.25 * Q * Q + P * P * P / 27.0);
        // both cube-root arguments are positive for P > 0
        const double hq = 0.5 * std::abs(Q);
        const double r = std::cbrt(D - hq) - std::cbrt(D + hq);
        return Q >= 0 ? r : -r;
    };
    SpFixedPoints fp;
    fp.q0_plus = root(1.0);
    fp.q0_minus = root(-1.0);
    fp.x0_plus = Vec(4);
    fp.x0_plus << fp.q0_plus, 0.0, 0.5 * fp.q0_plus, 0.0;
    fp.x0_minus = Vec(4);
    fp.x0_minus << fp.q0_minus, 0.0, 0.5 * fp.q0_minus, 0.0;
    return fp;
}

Vec SpShifted::quadratic(const Vec& xi) const {
    Vec f = Vec::Zero(4);
    f[1] = quad_coeff * xi[0] * xi[0];
    return f;
}

Vec SpShifted::cubic(const Vec& xi) const {
    Vec f = Vec::Zero(4);
    f[1] = cubic_coeff * xi[0] * xi[0] * xi[0];
    return f;
}

SpShifted sp_shifted(const SpParams& p, int branch) {
    const SpFixedPoints fp = sp_fixed_points(p);
    SpShifted s;
    s.branch = branch > 0 ? 1 : -1;
    s.q0 = fp.q0(s.branch);
    s.x0 = fp.x0(s.branch);
    s.a_tilde = sp_linear_matrix(p);
    s.a_tilde(1, 0) -= 3.0 * p.alpha * s.q0 * s.q0 / p.m1;
    s.quad_coeff = -3.0 * p.alpha * s.q0 / p.m1;
    s.cubic_coeff = -p.alpha / p.m1;
    SpParams unforced = p;
    unforced.eps = 0.0;
    s.constant = sp_field(unforced, s.branch, 0.0, s.x0);
    return s;
}

PiecewiseSmoothSystem sp_system(const SpParams& p) {
    p.validate();
    PiecewiseSmoothSystem sys;
    sys.dim = 4;
    sys.f_plus = [p](double t, const Vec& x) { return sp_field(p, 1, t, x); };
    sys.f_minus = [p](double t, const Vec& x) { return sp_field(p, -1, t, x); };
    sys.switching = sp_switching();
    sys.delta = p.delta;
    return sys;
}

double sp_energy(const SpParams& p, const Vec& x) {
    const double q1 = x[0], q2 = x[2];
    const double kin = 0.5 * p.m1 * x[1] * x[1] + 0.5 * p.m2 * x[3] * x[3];
    const double pot = 0.5 * p.k * (q1 * q1 + (q2 - q1) * (q2 - q1) + q2 * q2) +
                       0.25 * p.alpha * q1 * q1 * q1 * q1;
    return kin + pot;
}

}  // namespace nsssm
