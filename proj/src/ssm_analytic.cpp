#include "nsssm/ssm_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsssm {

namespace {

// Truncated bivariate polynomial, total degree <= 3.
struct Poly {
    double c[4][4] = {};

    double& at(int i, int j) { return c[i][j]; }
    double at(int i, int j) const { return c[i][j]; }

    Poly operator+(const Poly& o) const {
        Poly r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; i + j < 4; ++j) r.c[i][j] = c[i][j] + o.c[i][j];
        return r;
    }
    Poly operator*(double s) const {
        Poly r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; i + j < 4; ++j) r.c[i][j] = c[i][j] * s;
        return r;
    }
    Poly operator*(const Poly& o) const {
        Poly r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; i + j < 4; ++j) {
                if (c[i][j] == 0.0) continue;
                for (int k = 0; i + j + k < 4; ++k)
                    for (int l = 0; i + j + k + l < 4; ++l) r.c[i + k][j + l] += c[i][j] * o.c[k][l];
            }
        return r;
    }
    Poly d(int var) const {
        Poly r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; i + j < 4; ++j) {
                if (var == 0 && i > 0) r.c[i - 1][j] += i * c[i][j];
                if (var == 1 && j > 0) r.c[i][j - 1] += j * c[i][j];
            }
        return r;
    }
    static Poly linear(double a, double b) {
        Poly r;
        r.c[1][0] = a;
        r.c[0][1] = b;
        return r;
    }
};

const MonomialBasis& h_basis() {
    static const MonomialBasis b(2, 2, 3);
    return b;
}
const MonomialBasis& r_basis() {
    static const MonomialBasis b(2, 1, 3);
    return b;
}

std::array<Poly, 2> to_polys(const Mat& h) {
    std::array<Poly, 2> p;
    const auto& b = h_basis();
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < b.size(); ++i) p[k].at(b[i][0], b[i][1]) = h(k, i);
    return p;
}

// ξ1 on the manifold and N(ξ1), truncated at degree 3
Poly nonlinearity_poly(const ModalSplit& s, const std::array<Poly, 2>& h) {
    const Vec& p = s.q_vector;
    const Poly xi = Poly::linear(p[0], p[1]) + h[0] * p[2] + h[1] * p[3];
    const Poly xi2 = xi * xi;
    return xi2 * s.q2_scale + (xi2 * xi) * s.q3_scale;
}

// residual of the invariance equation, as polynomials (component 1, 2)
std::array<Poly, 2> invariance_residual(const ModalSplit& s, const std::array<Poly, 2>& h) {
    const Poly n = nonlinearity_poly(s, h);
    std::array<Poly, 2> ydot;
    for (int k = 0; k < 2; ++k) ydot[k] = Poly::linear(s.a_y(k, 0), s.a_y(k, 1)) + n * s.r_y[k];
    std::array<Poly, 2> res;
    for (int k = 0; k < 2; ++k) {
        const Poly lhs = h[k].d(0) * ydot[0] + h[k].d(1) * ydot[1];
        const Poly rhs = h[0] * s.a_z(k, 0) + h[1] * s.a_z(k, 1) + n * s.r_z[k];
        res[k] = lhs + rhs * -1.0;
    }
    return res;
}

std::string resonance_report(const ModalSplit& s, int order) {
    const Eigen::VectorXcd ly = Eigen::EigenSolver<Mat>(s.a_y).eigenvalues();
    const Eigen::VectorXcd lz = Eigen::EigenSolver<Mat>(s.a_z).eigenvalues();
    double best = 1e300;
    std::ostringstream os;
    for (int m1 = 0; m1 <= order; ++m1) {
        const int m2 = order - m1;
        const Complex comb = double(m1) * ly[0] + double(m2) * ly[1];
        for (int j = 0; j < lz.size(); ++j) {
            const double dist = std::abs(lz[j] - comb);
            if (dist < best) {
                best = dist;
                os.str("");
                os << "nonresonance condition violated at order " << order << ": lambda_z=" << lz[j]
                   << " vs " << m1 << "*lambda_1 + " << m2 << "*lambda_2 = " << comb;
            }
        }
    }
    return os.str();
}

}  // namespace

ModalSplit modal_split(const SpParams& p, int branch) {
    p.validate();
    ModalSplit s;
    s.branch = branch > 0 ? 1 : -1;
    s.params = p;
    s.shifted = sp_shifted(p, s.branch);
    s.lin = decompose(s.shifted.a_tilde);
    const ModalChange mc = modal_change(s.lin);
    s.v = mc.v;
    s.v_inv = mc.v_inv;
    s.blocks = mc.blocks;
    s.a_y = s.blocks.topLeftCorner(2, 2);
    s.a_z = s.blocks.bottomRightCorner(2, 2);
    s.r_y = s.v_inv.col(1).head(2);
    s.r_z = s.v_inv.col(1).tail(2);
    s.q_vector = s.v.row(0).transpose();
    s.q2_scale = s.shifted.quad_coeff;
    s.q3_scale = s.shifted.cubic_coeff;
    return s;
}

Vec SsmCoefficients::slave(const Vec& y) const { return h * h_basis().evaluate(y); }

Mat SsmCoefficients::slave_jacobian(const Vec& y) const { return h * h_basis().jacobian(y); }

SsmCoefficients solve_invariance(const ModalSplit& split, int order) {
    if (order != 2 && order != 3) throw PreconditionError("solve_invariance: order must be 2 or 3");
    SsmCoefficients out;
    out.branch = split.branch;
    out.h = Mat::Zero(2, 7);
    out.basis_v = split.v;
    out.q3_vector = split.q_vector;
    out.q2_scale = split.q2_scale;
    const auto& b = h_basis();
    for (int k = 2; k <= order; ++k) {
        std::vector<int> cols;
        for (int i = 0; i < b.size(); ++i)
            if (degree(b[i]) == k) cols.push_back(i);
        const int nk = static_cast<int>(cols.size());
        const int nu = 2 * nk;
        auto residual = [&](const Vec& u) {
            Mat h = out.h;
            for (int i = 0; i < nk; ++i) {
                h(0, cols[i]) = u[i];
                h(1, cols[i]) = u[nk + i];
            }
            const auto res = invariance_residual(split, to_polys(h));
            Vec r(nu);
            for (int i = 0; i < nk; ++i) {
                r[i] = res[0].at(b[cols[i]][0], b[cols[i]][1]);
                r[nk + i] = res[1].at(b[cols[i]][0], b[cols[i]][1]);
            }
            return r;
        };
        const Vec r0 = residual(Vec::Zero(nu));
        Mat J(nu, nu);
        for (int c = 0; c < nu; ++c) J.col(c) = residual(Vec::Unit(nu, c)) - r0;
        Eigen::JacobiSVD<Mat> svd(J);
        const auto& sv = svd.singularValues();
        if (sv[nu - 1] <= 1e-12 * std::max(1.0, sv[0])) {
            throw ResonanceError(resonance_report(split, k));
        }
        const Vec u = J.fullPivLu().solve(-r0);
        for (int i = 0; i < nk; ++i) {
            out.h(0, cols[i]) = u[i];
            out.h(1, cols[i]) = u[nk + i];
        }
        out.order = k;
    }
    return out;
}

Vec ReducedDynamics::eval(const Vec& y) const { return r * r_basis().evaluate(y); }

ReducedDynamics solve_reduced_dynamics(const ModalSplit& split, const SsmCoefficients& coeffs) {
    const Poly n = nonlinearity_poly(split, to_polys(coeffs.h));
    ReducedDynamics rd;
    rd.branch = split.branch;
    rd.r = Mat::Zero(2, 9);
    const auto& b = r_basis();
    for (int k = 0; k < 2; ++k) {
        const Poly rk = Poly::linear(split.a_y(k, 0), split.a_y(k, 1)) + n * split.r_y[k];
        for (int i = 0; i < b.size(); ++i) rd.r(k, i) = rk.at(b[i][0], b[i][1]);
    }
    return rd;
}

PeriodicCorrection solve_periodic_correction(const ModalSplit& split, double eps, double omega,
                                             const Vec& f0) {
    const Complex iw(0.0, omega);
    auto check = [&](const Mat& a, const char* name) {
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(a).eigenvalues();
        for (int j = 0; j < ev.size(); ++j) {
            if (std::abs(iw - ev[j]) < 1e-6) {
                std::ostringstream os;
                os << "forcing frequency resonant with an eigenvalue of " << name << ": " << ev[j];
                throw ResonanceError(os.str());
            }
        }
    };
    check(split.a_z, "A_z");
    check(split.a_y, "A_y");
    const Vec g = split.v_inv * f0;
    PeriodicCorrection pc;
    pc.omega = omega;
    pc.eps = eps;
    const CMat lhs = iw * CMat::Identity(2, 2) - split.a_z.cast<Complex>();
    pc.h_hat = lhs.partialPivLu().solve(0.5 * g.tail(2).cast<Complex>());
    pc.r_hat = 0.5 * g.head(2).cast<Complex>();
    pc.v_hat = split.v.rightCols(2).cast<Complex>() * pc.h_hat;
    if (eps == 0.0) {
        pc.h_hat.setZero();
        pc.r_hat.setZero();
        pc.v_hat.setZero();
    }
    return pc;
}

Vec evaluate_manifold(const ModalSplit& split, const SsmCoefficients& coeffs, const Vec& y) {
    Vec eta(4);
    eta << y, coeffs.slave(y);
    return split.shifted.x0 + split.v * eta;
}

double invariance_error(const ModalSplit& split, const SsmCoefficients& coeffs, double rho,
                        int n_samples) {
    if (!(rho > 0.0)) throw PreconditionError("invariance_error: rho must be positive");
    if (n_samples < 1) throw PreconditionError("invariance_error: need at least one sample");
    double sum = 0.0;
    int used = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double th = 2.0 * M_PI * i / n_samples;
        Vec y(2);
        y << rho * std::cos(th), rho * std::sin(th);
        const Vec z = coeffs.slave(y);
        const Mat dh = coeffs.slave_jacobian(y);
        const double xi1 = split.q_vector.head(2).dot(y) + split.q_vector.tail(2).dot(z);
        const double n = split.nonlinearity(xi1);
        const Vec lhs = dh * (split.a_y * y + split.r_y * n);
        const Vec rhs = split.a_z * z + split.r_z * n;
        if (rhs.norm() < 1e-14) continue;
        sum += (lhs - rhs).norm() / rhs.norm();
        ++used;
    }
    return used ? sum / used : 0.0;
}

SsmModel analytic_model(const ModalSplit& split, const SsmCoefficients& coeffs,
                        const ReducedDynamics& rd) {
    const Mat v0 = split.v.leftCols(2);
    const Mat w0 = split.v_inv.topRows(2);
    const Mat m = split.v.rightCols(2) * coeffs.h;
    SsmModel model(split.branch, split.shifted.x0, v0, w0, 3, m, 3, rd.r);
    model.source = "analytic";
    model.modal_v = split.v;
    model.h_coeffs = coeffs.h;
    return model;
}

SsmModel build_sp_model(const SpParams& p, int branch, bool with_correction) {
    const ModalSplit s = modal_split(p, branch);
    const SsmCoefficients c = solve_invariance(s, 3);
    const ReducedDynamics rd = solve_reduced_dynamics(s, c);
    SsmModel m = analytic_model(s, c, rd);
    if (with_correction && p.eps != 0.0) {
        m.set_correction(solve_periodic_correction(s, p.eps, p.omega, sp_forcing_direction(p)));
    }
    return m;
}

PrintedTables printed_tables(int branch) {
    PrintedTables t{};
    t.h = {{{8.2e-3, -2.4e-2, -7.3e-3, 2.7e-2, -1.5e-3, 2.3e-3, -1e-3},
            {1.5e-2, 1.7e-2, -2.8e-3, 3.4e-3, 4.6e-2, 7.2e-3, 3.2e-2}}};
    t.h_digits = {{{2, 2, 2, 2, 2, 2, 1}, {2, 2, 2, 2, 2, 2, 2}}};
    t.r = {{{-0.074, 1.004, 1.4e-4, 3.8e-3, 2.6e-2, -1.8e-5, 4.5e-4, 1.4e-2, 6.5e-2},
            {-1.004, -0.074, -3.0e-5, -8.1e-4, -5.5e-3, 3.9e-6, -9.7e-5, -3.1e-3, -1.4e-2}}};
    t.r_digits = {{{2, 4, 2, 2, 2, 2, 2, 2, 2}, {4, 2, 2, 2, 2, 2, 2, 2, 2}}};
    if (branch < 0) {
        // the negative-branch tables print the quadratic entries with flipped sign
        for (int k = 0; k < 2; ++k) {
            for (int i = 0; i < 3; ++i) t.h[k][i] = -t.h[k][i];
            for (int i = 2; i < 5; ++i) t.r[k][i] = -t.r[k][i];
        }
    }
    return t;
}

double round_like(double value, double printed, int digits) {
    if (printed == 0.0) return value;
    const int e = static_cast<int>(std::floor(std::log10(std::abs(printed))));
    const double q = std::pow(10.0, e - digits + 1);
    return std::round(value / q) * q;
}

bool TableReport::all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const TableEntry& e) { return e.pass; });
}

TableReport validate_tables(const SpParams& p, int flip) {
    static const char* h_names[7] = {"(2,0)", "(1,1)", "(0,2)", "(3,0)", "(2,1)", "(1,2)", "(0,3)"};
    static const char* r_names[9] = {"(1,0)", "(0,1)", "(2,0)", "(1,1)", "(0,2)", "(3,0)", "(2,1)", "(1,2)", "(0,3)"};
    TableReport rep;
    rep.compared = std::abs(p.delta - 0.1) < 1e-12;
    for (int br : {1, -1}) {
        const auto split = modal_split(p, br);
        const auto c = solve_invariance(split, 3);
        const auto r = solve_reduced_dynamics(split, c);
        rep.max_quadratic = std::max({rep.max_quadratic, c.h.leftCols(3).cwiseAbs().maxCoeff(),
                                      r.r.middleCols(2, 3).cwiseAbs().maxCoeff()});
        if (!rep.compared) continue;
        const auto t = printed_tables(br);
        const std::string side = br > 0 ? "plus." : "minus.";
        auto add = [&](const std::string& name, double value, double printed, int digits) {
            TableEntry e;
            e.name = name;
            e.computed = static_cast<int>(rep.entries.size()) == flip ? -value : value;
            e.printed = printed;
            e.rounded = round_like(e.computed, printed, digits);
            const double unit = std::pow(10.0, std::floor(std::log10(std::abs(printed))) - digits + 1);
            e.pass = std::abs(e.rounded - printed) < 1e-3 * unit;
            rep.entries.push_back(e);
        };
        for (int k = 0; k < 2; ++k) {
            for (int i = 0; i < 7; ++i) {
                add(side + "h" + std::to_string(k + 1) + h_names[i], c.h(k, i), t.h[k][i], t.h_digits[k][i]);
            }
        }
        for (int k = 0; k < 2; ++k) {
            for (int i = 0; i < 9; ++i) {
                add(side + "r" + std::to_string(k + 1) + r_names[i], r.r(k, i), t.r[k][i], t.r_digits[k][i]);
            }
        }
    }
    return rep;
}

}  // namespace nsssm
