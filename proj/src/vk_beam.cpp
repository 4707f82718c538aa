#include "nsssm/vk_beam.hpp"

#include <array>
#include <cmath>
#include <ostream>

namespace nsssm {

namespace {

struct GaussRule {
    std::vector<double> x;  // on [0, 1]
    std::vector<double> w;
};

GaussRule gauss(int n) {
    GaussRule g;
    if (n == 3) {
        const double a = std::sqrt(3.0 / 5.0);
        g.x = {-a, 0.0, a};
        g.w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    } else {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0, wb = (18.0 - std::sqrt(30.0)) / 36.0;
        g.x = {-b, -a, a, b};
        g.w = {wb, wa, wa, wb};
    }
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        g.x[i] = 0.5 * (g.x[i] + 1.0);
        g.w[i] *= 0.5;
    }
    return g;
}

// Shape function data at ξ on an element of length le, local order
// (u1, w1, θ1, u2, w2, θ2).
struct Shape {
    std::array<double, 6> nu{}, nw{}, bu{}, g{}, h{};
};

Shape shape(double xi, double le) {
    Shape s;
    const double x2 = xi * xi, x3 = x2 * xi;
    s.nu = {1 - xi, 0, 0, xi, 0, 0};
    s.nw = {0, 1 - 3 * x2 + 2 * x3, le * (xi - 2 * x2 + x3), 0, 3 * x2 - 2 * x3, le * (-x2 + x3)};
    s.bu = {-1 / le, 0, 0, 1 / le, 0, 0};
    s.g = {0, (-6 * xi + 6 * x2) / le, 1 - 4 * xi + 3 * x2, 0, (6 * xi - 6 * x2) / le, -2 * xi + 3 * x2};
    s.h = {0, (-6 + 12 * xi) / (le * le), (-4 + 6 * xi) / le, 0, (6 - 12 * xi) / (le * le), (-2 + 6 * xi) / le};
    return s;
}

double dot6(const std::array<double, 6>& a, const std::array<double, 6>& b) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

void BeamProperties::validate() const {
    if (!(length > 0 && width > 0 && thickness > 0 && young_modulus > 0 && density > 0 && poisson > 0 &&
          damping_modulus >= 0 && n_elements > 0)) {
        throw ConfigError("beam properties must be positive");
    }
    if (n_elements % 2 != 0) throw ConfigError("beam needs an even number of elements to have a midpoint node");
}

double BeamAssembly::element_loop(const Vec& q, Vec* f, Mat* kt) const {
    const int ne = props.n_elements;
    const double le = props.length / ne;
    const double ea = props.young_modulus * props.area();
    const double ei = props.young_modulus * props.inertia();
    static const GaussRule rule = gauss(3);
    double energy = 0.0;
    for (int e = 0; e < ne; ++e) {
        std::array<int, 6> map{};
        std::array<double, 6> ql{};
        for (int i = 0; i < 6; ++i) {
            map[i] = free_map_[3 * e + i];
            ql[i] = map[i] >= 0 ? q[map[i]] : 0.0;
        }
        for (std::size_t gp = 0; gp < rule.x.size(); ++gp) {
            const Shape s = shape(rule.x[gp], le);
            const double wq = rule.w[gp] * le;
            const double du = dot6(s.bu, ql);
            const double dw = dot6(s.g, ql);
            const double ddw = dot6(s.h, ql);
            const double eps0 = du + 0.5 * dw * dw;
            const double nforce = ea * eps0;
            const double moment = ei * ddw;
            energy += wq * (0.5 * ea * eps0 * eps0 + 0.5 * ei * ddw * ddw);
            std::array<double, 6> be{};
            for (int i = 0; i < 6; ++i) be[i] = s.bu[i] + dw * s.g[i];
            if (f) {
                for (int i = 0; i < 6; ++i) {
                    if (map[i] < 0) continue;
                    (*f)[map[i]] += wq * (nforce * be[i] + moment * s.h[i]);
                }
            }
            if (kt) {
                for (int i = 0; i < 6; ++i) {
                    if (map[i] < 0) continue;
                    for (int j = 0; j < 6; ++j) {
                        if (map[j] < 0) continue;
                        (*kt)(map[i], map[j]) +=
                            wq * (ea * be[i] * be[j] + nforce * s.g[i] * s.g[j] + ei * s.h[i] * s.h[j]);
                    }
                }
            }
        }
    }
    return energy;
}

Vec BeamAssembly::internal_force(const Vec& q) const {
    Vec f = Vec::Zero(n_free);
    element_loop(q, &f, nullptr);
    return f;
}

Vec BeamAssembly::nonlinear_force(const Vec& q, const Vec&) const { return internal_force(q) - stiffness * q; }

Mat BeamAssembly::tangent_stiffness(const Vec& q) const {
    Mat k = Mat::Zero(n_free, n_free);
    element_loop(q, nullptr, &k);
    return k;
}

double BeamAssembly::strain_energy(const Vec& q) const { return element_loop(q, nullptr, nullptr); }

BeamAssembly assemble_beam(const BeamProperties& props) {
    props.validate();
    BeamAssembly a;
    a.props = props;
    const int ne = props.n_elements;
    const int nodes = ne + 1;
    a.n_raw = 3 * nodes;
    a.n_free = 3 * (nodes - 2);
    a.free_map_.assign(a.n_raw, -1);
    for (int i = 3; i < a.n_raw - 3; ++i) a.free_map_[i] = i - 3;
    a.mid_index = 3 * (ne / 2 - 1) + 1;

    a.stiffness = a.tangent_stiffness(Vec::Zero(a.n_free));

    const double le = props.length / ne;
    const double rho_a = props.density * props.area();
    const GaussRule rule = gauss(4);
    a.mass = Mat::Zero(a.n_free, a.n_free);
    for (int e = 0; e < ne; ++e) {
        for (std::size_t gp = 0; gp < rule.x.size(); ++gp) {
            const Shape s = shape(rule.x[gp], le);
            const double wq = rule.w[gp] * le * rho_a;
            for (int i = 0; i < 6; ++i) {
                const int gi = a.free_map_[3 * e + i];
                if (gi < 0) continue;
                for (int j = 0; j < 6; ++j) {
                    const int gj = a.free_map_[3 * e + j];
                    if (gj < 0) continue;
                    a.mass(gi, gj) += wq * (s.nu[i] * s.nu[j] + s.nw[i] * s.nw[j]);
                }
            }
        }
    }
    a.damping = (props.damping_modulus / props.young_modulus) * a.stiffness;

    Eigen::LLT<Mat> kl(a.stiffness);
    if (kl.info() != Eigen::Success) throw AssemblyError("assembled stiffness matrix is not positive definite");
    Eigen::LLT<Mat> ml(a.mass);
    if (ml.info() != Eigen::Success) throw AssemblyError("assembled mass matrix is not positive definite");
    a.mass_inv = ml.solve(Mat::Identity(a.n_free, a.n_free));
    return a;
}

double euler_bernoulli_first_frequency(const BeamProperties& p) {
    return 22.373 / (p.length * p.length) *
           std::sqrt(p.young_modulus * p.inertia() / (p.density * p.area()));
}

const char* to_string(VariantKind k) {
    switch (k) {
        case VariantKind::Coulomb: return "coulomb";
        case VariantKind::SoftImpact: return "soft_impact";
        case VariantKind::MovingBelt: return "moving_belt";
    }
    return "?";
}

VariantKind variant_from_string(const std::string& s) {
    if (s == "coulomb") return VariantKind::Coulomb;
    if (s == "soft_impact") return VariantKind::SoftImpact;
    if (s == "moving_belt") return VariantKind::MovingBelt;
    throw ConfigError("unknown beam variant '" + s + "'");
}

double belt_friction_law(const NonsmoothVariant& v, double rel) {
    const double sgn = rel > 0 ? 1.0 : (rel < 0 ? -1.0 : 0.0);
    return -sgn * (1.0 + v.alpha_fric * std::exp(-std::abs(rel) / v.beta_fric));
}

double belt_branch_law(const NonsmoothVariant& v, int branch, double rel) {
    if (branch > 0) return -(1.0 + v.alpha_fric * std::exp(-rel / v.beta_fric));
    return 1.0 + v.alpha_fric * std::exp(rel / v.beta_fric);
}

double belt_branch_law_derivative(const NonsmoothVariant& v, int branch, double rel) {
    if (branch > 0) return v.alpha_fric / v.beta_fric * std::exp(-rel / v.beta_fric);
    return v.alpha_fric / v.beta_fric * std::exp(rel / v.beta_fric);
}

Vec BeamModel::branch_force(int branch, const Vec& x) const {
    const int n = assembly.n_free;
    Vec f = Vec::Zero(n);
    const int m = assembly.mid_index;
    switch (variant.kind) {
        case VariantKind::Coulomb:
            f[m] = branch > 0 ? -variant.delta : variant.delta;
            break;
        case VariantKind::SoftImpact:
            if (branch < 0) f[m] = -variant.delta * x[m];
            break;
        case VariantKind::MovingBelt:
            f[m] = variant.delta * belt_branch_law(variant, branch, x[n + m] - variant.v_ground);
            break;
    }
    return f;
}

Vec BeamModel::field(int branch, double t, const Vec& x) const {
    const int n = assembly.n_free;
    const auto q = x.head(n);
    const auto qd = x.tail(n);
    Vec rhs = branch_force(branch, x) - assembly.damping * qd - assembly.internal_force(q);
    if (force_amplitude != 0.0) rhs[assembly.mid_index] += force_amplitude * std::cos(force_omega * t);
    Vec out(2 * n);
    out.head(n) = qd;
    out.tail(n) = assembly.mass_inv * rhs;
    return out;
}

Mat BeamModel::jacobian(int branch, const Vec& x) const {
    const int n = assembly.n_free;
    const int m = assembly.mid_index;
    Mat kq = assembly.tangent_stiffness(x.head(n));
    Mat cq = assembly.damping;
    if (variant.kind == VariantKind::SoftImpact && branch < 0) kq(m, m) += variant.delta;
    if (variant.kind == VariantKind::MovingBelt) {
        cq(m, m) -= variant.delta * belt_branch_law_derivative(variant, branch, x[n + m] - variant.v_ground);
    }
    Mat j = Mat::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = Mat::Identity(n, n);
    j.bottomLeftCorner(n, n) = -assembly.mass_inv * kq;
    j.bottomRightCorner(n, n) = -assembly.mass_inv * cq;
    return j;
}

SwitchingFunction BeamModel::switching() const {
    const int n = dim();
    switch (variant.kind) {
        case VariantKind::Coulomb: return SwitchingFunction::coordinate(n, mid_velocity());
        case VariantKind::SoftImpact: return SwitchingFunction::coordinate(n, mid());
        case VariantKind::MovingBelt: return SwitchingFunction::coordinate(n, mid_velocity(), variant.v_ground);
    }
    return {};
}

PiecewiseSmoothSystem BeamModel::system() const {
    PiecewiseSmoothSystem s;
    s.dim = dim();
    const BeamModel self = *this;
    s.f_plus = [self](double t, const Vec& x) { return self.field(1, t, x); };
    s.f_minus = [self](double t, const Vec& x) { return self.field(-1, t, x); };
    s.switching = switching();
    s.delta = variant.delta;
    return s;
}

Vec BeamModel::fixed_point(int branch) const {
    const int n = assembly.n_free;
    Vec x = Vec::Zero(2 * n);
    if (variant.kind == VariantKind::SoftImpact) return x;
    const Vec load = branch_force(branch, x);
    x.head(n) = static_solve(assembly, load);
    return x;
}

Vec BeamModel::forcing_direction() const {
    const int n = assembly.n_free;
    Vec f = Vec::Zero(2 * n);
    f.tail(n) = assembly.mass_inv.col(assembly.mid_index);
    return f;
}

double BeamModel::energy(const Vec& x) const {
    const int n = assembly.n_free;
    const Vec qd = x.tail(n);
    return 0.5 * qd.dot(assembly.mass * qd) + assembly.strain_energy(x.head(n));
}

Vec static_solve(const BeamAssembly& a, const Vec& load) {
    const int n = a.n_free;
    Vec q = Vec::Zero(n);
    const double fn = load.norm();
    if (fn == 0.0) return q;
    // load stepping keeps Newton inside its basin for large deflections
    const int stages = 4;
    for (int s = 1; s <= stages; ++s) {
        const Vec f = load * (static_cast<double>(s) / stages);
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            const Vec r = a.internal_force(q) - f;
            if (r.norm() <= 1e-9 * fn) {
                ok = true;
                break;
            }
            q -= a.tangent_stiffness(q).ldlt().solve(r);
        }
        if (!ok) throw ConvergenceError("static deflection: Newton did not converge in 50 iterations");
    }
    return q;
}

Vec static_deflection(const BeamAssembly& a, double load) {
    if (!std::isfinite(load)) throw PreconditionError("static deflection: load must be finite");
    Vec f = Vec::Zero(a.n_free);
    f[a.mid_index] = load;
    return static_solve(a, f);
}

double coulomb_reference_force(const BeamAssembly& a, double reference_load) {
    const Vec q = static_deflection(a, reference_load);
    const double f = std::abs(a.internal_force(q)[a.mid_index]);
    if (f == 0.0) throw PreconditionError("normalization: zero reference force");
    return f;
}

double normalized_delta(const BeamAssembly& a, const NonsmoothVariant& v, double reference_load) {
    if (v.delta == 0.0) return 0.0;
    if (v.kind == VariantKind::SoftImpact) return v.delta / a.stiffness(a.mid_index, a.mid_index);
    return v.delta / coulomb_reference_force(a, reference_load);
}

double raw_delta(const BeamAssembly& a, VariantKind kind, double normalized, double reference_load) {
    if (normalized == 0.0) return 0.0;
    if (kind == VariantKind::SoftImpact) return normalized * a.stiffness(a.mid_index, a.mid_index);
    return normalized * coulomb_reference_force(a, reference_load);
}

void write_matrix_csv(std::ostream& os, const Mat& m) {
    os.precision(17);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << "\n";
    }
}

}  // namespace nsssm
