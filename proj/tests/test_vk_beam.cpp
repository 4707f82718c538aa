#include <catch_amalgamated.hpp>

#include "nsssm/spectral.hpp"
#include "nsssm/vk_beam.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace nsssm;

namespace {

const BeamAssembly& beam() {
    static const BeamAssembly a = assemble_beam(BeamProperties{});
    return a;
}

BeamModel model(VariantKind k, double delta) {
    BeamModel m;
    m.assembly = beam();
    m.variant.kind = k;
    m.variant.delta = delta;
    return m;
}

// mirror map of the free DOFs about the midpoint: (u, w, θ) -> (-u, w, -θ)
// with node order reversed
Vec mirror(const Vec& q) {
    Vec r(q.size());
    const int nodes = static_cast<int>(q.size()) / 3;
    for (int i = 0; i < nodes; ++i) {
        const int j = nodes - 1 - i;
        r[3 * j] = -q[3 * i];
        r[3 * j + 1] = q[3 * i + 1];
        r[3 * j + 2] = -q[3 * i + 2];
    }
    return r;
}

}  // namespace

TEST_CASE("assembly sizes and matrix properties") {
    const auto& a = beam();
    CHECK(a.n_raw == 15);
    CHECK(a.n_free == 9);
    CHECK(a.mid_index == 4);
    CHECK((a.mass - a.mass.transpose()).norm() <= 1e-12 * a.mass.norm());
    CHECK((a.stiffness - a.stiffness.transpose()).norm() <= 1e-12 * a.stiffness.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(a.mass).eigenvalues().minCoeff() > 0);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(a.stiffness).eigenvalues().minCoeff() > 0);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(a.damping).eigenvalues().minCoeff() >= -1e-12 * a.damping.norm());
    // total translational mass of the free part is bounded by the beam mass
    CHECK(a.mass(a.mid_index, a.mid_index) < 2700 * 0.001);
}

TEST_CASE("first natural frequency matches the clamped-clamped closed form") {
    const auto m = model(VariantKind::Coulomb, 0.0);
    const auto lin = decompose(m.jacobian(1, Vec::Zero(18)));
    const double w1 = std::abs(lin.eigenvalues[0]);
    const double ref = euler_bernoulli_first_frequency(beam().props);
    CHECK(ref == Catch::Approx(657.7).epsilon(1e-3));
    CHECK(std::abs(w1 - ref) < 0.05 * ref);
}

TEST_CASE("nonlinear force is quadratic and higher") {
    const auto& a = beam();
    const Vec z = Vec::Zero(9);
    CHECK(a.nonlinear_force(z, z).norm() == 0.0);
    std::mt19937 rng(5);
    std::normal_distribution<double> n(0, 1);
    Vec d(9);
    for (int i = 0; i < 9; ++i) d[i] = n(rng);
    const double h1 = 1e-4, h2 = 5e-5;
    const double r = a.nonlinear_force(h1 * d, z).norm() / a.nonlinear_force(h2 * d, z).norm();
    CHECK(r > 3.9);  // at least quadratic
    // tangent stiffness is the derivative of the internal force
    Vec q = 1e-3 * d;
    const Mat kt = a.tangent_stiffness(q);
    const double h = 1e-7;
    for (int j = 0; j < 9; ++j) {
        Vec e = Vec::Zero(9);
        e[j] = h;
        const Vec fd = (a.internal_force(q + e) - a.internal_force(q - e)) / (2 * h);
        CHECK((fd - kt.col(j)).norm() <= 1e-6 * kt.col(j).norm());
    }
}

TEST_CASE("static deflection") {
    const auto& a = beam();
    CHECK(static_deflection(a, 0.0).norm() == 0.0);
    const Vec q = static_deflection(a, 12e3);
    CHECK(q[a.mid_index] > 0);
    Vec f = Vec::Zero(9);
    f[a.mid_index] = 12e3;
    CHECK((a.internal_force(q) - f).norm() <= 1e-9 * 12e3);
    CHECK((mirror(q) - q).norm() <= 1e-9 * q.norm());
    const Vec q1 = static_deflection(a, 1.0), q2 = static_deflection(a, 2.0);
    CHECK(std::abs(q2[a.mid_index] / q1[a.mid_index] - 2.0) < 2e-3);
    // geometric stiffening: less deflection than the linear solution
    const Vec lin = a.stiffness.ldlt().solve(f);
    CHECK(q[a.mid_index] < lin[a.mid_index]);
}

TEST_CASE("branch forcing of the three variants") {
    std::mt19937 rng(9);
    std::normal_distribution<double> n(0, 1);
    Vec x(18);
    for (int i = 0; i < 18; ++i) x[i] = 1e-3 * n(rng);
    auto soft = model(VariantKind::SoftImpact, 1e3);
    CHECK(soft.branch_force(1, x).norm() == 0.0);
    CHECK(soft.branch_force(-1, x)[4] == Catch::Approx(-1e3 * x[4]));
    auto coul = model(VariantKind::Coulomb, 12.0);
    CHECK(coul.branch_force(1, x)[4] == -12.0);
    CHECK(coul.branch_force(-1, x)[4] == 12.0);
    CHECK(coul.branch_force(1, x).norm() == 12.0);

    NonsmoothVariant belt;
    belt.kind = VariantKind::MovingBelt;
    CHECK(std::abs(belt_friction_law(belt, belt.beta_fric)) == Catch::Approx(1 + belt.alpha_fric / std::exp(1.0)));
    CHECK(std::abs(belt_friction_law(belt, 1e3)) == Catch::Approx(1.0));
    CHECK(std::abs(belt_friction_law(belt, 1e-12)) == Catch::Approx(1 + belt.alpha_fric));
    for (double r : {0.01, 0.3, 2.0}) {
        CHECK(belt_friction_law(belt, -r) == Catch::Approx(-belt_friction_law(belt, r)));
        CHECK(belt_branch_law(belt, 1, r) == Catch::Approx(belt_friction_law(belt, r)));
        CHECK(belt_branch_law(belt, -1, -r) == Catch::Approx(belt_friction_law(belt, -r)));
    }
}

TEST_CASE("field jacobian matches finite differences") {
    for (auto k : {VariantKind::Coulomb, VariantKind::SoftImpact, VariantKind::MovingBelt}) {
        auto m = model(k, 50.0);
        std::mt19937 rng(2);
        std::normal_distribution<double> n(0, 1);
        Vec x(18);
        for (int i = 0; i < 18; ++i) x[i] = (i < 9 ? 1e-3 : 0.05) * n(rng);
        for (int br : {1, -1}) {
            const Mat j = m.jacobian(br, x);
            for (int c = 0; c < 18; ++c) {
                const double h = (c < 9 ? 1e-8 : 1e-6);
                Vec e = Vec::Zero(18);
                e[c] = h;
                const Vec fd = (m.field(br, 0, x + e) - m.field(br, 0, x - e)) / (2 * h);
                CHECK((fd - j.col(c)).norm() <= 1e-5 * (1 + j.col(c).norm()));
            }
        }
    }
}

TEST_CASE("fixed points satisfy the branch equilibrium") {
    auto m = model(VariantKind::Coulomb, 12.0);
    for (int br : {1, -1}) {
        const Vec x0 = m.fixed_point(br);
        CHECK(m.field(br, 0, x0).norm() <= 1e-6);
    }
    CHECK((m.fixed_point(1) + m.fixed_point(-1)).norm() <= 1e-12);
    CHECK(model(VariantKind::SoftImpact, 1e3).fixed_point(-1).norm() == 0.0);
}

TEST_CASE("normalization of delta") {
    const auto& a = beam();
    NonsmoothVariant v;
    CHECK(normalized_delta(a, v) == 0.0);
    CHECK(coulomb_reference_force(a) == Catch::Approx(12e3).epsilon(1e-9));
    const double d = raw_delta(a, VariantKind::Coulomb, 1e-3);
    CHECK(d == Catch::Approx(12.0).epsilon(1e-9));
    v.delta = d;
    CHECK(normalized_delta(a, v) == Catch::Approx(1e-3));
    const double ds = raw_delta(a, VariantKind::SoftImpact, 5e-4);
    CHECK(ds == Catch::Approx(5e-4 * a.stiffness(a.mid_index, a.mid_index)));
}

TEST_CASE("soft impact admits only crossing on the surface") {
    auto m = model(VariantKind::SoftImpact, 2e3);
    const auto sys = m.system();
    std::mt19937 rng(4);
    std::normal_distribution<double> n(0, 1);
    int tested = 0;
    for (int i = 0; i < 2000; ++i) {
        Vec x(18);
        for (int j = 0; j < 18; ++j) x[j] = (j < 9 ? 1e-3 : 1.0) * n(rng);
        x[m.mid()] = 0.0;
        const auto c = classify_boundary(sys, 0.0, x);
        if (c.kind == BoundaryKind::Tangential) continue;
        CHECK(c.kind == BoundaryKind::Crossing);
        ++tested;
    }
    CHECK(tested > 1900);
}

TEST_CASE("smooth beam energy decays") {
    auto m = model(VariantKind::Coulomb, 0.0);
    Vec x0 = Vec::Zero(18);
    x0.head(9) = static_deflection(m.assembly, 2e3);
    const auto s = integrate_sampled([&](double t, const Vec& x) { return m.field(1, t, x); }, 0.0, x0, 0.05,
                                     1e-4, OdeOptions{});
    for (std::size_t i = 1; i < s.x.size(); ++i) CHECK(m.energy(s.x[i]) <= m.energy(s.x[i - 1]) * (1 + 1e-9));
    CHECK(m.energy(s.x.back()) < 0.9 * m.energy(s.x.front()));
}

TEST_CASE("matrix CSV export") {
    std::ostringstream os;
    write_matrix_csv(os, beam().mass);
    int lines = 0;
    for (char c : os.str()) lines += c == '\n';
    CHECK(lines == 9);
}
