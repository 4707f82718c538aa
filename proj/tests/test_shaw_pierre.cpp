#include <catch_amalgamated.hpp>

#include "nsssm/pws.hpp"
#include "nsssm/shaw_pierre.hpp"

#include <random>

using namespace nsssm;

namespace {
Vec v4(double a, double b, double c, double d) {
    Vec v(4);
    v << a, b, c, d;
    return v;
}
}  // namespace

TEST_CASE("field evaluation by hand") {
    SpParams p;
    p.delta = 0.1;
    const Vec f = sp_field(p, 1, 0.0, v4(1, 0, 0, 0));
    CHECK((f - v4(0, -2.6, 0, 1)).norm() < 1e-14);
    SpParams s;
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 20; ++i) {
        const Vec x = v4(u(rng), u(rng), u(rng), u(rng));
        CHECK((sp_field(s, 1, 0.0, x) - sp_field(s, -1, 0.0, x)).norm() == 0.0);
        CHECK((sp_field(p, -1, 0.0, -x) + sp_field(p, 1, 0.0, x)).norm() < 1e-13);
    }
}

TEST_CASE("switching function") {
    const auto sw = sp_switching();
    CHECK(sw.sigma(v4(5, 0, -3, 2)) == 0.0);
    CHECK(sw.sigma(v4(0, -0.4, 0, 0)) == -0.4);
    CHECK((sw.grad(v4(1, 2, 3, 4)) - v4(0, 1, 0, 0)).norm() == 0.0);
}

TEST_CASE("sticking test") {
    SpParams p;
    p.delta = 0.1;
    CHECK(sp_sticking_test(p, Vec::Zero(4)));
    p.delta = 0.01;
    CHECK_FALSE(sp_sticking_test(p, v4(10, 0, 0, 0)));
    // equality is not sticking: force = k x3 = 0.01
    CHECK_FALSE(sp_sticking_test(p, v4(0, 0, 0.01, 0)));
    CHECK_THROWS_AS(sp_sticking_test(p, v4(0, 0.1, 0, 0)), PreconditionError);
}

TEST_CASE("fixed points") {
    SpParams p;
    const auto f0 = sp_fixed_points(p);
    CHECK(f0.q0_plus == 0.0);
    CHECK(f0.q0_minus == 0.0);
    p.delta = 0.1;
    const auto f = sp_fixed_points(p);
    CHECK(f.q0_plus == Catch::Approx(-0.0666).margin(1e-4));
    CHECK(f.q0_minus == -f.q0_plus);
    const double q = f.q0_plus;
    CHECK(std::abs(q * q * q + 3 * q + 0.2) < 1e-12);
    CHECK(sp_field(p, 1, 0.0, f.x0_plus).norm() < 1e-12);
    CHECK(sp_field(p, -1, 0.0, f.x0_minus).norm() < 1e-12);
    CHECK(f.x0_plus[2] == 0.5 * f.x0_plus[0]);
    SpParams g;
    g.m1 = 2.0;
    g.k = 1.5;
    g.alpha = 0.7;
    g.delta = 0.3;
    const auto fg = sp_fixed_points(g);
    CHECK(sp_field(g, 1, 0.0, fg.x0_plus).norm() < 1e-12);
    CHECK(sp_field(g, -1, 0.0, fg.x0_minus).norm() < 1e-12);
}

TEST_CASE("shifted form") {
    SpParams p;
    p.delta = 0.1;
    const auto sp = sp_shifted(p, 1);
    const auto sm = sp_shifted(p, -1);
    CHECK(sp.constant.norm() < 1e-14);
    CHECK((sp.a_tilde - sm.a_tilde).norm() == 0.0);
    CHECK(sp.a_tilde(1, 0) == Catch::Approx(-2 - 1.5 * sp.q0 * sp.q0));
    // shifted field reproduces the original one
    const Vec xi = v4(0.2, -0.1, 0.3, 0.05);
    const Vec lhs = sp.a_tilde * xi + sp.nonlinear(xi);
    CHECK((lhs - sp_field(p, 1, 0.0, sp.x0 + xi)).norm() < 1e-13);
    SpParams z;
    CHECK(sp_shifted(z, 1).quadratic(xi).norm() == 0.0);
}

TEST_CASE("Filippov field on the sticking set equals the in-surface dynamics") {
    SpParams p;
    p.delta = 0.2;
    const auto sys = sp_system(p);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    int tested = 0;
    for (int i = 0; i < 200; ++i) {
        const Vec x = v4(u(rng), 0.0, u(rng), u(rng));
        if (!sp_sticking_test(p, x)) continue;
        ++tested;
        const auto c = classify_boundary(sys, 0.0, x);
        CHECK(c.kind == BoundaryKind::AttractingSliding);
        const auto r = filippov_field(sys, 0.0, x);
        const Vec ref = sp_sticking_field(p, 0.0, x);
        CHECK(std::abs(r.f[1]) < 1e-14);
        CHECK(std::abs(r.f[0] - ref[0]) < 1e-14);
        CHECK(std::abs(r.f[2] - ref[2]) < 1e-14);
        // component 4 contains the c/m2 x2 term, which vanishes on Σ
        CHECK(std::abs(r.f[3] - ref[3]) < 1e-13);
    }
    CHECK(tested > 20);
}

TEST_CASE("repelling sliding never occurs") {
    SpParams p;
    p.delta = 0.05;
    const auto sys = sp_system(p);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 5000; ++i) {
        const Vec x = v4(u(rng), 0.0, u(rng), u(rng));
        CHECK(classify_boundary(sys, 0.0, x).kind != BoundaryKind::RepellingSliding);
    }
}

TEST_CASE("parameter validation") {
    SpParams p;
    p.m1 = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    SpParams q;
    q.delta = -1;
    CHECK_THROWS_AS(q.validate(), ConfigError);
}
