#include <catch_amalgamated.hpp>

#include "nsssm/shaw_pierre.hpp"
#include "nsssm/spectral.hpp"

#include <random>

using namespace nsssm;

namespace {
Mat sp_a(double delta) {
    SpParams p;
    p.delta = delta;
    return sp_shifted(p, 1).a_tilde;
}
}  // namespace

TEST_CASE("identity and diagonal spectra") {
    const auto id = decompose(Mat::Identity(2, 2));
    CHECK(id.eigenvalues[0] == Complex(1, 0));
    CHECK(id.eigenvalues[1] == Complex(1, 0));
    Mat d = Mat::Zero(3, 3);
    d.diagonal() << -3, -1, -2;
    const auto ld = decompose(d);
    CHECK(ld.eigenvalues[0].real() == Catch::Approx(-1));
    CHECK(ld.eigenvalues[1].real() == Catch::Approx(-2));
    CHECK(ld.eigenvalues[2].real() == Catch::Approx(-3));
}

TEST_CASE("eigen residual and normalization") {
    const Mat a = sp_a(0.1);
    const auto lin = decompose(a);
    for (int j = 0; j < 4; ++j) {
        const CVec v = lin.eigenvectors.col(j);
        CHECK((a.cast<Complex>() * v - lin.eigenvalues[j] * v).norm() <= 1e-10 * a.norm());
        CHECK(v.norm() == Catch::Approx(1.0));
        Eigen::Index k;
        v.cwiseAbs().maxCoeff(&k);
        CHECK(v[k].imag() == 0.0);
        CHECK(v[k].real() > 0.0);
    }
    for (int j = 1; j < 4; ++j) CHECK(lin.eigenvalues[j - 1].real() >= lin.eigenvalues[j].real() - 1e-12);
}

TEST_CASE("Shaw-Pierre spectrum") {
    // at δ = 0 the printed values are reproduced
    const auto l0 = decompose(sp_a(0.0));
    CHECK(std::round(l0.eigenvalues[0].real() * 1e4) / 1e4 == Catch::Approx(-0.0741));
    CHECK(std::round(l0.eigenvalues[0].imag() * 1e4) / 1e4 == Catch::Approx(1.0027));
    CHECK(std::round(l0.eigenvalues[2].real() * 1e4) / 1e4 == Catch::Approx(-0.3759));
    CHECK(std::round(l0.eigenvalues[2].imag() * 1e4) / 1e4 == Catch::Approx(1.6812));
    // at δ = 0.1 compare with roots of the characteristic polynomial
    const Mat a = sp_a(0.1);
    const double k11 = -a(1, 0);
    const auto lin = decompose(a);
    for (int j = 0; j < 4; ++j) {
        const Complex s = lin.eigenvalues[j];
        CHECK(std::abs((s * Mat::Identity(4, 4).cast<Complex>() - a.cast<Complex>()).determinant()) < 1e-10);
    }
    CHECK(k11 > 2.0);
    CHECK(lin.eigenvalues[0].real() == Catch::Approx(-0.07439).margin(1e-5));
    CHECK(lin.eigenvalues[0].imag() == Catch::Approx(1.00443).margin(1e-5));
    CHECK(lin.eigenvalues[2].real() == Catch::Approx(-0.37561).margin(1e-5));
    CHECK(lin.eigenvalues[2].imag() == Catch::Approx(1.68208).margin(1e-5));
}

TEST_CASE("spectral quotients") {
    const auto lin = decompose(sp_a(0.1));
    const auto e1 = slowest_subspace(lin, 1);
    CHECK(relative_spectral_quotient(lin, e1) == 5);
    CHECK(absolute_spectral_quotient(lin, e1) == 5);
    const auto e2 = spectral_subspace(lin, {2, 3});
    CHECK(relative_spectral_quotient(lin, e2) == 1);
    const auto all = spectral_subspace(lin, {0, 1, 2, 3});
    CHECK_THROWS_AS(absolute_spectral_quotient(lin, all), DegenerateError);

    Mat b(4, 4);
    b << -1, 1, 0, 0, -1, -1, 0, 0, 0, 0, -10, 1, 0, 0, -1, -10;
    const auto lb = decompose(b);
    CHECK(absolute_spectral_quotient(lb, slowest_subspace(lb, 1)) == 10);
    Mat c = -Mat::Identity(2, 2);
    const auto lc = decompose(c);
    CHECK(relative_spectral_quotient(lc, spectral_subspace(lc, {0, 1})) == 1);
    // time rescaling leaves quotients unchanged
    const auto ls = decompose(3.7 * sp_a(0.1));
    CHECK(relative_spectral_quotient(ls, slowest_subspace(ls, 1)) == 5);
}

TEST_CASE("subspace invariants") {
    const Mat a = sp_a(0.1);
    const auto lin = decompose(a);
    const auto e = slowest_subspace(lin, 1);
    CHECK((e.w_basis * e.v_basis - Mat::Identity(2, 2)).norm() < 1e-10);
    CHECK((a * e.v_basis - e.v_basis * e.r_block).norm() <= 1e-9 * a.norm());
    CHECK_THROWS_AS(spectral_subspace(lin, {0}), PreconditionError);
}

TEST_CASE("modal change block structure and round trip") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Mat blocks = Mat::Zero(4, 4);
        const double a1 = -0.1 - 0.5 * std::abs(u(rng)), b1 = 1 + std::abs(u(rng));
        const double a2 = -1 - std::abs(u(rng)), b2 = 3 + std::abs(u(rng));
        blocks.block(0, 0, 2, 2) << a1, b1, -b1, a1;
        blocks.block(2, 2, 2, 2) << a2, b2, -b2, a2;
        Mat t = Mat::Identity(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) t(i, j) += 0.3 * u(rng);
        const Mat a = t * blocks * t.inverse();
        const auto mc = modal_change(decompose(a));
        CHECK((mc.v * mc.v_inv - Mat::Identity(4, 4)).norm() <= 1e-10);
        CHECK(mc.blocks(0, 0) == Catch::Approx(a1));
        CHECK(mc.blocks(0, 1) == Catch::Approx(b1));
        CHECK(mc.blocks(1, 0) == Catch::Approx(-b1));
        CHECK(std::abs(mc.blocks(0, 2)) < 1e-10);
        const auto again = modal_change(decompose(a));
        CHECK((again.v - mc.v).norm() == 0.0);
    }
}

TEST_CASE("block-diagonal input keeps the coordinate axes") {
    Mat a(2, 2);
    a << -0.2, 2.0, -2.0, -0.2;
    const auto mc = modal_change(decompose(a));
    // columns are scaled axes
    CHECK(std::abs(mc.v(1, 0)) < 1e-12);
    CHECK(std::abs(mc.v(0, 1)) < 1e-12);
}

TEST_CASE("defective matrix is rejected") {
    Mat j(2, 2);
    j << -1, 1, 0, -1;
    CHECK_THROWS_AS(decompose(j), DecompositionError);
}
