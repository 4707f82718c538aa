#include <catch_amalgamated.hpp>

#include "nsssm/shaw_pierre.hpp"
#include "nsssm/ssm_analytic.hpp"
#include "nsssm/ssm_data.hpp"

#include <cmath>
#include <filesystem>

using namespace nsssm;

namespace {

const double kA = 0.7, kB = -0.4, kC = 1.3;

Vec truth(const Vec& x0, double u, double v) {
    Vec x(3);
    x << u, v, kA * u * u + kB * u * v + kC * v * v;
    return x0 + x;
}

// damped rotation ξ' = R ξ sampled exactly, lifted onto a quadratic graph
TrajectoryDataset graph_dataset(const Vec& x0) {
    TrajectoryDataset d;
    d.dt = 0.01;
    for (double phase : {0.0, 1.0, 2.5}) {
        Trajectory tr;
        const int p = 2001;
        tr.y.resize(3, p);
        for (int k = 0; k < p; ++k) {
            const double t = k * d.dt;
            const double r = 0.5 * std::exp(-0.1 * t);
            tr.t.push_back(t);
            tr.y.col(k) = truth(x0, r * std::cos(t + phase), -r * std::sin(t + phase));
        }
        d.trajectories.push_back(std::move(tr));
    }
    return d;
}

Mat identity_basis() {
    Mat v = Mat::Zero(3, 2);
    v(0, 0) = 1;
    v(1, 1) = 1;
    return v;
}

}  // namespace

TEST_CASE("finite differences are fourth order inside") {
    const int p = 101;
    Mat y(1, p);
    for (int k = 0; k < p; ++k) y(0, k) = std::sin(0.05 * k);
    const Mat dy = finite_difference(y, 0.05);
    double err = 0.0;
    for (int k = 2; k < p - 2; ++k) err = std::max(err, std::abs(dy(0, k) - std::cos(0.05 * k)));
    CHECK(err < 1e-6);
    CHECK_THROWS_AS(finite_difference(Mat::Zero(1, 2), 0.1), PreconditionError);
}

TEST_CASE("quadratic graph and linear dynamics are recovered") {
    Vec x0(3);
    x0 << 0.1, -0.2, 0.05;
    const auto data = graph_dataset(x0);
    const auto mf = fit_manifold(data, x0, identity_basis(), 2);
    CHECK(mf.report.residual < 1e-12);
    CHECK((mf.w * mf.v - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK((mf.w * mf.m_coeffs).norm() < 1e-12);

    const auto df = fit_dynamics(data, mf, 1);
    Mat r(2, 2);
    r << -0.1, 1.0, -1.0, -0.1;
    CHECK((df.r_coeffs - r).norm() < 1e-6);

    const auto model = make_model(1, mf, df);
    CHECK(model.source == "data");
    for (double u : {-0.3, 0.1, 0.4}) {
        for (double v : {-0.2, 0.25}) {
            Vec xi(2);
            xi << u, v;
            CHECK((model.lift(xi) - truth(x0, u, v)).norm() < 1e-10);
        }
    }
    const double scale = dataset_scale(data, x0);
    CHECK(scale > 0.5);
    CHECK(reconstruction_nmte(model, data.trajectories[1], scale) < 1e-6);
}

TEST_CASE("higher fit orders leave the extra coefficients at zero") {
    Vec x0 = Vec::Zero(3);
    const auto data = graph_dataset(x0);
    const auto mf = fit_manifold(data, x0, identity_basis(), 3);
    CHECK(mf.m_coeffs.rightCols(4).norm() < 1e-9);
    const auto df = fit_dynamics(data, mf, 3);
    CHECK(df.r_coeffs.rightCols(df.r_coeffs.cols() - 2).norm() < 1e-4);
}

TEST_CASE("fit preconditions") {
    Vec x0 = Vec::Zero(3);
    const auto data = graph_dataset(x0);
    CHECK_THROWS_AS(fit_manifold(data, x0, identity_basis(), 1), PreconditionError);
    Mat w = Mat::Zero(2, 3);
    w(0, 0) = 2.0;
    w(1, 1) = 1.0;
    CHECK_THROWS_AS(fit_manifold(data, x0, identity_basis(), 2, w), PreconditionError);
    TrajectoryDataset empty;
    CHECK_THROWS_AS(empty.validate(), PreconditionError);
}

TEST_CASE("normalized mean trajectory error") {
    Mat ref = Mat::Zero(2, 4);
    for (int k = 0; k < 4; ++k) ref(0, k) = k;
    Mat rec = ref;
    rec.row(1).setConstant(0.5);
    CHECK(nmte(ref, rec, 1.0) == Catch::Approx(0.5));
    CHECK(nmte(ref, rec, 2.0) == Catch::Approx(0.25));
    CHECK(nmte(ref, ref, 1.0) == 0.0);
    CHECK_THROWS_AS(nmte(ref, rec.leftCols(3), 1.0), PreconditionError);
    CHECK_THROWS_AS(nmte(ref, rec, 0.0), PreconditionError);
}

TEST_CASE("change of chart") {
    SpParams p;
    p.delta = 0.1;
    const auto m = build_sp_model(p, 1);
    const auto same = chart_change(m, m.w());
    CHECK((same.p - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK(same.condition == Catch::Approx(1.0));

    Mat bad = Mat::Zero(2, 4);
    bad(0, 0) = 1.0;
    bad(1, 0) = 2.0;
    CHECK_THROWS_AS(rechart(m, bad), ChartError);

    Mat w0 = Mat::Zero(2, 4);
    w0(0, 0) = 1.0;
    w0(1, 1) = 1.0;
    ChartChange info;
    const auto r = rechart(m, w0, &info);
    CHECK(info.condition < 1e8);
    // the same physical point in both charts
    Vec xi(2);
    xi << 0.2, -0.05;
    const Vec x = m.lift(xi);
    const Vec eta = r.chart(x);
    CHECK((eta - w0 * (x - m.x0())).norm() < 1e-14);
    CHECK((r.lift(eta) - x).norm() < 1e-10);
    // the vector fields agree after pushing forward through the chart
    const Vec fx = r.lift_jacobian(eta) * r.reduced_field(eta);
    const Vec fm = m.lift_jacobian(xi) * m.reduced_field(xi);
    CHECK((fx - fm).norm() < 1e-6 * fm.norm());
}

TEST_CASE("forcing correction without modal structure") {
    SpParams p;
    p.delta = 0.1;
    const auto m = build_sp_model(p, 1);
    const auto sh = sp_shifted(p, 1);
    const Vec f0 = sp_forcing_direction(p);
    const auto zero = nonmodal_forcing_correction(m, sh.a_tilde, Vec::Zero(4), 0.01, 1.2);
    CHECK(zero.v_hat.norm() == 0.0);
    CHECK(zero.r_hat.norm() == 0.0);

    const auto pc = nonmodal_forcing_correction(m, sh.a_tilde, f0, 0.01, 1.2);
    CHECK((m.projection().cast<Complex>() * pc.v_hat).norm() < 1e-12);
    const auto an = solve_periodic_correction(modal_split(p, 1), 0.01, 1.2, f0);
    CHECK((pc.v_hat - an.v_hat).norm() < 1e-10 * (1 + an.v_hat.norm()));
    CHECK((pc.r_hat - an.r_hat).norm() < 1e-10 * (1 + an.r_hat.norm()));
}

TEST_CASE("training generation and dataset IO") {
    SpParams p;
    p.delta = 0.1;
    const auto fp = sp_fixed_points(p);
    Field f = [&](double t, const Vec& x) { return sp_field(p, 1, t, x); };
    std::vector<Vec> ics;
    for (double s : {0.1, 0.2}) {
        Vec x = fp.x0_plus;
        x[0] += s;
        ics.push_back(x);
    }
    TrainingOptions o;
    o.parallel = false;
    const auto serial = generate_training(f, 1, ics, 0.0, 5.0, 0.05, o);
    o.parallel = true;
    const auto par = generate_training(f, 1, ics, 0.0, 5.0, 0.05, o);
    REQUIRE(serial.trajectories.size() == 2);
    CHECK(serial.trajectories[0].samples() == 101);
    CHECK(serial.trim == 5);
    for (int k = 0; k < 2; ++k) CHECK((serial.trajectories[k].y - par.trajectories[k].y).norm() == 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "nsssm_dataset_test";
    std::filesystem::remove_all(dir);
    write_dataset(serial, dir.string());
    const auto back = read_dataset(dir.string());
    CHECK(back.branch == 1);
    CHECK(back.trim == serial.trim);
    CHECK(back.dt == serial.dt);
    REQUIRE(back.trajectories.size() == 2);
    CHECK((back.trajectories[1].y - serial.trajectories[1].y).norm() <= 1e-15 * serial.trajectories[1].y.norm());
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(read_dataset(dir.string()), ConfigError);
}
