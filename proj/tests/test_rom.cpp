#include <catch_amalgamated.hpp>

#include "nsssm/rom.hpp"
#include "nsssm/ssm_analytic.hpp"

#include <cmath>
#include <sstream>

using namespace nsssm;

namespace {

SpParams sp(double delta) {
    SpParams p;
    p.delta = delta;
    return p;
}

NonsmoothRom sp_rom(const SpParams& p, IcStrategy s = IcStrategy::Projection) {
    NonsmoothRom rom(build_sp_model(p, 1), build_sp_model(p, -1), sp_switching());
    rom.strategy = s;
    rom.sticking = std::make_shared<SpSticking>(p);
    return rom;
}

}  // namespace

TEST_CASE("strategy names round trip") {
    for (auto s : {IcStrategy::Projection, IcStrategy::MinAllVars, IcStrategy::ContinuityQ1,
                   IcStrategy::ContinuityQ1Q2}) {
        CHECK(ic_strategy_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_AS(ic_strategy_from_string("nearest"), ConfigError);
}

TEST_CASE("projection is the identity when both branches coincide") {
    const auto rom = sp_rom(sp(0.0));
    Vec eta(2);
    eta << 0.2, -0.1;
    CHECK((switch_ic(rom, eta, 1) - eta).norm() == 0.0);
    CHECK((switch_ic(rom, eta, -1) - eta).norm() == 0.0);
}

TEST_CASE("projection shifts by the chart image of the fixed point offset") {
    const auto rom = sp_rom(sp(0.1));
    Vec eta(2);
    eta << 0.05, 0.02;
    const auto& mp = rom.model(1);
    const auto& mm = rom.model(-1);
    const Vec expect = eta + mm.projection() * (mp.x0() - mm.x0());
    CHECK((switch_ic(rom, eta, 1) - expect).norm() <= 1e-15);
}

TEST_CASE("constrained strategies satisfy their conditions") {
    const auto p = sp(0.1);
    // a point of the + branch manifold sitting on Σ
    auto rom = sp_rom(p, IcStrategy::ContinuityQ1);
    const auto& mp = rom.model(1);
    Vec eta(2);
    eta << 0.3, 0.0;
    for (int it = 0; it < 50; ++it) {
        const Vec x = mp.lift(eta);
        const Mat j = mp.lift_jacobian(eta);
        eta[1] -= x[1] / j(1, 1);
    }
    const Vec xf = mp.lift(eta);
    REQUIRE(std::abs(xf[1]) < 1e-12);

    const Vec e1 = switch_ic(rom, eta, 1);
    const Vec x1 = rom.model(-1).lift(e1);
    CHECK(std::abs(x1[0] - xf[0]) <= 1e-10);
    CHECK(std::abs(x1[1]) <= 1e-10);

    rom.strategy = IcStrategy::ContinuityQ1Q2;
    const Vec x2 = rom.model(-1).lift(switch_ic(rom, eta, 1));
    CHECK(std::abs(x2[0] - xf[0]) <= 1e-10);
    CHECK(std::abs(x2[2] - xf[2]) <= 1e-10);

    rom.strategy = IcStrategy::MinAllVars;
    const Vec e3 = switch_ic(rom, eta, 1);
    const Vec x3 = rom.model(-1).lift(e3);
    CHECK(std::abs(x3[1]) <= 1e-10);
    // no feasible neighbour on Σ is closer to the source state
    const double d0 = (x3 - xf).norm();
    for (double h : {-1e-3, 1e-3}) {
        Vec e = e3;
        e[0] += h;
        for (int it = 0; it < 50; ++it) {
            const Mat j = rom.model(-1).lift_jacobian(e);
            e[1] -= rom.model(-1).lift(e)[1] / j(1, 1);
        }
        CHECK((rom.model(-1).lift(e) - xf).norm() >= d0 - 1e-12);
    }
}

TEST_CASE("ROM without friction follows the single smooth branch") {
    const auto rom = sp_rom(sp(0.0));
    Vec eta(2);
    eta << 0.3, 0.0;
    RomOptions o;
    o.output_dt = 0.1;
    const auto tr = simulate_rom(rom, eta, 1, 0.0, 20.0, o);
    CHECK(tr.count(EventKind::Crossing) > 2);
    CHECK(tr.count(EventKind::StickEntry) == 0);
    for (const auto& e : tr.events) CHECK(e.jump <= 1e-12);

    const auto& m = rom.model(1);
    DormandPrince dp([&](double t, const Vec& y) { return m.reduced_field(t, y); }, OdeOptions{});
    dp.reset(0.0, eta);
    while (dp.t() < 20.0) dp.step(20.0);
    CHECK((tr.final_state() - m.lift(dp.x())).norm() <= 1e-7);

    const auto u = resample(tr, 0.0, 0.1, 201);
    CHECK(u.x.cols() == 201);
    CHECK((u.x.col(200) - tr.final_state()).norm() <= 1e-9);
}

TEST_CASE("friction ROM sticks and ends at rest") {
    const auto p = sp(0.1);
    const auto rom = sp_rom(p);
    Vec eta(2);
    eta << 0.3, 0.0;
    const auto tr = simulate_rom(rom, eta, 1, 0.0, 60.0);
    CHECK(tr.count(EventKind::StickEntry) >= 1);
    CHECK(tr.final_state().allFinite());
    CHECK(std::abs(tr.final_state()[1]) < 1e-3);
}

TEST_CASE("event cap raises chattering") {
    const auto rom = sp_rom(sp(0.0));
    Vec eta(2);
    eta << 0.3, 0.0;
    RomOptions o;
    o.max_events = 1;
    CHECK_THROWS_AS(simulate_rom(rom, eta, 1, 0.0, 30.0, o), ChatteringError);
}

TEST_CASE("reduced sticking needs a shared physical chart") {
    const auto rom = sp_rom(sp(0.1));
    CHECK_THROWS_AS(ReducedFilippovSticking(rom), ConfigError);

    const auto p = sp(0.1);
    Mat w0 = Mat::Zero(2, 4);
    w0(0, 0) = 1.0;
    w0(1, 1) = 1.0;
    NonsmoothRom r2(build_sp_model(p, 1).recharted(w0), build_sp_model(p, -1).recharted(w0), sp_switching());
    ReducedFilippovSticking rule(r2);
    // on Σ near the + fixed point the friction force dominates: attracting
    Vec zeta(2);
    zeta << 0.0, 0.0;
    const auto [ap, am] = rule.normals(r2, 0.0, zeta);
    CHECK(ap < 0.0);
    CHECK(am > 0.0);
    r2.sticking = std::make_shared<ReducedFilippovSticking>(r2);
    Vec eta(2);
    eta << 0.3 - r2.model(1).x0()[0], 0.0;
    const auto tr = simulate_rom(r2, eta, 1, 0.0, 40.0);
    CHECK(tr.count(EventKind::StickEntry) >= 1);
    CHECK(tr.final_state().allFinite());
}

TEST_CASE("ROM CSV header") {
    const auto rom = sp_rom(sp(0.0));
    Vec eta(2);
    eta << 0.1, 0.0;
    std::ostringstream os;
    write_rom_csv(os, simulate_rom(rom, eta, 1, 0.0, 1.0));
    CHECK(os.str().rfind("t,x1,x2,x3,x4,branch,xi1,xi2\n", 0) == 0);
}
