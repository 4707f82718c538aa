#include <catch_amalgamated.hpp>

#include "nsssm/analysis.hpp"
#include "nsssm/shaw_pierre.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace nsssm;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Van der Pol oscillator with weak dry friction, so that crossings of dx = 0 are events
PiecewiseSmoothSystem van_der_pol(double mu, double friction) {
    PiecewiseSmoothSystem s;
    s.dim = 2;
    s.f_plus = [mu, friction](double, const Vec& x) {
        Vec d(2);
        d << x[1], mu * (1 - x[0] * x[0]) * x[1] - x[0] - friction;
        return d;
    };
    s.f_minus = [mu, friction](double, const Vec& x) {
        Vec d(2);
        d << x[1], mu * (1 - x[0] * x[0]) * x[1] - x[0] + friction;
        return d;
    };
    s.delta = friction;
    s.switching = SwitchingFunction::coordinate(2, 1);
    return s;
}

}  // namespace

TEST_CASE("spectrum of a sinusoid") {
    const double dt = 1e-3;
    std::vector<double> sig;
    for (int k = 0; k < 20000; ++k) {
        const double t = k * dt;
        sig.push_back(2.0 * std::sin(kTwoPi * 7.3 * t) + 0.5 * std::cos(kTwoPi * 31.0 * t));
    }
    const auto s = amplitude_spectrum(sig, dt);
    REQUIRE(s.frequency.size() == s.amplitude.size());
    const auto peaks = spectral_peaks(s, 3);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == Catch::Approx(7.3).margin(0.01));
    CHECK(peaks[1] == Catch::Approx(31.0).margin(0.01));
    // the weak line disappears above the relative floor
    CHECK(spectral_peaks(s, 3, 0.5).size() == 1);
}

TEST_CASE("linear steady state matches the closed form") {
    SpParams p;
    p.alpha = 0.0;
    p.delta = 0.0;
    p.eps = 0.05;
    for (double w : {0.85, 1.0, 1.15}) {
        p.omega = w;
        FlowState s;
        s.x = Vec::Zero(4);
        const auto ss = steady_state(FullFlow(sp_system(p)), s, w, 0);
        CHECK(ss.converged);
        CHECK(ss.amplitude == Catch::Approx(sp_linear_response(p, w)).epsilon(2e-3));
    }
}

TEST_CASE("serial and parallel sweeps agree") {
    SpParams p;
    p.delta = 1e-2;
    p.eps = 0.1;
    FlowFactory mk = [p](double w) {
        SpParams q = p;
        q.omega = w;
        return std::make_unique<FullFlow>(sp_system(q));
    };
    FlowState s;
    s.x = Vec::Zero(4);
    s.x[0] = 0.1;
    FrcOptions o;
    o.warm_start = false;
    o.parallel = false;
    const std::vector<double> om = {0.9, 1.0, 1.1};
    const auto a = frc_curve(mk, om, s, 0, o);
    o.parallel = true;
    const auto b = frc_curve(mk, om, s, 0, o);
    for (std::size_t i = 0; i < om.size(); ++i) CHECK(a[i].amplitude == b[i].amplitude);
}

TEST_CASE("FRC CSV layout") {
    std::ostringstream os;
    write_frc_csv(os, {FrcPoint{1.0, 0.5, 0.49, true, false}});
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    CHECK(header.find("omega") != std::string::npos);
    CHECK(row.substr(0, 1) == "1");
}

TEST_CASE("Van der Pol limit cycle") {
    FlowState s;
    s.x = Vec(2);
    s.x << 0.5, 0.0;
    LimitCycleOptions o;
    o.t_transient = 40.0;
    const auto lc = detect_limit_cycle(FullFlow(van_der_pol(1.0, 1e-3)), s, 80.0, o);
    REQUIRE(lc);
    // close to the smooth cycle: period 6.6633, velocity amplitude 2.67
    CHECK(lc->period == Catch::Approx(6.6633).margin(2e-2));
    CHECK(lc->amplitude == Catch::Approx(2.67).margin(2e-2));
    CHECK(lc->closure <= 1e-6 * lc->amplitude);
    CHECK(lc->x.cols() == o.samples);
}

TEST_CASE("decaying motion has no limit cycle") {
    SpParams p;
    p.delta = 0.0;
    FlowState s;
    s.x = Vec::Zero(4);
    s.x[0] = 0.2;
    LimitCycleOptions o;
    o.t_transient = 20.0;
    CHECK_FALSE(detect_limit_cycle(FullFlow(sp_system(p)), s, 80.0, o));
}

TEST_CASE("section helpers") {
    Vec x(4);
    x << 1.0, 0.0, 2.0, 3.0;
    const Vec c = section_coords(x);
    REQUIRE(c.size() == 3);
    CHECK(c[0] == 1.0);
    CHECK(c[2] == 3.0);
    Vec scale(3);
    scale << 1.0, 2.0, 4.0;
    CHECK(section_distance(c, Vec::Zero(3), scale) == Catch::Approx(std::sqrt(1.0 + 1.0 + 0.5625)));
}
