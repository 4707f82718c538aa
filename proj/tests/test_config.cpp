#include <catch_amalgamated.hpp>

#include "nsssm/config.hpp"

using namespace nsssm;
using nlohmann::json;

TEST_CASE("defaults survive a round trip") {
    const RunConfig c = parse_config(json::object());
    CHECK(c.model == ModelKind::ShawPierre);
    CHECK(c.shaw_pierre.delta == 0.1);
    CHECK(c.frc.points == 81);
    const json j = to_json(c);
    CHECK(to_json(parse_config(j)) == j);
}

TEST_CASE("unknown keys are rejected with their path") {
    try {
        parse_config(json{{"simulate", {{"t_end", 3.0}}}});
        FAIL("accepted an unknown key");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("simulate") != std::string::npos);
        CHECK(std::string(e.what()).find("t_end") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(json{{"colour", "red"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"beam", {{"length", 1.0}, {"lenght", 2.0}}}}), ConfigError);
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS_AS(parse_config(json{{"model", "pendulum"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"simulate", {{"t0", 2.0}, {"t1", 1.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"simulate", {{"dt", "fast"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"frc", {{"omega_min", 1.2}, {"omega_max", 0.8}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"beam", {{"delta", 1.0}, {"normalized_delta", 1e-3}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"beam", {{"variant", "glue"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"threads", -1}}), ConfigError);
    // t1 == t0 is a valid empty run
    CHECK_NOTHROW(parse_config(json{{"simulate", {{"t0", 1.0}, {"t1", 1.0}}}}));
}

TEST_CASE("beam friction coefficient forms") {
    BeamConfig b;
    b.variant = "moving_belt";
    CHECK(b.build().variant.delta == 20.0);
    b.variant = "coulomb";
    CHECK(b.build().variant.delta == 0.0);
    b.normalized_delta = 1e-3;
    const BeamModel m = b.build();
    CHECK(m.variant.delta == Catch::Approx(raw_delta(m.assembly, VariantKind::Coulomb, 1e-3)));
    b.normalized_delta.reset();
    b.delta = 7.5;
    CHECK(b.build().variant.delta == 7.5);
}
