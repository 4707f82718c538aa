#pragma once

#include "nsssm/shaw_pierre.hpp"
#include "nsssm/vk_beam.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nsssm {

enum class ModelKind { ShawPierre, VkBeam };

struct BeamConfig {
    BeamProperties props;
    std::string variant = "coulomb";
    std::optional<double> delta;             // raw coefficient (N, or N/m for soft impact)
    std::optional<double> normalized_delta;  // δ̃, used when delta is absent
    double v_ground = 0.1;
    double alpha_fric = 0.3;
    double beta_fric = 0.1;
    double force = 0.0;   // midpoint forcing amplitude (N)
    double omega = 0.0;   // forcing frequency (rad/s)
    double reference_load = 12e3;

    /// Assembled model; the belt gets 20 N when neither delta form is given.
    BeamModel build() const;
};

struct SimulateConfig {
    double t0 = 0.0;
    double t1 = 10.0;
    double dt = 0.01;
    std::vector<double> ic;  // full state; empty: model default
    std::string rom;         // SsmModel JSON file(s); empty: full model
    std::string rom_minus;
    std::string strategy = "projection";
    std::string output = "trajectory.csv";
};

struct FitConfig {
    int order_m = 5;
    int order_r = 5;
    double rho = 0.1;          // Shaw–Pierre ring radius
    double t_end = 0.0;        // 0: model default
    double load = 12e3;        // beam static load (N)
    int n_ics = 8;
    std::string output = "model";  // writes <output>_plus.json and <output>_minus.json
};

struct FrcConfig {
    double omega_min = 0.8;
    double omega_max = 1.2;
    int points = 81;
    int coord = -1;  // -1: q1 (Shaw–Pierre) or q_mid (beam)
    bool warm_start = true;
    std::vector<double> ic;
    int max_periods = 500;
    std::string output = "frc.csv";
};

struct PoincareConfig {
    int n_ics = 12;
    double q1_start = 0.15;
    double q1_step = 0.05;
    int random_ics = 0;      // extra ICs with q1 drawn uniformly from the same range
    bool mirror = true;
    int iterates = 40;
    double t_max = 400.0;
    int transient = 2;
    std::string output = "poincare.csv";
};

struct LimitCycleConfig {
    double t_end = 3.0;
    double t_transient = 2.0;
    bool rom = false;
    std::vector<double> ic;
    std::string output = "limit_cycle.json";
};

struct RunConfig {
    ModelKind model = ModelKind::ShawPierre;
    SpParams shaw_pierre = [] {
        SpParams p;
        p.delta = 0.1;
        return p;
    }();
    BeamConfig beam;
    SimulateConfig simulate;
    FitConfig fit;
    FrcConfig frc;
    PoincareConfig poincare;
    LimitCycleConfig limitcycle;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: OpenMP default
};

/// Validates and converts; throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace nsssm
