#pragma once

#include "nsssm/rom.hpp"
#include "nsssm/shaw_pierre.hpp"
#include "nsssm/ssm_data.hpp"
#include "nsssm/vk_beam.hpp"

#include <array>
#include <vector>

namespace nsssm {

// Training recipes and ROM assembly shared by the CLI and the acceptance runs.

struct BranchTraining {
    std::vector<Vec> ics;
    double t_end = 1.0;
    double dt = 1e-4;
    double trim_fraction = 0.05;
    double velocity_cap = 0.0;  // stop once |dq_mid - dq_mid(x0)| exceeds it (0: never)
};

struct DataRom {
    NonsmoothRom rom;
    std::array<TrajectoryDataset, 2> data;  // index 0: branch +, 1: branch -
    std::array<FitReport, 2> manifold_reports;
    std::array<FitReport, 2> dynamics_reports;
};

/// Decays released from the static deflections under `load` and -0.8 `load`
/// at the midpoint.
BranchTraining beam_static_training(const BeamModel& m, double load = 12e3);

/// Small kicks around the branch equilibrium for the moving belt, whose slow
/// pair is unstable; trajectories end at the velocity cap.
BranchTraining belt_training(const BeamModel& m, int branch);

/// Default recipe for the variant: static decays for Coulomb and soft impact,
/// belt kicks for the moving belt.
BranchTraining default_beam_training(const BeamModel& m, int branch);

/// Per-branch data-driven fits (manifold order m, dynamics order r) in the
/// physical chart (q_mid, dq_mid). Coulomb and belt get Filippov sliding there.
DataRom build_beam_rom(const BeamModel& m, const BranchTraining& plus, const BranchTraining& minus,
                       int order_m = 5, int order_r = 5, bool parallel = true);

/// Copy of a beam ROM with the forcing correction for F cos(Ω t) at the midpoint.
NonsmoothRom force_beam_rom(const NonsmoothRom& rom, const BeamModel& m, double force, double omega);

/// Reduced state of a point in the chart of `branch` (the physical chart of the beam ROM).
Vec beam_rom_state(const NonsmoothRom& rom, int branch, double q_mid, double dq_mid);

/// Decays of one Shaw–Pierre branch from a ring of radius rho in the modal
/// coordinates of the slow pair.
TrajectoryDataset sp_training(const SpParams& p, int branch, double rho, double t_end = 60.0, int n_ics = 8,
                              double dt = 0.05, double trim_fraction = 0.5, bool parallel = true);

/// Data-driven Shaw–Pierre model in the modal chart of the slow pair.
SsmModel fit_sp_model(const SpParams& p, const TrajectoryDataset& data, int order_m = 5, int order_r = 5,
                      FitReport* manifold = nullptr, FitReport* dynamics = nullptr);

}  // namespace nsssm
