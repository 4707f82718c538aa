#pragma once

#include "nsssm/pws.hpp"
#include "nsssm/types.hpp"

namespace nsssm {

// Two-mass Shaw–Pierre oscillator with Coulomb friction on the first mass.
// State x = (q1, dq1, q2, dq2).
struct SpParams {
    double m1 = 1.0;
    double m2 = 1.0;
    double c = 0.3;
    double k = 1.0;
    double alpha = 0.5;
    double delta = 0.0;  // friction acceleration (coefficient times g)
    double eps = 0.0;    // forcing amplitude
    double omega = 1.0;  // forcing frequency

    void validate() const;
};

struct SpFixedPoints {
    double q0_plus;
    double q0_minus;
    Vec x0_plus;
    Vec x0_minus;

    double q0(int branch) const { return branch > 0 ? q0_plus : q0_minus; }
    const Vec& x0(int branch) const { return branch > 0 ? x0_plus : x0_minus; }
};

/// Linear part of the unforced model (friction and cubic spring excluded).
Mat sp_linear_matrix(const SpParams& p);

/// Forcing direction f0 such that the forcing term is eps * f0 * cos(omega t).
Vec sp_forcing_direction(const SpParams& p);

Vec sp_field(const SpParams& p, int branch, double t, const Vec& x);

SwitchingFunction sp_switching();

/// Elastic plus damping force acting on the first mass (per unit mass) on Σ,
/// i.e. the quantity compared against δ in the sticking condition.
double sp_stick_force(const SpParams& p, const Vec& x);

bool sp_sticking_test(const SpParams& p, const Vec& x, double eps_event = kEventTol);

/// Dynamics inside Σ while the first mass sticks (q1 frozen, dq1 = 0).
Vec sp_sticking_field(const SpParams& p, double t, const Vec& x);

SpFixedPoints sp_fixed_points(const SpParams& p);

/// Model written in coordinates shifted to the branch fixed point:
/// dξ/dt = A ξ + quadratic(ξ) + cubic(ξ) + f0.
struct SpShifted {
    int branch;
    double q0;
    Vec x0;
    Mat a_tilde;
    Vec constant;     // f0, vanishes by the fixed-point condition
    double quad_coeff;  // coefficient of ξ1² in component 2
    double cubic_coeff; // coefficient of ξ1³ in component 2

    Vec quadratic(const Vec& xi) const;
    Vec cubic(const Vec& xi) const;
    Vec nonlinear(const Vec& xi) const { return quadratic(xi) + cubic(xi); }
};

SpShifted sp_shifted(const SpParams& p, int branch);

PiecewiseSmoothSystem sp_system(const SpParams& p);

/// Mechanical energy (kinetic + quadratic springs + quartic spring).
double sp_energy(const SpParams& p, const Vec& x);

}  // namespace nsssm
