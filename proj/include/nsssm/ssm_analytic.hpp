#pragma once

#include "nsssm/polynomial.hpp"
#include "nsssm/shaw_pierre.hpp"
#include "nsssm/spectral.hpp"
#include "nsssm/ssm_model.hpp"

#include <array>
#include <string>
#include <vector>

namespace nsssm {

/// Shifted Shaw–Pierre model written in modal coordinates η = (y, z) = V⁻¹ ξ:
/// dy/dt = A_y y + r_y N(ξ1),  dz/dt = A_z z + r_z N(ξ1),  ξ1 = p · η,
/// with N(ξ1) = quad_coeff ξ1² + cubic_coeff ξ1³.
struct ModalSplit {
    int branch = 1;
    SpParams params;
    SpShifted shifted;
    LinearizedSystem lin;
    Mat v, v_inv, blocks;
    Mat a_y, a_z;
    Vec r_y, r_z;
    Vec q_vector;       // p, ordered (y1, y2, z1, z2)
    double q2_scale;    // quad_coeff
    double q3_scale;    // cubic_coeff

    double nonlinearity(double xi1) const { return q2_scale * xi1 * xi1 + q3_scale * xi1 * xi1 * xi1; }
};

ModalSplit modal_split(const SpParams& p, int branch);

/// z = Σ h_p y^p over the graded-lex basis of degrees 2..3 (7 monomials).
struct SsmCoefficients {
    int branch = 1;
    int order = 0;  // highest solved order
    Mat h;          // 2 x 7
    Mat basis_v;
    Vec q3_vector;
    double q2_scale = 0.0;

    Vec slave(const Vec& y) const;
    Mat slave_jacobian(const Vec& y) const;
};

/// Solve the invariance equation order by order. order = 2 solves the
/// quadratic part only, order = 3 both. Throws ResonanceError when a
/// homological system is singular.
SsmCoefficients solve_invariance(const ModalSplit& split, int order = 3);

struct ReducedDynamics {
    int branch = 1;
    Mat r;  // 2 x 9 over degrees 1..3
    Vec eval(const Vec& y) const;
};

ReducedDynamics solve_reduced_dynamics(const ModalSplit& split, const SsmCoefficients& coeffs);

/// Analytic periodic correction for forcing eps * f0 * cos(omega t).
PeriodicCorrection solve_periodic_correction(const ModalSplit& split, double eps, double omega,
                                             const Vec& f0);

/// x = x0 + V (y, h(y))
Vec evaluate_manifold(const ModalSplit& split, const SsmCoefficients& coeffs, const Vec& y);

/// Mean over the circle |y| = rho of |LHS - RHS| / |RHS| of the invariance equation.
double invariance_error(const ModalSplit& split, const SsmCoefficients& coeffs, double rho,
                        int n_samples = 64);

/// Package the analytic branch as a generic SsmModel.
SsmModel analytic_model(const ModalSplit& split, const SsmCoefficients& coeffs,
                        const ReducedDynamics& rd);

/// Convenience: full analytic construction of one Shaw–Pierre branch.
SsmModel build_sp_model(const SpParams& p, int branch, bool with_correction = false);

// Printed coefficient tables for δ = 0.1, branch +.
// h: rows h1, h2; columns (2,0),(1,1),(0,2),(3,0),(2,1),(1,2),(0,3).
// r: rows r1, r2; columns (1,0),(0,1), then the seven above.
struct PrintedTables {
    std::array<std::array<double, 7>, 2> h;
    std::array<std::array<int, 7>, 2> h_digits;
    std::array<std::array<double, 9>, 2> r;
    std::array<std::array<int, 9>, 2> r_digits;
};
PrintedTables printed_tables(int branch);

/// Round `value` to `digits` significant digits on the decade of `printed`.
double round_like(double value, double printed, int digits);

struct TableEntry {
    std::string name;  // e.g. "plus.h2(1,1)"
    double computed = 0.0;
    double printed = 0.0;
    double rounded = 0.0;  // computed value at the printed precision
    bool pass = false;
};

struct TableReport {
    bool compared = false;     // false when δ differs from the tabulated 0.1
    std::vector<TableEntry> entries;
    double max_quadratic = 0.0;  // largest |quadratic coefficient| over both branches
    bool all_pass() const;
};

/// Analytic coefficients of both branches against the printed tables.
/// `flip` >= 0 negates that computed entry first (harness self-test).
TableReport validate_tables(const SpParams& p, int flip = -1);

}  // namespace nsssm
