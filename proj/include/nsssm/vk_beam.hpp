#pragma once

#include "nsssm/pws.hpp"
#include "nsssm/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nsssm {

struct BeamProperties {
    double length = 1.0;
    double width = 0.05;
    double thickness = 0.02;
    double young_modulus = 70e9;
    double density = 2700.0;
    double poisson = 0.3;
    double damping_modulus = 1e6;
    int n_elements = 4;

    double area() const { return width * thickness; }
    double inertia() const { return width * thickness * thickness * thickness / 12.0; }
    void validate() const;
};

/// Clamped-clamped von Kármán beam with linear axial and cubic Hermite
/// transverse shape functions. Free DOFs are ordered node by node as
/// (u, w, θ) for the interior nodes.
class BeamAssembly {
public:
    BeamProperties props;
    Mat mass, damping, stiffness;  // free x free
    Mat mass_inv;
    int mid_index = 0;             // transverse displacement of the middle node
    int n_free = 0;
    int n_raw = 0;

    /// Geometric nonlinearity: internal force minus K q (velocity-independent).
    Vec nonlinear_force(const Vec& q, const Vec& qd) const;
    Vec internal_force(const Vec& q) const;
    Mat tangent_stiffness(const Vec& q) const;
    double strain_energy(const Vec& q) const;

private:
    friend BeamAssembly assemble_beam(const BeamProperties&);
    // element accumulation; fills f and/or kt (either may be null), returns energy
    double element_loop(const Vec& q, Vec* f, Mat* kt) const;
    std::vector<int> free_map_;  // raw index -> free index or -1
};

BeamAssembly assemble_beam(const BeamProperties& props);

/// Closed-form first clamped-clamped Euler–Bernoulli frequency (rad/s).
double euler_bernoulli_first_frequency(const BeamProperties& props);

enum class VariantKind { Coulomb, SoftImpact, MovingBelt };

const char* to_string(VariantKind k);
VariantKind variant_from_string(const std::string& s);

struct NonsmoothVariant {
    VariantKind kind = VariantKind::Coulomb;
    double delta = 0.0;
    double v_ground = 0.1;
    double alpha_fric = 0.3;
    double beta_fric = 0.1;
};

/// f_ns of the belt law at relative velocity rel = dq_mid - v_ground.
double belt_friction_law(const NonsmoothVariant& v, double rel);
/// Analytic extension of the belt law valid on one side: -(1 + α e^{-rel/β})
/// for branch + and (1 + α e^{rel/β}) for branch -.
double belt_branch_law(const NonsmoothVariant& v, int branch, double rel);
double belt_branch_law_derivative(const NonsmoothVariant& v, int branch, double rel);

/// Full first-order model: x = (q, dq), 2 n_free states, optional harmonic
/// midpoint forcing F cos(Ω t).
struct BeamModel {
    BeamAssembly assembly;
    NonsmoothVariant variant;
    double force_amplitude = 0.0;
    double force_omega = 0.0;

    int dim() const { return 2 * assembly.n_free; }
    int mid() const { return assembly.mid_index; }
    int mid_velocity() const { return assembly.n_free + assembly.mid_index; }

    /// Non-smooth generalized force on the free DOFs for one branch.
    Vec branch_force(int branch, const Vec& x) const;
    Vec field(int branch, double t, const Vec& x) const;
    Mat jacobian(int branch, const Vec& x) const;
    SwitchingFunction switching() const;
    PiecewiseSmoothSystem system() const;
    /// Equilibrium of the smooth extension of one branch.
    Vec fixed_point(int branch) const;
    /// Unit midpoint forcing direction in state space (M⁻¹ e_mid in the velocity rows).
    Vec forcing_direction() const;
    double energy(const Vec& x) const;
};

/// Newton solve of K q + f_nl(q) = load e_mid (load stepping when needed).
Vec static_deflection(const BeamAssembly& a, double load);
/// Newton solve of K q + f_nl(q) = f for a general load vector.
Vec static_solve(const BeamAssembly& a, const Vec& load);

/// Reference force of the Coulomb/belt normalization: internal elastic force at
/// the midpoint in the configuration deflected by `reference_load`.
double coulomb_reference_force(const BeamAssembly& a, double reference_load = 12e3);
double normalized_delta(const BeamAssembly& a, const NonsmoothVariant& v,
                        double reference_load = 12e3);
double raw_delta(const BeamAssembly& a, VariantKind kind, double normalized,
                 double reference_load = 12e3);

void write_matrix_csv(std::ostream& os, const Mat& m);

}  // namespace nsssm
