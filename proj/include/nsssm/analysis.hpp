#pragma once

#include "nsssm/pws.hpp"
#include "nsssm/rom.hpp"
#include "nsssm/shaw_pierre.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace nsssm {

// State handed between successive integration chunks: observable state plus
// the branch it was last integrated on (0 inside Σ).
struct FlowState {
    double t = 0.0;
    Vec x;
    int branch = 1;
    // ROM only: reduced state in the chart of branch `chart` (used to resume inside Σ)
    Vec eta;
    int chart = 1;
};

struct EventSample {
    double t;
    Vec x;
    EventKind kind;
    int branch_after;
};

struct FlowChunk {
    std::vector<double> t;  // uniform grid, both ends included
    std::vector<Vec> x;
    std::vector<EventSample> events;
    FlowState end;
};

/// Common interface of the full switched model and the switched ROM.
class Flow {
public:
    virtual ~Flow() = default;
    virtual FlowChunk advance(const FlowState& s, double t1, double dt) const = 0;
};

class FullFlow : public Flow {
public:
    explicit FullFlow(PiecewiseSmoothSystem sys, HybridOptions opts = {});
    FlowChunk advance(const FlowState& s, double t1, double dt) const override;

private:
    PiecewiseSmoothSystem sys_;
    HybridOptions opts_;
};

class RomFlow : public Flow {
public:
    explicit RomFlow(NonsmoothRom rom, RomOptions opts = {});
    FlowChunk advance(const FlowState& s, double t1, double dt) const override;
    const NonsmoothRom& rom() const { return rom_; }

private:
    NonsmoothRom rom_;
    RomOptions opts_;
};

// ---------------------------------------------------------------------------
// forced response

struct SteadyStateOptions {
    double rel_tol = 1e-3;   // successive-period amplitude change
    int window = 5;          // periods that must satisfy rel_tol in a row
    int max_periods = 500;
    int samples_per_period = 128;
    int chunk_periods = 5;
};

struct SteadyState {
    double amplitude = 0.0;  // half peak-to-peak of the coordinate over the last period
    bool converged = false;
    int periods = 0;
    FlowState state;
};

/// Integrate period by period until the response amplitude settles.
SteadyState steady_state(const Flow& flow, const FlowState& start, double omega, int coord,
                         const SteadyStateOptions& opts = {});

using FlowFactory = std::function<std::unique_ptr<Flow>(double omega)>;

struct FrcOptions {
    SteadyStateOptions steady;
    bool warm_start = true;   // sequential sweep; otherwise independent points from the start state
    bool parallel = true;     // OpenMP over independent work items
};

/// Amplitudes along an ω grid for one model.
std::vector<SteadyState> frc_curve(const FlowFactory& make, const std::vector<double>& omegas,
                                   const FlowState& start, int coord, const FrcOptions& opts = {});

struct FrcPoint {
    double omega = 0.0;
    double amplitude_full = 0.0;
    double amplitude_rom = 0.0;
    bool converged_full = false;
    bool converged_rom = false;
};

/// Full model and ROM side by side; the two sweeps run concurrently.
std::vector<FrcPoint> frc_sweep(const FlowFactory& full, const FlowFactory& rom, const std::vector<double>& omegas,
                                const FlowState& start_full, const FlowState& start_rom, int coord,
                                const FrcOptions& opts = {});

void write_frc_csv(std::ostream& os, const std::vector<FrcPoint>& frc);

/// Steady amplitude of q1 for the linear part of the model under the
/// forcing eps f0 cos(Ω t); reference for the brute-force sweep at α = δ = 0.
double sp_linear_response(const SpParams& p, double omega);

// ---------------------------------------------------------------------------
// Poincaré map on Σ (Shaw–Pierre), coordinates (q1, q2, dq2)

struct SectionPoint {
    int iter;
    double t;
    Vec x;          // full state at the crossing
    int direction;  // branch entered
};

struct PoincareOptions {
    HybridOptions hybrid;
    double t_max = 400.0;
    int transient = 2;  // iterates dropped per sequence before collecting Γ
    int edge_offset = 4;  // edge pre-image is arrival transient + edge_offset
    bool parallel = true;
};

struct PoincareData {
    std::vector<std::vector<SectionPoint>> sequences;
    std::vector<bool> truncated;  // fewer than n_iterates crossings before t_max
    // arc[b] collects the post-transient iterates arriving from side b (index 0: +, 1: -)
    std::vector<Vec> arc_plus, arc_minus;
    Vec edge_plus, edge_minus;         // (q1, q2, dq2)
    Vec preimage_plus, preimage_minus; // full states on Σ at the sticking boundary
};

PoincareData poincare_map(const SpParams& p, const std::vector<Vec>& ics, int n_iterates,
                          const PoincareOptions& opts = {});

/// Arrival k on Σ of the trajectory from rho* ic placed on the sticking
/// boundary by bisection in rho ∈ (0, 1], and the arrival after it.
std::pair<SectionPoint, SectionPoint> sp_boundary_arrival(const SpParams& p, const Vec& ic, int k,
                                                          const PoincareOptions& opts = {});

/// Section coordinates (q1, q2, dq2) of a full Shaw–Pierre state.
Vec section_coords(const Vec& x);

/// Scaled distance on the section: coordinatewise division by `scale`.
double section_distance(const Vec& a, const Vec& b, const Vec& scale);

struct InvariantCurveApprox {
    std::vector<Vec> arc_plus, arc_minus;  // M± ∩ Σ in section coordinates, ordered by q1
    Vec edge_plus, edge_minus;             // x̃_edge±
};

/// Point of M_b ∩ Σ with first coordinate q1 (Newton on the reduced coordinates).
Vec sp_arc_point(const SsmModel& model, const SwitchingFunction& sw, double q1, Vec* eta_guess = nullptr);

/// ROM-only approximation of the invariant curve and its edges.
InvariantCurveApprox approx_invariant_curve(const NonsmoothRom& rom, const SpParams& p, double q1_span = 1.0,
                                            int points = 101);

void write_poincare_csv(std::ostream& os, const PoincareData& d);

// ---------------------------------------------------------------------------
// limit cycles and spectra

struct LimitCycleOptions {
    double t_transient = 0.0;
    double closure_tol = 1e-6;  // relative to the amplitude
    int samples = 256;          // profile samples over one period
    double dt = 0.0;            // sampling step during the search (0: automatic)
};

struct LimitCycle {
    double period = 0.0;
    double frequency = 0.0;  // 1 / period
    double amplitude = 0.0;  // largest half peak-to-peak over the observables
    double closure = 0.0;    // ‖x(T) - x(0)‖ at the recurring event
    bool stable = true;      // found by forward integration
    std::vector<double> t;
    Mat x;                   // n x samples, one period
};

std::optional<LimitCycle> detect_limit_cycle(const Flow& flow, const FlowState& start, double t1,
                                             const LimitCycleOptions& opts = {});

void write_limit_cycle_json(std::ostream& os, const LimitCycle& lc);

struct Spectrum {
    std::vector<double> frequency;  // Hz
    std::vector<double> amplitude;
};

/// One-sided amplitude spectrum with a Hann window.
Spectrum amplitude_spectrum(const std::vector<double>& signal, double dt);

/// Frequencies of the largest local maxima, strongest first, refined by a
/// parabolic fit. Peaks below min_rel times the strongest are dropped.
std::vector<double> spectral_peaks(const Spectrum& s, int count, double min_rel = 0.05);

}  // namespace nsssm
