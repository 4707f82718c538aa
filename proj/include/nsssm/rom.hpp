#pragma once

#include "nsssm/pws.hpp"
#include "nsssm/shaw_pierre.hpp"
#include "nsssm/ssm_model.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace nsssm {

enum class IcStrategy { Projection, MinAllVars, ContinuityQ1, ContinuityQ1Q2 };

const char* to_string(IcStrategy s);
IcStrategy ic_strategy_from_string(const std::string& s);

class NonsmoothRom;

struct StickOutcome {
    double t = 0.0;
    Vec x;          // reconstructed state at exit
    Vec eta;        // reduced state in the exit branch chart
    int branch = 0; // exit branch, 0 when still sticking at the end time
    std::vector<double> ts;
    std::vector<Vec> xs;
    std::vector<Vec> etas;
};

/// Rule deciding whether a reduced trajectory reaching Σ sticks, and the
/// dynamics inside Σ until it leaves again.
class StickingRule {
public:
    virtual ~StickingRule() = default;
    virtual bool sticks(const NonsmoothRom& rom, double t, const Vec& x, const Vec& eta, int from) const = 0;
    virtual StickOutcome run(const NonsmoothRom& rom, double t, const Vec& x, const Vec& eta, int from,
                             double t1, const OdeOptions& opts) const = 0;
};

/// Shaw–Pierre: sticking test on the reconstructed state, in-Σ motion of the
/// reconstructed state with the first mass held, exit when the force on the
/// first mass reaches δ.
class SpSticking : public StickingRule {
public:
    explicit SpSticking(SpParams p) : p_(p) {}
    bool sticks(const NonsmoothRom& rom, double t, const Vec& x, const Vec& eta, int from) const override;
    StickOutcome run(const NonsmoothRom& rom, double t, const Vec& x, const Vec& eta, int from, double t1,
                     const OdeOptions& opts) const override;
    double force(double t, const Vec& x) const;

private:
    SpParams p_;
};

/// Filippov sliding of the reduced dynamics in a shared physical chart
/// ζ = W0 x. Requires both branch models to carry the same chart W0 and a
/// linear switching function whose gradient lies in the row space of W0.
class ReducedFilippovSticking : public StickingRule {
public:
    ReducedFilippovSticking(const NonsmoothRom& rom);
    bool sticks(const NonsmoothRom& rom, double t, const Vec& x, const Vec& eta, int from) const override;
    StickOutcome run(const NonsmoothRom& rom, double t, const Vec& x, const Vec& eta, int from, double t1,
                     const OdeOptions& opts) const override;

    /// Normal components (a+, a-) at ζ.
    std::pair<double, double> normals(const NonsmoothRom& rom, double t, const Vec& zeta) const;

private:
    Vec field(const NonsmoothRom& rom, int branch, double t, const Vec& zeta) const;
    Vec c_;        // σ = c·ζ + s0
    double s0_ = 0.0;
    Mat w0_;
};

class NonsmoothRom {
public:
    NonsmoothRom(SsmModel plus, SsmModel minus, SwitchingFunction switching);

    const SsmModel& model(int branch) const { return branch > 0 ? plus_ : minus_; }
    const SwitchingFunction& switching() const { return switching_; }
    double sigma(int branch, double t, const Vec& eta) const;
    int dim() const { return plus_.dim(); }

    IcStrategy strategy = IcStrategy::Projection;
    // observable indices matched by the continuity strategies (q1, q2)
    int q1_index = 0;
    int q2_index = 2;
    std::shared_ptr<const StickingRule> sticking;

private:
    SsmModel plus_, minus_;
    SwitchingFunction switching_;
};

/// Initial condition on the target branch after leaving `from` at eta_from.
Vec switch_ic(const NonsmoothRom& rom, const Vec& eta_from, int from, double t = 0.0);

struct RomEvent {
    double t;
    Vec x_before;
    Vec x_after;
    EventKind kind;
    int branch_after;
    double jump;  // ‖x_after - x_before‖
};

struct RomSegment {
    int branch;
    std::vector<double> t;
    std::vector<Vec> eta;
    std::vector<Vec> x;
};

struct RomTrajectory {
    std::vector<RomSegment> segments;
    std::vector<RomEvent> events;
    // reduced state at the end time, in the chart of end_chart
    Vec end_eta;
    int end_chart = 1;
    bool end_sticking = false;
    std::size_t count(EventKind k) const;
    const Vec& final_state() const { return segments.back().x.back(); }
    int final_branch() const { return segments.back().branch; }
    void flatten(std::vector<double>& t, std::vector<Vec>& x, std::vector<int>* branch = nullptr) const;
};

struct RomOptions {
    OdeOptions ode;
    double eps_event = kEventTol;
    long max_events = 10000;
    double output_dt = 0.0;  // 0: every accepted step
};

/// When `sticking_state` is given the run starts inside Σ at that
/// reconstructed state, with eta0 in the chart of branch0.
RomTrajectory simulate_rom(const NonsmoothRom& rom, const Vec& eta0, int branch0, double t0, double t1,
                           const RomOptions& opts = {}, const Vec* sticking_state = nullptr);

/// Reconstructed trajectory sampled on a uniform grid (dense output).
struct UniformTrajectory {
    std::vector<double> t;
    Mat x;  // n x P
};
UniformTrajectory resample(const RomTrajectory& tr, double t0, double dt, int count);
UniformTrajectory resample(const HybridTrajectory& tr, double t0, double dt, int count);

/// `t, x1..xn, branch, xi1, xi2`
void write_rom_csv(std::ostream& os, const RomTrajectory& tr);

}  // namespace nsssm
