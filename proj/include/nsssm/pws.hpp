#pragma once

#include "nsssm/ode.hpp"
#include "nsssm/types.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace nsssm {

inline constexpr double kEventTol = 1e-10;

struct SwitchingFunction {
    std::function<double(const Vec&)> sigma;
    std::function<Vec(const Vec&)> grad;

    /// σ(x) = x[index] - offset
    static SwitchingFunction coordinate(int dim, int index, double offset = 0.0);
};

/// Two smooth fields, each defined on both sides of Σ = {σ = 0}.
/// Branch + is valid where σ > 0.
struct PiecewiseSmoothSystem {
    int dim = 0;
    Field f_plus;
    Field f_minus;
    SwitchingFunction switching;
    double delta = 0.0;

    Vec field(int branch, double t, const Vec& x) const {
        return branch > 0 ? f_plus(t, x) : f_minus(t, x);
    }
};

enum class BoundaryKind { Crossing, AttractingSliding, RepellingSliding, Tangential };

struct BoundaryClassification {
    BoundaryKind kind;
    int direction = 0;  // for Crossing: +1 toward σ > 0, -1 toward σ < 0
    double a_plus = 0.0;
    double a_minus = 0.0;
};

const char* to_string(BoundaryKind k);

BoundaryClassification classify_boundary(const PiecewiseSmoothSystem& sys, double t, const Vec& x,
                                         double eps_event = kEventTol, double tangency = 1e-9);

/// Classification from the two normal components only. `fscale` enters the
/// tangency window |a| < tangency·(1 + fscale).
BoundaryClassification classify_normal(double a_plus, double a_minus, double fscale,
                                       double tangency = 1e-9);

struct FilippovResult {
    double lambda;
    Vec f;
};

FilippovResult filippov_field(const PiecewiseSmoothSystem& sys, double t, const Vec& x);

enum class EventKind { Crossing, StickEntry, StickExit, Tangential };
const char* to_string(EventKind k);

struct HybridEvent {
    double t;
    Vec x;
    EventKind kind;
    int branch_after;  // +1, -1, 0 (sliding)
};

struct HybridSegment {
    int branch;  // +1, -1, 0 (Σ)
    std::vector<double> t;
    std::vector<Vec> x;
};

struct HybridTrajectory {
    std::vector<HybridSegment> segments;
    std::vector<HybridEvent> events;

    bool empty() const { return segments.empty(); }
    const Vec& final_state() const { return segments.back().x.back(); }
    double final_time() const { return segments.back().t.back(); }
    int final_branch() const { return segments.back().branch; }
    std::size_t count(EventKind k) const;
    /// All samples flattened, junction duplicates removed.
    void flatten(std::vector<double>& t, std::vector<Vec>& x, std::vector<int>* branch = nullptr) const;
};

struct HybridOptions {
    OdeOptions ode;
    double eps_event = kEventTol;
    double tangency = 1e-9;
    long max_events = 10000;
    double micro_step = 1e-8;
    double output_dt = 0.0;  // 0: every accepted step
    // Optional early stop, called after every event; return true to stop.
    std::function<bool(const HybridEvent&)> stop;
};

HybridTrajectory integrate_hybrid(const PiecewiseSmoothSystem& sys, const Vec& x0, double t0,
                                  double t1, const HybridOptions& opts = {});

void write_trajectory_csv(std::ostream& os, const HybridTrajectory& tr);
void write_events_csv(std::ostream& os, const HybridTrajectory& tr);

}  // namespace nsssm
