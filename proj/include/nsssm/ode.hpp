#pragma once

#include "nsssm/types.hpp"

#include <functional>
#include <optional>

namespace nsssm {

// Right-hand side of a (possibly time-dependent) first-order system.
using Field = std::function<Vec(double, const Vec&)>;

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double h_init = 0.0;  // 0: automatic
    double h_max = 0.0;   // 0: unbounded
    long max_steps = 50'000'000;
};

/// Adaptive Dormand–Prince 5(4) stepper with the 4th-order continuous
/// extension of dopri5. The stepper owns the current state; after every
/// accepted step, dense() interpolates inside [t_prev(), t()].
class DormandPrince {
public:
    DormandPrince(Field f, OdeOptions opts);

    void reset(double t, const Vec& x);

    /// Replace the current state at the current time (e.g. after projecting
    /// onto a constraint) while keeping the step-size history.
    void replace_state(const Vec& x);

    /// Take one accepted step, never past t_stop. Throws StiffnessError when
    /// the step size underflows.
    void step(double t_stop);

    double t() const { return t_; }
    double t_prev() const { return t_prev_; }
    const Vec& x() const { return x_; }
    const Vec& x_prev() const { return x_prev_; }
    const Vec& dx() const { return k1_; }
    double h() const { return h_; }
    long steps() const { return n_steps_; }
    long evaluations() const { return n_evals_; }

    Vec dense(double t) const;

    const Field& field() const { return f_; }
    const OdeOptions& options() const { return opts_; }

private:
    double initial_step(double t_stop);

    Field f_;
    OdeOptions opts_;
    double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0;
    Vec x_, x_prev_, k1_;
    // dense output coefficients of the last accepted step
    Vec r1_, r2_, r3_, r4_, r5_;
    long n_steps_ = 0;
    long n_evals_ = 0;
    bool has_step_ = false;
};

struct EventHit {
    double t;
    Vec x;
    double g;
};

/// Locate a sign change of g inside the last accepted step of `dp`
/// by bisection on the dense output. The returned state lies on the far
/// side of the sign change (or on the root) with |g| <= tol, unless the time
/// bracket collapses to round-off first.
EventHit bisect_event(const DormandPrince& dp, const std::function<double(double, const Vec&)>& g,
                      double tol);

/// Plain integration with uniformly spaced output samples (t0 included,
/// t1 included). Used for smooth data generation.
struct Samples {
    std::vector<double> t;
    std::vector<Vec> x;
};
/// Uniform samples on [t0, t1]. When `stop` is given the output ends before
/// the first sample for which it returns true.
Samples integrate_sampled(const Field& f, double t0, const Vec& x0, double t1, double dt_out,
                          const OdeOptions& opts, const std::function<bool(const Vec&)>& stop = nullptr);

}  // namespace nsssm
