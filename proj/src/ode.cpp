#include "nsssm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nsssm {

namespace {
// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// continuous extension
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace

DormandPrince::DormandPrince(Field f, OdeOptions opts) : f_(std::move(f)), opts_(opts) {}

void DormandPrince::reset(double t, const Vec& x) {
    if (!x.allFinite()) {
        throw PreconditionError("initial state is not finite");
    }
    t_ = t_prev_ = t;
    x_ = x_prev_ = x;
    k1_ = f_(t, x);
    ++n_evals_;
    has_step_ = false;
    h_ = 0.0;
}

void DormandPrince::replace_state(const Vec& x) {
    x_ = x;
    k1_ = f_(t_, x_);
    ++n_evals_;
}

double DormandPrince::initial_step(double t_stop) {
    if (opts_.h_init > 0.0) return opts_.h_init;
    // Hairer–Wanner starting step heuristic.
    const Vec sc = (opts_.atol + opts_.rtol * x_.array().abs()).matrix();
    const double d0 = std::sqrt((x_.array() / sc.array()).square().mean());
    const double dd1 = std::sqrt((k1_.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h0 = std::min(h0, std::abs(t_stop - t_));
    const Vec x1 = x_ + h0 * k1_;
    const Vec f1 = f_(t_ + h0, x1);
    ++n_evals_;
    const double d2 = std::sqrt((((f1 - k1_).array()) / sc.array()).square().mean()) / h0;
    const double h1 = (std::max(dd1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(dd1, d2), 0.2);
    return std::min(100.0 * h0, h1);
}

void DormandPrince::step(double t_stop) {
    if (t_stop <= t_) throw PreconditionError("step: t_stop must exceed current time");
    if (h_ <= 0.0) h_ = initial_step(t_stop);
    if (opts_.h_max > 0.0) h_ = std::min(h_, opts_.h_max);

    const double h_floor = 1e-14 * std::max(1.0, std::abs(t_));
    while (true) {
        double h = std::min(h_, t_stop - t_);
        const bool clipped = h < h_;
        if (h < h_floor && !clipped) {
            std::ostringstream os;
            os << "step size underflow (h=" << h << ") at t=" << t_;
            throw StiffnessError(os.str());
        }
        const Vec& k1 = k1_;
        const Vec k2 = f_(t_ + c2 * h, x_ + h * (a21 * k1));
        const Vec k3 = f_(t_ + c3 * h, x_ + h * (a31 * k1 + a32 * k2));
        const Vec k4 = f_(t_ + c4 * h, x_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = f_(t_ + c5 * h, x_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 =
            f_(t_ + h, x_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec x_new = x_ + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const Vec k7 = f_(t_ + h, x_new);
        n_evals_ += 6;

        const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const Vec sc =
            (opts_.atol + opts_.rtol * x_.array().abs().max(x_new.array().abs())).matrix();
        double en = std::sqrt((err.array() / sc.array()).square().mean());
        if (!std::isfinite(en)) en = 1e10;

        if (en <= 1.0) {
            // dense output
            r1_ = x_;
            r2_ = x_new - x_;
            r3_ = h * k1 - r2_;
            r4_ = r2_ - h * k7 - r3_;
            r5_ = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            t_prev_ = t_;
            x_prev_ = x_;
            t_ = (clipped || t_ + h >= t_stop) ? (t_prev_ + h >= t_stop ? t_stop : t_prev_ + h)
                                               : t_prev_ + h;
            x_ = x_new;
            k1_ = k7;
            ++n_steps_;
            has_step_ = true;
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            if (!clipped) h_ = h * fac;
            if (opts_.h_max > 0.0) h_ = std::min(h_, opts_.h_max);
            if (n_steps_ > opts_.max_steps) {
                throw StiffnessError("maximum number of integration steps exceeded");
            }
            return;
        }
        h_ = h * std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
        if (h_ < h_floor) {
            std::ostringstream os;
            os << "step size underflow (h=" << h_ << ") at t=" << t_;
            throw StiffnessError(os.str());
        }
    }
}

Vec DormandPrince::dense(double t) const {
    if (!has_step_) return x_;
    const double h = t_ - t_prev_;
    if (h <= 0.0) return x_;
    const double th = std::clamp((t - t_prev_) / h, 0.0, 1.0);
    const double th1 = 1.0 - th;
    return r1_ + th * (r2_ + th1 * (r3_ + th * (r4_ + th1 * r5_)));
}

EventHit bisect_event(const DormandPrince& dp, const std::function<double(double, const Vec&)>& g,
                      double tol) {
    double lo = dp.t_prev();
    double hi = dp.t();
    Vec x_hi = dp.x();
    double g_lo = g(lo, dp.x_prev());
    double g_hi = g(hi, x_hi);
    const bool lo_positive = g_lo > 0.0;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(g_hi) <= tol) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const Vec xm = dp.dense(mid);
        const double gm = g(mid, xm);
        if ((gm > 0.0) == lo_positive && gm != 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            x_hi = xm;
            g_hi = gm;
        }
    }
    return {hi, x_hi, g_hi};
}

Samples integrate_sampled(const Field& f, double t0, const Vec& x0, double t1, double dt_out,
                          const OdeOptions& opts, const std::function<bool(const Vec&)>& stop) {
    Samples out;
    if (dt_out <= 0.0) throw PreconditionError("sampling interval must be positive");
    const long n = static_cast<long>(std::floor((t1 - t0) / dt_out + 1e-9));
    out.t.reserve(n + 1);
    out.x.reserve(n + 1);
    out.t.push_back(t0);
    out.x.push_back(x0);
    if (n <= 0) return out;
    DormandPrince dp(f, opts);
    dp.reset(t0, x0);
    long k = 1;
    const double t_end = t0 + n * dt_out;
    while (k <= n) {
        dp.step(t_end);
        while (k <= n && t0 + k * dt_out <= dp.t() + 1e-12 * std::abs(dt_out)) {
            const double tk = t0 + k * dt_out;
            Vec xk = k == n ? dp.x() : dp.dense(tk);
            if (stop && stop(xk)) return out;
            out.t.push_back(tk);
            out.x.push_back(std::move(xk));
            ++k;
        }
    }
    return out;
}

}  // namespace nsssm
