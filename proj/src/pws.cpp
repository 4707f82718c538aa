#include "nsssm/pws.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace nsssm {

SwitchingFunction SwitchingFunction::coordinate(int dim, int index, double offset) {
    if (index < 0 || index >= dim) throw PreconditionError("switching coordinate out of range");
    SwitchingFunction s;
    s.sigma = [index, offset](const Vec& x) { return x[index] - offset; };
    s.grad = [dim, index](const Vec&) {
        Vec g = Vec::Zero(dim);
        g[index] = 1.0;
        return g;
    };
    return s;
}

const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::Crossing: return "crossing";
        case BoundaryKind::AttractingSliding: return "attracting_sliding";
        case BoundaryKind::RepellingSliding: return "repelling_sliding";
        case BoundaryKind::Tangential: return "tangential";
    }
    return "?";
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Crossing: return "crossing";
        case EventKind::StickEntry: return "stick_entry";
        case EventKind::StickExit: return "stick_exit";
        case EventKind::Tangential: return "tangential";
    }
    return "?";
}

BoundaryClassification classify_normal(double a_plus, double a_minus, double fscale,
                                       double tangency) {
    BoundaryClassification c;
    c.a_plus = a_plus;
    c.a_minus = a_minus;
    const double win = tangency * (1.0 + fscale);
    if (std::abs(a_plus) < win || std::abs(a_minus) < win) {
        c.kind = BoundaryKind::Tangential;
    } else if (a_plus * a_minus > 0.0) {
        c.kind = BoundaryKind::Crossing;
        c.direction = a_plus > 0.0 ? 1 : -1;
    } else if (a_plus < 0.0) {
        c.kind = BoundaryKind::AttractingSliding;
    } else {
        c.kind = BoundaryKind::RepellingSliding;
    }
    return c;
}

BoundaryClassification classify_boundary(const PiecewiseSmoothSystem& sys, double t, const Vec& x,
                                         double eps_event, double tangency) {
    const double s = sys.switching.sigma(x);
    if (!(std::abs(s) <= eps_event)) {
        std::ostringstream os;
        os << "classify_boundary: state is not on the switching surface (sigma=" << s << ")";
        throw PreconditionError(os.str());
    }
    const Vec g = sys.switching.grad(x);
    const Vec fp = sys.f_plus(t, x);
    const Vec fm = sys.f_minus(t, x);
    const double fscale = std::max(fp.norm(), fm.norm());
    return classify_normal(g.dot(fp), g.dot(fm), fscale, tangency);
}

FilippovResult filippov_field(const PiecewiseSmoothSystem& sys, double t, const Vec& x) {
    const Vec g = sys.switching.grad(x);
    const Vec fp = sys.f_plus(t, x);
    const Vec fm = sys.f_minus(t, x);
    const double ap = g.dot(fp);
    const double am = g.dot(fm);
    const double den = am - ap;
    if (std::abs(den) <= 1e-14 * (1.0 + std::abs(am) + std::abs(ap))) {
        throw DegenerateError("Filippov denominator (f- - f+).grad(sigma) vanishes");
    }
    FilippovResult r;
    r.lambda = (am + ap) / den;
    r.f = (am * fp - ap * fm) / den;
    return r;
}

std::size_t HybridTrajectory::count(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const HybridEvent& e) { return e.kind == k; }));
}

void HybridTrajectory::flatten(std::vector<double>& t, std::vector<Vec>& x,
                               std::vector<int>* branch) const {
    t.clear();
    x.clear();
    if (branch) branch->clear();
    for (const auto& seg : segments) {
        for (std::size_t i = 0; i < seg.t.size(); ++i) {
            if (!t.empty() && i == 0 && seg.t[0] == t.back()) {
                continue;
            }
            t.push_back(seg.t[i]);
            x.push_back(seg.x[i]);
            if (branch) branch->push_back(seg.branch);
        }
    }
}

namespace {

class HybridIntegrator {
public:
    HybridIntegrator(const PiecewiseSmoothSystem& sys, double t0, double t1,
                     const HybridOptions& opts)
        : sys_(sys), t0_(t0), t1_(t1), opts_(opts) {}

    HybridTrajectory run(const Vec& x0) {
        if (!x0.allFinite()) throw PreconditionError("initial state is not finite");
        if (x0.size() != sys_.dim) throw PreconditionError("initial state has wrong dimension");
        double t = t0_;
        Vec x = x0;
        if (t1_ <= t0_) return out_;

        const double s0 = sys_.switching.sigma(x);
        int mode;
        if (s0 > opts_.eps_event) {
            mode = 1;
        } else if (s0 < -opts_.eps_event) {
            mode = -1;
        } else {
            mode = decide(t, x, 0, false);
        }
        while (t < t1_ && !stopped_) {
            if (mode == 0) {
                mode = run_sliding(t, x);
            } else {
                mode = run_smooth(mode, t, x);
            }
        }
        return out_;
    }

private:
    void record(double t, const Vec& x, EventKind k, int after) {
        if (static_cast<long>(out_.events.size()) >= opts_.max_events) {
            std::ostringstream os;
            os << "more than " << opts_.max_events << " boundary events (chattering?) at t=" << t;
            throw ChatteringError(os.str());
        }
        out_.events.push_back({t, x, k, after});
        if (opts_.stop && opts_.stop(out_.events.back())) stopped_ = true;
    }

    bool continuous_at(double t, const Vec& x) const {
        const Vec fp = sys_.f_plus(t, x);
        const Vec fm = sys_.f_minus(t, x);
        return (fp - fm).norm() <= 1e-14 * (1.0 + fp.norm());
    }

    // Decide the mode to continue with from a state on Σ. `from` is the
    // branch the trajectory arrived on (0: initial state).
    int decide(double& t, Vec& x, int from, bool record_event) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const auto c = classify_boundary(sys_, t, x, opts_.eps_event, opts_.tangency);
            switch (c.kind) {
                case BoundaryKind::Crossing:
                    if (record_event && c.direction != from && !continuous_at(t, x)) {
                        record(t, x, EventKind::Crossing, c.direction);
                    }
                    return c.direction;
                case BoundaryKind::AttractingSliding:
                    record(t, x, EventKind::StickEntry, 0);
                    return 0;
                case BoundaryKind::RepellingSliding:
                    throw NonUniquenessError("repelling sliding: forward solution is not unique", t, x);
                case BoundaryKind::Tangential:
                    break;
            }
            record(t, x, EventKind::Tangential, 0);
            const double sum = c.a_plus + c.a_minus;
            const int s = sum > 0.0 ? 1 : (sum < 0.0 ? -1 : (from != 0 ? -from : 1));
            micro_step(s, t, x);
            const double sg = sys_.switching.sigma(x);
            if (sg > opts_.eps_event) return 1;
            if (sg < -opts_.eps_event) return -1;
        }
        // Still grazing after repeated micro-steps: follow the averaged field.
        const double sg = sys_.switching.sigma(x);
        return sg >= 0.0 ? 1 : -1;
    }

    void micro_step(int s, double& t, Vec& x) {
        const double h = std::min(opts_.micro_step, t1_ - t);
        if (h <= 0.0) return;
        auto f = [&](double tt, const Vec& xx) { return sys_.field(s, tt, xx); };
        const Vec k1 = f(t, x);
        const Vec k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
        const Vec k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
        const Vec k4 = f(t + h, x + h * k3);
        const Vec xn = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        HybridSegment seg{s, {t, t + h}, {x, xn}};
        out_.segments.push_back(std::move(seg));
        t += h;
        x = xn;
    }

    void emit_grid(HybridSegment& seg, const DormandPrince& dp, double upto) {
        if (opts_.output_dt <= 0.0) return;
        while (true) {
            const double tg = t0_ + static_cast<double>(next_grid_) * opts_.output_dt;
            if (tg <= seg.t.back()) {
                ++next_grid_;
                continue;
            }
            if (tg >= upto) break;
            seg.t.push_back(tg);
            seg.x.push_back(dp.dense(tg));
            ++next_grid_;
        }
    }

    void push_step(HybridSegment& seg, const DormandPrince& dp, double upto, const Vec& x_end) {
        emit_grid(seg, dp, upto);
        if (opts_.output_dt <= 0.0 || upto >= t1_) {
            seg.t.push_back(upto);
            seg.x.push_back(x_end);
        }
    }

    void close_segment(HybridSegment& seg, double t, const Vec& x) {
        if (seg.t.back() != t) {
            seg.t.push_back(t);
            seg.x.push_back(x);
        }
        out_.segments.push_back(std::move(seg));
    }

    int run_smooth(int s, double& t, Vec& x) {
        Field f = s > 0 ? sys_.f_plus : sys_.f_minus;
        DormandPrince dp(f, opts_.ode);
        dp.reset(t, x);
        HybridSegment seg{s, {t}, {x}};
        auto g = [&](double, const Vec& xx) { return s * sys_.switching.sigma(xx); };
        while (dp.t() < t1_) {
            dp.step(t1_);
            const double g_new = g(dp.t(), dp.x());
            if (g_new < 0.0) {
                const double g_lo = g(dp.t_prev(), dp.x_prev());
                if (g_lo <= 0.0) {
                    // Left the valid side immediately after a boundary decision.
                    close_segment(seg, dp.t_prev(), dp.x_prev());
                    t = dp.t_prev();
                    x = dp.x_prev();
                    record(t, x, EventKind::Tangential, -s);
                    micro_step(-s, t, x);
                    const double sg = sys_.switching.sigma(x);
                    if (std::abs(sg) <= opts_.eps_event) return decide(t, x, s, true);
                    return sg > 0.0 ? 1 : -1;
                }
                const EventHit hit = bisect_event(dp, g, opts_.eps_event);
                push_step(seg, dp, hit.t, hit.x);
                close_segment(seg, hit.t, hit.x);
                t = hit.t;
                x = hit.x;
                if (t >= t1_ || stopped_) return s;
                if (std::abs(sys_.switching.sigma(x)) > opts_.eps_event) {
                    // bracket collapsed before reaching the tolerance; treat as a crossing
                    const int d = sys_.switching.sigma(x) > 0.0 ? 1 : -1;
                    record(t, x, EventKind::Crossing, d);
                    return d;
                }
                return decide(t, x, s, true);
            }
            push_step(seg, dp, dp.t(), dp.x());
        }
        close_segment(seg, dp.t(), dp.x());
        t = dp.t();
        x = dp.x();
        return s;
    }

    Vec project(const Vec& x) const {
        Vec y = x;
        for (int it = 0; it < 3; ++it) {
            const double s = sys_.switching.sigma(y);
            if (s == 0.0) break;
            const Vec g = sys_.switching.grad(y);
            y -= (s / g.squaredNorm()) * g;
        }
        return y;
    }

    int run_sliding(double& t, Vec& x) {
        Field fs = [this](double tt, const Vec& xx) { return filippov_field(sys_, tt, xx).f; };
        auto margin = [this](double tt, const Vec& xx) {
            const Vec g = sys_.switching.grad(xx);
            const double ap = g.dot(sys_.f_plus(tt, xx));
            const double am = g.dot(sys_.f_minus(tt, xx));
            return std::min(-ap, am);
        };
        x = project(x);
        DormandPrince dp(fs, opts_.ode);
        dp.reset(t, x);
        HybridSegment seg{0, {t}, {x}};
        while (dp.t() < t1_) {
            dp.step(t1_);
            dp.replace_state(project(dp.x()));
            if (margin(dp.t(), dp.x()) <= 0.0) {
                EventHit hit = bisect_event(dp, margin, 0.0);
                hit.x = project(hit.x);
                push_step(seg, dp, hit.t, hit.x);
                close_segment(seg, hit.t, hit.x);
                t = hit.t;
                x = hit.x;
                const Vec g = sys_.switching.grad(x);
                const double ap = g.dot(sys_.f_plus(t, x));
                const double am = g.dot(sys_.f_minus(t, x));
                // exit onto the side whose field now points away from Σ
                const int s = (-ap <= am) ? 1 : -1;
                record(t, x, EventKind::StickExit, s);
                return s;
            }
            push_step(seg, dp, dp.t(), dp.x());
        }
        close_segment(seg, dp.t(), dp.x());
        t = dp.t();
        x = dp.x();
        return 0;
    }

    const PiecewiseSmoothSystem& sys_;
    double t0_, t1_;
    const HybridOptions& opts_;
    HybridTrajectory out_;
    long next_grid_ = 0;
    bool stopped_ = false;
};

}  // namespace

HybridTrajectory integrate_hybrid(const PiecewiseSmoothSystem& sys, const Vec& x0, double t0,
                                  double t1, const HybridOptions& opts) {
    HybridIntegrator hi(sys, t0, t1, opts);
    return hi.run(x0);
}

void write_trajectory_csv(std::ostream& os, const HybridTrajectory& tr) {
    int n = 0;
    for (const auto& s : tr.segments) {
        if (!s.x.empty()) {
            n = static_cast<int>(s.x.front().size());
            break;
        }
    }
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    os << ",branch\n";
    os << std::setprecision(17);
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<int> b;
    tr.flatten(t, x, &b);
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << t[k];
        for (int i = 0; i < n; ++i) os << ',' << x[k][i];
        os << ',' << (b[k] > 0 ? 1 : (b[k] < 0 ? -1 : 0)) << '\n';
    }
}

void write_events_csv(std::ostream& os, const HybridTrajectory& tr) {
    int n = tr.events.empty() ? 0 : static_cast<int>(tr.events.front().x.size());
    os << "t_event,kind";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    os << '\n' << std::setprecision(17);
    for (const auto& e : tr.events) {
        os << e.t << ',' << to_string(e.kind);
        for (int i = 0; i < n; ++i) os << ',' << e.x[i];
        os << '\n';
    }
}

}  // namespace nsssm
