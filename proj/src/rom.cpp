#include "nsssm/rom.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace nsssm {

const char* to_string(IcStrategy s) {
    switch (s) {
        case IcStrategy::Projection: return "projection";
        case IcStrategy::MinAllVars: return "min_all_vars";
        case IcStrategy::ContinuityQ1: return "continuity_q1";
        case IcStrategy::ContinuityQ1Q2: return "continuity_q1q2";
    }
    return "?";
}

IcStrategy ic_strategy_from_string(const std::string& s) {
    for (auto k : {IcStrategy::Projection, IcStrategy::MinAllVars, IcStrategy::ContinuityQ1,
                   IcStrategy::ContinuityQ1Q2}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError("unknown IC strategy '" + s + "'");
}

NonsmoothRom::NonsmoothRom(SsmModel plus, SsmModel minus, SwitchingFunction switching)
    : plus_(std::move(plus)), minus_(std::move(minus)), switching_(std::move(switching)) {
    if (plus_.dim() != minus_.dim()) throw PreconditionError("ROM branches differ in observable dimension");
    if (plus_.reduced_dim() != minus_.reduced_dim()) throw PreconditionError("ROM branches differ in reduced dimension");
    if (plus_.branch() != 1 || minus_.branch() != -1) throw PreconditionError("ROM branch labels must be + and -");
}

double NonsmoothRom::sigma(int branch, double t, const Vec& eta) const {
    return switching_.sigma(model(branch).lift(eta, t));
}

namespace {

// Newton iteration for two equations in two reduced unknowns.
Vec newton2(const std::function<Vec(const Vec&)>& res, const std::function<Mat(const Vec&)>& jac, Vec eta,
            const char* what) {
    for (int it = 0; it < 100; ++it) {
        const Vec r = res(eta);
        if (!r.allFinite()) break;
        const Mat j = jac(eta);
        const Vec step = j.fullPivLu().solve(r);
        eta -= step;
        if (r.norm() <= 1e-13 && step.norm() <= 1e-12 * (1.0 + eta.norm())) return eta;
        if (step.norm() <= 1e-15 * (1.0 + eta.norm())) return eta;
    }
    if (eta.allFinite() && res(eta).norm() <= 1e-10) return eta;
    throw StrategyError(std::string(what) + ": constrained IC computation did not converge");
}

}  // namespace

Vec switch_ic(const NonsmoothRom& rom, const Vec& eta_from, int from, double t) {
    const SsmModel& src = rom.model(from);
    const SsmModel& dst = rom.model(-from);
    // affine offset between the two charts
    const Vec proj = eta_from + dst.projection() * (src.x0() - dst.x0());
    if (rom.strategy == IcStrategy::Projection) return proj;

    const Vec x_from = src.lift(eta_from, t);
    const auto& sw = rom.switching();
    auto lift = [&](const Vec& e) { return dst.lift(e, t); };
    switch (rom.strategy) {
        case IcStrategy::MinAllVars: {
            Vec eta = proj;
            const int d = static_cast<int>(eta.size());
            for (int it = 0; it < 200; ++it) {
                const Vec x = lift(eta);
                const Vec r = x - x_from;
                const Mat j = dst.lift_jacobian(eta);
                const double c = sw.sigma(x);
                const Vec g = (sw.grad(x).transpose() * j).transpose();
                Mat kkt = Mat::Zero(d + 1, d + 1);
                kkt.topLeftCorner(d, d) = j.transpose() * j;
                kkt.topRightCorner(d, 1) = g;
                kkt.bottomLeftCorner(1, d) = g.transpose();
                Vec rhs(d + 1);
                rhs.head(d) = -j.transpose() * r;
                rhs[d] = -c;
                const Vec s = kkt.fullPivLu().solve(rhs);
                eta += s.head(d);
                if (!eta.allFinite()) break;
                if (s.head(d).norm() <= 1e-13 * (1.0 + eta.norm()) && std::abs(c) <= 1e-11) return eta;
            }
            throw StrategyError("min_all_vars: constrained minimization did not converge");
        }
        case IcStrategy::ContinuityQ1: {
            const int i1 = rom.q1_index;
            auto res = [&](const Vec& e) {
                const Vec x = lift(e);
                Vec r(2);
                r << x[i1] - x_from[i1], sw.sigma(x);
                return r;
            };
            auto jac = [&](const Vec& e) {
                const Vec x = lift(e);
                const Mat j = dst.lift_jacobian(e);
                Mat m(2, j.cols());
                m.row(0) = j.row(i1);
                m.row(1) = sw.grad(x).transpose() * j;
                return m;
            };
            return newton2(res, jac, proj, "continuity_q1");
        }
        case IcStrategy::ContinuityQ1Q2: {
            const int i1 = rom.q1_index, i2 = rom.q2_index;
            auto res = [&](const Vec& e) {
                const Vec x = lift(e);
                Vec r(2);
                r << x[i1] - x_from[i1], x[i2] - x_from[i2];
                return r;
            };
            auto jac = [&](const Vec& e) {
                const Mat j = dst.lift_jacobian(e);
                Mat m(2, j.cols());
                m.row(0) = j.row(i1);
                m.row(1) = j.row(i2);
                return m;
            };
            return newton2(res, jac, proj, "continuity_q1q2");
        }
        case IcStrategy::Projection: break;
    }
    return proj;
}

// ---------------------------------------------------------------------------

double SpSticking::force(double t, const Vec& x) const {
    double f = sp_stick_force(p_, x);
    if (p_.eps != 0.0) f += p_.eps * std::cos(p_.omega * t) / (std::sqrt(2.0) * p_.m1);
    return f;
}

bool SpSticking::sticks(const NonsmoothRom&, double t, const Vec& x, const Vec&, int) const {
    return std::abs(force(t, x)) < p_.delta;
}

StickOutcome SpSticking::run(const NonsmoothRom& rom, double t, const Vec& x, const Vec&, int from, double t1,
                             const OdeOptions& opts) const {
    StickOutcome out;
    Vec xs = x;
    xs[1] = 0.0;
    Field f = [this](double tt, const Vec& xx) { return sp_sticking_field(p_, tt, xx); };
    DormandPrince dp(f, opts);
    dp.reset(t, xs);
    out.ts.push_back(t);
    out.xs.push_back(xs);
    auto margin = [this](double tt, const Vec& xx) { return p_.delta - std::abs(force(tt, xx)); };
    while (dp.t() < t1) {
        dp.step(t1);
        if (margin(dp.t(), dp.x()) <= 0.0) {
            const EventHit hit = bisect_event(dp, margin, 0.0);
            out.t = hit.t;
            out.x = hit.x;
            out.x[1] = 0.0;
            out.branch = force(hit.t, hit.x) > 0 ? 1 : -1;
            const SsmModel& m = rom.model(out.branch);
            out.eta = m.chart(out.x);
            out.ts.push_back(out.t);
            out.xs.push_back(out.x);
            return out;
        }
        out.ts.push_back(dp.t());
        out.xs.push_back(dp.x());
    }
    out.t = dp.t();
    out.x = dp.x();
    out.branch = 0;
    out.eta = rom.model(from).chart(out.x);
    return out;
}

// ---------------------------------------------------------------------------

ReducedFilippovSticking::ReducedFilippovSticking(const NonsmoothRom& rom) {
    const SsmModel& mp = rom.model(1);
    const SsmModel& mm = rom.model(-1);
    if (!mp.has_chart() || !mm.has_chart() || (mp.projection() - mm.projection()).norm() > 0.0) {
        throw ConfigError("reduced sticking needs both branches in the same physical chart; rechart first");
    }
    w0_ = mp.projection();
    const int n = mp.dim();
    const Vec z = Vec::Zero(n);
    const Vec g = rom.switching().grad(z);
    s0_ = rom.switching().sigma(z);
    c_ = w0_.transpose().colPivHouseholderQr().solve(g);
    if ((w0_.transpose() * c_ - g).norm() > 1e-12 * (1.0 + g.norm())) {
        throw ConfigError("the switching function cannot be expressed in the reduced chart; rechart to coordinates "
                          "containing it");
    }
    // σ must be affine for the reduced sticking condition to be exact
    Vec probe = Vec::Ones(n);
    if (std::abs(rom.switching().sigma(probe) - (g.dot(probe) + s0_)) > 1e-12 * (1.0 + probe.norm())) {
        throw ConfigError("reduced sticking requires an affine switching function");
    }
}

Vec ReducedFilippovSticking::field(const NonsmoothRom& rom, int branch, double t, const Vec& zeta) const {
    const SsmModel& m = rom.model(branch);
    return m.reduced_field(t, zeta - w0_ * m.x0());
}

std::pair<double, double> ReducedFilippovSticking::normals(const NonsmoothRom& rom, double t, const Vec& zeta) const {
    return {c_.dot(field(rom, 1, t, zeta)), c_.dot(field(rom, -1, t, zeta))};
}

bool ReducedFilippovSticking::sticks(const NonsmoothRom& rom, double t, const Vec&, const Vec& eta, int from) const {
    const Vec zeta = eta + w0_ * rom.model(from).x0();
    const auto [ap, am] = normals(rom, t, zeta);
    return ap < 0.0 && am > 0.0;
}

StickOutcome ReducedFilippovSticking::run(const NonsmoothRom& rom, double t, const Vec&, const Vec& eta, int from,
                                          double t1, const OdeOptions& opts) const {
    StickOutcome out;
    const double cc = c_.squaredNorm();
    auto project = [&](const Vec& z) { return Vec(z - c_ * ((c_.dot(z) + s0_) / cc)); };
    auto weights = [&](double tt, const Vec& z) {
        const auto [ap, am] = normals(rom, tt, z);
        const double den = am - ap;
        if (!(std::abs(den) > 0.0)) throw DegenerateError("reduced Filippov denominator vanishes");
        return std::pair<double, double>{am / den, -ap / den};
    };
    auto reconstruct = [&](double tt, const Vec& z) {
        const auto [wp, wm] = weights(tt, z);
        const SsmModel& mp = rom.model(1);
        const SsmModel& mm = rom.model(-1);
        return Vec(wp * mp.lift(z - w0_ * mp.x0(), tt) + wm * mm.lift(z - w0_ * mm.x0(), tt));
    };
    Field f = [&](double tt, const Vec& z) {
        const auto [wp, wm] = weights(tt, z);
        return Vec(wp * field(rom, 1, tt, z) + wm * field(rom, -1, tt, z));
    };
    auto margin = [&](double tt, const Vec& z) {
        const auto [ap, am] = normals(rom, tt, z);
        return std::min(-ap, am);
    };
    Vec zeta = project(eta + w0_ * rom.model(from).x0());
    DormandPrince dp(f, opts);
    dp.reset(t, zeta);
    out.ts.push_back(t);
    out.etas.push_back(zeta);
    out.xs.push_back(reconstruct(t, zeta));
    while (dp.t() < t1) {
        dp.step(t1);
        dp.replace_state(project(dp.x()));
        if (margin(dp.t(), dp.x()) <= 0.0) {
            EventHit hit = bisect_event(dp, margin, 0.0);
            hit.x = project(hit.x);
            const auto [ap, am] = normals(rom, hit.t, hit.x);
            out.t = hit.t;
            out.branch = (-ap <= am) ? 1 : -1;
            const SsmModel& m = rom.model(out.branch);
            out.eta = hit.x - w0_ * m.x0();
            out.x = m.lift(out.eta, hit.t);
            out.ts.push_back(out.t);
            out.etas.push_back(hit.x);
            out.xs.push_back(out.x);
            return out;
        }
        out.ts.push_back(dp.t());
        out.etas.push_back(dp.x());
        out.xs.push_back(reconstruct(dp.t(), dp.x()));
    }
    out.t = dp.t();
    out.branch = 0;
    out.eta = dp.x() - w0_ * rom.model(from).x0();
    out.x = reconstruct(dp.t(), dp.x());
    return out;
}

// ---------------------------------------------------------------------------

std::size_t RomTrajectory::count(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const RomEvent& e) { return e.kind == k; }));
}

void RomTrajectory::flatten(std::vector<double>& t, std::vector<Vec>& x, std::vector<int>* branch) const {
    t.clear();
    x.clear();
    if (branch) branch->clear();
    for (const auto& s : segments) {
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            if (!t.empty() && i == 0 && s.t[0] == t.back() && (s.x[0] - x.back()).norm() == 0.0) continue;
            t.push_back(s.t[i]);
            x.push_back(s.x[i]);
            if (branch) branch->push_back(s.branch);
        }
    }
}

namespace {

class RomIntegrator {
public:
    RomIntegrator(const NonsmoothRom& rom, double t1, const RomOptions& o) : rom_(rom), t1_(t1), o_(o) {}

    RomTrajectory run(Vec eta, int b, double t, const Vec* xs) {
        grid_t0_ = t;
        if (xs) {
            b = stick(b, t, eta, *xs, false);
            if (t >= t1_) return finish(eta, b);
        }
        const double s0 = rom_.sigma(b, t, eta);
        armed_ = s0 * b > o_.eps_event;
        if (std::abs(s0) <= o_.eps_event && rom_.sticking) {
            const Vec x = rom_.model(b).lift(eta, t);
            if (rom_.sticking->sticks(rom_, t, x, eta, b)) b = stick(b, t, eta, x);
        }
        while (t < t1_) {
            b = run_branch(b, t, eta);
        }
        return finish(eta, b);
    }

private:
    void record(double t, const Vec& xb, const Vec& xa, EventKind k, int after) {
        if (static_cast<long>(out_.events.size()) >= o_.max_events) {
            std::ostringstream os;
            os << "ROM: more than " << o_.max_events << " switching events (chattering?) at t=" << t;
            throw ChatteringError(os.str());
        }
        out_.events.push_back({t, xb, xa, k, after, (xa - xb).norm()});
    }

    void push(RomSegment& seg, const SsmModel& m, const DormandPrince& dp, double upto, bool include_end) {
        if (o_.output_dt > 0.0) {
            while (true) {
                const double tg = grid_t0_ + static_cast<double>(next_grid_) * o_.output_dt;
                if (tg <= seg.t.back()) {
                    ++next_grid_;
                    continue;
                }
                if (tg >= upto) break;
                const Vec e = dp.dense(tg);
                seg.t.push_back(tg);
                seg.eta.push_back(e);
                seg.x.push_back(m.lift(e, tg));
                ++next_grid_;
            }
            if (!include_end) return;
        }
        const Vec e = upto == dp.t() ? dp.x() : dp.dense(upto);
        seg.t.push_back(upto);
        seg.eta.push_back(e);
        seg.x.push_back(m.lift(e, upto));
    }

    RomTrajectory finish(const Vec& eta, int b) {
        out_.end_eta = eta;
        out_.end_chart = b;
        out_.end_sticking = sticking_;
        return std::move(out_);
    }

    // Sticking rules report their own steps; put them on the output grid
    // (linear interpolation) keeping both segment ends.
    void regrid(RomSegment& s) {
        if (s.t.size() < 2) return;
        RomSegment g{s.branch, {s.t.front()}, {s.eta.front()}, {s.x.front()}};
        std::size_t k = 0;
        while (true) {
            const double tg = grid_t0_ + static_cast<double>(next_grid_) * o_.output_dt;
            if (tg <= g.t.back()) {
                ++next_grid_;
                continue;
            }
            if (tg >= s.t.back()) break;
            while (s.t[k + 1] < tg) ++k;
            const double w = (tg - s.t[k]) / (s.t[k + 1] - s.t[k]);
            g.t.push_back(tg);
            g.eta.push_back((1 - w) * s.eta[k] + w * s.eta[k + 1]);
            g.x.push_back((1 - w) * s.x[k] + w * s.x[k + 1]);
            ++next_grid_;
        }
        g.t.push_back(s.t.back());
        g.eta.push_back(s.eta.back());
        g.x.push_back(s.x.back());
        s = std::move(g);
    }

    int stick(int b, double& t, Vec& eta, const Vec& x, bool entry = true) {
        if (entry) record(t, x, x, EventKind::StickEntry, 0);
        StickOutcome so = rom_.sticking->run(rom_, t, x, eta, b, t1_, o_.ode);
        RomSegment ss{0, so.ts, so.etas, so.xs};
        if (ss.eta.size() != ss.t.size()) ss.eta.assign(ss.t.size(), Vec::Zero(eta.size()));
        if (o_.output_dt > 0.0) regrid(ss);
        out_.segments.push_back(std::move(ss));
        t = so.t;
        if (so.branch == 0) {
            eta = so.eta;
            sticking_ = true;
            return b;
        }
        eta = so.eta;
        record(t, so.x, so.x, EventKind::StickExit, so.branch);
        armed_ = false;
        return so.branch;
    }

    int run_branch(int b, double& t, Vec& eta) {
        sticking_ = false;
        const SsmModel& m = rom_.model(b);
        Field f = [&m](double tt, const Vec& e) { return m.reduced_field(tt, e); };
        auto g = [&](double tt, const Vec& e) { return b * rom_.sigma(b, tt, e); };
        DormandPrince dp(f, o_.ode);
        dp.reset(t, eta);
        RomSegment seg{b, {t}, {eta}, {m.lift(eta, t)}};
        while (dp.t() < t1_) {
            dp.step(t1_);
            const double gn = g(dp.t(), dp.x());
            if (!armed_) {
                if (gn > o_.eps_event) armed_ = true;
                push(seg, m, dp, dp.t(), o_.output_dt <= 0.0);
                continue;
            }
            if (gn < 0.0) {
                const EventHit hit = bisect_event(dp, g, o_.eps_event);
                push(seg, m, dp, hit.t, true);
                out_.segments.push_back(std::move(seg));
                t = hit.t;
                const Vec xb = m.lift(hit.x, t);
                if (rom_.sticking && rom_.sticking->sticks(rom_, t, xb, hit.x, b)) {
                    eta = hit.x;
                    return stick(b, t, eta, xb);
                }
                eta = switch_ic(rom_, hit.x, b, t);
                const Vec xa = rom_.model(-b).lift(eta, t);
                record(t, xb, xa, EventKind::Crossing, -b);
                armed_ = -b * rom_.switching().sigma(xa) > o_.eps_event;
                return -b;
            }
            push(seg, m, dp, dp.t(), o_.output_dt <= 0.0);
        }
        if (o_.output_dt > 0.0) push(seg, m, dp, dp.t(), true);
        out_.segments.push_back(std::move(seg));
        t = dp.t();
        eta = dp.x();
        return b;
    }

    const NonsmoothRom& rom_;
    double t1_;
    const RomOptions& o_;
    RomTrajectory out_;
    bool armed_ = true;
    bool sticking_ = false;
    double grid_t0_ = 0.0;
    long next_grid_ = 0;
};

template <class Tr>
UniformTrajectory resample_impl(const Tr& tr, double t0, double dt, int count) {
    std::vector<double> t;
    std::vector<Vec> x;
    tr.flatten(t, x);
    UniformTrajectory u;
    if (t.empty()) return u;
    u.x.resize(x[0].size(), count);
    std::size_t j = 0;
    for (int k = 0; k < count; ++k) {
        const double tk = t0 + k * dt;
        while (j + 1 < t.size() && t[j + 1] <= tk) ++j;
        u.t.push_back(tk);
        if (j + 1 >= t.size() || tk <= t[j]) {
            u.x.col(k) = x[j];
        } else {
            const double w = (tk - t[j]) / (t[j + 1] - t[j]);
            u.x.col(k) = (1 - w) * x[j] + w * x[j + 1];
        }
    }
    return u;
}

}  // namespace

RomTrajectory simulate_rom(const NonsmoothRom& rom, const Vec& eta0, int branch0, double t0, double t1,
                           const RomOptions& opts, const Vec* sticking_state) {
    if (!eta0.allFinite()) throw PreconditionError("simulate_rom: non-finite initial state");
    if (branch0 != 1 && branch0 != -1) throw PreconditionError("simulate_rom: branch must be +1 or -1");
    if (sticking_state && !rom.sticking) throw PreconditionError("simulate_rom: sticking start without a sticking rule");
    if (t1 <= t0) {
        RomTrajectory tr;
        tr.end_eta = eta0;
        tr.end_chart = branch0;
        tr.end_sticking = sticking_state != nullptr;
        return tr;
    }
    RomIntegrator ri(rom, t1, opts);
    return ri.run(eta0, branch0, t0, sticking_state);
}

UniformTrajectory resample(const RomTrajectory& tr, double t0, double dt, int count) {
    return resample_impl(tr, t0, dt, count);
}

UniformTrajectory resample(const HybridTrajectory& tr, double t0, double dt, int count) {
    return resample_impl(tr, t0, dt, count);
}

void write_rom_csv(std::ostream& os, const RomTrajectory& tr) {
    int n = 0, d = 0;
    for (const auto& s : tr.segments) {
        if (!s.x.empty()) {
            n = static_cast<int>(s.x[0].size());
            d = s.eta.empty() ? 0 : static_cast<int>(s.eta[0].size());
            break;
        }
    }
    os << "t";
    for (int i = 0; i < n; ++i) os << ",x" << (i + 1);
    os << ",branch";
    for (int i = 0; i < d; ++i) os << ",xi" << (i + 1);
    os << "\n";
    os.precision(17);
    for (const auto& s : tr.segments) {
        for (std::size_t k = 0; k < s.t.size(); ++k) {
            os << s.t[k];
            for (int i = 0; i < n; ++i) os << "," << s.x[k][i];
            os << "," << s.branch;
            for (int i = 0; i < d; ++i) os << "," << (k < s.eta.size() ? s.eta[k][i] : 0.0);
            os << "\n";
        }
    }
}

}  // namespace nsssm
