#include "nsssm/analysis.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>

namespace nsssm {

namespace {

int grid_count(double t0, double t1, double dt) {
    return static_cast<int>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
}

void fill_samples(FlowChunk& c, const UniformTrajectory& u) {
    c.t = u.t;
    c.x.reserve(u.t.size());
    for (Eigen::Index k = 0; k < u.x.cols(); ++k) c.x.push_back(u.x.col(k));
}

// Runs work items in an OpenMP loop and rethrows the first exception afterwards.
template <class F>
void parallel_for(int n, bool parallel, F&& body) {
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(nsssm_analysis_error)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace

FullFlow::FullFlow(PiecewiseSmoothSystem sys, HybridOptions opts) : sys_(std::move(sys)), opts_(std::move(opts)) {}

FlowChunk FullFlow::advance(const FlowState& s, double t1, double dt) const {
    FlowChunk c;
    HybridOptions o = opts_;
    o.output_dt = dt;
    const auto tr = integrate_hybrid(sys_, s.x, s.t, t1, o);
    c.end = s;
    if (tr.empty()) {
        c.t = {s.t};
        c.x = {s.x};
        return c;
    }
    fill_samples(c, resample(tr, s.t, dt, grid_count(s.t, t1, dt)));
    for (const auto& e : tr.events) c.events.push_back({e.t, e.x, e.kind, e.branch_after});
    c.end.t = tr.final_time();
    c.end.x = tr.final_state();
    c.end.branch = tr.final_branch();
    return c;
}

RomFlow::RomFlow(NonsmoothRom rom, RomOptions opts) : rom_(std::move(rom)), opts_(std::move(opts)) {}

FlowChunk RomFlow::advance(const FlowState& s, double t1, double dt) const {
    FlowChunk c;
    RomOptions o = opts_;
    o.output_dt = dt;
    RomTrajectory tr;
    if (s.branch == 0) {
        if (s.eta.size() == 0) throw PreconditionError("ROM flow: resuming inside Σ needs the reduced state");
        tr = simulate_rom(rom_, s.eta, s.chart, s.t, t1, o, &s.x);
    } else {
        const bool have_eta = s.eta.size() > 0 && s.chart == s.branch;
        const Vec eta = have_eta ? s.eta : rom_.model(s.branch).chart(s.x);
        tr = simulate_rom(rom_, eta, s.branch, s.t, t1, o);
    }
    c.end = s;
    if (tr.segments.empty()) {
        c.t = {s.t};
        c.x = {s.x};
        return c;
    }
    fill_samples(c, resample(tr, s.t, dt, grid_count(s.t, t1, dt)));
    for (const auto& e : tr.events) c.events.push_back({e.t, e.x_before, e.kind, e.branch_after});
    c.end.t = t1;
    c.end.x = tr.final_state();
    c.end.eta = tr.end_eta;
    c.end.chart = tr.end_chart;
    c.end.branch = tr.end_sticking ? 0 : tr.end_chart;
    return c;
}

// ---------------------------------------------------------------------------

SteadyState steady_state(const Flow& flow, const FlowState& start, double omega, int coord,
                         const SteadyStateOptions& opts) {
    if (!(omega > 0.0)) throw PreconditionError("steady_state: forcing frequency must be positive");
    if (opts.samples_per_period < 8 || opts.window < 1 || opts.chunk_periods < 1) {
        throw PreconditionError("steady_state: invalid detector settings");
    }
    const double period = 2.0 * std::numbers::pi / omega;
    const int spp = opts.samples_per_period;
    const double dt = period / spp;
    SteadyState out;
    out.state = start;
    std::vector<double> amps;
    while (out.periods < opts.max_periods) {
        const int n = std::min(opts.chunk_periods, opts.max_periods - out.periods);
        const double t1 = out.state.t + n * period;
        const FlowChunk c = flow.advance(out.state, t1, dt);
        if (static_cast<int>(c.x.size()) < n * spp + 1) throw ProcedureError("steady_state: truncated integration");
        if (coord < 0 || coord >= c.x[0].size()) throw PreconditionError("steady_state: coordinate out of range");
        for (int k = 0; k < n; ++k) {
            double lo = c.x[k * spp][coord], hi = lo;
            for (int j = k * spp + 1; j <= (k + 1) * spp; ++j) {
                lo = std::min(lo, c.x[j][coord]);
                hi = std::max(hi, c.x[j][coord]);
            }
            amps.push_back(0.5 * (hi - lo));
        }
        out.periods += n;
        out.state = c.end;
        out.state.t = t1;
        out.amplitude = amps.back();
        const int m = static_cast<int>(amps.size());
        if (m > opts.window) {
            bool ok = true;
            for (int k = m - opts.window; k < m && ok; ++k) {
                const double ref = std::max(amps[k], 1e-300);
                ok = std::abs(amps[k] - amps[k - 1]) <= opts.rel_tol * ref || amps[k] < 1e-14;
            }
            if (ok) {
                out.converged = true;
                return out;
            }
        }
    }
    return out;
}

std::vector<SteadyState> frc_curve(const FlowFactory& make, const std::vector<double>& omegas,
                                   const FlowState& start, int coord, const FrcOptions& opts) {
    if (!std::is_sorted(omegas.begin(), omegas.end()) && !std::is_sorted(omegas.rbegin(), omegas.rend())) {
        throw PreconditionError("frc: frequency grid must be sorted");
    }
    std::vector<SteadyState> out(omegas.size());
    if (opts.warm_start) {
        FlowState s = start;
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            const auto flow = make(omegas[i]);
            s.t = 0.0;
            out[i] = steady_state(*flow, s, omegas[i], coord, opts.steady);
            s = out[i].state;
        }
        return out;
    }
    parallel_for(static_cast<int>(omegas.size()), opts.parallel, [&](int i) {
        const auto flow = make(omegas[i]);
        out[i] = steady_state(*flow, start, omegas[i], coord, opts.steady);
    });
    return out;
}

std::vector<FrcPoint> frc_sweep(const FlowFactory& full, const FlowFactory& rom, const std::vector<double>& omegas,
                                const FlowState& start_full, const FlowState& start_rom, int coord,
                                const FrcOptions& opts) {
    std::vector<SteadyState> a, b;
    FrcOptions inner = opts;
    parallel_for(2, opts.parallel, [&](int i) {
        if (i == 0) {
            a = frc_curve(full, omegas, start_full, coord, inner);
        } else {
            b = frc_curve(rom, omegas, start_rom, coord, inner);
        }
    });
    std::vector<FrcPoint> out(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        out[i] = {omegas[i], a[i].amplitude, b[i].amplitude, a[i].converged, b[i].converged};
    }
    return out;
}

void write_frc_csv(std::ostream& os, const std::vector<FrcPoint>& frc) {
    os << "omega,amp_full,amp_rom,converged_full,converged_rom\n";
    os.precision(17);
    for (const auto& p : frc) {
        os << p.omega << ',' << p.amplitude_full << ',' << p.amplitude_rom << ',' << (p.converged_full ? 1 : 0)
           << ',' << (p.converged_rom ? 1 : 0) << '\n';
    }
}

double sp_linear_response(const SpParams& p, double omega) {
    const Mat a = sp_linear_matrix(p);
    const CMat lhs = Complex(0.0, omega) * CMat::Identity(4, 4) - a.cast<Complex>();
    const CVec h = lhs.fullPivLu().solve(sp_forcing_direction(p).cast<Complex>().eval());
    return p.eps * std::abs(h[0]);
}

// ---------------------------------------------------------------------------

Vec section_coords(const Vec& x) {
    Vec s(3);
    s << x[0], x[2], x[3];
    return s;
}

double section_distance(const Vec& a, const Vec& b, const Vec& scale) {
    return (a - b).cwiseQuotient(scale).norm();
}

namespace {

Vec full_from_section(const Vec& s) {
    Vec x(4);
    x << s[0], 0.0, s[1], s[2];
    return x;
}

// Root of g on a bracket [lo, hi] with g(lo) * g(hi) <= 0.
template <class G>
double bisect(G&& g, double lo, double hi) {
    double glo = g(lo);
    for (int it = 0; it < 200 && hi != lo; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double gm = g(mid);
        if ((gm < 0) == (glo < 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Nearest sign change of g when walking away from q_start in either direction.
template <class G>
std::optional<std::pair<double, double>> bracket(G&& g, double q_start, double step, int max_steps) {
    const double g0 = g(q_start);
    for (int k = 1; k <= max_steps; ++k) {
        for (double dir : {1.0, -1.0}) {
            const double a = q_start + dir * (k - 1) * step;
            const double b = q_start + dir * k * step;
            double gb;
            try {
                gb = g(b);
            } catch (const Error&) {
                continue;
            }
            if (!std::isfinite(gb)) continue;
            if ((gb < 0) != (g0 < 0) || gb == 0.0) return std::make_pair(a, b);
        }
    }
    return std::nullopt;
}

}  // namespace

std::pair<SectionPoint, SectionPoint> sp_boundary_arrival(const SpParams& p, const Vec& ic, int k,
                                                          const PoincareOptions& opts) {
    const auto sys = sp_system(p);
    // arrivals on Σ (crossings and stick entries) of the trajectory from rho * ic
    auto arrivals = [&](double rho, int count) {
        HybridOptions o = opts.hybrid;
        int n = 0;
        o.stop = [&](const HybridEvent& e) {
            if (e.kind == EventKind::Crossing || e.kind == EventKind::StickEntry) ++n;
            return n >= count || e.kind == EventKind::StickEntry;
        };
        std::vector<SectionPoint> out;
        const auto tr = integrate_hybrid(sys, rho * ic, 0.0, opts.t_max, o);
        for (const auto& e : tr.events) {
            if (e.kind == EventKind::Crossing || e.kind == EventKind::StickEntry) {
                out.push_back({static_cast<int>(out.size()), e.t, e.x,
                               e.kind == EventKind::StickEntry ? 0 : e.branch_after});
            }
        }
        return out;
    };
    auto crosses = [&](double rho) {
        const auto a = arrivals(rho, k + 1);
        return static_cast<int>(a.size()) > k && a[k].direction != 0;
    };
    double lo = 0.0, hi = 1.0;
    if (!crosses(hi)) throw ProcedureError("poincare: reference trajectory sticks before the edge arrival");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (crosses(mid) ? hi : lo) = mid;
    }
    const auto a = arrivals(hi, k + 2);
    if (static_cast<int>(a.size()) < k + 2) throw ProcedureError("poincare: no arrival after the boundary crossing");
    return {a[k], a[k + 1]};
}

PoincareData poincare_map(const SpParams& p, const std::vector<Vec>& ics, int n_iterates,
                          const PoincareOptions& opts) {
    if (n_iterates < 1) throw PreconditionError("poincare: need at least one iterate");
    if (p.eps != 0.0) throw PreconditionError("poincare: the section map is defined for the autonomous model");
    const auto sys = sp_system(p);
    PoincareData d;
    d.sequences.resize(ics.size());
    d.truncated.assign(ics.size(), false);
    std::vector<char> trunc(ics.size(), 0);
    parallel_for(static_cast<int>(ics.size()), opts.parallel, [&](int i) {
        HybridOptions o = opts.hybrid;
        int crossings = 0;
        o.stop = [&](const HybridEvent& e) {
            if (e.kind == EventKind::Crossing) ++crossings;
            return crossings >= n_iterates;
        };
        const auto tr = integrate_hybrid(sys, ics[i], 0.0, opts.t_max, o);
        int it = 0;
        for (const auto& e : tr.events) {
            if (e.kind != EventKind::Crossing) continue;
            d.sequences[i].push_back({it++, e.t, e.x, e.branch_after});
        }
        trunc[i] = it < n_iterates;
    });
    for (std::size_t i = 0; i < ics.size(); ++i) {
        d.truncated[i] = trunc[i] != 0;
        for (const auto& s : d.sequences[i]) {
            if (s.iter < opts.transient) continue;
            (s.direction < 0 ? d.arc_plus : d.arc_minus).push_back(section_coords(s.x));
        }
    }

    // Edges: bisect the amplitude of a one-parameter IC family until arrival k on
    // Σ sits on the sticking boundary; the following arrival is the edge point.
    std::size_t best = 0;
    for (std::size_t i = 1; i < ics.size(); ++i) {
        if (d.sequences[i].size() > d.sequences[best].size()) best = i;
    }
    const int k = std::max(opts.transient, 1) + opts.edge_offset;
    if (!ics.empty() && static_cast<int>(d.sequences[best].size()) > k) {
        for (double sign : {1.0, -1.0}) {
            const auto [pre, edge] = sp_boundary_arrival(p, sign * ics[best], k, opts);
            const int b = pre.direction;
            (b > 0 ? d.edge_plus : d.edge_minus) = section_coords(edge.x);
            (b > 0 ? d.preimage_plus : d.preimage_minus) = pre.x;
        }
    }
    return d;
}

Vec sp_arc_point(const SsmModel& model, const SwitchingFunction& sw, double q1, Vec* eta_guess) {
    Vec eta;
    if (eta_guess && eta_guess->size() == model.reduced_dim()) {
        eta = *eta_guess;
    } else {
        const Mat t = model.tangent();
        Mat j(2, t.cols());
        j.row(0) = t.row(0);
        j.row(1) = sw.grad(model.x0()).transpose() * t;
        Vec r(2);
        r << q1 - model.x0()[0], -sw.sigma(model.x0());
        eta = j.fullPivLu().solve(r);
    }
    for (int it = 0; it < 60; ++it) {
        const Vec x = model.lift(eta);
        Vec r(2);
        r << x[0] - q1, sw.sigma(x);
        const Mat lj = model.lift_jacobian(eta);
        Mat j(2, lj.cols());
        j.row(0) = lj.row(0);
        j.row(1) = sw.grad(x).transpose() * lj;
        const Vec step = j.fullPivLu().solve(r);
        eta -= step;
        if (!eta.allFinite()) break;
        if (step.norm() <= 1e-14 * (1.0 + eta.norm())) {
            if (eta_guess) *eta_guess = eta;
            return section_coords(model.lift(eta));
        }
    }
    const Vec x = model.lift(eta);
    if (eta.allFinite() && std::abs(x[0] - q1) <= 1e-10 && std::abs(sw.sigma(x)) <= 1e-10) {
        if (eta_guess) *eta_guess = eta;
        return section_coords(x);
    }
    throw ConvergenceError("arc point: no manifold point on Σ with the requested q1");
}

InvariantCurveApprox approx_invariant_curve(const NonsmoothRom& rom, const SpParams& p, double q1_span,
                                            int points) {
    if (points < 3) throw PreconditionError("invariant curve: need at least three points per arc");
    const auto& sw = rom.switching();
    InvariantCurveApprox out;

    // arcs by continuation in q1 outwards from each fixed point
    for (int b : {1, -1}) {
        const SsmModel& m = rom.model(b);
        const double q0 = m.x0()[0];
        const int half = points / 2;
        std::vector<Vec> arc;
        for (int dir : {-1, 1}) {
            Vec guess;
            std::vector<Vec> side;
            for (int k = (dir < 0 ? 0 : 1); k <= half; ++k) {
                const double q1 = q0 + dir * q1_span * k / half;
                try {
                    side.push_back(sp_arc_point(m, sw, q1, &guess));
                } catch (const ConvergenceError&) {
                    break;
                }
            }
            if (dir < 0) std::reverse(side.begin(), side.end());
            arc.insert(arc.end(), side.begin(), side.end());
        }
        (b > 0 ? out.arc_plus : out.arc_minus) = std::move(arc);
    }

    auto arc_at = [&](int b, double q1) { return sp_arc_point(rom.model(b), sw, q1); };
    const double step = q1_span / 200;
    for (int b : {1, -1}) {
        const int s = -b;
        auto margin = [&](const Vec& sec) { return s * sp_stick_force(p, full_from_section(sec)) + p.delta; };
        auto g_arc = [&](double q1) { return margin(arc_at(s, q1)); };
        auto g_mid = [&](double q1) { return margin(Vec(0.5 * (arc_at(s, q1) + arc_at(b, q1)))); };
        const double q0 = rom.model(s).x0()[0];
        const auto ba = bracket(g_arc, q0, step, 400);
        if (!ba) throw ProcedureError("invariant curve: branch arc does not reach the sticking boundary");
        const double qa = bisect(g_arc, ba->first, ba->second);
        const auto bc = bracket(g_mid, qa, step, 400);
        if (!bc) throw ProcedureError("invariant curve: centerline does not reach the sticking boundary");
        const double qc = bisect(g_mid, bc->first, bc->second);
        const Vec a = arc_at(s, qa);
        const Vec c = 0.5 * (arc_at(s, qc) + arc_at(b, qc));
        const Vec start = full_from_section(0.5 * (a + c));

        // advect the reduced dynamics of branch b to the next arrival on Σ
        const SsmModel& m = rom.model(b);
        const Vec eta0 = m.chart(start);
        DormandPrince dp([&m](double t, const Vec& e) { return m.reduced_field(t, e); }, OdeOptions{});
        dp.reset(0.0, eta0);
        auto g = [&](double, const Vec& e) { return b * sw.sigma(m.lift(e)); };
        bool armed = g(0.0, eta0) > kEventTol;
        Vec edge;
        while (dp.t() < 200.0) {
            dp.step(200.0);
            const double gv = g(dp.t(), dp.x());
            if (!armed) {
                armed = gv > kEventTol;
                continue;
            }
            if (gv < 0.0) {
                const EventHit hit = bisect_event(dp, g, kEventTol);
                edge = section_coords(m.lift(hit.x));
                break;
            }
        }
        if (edge.size() == 0) throw ProcedureError("invariant curve: reduced trajectory does not return to Σ");
        (b > 0 ? out.edge_plus : out.edge_minus) = edge;
    }
    return out;
}

void write_poincare_csv(std::ostream& os, const PoincareData& d) {
    os << "iter,q1,q2,dq2,direction\n";
    os.precision(17);
    for (const auto& seq : d.sequences) {
        for (const auto& s : seq) {
            os << s.iter << ',' << s.x[0] << ',' << s.x[2] << ',' << s.x[3] << ',' << s.direction << '\n';
        }
    }
}

// ---------------------------------------------------------------------------

std::optional<LimitCycle> detect_limit_cycle(const Flow& flow, const FlowState& start, double t1,
                                             const LimitCycleOptions& opts) {
    if (!(t1 > start.t)) throw PreconditionError("limit cycle: empty time span");
    const double dt = opts.dt > 0 ? opts.dt : (t1 - start.t) / 20000.0;
    const FlowChunk c = flow.advance(start, t1, dt);
    const double t_from = start.t + opts.t_transient;

    std::vector<const EventSample*> ev;
    for (const auto& e : c.events) {
        if (e.t >= t_from) ev.push_back(&e);
    }
    if (ev.size() < 2) return std::nullopt;

    const int n = static_cast<int>(c.x[0].size());
    Vec lo = Vec::Constant(n, INFINITY), hi = Vec::Constant(n, -INFINITY);
    for (std::size_t k = 0; k < c.t.size(); ++k) {
        if (c.t[k] < t_from) continue;
        lo = lo.cwiseMin(c.x[k]);
        hi = hi.cwiseMax(c.x[k]);
    }
    const double amp = 0.5 * (hi - lo).maxCoeff();
    if (!(amp > 0.0)) return std::nullopt;

    const EventSample& last = *ev.back();
    for (int j = static_cast<int>(ev.size()) - 2; j >= 0; --j) {
        const EventSample& e = *ev[j];
        if (e.kind != last.kind || e.branch_after != last.branch_after) continue;
        const double closure = (e.x - last.x).norm();
        if (closure > opts.closure_tol * amp) continue;
        const double period = last.t - e.t;
        if (!(period > 2 * dt)) continue;
        LimitCycle lc;
        lc.period = period;
        lc.frequency = 1.0 / period;
        lc.amplitude = amp;
        lc.closure = closure;
        lc.x.resize(n, opts.samples);
        std::size_t k = 0;
        for (int i = 0; i < opts.samples; ++i) {
            const double ti = e.t + period * i / opts.samples;
            while (k + 1 < c.t.size() && c.t[k + 1] <= ti) ++k;
            const double w = k + 1 < c.t.size() ? (ti - c.t[k]) / (c.t[k + 1] - c.t[k]) : 0.0;
            lc.t.push_back(ti);
            lc.x.col(i) = k + 1 < c.t.size() ? Vec((1 - w) * c.x[k] + w * c.x[k + 1]) : c.x[k];
        }
        return lc;
    }
    return std::nullopt;
}

void write_limit_cycle_json(std::ostream& os, const LimitCycle& lc) {
    nlohmann::json j;
    j["period"] = lc.period;
    j["frequency"] = lc.frequency;
    j["amplitude"] = lc.amplitude;
    j["closure"] = lc.closure;
    j["stable"] = lc.stable;
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t i = 0; i < lc.t.size(); ++i) {
        nlohmann::json row;
        row["t"] = lc.t[i];
        row["x"] = std::vector<double>(lc.x.col(i).data(), lc.x.col(i).data() + lc.x.rows());
        samples.push_back(row);
    }
    j["samples"] = samples;
    os << j.dump(2) << '\n';
}

Spectrum amplitude_spectrum(const std::vector<double>& signal, double dt) {
    const std::size_t n = signal.size();
    if (n < 4 || !(dt > 0)) throw PreconditionError("spectrum: need at least four samples and dt > 0");
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> w(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        w[i] = h * (signal[i] - mean);
        wsum += h;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, w);
    Spectrum s;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        s.frequency.push_back(static_cast<double>(k) / (static_cast<double>(n) * dt));
        s.amplitude.push_back(2.0 * std::abs(spec[k]) / wsum);
    }
    return s;
}

std::vector<double> spectral_peaks(const Spectrum& s, int count, double min_rel) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 1; k + 1 < s.amplitude.size(); ++k) {
        if (s.amplitude[k] > s.amplitude[k - 1] && s.amplitude[k] >= s.amplitude[k + 1]) idx.push_back(k);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.amplitude[a] > s.amplitude[b]; });
    std::vector<double> out;
    if (idx.empty()) return out;
    const double top = s.amplitude[idx[0]];
    const double df = s.frequency[1] - s.frequency[0];
    for (std::size_t k : idx) {
        if (static_cast<int>(out.size()) >= count || s.amplitude[k] < min_rel * top) break;
        const double a = s.amplitude[k - 1], b = s.amplitude[k], c = s.amplitude[k + 1];
        const double den = a - 2 * b + c;
        const double shift = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        out.push_back(s.frequency[k] + shift * df);
    }
    return out;
}

}  // namespace nsssm
