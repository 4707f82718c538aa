#include "nsssm/scenarios.hpp"

#include "nsssm/spectral.hpp"
#include "nsssm/ssm_analytic.hpp"

#include <cmath>
#include <numbers>

namespace nsssm {

namespace {

Mat physical_chart(const BeamModel& m) {
    Mat w0 = Mat::Zero(2, m.dim());
    w0(0, m.mid()) = 1.0;
    w0(1, m.mid_velocity()) = 1.0;
    return w0;
}

}  // namespace

BranchTraining beam_static_training(const BeamModel& m, double load) {
    BranchTraining t;
    for (double l : {load, -0.8 * load}) {
        Vec x = Vec::Zero(m.dim());
        x.head(m.assembly.n_free) = static_deflection(m.assembly, l);
        t.ics.push_back(x);
    }
    return t;
}

BranchTraining belt_training(const BeamModel& m, int branch) {
    BranchTraining t;
    const Vec x0 = m.fixed_point(branch);
    for (double s : {1.0, -1.0, 2.0}) {
        Vec x = x0;
        x[m.mid()] += 1e-6 * s;
        x[m.mid_velocity()] += 1e-3 * s;
        t.ics.push_back(x);
    }
    t.dt = 1e-5;
    t.velocity_cap = branch > 0 ? 0.5 : 0.3;
    return t;
}

BranchTraining default_beam_training(const BeamModel& m, int branch) {
    return m.variant.kind == VariantKind::MovingBelt ? belt_training(m, branch) : beam_static_training(m);
}

DataRom build_beam_rom(const BeamModel& m, const BranchTraining& plus, const BranchTraining& minus, int order_m,
                       int order_r, bool parallel) {
    const Mat w0 = physical_chart(m);
    std::array<SsmModel, 2> models;
    std::array<TrajectoryDataset, 2> data;
    std::array<FitReport, 2> mrep, drep;
    for (int k = 0; k < 2; ++k) {
        const int b = k == 0 ? 1 : -1;
        const BranchTraining& tr = k == 0 ? plus : minus;
        const Vec x0 = m.fixed_point(b);
        const auto sub = slowest_subspace(decompose(m.jacobian(b, x0)), 1);
        TrainingOptions to;
        to.trim_fraction = tr.trim_fraction;
        to.parallel = parallel;
        if (tr.velocity_cap > 0.0) {
            const int iv = m.mid_velocity();
            const double cap = tr.velocity_cap;
            const double v0 = x0[iv];
            to.stop = [iv, cap, v0](const Vec& x) { return std::abs(x[iv] - v0) > cap; };
        }
        Field f = [&m, b](double t, const Vec& x) { return m.field(b, t, x); };
        data[k] = generate_training(f, b, tr.ics, 0.0, tr.t_end, tr.dt, to);
        const auto mf = fit_manifold(data[k], x0, sub.v_basis, order_m);
        const auto df = fit_dynamics(data[k], mf, order_r);
        mrep[k] = mf.report;
        drep[k] = df.report;
        models[k] = make_model(b, mf, df).recharted(w0);
    }
    DataRom out{NonsmoothRom(models[0], models[1], m.switching()), data, mrep, drep};
    out.rom.q1_index = m.mid();
    out.rom.q2_index = m.mid_velocity();
    if (m.variant.kind != VariantKind::SoftImpact) {
        out.rom.sticking = std::make_shared<ReducedFilippovSticking>(out.rom);
    }
    return out;
}

NonsmoothRom force_beam_rom(const NonsmoothRom& rom, const BeamModel& m, double force, double omega) {
    const Vec f0 = m.forcing_direction();
    SsmModel p = rom.model(1);
    SsmModel q = rom.model(-1);
    p.set_correction(nonmodal_forcing_correction(p, m.jacobian(1, p.x0()), f0, force, omega));
    q.set_correction(nonmodal_forcing_correction(q, m.jacobian(-1, q.x0()), f0, force, omega));
    NonsmoothRom out(std::move(p), std::move(q), rom.switching());
    out.strategy = rom.strategy;
    out.q1_index = rom.q1_index;
    out.q2_index = rom.q2_index;
    if (rom.sticking) out.sticking = std::make_shared<ReducedFilippovSticking>(out);
    return out;
}

Vec beam_rom_state(const NonsmoothRom& rom, int branch, double q_mid, double dq_mid) {
    const SsmModel& m = rom.model(branch);
    Vec x = Vec::Zero(m.dim());
    x[rom.q1_index] = q_mid;
    x[rom.q2_index] = dq_mid;
    Vec eta = m.projection() * x;
    eta -= m.projection() * m.x0();
    return eta;
}

TrajectoryDataset sp_training(const SpParams& p, int branch, double rho, double t_end, int n_ics, double dt,
                              double trim_fraction, bool parallel) {
    const auto split = modal_split(p, branch);
    std::vector<Vec> ics;
    for (int k = 0; k < n_ics; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n_ics;
        Vec y(2);
        y << rho * std::cos(th), rho * std::sin(th);
        ics.push_back(split.shifted.x0 + split.v.leftCols(2) * y);
    }
    Field f = [p, branch](double t, const Vec& x) { return sp_field(p, branch, t, x); };
    TrainingOptions to;
    to.trim_fraction = trim_fraction;
    to.parallel = parallel;
    return generate_training(f, branch, ics, 0.0, t_end, dt, to);
}

SsmModel fit_sp_model(const SpParams& p, const TrajectoryDataset& data, int order_m, int order_r,
                      FitReport* manifold, FitReport* dynamics) {
    const auto split = modal_split(p, data.branch);
    const auto mf = fit_manifold(data, split.shifted.x0, split.v.leftCols(2), order_m, split.v_inv.topRows(2));
    const auto df = fit_dynamics(data, mf, order_r);
    if (manifold) *manifold = mf.report;
    if (dynamics) *dynamics = df.report;
    return make_model(data.branch, mf, df);
}

}  // namespace nsssm
