#include "nsssm/analysis.hpp"
#include "nsssm/config.hpp"
#include "nsssm/rom.hpp"
#include "nsssm/scenarios.hpp"
#include "nsssm/ssm_analytic.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <omp.h>

#include <Eigen/Core>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

using namespace nsssm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// SHA-1 over "blob <size>\0<content>", as git hashes file contents.
std::string git_hash(const std::string& content) {
    const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr);
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Run {
    RunConfig cfg;
    fs::path out_dir = ".";
    std::string command;
    std::vector<fs::path> outputs;

    fs::path path(const std::string& name) const { return out_dir / name; }

    std::ofstream open(const std::string& name) {
        const fs::path p = path(name);
        std::ofstream os(p, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + p.string());
        outputs.push_back(p);
        return os;
    }

    void write_manifest() const {
        const json cfg_json = to_json(cfg);
        json files = json::object();
        for (const auto& p : outputs) {
            if (fs::is_regular_file(p)) files[p.filename().string()] = git_hash(read_file(p));
        }
        json m = {{"command", command},
                  {"config", cfg_json},
                  {"config_hash", git_hash(cfg_json.dump())},
                  {"outputs", files},
                  {"versions",
                   {{"nsssm", kVersion},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                  "." + std::to_string(EIGEN_MINOR_VERSION)},
                    {"compiler", __VERSION__},
                    {"openmp", _OPENMP}}}};
        std::ofstream os(path("run_manifest.json"), std::ios::binary);
        os << m.dump(2) << '\n';
    }
};

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vec checked_ic(const std::vector<double>& v, int n, const Vec& fallback) {
    if (v.empty()) return fallback;
    if (static_cast<int>(v.size()) != n) {
        throw ConfigError("initial condition needs " + std::to_string(n) + " entries, got " +
                          std::to_string(v.size()));
    }
    return to_vec(v);
}

SpParams sp_params(const RunConfig& c) { return c.shaw_pierre; }

Vec default_sp_ic(const SpParams& p) {
    Vec eta(2);
    eta << 0.3, 0.0;
    SpParams q = p;
    q.eps = 0.0;
    return build_sp_model(q, 1).lift(eta);
}

Vec default_beam_ic(const BeamModel& m) {
    Vec x = Vec::Zero(m.dim());
    if (m.variant.kind == VariantKind::MovingBelt) {
        x = m.fixed_point(-1);
        x[m.mid_velocity()] += 1e-3;
    } else {
        x.head(m.assembly.n_free) = static_deflection(m.assembly, 12e3);
    }
    return x;
}

NonsmoothRom analytic_sp_rom(const SpParams& p, IcStrategy s) {
    NonsmoothRom rom(build_sp_model(p, 1, true), build_sp_model(p, -1, true), sp_switching());
    rom.strategy = s;
    rom.sticking = std::make_shared<SpSticking>(p);
    return rom;
}

SsmModel load_model(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open model file " + file);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(file + ": " + e.what());
    }
    return SsmModel::from_json(j);
}

// ROM from model files. A missing minus file is looked up by replacing
// "_plus" in the plus file name; a single model serves both branches.
NonsmoothRom load_rom(const RunConfig& c) {
    const auto& sc = c.simulate;
    std::string minus = sc.rom_minus;
    if (minus.empty()) {
        const auto pos = sc.rom.rfind("_plus");
        if (pos != std::string::npos) {
            std::string cand = sc.rom;
            cand.replace(pos, 5, "_minus");
            if (fs::exists(cand)) minus = cand;
        }
    }
    SsmModel mp = load_model(sc.rom);
    SsmModel mm = minus.empty() ? mp : load_model(minus);
    if (c.model == ModelKind::ShawPierre) {
        NonsmoothRom rom(std::move(mp), std::move(mm), sp_switching());
        rom.strategy = ic_strategy_from_string(sc.strategy);
        rom.sticking = std::make_shared<SpSticking>(c.shaw_pierre);
        return rom;
    }
    const BeamModel bm = c.beam.build();
    NonsmoothRom rom(std::move(mp), std::move(mm), bm.switching());
    rom.strategy = ic_strategy_from_string(sc.strategy);
    rom.q1_index = bm.mid();
    rom.q2_index = bm.mid_velocity();
    if (bm.variant.kind != VariantKind::SoftImpact && rom.model(1).has_chart()) {
        rom.sticking = std::make_shared<ReducedFilippovSticking>(rom);
    }
    if (bm.force_amplitude > 0.0) rom = force_beam_rom(rom, bm, bm.force_amplitude, bm.force_omega);
    return rom;
}

// ---------------------------------------------------------------------------

int cmd_validate_tables(Run& run, int flip) {
    const auto rep = validate_tables(sp_params(run.cfg), flip);
    auto os = run.open("tables.csv");
    os << "entry,computed,rounded,printed,pass\n" << std::setprecision(17);
    for (const auto& e : rep.entries) {
        os << e.name << ',' << e.computed << ',' << e.rounded << ',' << e.printed << ',' << (e.pass ? 1 : 0) << '\n';
        std::cout << (e.pass ? "PASS " : "FAIL ") << e.name << " computed " << std::setprecision(6) << e.computed
                  << " printed " << e.printed << '\n';
    }
    if (!rep.compared) {
        std::cout << "delta = " << run.cfg.shaw_pierre.delta
                  << ": tables are for delta = 0.1, comparison skipped; max |quadratic coefficient| = "
                  << rep.max_quadratic << '\n';
        return rep.max_quadratic == 0.0 || run.cfg.shaw_pierre.delta != 0.0 ? 0 : 1;
    }
    int failed = 0;
    for (const auto& e : rep.entries) failed += e.pass ? 0 : 1;
    std::cout << rep.entries.size() - failed << "/" << rep.entries.size() << " entries match\n";
    return failed == 0 ? 0 : 1;
}

int cmd_simulate(Run& run) {
    const auto& c = run.cfg;
    const auto& sc = c.simulate;
    HybridOptions ho;
    ho.output_dt = sc.dt;
    if (!sc.rom.empty()) {
        const NonsmoothRom rom = load_rom(c);
        const int n = rom.dim();
        const Vec fallback = c.model == ModelKind::ShawPierre ? default_sp_ic(c.shaw_pierre)
                                                               : default_beam_ic(c.beam.build());
        const Vec x = checked_ic(sc.ic, n, fallback);
        auto os = run.open(sc.output);
        if (sc.t1 == sc.t0) {
            os << "t";
            for (int i = 1; i <= n; ++i) os << ",x" << i;
            os << ",branch,xi1,xi2\n";
            return 0;
        }
        int b = rom.switching().sigma(x) >= 0.0 ? 1 : -1;
        RomOptions ro;
        ro.output_dt = sc.dt;
        write_rom_csv(os, simulate_rom(rom, rom.model(b).chart(x), b, sc.t0, sc.t1, ro));
        return 0;
    }
    PiecewiseSmoothSystem sys;
    Vec x;
    if (c.model == ModelKind::ShawPierre) {
        sys = sp_system(c.shaw_pierre);
        x = checked_ic(sc.ic, 4, default_sp_ic(c.shaw_pierre));
    } else {
        const BeamModel m = c.beam.build();
        sys = m.system();
        x = checked_ic(sc.ic, m.dim(), default_beam_ic(m));
    }
    auto os = run.open(sc.output);
    if (sc.t1 == sc.t0) {
        os << "t";
        for (int i = 1; i <= x.size(); ++i) os << ",x" << i;
        os << ",branch\n";
        return 0;
    }
    const auto tr = integrate_hybrid(sys, x, sc.t0, sc.t1, ho);
    write_trajectory_csv(os, tr);
    auto ev = run.open(fs::path(sc.output).stem().string() + "_events.csv");
    write_events_csv(ev, tr);
    return 0;
}

json report_json(const FitReport& r) {
    return {{"nmte_in_sample", r.nmte_in_sample},
            {"residual", r.residual},
            {"regularized", r.regularized},
            {"warning", r.warning}};
}

int cmd_fit(Run& run) {
    const auto& c = run.cfg;
    const auto& f = c.fit;
    std::array<SsmModel, 2> models;
    json report;
    if (c.model == ModelKind::ShawPierre) {
        SpParams p = c.shaw_pierre;
        p.eps = 0.0;
        for (int k = 0; k < 2; ++k) {
            const int b = k == 0 ? 1 : -1;
            const auto data = sp_training(p, b, f.rho, f.t_end > 0 ? f.t_end : 60.0, f.n_ics);
            FitReport mr, dr;
            models[k] = fit_sp_model(p, data, f.order_m, f.order_r, &mr, &dr);
            report[b > 0 ? "plus" : "minus"] = {{"manifold", report_json(mr)}, {"dynamics", report_json(dr)}};
        }
    } else {
        BeamModel m = c.beam.build();
        m.force_amplitude = 0.0;
        std::array<BranchTraining, 2> tr;
        for (int k = 0; k < 2; ++k) {
            const int b = k == 0 ? 1 : -1;
            tr[k] = m.variant.kind == VariantKind::MovingBelt ? belt_training(m, b) : beam_static_training(m, f.load);
            if (f.t_end > 0) tr[k].t_end = f.t_end;
        }
        const auto dr = build_beam_rom(m, tr[0], tr[1], f.order_m, f.order_r);
        for (int k = 0; k < 2; ++k) {
            models[k] = dr.rom.model(k == 0 ? 1 : -1);
            report[k == 0 ? "plus" : "minus"] = {{"manifold", report_json(dr.manifold_reports[k])},
                                                 {"dynamics", report_json(dr.dynamics_reports[k])}};
        }
    }
    for (int k = 0; k < 2; ++k) {
        auto os = run.open(f.output + (k == 0 ? "_plus.json" : "_minus.json"));
        os << models[k].to_json().dump(2) << '\n';
    }
    auto os = run.open(f.output + "_report.json");
    os << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    return 0;
}

std::vector<double> grid(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return g;
}

int cmd_frc(Run& run) {
    const auto& c = run.cfg;
    const auto& fc = c.frc;
    const auto omegas = grid(fc.omega_min, fc.omega_max, fc.points);
    FrcOptions o;
    o.warm_start = fc.warm_start;
    o.steady.max_periods = fc.max_periods;
    std::vector<FrcPoint> frc;
    if (c.model == ModelKind::ShawPierre) {
        const SpParams base = c.shaw_pierre;
        if (base.eps == 0.0) throw ConfigError("frc: shaw_pierre.eps must be nonzero");
        const IcStrategy strat = ic_strategy_from_string(c.simulate.strategy);
        FlowFactory full = [base](double w) {
            SpParams p = base;
            p.omega = w;
            return std::make_unique<FullFlow>(sp_system(p));
        };
        FlowFactory rom = [base, strat](double w) {
            SpParams p = base;
            p.omega = w;
            return std::make_unique<RomFlow>(analytic_sp_rom(p, strat));
        };
        SpParams p0 = base;
        p0.eps = 0.0;
        Vec eta(2);
        eta << 0.1, 0.0;
        FlowState sf, sr;
        sf.x = checked_ic(fc.ic, 4, build_sp_model(p0, 1).lift(eta));
        const int b = sf.x[1] >= 0.0 ? 1 : -1;
        sf.branch = sr.branch = sr.chart = b;
        sr.x = sf.x;
        sr.eta = build_sp_model(p0, b).chart(sf.x);
        frc = frc_sweep(full, rom, omegas, sf, sr, fc.coord >= 0 ? fc.coord : 0, o);
    } else {
        const BeamModel m = c.beam.build();
        if (m.force_amplitude == 0.0) throw ConfigError("frc: beam.force must be nonzero");
        BeamModel free = m;
        free.force_amplitude = 0.0;
        const auto dr = build_beam_rom(free, default_beam_training(free, 1), default_beam_training(free, -1),
                                       c.fit.order_m, c.fit.order_r);
        const NonsmoothRom base_rom = dr.rom;
        FlowFactory full = [m](double w) {
            BeamModel b = m;
            b.force_omega = w;
            return std::make_unique<FullFlow>(b.system());
        };
        FlowFactory rom = [m, base_rom](double w) {
            return std::make_unique<RomFlow>(force_beam_rom(base_rom, m, m.force_amplitude, w));
        };
        FlowState sf, sr;
        sf.x = checked_ic(fc.ic, m.dim(), Vec::Zero(m.dim()));
        const int b = m.switching().sigma(sf.x) >= 0.0 ? 1 : -1;
        sf.branch = sr.branch = sr.chart = b;
        sr.eta = beam_rom_state(base_rom, b, sf.x[m.mid()], sf.x[m.mid_velocity()]);
        sr.x = base_rom.model(b).lift(sr.eta);
        frc = frc_sweep(full, rom, omegas, sf, sr, fc.coord >= 0 ? fc.coord : m.mid(), o);
    }
    auto os = run.open(fc.output);
    write_frc_csv(os, frc);
    return 0;
}

int cmd_poincare(Run& run) {
    const auto& c = run.cfg;
    if (c.model != ModelKind::ShawPierre) throw ConfigError("poincare: only defined for model 'shaw_pierre'");
    const auto& pc = c.poincare;
    SpParams p = c.shaw_pierre;
    p.eps = 0.0;
    const SsmModel mp = build_sp_model(p, 1);
    std::vector<double> q1s;
    for (int i = 0; i < pc.n_ics; ++i) q1s.push_back(pc.q1_start + pc.q1_step * i);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(pc.q1_start, pc.q1_start + pc.q1_step * std::max(pc.n_ics - 1, 1));
    for (int i = 0; i < pc.random_ics; ++i) q1s.push_back(u(rng));
    std::vector<Vec> ics;
    for (double q1 : q1s) {
        Vec eta(2);
        eta << q1, 0.0;
        ics.push_back(mp.lift(eta));
        if (pc.mirror) ics.push_back(-ics.back());
    }
    PoincareOptions o;
    o.t_max = pc.t_max;
    o.transient = pc.transient;
    const auto d = poincare_map(p, ics, pc.iterates, o);
    {
        auto os = run.open(pc.output);
        write_poincare_csv(os, d);
    }
    json summary;
    auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    summary["full"] = {{"edge_plus", vec(d.edge_plus)}, {"edge_minus", vec(d.edge_minus)}};
    int truncated = 0;
    for (bool t : d.truncated) truncated += t ? 1 : 0;
    summary["truncated_sequences"] = truncated;
    try {
        NonsmoothRom rom(mp, build_sp_model(p, -1), sp_switching());
        const auto approx = approx_invariant_curve(rom, p);
        summary["rom"] = {{"edge_plus", vec(approx.edge_plus)}, {"edge_minus", vec(approx.edge_minus)}};
    } catch (const Error& e) {
        summary["rom"] = {{"error", e.what()}};
    }
    auto os = run.open(fs::path(pc.output).stem().string() + "_edges.json");
    os << summary.dump(2) << '\n';
    return 0;
}

int cmd_limitcycle(Run& run) {
    const auto& c = run.cfg;
    const auto& lc = c.limitcycle;
    std::unique_ptr<Flow> flow;
    FlowState s;
    if (c.model == ModelKind::ShawPierre) {
        const SpParams p = c.shaw_pierre;
        s.x = checked_ic(lc.ic, 4, default_sp_ic(p));
        s.branch = s.x[1] >= 0.0 ? 1 : -1;
        if (lc.rom) {
            const auto rom = analytic_sp_rom(p, ic_strategy_from_string(c.simulate.strategy));
            s.chart = s.branch;
            s.eta = rom.model(s.branch).chart(s.x);
            flow = std::make_unique<RomFlow>(rom);
        } else {
            flow = std::make_unique<FullFlow>(sp_system(p));
        }
    } else {
        const BeamModel m = c.beam.build();
        s.x = checked_ic(lc.ic, m.dim(), default_beam_ic(m));
        s.branch = m.switching().sigma(s.x) >= 0.0 ? 1 : -1;
        if (lc.rom) {
            BeamModel free = m;
            free.force_amplitude = 0.0;
            auto rom = build_beam_rom(free, default_beam_training(free, 1), default_beam_training(free, -1),
                                      c.fit.order_m, c.fit.order_r)
                           .rom;
            if (m.force_amplitude > 0.0) rom = force_beam_rom(rom, m, m.force_amplitude, m.force_omega);
            s.chart = s.branch;
            s.eta = beam_rom_state(rom, s.branch, s.x[m.mid()], s.x[m.mid_velocity()]);
            s.x = rom.model(s.branch).lift(s.eta);
            flow = std::make_unique<RomFlow>(rom);
        } else {
            flow = std::make_unique<FullFlow>(m.system());
        }
    }
    LimitCycleOptions o;
    o.t_transient = lc.t_transient;
    const auto cyc = detect_limit_cycle(*flow, s, lc.t_end, o);
    auto os = run.open(lc.output);
    if (!cyc) {
        os << json{{"found", false}}.dump(2) << '\n';
        std::cout << "no limit cycle found\n";
        return 0;
    }
    write_limit_cycle_json(os, *cyc);
    std::cout << "limit cycle: period " << cyc->period << " frequency " << cyc->frequency << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced-order models of piecewise-smooth systems on spectral submanifolds"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out-dir", out_dir, "directory for outputs");
    app.add_option("--seed", seed, "seed for sampled initial-condition sets");
    app.add_option("--threads", threads, "OpenMP threads");
    app.set_version_flag("--version", kVersion);

    auto* vt = app.add_subcommand("validate-tables", "compare analytic coefficients with the printed tables");
    std::optional<double> vt_delta;
    int flip = -1;
    vt->add_option("--delta", vt_delta, "friction coefficient");
    vt->add_option("--flip", flip, "test mode: negate entry N before comparing");
    auto* sim = app.add_subcommand("simulate", "integrate the full model or a ROM");
    std::string rom_file;
    std::optional<double> sim_t1;
    sim->add_option("--rom", rom_file, "SsmModel JSON of branch + (the _minus file is found by name)");
    sim->add_option("--t1", sim_t1, "end time");
    app.add_subcommand("fit", "fit data-driven SSM models on generated trajectories");
    app.add_subcommand("frc", "forced response curve, full model and ROM");
    app.add_subcommand("poincare", "Poincaré map on the switching surface");
    auto* lcc = app.add_subcommand("limitcycle", "detect a limit cycle");
    bool lc_rom = false;
    lcc->add_flag("--rom", lc_rom, "use the ROM");

    CLI11_PARSE(app, argc, argv);

    Run run;
    try {
        run.cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
        if (seed) run.cfg.seed = *seed;
        if (threads) run.cfg.threads = *threads;
        if (vt_delta) run.cfg.shaw_pierre.delta = *vt_delta;
        if (!rom_file.empty()) run.cfg.simulate.rom = rom_file;
        if (sim_t1) run.cfg.simulate.t1 = *sim_t1;
        if (lc_rom) run.cfg.limitcycle.rom = true;
        if (run.cfg.threads < 0) throw ConfigError("--threads must be non-negative");
        if (run.cfg.threads > 0) omp_set_num_threads(run.cfg.threads);
        run.out_dir = out_dir;
        fs::create_directories(run.out_dir);
        run.command = app.get_subcommands().front()->get_name();

        int rc = 0;
        if (run.command == "validate-tables") rc = cmd_validate_tables(run, flip);
        else if (run.command == "simulate") rc = cmd_simulate(run);
        else if (run.command == "fit") rc = cmd_fit(run);
        else if (run.command == "frc") rc = cmd_frc(run);
        else if (run.command == "poincare") rc = cmd_poincare(run);
        else if (run.command == "limitcycle") rc = cmd_limitcycle(run);
        run.write_manifest();
        return rc;
    } catch (const Error& e) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}, {"command", run.command}}.dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}, {"command", run.command}}.dump() << '\n';
        return 3;
    }
}
