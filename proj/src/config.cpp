#include "nsssm/config.hpp"

#include <fstream>
#include <set>

namespace nsssm {

using nlohmann::json;

namespace {

// Reads the listed keys of one JSON object; anything else is rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
    }

    template <class T>
    void get(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = v;
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void parse_sp(const json& j, SpParams& p) {
    Section s(j, "shaw_pierre");
    s.get("m1", p.m1);
    s.get("m2", p.m2);
    s.get("c", p.c);
    s.get("k", p.k);
    s.get("alpha", p.alpha);
    s.get("delta", p.delta);
    s.get("eps", p.eps);
    s.get("omega", p.omega);
    s.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("shaw_pierre: ") + e.what());
    }
}

void parse_beam(const json& j, BeamConfig& b) {
    Section s(j, "beam");
    s.get("length", b.props.length);
    s.get("width", b.props.width);
    s.get("thickness", b.props.thickness);
    s.get("young_modulus", b.props.young_modulus);
    s.get("density", b.props.density);
    s.get("poisson", b.props.poisson);
    s.get("damping_modulus", b.props.damping_modulus);
    s.get("n_elements", b.props.n_elements);
    s.get("variant", b.variant);
    s.get("delta", b.delta);
    s.get("normalized_delta", b.normalized_delta);
    s.get("v_ground", b.v_ground);
    s.get("alpha_fric", b.alpha_fric);
    s.get("beta_fric", b.beta_fric);
    s.get("force", b.force);
    s.get("omega", b.omega);
    s.get("reference_load", b.reference_load);
    s.finish();
    variant_from_string(b.variant);
    require(!(b.delta && b.normalized_delta), "beam: give either delta or normalized_delta, not both");
    require(b.force >= 0.0 && b.omega >= 0.0, "beam: force and omega must be non-negative");
    require(b.beta_fric > 0.0, "beam: beta_fric must be positive");
    try {
        b.props.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("beam: ") + e.what());
    }
}

void parse_simulate(const json& j, SimulateConfig& c) {
    Section s(j, "simulate");
    s.get("t0", c.t0);
    s.get("t1", c.t1);
    s.get("dt", c.dt);
    s.get("ic", c.ic);
    s.get("rom", c.rom);
    s.get("rom_minus", c.rom_minus);
    s.get("strategy", c.strategy);
    s.get("output", c.output);
    s.finish();
    require(c.t1 >= c.t0, "simulate: t1 must not precede t0");
    require(c.dt > 0.0, "simulate: dt must be positive");
}

void parse_fit(const json& j, FitConfig& c) {
    Section s(j, "fit");
    s.get("order_m", c.order_m);
    s.get("order_r", c.order_r);
    s.get("rho", c.rho);
    s.get("t_end", c.t_end);
    s.get("load", c.load);
    s.get("n_ics", c.n_ics);
    s.get("output", c.output);
    s.finish();
    require(c.order_m >= 2 && c.order_r >= 1, "fit: need order_m >= 2 and order_r >= 1");
    require(c.rho > 0.0 && c.n_ics > 0, "fit: rho and n_ics must be positive");
}

void parse_frc(const json& j, FrcConfig& c) {
    Section s(j, "frc");
    s.get("omega_min", c.omega_min);
    s.get("omega_max", c.omega_max);
    s.get("points", c.points);
    s.get("coord", c.coord);
    s.get("warm_start", c.warm_start);
    s.get("ic", c.ic);
    s.get("max_periods", c.max_periods);
    s.get("output", c.output);
    s.finish();
    require(c.omega_min > 0.0 && c.omega_max >= c.omega_min, "frc: need 0 < omega_min <= omega_max");
    require(c.points >= 1, "frc: points must be positive");
    require(c.max_periods >= 10, "frc: max_periods too small");
}

void parse_poincare(const json& j, PoincareConfig& c) {
    Section s(j, "poincare");
    s.get("n_ics", c.n_ics);
    s.get("q1_start", c.q1_start);
    s.get("q1_step", c.q1_step);
    s.get("random_ics", c.random_ics);
    s.get("mirror", c.mirror);
    s.get("iterates", c.iterates);
    s.get("t_max", c.t_max);
    s.get("transient", c.transient);
    s.get("output", c.output);
    s.finish();
    require(c.n_ics >= 1 && c.iterates >= 1 && c.random_ics >= 0, "poincare: counts must be positive");
    require(c.transient >= 0 && c.transient < c.iterates, "poincare: transient must be below iterates");
}

void parse_limitcycle(const json& j, LimitCycleConfig& c) {
    Section s(j, "limitcycle");
    s.get("t_end", c.t_end);
    s.get("t_transient", c.t_transient);
    s.get("rom", c.rom);
    s.get("ic", c.ic);
    s.get("output", c.output);
    s.finish();
    require(c.t_end > c.t_transient && c.t_transient >= 0.0, "limitcycle: need 0 <= t_transient < t_end");
}

}  // namespace

BeamModel BeamConfig::build() const {
    BeamModel m;
    m.assembly = assemble_beam(props);
    m.variant.kind = variant_from_string(variant);
    m.variant.v_ground = v_ground;
    m.variant.alpha_fric = alpha_fric;
    m.variant.beta_fric = beta_fric;
    if (delta) {
        m.variant.delta = *delta;
    } else if (normalized_delta) {
        m.variant.delta = raw_delta(m.assembly, m.variant.kind, *normalized_delta, reference_load);
    } else {
        m.variant.delta = m.variant.kind == VariantKind::MovingBelt ? 20.0 : 0.0;
    }
    m.force_amplitude = force;
    m.force_omega = omega;
    return m;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    Section s(j, "config");
    std::string model = "shaw_pierre";
    s.get("model", model);
    if (model == "shaw_pierre") {
        c.model = ModelKind::ShawPierre;
    } else if (model == "vk_beam") {
        c.model = ModelKind::VkBeam;
    } else {
        throw ConfigError("config.model: expected 'shaw_pierre' or 'vk_beam', got '" + model + "'");
    }
    if (auto* p = s.child("shaw_pierre")) parse_sp(*p, c.shaw_pierre);
    if (auto* p = s.child("beam")) parse_beam(*p, c.beam);
    if (auto* p = s.child("simulate")) parse_simulate(*p, c.simulate);
    if (auto* p = s.child("fit")) parse_fit(*p, c.fit);
    if (auto* p = s.child("frc")) parse_frc(*p, c.frc);
    if (auto* p = s.child("poincare")) parse_poincare(*p, c.poincare);
    if (auto* p = s.child("limitcycle")) parse_limitcycle(*p, c.limitcycle);
    s.get("seed", c.seed);
    s.get("threads", c.threads);
    s.finish();
    require(c.threads >= 0, "config.threads must be non-negative");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const RunConfig& c) {
    const auto& p = c.shaw_pierre;
    const auto& b = c.beam;
    json beam = {{"length", b.props.length},
                 {"width", b.props.width},
                 {"thickness", b.props.thickness},
                 {"young_modulus", b.props.young_modulus},
                 {"density", b.props.density},
                 {"poisson", b.props.poisson},
                 {"damping_modulus", b.props.damping_modulus},
                 {"n_elements", b.props.n_elements},
                 {"variant", b.variant},
                 {"v_ground", b.v_ground},
                 {"alpha_fric", b.alpha_fric},
                 {"beta_fric", b.beta_fric},
                 {"force", b.force},
                 {"omega", b.omega},
                 {"reference_load", b.reference_load}};
    if (b.delta) beam["delta"] = *b.delta;
    if (b.normalized_delta) beam["normalized_delta"] = *b.normalized_delta;
    const auto& sm = c.simulate;
    const auto& f = c.fit;
    const auto& r = c.frc;
    const auto& pc = c.poincare;
    const auto& lc = c.limitcycle;
    return {
        {"model", c.model == ModelKind::ShawPierre ? "shaw_pierre" : "vk_beam"},
        {"shaw_pierre",
         {{"m1", p.m1}, {"m2", p.m2}, {"c", p.c}, {"k", p.k}, {"alpha", p.alpha}, {"delta", p.delta},
          {"eps", p.eps}, {"omega", p.omega}}},
        {"beam", beam},
        {"simulate",
         {{"t0", sm.t0}, {"t1", sm.t1}, {"dt", sm.dt}, {"ic", sm.ic}, {"rom", sm.rom}, {"rom_minus", sm.rom_minus},
          {"strategy", sm.strategy}, {"output", sm.output}}},
        {"fit",
         {{"order_m", f.order_m}, {"order_r", f.order_r}, {"rho", f.rho}, {"t_end", f.t_end}, {"load", f.load},
          {"n_ics", f.n_ics}, {"output", f.output}}},
        {"frc",
         {{"omega_min", r.omega_min}, {"omega_max", r.omega_max}, {"points", r.points}, {"coord", r.coord},
          {"warm_start", r.warm_start}, {"ic", r.ic}, {"max_periods", r.max_periods}, {"output", r.output}}},
        {"poincare",
         {{"n_ics", pc.n_ics}, {"q1_start", pc.q1_start}, {"q1_step", pc.q1_step}, {"random_ics", pc.random_ics},
          {"mirror", pc.mirror}, {"iterates", pc.iterates}, {"t_max", pc.t_max}, {"transient", pc.transient},
          {"output", pc.output}}},
        {"limitcycle",
         {{"t_end", lc.t_end}, {"t_transient", lc.t_transient}, {"rom", lc.rom}, {"ic", lc.ic},
          {"output", lc.output}}},
        {"seed", c.seed},
        {"threads", c.threads}};
}

}  // namespace nsssm
