#include "podrhc/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace podrhc {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid number for '" + key + "': " + v);
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw ConfigError("config: invalid integer for '" + key + "': " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config: invalid boolean for '" + key + "': " + v);
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (double x : to_double_list(key, v)) out.push_back(static_cast<int>(std::llround(x)));
    return out;
}

std::string fmt(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s;
}

std::string fmt_list(const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

}  // namespace

PhysicalParams ExperimentConfig::physical_params() const {
    PhysicalParams p;
    p.nu = nu;
    const double a0v = a0;
    const double a1v = a1;
    p.a0 = [a0v](const Eigen::Vector2d&) { return a0v; };
    p.a1 = [a1v](const Eigen::Vector2d&) { return a1v; };
    if (theta == "abs_sin")
        p.theta = [](double t) { return std::abs(std::sin(t)); };
    else if (theta == "one")
        p.theta = [](double) { return 1.0; };
    else if (theta == "zero")
        p.theta = [](double) { return 0.0; };
    else
        throw ConfigError("config: physics.theta must be abs_sin | one | zero");

    if (velocity == "benchmark") {
        p.velocity = [](const Eigen::Vector2d& x) {
            return Eigen::Vector2d(-0.01 * (x.x() + x.y()), 0.2 * x.x() * x.y());
        };
        p.div_velocity = [](const Eigen::Vector2d& x) { return -0.01 + 0.2 * x.x(); };
    } else if (velocity == "zero") {
        p.velocity = [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
        p.div_velocity = [](const Eigen::Vector2d&) { return 0.0; };
    } else {
        throw ConfigError("config: physics.velocity must be benchmark | zero");
    }
    return p;
}

ActuatorLayout ExperimentConfig::layout() const {
    if (actuator_layout == "lshape13") return ActuatorLayout::lshape13(actuator_side);
    if (actuator_layout == "full_domain") return ActuatorLayout::full_domain();
    throw ConfigError("config: actuators.layout must be lshape13 | full_domain");
}

ActuatorQuadrature ExperimentConfig::quadrature() const {
    if (actuator_quadrature == "exact") return ActuatorQuadrature::ExactClip;
    if (actuator_quadrature == "subcell") return ActuatorQuadrature::Subcell4x4;
    throw ConfigError("config: actuators.quadrature must be exact | subcell");
}

Eigen::VectorXd ExperimentConfig::initial_value(const Mesh& mesh) const {
    if (y0 == "sine")
        return interpolate(mesh, [](const Eigen::Vector2d& x) {
            return 3.0 * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
        });
    if (y0 == "zero") return Eigen::VectorXd::Zero(mesh.n_interior());
    throw ConfigError("config: physics.y0 must be sine | zero");
}

CostSpec ExperimentConfig::cost_spec() const {
    CostSpec spec;
    spec.lambda = lambda;
    spec.beta = beta;
    spec.g_kind = (beta > 0.0) ? CostSpec::GKind::SquaredL1 : CostSpec::GKind::None;
    return spec;
}

SolveOptions ExperimentConfig::solve_options() const {
    SolveOptions opts;
    opts.abs_tol = abs_tol;
    opts.rel_tol = rel_tol;
    opts.max_iters = max_iters;
    return opts;
}

RHCConfig ExperimentConfig::rhc_config() const {
    RHCConfig rc;
    rc.T_inf = T_inf;
    rc.tau = tau();
    rc.delta = rhc_delta;
    rc.T = rhc_T;
    rc.alpha_tilde = rhc_alpha_tilde;
    if (index_variant == "fullrom")
        rc.index_variant = IndexVariant::FullRom;
    else if (index_variant == "mixed")
        rc.index_variant = IndexVariant::MixedFom;
    else
        throw ConfigError("config: rhc.index_variant must be fullrom | mixed");
    rc.pod.r_max = r_max;
    rc.pod.energy_eps = energy_eps;
    rc.max_updates_per_step = max_updates_per_step;
    rc.validation_mode = validation_mode;
    rc.cost = cost_spec();
    rc.solver = solve_options();
    return rc;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;
    setters["mesh.n_per_side"] = [&](const std::string& k, const std::string& v) { cfg.mesh_n_per_side = to_int(k, v); };
    setters["time.T_inf"] = [&](const std::string& k, const std::string& v) { cfg.T_inf = to_double(k, v); };
    setters["time.K"] = [&](const std::string& k, const std::string& v) { cfg.K = to_int(k, v); };
    setters["physics.nu"] = [&](const std::string& k, const std::string& v) { cfg.nu = to_double(k, v); };
    setters["physics.a0"] = [&](const std::string& k, const std::string& v) { cfg.a0 = to_double(k, v); };
    setters["physics.a1"] = [&](const std::string& k, const std::string& v) { cfg.a1 = to_double(k, v); };
    setters["physics.theta"] = [&](const std::string&, const std::string& v) { cfg.theta = v; };
    setters["physics.velocity"] = [&](const std::string&, const std::string& v) { cfg.velocity = v; };
    setters["physics.y0"] = [&](const std::string&, const std::string& v) { cfg.y0 = v; };
    setters["cost.lambda"] = [&](const std::string& k, const std::string& v) { cfg.lambda = to_double(k, v); };
    setters["cost.beta"] = [&](const std::string& k, const std::string& v) { cfg.beta = to_double(k, v); };
    setters["actuators.layout"] = [&](const std::string&, const std::string& v) { cfg.actuator_layout = v; };
    setters["actuators.side"] = [&](const std::string& k, const std::string& v) { cfg.actuator_side = to_double(k, v); };
    setters["actuators.quadrature"] = [&](const std::string&, const std::string& v) { cfg.actuator_quadrature = v; };
    setters["rhc.delta"] = [&](const std::string& k, const std::string& v) { cfg.rhc_delta = to_double(k, v); };
    setters["rhc.T"] = [&](const std::string& k, const std::string& v) { cfg.rhc_T = to_double(k, v); };
    setters["rhc.alpha_tilde"] = [&](const std::string& k, const std::string& v) { cfg.rhc_alpha_tilde = to_double(k, v); };
    setters["rhc.index_variant"] = [&](const std::string&, const std::string& v) { cfg.index_variant = v; };
    setters["rhc.r_max"] = [&](const std::string& k, const std::string& v) { cfg.r_max = to_int(k, v); };
    setters["rhc.energy_eps"] = [&](const std::string& k, const std::string& v) { cfg.energy_eps = to_double(k, v); };
    setters["rhc.max_updates_per_step"] = [&](const std::string& k, const std::string& v) { cfg.max_updates_per_step = to_int(k, v); };
    setters["rhc.validation_mode"] = [&](const std::string& k, const std::string& v) { cfg.validation_mode = to_bool(k, v); };
    setters["solver.abs_tol"] = [&](const std::string& k, const std::string& v) { cfg.abs_tol = to_double(k, v); };
    setters["solver.rel_tol"] = [&](const std::string& k, const std::string& v) { cfg.rel_tol = to_double(k, v); };
    setters["solver.max_iters"] = [&](const std::string& k, const std::string& v) { cfg.max_iters = to_int(k, v); };
    setters["solver.backend"] = [&](const std::string&, const std::string& v) { cfg.backend = v; };
    setters["output.dir"] = [&](const std::string&, const std::string& v) { cfg.out_dir = v; };
    setters["output.export_matrices"] = [&](const std::string& k, const std::string& v) { cfg.export_matrices = to_bool(k, v); };
    setters["rom.cache_file"] = [&](const std::string&, const std::string& v) { cfg.rom_cache_file = v; };
    setters["seed"] = [&](const std::string& k, const std::string& v) { cfg.seed = static_cast<std::uint64_t>(to_double(k, v)); };
    setters["study.T_values"] = [&](const std::string& k, const std::string& v) { cfg.study_T = to_double_list(k, v); };
    setters["study.lambda_values"] = [&](const std::string& k, const std::string& v) { cfg.study_lambda = to_double_list(k, v); };
    setters["study.r_values"] = [&](const std::string& k, const std::string& v) { cfg.study_r = to_int_list(k, v); };

    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
        it->second(key, value);
    }

    // invariants
    if (cfg.mesh_n_per_side < 3) throw ConfigError("config: mesh.n_per_side must be >= 3");
    if (cfg.K < 2) throw ConfigError("config: time.K must be >= 2");
    if (cfg.T_inf <= 0.0) throw ConfigError("config: time.T_inf must be positive");
    if (cfg.nu <= 0.0) throw ConfigError("config: physics.nu must be positive");
    if (cfg.lambda <= 0.0) throw ConfigError("config: cost.lambda must be positive");
    if (cfg.beta < 0.0) throw ConfigError("config: cost.beta must be nonnegative");
    if (!(cfg.rhc_alpha_tilde > 0.0 && cfg.rhc_alpha_tilde < 1.0))
        throw ConfigError("config: rhc.alpha_tilde must lie in (0,1)");
    if (cfg.rhc_T < cfg.rhc_delta || cfg.rhc_delta <= 0.0)
        throw ConfigError("config: need rhc.T >= rhc.delta > 0");
    if (!(cfg.energy_eps > 0.0 && cfg.energy_eps <= 1.0))
        throw ConfigError("config: rhc.energy_eps must lie in (0,1]");
    if (cfg.r_max < 1) throw ConfigError("config: rhc.r_max must be >= 1");
    if (cfg.backend != "direct" && cfg.backend != "bicgstab")
        throw ConfigError("config: solver.backend must be direct | bicgstab");
    cfg.physical_params();  // validates the enumerated kinds
    cfg.layout();
    cfg.quadrature();
    cfg.rhc_config();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string resolved_config_text(const ExperimentConfig& cfg, const Discretization& disc) {
    const RHCConfig rc = cfg.rhc_config();
    std::string s;
    s += "# podrhc resolved configuration\n";
    s += "mesh.n_per_side = " + std::to_string(cfg.mesh_n_per_side) + "\n";
    s += "time.T_inf = " + fmt(cfg.T_inf) + "\n";
    s += "time.K = " + std::to_string(cfg.K) + "\n";
    s += "# tau = " + fmt(cfg.tau()) + "\n";
    s += "physics.nu = " + fmt(cfg.nu) + "\n";
    s += "physics.a0 = " + fmt(cfg.a0) + "\n";
    s += "physics.a1 = " + fmt(cfg.a1) + "\n";
    s += "physics.theta = " + cfg.theta + "\n";
    s += "physics.velocity = " + cfg.velocity + "\n";
    s += "physics.y0 = " + cfg.y0 + "\n";
    s += "cost.lambda = " + fmt(cfg.lambda) + "\n";
    s += "cost.beta = " + fmt(cfg.beta) + "\n";
    s += "actuators.layout = " + cfg.actuator_layout + "\n";
    s += "actuators.side = " + fmt(cfg.actuator_side) + "\n";
    s += "actuators.quadrature = " + cfg.actuator_quadrature + "\n";
    s += "rhc.delta = " + fmt(cfg.rhc_delta) + "\n";
    s += "# snapped delta = " + fmt(rc.delta_steps() * cfg.tau()) + "  (" + std::to_string(rc.delta_steps()) + " steps)\n";
    s += "rhc.T = " + fmt(cfg.rhc_T) + "\n";
    s += "# snapped T = " + fmt(rc.horizon_steps() * cfg.tau()) + "  (" + std::to_string(rc.horizon_steps()) + " steps)\n";
    s += "rhc.alpha_tilde = " + fmt(cfg.rhc_alpha_tilde) + "\n";
    s += "rhc.index_variant = " + cfg.index_variant + "\n";
    s += "rhc.r_max = " + std::to_string(cfg.r_max) + "\n";
    s += "rhc.energy_eps = " + fmt(cfg.energy_eps) + "\n";
    s += "rhc.max_updates_per_step = " + std::to_string(cfg.max_updates_per_step) + "\n";
    s += std::string("rhc.validation_mode = ") + (cfg.validation_mode ? "true" : "false") + "\n";
    s += "solver.abs_tol = " + fmt(cfg.abs_tol) + "\n";
    s += "solver.rel_tol = " + fmt(cfg.rel_tol) + "\n";
    s += "solver.max_iters = " + std::to_string(cfg.max_iters) + "\n";
    s += "solver.backend = " + cfg.backend + "\n";
    s += "output.dir = " + cfg.out_dir + "\n";
    s += std::string("output.export_matrices = ") + (cfg.export_matrices ? "true" : "false") + "\n";
    if (!cfg.rom_cache_file.empty()) s += "rom.cache_file = " + cfg.rom_cache_file + "\n";
    s += "seed = " + std::to_string(cfg.seed) + "\n";
    s += "study.T_values = " + fmt_list(cfg.study_T) + "\n";
    s += "study.lambda_values = " + fmt_list(cfg.study_lambda) + "\n";
    s += "study.r_values = " + fmt_list(cfg.study_r) + "\n";
    s += "# computed eta_V = " + fmt(disc.eta_V) + "\n";
    s += "# computed eta_H = " + fmt(disc.eta_H) + "\n";
    s += "# computed |B|_{L(U,V')} = " + fmt(disc.B_dualnorm) + "\n";
    return s;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace podrhc
