#pragma once

#include "podrhc/fem.hpp"
#include "podrhc/rhc.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace podrhc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key-value experiment configuration. Unknown keys are rejected.
struct ExperimentConfig {
    // mesh / time
    int mesh_n_per_side = 61;
    double T_inf = 10.0;
    int K = 801;  // time grid points on [0, T_inf], tau = T_inf / (K-1)

    // physics
    double nu = 0.1;
    double a0 = -2.0;
    double a1 = -0.45;
    std::string theta = "abs_sin";       // abs_sin | one | zero
    std::string velocity = "benchmark";  // benchmark | zero
    std::string y0 = "sine";             // sine | zero

    // cost
    double lambda = 5e-4;
    double beta = 1e-4;

    // actuators
    std::string actuator_layout = "lshape13";  // lshape13 | full_domain
    double actuator_side = ActuatorLayout::kDefaultSide;
    std::string actuator_quadrature = "exact";  // exact | subcell

    // rhc
    double rhc_delta = 0.28;
    double rhc_T = 0.8;
    double rhc_alpha_tilde = 0.35;
    std::string index_variant = "fullrom";  // fullrom | mixed
    int r_max = 100;
    double energy_eps = 1.0 - 1e-13;
    int max_updates_per_step = 10;
    bool validation_mode = false;

    // solver
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    int max_iters = 1000;
    std::string backend = "direct";  // direct | bicgstab

    // output / misc
    std::string out_dir = "out";
    bool export_matrices = false;
    std::string rom_cache_file;  // empty = no caching
    std::uint64_t seed = 0;

    // openloop-study sweeps
    std::vector<double> study_T{0.8, 1.0, 1.2};
    std::vector<double> study_lambda{1.0, 1e-1, 1e-2, 1e-3};
    std::vector<int> study_r{5, 10, 15, 20, 25, 30, 35, 40};

    double tau() const { return T_inf / (K - 1); }

    PhysicalParams physical_params() const;
    ActuatorLayout layout() const;
    ActuatorQuadrature quadrature() const;
    Eigen::VectorXd initial_value(const Mesh& mesh) const;
    CostSpec cost_spec() const;
    SolveOptions solve_options() const;
    RHCConfig rhc_config() const;
};

/// Parses `key = value` lines ('#' comments). Throws ConfigError on unknown
/// keys, malformed values, or violated invariants.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// The fully-resolved configuration (including snapped delta/T and the
/// computed eta_H) as config-file text, for the output-directory echo.
std::string resolved_config_text(const ExperimentConfig& cfg, const Discretization& disc);

/// FNV-1a, used to key the reduced-basis cache.
std::uint64_t fnv1a(const std::string& text);

}  // namespace podrhc
