#pragma once

#include "podrhc/certify.hpp"
#include "podrhc/ocp.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace podrhc {

enum class IndexVariant { MixedFom, FullRom };

struct RHCConfig {
    double T_inf = 10.0;
    double tau = 0.0125;  // global time step
    double delta = 0.28;  // sampling time; snapped to round(delta/tau) steps
    double T = 0.8;       // prediction horizon; snapped likewise
    double alpha_tilde = 0.35;
    IndexVariant index_variant = IndexVariant::FullRom;
    PodOptions pod;
    int max_updates_per_step = 10;
    bool validation_mode = false;  // also compute the exact FOM index per step
    CostSpec cost;
    SolveOptions solver;

    int delta_steps() const;
    int horizon_steps() const;
    int total_steps() const;  // grid steps covering [0, T_inf]
};

struct PerformanceRecord {
    int k = 0;
    double t_k = 0.0;
    int r = 0;
    double alpha_lower = 0.0;
    double alpha_upper = 0.0;
    std::optional<double> alpha_fom;
    bool accepted = false;
    bool upper_vacuous = false;
    int n_model_updates_so_far = 0;
    double J_delta = 0.0;  // denominator of the index
    double V_T_r = 0.0;
    double delta_VT = 0.0;
    long fom_gradient_evals_so_far = 0;
    double wall_ms = 0.0;
};

struct ClosedLoopResult {
    ControlSignal u_rh;  // committed control on [0, T_inf]
    Trajectory y_rh;     // plant (full-order) trajectory on [0, T_inf]
    double total_cost = 0.0;
    double y_final_H = 0.0;
    std::vector<PerformanceRecord> records;
    long fom_gradient_evals = 0;
    long rom_gradient_evals = 0;
    long validation_gradient_evals = 0;  // FOM solves done only for alpha_fom
    int model_updates = 0;
    int final_r = 0;
    double cpu_seconds = 0.0;
    double snapped_delta = 0.0;
    double snapped_T = 0.0;
    double alpha_min = 0.0, alpha_avg = 0.0, alpha_max = 0.0;
};

/// Warm start for the next sampling instant: drop the first `shift_steps`
/// values and pad zeros at the tail.
ControlSignal shift_control(const ControlSignal& u, int shift_steps, const TimeGrid& new_grid);

/// Full-order receding horizon control. The exact performance index
/// alpha_k = [V_T(t_k) - V_T(t_{k+1})] / J_delta(u_k) is recorded for every
/// step (the value at t_{k+1} is the next step's solve; one extra solve
/// closes the last step).
ClosedLoopResult run_fom_rhc(const RHCConfig& cfg, std::shared_ptr<const Discretization> disc,
                             const Eigen::VectorXd& y0);

/// Reduced-order receding horizon control with the certified performance
/// gate and POD model updates. Starts from an empty basis, so the first
/// step always triggers one bootstrap update.
ClosedLoopResult run_rom_rhc(const RHCConfig& cfg, std::shared_ptr<const Discretization> disc,
                             const Eigen::VectorXd& y0);

/// Exact induced performance index of a control segment on [t_in, t_in+delta]
/// (two full-order value function solves plus one rollout).
/// J_delta below 1e-14 falls back to the y = 0 convention alpha = 1.
double performance_index_fom(FomModel& model, const ControlSignal& u_delta, double t_in,
                             const Eigen::VectorXd& y_in, const RHCConfig& cfg,
                             long* gradient_evals = nullptr);

struct PerformanceBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool upper_vacuous = false;
    double J_delta = 0.0;   // denominator actually used for the lower bound
    double V_k = 0.0;       // V_T^r(t_k)
    double V_k1 = 0.0;      // V_T^r(t_{k+1})
    double delta_V_k = 0.0;
    double delta_V_k1 = 0.0;
};

struct IndexEvaluation {
    PerformanceBounds bounds;
    OpenLoopSolution sol_k;       // reduced solve at t_k
    OpenLoopSolution sol_k1;      // reduced solve at t_{k+1}
    Trajectory rollout;           // plant rollout on [t_k, t_{k+1}] (mixed only)
    double J_delta_fom = 0.0;     // plant cost of the rollout (mixed only)
};

/// Index bounds from reduced data only (eqs. with the J_delta estimator in
/// the denominator); no full-order work. `known_sol_k` skips the t_k solve
/// when the caller already holds it (cache across sampling instants).
IndexEvaluation performance_bounds_fullrom(RomModel& rom, const EstimatorConstants& consts,
                                           const RHCConfig& cfg, double t_k, const Eigen::VectorXd& y_k_fom,
                                           const SolveOptions& opts_k, const SolveOptions& opts_k1,
                                           const OpenLoopSolution* known_sol_k = nullptr);

/// Index bounds with the plant advanced over [t_k, t_{k+1}] by the reduced
/// control (one full-order rollout per evaluation).
IndexEvaluation performance_bounds_mixed(RomModel& rom, FomModel& plant, const EstimatorConstants& consts,
                                         const RHCConfig& cfg, double t_k, const Eigen::VectorXd& y_k_fom,
                                         const SolveOptions& opts_k, const SolveOptions& opts_k1,
                                         const OpenLoopSolution* known_sol_k = nullptr);

}  // namespace podrhc
