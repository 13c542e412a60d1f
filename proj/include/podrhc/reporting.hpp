#pragma once

#include "podrhc/rhc.hpp"

#include <string>
#include <vector>

namespace podrhc {

/// Deterministic "%.17g" float formatting used by every writer.
std::string format_g17(double x);

/// Per-attempt log: k, t_k, r, alpha_lower, alpha_upper, alpha_fom?,
/// accepted, J_delta, V_T_r, delta_VT, fom_grads, wall_ms.
void write_rhc_log_csv(const std::string& path, const ClosedLoopResult& result);

/// (t, ||y||_H, running cost l(y,u)) on the full closed-loop grid.
void write_decay_csv(const std::string& path, const ClosedLoopResult& result, const Discretization& disc,
                     const CostSpec& cost);

/// (t, u_1..u_m), control values on their intervals (t_{k-1}, t_k].
void write_controls_csv(const std::string& path, const ClosedLoopResult& result);

/// Closed-loop summary as JSON (cost, final norm, counters, timings).
void write_summary_json(const std::string& path, const ClosedLoopResult& result, const std::string& mode,
                        double T, double alpha_tilde, const std::string& index_variant);

/// Raw plant trajectory (n x (K+1) doubles) for cross-run comparisons.
void write_plant_binary(const std::string& path, const Trajectory& traj);
Trajectory read_plant_binary(const std::string& path);

struct OpenLoopStudyRow {
    double T = 0.0;
    double lambda = 0.0;
    int r = 0;
    double e_VT = 0.0;
    double delta_VT = 0.0;
    double effectivity = 0.0;  // e_VT / delta_VT
};

void write_openloop_study_csv(const std::string& path, const std::vector<OpenLoopStudyRow>& rows);

/// Least-squares slope of log(values) against t (decay-rate fits).
double log_linear_slope(const std::vector<double>& t, const std::vector<double>& values);

}  // namespace podrhc
