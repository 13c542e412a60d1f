#pragma once

#include "podrhc/model.hpp"
#include "podrhc/types.hpp"

#include <string>

namespace podrhc {

/// Window of n = round(T / tau) implicit-Euler steps starting at t_in.
/// t_in and T must both be grid-aligned.
TimeGrid make_window(double t_in, double tau, double T);

/// Implicit Euler for  d/dt (M y) + A(t) y = B u:
///   (M + tau A(t_{k+1})) y_{k+1} = M y_k + tau B u_{k+1},  k = 0..K-1.
/// For the ROM overload y_in must already be reduced coordinates
/// (see project_initial).
Trajectory solve_state(FomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in);
Trajectory solve_state(RomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in);

/// Exact adjoint of the discrete forward map (discretize-then-optimize):
///   p_K = 0,  (M + tau A(t_{j+1}))' p_j = M p_{j+1} + tau M y_{j+1},
/// stepping j = K-1..0. p_j is the multiplier of the step ending at t_{j+1},
/// i.e. it matches the control value acting on (t_j, t_{j+1}].
Trajectory solve_adjoint(FomModel& model, const Trajectory& y_data);
Trajectory solve_adjoint(RomModel& model, const Trajectory& y_data);

/// CSV export: one row per grid point with (t, ||y||_H, ||y||_V) and
/// optionally the coefficient vector. ROM trajectories are lifted first.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const Discretization& disc,
                          const ReducedModel* rm = nullptr, bool with_coefficients = false);

}  // namespace podrhc
