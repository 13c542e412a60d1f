#pragma once

#include "podrhc/rom.hpp"
#include "podrhc/types.hpp"

#include <vector>

namespace podrhc {

/// Constants of the residual-based error bounds. All of them grow like
/// exp(2 eta_H T) in the horizon and are monotone in T.
struct EstimatorConstants {
    double eta_V = 0.0;
    double eta_H = 0.0;
    double B_norm = 0.0;  // |B|_{L^inf(L(U,V'))}

    double c1y(double dt) const { return 2.0 * std::exp(2.0 * eta_H * dt) / (std::min(1.0, eta_V) * eta_V); }
    double c2y(double dt) const { return std::exp(2.0 * eta_H * dt) / std::min(1.0, eta_V); }
    double cp(double T) const { return 2.0 * std::exp(2.0 * eta_H * T) / (std::min(1.0, eta_V) * eta_V); }
    double cu(double T) const { return std::exp(2.0 * eta_H * T) / (2.0 * eta_V); }

    static EstimatorConstants from(const Discretization& disc) {
        return {disc.eta_V, disc.eta_H, disc.B_dualnorm};
    }
};

enum class ResidualPath { OfflineOnline, Direct };

/// Residual data of one reduced solve (y^r, u, p^r) on a window, enough to
/// evaluate every estimator: per-step dual norms of the state and adjoint
/// residuals, the H-projection defect of the initial value, and
/// ||p^r(t_in)||_H. The adjoint is assumed to be driven by y^r itself.
struct ReducedSolveAnalysis {
    TimeGrid grid;
    std::vector<double> rho_y;  // index k-1 <-> time t_k, k = 1..K
    std::vector<double> rho_p;  // index j   <-> step ending at t_{j+1}
    double proj_err = 0.0;      // || y_in - Pi^H y_in ||_H
    double p_tin_H = 0.0;       // || p^r(t_in) ||_H

    double T() const { return grid.horizon(); }

    /// sum_{k<=j} tau e^{-2 eta_H (t_k - t_in)} rho_y[k-1]^2
    double state_residual_sq_weighted(double eta_H, int steps = -1) const;
    /// sum_j tau e^{2 eta_H (t_{j+1} - t_in - T)} rho_p[j]^2
    double adjoint_residual_sq_weighted(double eta_H) const;
    double state_residual_sq_plain() const;
    double adjoint_residual_sq_plain() const;
};

/// Computes the analysis of a reduced bundle. `y_in_fom` is the full-order
/// initial value when the solve was started from one (used for the
/// projection defect); pass nullptr when the initial value was already a
/// reduced coordinate (defect zero). The Direct path needs a RieszSolver.
ReducedSolveAnalysis analyze_reduced_solve(const ReducedModel& rm, const Trajectory& y_rom,
                                           const ControlSignal& u, const Trajectory& p_rom,
                                           const Eigen::VectorXd* y_in_fom,
                                           ResidualPath path = ResidualPath::OfflineOnline,
                                           const RieszSolver* riesz = nullptr);

/// State bound at grid point `step` (default: end of the window):
///   Delta_y^2(t) = C_{1,y}(t) [ |B|^2 Delta_u^2 + ||e^{-eta_H .} R_y||^2 ]
///                + C_{2,y}(t) ( Delta_y_in + proj_err )^2,
/// with C_{1,y} halved when Delta_u = 0.
double delta_state(const EstimatorConstants& c, const ReducedSolveAnalysis& a, int step, double delta_u,
                   double delta_y_in);

/// Adjoint bound Delta_p^2 = C_p [ Delta_y_data^2 + ||e^{eta_H(.-T)} R_p||^2 ],
/// C_p halved when Delta_y_data = 0. The improved initial-time bound is
/// ||e_p(t_in)||^2 <= Delta_p^2 / 2.
double delta_adjoint(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_data);

struct ControlErrorBounds {
    double delta_u = 0.0;    // bounds ||u_opt - u_opt^r||_{U_T}
    double delta_y_H = 0.0;  // bounds ||y_opt - y_opt^r||_{L2(H)}
};

/// Optimal-control estimators (the analysis must come from an optimal
/// reduced bundle):
///   Delta_u^2   = |B|^2/lambda^2 Dp^2 + 1/lambda Dy^2 + C_u/lambda Dyin^2
///   Delta_yH^2  = |B|^2/(4 lambda) Dp^2 + 2 Dy^2 + 2 C_u Dyin^2
/// with Dp = delta_adjoint(0), Dy = delta_state(K, 0, 0).
ControlErrorBounds delta_optimal_control(const EstimatorConstants& c, const ReducedSolveAnalysis& a,
                                         double delta_y_in, double lambda);

/// Value function bound Delta_VT (optimal bundle).
double delta_value(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_in, double lambda);

/// Cost function bound Delta_JT at a fixed control (bundle (y^r(u), u,
/// p^r(y^r(u)))).
double delta_cost(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_in);

/// The certificate bundle for one optimal open-loop solve.
struct Certificate {
    double delta_y_final = 0.0;  // state bound at t_in + T (optimal pair)
    double delta_y_L2H = 0.0;
    double delta_p = 0.0;
    double delta_u = 0.0;
    double delta_VT = 0.0;
    double delta_JT = 0.0;  // cost bound at the (fixed) optimal control
    double C1y_T = 0.0, C2y_T = 0.0, Cp = 0.0, Cu = 0.0;
};

Certificate make_certificate(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_in,
                             double lambda);

}  // namespace podrhc
