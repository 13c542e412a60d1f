#pragma once

#include "podrhc/dynamics.hpp"
#include "podrhc/types.hpp"

#include <optional>

namespace podrhc {

/// Running cost  l(y, u) = 1/2 ||y||_H^2 + lambda/2 |u|_2^2 + g(u)
/// with the squared-l1 sparsity term g(u) = beta/2 |u|_1^2 (beta = 0
/// switches g off; g_kind reserves room for other convex choices).
struct CostSpec {
    enum class GKind { SquaredL1, None };
    double lambda = 1e-3;
    double beta = 1e-4;
    GKind g_kind = GKind::SquaredL1;

    double g_value(const Eigen::VectorXd& u) const {
        if (g_kind == GKind::None || beta == 0.0) return 0.0;
        const double l1 = u.lpNorm<1>();
        return 0.5 * beta * l1 * l1;
    }
};

struct SolveOptions {
    int max_iters = 1000;
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    std::optional<ControlSignal> warm_start;
};

struct OpenLoopSolution {
    ControlSignal u_opt;
    Trajectory y_opt;
    Trajectory p_opt;
    double cost = 0.0;
    int n_gradient_evals = 0;
    int n_cost_evals = 0;
    int iterations = 0;
    bool converged = false;
    double first_order_residual = 0.0;
};

/// prox of v -> (sigma/2) |v|_1^2: soft thresholding at the unique root of
/// t = sigma * sum_i max(|w_i| - t, 0), found exactly by sorting |w|.
Eigen::VectorXd prox_squared_l1(const Eigen::VectorXd& w, double sigma);

/// Discrete cost, right-endpoint rule:
///   sum_{k=1..K} tau [ 1/2 y_k' M y_k + lambda/2 |u_k|^2 + g(u_k) ].
double evaluate_cost(FomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in, const CostSpec& spec);
double evaluate_cost(RomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in, const CostSpec& spec);

/// Cost of an already-computed trajectory (optionally only its first
/// `prefix_steps` steps, for the sampling-interval cost J_delta).
double trajectory_cost(const FomModel& model, const Trajectory& y, const ControlSignal& u, const CostSpec& spec,
                       int prefix_steps = -1);
double trajectory_cost(const RomModel& model, const Trajectory& y, const ControlSignal& u, const CostSpec& spec,
                       int prefix_steps = -1);

/// Exact gradient of the smooth cost part with respect to the stacked
/// control dofs: per step  tau (lambda u_k + B' p_{k-1:interval}).
/// Also returns the state/adjoint pair when requested.
std::vector<Eigen::VectorXd> smooth_gradient(FomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in,
                                             const CostSpec& spec, Trajectory* y_out = nullptr,
                                             Trajectory* p_out = nullptr);
std::vector<Eigen::VectorXd> smooth_gradient(RomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in,
                                             const CostSpec& spec, Trajectory* y_out = nullptr,
                                             Trajectory* p_out = nullptr);

/// Barzilai-Borwein proximal gradient for the finite-horizon problem on the
/// window `grid` (alternating BB1/BB2 steps, non-monotone safeguard with
/// memory 5, steps clipped to [1e-12, 1e12]). Stops on the prox-gradient
/// fixed-point residual ||u - prox(u - s grad)|| <= max(abs_tol,
/// rel_tol * max(1, ||u||)). For the ROM overload y_in is reduced coords.
OpenLoopSolution solve_open_loop(FomModel& model, const TimeGrid& grid, const Eigen::VectorXd& y_in,
                                 const CostSpec& spec, const SolveOptions& opts = {});
OpenLoopSolution solve_open_loop(RomModel& model, const TimeGrid& grid, const Eigen::VectorXd& y_in,
                                 const CostSpec& spec, const SolveOptions& opts = {});

}  // namespace podrhc
