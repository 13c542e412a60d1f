#include "podrhc/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace podrhc {

Eigen::VectorXd prox_squared_l1(const Eigen::VectorXd& w, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("prox_squared_l1: sigma must be nonnegative");
    if (sigma == 0.0 || w.size() == 0) return w;

    // t* solves t = sigma * sum_i max(|w_i| - t, 0); with the k largest
    // magnitudes active, t = sigma S_k / (1 + sigma k) on [d_{k+1}, d_k).
    Eigen::VectorXd d = w.cwiseAbs();
    std::sort(d.data(), d.data() + d.size(), std::greater<double>());

    const int m = static_cast<int>(d.size());
    double t = 0.0;
    double S = 0.0;
    for (int k = 1; k <= m; ++k) {
        S += d(k - 1);
        const double tk = sigma * S / (1.0 + sigma * k);
        const double lower = (k < m) ? d(k) : 0.0;
        if (tk < d(k - 1) + 1e-300 && tk >= lower) {
            t = tk;
            break;
        }
    }
    Eigen::VectorXd v(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double mag = std::abs(w(i)) - t;
        v(i) = mag > 0.0 ? (w(i) > 0.0 ? mag : -mag) : 0.0;
    }
    return v;
}

namespace {

template <class Model>
double trajectory_cost_impl(const Model& model, const Trajectory& y, const ControlSignal& u, const CostSpec& spec,
                            int prefix_steps) {
    const int K = (prefix_steps < 0) ? y.grid.n_steps : prefix_steps;
    if (K > y.grid.n_steps || static_cast<std::size_t>(K) > u.values.size())
        throw std::invalid_argument("trajectory_cost: prefix exceeds the window");
    const double tau = y.grid.tau;
    double J = 0.0;
    for (int k = 1; k <= K; ++k) {
        const auto& yk = y.states[static_cast<std::size_t>(k)];
        const auto& uk = u.values[static_cast<std::size_t>(k - 1)];
        J += tau * (0.5 * model.mass_quadform(yk) + 0.5 * spec.lambda * uk.squaredNorm() + spec.g_value(uk));
    }
    return J;
}

template <class Model>
double evaluate_cost_impl(Model& model, const ControlSignal& u, const Eigen::VectorXd& y_in, const CostSpec& spec) {
    const Trajectory y = solve_state(model, u, y_in);
    return trajectory_cost_impl(model, y, u, spec, -1);
}

template <class Model>
std::vector<Eigen::VectorXd> gradient_from_adjoint(const Model& model, const ControlSignal& u, const Trajectory& p,
                                                   const CostSpec& spec) {
    const double tau = u.grid.tau;
    std::vector<Eigen::VectorXd> g(u.values.size());
    for (std::size_t k = 0; k < u.values.size(); ++k)
        g[k] = tau * (spec.lambda * u.values[k] + model.control_apply_transposed(p.states[k]));
    return g;
}

template <class Model>
std::vector<Eigen::VectorXd> smooth_gradient_impl(Model& model, const ControlSignal& u, const Eigen::VectorXd& y_in,
                                                  const CostSpec& spec, Trajectory* y_out, Trajectory* p_out) {
    Trajectory y = solve_state(model, u, y_in);
    Trajectory p = solve_adjoint(model, y);
    auto g = gradient_from_adjoint(model, u, p, spec);
    if (y_out != nullptr) *y_out = std::move(y);
    if (p_out != nullptr) *p_out = std::move(p);
    return g;
}

double stacked_dot(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
    return s;
}

constexpr double kStepMin = 1e-12;
constexpr double kStepMax = 1e12;
constexpr int kMemory = 5;
constexpr double kSufficientDecrease = 1e-4;

template <class Model>
ControlSignal prox_step(const Model&, const ControlSignal& u, const std::vector<Eigen::VectorXd>& g, double s,
                        const CostSpec& spec) {
    ControlSignal out;
    out.grid = u.grid;
    out.values.resize(u.values.size());
    const bool with_g = spec.g_kind == CostSpec::GKind::SquaredL1 && spec.beta > 0.0;
    const double sigma = s * u.grid.tau * spec.beta;
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        Eigen::VectorXd w = u.values[k] - s * g[k];
        out.values[k] = with_g ? prox_squared_l1(w, sigma) : std::move(w);
    }
    return out;
}

template <class Model>
OpenLoopSolution solve_open_loop_impl(Model& model, const TimeGrid& grid, const Eigen::VectorXd& y_in,
                                      const CostSpec& spec, const SolveOptions& opts) {
    if (spec.lambda <= 0.0) throw std::invalid_argument("solve_open_loop: lambda must be positive");
    OpenLoopSolution sol;

    ControlSignal u = ControlSignal::zero(grid, model.n_controls());
    if (opts.warm_start.has_value()) {
        const auto& ws = *opts.warm_start;
        if (ws.grid.n_steps != grid.n_steps || ws.dim() != model.n_controls())
            throw std::invalid_argument("solve_open_loop: warm start has the wrong shape");
        u = ws;
        u.grid = grid;
    }

    Trajectory y = solve_state(model, u, y_in);
    ++sol.n_cost_evals;
    double F = trajectory_cost_impl(model, y, u, spec, -1);
    Trajectory p = solve_adjoint(model, y);
    ++sol.n_gradient_evals;
    std::vector<Eigen::VectorXd> g = gradient_from_adjoint(model, u, p, spec);

    std::deque<double> f_hist{F};
    double s = 1.0 / (grid.tau * (spec.lambda + 1.0));
    double best_F = F;
    ControlSignal best_u = u;
    Trajectory best_y = y;
    Trajectory best_p = p;

    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        sol.iterations = iter;
        s = std::clamp(s, kStepMin, kStepMax);
        const double F_ref = *std::max_element(f_hist.begin(), f_hist.end());

        ControlSignal u_trial;
        Trajectory y_trial;
        double F_trial = 0.0;
        double step_sq = 0.0;
        while (true) {
            u_trial = prox_step(model, u, g, s, spec);
            y_trial = solve_state(model, u_trial, y_in);
            ++sol.n_cost_evals;
            F_trial = trajectory_cost_impl(model, y_trial, u_trial, spec, -1);
            step_sq = 0.0;
            for (std::size_t k = 0; k < u.values.size(); ++k)
                step_sq += (u_trial.values[k] - u.values[k]).squaredNorm();
            if (F_trial <= F_ref - kSufficientDecrease * step_sq / (2.0 * s) || s <= kStepMin) break;
            s *= 0.5;
        }

        // prox-gradient fixed-point residual at u with the accepted step
        residual = std::sqrt(step_sq);
        double u_norm = 0.0;
        for (const auto& v : u.values) u_norm += v.squaredNorm();
        u_norm = std::sqrt(u_norm);
        const bool done = residual <= std::max(opts.abs_tol, opts.rel_tol * std::max(1.0, u_norm));

        Trajectory p_trial = solve_adjoint(model, y_trial);
        ++sol.n_gradient_evals;
        std::vector<Eigen::VectorXd> g_trial = gradient_from_adjoint(model, u_trial, p_trial, spec);

        if (F_trial <= best_F) {
            best_F = F_trial;
            best_u = u_trial;
            best_y = y_trial;
            best_p = p_trial;
        }

        // alternating BB1 / BB2 step proposal
        std::vector<Eigen::VectorXd> du(u.values.size()), dg(u.values.size());
        for (std::size_t k = 0; k < u.values.size(); ++k) {
            du[k] = u_trial.values[k] - u.values[k];
            dg[k] = g_trial[k] - g[k];
        }
        const double uu = stacked_dot(du, du);
        const double ug = stacked_dot(du, dg);
        const double gg = stacked_dot(dg, dg);
        double s_next = s;
        if (iter % 2 == 1) {
            if (ug > 0.0) s_next = uu / ug;
        } else {
            if (gg > 0.0) s_next = ug / gg;
        }
        if (std::isfinite(s_next) && s_next > 0.0) s = s_next;

        u = std::move(u_trial);
        y = std::move(y_trial);
        p = std::move(p_trial);
        g = std::move(g_trial);
        F = F_trial;
        f_hist.push_back(F);
        if (static_cast<int>(f_hist.size()) > kMemory) f_hist.pop_front();

        if (done) {
            sol.converged = true;
            break;
        }
    }

    if (sol.converged || F <= best_F) {
        sol.u_opt = std::move(u);
        sol.y_opt = std::move(y);
        sol.p_opt = std::move(p);
        sol.cost = F;
    } else {
        sol.u_opt = std::move(best_u);
        sol.y_opt = std::move(best_y);
        sol.p_opt = std::move(best_p);
        sol.cost = best_F;
    }
    sol.first_order_residual = residual;
    return sol;
}

}  // namespace

double evaluate_cost(FomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in, const CostSpec& spec) {
    return evaluate_cost_impl(model, u, y_in, spec);
}
double evaluate_cost(RomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in, const CostSpec& spec) {
    return evaluate_cost_impl(model, u, y_in, spec);
}

double trajectory_cost(const FomModel& model, const Trajectory& y, const ControlSignal& u, const CostSpec& spec,
                       int prefix_steps) {
    return trajectory_cost_impl(model, y, u, spec, prefix_steps);
}
double trajectory_cost(const RomModel& model, const Trajectory& y, const ControlSignal& u, const CostSpec& spec,
                       int prefix_steps) {
    return trajectory_cost_impl(model, y, u, spec, prefix_steps);
}

std::vector<Eigen::VectorXd> smooth_gradient(FomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in,
                                             const CostSpec& spec, Trajectory* y_out, Trajectory* p_out) {
    return smooth_gradient_impl(model, u, y_in, spec, y_out, p_out);
}
std::vector<Eigen::VectorXd> smooth_gradient(RomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in,
                                             const CostSpec& spec, Trajectory* y_out, Trajectory* p_out) {
    return smooth_gradient_impl(model, u, y_in, spec, y_out, p_out);
}

OpenLoopSolution solve_open_loop(FomModel& model, const TimeGrid& grid, const Eigen::VectorXd& y_in,
                                 const CostSpec& spec, const SolveOptions& opts) {
    return solve_open_loop_impl(model, grid, y_in, spec, opts);
}
OpenLoopSolution solve_open_loop(RomModel& model, const TimeGrid& grid, const Eigen::VectorXd& y_in,
                                 const CostSpec& spec, const SolveOptions& opts) {
    return solve_open_loop_impl(model, grid, y_in, spec, opts);
}

}  // namespace podrhc
