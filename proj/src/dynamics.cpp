#include "podrhc/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace podrhc {

TimeGrid make_window(double t_in, double tau, double T) {
    if (tau <= 0.0 || T <= 0.0) throw std::invalid_argument("make_window: tau and T must be positive");
    const double steps = T / tau;
    const int n = static_cast<int>(std::llround(steps));
    if (n < 1 || std::abs(steps - n) > 1e-8)
        throw std::invalid_argument("make_window: horizon T is not grid-aligned");
    TimeGrid grid{t_in, tau, n};
    grid.global_index(0);  // validates alignment of t_in
    return grid;
}

namespace {

template <class Model>
Trajectory solve_state_impl(Model& model, const ControlSignal& u, const Eigen::VectorXd& y_in, SpaceTag tag) {
    if (std::abs(u.grid.tau - model.tau()) > 1e-12 * std::max(1.0, model.tau()))
        throw std::invalid_argument("solve_state: control grid step does not match the model");
    if (y_in.size() != model.dim())
        throw std::invalid_argument("solve_state: initial value dimension mismatch");

    const int K = u.grid.n_steps;
    const std::int64_t g0 = u.grid.global_index(0);

    Trajectory traj;
    traj.grid = u.grid;
    traj.space = tag;
    traj.states.resize(static_cast<std::size_t>(K) + 1);
    traj.states[0] = y_in;
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd rhs = model.mass_apply(traj.states[static_cast<std::size_t>(k)]);
        rhs += model.tau() * model.control_apply(u.values[static_cast<std::size_t>(k)]);
        traj.states[static_cast<std::size_t>(k) + 1] = model.step_solve(g0 + k + 1, rhs);
    }
    return traj;
}

template <class Model>
Trajectory solve_adjoint_impl(Model& model, const Trajectory& y_data, SpaceTag tag) {
    if (y_data.states.empty()) throw std::invalid_argument("solve_adjoint: empty data trajectory");
    const int K = y_data.grid.n_steps;
    const std::int64_t g0 = y_data.grid.global_index(0);

    Trajectory p;
    p.grid = y_data.grid;
    p.space = tag;
    p.states.resize(static_cast<std::size_t>(K) + 1);
    p.states[static_cast<std::size_t>(K)] = Eigen::VectorXd::Zero(model.dim());
    for (int j = K - 1; j >= 0; --j) {
        Eigen::VectorXd rhs = model.mass_apply(p.states[static_cast<std::size_t>(j) + 1]);
        rhs += model.tau() * model.mass_apply(y_data.states[static_cast<std::size_t>(j) + 1]);
        p.states[static_cast<std::size_t>(j)] = model.step_solve_transposed(g0 + j + 1, rhs);
    }
    return p;
}

}  // namespace

Trajectory solve_state(FomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in) {
    return solve_state_impl(model, u, y_in, SpaceTag::FOM);
}

Trajectory solve_state(RomModel& model, const ControlSignal& u, const Eigen::VectorXd& y_in) {
    return solve_state_impl(model, u, y_in, SpaceTag::ROM);
}

Trajectory solve_adjoint(FomModel& model, const Trajectory& y_data) {
    return solve_adjoint_impl(model, y_data, SpaceTag::FOM);
}

Trajectory solve_adjoint(RomModel& model, const Trajectory& y_data) {
    return solve_adjoint_impl(model, y_data, SpaceTag::ROM);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const Discretization& disc,
                          const ReducedModel* rm, bool with_coefficients) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    out << "# podrhc csv v1 trajectory\n";
    out << "t,norm_H,norm_V";
    const int n = disc.n();
    if (with_coefficients)
        for (int i = 0; i < n; ++i) out << ",y" << i;
    out << "\n";
    char buf[64];
    for (int k = 0; k <= traj.grid.n_steps; ++k) {
        Eigen::VectorXd y = traj.states[static_cast<std::size_t>(k)];
        if (traj.space == SpaceTag::ROM) {
            if (rm == nullptr) throw std::invalid_argument("write_trajectory_csv: ROM trajectory needs the model");
            y = rm->lift(y);
        }
        std::snprintf(buf, sizeof(buf), "%.17g", traj.grid.time_at(k));
        out << buf;
        std::snprintf(buf, sizeof(buf), ",%.17g", std::sqrt(std::max(0.0, y.dot(disc.M * y))));
        out << buf;
        std::snprintf(buf, sizeof(buf), ",%.17g", std::sqrt(std::max(0.0, y.dot(disc.K_V * y))));
        out << buf;
        if (with_coefficients) {
            for (int i = 0; i < n; ++i) {
                std::snprintf(buf, sizeof(buf), ",%.17g", y(i));
                out << buf;
            }
        }
        out << "\n";
    }
}

}  // namespace podrhc
