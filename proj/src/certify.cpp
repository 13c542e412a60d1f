#include "podrhc/certify.hpp"

#include <cmath>
#include <stdexcept>

namespace podrhc {

double ReducedSolveAnalysis::state_residual_sq_weighted(double eta_H, int steps) const {
    const int K = (steps < 0) ? grid.n_steps : steps;
    double s = 0.0;
    for (int k = 1; k <= K; ++k) {
        const double w = std::exp(-eta_H * (k * grid.tau));
        const double r = rho_y[static_cast<std::size_t>(k - 1)];
        s += grid.tau * w * w * r * r;
    }
    return s;
}

double ReducedSolveAnalysis::adjoint_residual_sq_weighted(double eta_H) const {
    const int K = grid.n_steps;
    const double T = grid.horizon();
    double s = 0.0;
    for (int j = 0; j < K; ++j) {
        const double w = std::exp(eta_H * ((j + 1) * grid.tau - T));
        const double r = rho_p[static_cast<std::size_t>(j)];
        s += grid.tau * w * w * r * r;
    }
    return s;
}

double ReducedSolveAnalysis::state_residual_sq_plain() const {
    double s = 0.0;
    for (double r : rho_y) s += grid.tau * r * r;
    return s;
}

double ReducedSolveAnalysis::adjoint_residual_sq_plain() const {
    double s = 0.0;
    for (double r : rho_p) s += grid.tau * r * r;
    return s;
}

ReducedSolveAnalysis analyze_reduced_solve(const ReducedModel& rm, const Trajectory& y_rom,
                                           const ControlSignal& u, const Trajectory& p_rom,
                                           const Eigen::VectorXd* y_in_fom, ResidualPath path,
                                           const RieszSolver* riesz) {
    ReducedSolveAnalysis a;
    a.grid = y_rom.grid;
    if (path == ResidualPath::OfflineOnline) {
        a.rho_y = state_residual_norms(rm, y_rom, u);
        a.rho_p = adjoint_residual_norms(rm, p_rom, y_rom);
    } else {
        if (riesz == nullptr) throw std::invalid_argument("analyze_reduced_solve: Direct path needs a RieszSolver");
        a.rho_y = state_residual_norms_direct(rm, *riesz, y_rom, u);
        a.rho_p = adjoint_residual_norms_direct(rm, *riesz, p_rom, y_rom);
    }
    if (y_in_fom != nullptr) a.proj_err = projection_error_H(rm, *y_in_fom, y_rom.states.front());
    a.p_tin_H = rm.h_norm(p_rom.states.front());
    return a;
}

double delta_state(const EstimatorConstants& c, const ReducedSolveAnalysis& a, int step, double delta_u,
                   double delta_y_in) {
    const int j = (step < 0) ? a.grid.n_steps : step;
    if (j < 0 || j > a.grid.n_steps) throw std::invalid_argument("delta_state: step outside the window");
    const double dt = j * a.grid.tau;
    double c1 = c.c1y(dt);
    if (delta_u == 0.0) c1 *= 0.5;
    // B is time-constant and the weight e^{-eta_H .} is at most one.
    const double control_term = c.B_norm * c.B_norm * delta_u * delta_u;
    const double init = delta_y_in + a.proj_err;
    const double sq = c1 * (control_term + a.state_residual_sq_weighted(c.eta_H, j)) + c.c2y(dt) * init * init;
    return std::sqrt(std::max(0.0, sq));
}

double delta_adjoint(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_data) {
    double cp = c.cp(a.T());
    if (delta_y_data == 0.0) cp *= 0.5;
    const double sq = cp * (delta_y_data * delta_y_data + a.adjoint_residual_sq_weighted(c.eta_H));
    return std::sqrt(std::max(0.0, sq));
}

ControlErrorBounds delta_optimal_control(const EstimatorConstants& c, const ReducedSolveAnalysis& a,
                                         double delta_y_in, double lambda) {
    const double dp = delta_adjoint(c, a, 0.0);
    const double dy = delta_state(c, a, -1, 0.0, 0.0);
    const double cu = c.cu(a.T());
    const double B2 = c.B_norm * c.B_norm;
    ControlErrorBounds out;
    out.delta_u = std::sqrt(std::max(
        0.0, B2 / (lambda * lambda) * dp * dp + dy * dy / lambda + cu / lambda * delta_y_in * delta_y_in));
    out.delta_y_H = std::sqrt(
        std::max(0.0, B2 / (4.0 * lambda) * dp * dp + 2.0 * dy * dy + 2.0 * cu * delta_y_in * delta_y_in));
    return out;
}

double delta_value(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_in, double lambda) {
    const ControlErrorBounds cb = delta_optimal_control(c, a, delta_y_in, lambda);
    const double dy_bar = delta_state(c, a, -1, cb.delta_u, delta_y_in);
    const double dp_bar = delta_adjoint(c, a, cb.delta_y_H);
    const double Ry = std::sqrt(a.state_residual_sq_plain());
    const double Rp = std::sqrt(a.adjoint_residual_sq_plain());
    return 0.5 * Rp * dy_bar + 0.5 * std::sqrt(Ry * Ry + a.proj_err * a.proj_err) * dp_bar +
           0.5 * c.B_norm * dp_bar * cb.delta_u + delta_y_in * a.p_tin_H + 0.25 * delta_y_in * dp_bar;
}

double delta_cost(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_in) {
    const double dy_u = delta_state(c, a, -1, 0.0, delta_y_in);
    const double dp_u = delta_adjoint(c, a, dy_u);
    const double Ry = std::sqrt(a.state_residual_sq_plain());
    const double Rp = std::sqrt(a.adjoint_residual_sq_plain());
    return 0.5 * Rp * dy_u + 0.5 * std::sqrt(Ry * Ry + a.proj_err * a.proj_err) * dp_u +
           delta_y_in * a.p_tin_H + 0.25 * delta_y_in * dp_u;
}

Certificate make_certificate(const EstimatorConstants& c, const ReducedSolveAnalysis& a, double delta_y_in,
                             double lambda) {
    Certificate cert;
    const ControlErrorBounds cb = delta_optimal_control(c, a, delta_y_in, lambda);
    cert.delta_u = cb.delta_u;
    cert.delta_y_L2H = cb.delta_y_H;
    cert.delta_y_final = delta_state(c, a, -1, cb.delta_u, delta_y_in);
    cert.delta_p = delta_adjoint(c, a, cb.delta_y_H);
    cert.delta_VT = delta_value(c, a, delta_y_in, lambda);
    cert.delta_JT = delta_cost(c, a, delta_y_in);
    cert.C1y_T = c.c1y(a.T());
    cert.C2y_T = c.c2y(a.T());
    cert.Cp = c.cp(a.T());
    cert.Cu = c.cu(a.T());
    return cert;
}

}  // namespace podrhc
