#include "podrhc/certify.hpp"
#include "podrhc/ocp.hpp"

#include <doctest.h>

#include <random>

using namespace podrhc;

namespace {

Eigen::VectorXd randn(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> d(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

ActuatorLayout two_boxes() {
    ActuatorLayout layout;
    layout.boxes.push_back({Eigen::Vector2d(0.35, 0.35), 0.2});
    layout.boxes.push_back({Eigen::Vector2d(0.65, 0.65), 0.2});
    return layout;
}

std::shared_ptr<const Discretization> small_disc(int n_side) {
    return std::make_shared<const Discretization>(
        build_discretization(build_mesh(n_side), PhysicalParams::benchmark(), two_boxes()));
}

Eigen::MatrixXd full_basis(const Discretization& disc) {
    const int n = disc.n();
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) V.col(j) -= V.col(i).dot(disc.K_V * V.col(j)) * V.col(i);
        V.col(j) /= std::sqrt(V.col(j).dot(disc.K_V * V.col(j)));
    }
    return V;
}

}  // namespace

TEST_CASE("estimator constants: monotone in the horizon, flat when eta_H = 0") {
    EstimatorConstants c{0.1, 2.5, 0.02};
    double prev1 = 0.0, prevp = 0.0, prevu = 0.0;
    for (double T : {0.2, 0.5, 1.0, 2.0}) {
        CHECK(c.c1y(T) >= prev1);
        CHECK(c.cp(T) >= prevp);
        CHECK(c.cu(T) >= prevu);
        prev1 = c.c1y(T);
        prevp = c.cp(T);
        prevu = c.cu(T);
    }

    EstimatorConstants c0{0.1, 0.0, 0.02};
    CHECK(c0.c1y(0.4) == doctest::Approx(c0.c1y(0.8)));
    CHECK(c0.c1y(0.8) == doctest::Approx(2.0 / (0.1 * 0.1)));
}

TEST_CASE("full basis and exact data: every estimator vanishes") {
    auto disc = small_disc(5);
    const RieszSolver riesz(disc->K_V);
    auto rm = std::make_shared<const ReducedModel>(build_reduced_model(disc, full_basis(*disc), &riesz));
    const double tau = 0.05;
    RomModel rom(rm, tau);
    const TimeGrid grid{0.0, tau, 12};
    std::mt19937_64 rng(1);
    const Eigen::VectorXd y0 = randn(rng, disc->n());

    CostSpec spec;
    spec.lambda = 1e-2;
    spec.beta = 1e-3;
    SolveOptions opts;
    opts.abs_tol = 1e-13;
    opts.rel_tol = 1e-13;
    opts.max_iters = 3000;
    const OpenLoopSolution sol = solve_open_loop(rom, grid, project_initial(*rm, y0), spec, opts);

    const EstimatorConstants consts = EstimatorConstants::from(*disc);
    const ReducedSolveAnalysis ana = analyze_reduced_solve(*rm, sol.y_opt, sol.u_opt, sol.p_opt, &y0);
    CHECK(ana.proj_err <= 1e-10);
    CHECK(delta_state(consts, ana, -1, 0.0, 0.0) <= 1e-8);
    CHECK(delta_adjoint(consts, ana, 0.0) <= 1e-8);
    const ControlErrorBounds cb = delta_optimal_control(consts, ana, 0.0, spec.lambda);
    CHECK(cb.delta_u <= 1e-7);
    CHECK(cb.delta_y_H <= 1e-7);
    CHECK(delta_value(consts, ana, 0.0, spec.lambda) <= 1e-8);  // x = x^r forces Delta_VT = 0
    CHECK(delta_cost(consts, ana, 0.0) <= 1e-8);
}

TEST_CASE("certificate reproduces its defining formulas from the stored residuals") {
    auto disc = small_disc(6);
    const RieszSolver riesz(disc->K_V);
    std::mt19937_64 rng(2);
    const int n = disc->n();
    Eigen::MatrixXd basis(n, 3);
    for (int j = 0; j < 3; ++j) basis.col(j) = randn(rng, n);
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < j; ++i) basis.col(j) -= basis.col(i).dot(disc->K_V * basis.col(j)) * basis.col(i);
        basis.col(j) /= std::sqrt(basis.col(j).dot(disc->K_V * basis.col(j)));
    }
    auto rm = std::make_shared<const ReducedModel>(build_reduced_model(disc, basis, &riesz));
    const double tau = 0.05;
    RomModel rom(rm, tau);
    const TimeGrid grid{0.1, tau, 10};
    const Eigen::VectorXd y0 = randn(rng, n);

    CostSpec spec;
    spec.lambda = 1e-2;
    const OpenLoopSolution sol = solve_open_loop(rom, grid, project_initial(*rm, y0), spec);
    const EstimatorConstants consts = EstimatorConstants::from(*disc);
    const ReducedSolveAnalysis ana = analyze_reduced_solve(*rm, sol.y_opt, sol.u_opt, sol.p_opt, &y0);

    const double delta_y_in = 0.037;
    const Certificate cert = make_certificate(consts, ana, delta_y_in, spec.lambda);

    // audit: recompute each bound by evaluating its formula on the stored
    // residual aggregates
    const double T = grid.horizon();
    const double Sp_w = ana.adjoint_residual_sq_weighted(consts.eta_H);
    const double Sy_w = ana.state_residual_sq_weighted(consts.eta_H);
    const double dp0 = std::sqrt(0.5 * consts.cp(T) * Sp_w);
    const double dy0 = std::sqrt(0.5 * consts.c1y(T) * Sy_w + consts.c2y(T) * ana.proj_err * ana.proj_err);
    const double B2 = consts.B_norm * consts.B_norm;
    const double du = std::sqrt(B2 / (spec.lambda * spec.lambda) * dp0 * dp0 + dy0 * dy0 / spec.lambda +
                                consts.cu(T) / spec.lambda * delta_y_in * delta_y_in);
    CHECK(cert.delta_u == doctest::Approx(du).epsilon(1e-13));

    const double dyH = std::sqrt(B2 / (4.0 * spec.lambda) * dp0 * dp0 + 2.0 * dy0 * dy0 +
                                 2.0 * consts.cu(T) * delta_y_in * delta_y_in);
    CHECK(cert.delta_y_L2H == doctest::Approx(dyH).epsilon(1e-13));

    const double init = delta_y_in + ana.proj_err;
    const double dy_bar = std::sqrt(consts.c1y(T) * (B2 * du * du + Sy_w) + consts.c2y(T) * init * init);
    CHECK(cert.delta_y_final == doctest::Approx(dy_bar).epsilon(1e-13));

    const double dp_bar = std::sqrt(consts.cp(T) * (dyH * dyH + Sp_w));
    CHECK(cert.delta_p == doctest::Approx(dp_bar).epsilon(1e-13));

    const double Ry = std::sqrt(ana.state_residual_sq_plain());
    const double Rp = std::sqrt(ana.adjoint_residual_sq_plain());
    const double dvt = 0.5 * Rp * dy_bar +
                       0.5 * std::sqrt(Ry * Ry + ana.proj_err * ana.proj_err) * dp_bar +
                       0.5 * consts.B_norm * dp_bar * du + delta_y_in * ana.p_tin_H + 0.25 * delta_y_in * dp_bar;
    CHECK(cert.delta_VT == doctest::Approx(dvt).epsilon(1e-13));

    // scaling the adjoint data scales the adjoint-residual part consistently
    CHECK(cert.delta_VT >= 0.0);
    CHECK(cert.delta_JT >= 0.0);
}

TEST_CASE("delta_u decreases when lambda grows, all else fixed") {
    ReducedSolveAnalysis ana;
    ana.grid = TimeGrid{0.0, 0.1, 5};
    ana.rho_y = {0.1, 0.2, 0.1, 0.05, 0.02};
    ana.rho_p = {0.3, 0.1, 0.2, 0.1, 0.05};
    ana.proj_err = 0.01;
    ana.p_tin_H = 0.5;
    const EstimatorConstants consts{0.1, 2.5, 0.02};
    double prev = 1e300;
    for (double lam : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
        const double du = delta_optimal_control(consts, ana, 0.02, lam).delta_u;
        CHECK(du < prev);
        prev = du;
    }
}

TEST_CASE("intermediate-time state bound uses partial residual sums") {
    ReducedSolveAnalysis ana;
    ana.grid = TimeGrid{0.0, 0.1, 4};
    ana.rho_y = {1.0, 1.0, 1.0, 1.0};
    ana.rho_p = {0.0, 0.0, 0.0, 0.0};
    const EstimatorConstants consts{1.0, 0.0, 0.0};  // min(1,eta_V) = 1, no weights
    // Delta_y(j)^2 = (C1/2) * sum_{k<=j} tau = j * 0.1 with C1 = 2
    for (int j = 1; j <= 4; ++j)
        CHECK(delta_state(consts, ana, j, 0.0, 0.0) == doctest::Approx(std::sqrt(0.1 * j)).epsilon(1e-13));
    CHECK_THROWS_AS(delta_state(consts, ana, 9, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("direct and offline-online analyses agree away from the floor") {
    auto disc = small_disc(6);
    const RieszSolver riesz(disc->K_V);
    std::mt19937_64 rng(3);
    const int n = disc->n();
    Eigen::MatrixXd basis(n, 2);
    basis.col(0) = randn(rng, n);
    basis.col(1) = randn(rng, n);
    basis.col(0) /= std::sqrt(basis.col(0).dot(disc->K_V * basis.col(0)));
    basis.col(1) -= basis.col(0).dot(disc->K_V * basis.col(1)) * basis.col(0);
    basis.col(1) /= std::sqrt(basis.col(1).dot(disc->K_V * basis.col(1)));
    auto rm = std::make_shared<const ReducedModel>(build_reduced_model(disc, basis, &riesz));
    RomModel rom(rm, 0.05);

    const TimeGrid grid{0.0, 0.05, 8};
    ControlSignal u = ControlSignal::zero(grid, disc->m());
    for (auto& v : u.values) v = randn(rng, disc->m());
    const Eigen::VectorXd y0 = randn(rng, n);
    const Trajectory a = solve_state(rom, u, project_initial(*rm, y0));
    const Trajectory p = solve_adjoint(rom, a);

    const ReducedSolveAnalysis a1 = analyze_reduced_solve(*rm, a, u, p, &y0, ResidualPath::OfflineOnline);
    const ReducedSolveAnalysis a2 = analyze_reduced_solve(*rm, a, u, p, &y0, ResidualPath::Direct, &riesz);
    const EstimatorConstants consts = EstimatorConstants::from(*disc);
    CHECK(delta_state(consts, a1, -1, 0.0, 0.0) ==
          doctest::Approx(delta_state(consts, a2, -1, 0.0, 0.0)).epsilon(1e-8));
    CHECK(delta_adjoint(consts, a1, 0.0) == doctest::Approx(delta_adjoint(consts, a2, 0.0)).epsilon(1e-8));
    CHECK_THROWS_AS(analyze_reduced_solve(*rm, a, u, p, &y0, ResidualPath::Direct, nullptr),
                    std::invalid_argument);
}
