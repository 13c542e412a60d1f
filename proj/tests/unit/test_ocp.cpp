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

}  // namespace

TEST_CASE("prox of the squared l1 penalty") {
    // sigma = 0 is the identity
    Eigen::VectorXd w(3);
    w << 0.4, -1.2, 0.0;
    CHECK((prox_squared_l1(w, 0.0) - w).cwiseAbs().maxCoeff() == 0.0);

    // scalar case: minimize (v-1)^2/2 + v^2/2  ->  v = 1/2
    Eigen::VectorXd w2(2);
    w2 << 1.0, 0.0;
    const Eigen::VectorXd v2 = prox_squared_l1(w2, 1.0);
    CHECK(v2(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(v2(1) == 0.0);

    // brute-force oracle over the threshold on random inputs
    std::mt19937_64 rng(2);
    for (int c = 0; c < 50; ++c) {
        const Eigen::VectorXd w3 = randn(rng, 5);
        for (double sigma : {0.1, 1.0, 10.0}) {
            const Eigen::VectorXd v = prox_squared_l1(w3, sigma);
            // t* solves t = sigma * sum max(|w|-t, 0); scan and bisect
            double lo = 0.0, hi = sigma * w3.lpNorm<1>() + 1.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                double s = 0.0;
                for (int i = 0; i < 5; ++i) s += std::max(std::abs(w3(i)) - mid, 0.0);
                (mid - sigma * s >= 0.0 ? hi : lo) = mid;
            }
            const double t = 0.5 * (lo + hi);
            for (int i = 0; i < 5; ++i) {
                const double mag = std::max(std::abs(w3(i)) - t, 0.0);
                const double expected = w3(i) >= 0 ? mag : -mag;
                CHECK(v(i) == doctest::Approx(expected).epsilon(1e-10));
            }
        }
    }

    // firm nonexpansiveness
    for (int c = 0; c < 50; ++c) {
        const Eigen::VectorXd a = randn(rng, 6), b = randn(rng, 6);
        CHECK((prox_squared_l1(a, 2.0) - prox_squared_l1(b, 2.0)).norm() <= (a - b).norm() + 1e-12);
    }

    CHECK_THROWS_AS(prox_squared_l1(w, -1.0), std::invalid_argument);
}

TEST_CASE("cost of the zero problem is zero") {
    auto disc = small_disc(5);
    FomModel model(disc, 0.05);
    const TimeGrid grid{0.0, 0.05, 10};
    CostSpec spec;
    const double J = evaluate_cost(model, ControlSignal::zero(grid, 2), Eigen::VectorXd::Zero(disc->n()), spec);
    CHECK(J == 0.0);
}

TEST_CASE("cost on a one-dof problem matches the hand-computed value") {
    // scalar dynamics (m + tau a) y_{k+1} = m y_k + tau b u_{k+1}; two steps
    const Mesh mesh = build_mesh(3);
    auto disc = std::make_shared<const Discretization>(
        build_discretization(mesh, PhysicalParams::diffusion(0.25), ActuatorLayout::full_domain()));
    const double tau = 0.125;
    FomModel model(disc, tau);

    const double m = Eigen::MatrixXd(disc->M)(0, 0);
    const double a = 0.25 * Eigen::MatrixXd(disc->K_V)(0, 0);
    const double b = disc->B(0, 0);

    const TimeGrid grid{0.0, tau, 2};
    ControlSignal u = ControlSignal::zero(grid, 1);
    u.values[0](0) = 2.0;
    u.values[1](0) = -1.0;
    Eigen::VectorXd y0(1);
    y0 << 1.0;

    const double y1 = (m * 1.0 + tau * b * 2.0) / (m + tau * a);
    const double y2 = (m * y1 + tau * b * -1.0) / (m + tau * a);

    CostSpec spec;
    spec.lambda = 0.3;
    spec.beta = 0.7;
    const double expected = tau * (0.5 * m * y1 * y1 + 0.5 * 0.3 * 4.0 + 0.5 * 0.7 * 4.0) +
                            tau * (0.5 * m * y2 * y2 + 0.5 * 0.3 * 1.0 + 0.5 * 0.7 * 1.0);
    CHECK(evaluate_cost(model, u, y0, spec) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gradient edge cases") {
    auto disc = small_disc(5);
    FomModel model(disc, 0.05);
    const TimeGrid grid{0.0, 0.05, 8};
    CostSpec spec;
    spec.lambda = 1e-2;

    // zero problem -> zero gradient
    auto g = smooth_gradient(model, ControlSignal::zero(grid, 2), Eigen::VectorXd::Zero(disc->n()), spec);
    for (const auto& v : g) CHECK(v.cwiseAbs().maxCoeff() == 0.0);

    // lambda = 0 and B = 0 -> zero gradient regardless of the state
    Discretization zeroed = *disc;
    zeroed.B.setZero();
    auto disc0 = std::make_shared<const Discretization>(std::move(zeroed));
    FomModel model0(disc0, 0.05);
    CostSpec spec0;
    spec0.lambda = 0.0;
    std::mt19937_64 rng(3);
    auto g0 = smooth_gradient(model0, ControlSignal::zero(grid, 2), randn(rng, disc->n()), spec0);
    for (const auto& v : g0) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("open-loop solve: zero initial state gives the zero control") {
    auto disc = small_disc(5);
    FomModel model(disc, 0.05);
    const TimeGrid grid{0.0, 0.05, 12};
    CostSpec spec;
    const OpenLoopSolution sol = solve_open_loop(model, grid, Eigen::VectorXd::Zero(disc->n()), spec);
    CHECK(sol.converged);
    CHECK(sol.cost == 0.0);
    for (const auto& v : sol.u_opt.values) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("beta = 0 matches a dense KKT solve") {
    auto disc = small_disc(4);  // 2x2 interior dofs
    const double tau = 0.1;
    const int K = 6;
    const int n = disc->n();
    const int m = disc->m();
    FomModel model(disc, tau);
    const TimeGrid grid{0.0, tau, K};

    std::mt19937_64 rng(5);
    const Eigen::VectorXd y0 = randn(rng, n);

    CostSpec spec;
    spec.lambda = 1e-2;
    spec.beta = 0.0;
    spec.g_kind = CostSpec::GKind::None;

    // sensitivity of stacked states w.r.t. stacked controls + free evolution
    Eigen::MatrixXd S(n * K, m * K);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < m; ++i) {
            ControlSignal u = ControlSignal::zero(grid, m);
            u.values[static_cast<std::size_t>(k)](i) = 1.0;
            const Trajectory y = solve_state(model, u, Eigen::VectorXd::Zero(n));
            for (int j = 1; j <= K; ++j)
                S.block((j - 1) * n, k * m + i, n, 1) = y.states[static_cast<std::size_t>(j)];
        }
    const Trajectory yfree = solve_state(model, ControlSignal::zero(grid, m), y0);
    Eigen::VectorXd d(n * K);
    for (int j = 1; j <= K; ++j) d.segment((j - 1) * n, n) = yfree.states[static_cast<std::size_t>(j)];

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n * K, n * K);
    for (int j = 0; j < K; ++j) W.block(j * n, j * n, n, n) = tau * Eigen::MatrixXd(disc->M);
    const Eigen::MatrixXd H = S.transpose() * W * S + tau * spec.lambda * Eigen::MatrixXd::Identity(m * K, m * K);
    const Eigen::VectorXd rhs = -S.transpose() * (W * d);
    const Eigen::VectorXd u_star = H.ldlt().solve(rhs);

    SolveOptions opts;
    opts.abs_tol = 1e-13;
    opts.rel_tol = 1e-13;
    opts.max_iters = 5000;
    const OpenLoopSolution sol = solve_open_loop(model, grid, y0, spec, opts);
    CHECK(sol.converged);
    double worst = 0.0;
    for (int k = 0; k < K; ++k)
        worst = std::max(worst,
                         (sol.u_opt.values[static_cast<std::size_t>(k)] - u_star.segment(k * m, m)).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-9);
}

TEST_CASE("converged solutions satisfy the discrete variational inequality") {
    auto disc = small_disc(5);
    const double tau = 0.05;
    FomModel model(disc, tau);
    const TimeGrid grid{0.0, tau, 10};
    std::mt19937_64 rng(7);
    const Eigen::VectorXd y0 = randn(rng, disc->n());

    CostSpec spec;
    spec.lambda = 1e-2;
    spec.beta = 1e-3;
    SolveOptions opts;
    opts.abs_tol = 1e-12;
    opts.rel_tol = 1e-12;
    opts.max_iters = 3000;
    const OpenLoopSolution sol = solve_open_loop(model, grid, y0, spec, opts);
    CHECK(sol.converged);

    const auto g = smooth_gradient(model, sol.u_opt, y0, spec);
    auto gT = [&](const ControlSignal& u) {
        double s = 0.0;
        for (const auto& v : u.values) s += tau * spec.g_value(v);
        return s;
    };
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        ControlSignal u = sol.u_opt;
        for (auto& v : u.values) v += randn(rng, disc->m());
        double inner = 0.0;
        for (std::size_t k = 0; k < u.values.size(); ++k)
            inner += g[k].dot(u.values[k] - sol.u_opt.values[k]);
        worst = std::min(worst, inner + gT(u) - gT(sol.u_opt));
    }
    CHECK(worst >= -1e-9);
}

TEST_CASE("warm start does not change the converged solution") {
    auto disc = small_disc(5);
    FomModel model(disc, 0.05);
    const TimeGrid grid{0.0, 0.05, 12};
    std::mt19937_64 rng(11);
    const Eigen::VectorXd y0 = randn(rng, disc->n());
    CostSpec spec;
    spec.lambda = 1e-2;
    spec.beta = 1e-3;
    SolveOptions opts;
    opts.abs_tol = 1e-12;
    opts.rel_tol = 1e-12;
    opts.max_iters = 3000;

    const OpenLoopSolution cold = solve_open_loop(model, grid, y0, spec, opts);
    SolveOptions warm = opts;
    ControlSignal ws = cold.u_opt;
    for (auto& v : ws.values) v += 0.3 * randn(rng, disc->m());
    warm.warm_start = ws;
    const OpenLoopSolution hot = solve_open_loop(model, grid, y0, spec, warm);
    CHECK(control_l2_distance(cold.u_opt, hot.u_opt) <= 1e-10);
}

TEST_CASE("descent is monotone relative to the nonmonotone reference") {
    auto disc = small_disc(6);
    FomModel model(disc, 0.05);
    const TimeGrid grid{0.0, 0.05, 16};
    std::mt19937_64 rng(13);
    const Eigen::VectorXd y0 = randn(rng, disc->n());
    CostSpec spec;
    spec.lambda = 1e-3;
    spec.beta = 1e-4;
    SolveOptions opts;
    opts.abs_tol = 1e-11;
    opts.rel_tol = 1e-11;
    const OpenLoopSolution sol = solve_open_loop(model, grid, y0, spec, opts);
    CHECK(sol.converged);
    // the safeguarded method must not end above its starting cost
    const double J0 = evaluate_cost(model, ControlSignal::zero(grid, disc->m()), y0, spec);
    CHECK(sol.cost <= J0 + 1e-12);
}

TEST_CASE("non-convergence is flagged and the best iterate returned") {
    auto disc = small_disc(5);
    FomModel model(disc, 0.05);
    const TimeGrid grid{0.0, 0.05, 10};
    std::mt19937_64 rng(17);
    const Eigen::VectorXd y0 = randn(rng, disc->n());
    CostSpec spec;
    SolveOptions opts;
    opts.max_iters = 2;
    opts.abs_tol = 0.0;
    opts.rel_tol = 0.0;
    const OpenLoopSolution sol = solve_open_loop(model, grid, y0, spec, opts);
    CHECK(!sol.converged);
    CHECK(sol.iterations == 2);
    CHECK(std::isfinite(sol.cost));
}
