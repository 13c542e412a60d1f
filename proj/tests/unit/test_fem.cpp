#include "podrhc/fem.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <fstream>
#include <random>

using namespace podrhc;

namespace {

Eigen::VectorXd randn(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> d(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

}  // namespace

TEST_CASE("build_mesh node counts and areas") {
    CHECK_THROWS_AS(build_mesh(2), std::invalid_argument);

    const Mesh m61 = build_mesh(61);
    CHECK(m61.n_nodes() == 3721);
    CHECK(m61.n_interior() == 59 * 59);

    const Mesh m3 = build_mesh(3);
    CHECK(m3.n_nodes() == 9);
    CHECK(m3.n_interior() == 1);

    const Mesh m5 = build_mesh(5);
    double total = 0.0;
    for (int t = 0; t < static_cast<int>(m5.triangles.size()); ++t) {
        const double a = triangle_area(m5, t);
        CHECK(a > 0.0);
        total += a;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mass and stiffness symmetry and partition of unity") {
    const Mesh mesh = build_mesh(7);
    const SpMat M = mass_matrix(mesh, true);
    const SpMat K = stiffness_matrix(mesh, true);

    const Eigen::MatrixXd Md(M), Kd(K);
    CHECK((Md - Md.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((Kd - Kd.transpose()).cwiseAbs().maxCoeff() <= 1e-14);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(Md), esK(Kd);
    CHECK(esM.eigenvalues().minCoeff() > 0.0);
    CHECK(esK.eigenvalues().minCoeff() > 0.0);

    // full mass matrix: total mass |Omega| = 1, row sum = lumped nodal area
    const SpMat Mfull = mass_matrix(mesh, false);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.n_nodes());
    CHECK(std::abs(ones.dot(Mfull * ones) - 1.0) <= 1e-12);
    const Eigen::VectorXd rowsum = Mfull * ones;
    const double h = mesh.h();
    const int mid = mesh.interior_dofs[static_cast<std::size_t>(mesh.n_interior() / 2)];
    CHECK(rowsum(mid) == doctest::Approx(h * h).epsilon(1e-12));
}

TEST_CASE("pure diffusion reduces to nu * K_V") {
    const Mesh mesh = build_mesh(6);
    const double nu = 0.37;
    const Discretization disc = assemble(mesh, PhysicalParams::diffusion(nu));
    const Eigen::MatrixXd A1(disc.A_q[0]);
    const Eigen::MatrixXd K(disc.K_V);
    CHECK((A1 - nu * K).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(Eigen::MatrixXd(disc.A_q[1]).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(disc.eta_V == doctest::Approx(nu));
    CHECK(disc.eta_H == 0.0);
}

TEST_CASE("coercivity certificate for the benchmark data") {
    const Mesh mesh = build_mesh(9);
    const Discretization disc = assemble(mesh, PhysicalParams::benchmark());
    CHECK(disc.eta_V == doctest::Approx(0.1));
    // -essinf(a - div b / 2): a in [-2.45, -2], div b in [-0.01, 0.19]
    CHECK(disc.eta_H == doctest::Approx(2.545).epsilon(1e-3));  // ess-inf sampled at quadrature points
    const Discretization strong = assemble(mesh, PhysicalParams::benchmark(0.1, -0.8));
    CHECK(strong.eta_H == doctest::Approx(2.895).epsilon(1e-3));

    std::mt19937_64 rng(7);
    double worst = 1e300;
    for (double t : {0.0, M_PI / 2.0, 3.0}) {
        const SpMat A = disc.operator_at(t);
        for (int c = 0; c < 100; ++c) {
            const Eigen::VectorXd v = randn(rng, disc.n());
            worst = std::min(worst, v.dot(A * v) + disc.eta_H * v.dot(disc.M * v) -
                                        disc.eta_V * v.dot(disc.K_V * v));
        }
    }
    CHECK(worst >= -1e-10);
}

TEST_CASE("coercivity over 1000 random samples in time") {
    const Mesh mesh = build_mesh(6);
    const Discretization disc = assemble(mesh, PhysicalParams::benchmark());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ut(0.0, 12.0);
    double worst = 1e300;
    for (int c = 0; c < 1000; ++c) {
        const SpMat A = disc.operator_at(ut(rng));
        const Eigen::VectorXd v = randn(rng, disc.n());
        worst = std::min(worst, v.dot(A * v) - disc.eta_V * v.dot(disc.K_V * v) +
                                    disc.eta_H * v.dot(disc.M * v));
    }
    CHECK(worst >= -1e-10);
}

TEST_CASE("free dynamics are unstable: negative generalized eigenvalue") {
    // 9x9-node mesh, dense solve of A(t) v = lambda M v
    const Mesh mesh = build_mesh(9);
    const Discretization disc = assemble(mesh, PhysicalParams::benchmark(0.1, -0.8));
    const Eigen::MatrixXd M(disc.M);

    auto min_real_eig = [&](double t) {
        const Eigen::MatrixXd A(disc.operator_at(t));
        Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, M);
        double mn = 1e300;
        for (int i = 0; i < ges.eigenvalues().size(); ++i)
            mn = std::min(mn, ges.eigenvalues()(i).real());
        return mn;
    };
    CHECK(min_real_eig(M_PI / 2.0) < -0.5);  // strongest reaction: clearly unstable
}

TEST_CASE("actuator layout geometry and loads") {
    const ActuatorLayout layout = ActuatorLayout::lshape13();
    CHECK(layout.count() == 13);
    CHECK_NOTHROW(layout.validate());

    // R1 at the bottom of the column, R13 at the left end of the row
    CHECK(layout.boxes[0].center.x() == doctest::Approx(0.74));
    CHECK(layout.boxes[0].center.y() == doctest::Approx(0.15));
    CHECK(layout.boxes[12].center.x() == doctest::Approx(0.14));
    CHECK(layout.boxes[12].center.y() == doctest::Approx(0.75));

    const Mesh mesh = build_mesh(31);
    const Eigen::MatrixXd B = assemble_actuators(mesh, layout);
    for (int i = 0; i < 13; ++i)
        CHECK(B.col(i).sum() == doctest::Approx(0.0106).epsilon(1e-12));

    ActuatorLayout outside;
    outside.boxes.push_back({Eigen::Vector2d(0.99, 0.5), 0.2});
    CHECK_THROWS_AS(outside.validate(), std::invalid_argument);

    ActuatorLayout overlapping;
    overlapping.boxes.push_back({Eigen::Vector2d(0.5, 0.5), 0.3});
    overlapping.boxes.push_back({Eigen::Vector2d(0.55, 0.5), 0.3});
    CHECK_THROWS_AS(overlapping.validate(), std::invalid_argument);
}

TEST_CASE("full-domain actuator reproduces the constant load vector") {
    const Mesh mesh = build_mesh(8);
    const Eigen::MatrixXd B = assemble_actuators(mesh, ActuatorLayout::full_domain());
    const Eigen::VectorXd f = load_vector_constant_one(mesh);
    CHECK((B.col(0) - f).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("random boxes: column sums equal box areas") {
    // boxes kept away from the boundary, so the missing boundary hats do not
    // contribute and the interior column sum equals |R| by partition of unity
    const Mesh mesh = build_mesh(12);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uc(0.3, 0.7), us(0.05, 0.3);
    for (int c = 0; c < 20; ++c) {
        ActuatorLayout layout;
        const double side = us(rng);
        layout.boxes.push_back({Eigen::Vector2d(uc(rng), uc(rng)), side});
        const Eigen::MatrixXd B = assemble_actuators(mesh, layout, ActuatorQuadrature::ExactClip);
        CHECK(B.col(0).sum() == doctest::Approx(side * side).epsilon(1e-10));

        // subcell Gauss fallback agrees to its quadrature accuracy
        const Eigen::MatrixXd B2 = assemble_actuators(mesh, layout, ActuatorQuadrature::Subcell4x4);
        CHECK((B - B2).cwiseAbs().maxCoeff() <= 2e-3);
    }
}

TEST_CASE("dual norm and the input-map operator norm") {
    const Mesh mesh = build_mesh(5);
    const SpMat K = stiffness_matrix(mesh, true);
    const RieszSolver riesz(K);
    std::mt19937_64 rng(3);

    const Eigen::VectorXd v = randn(rng, mesh.n_interior());
    const double vn = std::sqrt(v.dot(K * v));
    CHECK(riesz.dual_norm(K * v) == doctest::Approx(vn).epsilon(1e-12));
    CHECK(riesz.dual_norm(Eigen::VectorXd::Zero(mesh.n_interior())) == 0.0);

    const Eigen::MatrixXd Kd(K);
    for (int c = 0; c < 10; ++c) {
        const Eigen::VectorXd r = randn(rng, mesh.n_interior());
        const double oracle = std::sqrt(r.dot(Kd.fullPivLu().solve(r)));
        CHECK(riesz.dual_norm(r) == doctest::Approx(oracle).epsilon(1e-12));
    }

    Eigen::MatrixXd B(mesh.n_interior(), 1);
    B.col(0) = K * v;
    CHECK(operator_norm_B(B, riesz) == doctest::Approx(vn).epsilon(1e-12));
    CHECK(operator_norm_B(2.0 * B, riesz) == doctest::Approx(2.0 * vn).epsilon(1e-12));

    Eigen::MatrixXd B3(mesh.n_interior(), 3);
    for (int j = 0; j < 3; ++j) B3.col(j) = randn(rng, mesh.n_interior());
    const Eigen::MatrixXd G = B3.transpose() * Kd.fullPivLu().solve(B3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    CHECK(operator_norm_B(B3, riesz) ==
          doctest::Approx(std::sqrt(es.eigenvalues().maxCoeff())).epsilon(1e-11));
}

TEST_CASE("assemble rejects incomplete coefficient data") {
    const Mesh mesh = build_mesh(4);
    PhysicalParams broken = PhysicalParams::benchmark();
    broken.theta = nullptr;  // not expressible in separable form
    CHECK_THROWS_AS(assemble(mesh, broken), std::invalid_argument);
    PhysicalParams negative = PhysicalParams::benchmark();
    negative.nu = -1.0;
    CHECK_THROWS_AS(assemble(mesh, negative), std::invalid_argument);
}

TEST_CASE("riesz solver rejects an indefinite Gram matrix") {
    SpMat bad(2, 2);
    std::vector<Eigen::Triplet<double>> t{{0, 0, 1.0}, {1, 1, -1.0}};
    bad.setFromTriplets(t.begin(), t.end());
    CHECK_THROWS_AS(RieszSolver{bad}, std::runtime_error);
}

TEST_CASE("matrix market export") {
    const Mesh mesh = build_mesh(4);
    const SpMat M = mass_matrix(mesh, true);
    const std::string path = "/tmp/podrhc_test_M.mtx";
    write_matrix_market(M, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "%%MatrixMarket matrix coordinate real general");
}
