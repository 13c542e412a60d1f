#include "podrhc/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace podrhc {

namespace {

// Degree-5 quadrature on the reference triangle, 7 points, barycentric
// coordinates with weights normalized to sum to one.
struct TriQuadPoint {
    double l0, l1, l2, w;
};

const std::vector<TriQuadPoint>& tri_quad_deg5() {
    static const std::vector<TriQuadPoint> rule = [] {
        const double s15 = std::sqrt(15.0);
        const double a = (6.0 - s15) / 21.0;
        const double b = (6.0 + s15) / 21.0;
        const double wa = (155.0 - s15) / 1200.0;
        const double wb = (155.0 + s15) / 1200.0;
        std::vector<TriQuadPoint> r;
        r.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0});
        r.push_back({a, a, 1.0 - 2.0 * a, wa});
        r.push_back({a, 1.0 - 2.0 * a, a, wa});
        r.push_back({1.0 - 2.0 * a, a, a, wa});
        r.push_back({b, b, 1.0 - 2.0 * b, wb});
        r.push_back({b, 1.0 - 2.0 * b, b, wb});
        r.push_back({1.0 - 2.0 * b, b, b, wb});
        return r;
    }();
    return rule;
}

struct ElementGeometry {
    std::array<Eigen::Vector2d, 3> p;
    std::array<Eigen::Vector2d, 3> grad;  // P1 basis gradients (constant)
    double area;
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    ElementGeometry g;
    for (int i = 0; i < 3; ++i) g.p[static_cast<std::size_t>(i)] = mesh.nodes[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    const auto& p0 = g.p[0];
    const auto& p1 = g.p[1];
    const auto& p2 = g.p[2];
    const double twoA = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    g.area = 0.5 * twoA;
    g.grad[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / twoA;
    g.grad[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / twoA;
    g.grad[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / twoA;
    return g;
}

using TripletList = std::vector<Eigen::Triplet<double>>;

SpMat from_triplets(int rows, int cols, const TripletList& trip) {
    SpMat A(rows, cols);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

// Scatter a 3x3 element matrix either to all nodes or to interior dofs.
void scatter(const Mesh& mesh, int t, const Eigen::Matrix3d& local, bool interior_only, TripletList& out) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            int r = tri[static_cast<std::size_t>(i)];
            int c = tri[static_cast<std::size_t>(j)];
            if (interior_only) {
                r = mesh.dof_of_node[static_cast<std::size_t>(r)];
                c = mesh.dof_of_node[static_cast<std::size_t>(c)];
                if (r < 0 || c < 0) continue;
            }
            out.emplace_back(r, c, local(i, j));
        }
    }
}

// Sutherland-Hodgman clip of a convex polygon against one half-plane
// keep = { x : n.dot(x) <= c }.
std::vector<Eigen::Vector2d> clip_halfplane(const std::vector<Eigen::Vector2d>& poly,
                                            const Eigen::Vector2d& n, double c) {
    std::vector<Eigen::Vector2d> out;
    const std::size_t np = poly.size();
    for (std::size_t i = 0; i < np; ++i) {
        const Eigen::Vector2d& a = poly[i];
        const Eigen::Vector2d& b = poly[(i + 1) % np];
        const double da = n.dot(a) - c;
        const double db = n.dot(b) - c;
        const bool ina = da <= 0.0;
        const bool inb = db <= 0.0;
        if (ina) out.push_back(a);
        if (ina != inb) {
            const double s = da / (da - db);
            out.push_back(a + s * (b - a));
        }
    }
    return out;
}

std::vector<Eigen::Vector2d> clip_triangle_box(const ElementGeometry& g, const Eigen::Vector2d& lo,
                                               const Eigen::Vector2d& hi) {
    std::vector<Eigen::Vector2d> poly(g.p.begin(), g.p.end());
    poly = clip_halfplane(poly, Eigen::Vector2d(-1, 0), -lo.x());
    if (poly.empty()) return poly;
    poly = clip_halfplane(poly, Eigen::Vector2d(1, 0), hi.x());
    if (poly.empty()) return poly;
    poly = clip_halfplane(poly, Eigen::Vector2d(0, -1), -lo.y());
    if (poly.empty()) return poly;
    poly = clip_halfplane(poly, Eigen::Vector2d(0, 1), hi.y());
    return poly;
}

// Barycentric coordinates of x with respect to the element.
Eigen::Vector3d barycentric(const ElementGeometry& g, const Eigen::Vector2d& x) {
    Eigen::Vector3d l;
    // lambda_i is affine with gradient g.grad[i] and lambda_i(p_i) = 1.
    for (int i = 0; i < 3; ++i)
        l(i) = 1.0 + g.grad[static_cast<std::size_t>(i)].dot(x - g.p[static_cast<std::size_t>(i)]);
    return l;
}

// Exact integral of each P1 basis function over a convex polygon inside
// the element: fan triangulation + vertex-average rule (exact for linears).
Eigen::Vector3d integrate_p1_over_polygon(const ElementGeometry& g,
                                          const std::vector<Eigen::Vector2d>& poly) {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    if (poly.size() < 3) return out;
    const Eigen::Vector2d& v0 = poly[0];
    const Eigen::Vector3d l0 = barycentric(g, v0);
    for (std::size_t j = 1; j + 1 < poly.size(); ++j) {
        const Eigen::Vector2d& v1 = poly[j];
        const Eigen::Vector2d& v2 = poly[j + 1];
        const double a2 = (v1.x() - v0.x()) * (v2.y() - v0.y()) - (v2.x() - v0.x()) * (v1.y() - v0.y());
        const double area = 0.5 * std::abs(a2);
        const Eigen::Vector3d lsum = l0 + barycentric(g, v1) + barycentric(g, v2);
        out += (area / 3.0) * lsum;
    }
    return out;
}

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

PhysicalParams PhysicalParams::benchmark(double nu, double a1) {
    PhysicalParams p;
    p.nu = nu;
    p.a0 = [](const Eigen::Vector2d&) { return -2.0; };
    p.a1 = [a1](const Eigen::Vector2d&) { return a1; };
    p.theta = [](double t) { return std::abs(std::sin(t)); };
    p.velocity = [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d(-0.01 * (x.x() + x.y()), 0.2 * x.x() * x.y());
    };
    p.div_velocity = [](const Eigen::Vector2d& x) { return -0.01 + 0.2 * x.x(); };
    return p;
}

PhysicalParams PhysicalParams::diffusion(double nu) {
    PhysicalParams p;
    p.nu = nu;
    p.a0 = [](const Eigen::Vector2d&) { return 0.0; };
    p.a1 = [](const Eigen::Vector2d&) { return 0.0; };
    p.theta = [](double) { return 0.0; };
    p.velocity = [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); };
    p.div_velocity = [](const Eigen::Vector2d&) { return 0.0; };
    return p;
}

ActuatorLayout ActuatorLayout::lshape13(double side) {
    ActuatorLayout layout;
    for (int j = 0; j < 6; ++j)  // R1..R6, bottom to top
        layout.boxes.push_back({Eigen::Vector2d(0.74, 0.15 + 0.1 * j), side});
    for (int i = 0; i < 7; ++i)  // R7..R13, right to left
        layout.boxes.push_back({Eigen::Vector2d(0.74 - 0.1 * i, 0.75), side});
    return layout;
}

ActuatorLayout ActuatorLayout::full_domain() {
    ActuatorLayout layout;
    layout.boxes.push_back({Eigen::Vector2d(0.5, 0.5), 1.0});
    return layout;
}

void ActuatorLayout::validate(double overlap_tol) const {
    require(!boxes.empty(), "ActuatorLayout: no boxes");
    for (const auto& b : boxes) {
        require(b.side > 0.0, "ActuatorLayout: box side must be positive");
        const double hs = 0.5 * b.side;
        require(b.center.x() - hs >= -1e-12 && b.center.x() + hs <= 1.0 + 1e-12 &&
                    b.center.y() - hs >= -1e-12 && b.center.y() + hs <= 1.0 + 1e-12,
                "ActuatorLayout: box leaves the domain");
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            const auto& a = boxes[i];
            const auto& b = boxes[j];
            const double ox = std::min(a.center.x() + 0.5 * a.side, b.center.x() + 0.5 * b.side) -
                              std::max(a.center.x() - 0.5 * a.side, b.center.x() - 0.5 * b.side);
            const double oy = std::min(a.center.y() + 0.5 * a.side, b.center.y() + 0.5 * b.side) -
                              std::max(a.center.y() - 0.5 * a.side, b.center.y() - 0.5 * b.side);
            if (ox <= 0.0 || oy <= 0.0) continue;
            const double min_area = std::min(a.side * a.side, b.side * b.side);
            require(ox * oy <= overlap_tol * min_area, "ActuatorLayout: boxes overlap substantially");
        }
    }
}

SpMat Discretization::operator_at(double t) const {
    SpMat A = theta_q[0](t) * A_q[0];
    for (std::size_t q = 1; q < A_q.size(); ++q) A += theta_q[q](t) * A_q[q];
    return A;
}

SpMat mass_matrix(const Mesh& mesh, bool interior_only) {
    TripletList trip;
    Eigen::Matrix3d local;
    local << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        scatter(mesh, t, (g.area / 12.0) * local, interior_only, trip);
    }
    const int n = interior_only ? mesh.n_interior() : mesh.n_nodes();
    return from_triplets(n, n, trip);
}

SpMat stiffness_matrix(const Mesh& mesh, bool interior_only) {
    TripletList trip;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        Eigen::Matrix3d local;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                local(i, j) = g.area * g.grad[static_cast<std::size_t>(i)].dot(g.grad[static_cast<std::size_t>(j)]);
        scatter(mesh, t, local, interior_only, trip);
    }
    const int n = interior_only ? mesh.n_interior() : mesh.n_nodes();
    return from_triplets(n, n, trip);
}

Discretization assemble(const Mesh& mesh, const PhysicalParams& params) {
    require(params.nu > 0.0, "assemble: nu must be positive");
    require(static_cast<bool>(params.a0) && static_cast<bool>(params.a1) && static_cast<bool>(params.theta) &&
                static_cast<bool>(params.velocity) && static_cast<bool>(params.div_velocity),
            "assemble: reaction must be given in separable form a0(x) + a1(x)*theta(t) "
            "with velocity and its divergence; non-separable coefficients are not supported");

    Discretization disc;
    disc.mesh = mesh;
    disc.M = mass_matrix(mesh, true);
    disc.K_V = stiffness_matrix(mesh, true);

    const auto& rule = tri_quad_deg5();

    // A1 = nu*K + mass-weighted a0 + advection in the split weak form
    //      <b.grad y + 1/2 (div b) y, v> + 1/2 <(div b) y, v>;
    // A2 = mass-weighted a1, modulated by theta(t).
    TripletList trip_a0, trip_a1, trip_adv;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        Eigen::Matrix3d la0 = Eigen::Matrix3d::Zero();
        Eigen::Matrix3d la1 = Eigen::Matrix3d::Zero();
        Eigen::Matrix3d ladv = Eigen::Matrix3d::Zero();
        for (const auto& q : rule) {
            const Eigen::Vector2d x = q.l0 * g.p[0] + q.l1 * g.p[1] + q.l2 * g.p[2];
            const double w = q.w * g.area;
            const Eigen::Vector3d lam(q.l0, q.l1, q.l2);
            const double a0 = params.a0(x);
            const double a1 = params.a1(x);
            const Eigen::Vector2d b = params.velocity(x);
            const double db = params.div_velocity(x);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const double phi_ij = lam(i) * lam(j);
                    la0(i, j) += w * a0 * phi_ij;
                    la1(i, j) += w * a1 * phi_ij;
                    // row i = test function, column j = trial function
                    ladv(i, j) += w * (b.dot(g.grad[static_cast<std::size_t>(j)]) * lam(i) + db * phi_ij);
                }
            }
        }
        scatter(mesh, t, la0, true, trip_a0);
        scatter(mesh, t, la1, true, trip_a1);
        scatter(mesh, t, ladv, true, trip_adv);
    }

    const int n = mesh.n_interior();
    SpMat A1 = params.nu * disc.K_V;
    A1 += from_triplets(n, n, trip_a0);
    A1 += from_triplets(n, n, trip_adv);
    A1.makeCompressed();
    SpMat A2 = from_triplets(n, n, trip_a1);

    disc.A_q.push_back(std::move(A1));
    disc.A_q.push_back(std::move(A2));
    disc.theta_q.push_back([](double) { return 1.0; });
    disc.theta_q.push_back(params.theta);

    disc.eta_V = params.nu;

    // eta_H = max(0, -ess inf { a(t,x) - 1/2 div b(x) }), the inf taken over
    // quadrature points and the range of theta over one period.
    double theta_min = params.theta(0.0), theta_max = theta_min;
    for (int i = 0; i <= 4096; ++i) {
        const double th = params.theta(2.0 * M_PI * i / 4096.0);
        theta_min = std::min(theta_min, th);
        theta_max = std::max(theta_max, th);
    }
    double essinf = std::numeric_limits<double>::infinity();
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        for (const auto& q : rule) {
            const Eigen::Vector2d x = q.l0 * g.p[0] + q.l1 * g.p[1] + q.l2 * g.p[2];
            const double base = params.a0(x) - 0.5 * params.div_velocity(x);
            const double a1 = params.a1(x);
            essinf = std::min({essinf, base + a1 * theta_min, base + a1 * theta_max});
        }
    }
    disc.eta_H = std::max(0.0, -essinf);
    return disc;
}

Eigen::MatrixXd assemble_actuators(const Mesh& mesh, const ActuatorLayout& layout, ActuatorQuadrature quad) {
    layout.validate();
    const int n = mesh.n_interior();
    const int m = layout.count();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);

    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        for (int bi = 0; bi < m; ++bi) {
            const auto& box = layout.boxes[static_cast<std::size_t>(bi)];
            const Eigen::Vector2d lo = box.center - 0.5 * box.side * Eigen::Vector2d::Ones();
            const Eigen::Vector2d hi = box.center + 0.5 * box.side * Eigen::Vector2d::Ones();
            // cheap reject on bounding boxes
            double tlox = std::min({g.p[0].x(), g.p[1].x(), g.p[2].x()});
            double thix = std::max({g.p[0].x(), g.p[1].x(), g.p[2].x()});
            double tloy = std::min({g.p[0].y(), g.p[1].y(), g.p[2].y()});
            double thiy = std::max({g.p[0].y(), g.p[1].y(), g.p[2].y()});
            if (thix <= lo.x() || tlox >= hi.x() || thiy <= lo.y() || tloy >= hi.y()) continue;

            Eigen::Vector3d contrib = Eigen::Vector3d::Zero();
            if (quad == ActuatorQuadrature::ExactClip) {
                const auto poly = clip_triangle_box(g, lo, hi);
                contrib = integrate_p1_over_polygon(g, poly);
            } else {
                // 4x4 tensor Gauss on the square, Duffy-collapsed to the triangle
                static const double gp[4] = {0.069431844202973712, 0.33000947820757187,
                                             0.66999052179242813, 0.93056815579702629};
                static const double gw[4] = {0.17392742256872693, 0.32607257743127307,
                                             0.32607257743127307, 0.17392742256872693};
                for (int a = 0; a < 4; ++a) {
                    for (int b2 = 0; b2 < 4; ++b2) {
                        const double u = gp[a], v = gp[b2];
                        const double l1 = u * (1.0 - v), l2 = u * v, l0 = 1.0 - l1 - l2;
                        const double w = gw[a] * gw[b2] * u * 2.0 * g.area;
                        const Eigen::Vector2d x = l0 * g.p[0] + l1 * g.p[1] + l2 * g.p[2];
                        const bool inside = x.x() >= lo.x() && x.x() <= hi.x() && x.y() >= lo.y() && x.y() <= hi.y();
                        if (!inside) continue;
                        contrib += w * Eigen::Vector3d(l0, l1, l2);
                    }
                }
            }
            for (int i = 0; i < 3; ++i) {
                const int dof = mesh.dof_of_node[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
                if (dof >= 0) B(dof, bi) += contrib(i);
            }
        }
    }
    return B;
}

Discretization build_discretization(const Mesh& mesh, const PhysicalParams& params,
                                    const ActuatorLayout& layout, ActuatorQuadrature quad) {
    Discretization disc = assemble(mesh, params);
    disc.B = assemble_actuators(mesh, layout, quad);
    const RieszSolver riesz(disc.K_V);
    disc.B_dualnorm = operator_norm_B(disc.B, riesz);
    return disc;
}

RieszSolver::RieszSolver(const SpMat& K_V) {
    ldlt_.compute(K_V);
    if (ldlt_.info() != Eigen::Success || ldlt_.vectorD().minCoeff() <= 0.0)
        throw std::runtime_error("RieszSolver: the V-Gram matrix is not symmetric positive definite");
}

double RieszSolver::dual_norm(const Eigen::VectorXd& functional) const {
    const Eigen::VectorXd rep = ldlt_.solve(functional);
    const double sq = functional.dot(rep);
    return std::sqrt(std::max(0.0, sq));
}

Eigen::VectorXd RieszSolver::representer(const Eigen::VectorXd& functional) const {
    return ldlt_.solve(functional);
}

Eigen::MatrixXd RieszSolver::solve_block(const Eigen::MatrixXd& rhs) const {
    return ldlt_.solve(rhs);
}

double operator_norm_B(const Eigen::MatrixXd& B, const RieszSolver& riesz) {
    if (B.cols() == 0) return 0.0;
    const Eigen::MatrixXd G = B.transpose() * riesz.solve_block(B);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigen::VectorXd load_vector_constant_one(const Mesh& mesh) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mesh.n_interior());
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            const int dof = mesh.dof_of_node[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
            if (dof >= 0) f(dof) += g.area / 3.0;
        }
    }
    return f;
}

Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(const Eigen::Vector2d&)>& f) {
    Eigen::VectorXd v(mesh.n_interior());
    for (int d = 0; d < mesh.n_interior(); ++d)
        v(d) = f(mesh.nodes[static_cast<std::size_t>(mesh.interior_dofs[static_cast<std::size_t>(d)])]);
    return v;
}

void write_matrix_market(const SpMat& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
    char buf[64];
    for (int k = 0; k < A.outerSize(); ++k) {
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n", static_cast<long>(it.row() + 1),
                          static_cast<long>(it.col() + 1), it.value());
            out << buf;
        }
    }
}

void write_matrix_market(const Eigen::MatrixXd& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix array real general\n";
    out << A.rows() << " " << A.cols() << "\n";
    char buf[48];
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", A(i, j));
            out << buf;
        }
    }
}

}  // namespace podrhc
