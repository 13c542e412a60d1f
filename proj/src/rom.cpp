#include "podrhc/rom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace podrhc {

namespace {

// Symmetric PSD square root via eigendecomposition. Eigenvalues at the
// round-off level of ||G|| are noise (the dictionaries are rank-deficient by
// construction); keeping them would leak sqrt(eps)-level garbage into every
// residual norm, so they are dropped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
    const double floor = es.eigenvalues().cwiseAbs().maxCoeff() * 1e-13;
    Eigen::VectorXd d = es.eigenvalues();
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = d(i) > floor ? std::sqrt(d(i)) : 0.0;
    return d.asDiagonal() * es.eigenvectors().transpose();
}

// V-orthonormalization by modified Gram-Schmidt in the K_V inner product.
void mgs_orthonormalize(Eigen::MatrixXd& V, const SpMat& K) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            const double proj = V.col(i).dot(K * V.col(j));
            V.col(j) -= proj * V.col(i);
        }
        const double nrm = std::sqrt(std::max(0.0, V.col(j).dot(K * V.col(j))));
        if (nrm <= 0.0) throw std::runtime_error("pod: basis candidate has zero V-norm");
        V.col(j) /= nrm;
    }
}

}  // namespace

ReducedModel build_reduced_model(std::shared_ptr<const Discretization> disc, Eigen::MatrixXd basis,
                                 const RieszSolver* riesz) {
    ReducedModel rm;
    rm.disc = std::move(disc);
    rm.basis = std::move(basis);
    const auto& d = *rm.disc;
    const int r = rm.r();
    const int m = d.m();
    const int Q = static_cast<int>(d.A_q.size());

    rm.M_r = rm.basis.transpose() * (d.M * rm.basis);
    rm.A_q_r.reserve(static_cast<std::size_t>(Q));
    for (const auto& Aq : d.A_q) rm.A_q_r.push_back(rm.basis.transpose() * (Aq * rm.basis));
    rm.B_r = (d.B.size() > 0) ? (rm.basis.transpose() * d.B).eval() : Eigen::MatrixXd::Zero(r, 0).eval();

    // Residual dictionaries; shared K_V factorization across both Gramians.
    std::unique_ptr<RieszSolver> owned;
    if (riesz == nullptr) {
        owned = std::make_unique<RieszSolver>(d.K_V);
        riesz = owned.get();
    }
    const Eigen::MatrixXd MPhi = d.M * rm.basis;
    Eigen::MatrixXd Dy(d.n(), Q * r + r + m);
    Eigen::MatrixXd Dp(d.n(), Q * r + r);
    for (int q = 0; q < Q; ++q) {
        Dy.middleCols(q * r, r) = d.A_q[static_cast<std::size_t>(q)] * rm.basis;
        Dp.middleCols(q * r, r) = d.A_q[static_cast<std::size_t>(q)].transpose() * rm.basis;
    }
    Dy.middleCols(Q * r, r) = MPhi;
    if (m > 0) Dy.middleCols(Q * r + r, m) = d.B;
    Dp.middleCols(Q * r, r) = MPhi;

    rm.gram_state = Dy.transpose() * riesz->solve_block(Dy);
    rm.gram_adjoint = Dp.transpose() * riesz->solve_block(Dp);
    rm.gram_state_sqrt = psd_sqrt(rm.gram_state);
    rm.gram_adjoint_sqrt = psd_sqrt(rm.gram_adjoint);
    return rm;
}

PodBasis pod_basis(const SnapshotSet& snapshots, const SpMat& K_V, const PodOptions& opts) {
    if (snapshots.empty()) throw std::invalid_argument("pod: empty snapshot set");

    // Collect all time instances, weight sqrt(tau) each (discrete L2(t;V)
    // inner product with weight tau per instance).
    std::vector<const Eigen::VectorXd*> cols;
    std::vector<double> weights;
    for (const auto& member : snapshots.members) {
        const double tau = member.traj.grid.tau;
        if (tau <= 0.0) throw std::invalid_argument("pod: snapshot with non-positive time step");
        for (const auto& s : member.traj.states) {
            cols.push_back(&s);
            weights.push_back(std::sqrt(tau));
        }
    }
    const int N = static_cast<int>(cols.size());
    const int n = static_cast<int>(cols.front()->size());

    Eigen::MatrixXd Y(n, N);
    for (int j = 0; j < N; ++j) Y.col(j) = weights[static_cast<std::size_t>(j)] * (*cols[static_cast<std::size_t>(j)]);

    // SVD of the V-weighted snapshot matrix W = L' P Y with P K P' = L L'.
    // Equivalent to the snapshot-Gram eigenproblem (W' W = Y' K Y) but keeps
    // singular values far below sqrt(machine eps), which the squared Gram
    // spectrum cannot resolve.
    Eigen::SimplicialLLT<SpMat> llt(K_V);
    if (llt.info() != Eigen::Success) throw std::runtime_error("pod: V-Gram factorization failed");
    Eigen::MatrixXd W = llt.permutationP() * Y;
    W = llt.matrixU() * W;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU);
    const Eigen::VectorXd sigma = svd.singularValues();
    Eigen::VectorXd lam = sigma.array().square();

    const double total = lam.sum();
    if (total <= 0.0 || !(sigma(0) > 0.0)) throw std::invalid_argument("pod: all snapshots are zero");

    const double sigma_floor = sigma(0) * 1e-13;
    int r = 0;
    double acc = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        if (sigma(i) <= sigma_floor) break;
        acc += lam(i);
        r = i + 1;
        // eps = 1 means "as many modes as r_max allows": the energy sum
        // saturates in floating point long before the spectrum does
        if (opts.energy_eps < 1.0 && acc >= opts.energy_eps * total) break;
        if (r >= opts.r_max) break;
    }
    r = std::min(r, opts.r_max);
    if (r == 0) throw std::invalid_argument("pod: all snapshots are zero");

    PodBasis out;
    out.eigvals = std::move(lam);
    out.r = r;
    // modes x_i = P' L^{-T} u_i are V-orthonormal by construction
    Eigen::MatrixXd U = svd.matrixU().leftCols(r);
    Eigen::MatrixXd X = llt.matrixU().solve(U);
    out.basis = llt.permutationPinv() * X;
    mgs_orthonormalize(out.basis, K_V);  // one stabilizing re-orthogonalization
    return out;
}

ReducedModel pod(const SnapshotSet& snapshots, std::shared_ptr<const Discretization> disc,
                 const PodOptions& opts, const RieszSolver* riesz) {
    PodBasis pb = pod_basis(snapshots, disc->K_V, opts);
    ReducedModel rm = build_reduced_model(std::move(disc), std::move(pb.basis), riesz);
    rm.pod_eigvals = std::move(pb.eigvals);
    return rm;
}

Eigen::VectorXd project_initial(const ReducedModel& rm, const Eigen::VectorXd& y_in) {
    const Eigen::VectorXd rhs = rm.basis.transpose() * (rm.disc->M * y_in);
    return rm.M_r.ldlt().solve(rhs);
}

double projection_error_H(const ReducedModel& rm, const Eigen::VectorXd& y_in, const Eigen::VectorXd& coords) {
    const double yy = y_in.dot(rm.disc->M * y_in);
    const double ya = coords.dot(rm.basis.transpose() * (rm.disc->M * y_in));
    return std::sqrt(std::max(0.0, yy - ya));
}

ReducedModel truncate(const ReducedModel& rm, int r_new) {
    if (r_new < 1 || r_new > rm.r()) throw std::invalid_argument("truncate: rank out of range");
    const int r = rm.r();
    const int Q = rm.Q();
    const int m = rm.m();
    ReducedModel out;
    out.disc = rm.disc;
    out.basis = rm.basis.leftCols(r_new);
    out.M_r = rm.M_r.topLeftCorner(r_new, r_new);
    for (const auto& Aq : rm.A_q_r) out.A_q_r.push_back(Aq.topLeftCorner(r_new, r_new));
    out.B_r = rm.B_r.topRows(r_new);
    out.pod_eigvals = rm.pod_eigvals;

    auto slice = [&](const Eigen::MatrixXd& G, bool with_controls) {
        std::vector<int> keep;
        for (int q = 0; q < Q; ++q)
            for (int i = 0; i < r_new; ++i) keep.push_back(q * r + i);
        for (int i = 0; i < r_new; ++i) keep.push_back(Q * r + i);
        if (with_controls)
            for (int i = 0; i < m; ++i) keep.push_back(Q * r + r + i);
        Eigen::MatrixXd S(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t a = 0; a < keep.size(); ++a)
            for (std::size_t b = 0; b < keep.size(); ++b)
                S(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    G(keep[a], keep[b]);
        return S;
    };
    out.gram_state = slice(rm.gram_state, true);
    out.gram_adjoint = slice(rm.gram_adjoint, false);
    out.gram_state_sqrt = psd_sqrt(out.gram_state);
    out.gram_adjoint_sqrt = psd_sqrt(out.gram_adjoint);
    return out;
}

std::vector<double> state_residual_norms(const ReducedModel& rm, const Trajectory& rom_traj,
                                         const ControlSignal& u, const std::vector<double>* weights) {
    const int K = rom_traj.grid.n_steps;
    const int r = rm.r();
    const int Q = rm.Q();
    const int m = rm.m();
    const double tau = rom_traj.grid.tau;
    if (static_cast<int>(u.values.size()) != K)
        throw std::invalid_argument("state_residual_norms: control/trajectory grid mismatch");

    std::vector<double> out(static_cast<std::size_t>(K));
    Eigen::VectorXd c(Q * r + r + m);
    for (int k = 1; k <= K; ++k) {
        const double t = rom_traj.grid.time_at(k);
        const auto& ak = rom_traj.states[static_cast<std::size_t>(k)];
        const auto& akm = rom_traj.states[static_cast<std::size_t>(k - 1)];
        for (int q = 0; q < Q; ++q)
            c.segment(q * r, r) = -rm.disc->theta_q[static_cast<std::size_t>(q)](t) * ak;
        c.segment(Q * r, r) = -(ak - akm) / tau;
        if (m > 0) c.segment(Q * r + r, m) = u.values[static_cast<std::size_t>(k - 1)];
        double nrm = (rm.gram_state_sqrt * c).norm();
        if (weights != nullptr) nrm *= (*weights)[static_cast<std::size_t>(k - 1)];
        out[static_cast<std::size_t>(k - 1)] = nrm;
    }
    return out;
}

std::vector<double> adjoint_residual_norms(const ReducedModel& rm, const Trajectory& p_rom,
                                           const Trajectory& data_rom, const std::vector<double>* weights) {
    const int K = p_rom.grid.n_steps;
    const int r = rm.r();
    const int Q = rm.Q();
    const double tau = p_rom.grid.tau;

    std::vector<double> out(static_cast<std::size_t>(K));
    Eigen::VectorXd c(Q * r + r);
    for (int j = 0; j < K; ++j) {
        const double t = p_rom.grid.time_at(j + 1);
        const auto& pj = p_rom.states[static_cast<std::size_t>(j)];
        const auto& pj1 = p_rom.states[static_cast<std::size_t>(j + 1)];
        const auto& dj1 = data_rom.states[static_cast<std::size_t>(j + 1)];
        for (int q = 0; q < Q; ++q)
            c.segment(q * r, r) = -rm.disc->theta_q[static_cast<std::size_t>(q)](t) * pj;
        c.segment(Q * r, r) = dj1 + (pj1 - pj) / tau;
        double nrm = (rm.gram_adjoint_sqrt * c).norm();
        if (weights != nullptr) nrm *= (*weights)[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(j)] = nrm;
    }
    return out;
}

std::vector<double> state_residual_norms_direct(const ReducedModel& rm, const RieszSolver& riesz,
                                                const Trajectory& rom_traj, const ControlSignal& u) {
    const int K = rom_traj.grid.n_steps;
    const double tau = rom_traj.grid.tau;
    const auto& d = *rm.disc;
    std::vector<double> out(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        const double t = rom_traj.grid.time_at(k);
        const Eigen::VectorXd yk = rm.lift(rom_traj.states[static_cast<std::size_t>(k)]);
        const Eigen::VectorXd dy = rm.lift((rom_traj.states[static_cast<std::size_t>(k)] -
                                            rom_traj.states[static_cast<std::size_t>(k - 1)]) / tau);
        Eigen::VectorXd R = -d.operator_at(t) * yk - d.M * dy;
        if (d.m() > 0) R += d.B * u.values[static_cast<std::size_t>(k - 1)];
        out[static_cast<std::size_t>(k - 1)] = riesz.dual_norm(R);
    }
    return out;
}

std::vector<double> adjoint_residual_norms_direct(const ReducedModel& rm, const RieszSolver& riesz,
                                                  const Trajectory& p_rom, const Trajectory& data_rom) {
    const int K = p_rom.grid.n_steps;
    const double tau = p_rom.grid.tau;
    const auto& d = *rm.disc;
    std::vector<double> out(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        const double t = p_rom.grid.time_at(j + 1);
        const Eigen::VectorXd pj = rm.lift(p_rom.states[static_cast<std::size_t>(j)]);
        const Eigen::VectorXd dp = rm.lift((p_rom.states[static_cast<std::size_t>(j + 1)] -
                                            p_rom.states[static_cast<std::size_t>(j)]) / tau);
        const Eigen::VectorXd dat = rm.lift(data_rom.states[static_cast<std::size_t>(j + 1)]);
        const Eigen::VectorXd R = d.M * dat - d.operator_at(t).transpose() * pj + d.M * dp;
        out[static_cast<std::size_t>(j)] = riesz.dual_norm(R);
    }
    return out;
}

namespace {
constexpr std::uint64_t kCacheMagic = 0x504f44524843ull;  // "PODRHC"

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& A) {
    const std::int64_t rows = A.rows(), cols = A.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(A.data()), static_cast<std::streamsize>(sizeof(double) * A.size()));
}

bool read_matrix(std::ifstream& in, Eigen::MatrixXd* A) {
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || rows < 0 || cols < 0) return false;
    A->resize(rows, cols);
    in.read(reinterpret_cast<char*>(A->data()), static_cast<std::streamsize>(sizeof(double) * A->size()));
    return static_cast<bool>(in);
}
}  // namespace

void save_reduced_basis(const std::string& path, const std::string& key, const PodBasis& basis) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_reduced_basis: cannot open " + path);
    out.write(reinterpret_cast<const char*>(&kCacheMagic), sizeof(kCacheMagic));
    const std::uint64_t klen = key.size();
    out.write(reinterpret_cast<const char*>(&klen), sizeof(klen));
    out.write(key.data(), static_cast<std::streamsize>(klen));
    write_matrix(out, basis.basis);
    write_matrix(out, basis.eigvals);
}

bool load_reduced_basis(const std::string& path, const std::string& key, PodBasis* out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::uint64_t magic = 0, klen = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    if (!in || magic != kCacheMagic) return false;
    in.read(reinterpret_cast<char*>(&klen), sizeof(klen));
    if (!in || klen > 1u << 20) return false;
    std::string stored(klen, '\0');
    in.read(stored.data(), static_cast<std::streamsize>(klen));
    if (!in || stored != key) return false;
    Eigen::MatrixXd basis, eig;
    if (!read_matrix(in, &basis) || !read_matrix(in, &eig)) return false;
    out->basis = std::move(basis);
    out->eigvals = eig.col(0);
    out->r = static_cast<int>(out->basis.cols());
    return true;
}

}  // namespace podrhc
