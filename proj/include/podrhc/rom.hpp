#pragma once

#include "podrhc/fem.hpp"
#include "podrhc/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace podrhc {

/// FOM trajectories collected as POD input. Members are tagged with their
/// origin; all of them must share the same time step. Trajectories from
/// later sampling instants enter time-shifted to a common window, which for
/// the discrete inner product only affects bookkeeping, not the Gram matrix.
struct SnapshotSet {
    enum class Origin { State, Adjoint };
    struct Member {
        Trajectory traj;
        Origin origin = Origin::State;
        int rhc_step = 0;
    };
    std::vector<Member> members;

    void add(Trajectory traj, Origin origin, int rhc_step) {
        members.push_back({std::move(traj), origin, rhc_step});
    }
    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }
};

/// POD-Galerkin reduced model: V-orthonormal basis, projected operators and
/// the offline Riesz Gramians that turn residual dual norms into small
/// quadratic forms.
struct ReducedModel {
    std::shared_ptr<const Discretization> disc;
    Eigen::MatrixXd basis;  // n x r, basis' K_V basis = I
    Eigen::MatrixXd M_r;
    std::vector<Eigen::MatrixXd> A_q_r;
    Eigen::MatrixXd B_r;
    Eigen::VectorXd pod_eigvals;  // full POD spectrum of the generating snapshot set

    // Raw Gramians D' K_V^{-1} D for the residual dictionaries
    //   state:   D_y = [A_0 Phi | ... | A_{Q-1} Phi | M Phi | B]
    //   adjoint: D_p = [A_0' Phi | ... | A_{Q-1}' Phi | M Phi]
    Eigen::MatrixXd gram_state;
    Eigen::MatrixXd gram_adjoint;
    // Symmetric square roots L with ||R||_{V'} = ||L c||_2 (PSD-safe path).
    Eigen::MatrixXd gram_state_sqrt;
    Eigen::MatrixXd gram_adjoint_sqrt;

    int r() const { return static_cast<int>(basis.cols()); }
    int m() const { return static_cast<int>(B_r.cols()); }
    int Q() const { return static_cast<int>(A_q_r.size()); }

    double h_norm(const Eigen::VectorXd& coords) const { return std::sqrt(std::max(0.0, coords.dot(M_r * coords))); }

    Eigen::VectorXd lift(const Eigen::VectorXd& coords) const { return basis * coords; }
};

/// Projects operators onto the given V-orthonormal basis and precomputes the
/// Riesz Gramians. Pass a RieszSolver for K_V to reuse its factorization.
ReducedModel build_reduced_model(std::shared_ptr<const Discretization> disc, Eigen::MatrixXd basis,
                                 const RieszSolver* riesz = nullptr);

struct PodOptions {
    int r_max = 100;
    double energy_eps = 1.0 - 1e-13;
};

struct PodBasis {
    Eigen::MatrixXd basis;     // n x r
    Eigen::VectorXd eigvals;   // all nonneg eigenvalues, descending
    int r = 0;
};

/// Method of snapshots under the discrete L2(t;V) inner product with weight
/// tau per time instance. The retained rank is the smallest r with
/// sum_{i<=r} lambda_i >= energy_eps * sum lambda_i, capped at r_max.
/// The basis is V-orthonormalized (one re-orthogonalization pass).
PodBasis pod_basis(const SnapshotSet& snapshots, const SpMat& K_V, const PodOptions& opts);

/// pod_basis + build_reduced_model.
ReducedModel pod(const SnapshotSet& snapshots, std::shared_ptr<const Discretization> disc,
                 const PodOptions& opts, const RieszSolver* riesz = nullptr);

/// H-orthogonal projection of a FOM vector into reduced coordinates:
/// solves (Phi' M Phi) a = Phi' M y_in.
Eigen::VectorXd project_initial(const ReducedModel& rm, const Eigen::VectorXd& y_in);

/// || y_in - Phi a ||_H for a = project_initial(rm, y_in).
double projection_error_H(const ReducedModel& rm, const Eigen::VectorXd& y_in, const Eigen::VectorXd& coords);

/// Keeps the leading r_new basis vectors; projected operators and Gramians
/// are sliced, not recomputed (POD bases are nested).
ReducedModel truncate(const ReducedModel& rm, int r_new);

/// Per-step dual norms || R_k ||_{V'} of the discrete state residual
///   R_k = B u_k - A(t_k) Phi a_k - M Phi (a_k - a_{k-1}) / tau,  k = 1..K,
/// scaled by weights[k-1] if given; evaluated through the offline Gramian.
std::vector<double> state_residual_norms(const ReducedModel& rm, const Trajectory& rom_traj,
                                         const ControlSignal& u,
                                         const std::vector<double>* weights = nullptr);

/// Per-step dual norms of the discrete adjoint residual, j = 0..K-1:
///   R_{p,j} = M d_{j+1} - A(t_{j+1})' Phi p_j + M Phi (p_{j+1} - p_j) / tau
/// for reduced data d (the trajectory driving the adjoint solve).
std::vector<double> adjoint_residual_norms(const ReducedModel& rm, const Trajectory& p_rom,
                                           const Trajectory& data_rom,
                                           const std::vector<double>* weights = nullptr);

/// Direct-assembly counterparts (full-order residual vector + one V' solve
/// per step). Reference path for tests and small-scale studies.
std::vector<double> state_residual_norms_direct(const ReducedModel& rm, const RieszSolver& riesz,
                                                const Trajectory& rom_traj, const ControlSignal& u);
std::vector<double> adjoint_residual_norms_direct(const ReducedModel& rm, const RieszSolver& riesz,
                                                  const Trajectory& p_rom, const Trajectory& data_rom);

/// Binary (de)serialization of basis + Gramians, keyed by an opaque tag the
/// caller derives from its configuration.
void save_reduced_basis(const std::string& path, const std::string& key, const PodBasis& basis);
bool load_reduced_basis(const std::string& path, const std::string& key, PodBasis* out);

}  // namespace podrhc
