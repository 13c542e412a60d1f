#pragma once

#include "podrhc/fem.hpp"
#include "podrhc/rom.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cstdint>
#include <map>
#include <memory>

namespace podrhc {

/// One implicit-Euler step matrix is E_g = M + tau * A(g * tau). Both model
/// wrappers cache factorizations keyed by the absolute grid index g; caches
/// make the wrappers single-owner objects (not thread-safe), while the
/// underlying Discretization / ReducedModel stay immutable and shareable.

struct FomOptions {
    enum class Backend { Direct, Bicgstab };
    Backend backend = Backend::Direct;
    double iterative_tol = 1e-12;
};

class FomModel {
  public:
    FomModel(std::shared_ptr<const Discretization> disc, double tau, FomOptions opts = {});

    int dim() const { return disc_->n(); }
    int n_controls() const { return disc_->m(); }
    double tau() const { return tau_; }
    const Discretization& disc() const { return *disc_; }
    std::shared_ptr<const Discretization> disc_ptr() const { return disc_; }

    Eigen::VectorXd step_solve(std::int64_t g, const Eigen::VectorXd& rhs);
    Eigen::VectorXd step_solve_transposed(std::int64_t g, const Eigen::VectorXd& rhs);
    Eigen::VectorXd mass_apply(const Eigen::VectorXd& v) const { return disc_->M * v; }
    double mass_quadform(const Eigen::VectorXd& v) const { return v.dot(disc_->M * v); }
    Eigen::VectorXd control_apply(const Eigen::VectorXd& u) const { return disc_->B * u; }
    Eigen::VectorXd control_apply_transposed(const Eigen::VectorXd& p) const {
        return disc_->B.transpose() * p;
    }

    /// Drop cached factorizations outside [g_lo, g_hi].
    void trim_cache(std::int64_t g_lo, std::int64_t g_hi);
    std::size_t cached_factorizations() const { return cache_.size(); }

  private:
    struct Entry {
        std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
        // iterative backend keeps the assembled matrices instead
        std::unique_ptr<SpMat> E;
        std::unique_ptr<SpMat> Et;
        std::unique_ptr<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> it;
        std::unique_ptr<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> it_t;
    };
    Entry& entry_for(std::int64_t g);

    std::shared_ptr<const Discretization> disc_;
    double tau_;
    FomOptions opts_;
    std::map<std::int64_t, Entry> cache_;
};

class RomModel {
  public:
    RomModel(std::shared_ptr<const ReducedModel> rm, double tau);

    int dim() const { return rm_->r(); }
    int n_controls() const { return rm_->m(); }
    double tau() const { return tau_; }
    const ReducedModel& reduced() const { return *rm_; }
    std::shared_ptr<const ReducedModel> reduced_ptr() const { return rm_; }

    Eigen::VectorXd step_solve(std::int64_t g, const Eigen::VectorXd& rhs);
    Eigen::VectorXd step_solve_transposed(std::int64_t g, const Eigen::VectorXd& rhs);
    Eigen::VectorXd mass_apply(const Eigen::VectorXd& v) const { return rm_->M_r * v; }
    double mass_quadform(const Eigen::VectorXd& v) const { return v.dot(rm_->M_r * v); }
    Eigen::VectorXd control_apply(const Eigen::VectorXd& u) const { return rm_->B_r * u; }
    Eigen::VectorXd control_apply_transposed(const Eigen::VectorXd& p) const {
        return rm_->B_r.transpose() * p;
    }

  private:
    Eigen::PartialPivLU<Eigen::MatrixXd>& factor_for(std::int64_t g);

    std::shared_ptr<const ReducedModel> rm_;
    double tau_;
    std::map<std::int64_t, Eigen::PartialPivLU<Eigen::MatrixXd>> cache_;
};

}  // namespace podrhc
