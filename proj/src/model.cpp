#include "podrhc/model.hpp"

#include <stdexcept>
#include <string>

namespace podrhc {

FomModel::FomModel(std::shared_ptr<const Discretization> disc, double tau, FomOptions opts)
    : disc_(std::move(disc)), tau_(tau), opts_(opts) {
    if (tau_ <= 0.0) throw std::invalid_argument("FomModel: tau must be positive");
}

FomModel::Entry& FomModel::entry_for(std::int64_t g) {
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;

    const double t = static_cast<double>(g) * tau_;
    SpMat E = disc_->M + tau_ * disc_->operator_at(t);
    E.makeCompressed();

    Entry e;
    if (opts_.backend == FomOptions::Backend::Direct) {
        e.lu = std::make_unique<Eigen::SparseLU<SpMat>>();
        e.lu->compute(E);
        if (e.lu->info() != Eigen::Success)
            throw std::runtime_error("FomModel: singular implicit-Euler step matrix at t = " + std::to_string(t));
    } else {
        e.E = std::make_unique<SpMat>(E);
        e.Et = std::make_unique<SpMat>(E.transpose());
        e.it = std::make_unique<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>>();
        e.it->setTolerance(opts_.iterative_tol);
        e.it->compute(*e.E);
        e.it_t = std::make_unique<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>>();
        e.it_t->setTolerance(opts_.iterative_tol);
        e.it_t->compute(*e.Et);
        if (e.it->info() != Eigen::Success || e.it_t->info() != Eigen::Success)
            throw std::runtime_error("FomModel: iterative setup failed at t = " + std::to_string(t));
    }
    return cache_.emplace(g, std::move(e)).first->second;
}

Eigen::VectorXd FomModel::step_solve(std::int64_t g, const Eigen::VectorXd& rhs) {
    Entry& e = entry_for(g);
    if (e.lu) {
        Eigen::VectorXd x = e.lu->solve(rhs);
        if (e.lu->info() != Eigen::Success)
            throw std::runtime_error("FomModel: sparse solve failed at grid index " + std::to_string(g));
        return x;
    }
    Eigen::VectorXd x = e.it->solve(rhs);
    if (e.it->info() != Eigen::Success)
        throw std::runtime_error("FomModel: BiCGSTAB did not converge at grid index " + std::to_string(g));
    return x;
}

Eigen::VectorXd FomModel::step_solve_transposed(std::int64_t g, const Eigen::VectorXd& rhs) {
    Entry& e = entry_for(g);
    if (e.lu) {
        Eigen::VectorXd x = e.lu->adjoint().solve(rhs);
        if (e.lu->info() != Eigen::Success)
            throw std::runtime_error("FomModel: transposed solve failed at grid index " + std::to_string(g));
        return x;
    }
    Eigen::VectorXd x = e.it_t->solve(rhs);
    if (e.it_t->info() != Eigen::Success)
        throw std::runtime_error("FomModel: transposed BiCGSTAB did not converge at grid index " + std::to_string(g));
    return x;
}

void FomModel::trim_cache(std::int64_t g_lo, std::int64_t g_hi) {
    for (auto it = cache_.begin(); it != cache_.end();) {
        if (it->first < g_lo || it->first > g_hi)
            it = cache_.erase(it);
        else
            ++it;
    }
}

RomModel::RomModel(std::shared_ptr<const ReducedModel> rm, double tau) : rm_(std::move(rm)), tau_(tau) {
    if (tau_ <= 0.0) throw std::invalid_argument("RomModel: tau must be positive");
    if (rm_->r() == 0) throw std::invalid_argument("RomModel: empty reduced basis");
}

Eigen::PartialPivLU<Eigen::MatrixXd>& RomModel::factor_for(std::int64_t g) {
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;

    const double t = static_cast<double>(g) * tau_;
    Eigen::MatrixXd E = rm_->M_r;
    for (std::size_t q = 0; q < rm_->A_q_r.size(); ++q)
        E += tau_ * rm_->disc->theta_q[q](t) * rm_->A_q_r[q];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(E);
    if (lu.rcond() < 1e-15)
        throw std::runtime_error("RomModel: near-singular reduced step matrix at t = " + std::to_string(t));
    return cache_.emplace(g, std::move(lu)).first->second;
}

Eigen::VectorXd RomModel::step_solve(std::int64_t g, const Eigen::VectorXd& rhs) {
    return factor_for(g).solve(rhs);
}

Eigen::VectorXd RomModel::step_solve_transposed(std::int64_t g, const Eigen::VectorXd& rhs) {
    return factor_for(g).transpose().solve(rhs);
}

}  // namespace podrhc
