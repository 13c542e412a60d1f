#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace podrhc {

enum class SpaceTag { FOM, ROM };

/// Uniform time grid t_in + k*tau, k = 0..n_steps.
struct TimeGrid {
    double t_in = 0.0;
    double tau = 0.0;
    int n_steps = 0;

    double time_at(int k) const { return t_in + k * tau; }
    double horizon() const { return tau * n_steps; }

    /// Absolute index of grid point k on the global grid with the same tau.
    std::int64_t global_index(int k) const {
        const double t = time_at(k);
        const double g = t / tau;
        const std::int64_t gi = static_cast<std::int64_t>(std::llround(g));
        if (std::abs(g - static_cast<double>(gi)) > 1e-8)
            throw std::runtime_error("TimeGrid: window start is not aligned with the global grid");
        return gi;
    }
};

/// Time-indexed coefficient vectors; states[0] is the initial value.
struct Trajectory {
    TimeGrid grid;
    SpaceTag space = SpaceTag::FOM;
    std::vector<Eigen::VectorXd> states;  // n_steps + 1 entries

    const Eigen::VectorXd& at(int k) const { return states.at(static_cast<std::size_t>(k)); }
    const Eigen::VectorXd& front() const { return states.front(); }
    const Eigen::VectorXd& back() const { return states.back(); }
};

/// Piecewise-constant control; values[k] acts on the interval (t_k, t_{k+1}].
struct ControlSignal {
    TimeGrid grid;
    std::vector<Eigen::VectorXd> values;  // n_steps entries in R^m

    static ControlSignal zero(const TimeGrid& grid, int m) {
        ControlSignal u;
        u.grid = grid;
        u.values.assign(static_cast<std::size_t>(grid.n_steps), Eigen::VectorXd::Zero(m));
        return u;
    }

    int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }

    /// Discrete L2(t_in, t_in+T; R^m) norm (right-endpoint rule).
    double l2_norm() const {
        double s = 0.0;
        for (const auto& v : values) s += grid.tau * v.squaredNorm();
        return std::sqrt(s);
    }
};

inline double control_l2_distance(const ControlSignal& a, const ControlSignal& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("control_l2_distance: mismatched grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        s += a.grid.tau * (a.values[k] - b.values[k]).squaredNorm();
    return std::sqrt(s);
}

}  // namespace podrhc
