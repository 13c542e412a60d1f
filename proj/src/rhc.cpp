#include "podrhc/rhc.hpp"

#include "podrhc/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace podrhc {

namespace {

constexpr double kDenominatorGuard = 1e-14;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

ControlSignal restrict_control(const ControlSignal& u, int steps) {
    ControlSignal out;
    out.grid = TimeGrid{u.grid.t_in, u.grid.tau, steps};
    out.values.assign(u.values.begin(), u.values.begin() + steps);
    return out;
}

Trajectory restrict_trajectory(const Trajectory& y, int steps) {
    Trajectory out;
    out.grid = TimeGrid{y.grid.t_in, y.grid.tau, steps};
    out.space = y.space;
    out.states.assign(y.states.begin(), y.states.begin() + steps + 1);
    return out;
}

void finalize_alpha_stats(ClosedLoopResult& r, bool use_fom_alpha) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    int n = 0;
    for (const auto& rec : r.records) {
        if (!rec.accepted) continue;
        double a = rec.alpha_lower;
        if (use_fom_alpha && rec.alpha_fom.has_value()) a = *rec.alpha_fom;
        mn = std::min(mn, a);
        mx = std::max(mx, a);
        sum += a;
        ++n;
    }
    if (n > 0) {
        r.alpha_min = mn;
        r.alpha_max = mx;
        r.alpha_avg = sum / n;
    }
}

struct IndexCore {
    OpenLoopSolution sol_k;
    ReducedSolveAnalysis analysis_k;
    double dV_k = 0.0;
};

IndexCore solve_and_analyze_at_k(RomModel& rom, const EstimatorConstants& consts, const RHCConfig& cfg,
                                 const TimeGrid& grid_k, const Eigen::VectorXd& y_k_fom,
                                 const SolveOptions& opts, const OpenLoopSolution* known) {
    IndexCore core;
    if (known != nullptr) {
        core.sol_k = *known;
        core.sol_k.n_gradient_evals = 0;  // already accounted for
        core.sol_k.n_cost_evals = 0;
    } else {
        const Eigen::VectorXd a0 = project_initial(rom.reduced(), y_k_fom);
        core.sol_k = solve_open_loop(rom, grid_k, a0, cfg.cost, opts);
    }
    core.analysis_k = analyze_reduced_solve(rom.reduced(), core.sol_k.y_opt, core.sol_k.u_opt,
                                            core.sol_k.p_opt, &y_k_fom);
    core.dV_k = delta_value(consts, core.analysis_k, 0.0, cfg.cost.lambda);
    return core;
}

}  // namespace

int RHCConfig::delta_steps() const {
    return std::max(1, static_cast<int>(std::llround(delta / tau)));
}

int RHCConfig::horizon_steps() const {
    return std::max(delta_steps(), static_cast<int>(std::llround(T / tau)));
}

int RHCConfig::total_steps() const {
    return static_cast<int>(std::llround(T_inf / tau));
}

ControlSignal shift_control(const ControlSignal& u, int shift_steps, const TimeGrid& new_grid) {
    ControlSignal out = ControlSignal::zero(new_grid, u.dim());
    for (int i = 0; i + shift_steps < u.grid.n_steps && i < new_grid.n_steps; ++i)
        out.values[static_cast<std::size_t>(i)] = u.values[static_cast<std::size_t>(i + shift_steps)];
    return out;
}

ClosedLoopResult run_fom_rhc(const RHCConfig& cfg, std::shared_ptr<const Discretization> disc,
                             const Eigen::VectorXd& y0) {
    const auto t_start = Clock::now();
    const int Kd = cfg.delta_steps();
    const int KT = cfg.horizon_steps();
    const int Kinf = cfg.total_steps();
    const double tau = cfg.tau;

    FomModel model(disc, tau);

    ClosedLoopResult result;
    result.snapped_delta = Kd * tau;
    result.snapped_T = KT * tau;
    result.u_rh = ControlSignal::zero(TimeGrid{0.0, tau, Kinf}, disc->m());
    result.y_rh.grid = TimeGrid{0.0, tau, Kinf};
    result.y_rh.space = SpaceTag::FOM;
    result.y_rh.states.assign(static_cast<std::size_t>(Kinf) + 1, Eigen::VectorXd());
    result.y_rh.states[0] = y0;

    Eigen::VectorXd y_cur = y0;
    std::optional<ControlSignal> warm;
    std::vector<double> values;  // V_T(t_k)
    std::vector<double> j_delta;

    int k = 0;
    while (k * Kd < Kinf) {
        const auto t_step = Clock::now();
        const double t_k = k * Kd * tau;
        const TimeGrid grid{t_k, tau, KT};
        SolveOptions opts = cfg.solver;
        opts.warm_start = warm;
        OpenLoopSolution sol = solve_open_loop(model, grid, y_cur, cfg.cost, opts);
        if (!sol.converged)
            throw std::runtime_error("run_fom_rhc: open-loop solver did not converge at step " + std::to_string(k));
        result.fom_gradient_evals += sol.n_gradient_evals;
        values.push_back(sol.cost);
        j_delta.push_back(trajectory_cost(model, sol.y_opt, sol.u_opt, cfg.cost, Kd));

        const int commit = std::min(Kd, Kinf - k * Kd);
        for (int i = 0; i < commit; ++i) {
            result.u_rh.values[static_cast<std::size_t>(k * Kd + i)] = sol.u_opt.values[static_cast<std::size_t>(i)];
            result.y_rh.states[static_cast<std::size_t>(k * Kd + i) + 1] =
                sol.y_opt.states[static_cast<std::size_t>(i) + 1];
        }
        y_cur = sol.y_opt.states[static_cast<std::size_t>(Kd)];

        PerformanceRecord rec;
        rec.k = k;
        rec.t_k = t_k;
        rec.r = disc->n();
        rec.accepted = true;
        rec.J_delta = j_delta.back();
        rec.V_T_r = sol.cost;
        rec.fom_gradient_evals_so_far = result.fom_gradient_evals;
        rec.wall_ms = ms_since(t_step);
        result.records.push_back(rec);

        const TimeGrid next{t_k + Kd * tau, tau, KT};
        warm = shift_control(sol.u_opt, Kd, next);
        model.trim_cache(next.global_index(0), next.global_index(0) + KT + Kd);
        ++k;
    }

    // one extra solve closes the last performance index
    {
        const double t_k = k * Kd * tau;
        SolveOptions opts = cfg.solver;
        opts.warm_start = warm;
        OpenLoopSolution sol = solve_open_loop(model, TimeGrid{t_k, tau, KT}, y_cur, cfg.cost, opts);
        result.validation_gradient_evals += sol.n_gradient_evals;
        values.push_back(sol.cost);
    }
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const double jd = j_delta[i];
        const double a = (jd < kDenominatorGuard) ? 1.0 : (values[i] - values[i + 1]) / jd;
        result.records[i].alpha_fom = a;
        result.records[i].alpha_lower = a;
        result.records[i].alpha_upper = a;
    }
    finalize_alpha_stats(result, true);

    result.total_cost = trajectory_cost(model, result.y_rh, result.u_rh, cfg.cost, Kinf);
    result.y_final_H = disc->h_norm(result.y_rh.states.back());
    result.final_r = disc->n();
    result.cpu_seconds = ms_since(t_start) / 1e3;
    return result;
}

IndexEvaluation performance_bounds_fullrom(RomModel& rom, const EstimatorConstants& consts,
                                           const RHCConfig& cfg, double t_k, const Eigen::VectorXd& y_k_fom,
                                           const SolveOptions& opts_k, const SolveOptions& opts_k1,
                                           const OpenLoopSolution* known_sol_k) {
    const int Kd = cfg.delta_steps();
    const int KT = cfg.horizon_steps();
    const double tau = cfg.tau;
    const TimeGrid grid_k{t_k, tau, KT};

    IndexEvaluation ev;
    IndexCore core = solve_and_analyze_at_k(rom, consts, cfg, grid_k, y_k_fom, opts_k, known_sol_k);
    ev.sol_k = std::move(core.sol_k);

    // state estimator at the sampling instant, same control on both sides
    const double d_state_delta = delta_state(consts, core.analysis_k, Kd, 0.0, 0.0);

    // J_delta^r and its cost-function bound on the delta window
    const double J_r_delta = trajectory_cost(rom, ev.sol_k.y_opt, ev.sol_k.u_opt, cfg.cost, Kd);
    const Trajectory y_restr = restrict_trajectory(ev.sol_k.y_opt, Kd);
    const ControlSignal u_restr = restrict_control(ev.sol_k.u_opt, Kd);
    const Trajectory p_delta = solve_adjoint(rom, y_restr);
    const ReducedSolveAnalysis analysis_delta =
        analyze_reduced_solve(rom.reduced(), y_restr, u_restr, p_delta, &y_k_fom);
    const double dJ_delta = delta_cost(consts, analysis_delta, 0.0);

    // reduced solve at t_{k+1} from the reduced prediction (in-basis init)
    const TimeGrid grid_k1{t_k + Kd * tau, tau, KT};
    const Eigen::VectorXd a1 = ev.sol_k.y_opt.states[static_cast<std::size_t>(Kd)];
    ev.sol_k1 = solve_open_loop(rom, grid_k1, a1, cfg.cost, opts_k1);
    const ReducedSolveAnalysis analysis_k1 =
        analyze_reduced_solve(rom.reduced(), ev.sol_k1.y_opt, ev.sol_k1.u_opt, ev.sol_k1.p_opt, nullptr);
    const double dV_k1 = delta_value(consts, analysis_k1, d_state_delta, cfg.cost.lambda);

    PerformanceBounds& b = ev.bounds;
    b.V_k = ev.sol_k.cost;
    b.V_k1 = ev.sol_k1.cost;
    b.delta_V_k = core.dV_k;
    b.delta_V_k1 = dV_k1;
    const double num_lo = b.V_k - b.delta_V_k - b.V_k1 - b.delta_V_k1;
    const double num_hi = b.V_k + b.delta_V_k - b.V_k1 + b.delta_V_k1;
    const double den_lo = J_r_delta + dJ_delta;
    const double den_hi = J_r_delta - dJ_delta;
    b.J_delta = den_lo;
    if (den_lo < kDenominatorGuard) {
        b.lower = 1.0;  // y = 0 convention
        b.upper = 1.0;
    } else {
        b.lower = num_lo / den_lo;
        if (den_hi <= 0.0) {
            b.upper = 1.0;
            b.upper_vacuous = true;
        } else {
            b.upper = std::min(num_hi / den_hi, 1.0);
        }
    }
    return ev;
}

IndexEvaluation performance_bounds_mixed(RomModel& rom, FomModel& plant, const EstimatorConstants& consts,
                                         const RHCConfig& cfg, double t_k, const Eigen::VectorXd& y_k_fom,
                                         const SolveOptions& opts_k, const SolveOptions& opts_k1,
                                         const OpenLoopSolution* known_sol_k) {
    const int Kd = cfg.delta_steps();
    const int KT = cfg.horizon_steps();
    const double tau = cfg.tau;
    const TimeGrid grid_k{t_k, tau, KT};

    IndexEvaluation ev;
    IndexCore core = solve_and_analyze_at_k(rom, consts, cfg, grid_k, y_k_fom, opts_k, known_sol_k);
    ev.sol_k = std::move(core.sol_k);

    // plant rollout with the reduced control over one sampling interval
    const ControlSignal u_delta = restrict_control(ev.sol_k.u_opt, Kd);
    ev.rollout = solve_state(plant, u_delta, y_k_fom);
    ev.J_delta_fom = trajectory_cost(plant, ev.rollout, u_delta, cfg.cost, Kd);
    const Eigen::VectorXd y_k1 = ev.rollout.states.back();

    const TimeGrid grid_k1{t_k + Kd * tau, tau, KT};
    const Eigen::VectorXd a1 = project_initial(rom.reduced(), y_k1);
    ev.sol_k1 = solve_open_loop(rom, grid_k1, a1, cfg.cost, opts_k1);
    const ReducedSolveAnalysis analysis_k1 =
        analyze_reduced_solve(rom.reduced(), ev.sol_k1.y_opt, ev.sol_k1.u_opt, ev.sol_k1.p_opt, &y_k1);
    const double dV_k1 = delta_value(consts, analysis_k1, 0.0, cfg.cost.lambda);

    PerformanceBounds& b = ev.bounds;
    b.V_k = ev.sol_k.cost;
    b.V_k1 = ev.sol_k1.cost;
    b.delta_V_k = core.dV_k;
    b.delta_V_k1 = dV_k1;
    b.J_delta = ev.J_delta_fom;
    if (ev.J_delta_fom < kDenominatorGuard) {
        b.lower = 1.0;
        b.upper = 1.0;
    } else {
        b.lower = (b.V_k - b.delta_V_k - b.V_k1 - b.delta_V_k1) / ev.J_delta_fom;
        b.upper = std::min((b.V_k + b.delta_V_k - b.V_k1 + b.delta_V_k1) / ev.J_delta_fom, 1.0);
    }
    return ev;
}

double performance_index_fom(FomModel& model, const ControlSignal& u_delta, double t_in,
                             const Eigen::VectorXd& y_in, const RHCConfig& cfg, long* gradient_evals) {
    const int KT = cfg.horizon_steps();
    const int Kd = u_delta.grid.n_steps;
    const double tau = cfg.tau;

    OpenLoopSolution sol1 = solve_open_loop(model, TimeGrid{t_in, tau, KT}, y_in, cfg.cost, cfg.solver);
    Trajectory roll = solve_state(model, u_delta, y_in);
    const double jd = trajectory_cost(model, roll, u_delta, cfg.cost, Kd);
    OpenLoopSolution sol2 =
        solve_open_loop(model, TimeGrid{t_in + Kd * tau, tau, KT}, roll.states.back(), cfg.cost, cfg.solver);
    if (gradient_evals != nullptr) *gradient_evals += sol1.n_gradient_evals + sol2.n_gradient_evals;
    if (jd < kDenominatorGuard) return 1.0;
    return (sol1.cost - sol2.cost) / jd;
}

ClosedLoopResult run_rom_rhc(const RHCConfig& cfg, std::shared_ptr<const Discretization> disc,
                             const Eigen::VectorXd& y0) {
    const auto t_start = Clock::now();
    const int Kd = cfg.delta_steps();
    const int KT = cfg.horizon_steps();
    const int Kinf = cfg.total_steps();
    const double tau = cfg.tau;
    if (!(cfg.alpha_tilde > 0.0 && cfg.alpha_tilde < 1.0))
        throw std::invalid_argument("run_rom_rhc: alpha_tilde must lie in (0,1)");

    FomModel plant(disc, tau);
    const RieszSolver riesz(disc->K_V);
    const EstimatorConstants consts = EstimatorConstants::from(*disc);

    ClosedLoopResult result;
    result.snapped_delta = Kd * tau;
    result.snapped_T = KT * tau;
    result.u_rh = ControlSignal::zero(TimeGrid{0.0, tau, Kinf}, disc->m());
    result.y_rh.grid = TimeGrid{0.0, tau, Kinf};
    result.y_rh.space = SpaceTag::FOM;
    result.y_rh.states.assign(static_cast<std::size_t>(Kinf) + 1, Eigen::VectorXd());
    result.y_rh.states[0] = y0;

    SnapshotSet snapshots;
    std::shared_ptr<const ReducedModel> rm;
    std::optional<RomModel> rom;

    Eigen::VectorXd y_cur = y0;
    std::optional<ControlSignal> warm_k;
    std::optional<ControlSignal> warm_k1;

    // POD model update: two full-order open-loop solves (at t_k from the
    // plant state, at t_{k+1} from the optimal prediction), all four
    // trajectories appended to the cumulative snapshot set.
    auto model_update = [&](int k, double t_k, const std::optional<ControlSignal>& warm_from_reduced) {
        SolveOptions oA = cfg.solver;
        oA.warm_start = warm_from_reduced;
        OpenLoopSolution solA = solve_open_loop(plant, TimeGrid{t_k, tau, KT}, y_cur, cfg.cost, oA);
        result.fom_gradient_evals += solA.n_gradient_evals;
        snapshots.add(solA.y_opt, SnapshotSet::Origin::State, k);
        snapshots.add(solA.p_opt, SnapshotSet::Origin::Adjoint, k);

        const Eigen::VectorXd y_mid = solA.y_opt.states[static_cast<std::size_t>(Kd)];
        const TimeGrid grid_b{t_k + Kd * tau, tau, KT};
        SolveOptions oB = cfg.solver;
        oB.warm_start = shift_control(solA.u_opt, Kd, grid_b);
        OpenLoopSolution solB = solve_open_loop(plant, grid_b, y_mid, cfg.cost, oB);
        result.fom_gradient_evals += solB.n_gradient_evals;

        Trajectory yB = std::move(solB.y_opt);
        Trajectory pB = std::move(solB.p_opt);
        yB.grid.t_in -= Kd * tau;  // time-shift to the common window
        pB.grid.t_in -= Kd * tau;
        snapshots.add(std::move(yB), SnapshotSet::Origin::State, k + 1);
        snapshots.add(std::move(pB), SnapshotSet::Origin::Adjoint, k + 1);

        rm = std::make_shared<const ReducedModel>(pod(snapshots, disc, cfg.pod, &riesz));
        rom.emplace(rm, tau);
        ++result.model_updates;
    };

    std::optional<OpenLoopSolution> cached_sol_k;  // mixed-variant reuse across steps

    int k = 0;
    while (k * Kd < Kinf) {
        const auto t_step = Clock::now();
        const double t_k = k * Kd * tau;
        int attempts = 0;
        IndexEvaluation ev;

        for (;;) {
            if (!rom.has_value()) model_update(k, t_k, warm_k);  // bootstrap: V_r starts empty

            SolveOptions ok = cfg.solver;
            ok.warm_start = warm_k;
            SolveOptions ok1 = cfg.solver;
            ok1.warm_start = warm_k1;

            const OpenLoopSolution* known = cached_sol_k.has_value() ? &*cached_sol_k : nullptr;
            if (cfg.index_variant == IndexVariant::FullRom) {
                ev = performance_bounds_fullrom(*rom, consts, cfg, t_k, y_cur, ok, ok1, known);
            } else {
                ev = performance_bounds_mixed(*rom, plant, consts, cfg, t_k, y_cur, ok, ok1, known);
            }
            cached_sol_k.reset();
            result.rom_gradient_evals += ev.sol_k.n_gradient_evals + ev.sol_k1.n_gradient_evals;

            PerformanceRecord rec;
            rec.k = k;
            rec.t_k = t_k;
            rec.r = rm->r();
            rec.alpha_lower = ev.bounds.lower;
            rec.alpha_upper = ev.bounds.upper;
            rec.upper_vacuous = ev.bounds.upper_vacuous;
            rec.n_model_updates_so_far = result.model_updates;
            rec.J_delta = ev.bounds.J_delta;
            rec.V_T_r = ev.bounds.V_k;
            rec.delta_VT = ev.bounds.delta_V_k;
            rec.fom_gradient_evals_so_far = result.fom_gradient_evals;

            if (ev.bounds.lower >= cfg.alpha_tilde) {
                rec.accepted = true;
                // the applied control's exact index, for validation studies
                if (cfg.validation_mode) {
                    const ControlSignal u_delta = restrict_control(ev.sol_k.u_opt, Kd);
                    rec.alpha_fom = performance_index_fom(plant, u_delta, t_k, y_cur, cfg,
                                                          &result.validation_gradient_evals);
                }
                rec.wall_ms = ms_since(t_step);
                result.records.push_back(rec);
                break;
            }

            rec.accepted = false;
            rec.wall_ms = ms_since(t_step);
            result.records.push_back(rec);
            cached_sol_k.reset();
            ++attempts;
            if (attempts > cfg.max_updates_per_step)
                throw std::runtime_error("run_rom_rhc: performance gate not reached after " +
                                         std::to_string(attempts - 1) + " model updates at step " +
                                         std::to_string(k));
            model_update(k, t_k, ev.sol_k.u_opt);
        }

        // commit the accepted segment on the plant
        const ControlSignal u_delta = restrict_control(ev.sol_k.u_opt, Kd);
        Trajectory roll = (cfg.index_variant == IndexVariant::MixedFom && ev.rollout.grid.n_steps == Kd)
                              ? std::move(ev.rollout)
                              : solve_state(plant, u_delta, y_cur);
        const int commit = std::min(Kd, Kinf - k * Kd);
        for (int i = 0; i < commit; ++i) {
            result.u_rh.values[static_cast<std::size_t>(k * Kd + i)] = u_delta.values[static_cast<std::size_t>(i)];
            result.y_rh.states[static_cast<std::size_t>(k * Kd + i) + 1] = roll.states[static_cast<std::size_t>(i) + 1];
        }
        y_cur = roll.states[static_cast<std::size_t>(Kd)];

        // warm starts / caching for the next sampling instant
        const TimeGrid grid_next{t_k + Kd * tau, tau, KT};
        if (cfg.index_variant == IndexVariant::MixedFom) {
            // the t_{k+1} solve started from exactly this plant state
            cached_sol_k = ev.sol_k1;
            warm_k = ev.sol_k1.u_opt;
        } else {
            warm_k = ev.sol_k1.u_opt;  // reused as warm start only
        }
        warm_k1 = shift_control(ev.sol_k1.u_opt, Kd, TimeGrid{grid_next.t_in + Kd * tau, tau, KT});
        plant.trim_cache(grid_next.global_index(0), grid_next.global_index(0) + KT + Kd);
        ++k;
    }

    finalize_alpha_stats(result, false);
    result.total_cost = trajectory_cost(plant, result.y_rh, result.u_rh, cfg.cost, Kinf);
    result.y_final_H = disc->h_norm(result.y_rh.states.back());
    result.final_r = rm ? rm->r() : 0;
    result.cpu_seconds = ms_since(t_start) / 1e3;
    return result;
}

}  // namespace podrhc
