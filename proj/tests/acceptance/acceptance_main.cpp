// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Desk-scale criteria always run; the full-scale benchmark checks
// run with --full.

#include "podrhc/config.hpp"
#include "podrhc/dynamics.hpp"
#include "podrhc/ocp.hpp"
#include "podrhc/reporting.hpp"
#include "podrhc/rhc.hpp"
#include "podrhc/validate.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

using namespace podrhc;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s  (%s)\n", pass ? "PASS" : "FAIL", criterion, name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

struct Scale {
    int mesh_n;
    int K;
    double T_inf;
};

constexpr Scale kDesk{31, 201, 5.0};
constexpr Scale kFull{61, 801, 10.0};

struct Problem {
    std::shared_ptr<const Discretization> disc;
    Eigen::VectorXd y0;
    double tau;
    double T_inf;
};

Problem make_problem(const Scale& scale) {
    ExperimentConfig cfg;  // calibrated benchmark defaults
    cfg.mesh_n_per_side = scale.mesh_n;
    cfg.K = scale.K;
    cfg.T_inf = scale.T_inf;
    Problem p;
    const Mesh mesh = build_mesh(cfg.mesh_n_per_side);
    p.disc = std::make_shared<const Discretization>(
        build_discretization(mesh, cfg.physical_params(), cfg.layout()));
    p.y0 = cfg.initial_value(mesh);
    p.tau = cfg.tau();
    p.T_inf = cfg.T_inf;
    return p;
}

RHCConfig rhc_config(const Problem& p, double T, double alpha_tilde) {
    ExperimentConfig defaults;
    RHCConfig rc = defaults.rhc_config();
    rc.T_inf = p.T_inf;
    rc.tau = p.tau;
    rc.T = T;
    rc.alpha_tilde = alpha_tilde;
    return rc;
}

const std::vector<std::pair<double, double>> kPairs{{0.8, 0.35}, {1.0, 0.58}, {1.2, 0.73}};

// ---------------------------------------------------------------------------

void criterion_1_rigor() {
    const auto t0 = std::chrono::steady_clock::now();
    const SuiteReport rep = run_rigor_suite(/*seed=*/1, /*n_cases=*/500);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double worst = -1e300;
    for (const auto& c : rep.checks) worst = std::max(worst, c.worst);
    report(1, "estimator rigor over 500 randomized cases", rep.pass() && secs < 120.0,
           "worst violation " + fmt(worst) + " <= 1e-12, " + fmt(secs) + " s");
}

struct StudyPoint {
    int r;
    double e, delta;
};

std::vector<StudyPoint> openloop_sweep(const Problem& p, double T, double lambda,
                                       const std::vector<int>& r_values) {
    const int KT = static_cast<int>(std::llround(T / p.tau));
    const TimeGrid grid{0.0, p.tau, KT};
    CostSpec spec;
    spec.lambda = lambda;
    spec.beta = 1e-4;
    SolveOptions opts;
    opts.abs_tol = 1e-13;
    opts.rel_tol = 1e-13;
    opts.max_iters = 3000;

    FomModel fom(p.disc, p.tau);
    const OpenLoopSolution solF = solve_open_loop(fom, grid, p.y0, spec, opts);

    const RieszSolver riesz(p.disc->K_V);
    SnapshotSet snaps;
    snaps.add(solF.y_opt, SnapshotSet::Origin::State, 0);
    snaps.add(solF.p_opt, SnapshotSet::Origin::Adjoint, 0);
    PodOptions popts;
    popts.r_max = r_values.back();
    popts.energy_eps = 1.0;
    PodBasis pb = pod_basis(snaps, p.disc->K_V, popts);
    const ReducedModel rm_full = build_reduced_model(p.disc, pb.basis, &riesz);
    const EstimatorConstants consts = EstimatorConstants::from(*p.disc);

    std::vector<StudyPoint> out;
    for (int r : r_values) {
        if (r > rm_full.r()) break;
        auto rm = std::make_shared<const ReducedModel>(truncate(rm_full, r));
        RomModel rom(rm, p.tau);
        const OpenLoopSolution solR = solve_open_loop(rom, grid, project_initial(*rm, p.y0), spec, opts);
        const ReducedSolveAnalysis ana =
            analyze_reduced_solve(*rm, solR.y_opt, solR.u_opt, solR.p_opt, &p.y0);
        out.push_back({r, std::abs(solF.cost - solR.cost), delta_value(consts, ana, 0.0, lambda)});
    }
    return out;
}

void criterion_2_desk(const Problem& desk) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int> rs;
    for (int r = 5; r <= 40; r += 5) rs.push_back(r);
    const auto pts = openloop_sweep(desk, 1.0, 1e-3, rs);

    bool ok = pts.size() == rs.size();
    std::string why = ok ? "" : "sweep stopped at rank " + std::to_string(pts.size() * 5);
    double env_e = 1e300, env_d = 1e300;
    for (const auto& q : pts) {
        if (q.e > 3.0 * env_e || q.delta > 3.0 * env_d) {
            ok = false;
            why = "non-monotone at r=" + std::to_string(q.r);
        }
        env_e = std::min(env_e, q.e);
        env_d = std::min(env_d, q.delta);
    }
    if (ok) {
        const double dec_e = pts.front().e / pts.back().e;
        const double dec_d = pts.front().delta / pts.back().delta;
        ok = dec_e >= 1e6 && dec_d >= 1e6;
        why = "decay e_VT x" + fmt(dec_e) + ", Delta_VT x" + fmt(dec_d);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 600.0;
    report(2, "open-loop error/estimator decay over r=5..40 (desk)", ok, why + ", " + fmt(secs) + " s");
}

void criterion_2_full(const Problem& full) {
    const auto pts = openloop_sweep(full, 0.8, 1.0, {30});
    bool ok = !pts.empty();
    std::string why = "rank below 30";
    if (ok) {
        const double e = pts.front().e, d = pts.front().delta;
        ok = e <= 1e-10 && d >= 1e-11 && d <= 1e-8;
        why = "e_VT " + fmt(e) + " <= 1e-10, Delta_VT " + fmt(d) + " in [1e-11, 1e-8]";
    }
    report(2, "value-function estimate at r=30 (full, T=0.8, lambda=1)", ok, why);
}

void criterion_3_desk(const Problem& desk, const ClosedLoopResult& rom_desk) {
    std::vector<double> ts, norms;
    const int Kd = static_cast<int>(std::llround(rom_desk.snapped_delta / desk.tau));
    for (int k = 0; k * Kd <= rom_desk.y_rh.grid.n_steps; ++k) {
        ts.push_back(k * rom_desk.snapped_delta);
        norms.push_back(desk.disc->h_norm(rom_desk.y_rh.states[static_cast<std::size_t>(k * Kd)]));
    }
    const double slope = log_linear_slope(ts, norms);
    const double ratio = rom_desk.y_final_H / desk.disc->h_norm(desk.y0);
    report(3, "closed-loop decay (desk ROM-RHC, T=0.8, gate 0.35)", slope < -0.1 && ratio <= 1e-1,
           "slope " + fmt(slope) + " < -0.1, final/initial " + fmt(ratio) + " <= 0.1");
}

void criterion_3_full(const Problem&, const ClosedLoopResult& rom_full) {
    const double target = 2.2e-2;
    const double v = rom_full.y_final_H;
    report(3, "final state norm (full ROM-RHC, T=0.8)", v >= target / 3.0 && v <= target * 3.0,
           "|y(T_inf)|_H = " + fmt(v) + " within 3x of " + fmt(target));
}

void criterion_4(const char* tag, const Problem& p, const std::vector<ClosedLoopResult>& rom_runs) {
    bool ok = true;
    std::string detail;
    SolveOptions opts;
    opts.abs_tol = 1e-13;
    opts.rel_tol = 1e-13;
    opts.max_iters = 3000;
    FomModel fom(p.disc, p.tau);
    for (std::size_t i = 0; i < kPairs.size(); ++i) {
        const auto [T, gate] = kPairs[i];
        const int KT = static_cast<int>(std::llround(T / p.tau));
        CostSpec spec = ExperimentConfig{}.cost_spec();
        const OpenLoopSolution sol = solve_open_loop(fom, TimeGrid{0.0, p.tau, KT}, p.y0, spec, opts);
        const double lhs = gate * rom_runs[i].total_cost;
        const double rhs = sol.cost + 1e-8;
        ok = ok && lhs <= rhs;
        detail += (i ? "; " : "") + fmt(lhs) + " <= " + fmt(sol.cost);
        fom.trim_cache(0, 0);
    }
    report(4, (std::string("certified suboptimality alpha~*J <= V_T(0,y0) (") + tag + ")").c_str(), ok,
           detail);
}

void criterion_5(const Problem& desk) {
    bool ok = true;
    std::string detail;
    for (IndexVariant variant : {IndexVariant::FullRom, IndexVariant::MixedFom}) {
        RHCConfig rc = rhc_config(desk, 0.8, 0.35);
        rc.index_variant = variant;
        rc.validation_mode = true;
        const ClosedLoopResult res = run_rom_rhc(rc, desk.disc, desk.y0);
        double worst = -1e300;
        int n = 0;
        for (const auto& rec : res.records) {
            if (!rec.accepted || !rec.alpha_fom.has_value()) continue;
            worst = std::max(worst, rec.alpha_lower - *rec.alpha_fom);
            worst = std::max(worst, *rec.alpha_fom - rec.alpha_upper);
            ++n;
        }
        ok = ok && n > 0 && worst <= 1e-9;
        detail += std::string(variant == IndexVariant::FullRom ? "fullrom" : "mixed") + " worst " +
                  fmt(worst) + " over " + std::to_string(n) + " steps; ";
    }
    report(5, "index bounds sandwich the exact index (desk, both variants)", ok, detail);
}

void criterion_6(const Problem& desk, const ClosedLoopResult& rom_desk) {
    RHCConfig rc = rhc_config(desk, 0.8, 0.35);
    const ClosedLoopResult fom = run_fom_rhc(rc, desk.disc, desk.y0);

    const double e_J = std::abs(rom_desk.total_cost - fom.total_cost) / fom.total_cost;
    const double e_u = control_l2_distance(rom_desk.u_rh, fom.u_rh) / fom.u_rh.l2_norm();
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= fom.y_rh.grid.n_steps; ++k) {
        const Eigen::VectorXd d =
            rom_desk.y_rh.states[static_cast<std::size_t>(k)] - fom.y_rh.states[static_cast<std::size_t>(k)];
        num += fom.y_rh.grid.tau * d.dot(desk.disc->M * d);
        den += fom.y_rh.grid.tau * fom.y_rh.states[static_cast<std::size_t>(k)].dot(
                                       desk.disc->M * fom.y_rh.states[static_cast<std::size_t>(k)]);
    }
    const double e_y = std::sqrt(num / den);

    int last_update_step = 0;
    for (const auto& rec : rom_desk.records)
        if (!rec.accepted) last_update_step = std::max(last_update_step, rec.k);
    const bool updates_ok = rom_desk.model_updates <= 5 && last_update_step < 5;

    report(6, "ROM/FOM closed-loop agreement (desk)",
           e_J <= 1e-4 && e_u <= 1e-4 && e_y <= 1e-4 && updates_ok,
           "e_J " + fmt(e_J) + ", e_u " + fmt(e_u) + ", e_y " + fmt(e_y) + ", updates " +
               std::to_string(rom_desk.model_updates) + " by step " + std::to_string(last_update_step));
}

void criterion_7(const ClosedLoopResult& fom_full, const ClosedLoopResult& rom_full) {
    const double speedup = fom_full.cpu_seconds / rom_full.cpu_seconds;
    const double grads = static_cast<double>(fom_full.fom_gradient_evals) /
                         static_cast<double>(std::max<long>(1, rom_full.fom_gradient_evals));
    report(7, "full-scale speed-up", speedup >= 2.0 && grads >= 5.0,
           "wall x" + fmt(speedup) + " >= 2, FOM-gradient x" + fmt(grads) + " >= 5 (" +
               std::to_string(fom_full.fom_gradient_evals) + " -> " +
               std::to_string(rom_full.fom_gradient_evals) + ")");
}

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const char* suite : {"gradients", "prox", "dualnorm", "equivalence"}) {
        const SuiteReport rep = run_validate_suite(suite, 1);
        ok = ok && rep.pass();
        if (!rep.pass()) detail += std::string(suite) + " failed; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 300.0;
    report(8, "oracle suites (gradients, prox, dualnorm, equivalence)", ok,
           detail + fmt(secs) + " s < 300 s");
}

void criterion_9(const ClosedLoopResult& rom_full) {
    double r1 = 0.0, r13 = 0.0, others = 0.0;
    for (const auto& u : rom_full.u_rh.values) {
        r1 = std::max(r1, std::abs(u(0)));
        r13 = std::max(r13, std::abs(u(12)));
        others = std::max(others, u.cwiseAbs().maxCoeff());
    }
    report(9, "actuators R1 and R13 stay inactive (full ROM-RHC)", r1 == 0.0 && r13 == 0.0 && others > 0.0,
           "max|u_1| = " + fmt(r1) + ", max|u_13| = " + fmt(r13) + ", max|u| = " + fmt(others));
}

}  // namespace

int main(int argc, char** argv) {
    bool full = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--full") == 0) full = true;

    std::printf("acceptance suite (%s scale)\n", full ? "desk + full" : "desk");

    criterion_1_rigor();

    const Problem desk = make_problem(kDesk);
    criterion_2_desk(desk);

    // desk closed loops at the three published (T, alpha~) pairs
    std::vector<ClosedLoopResult> rom_desk_runs;
    for (const auto& [T, gate] : kPairs)
        rom_desk_runs.push_back(run_rom_rhc(rhc_config(desk, T, gate), desk.disc, desk.y0));
    criterion_3_desk(desk, rom_desk_runs.front());
    criterion_4("desk", desk, rom_desk_runs);
    criterion_5(desk);
    criterion_6(desk, rom_desk_runs.front());
    criterion_8();

    if (full) {
        const Problem fullp = make_problem(kFull);
        criterion_2_full(fullp);
        std::vector<ClosedLoopResult> rom_full_runs;
        for (const auto& [T, gate] : kPairs)
            rom_full_runs.push_back(run_rom_rhc(rhc_config(fullp, T, gate), fullp.disc, fullp.y0));
        criterion_3_full(fullp, rom_full_runs.front());
        criterion_4("full", fullp, rom_full_runs);
        const ClosedLoopResult fom_full = run_fom_rhc(rhc_config(fullp, 0.8, 0.35), fullp.disc, fullp.y0);
        criterion_7(fom_full, rom_full_runs.front());
        criterion_9(rom_full_runs.front());
    } else {
        std::printf("[SKIP] criteria 2(full), 3(full), 4(full), 7, 9 need --full\n");
    }

    std::printf("%s: %d failure(s)\n", g_failures == 0 ? "OK" : "FAILED", g_failures);
    return g_failures == 0 ? 0 : 1;
}
