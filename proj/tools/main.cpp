#include "podrhc/config.hpp"
#include "podrhc/dynamics.hpp"
#include "podrhc/ocp.hpp"
#include "podrhc/reporting.hpp"
#include "podrhc/rhc.hpp"
#include "podrhc/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace podrhc;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg = parse_config_file(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed_set) cfg.seed = args.seed;
    return cfg;
}

std::shared_ptr<const Discretization> build_problem(const ExperimentConfig& cfg) {
    const Mesh mesh = build_mesh(cfg.mesh_n_per_side);
    return std::make_shared<const Discretization>(
        build_discretization(mesh, cfg.physical_params(), cfg.layout(), cfg.quadrature()));
}

void write_resolved(const ExperimentConfig& cfg, const Discretization& disc, const fs::path& dir) {
    std::ofstream out(dir / "resolved.cfg");
    out << resolved_config_text(cfg, disc);
}

void export_matrices_if_requested(const ExperimentConfig& cfg, const Discretization& disc, const fs::path& dir) {
    if (!cfg.export_matrices) return;
    const fs::path mdir = dir / "matrices";
    fs::create_directories(mdir);
    write_matrix_market(disc.M, (mdir / "M.mtx").string());
    write_matrix_market(disc.K_V, (mdir / "K_V.mtx").string());
    for (std::size_t q = 0; q < disc.A_q.size(); ++q)
        write_matrix_market(disc.A_q[q], (mdir / ("A" + std::to_string(q + 1) + ".mtx")).string());
    write_matrix_market(disc.B, (mdir / "B.mtx").string());
}

// ---------------------------------------------------------------------------
// openloop-study
// ---------------------------------------------------------------------------

int cmd_openloop_study(const CommonArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    auto disc = build_problem(cfg);
    const double tau = cfg.tau();
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    write_resolved(cfg, *disc, out_dir);
    export_matrices_if_requested(cfg, *disc, out_dir);
    const Eigen::VectorXd y0 = cfg.initial_value(disc->mesh);
    const EstimatorConstants consts = EstimatorConstants::from(*disc);
    const std::string resolved = resolved_config_text(cfg, *disc);

    struct Cell {
        double T;
        double lambda;
        std::vector<OpenLoopStudyRow> rows;
        std::string error;
    };
    std::vector<Cell> cells;
    for (double T : cfg.study_T)
        for (double lam : cfg.study_lambda) cells.push_back({T, lam, {}, {}});

    int r_request = 0;
    for (int r : cfg.study_r) r_request = std::max(r_request, r);

    auto run_cell = [&](Cell& cell) {
        char tag[64];
        std::snprintf(tag, sizeof(tag), "T%.6g_lambda%.6g", cell.T, cell.lambda);
        try {
            const int KT = std::max(1, static_cast<int>(std::llround(cell.T / tau)));
            const TimeGrid grid{0.0, tau, KT};
            CostSpec spec = cfg.cost_spec();
            spec.lambda = cell.lambda;
            SolveOptions opts = cfg.solve_options();

            FomModel fom(disc, tau);
            const OpenLoopSolution solF = solve_open_loop(fom, grid, y0, spec, opts);

            const RieszSolver riesz(disc->K_V);
            PodBasis pb;
            bool loaded = false;
            std::string cache_path, cache_key;
            if (!cfg.rom_cache_file.empty()) {
                cache_path = cfg.rom_cache_file + "." + tag + ".bin";
                char keybuf[32];
                std::snprintf(keybuf, sizeof(keybuf), "%016llx",
                              static_cast<unsigned long long>(fnv1a(resolved + tag)));
                cache_key = keybuf;
                loaded = load_reduced_basis(cache_path, cache_key, &pb);
            }
            if (!loaded) {
                SnapshotSet snaps;
                snaps.add(solF.y_opt, SnapshotSet::Origin::State, 0);
                snaps.add(solF.p_opt, SnapshotSet::Origin::Adjoint, 0);
                PodOptions popts;
                popts.r_max = std::min(r_request, disc->n());
                popts.energy_eps = 1.0;
                pb = pod_basis(snaps, disc->K_V, popts);
                if (!cache_path.empty()) save_reduced_basis(cache_path, cache_key, pb);
            }
            ReducedModel rm_full = build_reduced_model(disc, pb.basis, &riesz);
            rm_full.pod_eigvals = pb.eigvals;

            for (int r : cfg.study_r) {
                if (r > rm_full.r()) continue;  // snapshot set has lower numerical rank
                auto rm = std::make_shared<const ReducedModel>(truncate(rm_full, r));
                RomModel rom(rm, tau);
                const OpenLoopSolution solR = solve_open_loop(rom, grid, project_initial(*rm, y0), spec, opts);
                const ReducedSolveAnalysis ana =
                    analyze_reduced_solve(*rm, solR.y_opt, solR.u_opt, solR.p_opt, &y0);
                const double dvt = delta_value(consts, ana, 0.0, spec.lambda);
                const double e = std::abs(solF.cost - solR.cost);
                cell.rows.push_back({cell.T, cell.lambda, r, e, dvt, dvt > 0.0 ? e / dvt : 0.0});
            }

            const fs::path cell_dir = out_dir / "cells";
            fs::create_directories(cell_dir);
            write_openloop_study_csv((cell_dir / (std::string(tag) + ".csv")).string(), cell.rows);
        } catch (const std::exception& e) {
            cell.error = std::string(tag) + ": " + e.what();
        }
    };

    const int n_threads = std::max(1, args.threads);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                run_cell(cells[i]);
            }
        });
    }
    for (auto& t : pool) t.join();

    std::vector<OpenLoopStudyRow> rows;
    for (const auto& cell : cells) {
        if (!cell.error.empty()) {
            std::cerr << "openloop-study failed in cell " << cell.error << "\n";
            return 1;
        }
        rows.insert(rows.end(), cell.rows.begin(), cell.rows.end());
    }
    write_openloop_study_csv((out_dir / "openloop_study.csv").string(), rows);
    std::cout << "openloop-study: " << rows.size() << " rows -> " << (out_dir / "openloop_study.csv") << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// rhc
// ---------------------------------------------------------------------------

int cmd_rhc(const CommonArgs& args, const std::string& mode) {
    const ExperimentConfig cfg = load_config(args);
    auto disc = build_problem(cfg);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    write_resolved(cfg, *disc, out_dir);
    export_matrices_if_requested(cfg, *disc, out_dir);

    const Eigen::VectorXd y0 = cfg.initial_value(disc->mesh);
    const RHCConfig rc = cfg.rhc_config();
    const ClosedLoopResult result =
        (mode == "fom") ? run_fom_rhc(rc, disc, y0) : run_rom_rhc(rc, disc, y0);

    write_rhc_log_csv((out_dir / "rhc_log.csv").string(), result);
    write_decay_csv((out_dir / "decay.csv").string(), result, *disc, rc.cost);
    write_controls_csv((out_dir / "controls.csv").string(), result);
    write_summary_json((out_dir / "summary.json").string(), result, mode, cfg.rhc_T, cfg.rhc_alpha_tilde,
                       cfg.index_variant);
    write_plant_binary((out_dir / "plant_state.bin").string(), result.y_rh);

    std::cout << mode << "-rhc: J_Tinf = " << format_g17(result.total_cost)
              << "  |y(T_inf)|_H = " << format_g17(result.y_final_H) << "  alpha(min/avg/max) = "
              << format_g17(result.alpha_min) << "/" << format_g17(result.alpha_avg) << "/"
              << format_g17(result.alpha_max) << "\n";
    std::cout << "  fom_gradient_evals = " << result.fom_gradient_evals
              << "  model_updates = " << result.model_updates << "  r = " << result.final_r
              << "  cpu_s = " << format_g17(result.cpu_seconds) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

nlohmann::json load_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    nlohmann::json j;
    in >> j;
    return j;
}

ControlSignal load_controls_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) row.push_back(std::stod(item));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw std::runtime_error("controls file too short: " + p.string());
    ControlSignal u;
    const int K = static_cast<int>(rows.size());
    const int m = static_cast<int>(rows.front().size()) - 1;
    const double tau = rows[1][0] - rows[0][0];
    u.grid = TimeGrid{rows[0][0] - tau, tau, K};
    for (const auto& row : rows) {
        Eigen::VectorXd v(m);
        for (int i = 0; i < m; ++i) v(i) = row[static_cast<std::size_t>(i) + 1];
        u.values.push_back(std::move(v));
    }
    return u;
}

int cmd_compare(const CommonArgs& args, const std::string& fom_dir, const std::string& rom_dir) {
    const ExperimentConfig cfg = load_config(args);
    auto disc = build_problem(cfg);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    write_resolved(cfg, *disc, out_dir);

    const auto sf = load_json(fs::path(fom_dir) / "summary.json");
    const auto sr = load_json(fs::path(rom_dir) / "summary.json");
    const ControlSignal uf = load_controls_csv(fs::path(fom_dir) / "controls.csv");
    const ControlSignal ur = load_controls_csv(fs::path(rom_dir) / "controls.csv");
    const Trajectory yf = read_plant_binary((fs::path(fom_dir) / "plant_state.bin").string());
    const Trajectory yr = read_plant_binary((fs::path(rom_dir) / "plant_state.bin").string());

    const double Jf = sf.at("J_Tinf").get<double>();
    const double Jr = sr.at("J_Tinf").get<double>();
    const double e_J = std::abs(Jr - Jf) / std::abs(Jf);
    const double e_u = control_l2_distance(uf, ur) / uf.l2_norm();

    double num = 0.0, den = 0.0;
    for (int k = 1; k <= yf.grid.n_steps; ++k) {
        const Eigen::VectorXd d = yf.states[static_cast<std::size_t>(k)] - yr.states[static_cast<std::size_t>(k)];
        num += yf.grid.tau * d.dot(disc->M * d);
        den += yf.grid.tau *
               yf.states[static_cast<std::size_t>(k)].dot(disc->M * yf.states[static_cast<std::size_t>(k)]);
    }
    const double e_y = std::sqrt(num / den);

    const double alpha_f = sf.at("alpha_min").get<double>();
    const double alpha_r = sr.at("alpha_min").get<double>();
    const double e_alpha = std::abs(alpha_r - alpha_f) / std::abs(alpha_f);

    const double speedup = sf.at("cpu_seconds").get<double>() / std::max(1e-12, sr.at("cpu_seconds").get<double>());
    const double grad_ratio = sf.at("fom_gradient_evals").get<double>() /
                              std::max(1.0, sr.at("fom_gradient_evals").get<double>());

    nlohmann::json j;
    j["e_J"] = e_J;
    j["e_u"] = e_u;
    j["e_y"] = e_y;
    j["e_alpha"] = e_alpha;
    j["speedup_wall"] = speedup;
    j["fom_gradient_eval_ratio"] = grad_ratio;
    j["J_fom"] = Jf;
    j["J_rom"] = Jr;
    std::ofstream(out_dir / "compare.json") << j.dump(2) << "\n";

    std::cout << "compare: e_J = " << format_g17(e_J) << "  e_u = " << format_g17(e_u)
              << "  e_y = " << format_g17(e_y) << "  e_alpha = " << format_g17(e_alpha) << "\n";
    std::cout << "  speed-up (wall) = " << format_g17(speedup)
              << "  FOM-gradient ratio = " << format_g17(grad_ratio) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& suite, std::uint64_t seed) {
    std::vector<std::string> suites;
    if (suite == "all")
        suites = validate_suite_names();
    else
        suites.push_back(suite);

    bool all_pass = true;
    for (const auto& name : suites) {
        const SuiteReport report = run_validate_suite(name, seed);
        for (const auto& c : report.checks) {
            std::printf("[%s] %s/%s  worst=%.3e  tol=%.3e%s%s\n", c.pass ? "PASS" : "FAIL",
                        report.suite.c_str(), c.name.c_str(), c.worst, c.tol, c.detail.empty() ? "" : "  ",
                        c.detail.c_str());
            if (!c.pass) {
                all_pass = false;
            }
        }
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"podrhc: receding horizon control of parabolic systems with certified POD reduced models"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string mode = "fom";
    std::string fom_dir, rom_dir, suite;

    auto add_common = [&](CLI::App* sub, bool config_required = true) {
        auto* copt = sub->add_option("--config", args.config_path, "experiment configuration file");
        if (config_required) copt->required();
        sub->add_option("--out", args.out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", args.seed, "RNG seed (overrides config)")->each([&](const std::string&) {
            args.seed_set = true;
        });
        sub->add_option("--threads", args.threads, "worker threads for sweeps")->default_val(1);
    };

    CLI::App* study = app.add_subcommand("openloop-study", "open-loop value-function error study over (T, lambda, r)");
    add_common(study);
    CLI::App* rhc = app.add_subcommand("rhc", "run the closed receding-horizon loop");
    add_common(rhc);
    rhc->add_option("--mode", mode, "fom | rom")->required()->check(CLI::IsMember({"fom", "rom"}));
    CLI::App* cmp = app.add_subcommand("compare", "compare a FOM-RHC and a ROM-RHC output directory");
    add_common(cmp);
    cmp->add_option("--fom", fom_dir, "FOM-RHC output directory")->required();
    cmp->add_option("--rom", rom_dir, "ROM-RHC output directory")->required();
    CLI::App* val = app.add_subcommand("validate", "run an oracle suite");
    val->add_option("suite", suite, "gradients | prox | dualnorm | rigor | sandwich | equivalence | all")
        ->required();
    val->add_option("--seed", args.seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (study->parsed()) return cmd_openloop_study(args);
        if (rhc->parsed()) return cmd_rhc(args, mode);
        if (cmp->parsed()) return cmd_compare(args, fom_dir, rom_dir);
        if (val->parsed()) return cmd_validate(suite, args.seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
