#include "podrhc/reporting.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace podrhc {

std::string format_g17(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {
std::ofstream open_or_throw(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    return out;
}
}  // namespace

void write_rhc_log_csv(const std::string& path, const ClosedLoopResult& result) {
    auto out = open_or_throw(path);
    out << "# podrhc csv v1 rhc_log\n";
    out << "k,t_k,r,alpha_lower,alpha_upper,alpha_fom,accepted,J_delta,V_T_r,delta_VT,fom_grads,wall_ms\n";
    for (const auto& rec : result.records) {
        out << rec.k << "," << format_g17(rec.t_k) << "," << rec.r << "," << format_g17(rec.alpha_lower) << ","
            << format_g17(rec.alpha_upper) << ",";
        if (rec.alpha_fom.has_value()) out << format_g17(*rec.alpha_fom);
        out << "," << (rec.accepted ? 1 : 0) << "," << format_g17(rec.J_delta) << "," << format_g17(rec.V_T_r)
            << "," << format_g17(rec.delta_VT) << "," << rec.fom_gradient_evals_so_far << ","
            << format_g17(rec.wall_ms) << "\n";
    }
}

void write_decay_csv(const std::string& path, const ClosedLoopResult& result, const Discretization& disc,
                     const CostSpec& cost) {
    auto out = open_or_throw(path);
    out << "# podrhc csv v1 decay\n";
    out << "t,norm_H,running_cost\n";
    const auto& y = result.y_rh;
    for (int k = 0; k <= y.grid.n_steps; ++k) {
        const auto& yk = y.states[static_cast<std::size_t>(k)];
        const double nh = disc.h_norm(yk);
        double ell = 0.5 * nh * nh;
        if (k >= 1) {
            const auto& uk = result.u_rh.values[static_cast<std::size_t>(k - 1)];
            ell += 0.5 * cost.lambda * uk.squaredNorm() + cost.g_value(uk);
        }
        out << format_g17(y.grid.time_at(k)) << "," << format_g17(nh) << "," << format_g17(ell) << "\n";
    }
}

void write_controls_csv(const std::string& path, const ClosedLoopResult& result) {
    auto out = open_or_throw(path);
    out << "# podrhc csv v1 controls\n";
    const int m = result.u_rh.dim();
    out << "t";
    for (int i = 1; i <= m; ++i) out << ",u" << i;
    out << "\n";
    for (int k = 0; k < result.u_rh.grid.n_steps; ++k) {
        out << format_g17(result.u_rh.grid.time_at(k + 1));
        const auto& uk = result.u_rh.values[static_cast<std::size_t>(k)];
        for (int i = 0; i < m; ++i) out << "," << format_g17(uk(i));
        out << "\n";
    }
}

void write_summary_json(const std::string& path, const ClosedLoopResult& result, const std::string& mode,
                        double T, double alpha_tilde, const std::string& index_variant) {
    nlohmann::json j;
    j["mode"] = mode;
    j["T"] = T;
    j["alpha_tilde"] = alpha_tilde;
    j["index_variant"] = index_variant;
    j["snapped_delta"] = result.snapped_delta;
    j["snapped_T"] = result.snapped_T;
    j["J_Tinf"] = result.total_cost;
    j["y_final_H"] = result.y_final_H;
    j["alpha_min"] = result.alpha_min;
    j["alpha_avg"] = result.alpha_avg;
    j["alpha_max"] = result.alpha_max;
    j["fom_gradient_evals"] = result.fom_gradient_evals;
    j["rom_gradient_evals"] = result.rom_gradient_evals;
    j["validation_gradient_evals"] = result.validation_gradient_evals;
    j["model_updates"] = result.model_updates;
    j["final_r"] = result.final_r;
    j["cpu_seconds"] = result.cpu_seconds;
    j["rhc_steps"] = 0;
    int accepted = 0;
    for (const auto& rec : result.records) accepted += rec.accepted ? 1 : 0;
    j["rhc_steps"] = accepted;
    auto out = open_or_throw(path);
    out << j.dump(2) << "\n";
}

void write_plant_binary(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    const std::int64_t n = traj.states.empty() ? 0 : traj.states.front().size();
    const std::int64_t K = traj.grid.n_steps;
    const double t_in = traj.grid.t_in;
    const double tau = traj.grid.tau;
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&K), sizeof(K));
    out.write(reinterpret_cast<const char*>(&t_in), sizeof(t_in));
    out.write(reinterpret_cast<const char*>(&tau), sizeof(tau));
    for (const auto& s : traj.states)
        out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * s.size()));
}

Trajectory read_plant_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::int64_t n = 0, K = 0;
    double t_in = 0.0, tau = 0.0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&K), sizeof(K));
    in.read(reinterpret_cast<char*>(&t_in), sizeof(t_in));
    in.read(reinterpret_cast<char*>(&tau), sizeof(tau));
    if (!in || n <= 0 || K < 0) throw std::runtime_error("corrupt trajectory file " + path);
    Trajectory traj;
    traj.grid = TimeGrid{t_in, tau, static_cast<int>(K)};
    traj.states.assign(static_cast<std::size_t>(K) + 1, Eigen::VectorXd(n));
    for (auto& s : traj.states) {
        in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * s.size()));
        if (!in) throw std::runtime_error("corrupt trajectory file " + path);
    }
    return traj;
}

void write_openloop_study_csv(const std::string& path, const std::vector<OpenLoopStudyRow>& rows) {
    auto out = open_or_throw(path);
    out << "# podrhc csv v1 openloop_study\n";
    out << "T,lambda,r,e_VT,delta_VT,effectivity\n";
    for (const auto& row : rows) {
        out << format_g17(row.T) << "," << format_g17(row.lambda) << "," << row.r << "," << format_g17(row.e_VT)
            << "," << format_g17(row.delta_VT) << "," << format_g17(row.effectivity) << "\n";
    }
}

double log_linear_slope(const std::vector<double>& t, const std::vector<double>& values) {
    if (t.size() != values.size() || t.size() < 2)
        throw std::invalid_argument("log_linear_slope: need at least two samples");
    double st = 0, sl = 0, stt = 0, stl = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (values[i] <= 0.0) continue;  // log undefined; skip exact zeros
        const double l = std::log(values[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("log_linear_slope: not enough positive samples");
    return (n * stl - st * sl) / (n * stt - st * st);
}

}  // namespace podrhc
