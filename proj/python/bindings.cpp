#include "podrhc/certify.hpp"
#include "podrhc/config.hpp"
#include "podrhc/dynamics.hpp"
#include "podrhc/ocp.hpp"
#include "podrhc/rhc.hpp"
#include "podrhc/validate.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace podrhc;

namespace {

// numpy layout: trajectories as (K+1) x dim arrays, controls as K x m
Eigen::MatrixXd trajectory_to_array(const Trajectory& t) {
    if (t.states.empty()) return {};
    Eigen::MatrixXd out(static_cast<Eigen::Index>(t.states.size()), t.states.front().size());
    for (std::size_t k = 0; k < t.states.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = t.states[k];
    return out;
}

Trajectory trajectory_from_array(const TimeGrid& grid, const Eigen::MatrixXd& a, SpaceTag tag) {
    if (a.rows() != grid.n_steps + 1) throw std::invalid_argument("trajectory array must have n_steps+1 rows");
    Trajectory t;
    t.grid = grid;
    t.space = tag;
    for (Eigen::Index k = 0; k < a.rows(); ++k) t.states.push_back(a.row(k));
    return t;
}

Eigen::MatrixXd control_to_array(const ControlSignal& u) {
    if (u.values.empty()) return {};
    Eigen::MatrixXd out(static_cast<Eigen::Index>(u.values.size()), u.values.front().size());
    for (std::size_t k = 0; k < u.values.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = u.values[k];
    return out;
}

ControlSignal control_from_array(const TimeGrid& grid, const Eigen::MatrixXd& a) {
    if (a.rows() != grid.n_steps) throw std::invalid_argument("control array must have n_steps rows");
    ControlSignal u;
    u.grid = grid;
    for (Eigen::Index k = 0; k < a.rows(); ++k) u.values.push_back(a.row(k));
    return u;
}

py::dict solution_to_dict(const OpenLoopSolution& sol) {
    py::dict d;
    d["u"] = control_to_array(sol.u_opt);
    d["y"] = trajectory_to_array(sol.y_opt);
    d["p"] = trajectory_to_array(sol.p_opt);
    d["cost"] = sol.cost;
    d["converged"] = sol.converged;
    d["iterations"] = sol.iterations;
    d["gradient_evals"] = sol.n_gradient_evals;
    d["residual"] = sol.first_order_residual;
    return d;
}

py::dict result_to_dict(const ClosedLoopResult& r) {
    py::dict d;
    d["u"] = control_to_array(r.u_rh);
    d["y"] = trajectory_to_array(r.y_rh);
    d["J"] = r.total_cost;
    d["y_final_H"] = r.y_final_H;
    d["alpha_min"] = r.alpha_min;
    d["alpha_avg"] = r.alpha_avg;
    d["alpha_max"] = r.alpha_max;
    d["fom_gradient_evals"] = r.fom_gradient_evals;
    d["rom_gradient_evals"] = r.rom_gradient_evals;
    d["model_updates"] = r.model_updates;
    d["final_r"] = r.final_r;
    d["cpu_seconds"] = r.cpu_seconds;
    d["snapped_delta"] = r.snapped_delta;
    d["snapped_T"] = r.snapped_T;
    py::list recs;
    for (const auto& rec : r.records) {
        py::dict e;
        e["k"] = rec.k;
        e["t"] = rec.t_k;
        e["r"] = rec.r;
        e["alpha_lower"] = rec.alpha_lower;
        e["alpha_upper"] = rec.alpha_upper;
        if (rec.alpha_fom) e["alpha_fom"] = *rec.alpha_fom;
        e["accepted"] = rec.accepted;
        e["J_delta"] = rec.J_delta;
        e["V_T_r"] = rec.V_T_r;
        e["delta_VT"] = rec.delta_VT;
        recs.append(e);
    }
    d["records"] = recs;
    return d;
}

std::tuple<Eigen::VectorXi, Eigen::VectorXi, Eigen::VectorXd> sparse_to_coo(const SpMat& A) {
    Eigen::VectorXi rows(A.nonZeros()), cols(A.nonZeros());
    Eigen::VectorXd vals(A.nonZeros());
    Eigen::Index idx = 0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            rows(idx) = static_cast<int>(it.row());
            cols(idx) = static_cast<int>(it.col());
            vals(idx) = it.value();
            ++idx;
        }
    return {rows, cols, vals};
}

template <class Model>
void bind_model_ops(py::module_& m, SpaceTag space) {
    m.def(
        "solve_state",
        [](Model& model, const TimeGrid& grid, const Eigen::MatrixXd& u, const Eigen::VectorXd& y_in) {
            return trajectory_to_array(solve_state(model, control_from_array(grid, u), y_in));
        },
        py::arg("model"), py::arg("grid"), py::arg("u"), py::arg("y_in"));
    m.def(
        "solve_adjoint",
        [space](Model& model, const TimeGrid& grid, const Eigen::MatrixXd& y_data) {
            return trajectory_to_array(solve_adjoint(model, trajectory_from_array(grid, y_data, space)));
        },
        py::arg("model"), py::arg("grid"), py::arg("y_data"));
    m.def(
        "evaluate_cost",
        [](Model& model, const TimeGrid& grid, const Eigen::MatrixXd& u, const Eigen::VectorXd& y_in,
           const CostSpec& spec) { return evaluate_cost(model, control_from_array(grid, u), y_in, spec); },
        py::arg("model"), py::arg("grid"), py::arg("u"), py::arg("y_in"), py::arg("cost"));
    m.def(
        "smooth_gradient",
        [](Model& model, const TimeGrid& grid, const Eigen::MatrixXd& u, const Eigen::VectorXd& y_in,
           const CostSpec& spec) {
            const auto g = smooth_gradient(model, control_from_array(grid, u), y_in, spec);
            Eigen::MatrixXd out(static_cast<Eigen::Index>(g.size()), g.front().size());
            for (std::size_t k = 0; k < g.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = g[k];
            return out;
        },
        py::arg("model"), py::arg("grid"), py::arg("u"), py::arg("y_in"), py::arg("cost"));
    m.def(
        "solve_open_loop",
        [](Model& model, const TimeGrid& grid, const Eigen::VectorXd& y_in, const CostSpec& spec,
           double abs_tol, double rel_tol, int max_iters) {
            SolveOptions opts;
            opts.abs_tol = abs_tol;
            opts.rel_tol = rel_tol;
            opts.max_iters = max_iters;
            return solution_to_dict(solve_open_loop(model, grid, y_in, spec, opts));
        },
        py::arg("model"), py::arg("grid"), py::arg("y_in"), py::arg("cost"), py::arg("abs_tol") = 1e-13,
        py::arg("rel_tol") = 1e-13, py::arg("max_iters") = 2000);
}

}  // namespace

PYBIND11_MODULE(podrhc, m) {
    m.doc() = "Receding horizon control of parabolic systems with certified POD reduced models";

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init([](double t_in, double tau, int n_steps) { return TimeGrid{t_in, tau, n_steps}; }),
             py::arg("t_in"), py::arg("tau"), py::arg("n_steps"))
        .def_readonly("t_in", &TimeGrid::t_in)
        .def_readonly("tau", &TimeGrid::tau)
        .def_readonly("n_steps", &TimeGrid::n_steps);

    py::class_<Mesh>(m, "Mesh")
        .def_property_readonly("n_nodes", &Mesh::n_nodes)
        .def_property_readonly("n_interior", &Mesh::n_interior)
        .def_property_readonly("h", &Mesh::h)
        .def_property_readonly("nodes", [](const Mesh& mesh) {
            Eigen::MatrixXd out(mesh.n_nodes(), 2);
            for (int i = 0; i < mesh.n_nodes(); ++i) out.row(i) = mesh.nodes[static_cast<std::size_t>(i)];
            return out;
        });
    m.def("build_mesh", &build_mesh, py::arg("n_per_side"));

    py::class_<PhysicalParams>(m, "PhysicalParams")
        .def_static("benchmark", &PhysicalParams::benchmark, py::arg("nu") = 0.1, py::arg("a1") = -0.45)
        .def_static("diffusion", &PhysicalParams::diffusion, py::arg("nu"));

    py::class_<ActuatorLayout>(m, "ActuatorLayout")
        .def_static("lshape13", &ActuatorLayout::lshape13, py::arg("side") = ActuatorLayout::kDefaultSide)
        .def_static("full_domain", &ActuatorLayout::full_domain)
        .def("validate", &ActuatorLayout::validate, py::arg("overlap_tol") = 0.1)
        .def_property_readonly("count", &ActuatorLayout::count);

    py::class_<Discretization, std::shared_ptr<Discretization>>(m, "Discretization")
        .def_property_readonly("n", &Discretization::n)
        .def_property_readonly("m", &Discretization::m)
        .def_readonly("eta_V", &Discretization::eta_V)
        .def_readonly("eta_H", &Discretization::eta_H)
        .def_readonly("B_dualnorm", &Discretization::B_dualnorm)
        .def_readonly("B", &Discretization::B)
        .def("mass_coo", [](const Discretization& d) { return sparse_to_coo(d.M); })
        .def("stiffness_coo", [](const Discretization& d) { return sparse_to_coo(d.K_V); })
        .def("h_norm", &Discretization::h_norm)
        .def("v_norm", &Discretization::v_norm);

    m.def(
        "build_discretization",
        [](const Mesh& mesh, const PhysicalParams& pp, const ActuatorLayout& layout) {
            return std::make_shared<Discretization>(build_discretization(mesh, pp, layout));
        },
        py::arg("mesh"), py::arg("params"), py::arg("layout"));

    m.def(
        "interpolate",
        [](const Mesh& mesh, const std::function<double(double, double)>& f) {
            return interpolate(mesh, [&](const Eigen::Vector2d& x) { return f(x.x(), x.y()); });
        },
        py::arg("mesh"), py::arg("f"));

    m.def("prox_squared_l1", &prox_squared_l1, py::arg("w"), py::arg("sigma"));

    py::class_<CostSpec>(m, "CostSpec")
        .def(py::init([](double lambda, double beta) {
                 CostSpec s;
                 s.lambda = lambda;
                 s.beta = beta;
                 s.g_kind = beta > 0 ? CostSpec::GKind::SquaredL1 : CostSpec::GKind::None;
                 return s;
             }),
             py::arg("lam") = 5e-4, py::arg("beta") = 1e-4)
        .def_readwrite("lam", &CostSpec::lambda)
        .def_readwrite("beta", &CostSpec::beta);

    py::class_<FomModel>(m, "FomModel")
        .def(py::init([](std::shared_ptr<Discretization> d, double tau) { return FomModel(std::move(d), tau); }),
             py::arg("disc"), py::arg("tau"))
        .def_property_readonly("dim", &FomModel::dim);

    py::class_<ReducedModel, std::shared_ptr<ReducedModel>>(m, "ReducedModel")
        .def_property_readonly("r", &ReducedModel::r)
        .def_readonly("basis", &ReducedModel::basis)
        .def_readonly("pod_eigvals", &ReducedModel::pod_eigvals)
        .def("lift", &ReducedModel::lift)
        .def("project_initial",
             [](const ReducedModel& rm, const Eigen::VectorXd& y) { return project_initial(rm, y); });

    py::class_<RomModel>(m, "RomModel")
        .def(py::init([](std::shared_ptr<ReducedModel> rm, double tau) { return RomModel(std::move(rm), tau); }),
             py::arg("reduced"), py::arg("tau"))
        .def_property_readonly("dim", &RomModel::dim);

    m.def(
        "pod",
        [](const std::vector<std::pair<TimeGrid, Eigen::MatrixXd>>& snapshots,
           std::shared_ptr<Discretization> disc, int r_max, double energy_eps) {
            SnapshotSet set;
            int k = 0;
            for (const auto& [grid, arr] : snapshots)
                set.add(trajectory_from_array(grid, arr, SpaceTag::FOM), SnapshotSet::Origin::State, k++);
            PodOptions opts;
            opts.r_max = r_max;
            opts.energy_eps = energy_eps;
            return std::make_shared<ReducedModel>(pod(set, std::move(disc), opts));
        },
        py::arg("snapshots"), py::arg("disc"), py::arg("r_max") = 100, py::arg("energy_eps") = 1.0 - 1e-13);

    bind_model_ops<FomModel>(m, SpaceTag::FOM);
    bind_model_ops<RomModel>(m, SpaceTag::ROM);

    m.def(
        "certificate",
        [](std::shared_ptr<ReducedModel> rm, const TimeGrid& grid, const Eigen::MatrixXd& y_r,
           const Eigen::MatrixXd& u, const Eigen::MatrixXd& p_r, const Eigen::VectorXd& y_in,
           double delta_y_in, double lambda) {
            const Trajectory y = trajectory_from_array(grid, y_r, SpaceTag::ROM);
            const Trajectory p = trajectory_from_array(grid, p_r, SpaceTag::ROM);
            const ControlSignal uc = control_from_array(grid, u);
            const EstimatorConstants consts = EstimatorConstants::from(*rm->disc);
            const ReducedSolveAnalysis ana = analyze_reduced_solve(*rm, y, uc, p, &y_in);
            const Certificate cert = make_certificate(consts, ana, delta_y_in, lambda);
            py::dict d;
            d["delta_y_final"] = cert.delta_y_final;
            d["delta_y_L2H"] = cert.delta_y_L2H;
            d["delta_p"] = cert.delta_p;
            d["delta_u"] = cert.delta_u;
            d["delta_VT"] = cert.delta_VT;
            d["delta_JT"] = cert.delta_JT;
            return d;
        },
        py::arg("reduced"), py::arg("grid"), py::arg("y_r"), py::arg("u"), py::arg("p_r"), py::arg("y_in"),
        py::arg("delta_y_in") = 0.0, py::arg("lam") = 5e-4);

    py::class_<RHCConfig>(m, "RHCConfig")
        .def(py::init([](double T_inf, double tau, double delta, double T, double alpha_tilde,
                         const CostSpec& cost, const std::string& variant, bool validation) {
                 RHCConfig rc;
                 rc.T_inf = T_inf;
                 rc.tau = tau;
                 rc.delta = delta;
                 rc.T = T;
                 rc.alpha_tilde = alpha_tilde;
                 rc.cost = cost;
                 rc.index_variant = (variant == "mixed") ? IndexVariant::MixedFom : IndexVariant::FullRom;
                 rc.validation_mode = validation;
                 return rc;
             }),
             py::arg("T_inf"), py::arg("tau"), py::arg("delta") = 0.28, py::arg("T") = 0.8,
             py::arg("alpha_tilde") = 0.35, py::arg("cost") = CostSpec{},
             py::arg("index_variant") = "fullrom", py::arg("validation_mode") = false);

    m.def(
        "run_fom_rhc",
        [](const RHCConfig& cfg, std::shared_ptr<Discretization> disc, const Eigen::VectorXd& y0) {
            return result_to_dict(run_fom_rhc(cfg, std::move(disc), y0));
        },
        py::arg("config"), py::arg("disc"), py::arg("y0"));
    m.def(
        "run_rom_rhc",
        [](const RHCConfig& cfg, std::shared_ptr<Discretization> disc, const Eigen::VectorXd& y0) {
            return result_to_dict(run_rom_rhc(cfg, std::move(disc), y0));
        },
        py::arg("config"), py::arg("disc"), py::arg("y0"));

    m.def(
        "run_validate_suite",
        [](const std::string& suite, std::uint64_t seed) {
            const SuiteReport rep = run_validate_suite(suite, seed);
            py::list checks;
            for (const auto& c : rep.checks) {
                py::dict d;
                d["name"] = c.name;
                d["pass"] = c.pass;
                d["worst"] = c.worst;
                d["tol"] = c.tol;
                checks.append(d);
            }
            py::dict out;
            out["suite"] = rep.suite;
            out["pass"] = rep.pass();
            out["checks"] = checks;
            return out;
        },
        py::arg("suite"), py::arg("seed") = 0);
}
