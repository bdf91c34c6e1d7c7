/*
 Copyright 2026 The fmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef FMPC_TOOLS_CLI_APP_HPP
#define FMPC_TOOLS_CLI_APP_HPP

#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmpc/baseline.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/fmpc.hpp"
#include "fmpc/scenario.hpp"
#include "fmpc/trace.hpp"

namespace fmpc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitConfig = 3;

struct Options {
    std::string config;
    std::string preset = "mass-on-car";
    std::string out;
    std::optional<double> t_end;
    std::string trace;
    std::string controller = "fmpc";
};

/// Outcome of one controller run: summary JSON plus whether every check held.
struct RunReport {
    nlohmann::json summary;
    bool ok = true;
};

inline ScenarioConfig resolve_config(const Options& o) {
    ScenarioConfig c = o.config.empty() ? preset(o.preset) : load_scenario(o.config);
    if (o.t_end) c.simulation.t_end = *o.t_end;
    if (!o.out.empty()) c.output.dir = o.out;
    return c;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
}

inline nlohmann::json summary_json(const ClosedLoopSummary& s) {
    std::vector<double> max_ratio;
    for (double f : s.max_error_fraction) max_ratio.push_back(f * f);
    return {{"max_error_fraction", s.max_error_fraction},
            {"max_ratio", max_ratio},
            {"max_input_norm", s.max_input_norm},
            {"input_energy", s.input_energy}};
}

inline RunReport run_fmpc(const Scenario& sc, const std::filesystem::path& dir, std::ostream& out,
                          std::ostream& err) {
    RunReport rep;
    rep.summary["controller"] = "fmpc";
    const auto cfg = sc.fmpc_config();
    ClosedLoopResult<MassOnCar> res;
    try {
        res = run(cfg, sc.plant, sc.funnel, sc.reference);
    } catch (const InfeasibleStart& e) {
        err << "fmpc: " << e.what() << '\n';
        rep.summary["status"] = "infeasible-start";
        rep.ok = false;
        return rep;
    } catch (const NoFeasiblePoint& e) {
        err << "fmpc: " << e.what() << '\n';
        rep.summary["status"] = "no-feasible-point";
        rep.summary["t_hat"] = e.t_hat();
        rep.ok = false;
        return rep;
    }
    {
        std::ofstream f(dir / "fmpc.csv");
        if (!f) throw Error("cannot write '" + (dir / "fmpc.csv").string() + "'");
        write_trace(f, res.trajectory, sc.funnel, sc.reference);
    }
    const auto feas = check_recursive_feasibility(res.trajectory, sc.plant, sc.funnel, sc.reference, cfg.eps,
                                                  cfg.t0, cfg.delta);
    const bool bound_ok = res.summary.max_input_norm <= cfg.input_bound;
    std::size_t iters = 0, restarts = 0;
    for (const auto& s : res.steps) {
        iters += s.iterations;
        restarts += s.restarts;
    }
    rep.ok = feas.ok() && bound_ok;
    rep.summary["status"] = rep.ok ? "ok" : "violation";
    rep.summary["steps"] = res.steps.size();
    rep.summary["samples"] = res.trajectory.samples.size();
    rep.summary["input_bound"] = cfg.input_bound;
    rep.summary["ocp_iterations_total"] = iters;
    rep.summary["ocp_iterations"] = res.summary.ocp_iterations;
    rep.summary["ocp_restarts"] = restarts;
    rep.summary["recursive_feasibility"] = {{"ok", feas.ok()},
                                            {"violations", feas.violations.size()},
                                            {"step_points", feas.step_points},
                                            {"worst_funnel_margin", feas.worst_funnel_margin},
                                            {"worst_eps_margin", feas.worst_eps_margin}};
    rep.summary.update(summary_json(res.summary));
    out << "fmpc: " << res.steps.size() << " steps, max |e_i|/psi_i = [";
    for (std::size_t i = 0; i < res.summary.max_error_fraction.size(); ++i) {
        out << (i ? ", " : "") << res.summary.max_error_fraction[i];
    }
    out << "], max |u| = " << res.summary.max_input_norm << ", energy = " << res.summary.input_energy << '\n';
    if (!feas.ok()) err << "fmpc: " << feas.violations.size() << " feasibility violations\n";
    if (!bound_ok) err << "fmpc: input bound exceeded\n";
    return rep;
}

inline RunReport run_funnel_controller(const Scenario& sc, const std::filesystem::path& dir, std::ostream& out,
                                       std::ostream& err) {
    RunReport rep;
    rep.summary["controller"] = "funnel-controller";
    const auto cfg = sc.baseline_config();
    const Eigen::Vector4d x0 = Eigen::Map<const Eigen::Vector4d>(sc.config.plant.initial_state.data());
    ClosedLoopResult<MassOnCar> res;
    try {
        res = run_closed_loop(cfg, x0, sc.config.simulation.t0, sc.config.simulation.t_end,
                              sc.config.baseline.sample_dt, sc.config.integrator);
    } catch (const SaturatedChain& e) {
        err << "funnel-controller: " << e.what() << '\n';
        rep.summary["status"] = "left-funnel";
        rep.ok = false;
        return rep;
    } catch (const IntegrationFailure& e) {
        err << "funnel-controller: " << e.what() << '\n';
        rep.summary["status"] = "integration-failure";
        rep.ok = false;
        return rep;
    }
    {
        std::ofstream f(dir / "funnel_controller.csv");
        if (!f) throw Error("cannot write '" + (dir / "funnel_controller.csv").string() + "'");
        write_trace(f, res.trajectory, sc.funnel, sc.reference);
    }
    for (double m : res.summary.max_error_fraction) {
        if (!(m < 1.0)) rep.ok = false;
    }
    rep.summary["status"] = rep.ok ? "ok" : "violation";
    rep.summary["samples"] = res.trajectory.samples.size();
    rep.summary["saturation"] = cfg.saturation ? nlohmann::json(*cfg.saturation) : nlohmann::json();
    rep.summary.update(summary_json(res.summary));
    out << "funnel-controller: max |u| = " << res.summary.max_input_norm
        << ", energy = " << res.summary.input_energy << '\n';
    if (!rep.ok) err << "funnel-controller: error left a funnel\n";
    return rep;
}

inline int verify(const Scenario& sc, const Options& o, std::ostream& out, std::ostream& err) {
    if (o.controller != "fmpc" && o.controller != "funnel-controller") {
        throw ConfigError("--controller must be 'fmpc' or 'funnel-controller'");
    }
    std::ifstream f(o.trace);
    if (!f) throw ConfigError("cannot read trace '" + o.trace + "'");
    const TraceTable table = read_trace(f);
    TraceCheck chk;
    chk.mpc_checks = o.controller == "fmpc";
    chk.input_bound = sc.config.fmpc.input_bound;
    chk.eps = sc.config.fmpc.eps;
    chk.t0 = sc.config.simulation.t0;
    chk.delta = sc.config.fmpc.delta;
    chk.cost.lambda_u = sc.config.fmpc.lambda_u;
    const auto issues = verify_trace<1, 2>(table, sc.funnel, sc.reference, chk);
    for (const auto& s : issues) err << "verify: " << s << '\n';
    if (!issues.empty()) {
        err << "verify: " << issues.size() << " problems in " << table.rows.size() << " rows\n";
        return kExitInfeasible;
    }
    out << "verify: " << table.rows.size() << " rows ok\n";
    return kExitOk;
}

inline int dispatch(const std::string& command, const Options& o, std::ostream& out, std::ostream& err) {
    const Scenario sc = build_scenario(resolve_config(o));
    if (command == "verify") return verify(sc, o, out, err);
    const std::filesystem::path dir = sc.config.output.dir;
    std::filesystem::create_directories(dir);
    nlohmann::json summary;
    bool ok = true;
    if (command == "fmpc" || command == "compare") {
        auto rep = run_fmpc(sc, dir, out, err);
        ok = ok && rep.ok;
        summary["fmpc"] = std::move(rep.summary);
    }
    if (command == "funnel-controller" || command == "compare") {
        auto rep = run_funnel_controller(sc, dir, out, err);
        ok = ok && rep.ok;
        summary["funnel_controller"] = std::move(rep.summary);
    }
    if (command == "compare" && summary["fmpc"].contains("input_energy") &&
        summary["funnel_controller"].contains("input_energy")) {
        const double a = summary["fmpc"]["input_energy"];
        const double b = summary["funnel_controller"]["input_energy"];
        summary["comparison"] = {{"energy_ratio", a / b}, {"fmpc_uses_less_energy", a < b}};
        out << "compare: fmpc/funnel-controller energy ratio = " << a / b << '\n';
    }
    summary["config"] = to_json(sc.config);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    return ok ? kExitOk : kExitInfeasible;
}

/// Entry point; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Funnel MPC for the mass-on-car benchmark"};
    app.require_subcommand(1, 1);
    Options o;
    auto common = [&o](CLI::App* sub) {
        auto* cfg = sub->add_option("--config", o.config, "JSON scenario file");
        sub->add_option("--preset", o.preset, "built-in scenario")->excludes(cfg);
        sub->add_option("--t-end", o.t_end, "override simulation.t_end");
    };
    for (const char* name : {"fmpc", "funnel-controller", "compare"}) {
        auto* sub = app.add_subcommand(name);
        common(sub);
        sub->add_option("--out", o.out, "output directory");
    }
    app.get_subcommand("fmpc")->description("run the funnel MPC closed loop");
    app.get_subcommand("funnel-controller")->description("run the continuous funnel controller");
    app.get_subcommand("compare")->description("run both controllers and compare input energy");
    auto* ver = app.add_subcommand("verify", "check a recorded trace against the scenario");
    common(ver);
    ver->add_option("--trace", o.trace, "CSV trace to check")->required();
    ver->add_option("--controller", o.controller, "controller that produced the trace (fmpc, funnel-controller)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, o, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace fmpc::cli

#endif  // FMPC_TOOLS_CLI_APP_HPP
