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
#ifndef FMPC_SCENARIO_HPP
#define FMPC_SCENARIO_HPP

#include <array>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmpc/baseline.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/fmpc.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/mass_on_car.hpp"
#include "fmpc/reference.hpp"

namespace fmpc {

/// Everything needed to run the mass-on-car tracking benchmark. Defaults are
/// the benchmark values.
struct ScenarioConfig {
    struct Plant {
        std::string type = "mass-on-car";
        MassOnCarParams params;
        std::array<double, 4> initial_state{0.0, 0.0, 0.0, 0.0};
        bool operator==(const Plant&) const = default;
    };
    struct Reference {
        /// "cosine": amplitude cos(frequency t + phase); "constant": value.
        std::string type = "cosine";
        double amplitude = 1.0;
        double frequency = 1.0;
        double phase = 0.0;
        double value = 0.0;
        bool operator==(const Reference&) const = default;
    };
    struct Simulation {
        double t0 = 0.0;
        double t_end = 10.0;
        bool operator==(const Simulation&) const = default;
    };
    struct Mpc {
        double delta = 0.04;
        double horizon = 0.6;
        double input_bound = 15.0;
        double control_dt = 0.04;
        std::vector<double> eps{0.94, 0.99};
        double lambda_u = 0.01;
        bool operator==(const Mpc&) const = default;
    };
    struct Baseline {
        double sample_dt = 0.01;
        std::optional<double> saturation;
        bool operator==(const Baseline&) const = default;
    };
    struct Output {
        std::string dir = "out";
        bool operator==(const Output&) const = default;
    };

    Plant plant;
    FunnelParams funnel{{1.5, 1.35}, {0.15, 0.675}, {1.1}, {4.1, 2.0}};
    Reference reference;
    Simulation simulation;
    Mpc fmpc;
    Baseline baseline;
    IntegratorOptions integrator;
    Output output;

    bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& where, std::set<std::string> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

template <class T>
void read(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad value for " + where + "." + key + ": " + e.what());
    }
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["plant"] = {{"type", c.plant.type},
                  {"m1", c.plant.params.m1},
                  {"m2", c.plant.params.m2},
                  {"spring", c.plant.params.k_spring},
                  {"damping", c.plant.params.d_damp},
                  {"theta", c.plant.params.theta},
                  {"initial_state", c.plant.initial_state}};
    j["funnel"] = {{"alpha", c.funnel.alpha}, {"beta", c.funnel.beta}, {"p", c.funnel.p}, {"psi0", c.funnel.psi0}};
    j["reference"] = {{"type", c.reference.type},
                      {"amplitude", c.reference.amplitude},
                      {"frequency", c.reference.frequency},
                      {"phase", c.reference.phase},
                      {"value", c.reference.value}};
    j["simulation"] = {{"t0", c.simulation.t0}, {"t_end", c.simulation.t_end}};
    j["fmpc"] = {{"delta", c.fmpc.delta},           {"horizon", c.fmpc.horizon},
                 {"input_bound", c.fmpc.input_bound}, {"control_dt", c.fmpc.control_dt},
                 {"eps", c.fmpc.eps},               {"lambda_u", c.fmpc.lambda_u}};
    j["baseline"] = {{"sample_dt", c.baseline.sample_dt},
                     {"saturation", c.baseline.saturation ? nlohmann::json(*c.baseline.saturation) : nlohmann::json()}};
    j["integrator"] = {{"abs_tol", c.integrator.abs_tol},
                       {"rel_tol", c.integrator.rel_tol},
                       {"samples_per_interval", c.integrator.samples_per_interval}};
    j["output"] = {{"dir", c.output.dir}};
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    using detail::read;
    ScenarioConfig c;
    detail::reject_unknown(j, "config",
                           {"plant", "funnel", "reference", "simulation", "fmpc", "baseline", "integrator", "output"});
    if (j.contains("plant")) {
        const auto& p = j["plant"];
        detail::reject_unknown(p, "plant", {"type", "m1", "m2", "spring", "damping", "theta", "initial_state"});
        read(p, "type", c.plant.type, "plant");
        read(p, "m1", c.plant.params.m1, "plant");
        read(p, "m2", c.plant.params.m2, "plant");
        read(p, "spring", c.plant.params.k_spring, "plant");
        read(p, "damping", c.plant.params.d_damp, "plant");
        read(p, "theta", c.plant.params.theta, "plant");
        read(p, "initial_state", c.plant.initial_state, "plant");
    }
    if (j.contains("funnel")) {
        const auto& f = j["funnel"];
        detail::reject_unknown(f, "funnel", {"alpha", "beta", "p", "psi0"});
        read(f, "alpha", c.funnel.alpha, "funnel");
        read(f, "beta", c.funnel.beta, "funnel");
        read(f, "p", c.funnel.p, "funnel");
        read(f, "psi0", c.funnel.psi0, "funnel");
    }
    if (j.contains("reference")) {
        const auto& r = j["reference"];
        detail::reject_unknown(r, "reference", {"type", "amplitude", "frequency", "phase", "value"});
        read(r, "type", c.reference.type, "reference");
        read(r, "amplitude", c.reference.amplitude, "reference");
        read(r, "frequency", c.reference.frequency, "reference");
        read(r, "phase", c.reference.phase, "reference");
        read(r, "value", c.reference.value, "reference");
    }
    if (j.contains("simulation")) {
        const auto& s = j["simulation"];
        detail::reject_unknown(s, "simulation", {"t0", "t_end"});
        read(s, "t0", c.simulation.t0, "simulation");
        read(s, "t_end", c.simulation.t_end, "simulation");
    }
    if (j.contains("fmpc")) {
        const auto& m = j["fmpc"];
        detail::reject_unknown(m, "fmpc", {"delta", "horizon", "input_bound", "control_dt", "eps", "lambda_u"});
        read(m, "delta", c.fmpc.delta, "fmpc");
        read(m, "horizon", c.fmpc.horizon, "fmpc");
        read(m, "input_bound", c.fmpc.input_bound, "fmpc");
        read(m, "control_dt", c.fmpc.control_dt, "fmpc");
        read(m, "eps", c.fmpc.eps, "fmpc");
        read(m, "lambda_u", c.fmpc.lambda_u, "fmpc");
    }
    if (j.contains("baseline")) {
        const auto& b = j["baseline"];
        detail::reject_unknown(b, "baseline", {"sample_dt", "saturation"});
        read(b, "sample_dt", c.baseline.sample_dt, "baseline");
        if (b.contains("saturation") && !b["saturation"].is_null()) {
            double v = 0.0;
            read(b, "saturation", v, "baseline");
            c.baseline.saturation = v;
        }
    }
    if (j.contains("integrator")) {
        const auto& i = j["integrator"];
        detail::reject_unknown(i, "integrator", {"abs_tol", "rel_tol", "samples_per_interval"});
        read(i, "abs_tol", c.integrator.abs_tol, "integrator");
        read(i, "rel_tol", c.integrator.rel_tol, "integrator");
        read(i, "samples_per_interval", c.integrator.samples_per_interval, "integrator");
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        detail::reject_unknown(o, "output", {"dir"});
        read(o, "dir", c.output.dir, "output");
    }
    return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

inline ScenarioConfig preset(const std::string& name) {
    if (name == "mass-on-car") return ScenarioConfig{};
    throw ConfigError("unknown preset '" + name + "'");
}

/// Validated module-level objects built from a ScenarioConfig.
struct Scenario {
    ScenarioConfig config;
    MassOnCar plant;
    FunnelTrajectory funnel;
    ReferenceSignal<1> reference;

    FmpcConfig<MassOnCar> fmpc_config() const {
        FmpcConfig<MassOnCar> f;
        f.x0 = Eigen::Map<const Eigen::Vector4d>(config.plant.initial_state.data());
        f.t0 = config.simulation.t0;
        f.t_end = config.simulation.t_end;
        f.delta = config.fmpc.delta;
        f.horizon = config.fmpc.horizon;
        f.input_bound = config.fmpc.input_bound;
        f.eps = config.fmpc.eps;
        f.control_dt = config.fmpc.control_dt;
        f.cost.lambda_u = config.fmpc.lambda_u;
        f.integrator = config.integrator;
        return f;
    }

    FunnelControllerConfig<MassOnCar> baseline_config() const {
        return {plant, funnel, reference, config.baseline.saturation, StageCostConfig{config.fmpc.lambda_u}};
    }
};

/// Builds and validates everything; any failure is reported as ConfigError.
inline Scenario build_scenario(const ScenarioConfig& c) {
    try {
        if (c.plant.type != "mass-on-car") throw ConfigError("unknown plant type '" + c.plant.type + "'");
        if (!(c.simulation.t_end >= c.simulation.t0 && c.simulation.t0 >= 0.0)) {
            throw ConfigError("need 0 <= t0 <= t_end");
        }
        if (!(c.fmpc.delta > 0.0 && c.fmpc.horizon >= c.fmpc.delta && c.fmpc.input_bound > 0.0 &&
              c.fmpc.control_dt > 0.0 && c.fmpc.lambda_u >= 0.0)) {
            throw ConfigError("fmpc section violates T >= delta > 0, M > 0, control_dt > 0, lambda_u >= 0");
        }
        detail::checked_ratio(c.fmpc.horizon, c.fmpc.control_dt, "T");
        detail::checked_ratio(c.fmpc.delta, c.fmpc.control_dt, "delta");
        if (c.fmpc.eps.size() != 2) throw ConfigError("fmpc.eps must have r = 2 entries");
        for (double e : c.fmpc.eps) {
            if (!(e > 0.0 && e < 1.0)) throw ConfigError("fmpc.eps entries must lie in (0, 1)");
        }
        if (!(c.baseline.sample_dt > 0.0)) throw ConfigError("baseline.sample_dt must be positive");
        if (c.baseline.saturation && !(*c.baseline.saturation > 0.0)) {
            throw ConfigError("baseline.saturation must be positive");
        }
        if (!(c.integrator.abs_tol > 0.0 && c.integrator.rel_tol >= 0.0 && c.integrator.samples_per_interval >= 1)) {
            throw ConfigError("integrator tolerances must be positive and samples_per_interval >= 1");
        }
        const FunnelParams fp = validate_params(c.funnel);
        if (fp.relative_degree() != 2) throw ConfigError("mass-on-car has relative degree 2; funnel must match");
        std::optional<ReferenceSignal<1>> ref;
        if (c.reference.type == "cosine") {
            ref = cosine_reference<1>(c.reference.amplitude, c.reference.frequency, c.reference.phase);
        } else if (c.reference.type == "constant") {
            ref = constant_reference<1>(Eigen::Matrix<double, 1, 1>(c.reference.value));
        } else {
            throw ConfigError("unknown reference type '" + c.reference.type + "'");
        }
        const double horizon = c.simulation.t_end + c.fmpc.horizon + c.fmpc.control_dt + 1.0;
        return Scenario{c, mass_on_car(c.plant.params), FunnelTrajectory(fp, horizon), *ref};
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace fmpc

#endif  // FMPC_SCENARIO_HPP
