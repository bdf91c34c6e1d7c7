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
#ifndef FMPC_FMPC_HPP
#define FMPC_FMPC_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fmpc/closed_loop.hpp"
#include "fmpc/error_chain.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/integrator.hpp"
#include "fmpc/ocp.hpp"
#include "fmpc/plant.hpp"
#include "fmpc/reference.hpp"

namespace fmpc {

template <ControlAffinePlant P>
struct FmpcConfig {
    typename P::State x0 = P::State::Zero();
    double t0 = 0.0;
    double t_end = 10.0;
    double delta = 0.04;
    double horizon = 0.6;
    double input_bound = 15.0;
    std::vector<double> eps = {0.94, 0.99};
    double control_dt = 0.04;
    StageCostConfig cost;
    IntegratorOptions integrator;
    OcpSolverOptions solver;
};

/// Drops the first `slots` values and pads with zeros at the end.
template <int M>
ControlSequence<M> shift_warm_start(const ControlSequence<M>& previous, std::size_t slots) {
    ControlSequence<M> out{previous.breakpoint(std::min(slots, previous.size())), previous.dt, {}};
    out.values.assign(previous.size(), Eigen::Matrix<double, M, 1>::Zero());
    for (std::size_t k = slots; k < previous.size(); ++k) out.values[k - slots] = previous.values[k];
    return out;
}

/// Receding-horizon loop: at t_hat = t0, t0 + delta, ... solve the OCP from
/// the measured state, apply the first delta of the solution, repeat until
/// t_end. `on_step`, when set, is called after every step.
template <ControlAffinePlant P>
ClosedLoopResult<P> run(const FmpcConfig<P>& cfg, const P& plant, const FunnelTrajectory& funnel,
                        const ReferenceSignal<P::kIoDim>& ref,
                        const std::function<void(const StepDiagnostics&)>& on_step = {}) {
    constexpr int M = P::kIoDim;
    constexpr int R = P::kRelativeDegree;
    if (!(cfg.delta > 0.0 && cfg.horizon >= cfg.delta)) throw InvalidArgument("need T >= delta > 0");
    if (!(cfg.t_end >= cfg.t0)) throw InvalidArgument("need t_end >= t0");
    const std::size_t step_slots = detail::checked_ratio(cfg.delta, cfg.control_dt, "delta");

    FunnelTrajectory psi = funnel;
    psi.extend(cfg.t_end + cfg.horizon + cfg.control_dt);

    {
        const auto st = chain<M, R>(cfg.t0, plant.output_chain(cfg.x0), psi, ref);
        const auto values = psi.eval(cfg.t0);
        if (cfg.eps.size() != static_cast<std::size_t>(R)) throw InvalidArgument("eps must have r entries");
        for (std::size_t i = 0; i < static_cast<std::size_t>(R); ++i) {
            if (st.saturated() || st.e[i].norm() > cfg.eps[i] * values[i].psi) {
                throw InfeasibleStart(cfg.t0, "initial state outside the eps-funnel");
            }
        }
    }

    ClosedLoopResult<P> result;
    result.applied = ControlSequence<M>{cfg.t0, cfg.control_dt, {}};
    const auto n_steps = static_cast<std::size_t>(std::ceil((cfg.t_end - cfg.t0) / cfg.delta - 1e-9));

    typename P::State x = cfg.x0;
    std::optional<ControlSequence<M>> warm;
    double energy = 0.0;
    for (std::size_t j = 0; j < n_steps; ++j) {
        const double t_hat = cfg.t0 + static_cast<double>(j) * cfg.delta;
        OcpSpec<P> spec{plant,         psi,       ref,           x,
                        t_hat,         cfg.horizon, cfg.delta,   cfg.input_bound,
                        cfg.eps,       cfg.control_dt, cfg.cost, cfg.integrator,
                        cfg.solver};
        if (warm) warm->t_start = t_hat;
        const OcpSolution<M> sol = solve(spec, warm);

        ControlSequence<M> segment{t_hat, cfg.control_dt,
                                   {sol.u_star.values.begin(), sol.u_star.values.begin() + static_cast<std::ptrdiff_t>(step_slots)}};
        const double seg_end = std::min(t_hat + cfg.delta, cfg.t_end);
        Trajectory<P> piece = integrate(plant, x, segment, t_hat, seg_end, cfg.integrator);
        auto& samples = result.trajectory.samples;
        if (!samples.empty()) samples.pop_back();
        samples.insert(samples.end(), piece.samples.begin(), piece.samples.end());
        result.trajectory.stats += piece.stats;
        x = piece.samples.back().x;

        for (std::size_t k = 0; k < step_slots; ++k) {
            const double a = segment.breakpoint(k);
            if (a >= seg_end) break;
            result.applied.values.push_back(segment.values[k]);
            energy += segment.values[k].squaredNorm() * (std::min(segment.breakpoint(k + 1), seg_end) - a);
        }

        StepDiagnostics diag;
        diag.t_hat = t_hat;
        diag.cost = sol.cost;
        diag.terminal_margins = sol.terminal_margins;
        diag.iterations = sol.stats.iterations;
        diag.restarts = sol.stats.restarts;
        diag.cost_evaluations = sol.stats.cost_evaluations;
        result.steps.push_back(diag);
        if (on_step) on_step(diag);

        warm = shift_warm_start(sol.u_star, step_slots);
    }

    if (result.trajectory.samples.empty()) {
        TrajectorySample<P> s;
        s.t = cfg.t0;
        s.x = cfg.x0;
        s.zeta = plant.output_chain(cfg.x0);
        s.u = P::Input::Zero();
        result.trajectory.samples.push_back(s);
    }
    annotate(result.trajectory, plant, psi, ref, cfg.cost);
    result.summary = summarize(result.trajectory, energy, n_steps);
    for (const auto& d : result.steps) result.summary.ocp_iterations.push_back(d.iterations);
    return result;
}

struct FeasibilityViolation {
    enum class Kind { kFunnel, kEpsBound };
    Kind kind = Kind::kFunnel;
    double t = 0.0;
    std::size_t sample = 0;
    std::size_t index = 0;
    double margin = 0.0;
};

struct FeasibilityReport {
    std::vector<FeasibilityViolation> violations;
    /// min over samples of psi_i - |e_i|
    std::vector<double> worst_funnel_margin;
    /// min over step times of eps_i psi_i - |e_i|
    std::vector<double> worst_eps_margin;
    std::size_t step_points = 0;

    bool ok() const { return violations.empty(); }
};

/// Re-evaluates the error chain from the stored states: every sample must be
/// strictly inside the funnels, and samples at t0 + j delta must satisfy the
/// eps-bound up to `tol`.
template <ControlAffinePlant P>
FeasibilityReport check_recursive_feasibility(const Trajectory<P>& traj, const P& plant,
                                              const FunnelTrajectory& funnel, const ReferenceSignal<P::kIoDim>& ref,
                                              const std::vector<double>& eps, double t0, double delta,
                                              double tol = 1e-9) {
    constexpr int M = P::kIoDim;
    constexpr int R = P::kRelativeDegree;
    if (eps.size() != static_cast<std::size_t>(R)) throw InvalidArgument("eps must have r entries");
    FeasibilityReport rep;
    rep.worst_funnel_margin.assign(R, kInfiniteCost);
    rep.worst_eps_margin.assign(R, kInfiniteCost);
    for (std::size_t n = 0; n < traj.samples.size(); ++n) {
        const auto& s = traj.samples[n];
        const auto st = chain<M, R>(s.t, plant.output_chain(s.x), funnel, ref);
        const auto psi = funnel.eval(s.t);
        const double steps = (s.t - t0) / delta;
        const bool step_point = std::abs(steps - std::round(steps)) * delta <= 1e-9 * std::max(1.0, s.t);
        if (step_point) ++rep.step_points;
        for (std::size_t i = 0; i < static_cast<std::size_t>(R); ++i) {
            const double err = st.saturated() && i >= *st.saturated_at ? kInfiniteCost : st.e[i].norm();
            const double fm = psi[i].psi - err;
            rep.worst_funnel_margin[i] = std::min(rep.worst_funnel_margin[i], fm);
            if (!(fm > 0.0)) rep.violations.push_back({FeasibilityViolation::Kind::kFunnel, s.t, n, i, fm});
            if (step_point) {
                const double em = eps[i] * psi[i].psi - err;
                rep.worst_eps_margin[i] = std::min(rep.worst_eps_margin[i], em);
                if (!(em >= -tol)) rep.violations.push_back({FeasibilityViolation::Kind::kEpsBound, s.t, n, i, em});
            }
        }
    }
    return rep;
}

}  // namespace fmpc

#endif  // FMPC_FMPC_HPP
