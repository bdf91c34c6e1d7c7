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
#ifndef FMPC_BASELINE_HPP
#define FMPC_BASELINE_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "fmpc/closed_loop.hpp"
#include "fmpc/dormand_prince.hpp"
#include "fmpc/error_chain.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/integrator.hpp"
#include "fmpc/plant.hpp"
#include "fmpc/reference.hpp"

namespace fmpc {

/// Funnel controller u = -k_r gamma(x)^-1 e_r. Model-free apart from gamma.
template <NormalFormPlant P>
struct FunnelControllerConfig {
    std::reference_wrapper<const P> plant;
    std::reference_wrapper<const FunnelTrajectory> funnel;
    std::reference_wrapper<const ReferenceSignal<P::kIoDim>> reference;
    /// Diagnostic clip on |u|. Off by default: clipping voids the controller's guarantees.
    std::optional<double> saturation{};
    /// Only used to fill the stage-cost column of recorded trajectories.
    StageCostConfig cost{};
};

namespace detail {

/// Euclidean projection onto {|u| <= radius}; the result never exceeds the radius.
template <int M>
Eigen::Matrix<double, M, 1> project_to_ball(const Eigen::Matrix<double, M, 1>& u, double radius) {
    const double n = u.norm();
    if (n <= radius) return u;
    if (radius <= 0.0) return Eigen::Matrix<double, M, 1>::Zero();
    if constexpr (M == 1) {
        return Eigen::Matrix<double, 1, 1>(std::copysign(radius, u[0]));
    } else {
        Eigen::Matrix<double, M, 1> v = u * (radius / n);
        while (v.norm() > radius) v *= 1.0 - 1e-15;
        return v;
    }
}

}  // namespace detail

template <NormalFormPlant P>
typename P::Input feedback(const FunnelControllerConfig<P>& cfg, double t, const typename P::State& x) {
    constexpr int M = P::kIoDim;
    constexpr int R = P::kRelativeDegree;
    const P& plant = cfg.plant.get();
    const auto st = chain<M, R>(t, plant.output_chain(x), cfg.funnel.get(), cfg.reference.get());
    if (st.saturated()) throw SaturatedChain(t, *st.saturated_at);
    const typename P::Gain gamma = plant.gain(x);
    if (!(std::abs(gamma.determinant()) >= 1e-9)) {
        throw Error("input gain gamma(x) is not invertible at t=" + std::to_string(t));
    }
    typename P::Input u = -st.k[R - 1] * gamma.partialPivLu().solve(st.e[R - 1]);
    if (cfg.saturation) u = detail::project_to_ball<M>(u, *cfg.saturation);
    return u;
}

/// Closed loop under continuous funnel feedback, sampled every `sample_dt`
/// (and at t1). Input energy is integrated alongside the state.
template <NormalFormPlant P>
ClosedLoopResult<P> run_closed_loop(const FunnelControllerConfig<P>& cfg, const typename P::State& x0, double t0,
                                    double t1, double sample_dt, const IntegratorOptions& opts = {}) {
    constexpr int N = P::kStateDim;
    using Augmented = Eigen::Matrix<double, N + 1, 1>;
    if (!(sample_dt > 0.0) || t1 < t0) throw InvalidArgument("run_closed_loop needs t1 >= t0 and sample_dt > 0");
    const P& plant = cfg.plant.get();

    auto rhs = [&](double t, const Augmented& z) -> Augmented {
        const typename P::State x = z.template head<N>();
        Augmented dz;
        try {
            const typename P::Input u = feedback(cfg, t, x);
            dz.template head<N>() = plant.drift(x) + plant.input_map(x) * u;
            dz[N] = u.squaredNorm();
        } catch (const SaturatedChain&) {
            dz.setConstant(std::numeric_limits<double>::quiet_NaN());
        }
        return dz;
    };

    ClosedLoopResult<P> result;
    auto record = [&](double t, const Augmented& z) {
        TrajectorySample<P> s;
        s.t = t;
        s.x = z.template head<N>();
        s.zeta = plant.output_chain(s.x);
        s.u = feedback(cfg, t, s.x);
        result.trajectory.samples.push_back(s);
    };

    Augmented z0;
    z0 << x0, 0.0;
    DormandPrince<Augmented> stepper(t0, z0, opts.stepper());
    record(t0, z0);
    const auto n_samples = static_cast<std::size_t>(std::ceil((t1 - t0) / sample_dt - 1e-9));
    for (std::size_t j = 1; j <= n_samples; ++j) {
        const double ts = std::min(t1, t0 + static_cast<double>(j) * sample_dt);
        stepper.advance_to(rhs, ts);
        record(ts, stepper.state());
    }
    result.trajectory.stats = stepper.stats();
    annotate(result.trajectory, plant, cfg.funnel.get(), cfg.reference.get(), cfg.cost);
    result.summary = summarize(result.trajectory, stepper.state()[N], 0);
    return result;
}

/// Funnel feedback sampled and held on a ZOH grid, each value projected onto
/// the ball of radius `input_bound`. If the chain saturates, the remaining
/// slots are zero.
template <NormalFormPlant P>
ControlSequence<P::kIoDim> zoh_feedback_sequence(const FunnelControllerConfig<P>& cfg, const typename P::State& x0,
                                                 double t_start, double dt, std::size_t n, double input_bound,
                                                 const IntegratorOptions& opts = {}) {
    constexpr int M = P::kIoDim;
    using State = typename P::State;
    const P& plant = cfg.plant.get();
    ControlSequence<M> seq{t_start, dt, std::vector<typename P::Input>(n, P::Input::Zero())};
    DormandPrince<State> stepper(t_start, x0, opts.stepper());
    typename P::Input active = P::Input::Zero();
    auto f = [&plant, &active](double, const State& x) -> State { return plant.drift(x) + plant.input_map(x) * active; };
    try {
        for (std::size_t k = 0; k < n; ++k) {
            active = detail::project_to_ball<M>(feedback(cfg, seq.breakpoint(k), stepper.state()), input_bound);
            seq.values[k] = active;
            stepper.reset_derivative();
            stepper.advance_to(f, seq.breakpoint(k + 1));
        }
    } catch (const SaturatedChain&) {
    } catch (const IntegrationFailure&) {
    }
    return seq;
}

}  // namespace fmpc

#endif  // FMPC_BASELINE_HPP
