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
#ifndef FMPC_INTEGRATOR_HPP
#define FMPC_INTEGRATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fmpc/dormand_prince.hpp"
#include "fmpc/error_chain.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/plant.hpp"

namespace fmpc {

/// Zero-order-hold input: values[k] is active on [t_start + k dt, t_start + (k+1) dt).
template <int M>
struct ControlSequence {
    using Vector = Eigen::Matrix<double, M, 1>;

    double t_start = 0.0;
    double dt = 0.04;
    std::vector<Vector> values;

    std::size_t size() const { return values.size(); }
    double t_end() const { return breakpoint(values.size()); }
    double breakpoint(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }

    /// Index of the interval containing t. The right end t_end() maps to the
    /// last interval.
    std::size_t slot(double t) const {
        if (values.empty()) throw CoverageError("empty control sequence");
        const double tol = 1e-12 * std::max(1.0, std::abs(t));
        if (t < t_start - tol || t > t_end() + tol) {
            throw CoverageError("time " + std::to_string(t) + " outside control sequence coverage");
        }
        double k = std::floor((t - t_start) / dt);
        if (k < 0.0) k = 0.0;
        auto idx = static_cast<std::size_t>(k);
        if (idx + 1 <= values.size() && t >= breakpoint(idx + 1) - tol) ++idx;
        return std::min(idx, values.size() - 1);
    }

    const Vector& at(double t) const { return values[slot(t)]; }

    bool operator==(const ControlSequence&) const = default;
};

struct IntegratorOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    /// Sub-grid samples per control interval.
    int samples_per_interval = 4;
    double max_step = std::numeric_limits<double>::infinity();
    bool fixed_step = false;

    StepperOptions stepper() const { return StepperOptions{abs_tol, rel_tol, max_step, fixed_step}; }
    bool operator==(const IntegratorOptions&) const = default;
};

template <ControlAffinePlant P>
struct TrajectorySample {
    double t = 0.0;
    typename P::State x;
    typename P::Chain zeta;
    typename P::Input u;
    /// |e_i|^2 / psi_i^2; NaN until annotate() runs.
    std::array<double, P::kRelativeDegree> ratios;
    double stage_cost = std::numeric_limits<double>::quiet_NaN();
};

template <ControlAffinePlant P>
struct Trajectory {
    std::vector<TrajectorySample<P>> samples;
    StepperStats stats;
};

/// Where a sample sits relative to its control interval.
enum class SamplePoint { kInterior, kIntervalEnd };

/// Integrates x' = f(x) + g(x) u under the ZOH input `u` on [t0, t1],
/// restarting derivative information at every breakpoint. `visit(t, x, slot,
/// where)` is called at t0, at every sub-grid point and at every interval
/// end (with the slot whose input was active on the left); returning false
/// stops the integration early. Returns the state reached.
template <ControlAffinePlant P, class Visitor>
typename P::State integrate_zoh(const P& plant, const typename P::State& x0, const ControlSequence<P::kIoDim>& u,
                                double t0, double t1, const IntegratorOptions& opts, StepperStats& stats,
                                Visitor&& visit) {
    using State = typename P::State;
    if (opts.samples_per_interval < 1) throw InvalidArgument("samples_per_interval must be >= 1");
    if (!(opts.abs_tol > 0.0 && opts.rel_tol >= 0.0)) throw InvalidArgument("integrator tolerance must be positive");
    if (u.values.empty() || !(u.dt > 0.0)) throw CoverageError("control sequence is empty");
    const double tol = 1e-12 * std::max(1.0, std::abs(t1));
    if (t0 < u.t_start - tol || t1 > u.t_end() + tol || t1 < t0) {
        throw CoverageError("span [" + std::to_string(t0) + ", " + std::to_string(t1) +
                            "] not covered by control sequence");
    }

    DormandPrince<State> stepper(t0, x0, opts.stepper());
    typename P::Input active = u.values[u.slot(t0)];
    auto f = [&plant, &active](double, const State& x) -> State { return plant.drift(x) + plant.input_map(x) * active; };

    const int q = opts.samples_per_interval;
    const double sub = u.dt / q;
    const std::size_t first = u.slot(t0);
    const std::size_t last = (t1 == t0) ? first : u.slot(std::max(t0, t1 - tol));

    if (!visit(t0, stepper.state(), first, SamplePoint::kInterior)) return stepper.state();
    if (t1 == t0) return stepper.state();

    // Each interval starts from the same step-size seed, so its step sequence
    // depends only on the state and input on that interval.
    const double seed = std::min(sub, opts.max_step);
    for (std::size_t k = first; k <= last; ++k) {
        active = u.values[k];
        stepper.reset_derivative();
        stepper.set_step(seed);
        const double a = u.breakpoint(k);
        const double b = std::min(t1, u.breakpoint(k + 1));
        for (int j = 1; j <= q; ++j) {
            double ts = (j == q) ? u.breakpoint(k + 1) : a + j * sub;
            if (ts <= stepper.time()) continue;
            const bool end = ts >= b - tol;
            if (end) ts = b;
            stepper.advance_to(f, ts);
            if (!visit(ts, stepper.state(), k, end ? SamplePoint::kIntervalEnd : SamplePoint::kInterior)) {
                stats += stepper.stats();
                return stepper.state();
            }
            if (end) break;
        }
        if (k + 1 <= last && !visit(stepper.time(), stepper.state(), k + 1, SamplePoint::kInterior)) {
            stats += stepper.stats();
            return stepper.state();
        }
    }
    stats += stepper.stats();
    return stepper.state();
}

/// Response to a ZOH input on span [t0, t1], sampled at t0, on the sub-grid
/// and at t1. Ratios and stage costs are left unset (see annotate()).
template <ControlAffinePlant P>
Trajectory<P> integrate(const P& plant, const typename P::State& x0, const ControlSequence<P::kIoDim>& u, double t0,
                        double t1, const IntegratorOptions& opts = {}) {
    Trajectory<P> traj;
    integrate_zoh(plant, x0, u, t0, t1, opts, traj.stats,
                  [&](double t, const typename P::State& x, std::size_t slot, SamplePoint where) {
                      const bool is_last = t >= t1;
                      if (where == SamplePoint::kIntervalEnd && !is_last) return true;
                      TrajectorySample<P> s;
                      s.t = t;
                      s.x = x;
                      s.zeta = plant.output_chain(x);
                      s.u = u.values[slot];
                      s.ratios.fill(std::numeric_limits<double>::quiet_NaN());
                      traj.samples.push_back(s);
                      return true;
                  });
    return traj;
}

/// Fills ratios and stage costs of every sample from the stored state.
template <ControlAffinePlant P>
void annotate(Trajectory<P>& traj, const P& plant, const FunnelTrajectory& funnel,
              const ReferenceSignal<P::kIoDim>& ref, const StageCostConfig& cost) {
    for (auto& s : traj.samples) {
        s.zeta = plant.output_chain(s.x);
        const auto state = chain<P::kIoDim, P::kRelativeDegree>(s.t, s.zeta, funnel, ref);
        s.ratios = state.ratios;
        s.stage_cost = stage_cost(state, s.u, cost);
    }
}

}  // namespace fmpc

#endif  // FMPC_INTEGRATOR_HPP
