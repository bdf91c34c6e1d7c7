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
#ifndef FMPC_CLOSED_LOOP_HPP
#define FMPC_CLOSED_LOOP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fmpc/integrator.hpp"
#include "fmpc/plant.hpp"

namespace fmpc {

struct StepDiagnostics {
    double t_hat = 0.0;
    double cost = 0.0;
    /// eps_i psi_i(t_hat + delta) - |e_i(t_hat + delta)|
    std::vector<double> terminal_margins;
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    std::size_t cost_evaluations = 0;
};

struct ClosedLoopSummary {
    /// max over samples of |e_i| / psi_i
    std::vector<double> max_error_fraction;
    double max_input_norm = 0.0;
    /// integral of |u|^2 dt
    double input_energy = 0.0;
    std::size_t steps = 0;
    std::vector<std::size_t> ocp_iterations;
};

template <ControlAffinePlant P>
struct ClosedLoopResult {
    Trajectory<P> trajectory;
    /// Applied ZOH input (empty for continuous feedback).
    ControlSequence<P::kIoDim> applied;
    std::vector<StepDiagnostics> steps;
    ClosedLoopSummary summary;
};

/// Max error fractions and input norm over an annotated trajectory.
template <ControlAffinePlant P>
ClosedLoopSummary summarize(const Trajectory<P>& traj, double input_energy, std::size_t steps) {
    ClosedLoopSummary s;
    s.max_error_fraction.assign(P::kRelativeDegree, 0.0);
    s.input_energy = input_energy;
    s.steps = steps;
    for (const auto& sample : traj.samples) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(P::kRelativeDegree); ++i) {
            const double r = sample.ratios[i];
            // NaN ratios (saturated chain) must surface as a violation.
            s.max_error_fraction[i] = std::isnan(r) ? r : std::max(s.max_error_fraction[i], std::sqrt(r));
        }
        s.max_input_norm = std::max(s.max_input_norm, sample.u.norm());
    }
    return s;
}

}  // namespace fmpc

#endif  // FMPC_CLOSED_LOOP_HPP
