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
#ifndef FMPC_REFERENCE_HPP
#define FMPC_REFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fmpc/errors.hpp"

namespace fmpc {

/// Reference output y_ref together with its time derivatives up to
/// `max_order()`, and sup-norm bounds on each of them.
template <int M>
class ReferenceSignal {
public:
    using Vector = Eigen::Matrix<double, M, 1>;
    /// (t, order) -> d^order/dt^order y_ref(t)
    using Function = std::function<Vector(double, int)>;

    ReferenceSignal(Function fn, std::vector<double> sup_norms)
        : fn_(std::move(fn)), sup_norms_(std::move(sup_norms)) {
        if (!fn_ || sup_norms_.empty()) throw InvalidArgument("reference needs a function and sup-norm bounds");
    }

    int max_order() const { return static_cast<int>(sup_norms_.size()) - 1; }

    Vector derivative(double t, int order) const {
        if (order < 0 || order > max_order()) {
            throw InvalidArgument("reference derivative of order " + std::to_string(order) + " not available");
        }
        return fn_(t, order);
    }

    Vector value(double t) const { return derivative(t, 0); }

    /// Bound on ||y_ref^(order)||_inf.
    double sup_norm(int order) const { return sup_norms_.at(static_cast<std::size_t>(order)); }

    /// K with ||y_ref^(i)||_inf <= K for every available order.
    double bound() const { return *std::max_element(sup_norms_.begin(), sup_norms_.end()); }

private:
    Function fn_;
    std::vector<double> sup_norms_;
};

/// Every component follows amplitude * cos(frequency * t + phase).
template <int M>
ReferenceSignal<M> cosine_reference(double amplitude = 1.0, double frequency = 1.0, double phase = 0.0,
                                    int max_order = 8) {
    std::vector<double> sup(static_cast<std::size_t>(max_order) + 1);
    for (int k = 0; k <= max_order; ++k) {
        sup[static_cast<std::size_t>(k)] = std::sqrt(double(M)) * std::abs(amplitude) * std::pow(std::abs(frequency), k);
    }
    auto fn = [amplitude, frequency, phase](double t, int order) -> Eigen::Matrix<double, M, 1> {
        // d^k/dt^k cos(wt + phi) = w^k cos(wt + phi + k pi/2), written out to stay exact at t = 0.
        const double arg = frequency * t + phase;
        double v = 0.0;
        switch (order % 4) {
            case 0: v = std::cos(arg); break;
            case 1: v = -std::sin(arg); break;
            case 2: v = -std::cos(arg); break;
            default: v = std::sin(arg); break;
        }
        return Eigen::Matrix<double, M, 1>::Constant(amplitude * std::pow(frequency, order) * v).eval();
    };
    return ReferenceSignal<M>(fn, std::move(sup));
}

template <int M>
ReferenceSignal<M> constant_reference(const Eigen::Matrix<double, M, 1>& value, int max_order = 8) {
    std::vector<double> sup(static_cast<std::size_t>(max_order) + 1, 0.0);
    sup[0] = value.norm();
    return ReferenceSignal<M>(
        [value](double, int order) -> Eigen::Matrix<double, M, 1> {
            if (order == 0) return value;
            return Eigen::Matrix<double, M, 1>::Zero();
        },
        std::move(sup));
}

}  // namespace fmpc

#endif  // FMPC_REFERENCE_HPP
