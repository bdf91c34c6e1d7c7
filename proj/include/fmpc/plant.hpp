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
#ifndef FMPC_PLANT_HPP
#define FMPC_PLANT_HPP

#include <concepts>
#include <string>

#include <Eigen/Core>

#include "fmpc/errors.hpp"

namespace fmpc {

/// Fixed-size vocabulary shared by plants with state dimension N, input and
/// output dimension M and relative degree R.
template <int N, int M, int R>
struct PlantTypes {
    static constexpr int kStateDim = N;
    static constexpr int kIoDim = M;
    static constexpr int kRelativeDegree = R;

    using State = Eigen::Matrix<double, N, 1>;
    using Input = Eigen::Matrix<double, M, 1>;
    using Output = Eigen::Matrix<double, M, 1>;
    using Chain = Eigen::Matrix<double, R * M, 1>;
    using InputMatrix = Eigen::Matrix<double, N, M>;
    using Gain = Eigen::Matrix<double, M, M>;
};

/// Control-affine system x' = f(x) + g(x) u, y = h(x) with relative degree R.
/// `output_chain` is (h, L_f h, ..., L_f^{R-1} h).
template <class P>
concept ControlAffinePlant = requires(const P& plant, const typename P::State& x) {
    requires P::kStateDim > 0 && P::kIoDim > 0 && P::kRelativeDegree > 0;
    { plant.drift(x) } -> std::convertible_to<typename P::State>;
    { plant.input_map(x) } -> std::convertible_to<typename P::InputMatrix>;
    { plant.output(x) } -> std::convertible_to<typename P::Output>;
    { plant.output_chain(x) } -> std::convertible_to<typename P::Chain>;
};

/// Plant that also exposes y^(R) = normal_drift(x) + gain(x) u.
template <class P>
concept NormalFormPlant = ControlAffinePlant<P> && requires(const P& plant, const typename P::State& x) {
    { plant.gain(x) } -> std::convertible_to<typename P::Gain>;
    { plant.normal_drift(x) } -> std::convertible_to<typename P::Output>;
};

/// f(x) + g(x) u. Sizes are checked so dynamic Eigen arguments are accepted.
template <ControlAffinePlant P, class DX, class DU>
typename P::State rhs(const P& plant, const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DU>& u) {
    if (x.size() != P::kStateDim || u.size() != P::kIoDim) {
        throw DimensionMismatch("rhs expects state of size " + std::to_string(P::kStateDim) + " and input of size " +
                                std::to_string(P::kIoDim));
    }
    const typename P::State xs = x;
    return plant.drift(xs) + plant.input_map(xs) * u;
}

}  // namespace fmpc

#endif  // FMPC_PLANT_HPP
