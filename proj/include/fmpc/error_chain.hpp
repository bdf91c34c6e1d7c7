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
#ifndef FMPC_ERROR_CHAIN_HPP
#define FMPC_ERROR_CHAIN_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "fmpc/errors.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/reference.hpp"

namespace fmpc {

/// Value used for "outside the funnel". IEEE infinity: adding finite costs to
/// it stays infinite and it compares above every finite cost.
inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

struct StageCostConfig {
    double lambda_u = 0.01;
    bool operator==(const StageCostConfig&) const = default;
};

/// Auxiliary errors e_1..e_R, gains k_i = (1 - |e_i|^2/psi_i^2)^-1 and the
/// ratios |e_i|^2/psi_i^2 at one time instant.
///
/// When some ratio reaches 1 the chain is saturated at that index: k there is
/// +inf and deeper entries are NaN.
template <int M, int R>
struct ErrorChainState {
    using Vector = Eigen::Matrix<double, M, 1>;

    double t = 0.0;
    std::array<Vector, R> e{};
    std::array<double, R> k{};
    std::array<double, R> ratios{};
    std::optional<std::size_t> saturated_at;

    bool saturated() const { return saturated_at.has_value(); }
};

/// Error recursion from precomputed funnel values and reference derivatives
/// y_ref^(0..R-1)(t).
template <int M, int R>
ErrorChainState<M, R> chain_from_values(double t, const Eigen::Matrix<double, R * M, 1>& zeta,
                                        std::span<const FunnelValue> psi,
                                        std::span<const Eigen::Matrix<double, M, 1>> ref_derivatives) {
    using Vector = Eigen::Matrix<double, M, 1>;
    if (psi.size() != static_cast<std::size_t>(R) || ref_derivatives.size() < static_cast<std::size_t>(R)) {
        throw DimensionMismatch("error chain needs R funnel values and R reference derivatives");
    }
    ErrorChainState<M, R> s;
    s.t = t;
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    Vector carry = Vector::Zero();  // k_{i-1} e_{i-1}
    for (std::size_t i = 0; i < static_cast<std::size_t>(R); ++i) {
        if (s.saturated_at) {
            s.e[i].setConstant(nan);
            s.k[i] = nan;
            s.ratios[i] = nan;
            continue;
        }
        s.e[i] = zeta.template segment<M>(static_cast<Eigen::Index>(i) * M) - ref_derivatives[i];
        if (i > 0) s.e[i] += carry;
        const double ratio = s.e[i].squaredNorm() / (psi[i].psi * psi[i].psi);
        s.ratios[i] = ratio;
        if (!(ratio < 1.0)) {
            s.k[i] = kInfiniteCost;
            s.saturated_at = i;
            continue;
        }
        s.k[i] = 1.0 / (1.0 - ratio);
        carry = s.k[i] * s.e[i];
    }
    return s;
}

template <int M, int R>
ErrorChainState<M, R> chain(double t, const Eigen::Matrix<double, R * M, 1>& zeta, const FunnelTrajectory& funnel,
                            const ReferenceSignal<M>& ref) {
    if (funnel.relative_degree() != static_cast<std::size_t>(R)) {
        throw DimensionMismatch("funnel relative degree does not match the output chain");
    }
    std::array<FunnelValue, R> psi;
    funnel.eval_into(t, psi);
    std::array<Eigen::Matrix<double, M, 1>, R> yr;
    for (int i = 0; i < R; ++i) yr[static_cast<std::size_t>(i)] = ref.derivative(t, i);
    return chain_from_values<M, R>(t, zeta, psi, yr);
}

/// sum_i k_i - R + lambda_u |u|^2, or kInfiniteCost when the chain is saturated.
template <int M, int R>
double stage_cost(const ErrorChainState<M, R>& state, const Eigen::Matrix<double, M, 1>& u,
                  const StageCostConfig& cfg) {
    if (state.saturated()) return kInfiniteCost;
    double sum = 0.0;
    for (double k : state.k) sum += k;
    return sum - static_cast<double>(R) + cfg.lambda_u * u.squaredNorm();
}

/// Bound Y on |y^(i-1)(t)|, i = 1..r, valid while every e_j stays inside
/// eps_j psi_j (j < r) and inside psi_r:
///
///   Y_i = psi_i(t0) + psi_{i-1}(t0) / (1 - eps_{i-1}^2) + |y_ref^(i-1)|_inf,
///
/// with psi_0 = eps_0 = 0. Requires decreasing funnels.
template <int M>
double derivative_bound(const FunnelTrajectory& funnel, const ReferenceSignal<M>& ref, double t0,
                        std::span<const double> eps) {
    const std::size_t r = funnel.relative_degree();
    if (eps.size() + 1 != r) throw DimensionMismatch("derivative_bound needs r-1 epsilon values");
    for (double e : eps) {
        if (!(e >= 0.0 && e < 1.0)) throw InvalidArgument("epsilon must lie in [0, 1)");
    }
    const std::vector<FunnelValue> psi = funnel.eval(t0);
    double y = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        double yi = psi[i].psi + ref.sup_norm(static_cast<int>(i));
        if (i > 0) yi += psi[i - 1].psi / (1.0 - eps[i - 1] * eps[i - 1]);
        y = std::max(y, yi);
    }
    return y;
}

}  // namespace fmpc

#endif  // FMPC_ERROR_CHAIN_HPP
