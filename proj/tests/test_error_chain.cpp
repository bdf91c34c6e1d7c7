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
#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "fmpc/error_chain.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/reference.hpp"
#include "support.hpp"

namespace fmpc {
namespace {

using Vec1 = Eigen::Matrix<double, 1, 1>;
using Zeta2 = Eigen::Matrix<double, 2, 1>;

ErrorChainState<1, 2> chain_with(double psi1, double psi2, double z1, double z2, double yr0, double yr1) {
    const std::array<FunnelValue, 2> psi{FunnelValue{psi1, 0.0}, FunnelValue{psi2, 0.0}};
    const std::array<Vec1, 2> yr{Vec1(yr0), Vec1(yr1)};
    return chain_from_values<1, 2>(0.0, Zeta2(z1, z2), psi, yr);
}

TEST(Chain, ZeroErrorOnReferenceChain) {
    const FunnelTrajectory f = solve_funnel(test::benchmark_funnel(), 5.0);
    const auto ref = cosine_reference<1>();
    for (double t : {0.0, 0.7, 3.2}) {
        const Zeta2 zeta(ref.value(t)[0], ref.derivative(t, 1)[0]);
        const auto st = chain<1, 2>(t, zeta, f, ref);
        EXPECT_FALSE(st.saturated());
        for (int i = 0; i < 2; ++i) {
            EXPECT_EQ(st.e[i][0], 0.0);
            EXPECT_EQ(st.k[i], 1.0);
            EXPECT_EQ(st.ratios[i], 0.0);
        }
    }
}

TEST(Chain, HalfRatioGivesGainTwo) {
    // psi_1 = sqrt 2, e_1 = 1 -> ratio 1/2.
    const double z2 = 0.3, yr1 = -0.2;
    const auto st = chain_with(std::sqrt(2.0), 10.0, 1.0, z2, 0.0, yr1);
    EXPECT_NEAR(st.ratios[0], 0.5, 1e-15);
    EXPECT_NEAR(st.k[0], 2.0, 1e-14);
    EXPECT_NEAR(st.e[1][0], z2 - yr1 + 2.0 * 1.0, 1e-14);
}

TEST(Chain, BenchmarkRestStateAtZero) {
    const FunnelTrajectory f = solve_funnel(test::benchmark_funnel(), 1.0);
    const auto ref = cosine_reference<1>();
    const auto st = chain<1, 2>(0.0, Zeta2::Zero(), f, ref);
    EXPECT_EQ(st.e[0][0], -1.0);
    EXPECT_NEAR(st.ratios[0], 0.0594883997620464, 1e-15);
    EXPECT_NEAR(st.k[0], 1.0632511068943706, 1e-15);
    EXPECT_NEAR(st.e[1][0], -1.0632511068943706, 1e-15);
    EXPECT_NEAR(st.k[1], 1.3939724918135044, 1e-14);
}

TEST(Chain, SaturationFlagsDeeperEntries) {
    const auto st = chain_with(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);
    ASSERT_TRUE(st.saturated());
    EXPECT_EQ(*st.saturated_at, 0u);
    EXPECT_EQ(st.k[0], std::numeric_limits<double>::infinity());
    EXPECT_TRUE(std::isnan(st.e[1][0]));
    EXPECT_TRUE(std::isnan(st.k[1]));

    const auto outside = chain_with(1.0, 1.0, 3.0, 0.0, 0.0, 0.0);
    EXPECT_TRUE(outside.saturated());

    const auto second = chain_with(4.0, 0.1, 0.5, 5.0, 0.0, 0.0);
    ASSERT_TRUE(second.saturated());
    EXPECT_EQ(*second.saturated_at, 1u);
    EXPECT_EQ(second.k[1], std::numeric_limits<double>::infinity());
}

TEST(Chain, GainsAtLeastOneInsideFunnel) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 1000; ++n) {
        const double yr0 = u(rng);
        const auto st = chain_with(2.0, 50.0, yr0 + 1.9 * u(rng), u(rng), yr0, u(rng));
        ASSERT_FALSE(st.saturated());
        EXPECT_GE(st.k[0], 1.0);
        EXPECT_GE(st.k[1], 1.0);
    }
}

// Straight-line recursion for r = 3, m = 2.
TEST(Chain, MatchesStraightLineRecursion) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    using V2 = Eigen::Vector2d;
    for (int n = 0; n < 200; ++n) {
        Eigen::Matrix<double, 6, 1> zeta;
        for (int j = 0; j < 6; ++j) zeta[j] = u(rng);
        const std::array<V2, 3> yr{V2(u(rng), u(rng)), V2(u(rng), u(rng)), V2(u(rng), u(rng))};
        const std::array<FunnelValue, 3> psi{FunnelValue{2.0, 0}, FunnelValue{6.0, 0}, FunnelValue{40.0, 0}};

        const V2 e1 = zeta.segment<2>(0) - yr[0];
        const double k1 = 1.0 / (1.0 - e1.squaredNorm() / 4.0);
        const V2 e2 = zeta.segment<2>(2) - yr[1] + k1 * e1;
        const double k2 = 1.0 / (1.0 - e2.squaredNorm() / 36.0);
        const V2 e3 = zeta.segment<2>(4) - yr[2] + k2 * e2;
        const double k3 = 1.0 / (1.0 - e3.squaredNorm() / 1600.0);

        const auto st = chain_from_values<2, 3>(0.0, zeta, psi, yr);
        ASSERT_FALSE(st.saturated());
        EXPECT_EQ(st.e[0], e1);
        EXPECT_EQ(st.e[1], e2);
        EXPECT_EQ(st.e[2], e3);
        EXPECT_EQ(st.k[0], k1);
        EXPECT_EQ(st.k[1], k2);
        EXPECT_EQ(st.k[2], k3);
    }
}

TEST(Chain, ExactOnPolynomialReference) {
    const FunnelParams p{{2.0, 1.5, 1.0}, {0.2, 0.3, 0.4}, {1.2, 1.5}, {3.0, 2.5, 2.0}};
    const FunnelTrajectory f = solve_funnel(p, 5.0);
    // y_ref = 1 + 2t - 0.5 t^2 (degree 2 < r = 3).
    const ReferenceSignal<1> ref(
        [](double t, int order) -> Vec1 {
            switch (order) {
                case 0: return Vec1(1.0 + 2.0 * t - 0.5 * t * t);
                case 1: return Vec1(2.0 - t);
                case 2: return Vec1(-1.0);
                default: return Vec1(0.0);
            }
        },
        {10.0, 5.0, 1.0, 0.0});
    for (double t : {0.0, 0.5, 2.5, 4.9}) {
        const Eigen::Vector3d zeta(1.0 + 2.0 * t - 0.5 * t * t, 2.0 - t, -1.0);
        const auto st = chain<1, 3>(t, zeta, f, ref);
        for (int i = 0; i < 3; ++i) {
            EXPECT_EQ(st.e[i][0], 0.0);
            EXPECT_EQ(st.k[i], 1.0);
        }
    }
}

TEST(StageCost, ZeroAtZeroErrorAndInput) {
    const auto st = chain_with(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
    EXPECT_EQ(stage_cost(st, Vec1(0.0), StageCostConfig{0.01}), 0.0);
}

TEST(StageCost, HalfRatiosUnitInput) {
    ErrorChainState<1, 2> st;
    st.ratios = {0.5, 0.5};
    st.k = {2.0, 2.0};
    EXPECT_NEAR(stage_cost(st, Vec1(1.0), StageCostConfig{0.01}), 2.01, 1e-15);
    // Same numbers through the recursion: e_1 = 1, psi_1 = sqrt 2; e_2 = sqrt 2 * psi_2 / 2.
    const double psi2 = 3.0;
    const double z2 = std::sqrt(0.5) * psi2 - 2.0;
    const auto chained = chain_with(std::sqrt(2.0), psi2, 1.0, z2, 0.0, 0.0);
    EXPECT_NEAR(stage_cost(chained, Vec1(-1.0), StageCostConfig{0.01}), 2.01, 1e-13);
}

TEST(StageCost, InfiniteOnFunnelBoundary) {
    const auto st = chain_with(2.0, 1.0, 2.0, 0.0, 0.0, 0.0);
    EXPECT_EQ(stage_cost(st, Vec1(0.0), StageCostConfig{}), kInfiniteCost);
    const auto beyond = chain_with(2.0, 1.0, -2.5, 0.0, 0.0, 0.0);
    EXPECT_EQ(stage_cost(beyond, Vec1(0.0), StageCostConfig{}), kInfiniteCost);
}

TEST(StageCost, DivergesMonotonicallyAsRatioApproachesOne) {
    double prev = -1.0;
    for (int k = 1; k <= 12; ++k) {
        ErrorChainState<1, 2> st;
        st.ratios = {1.0 - std::pow(10.0, -k), 0.0};
        st.k = {1.0 / (1.0 - st.ratios[0]), 1.0};
        const double c = stage_cost(st, Vec1(0.0), StageCostConfig{});
        EXPECT_GT(c, prev) << "k=" << k;
        EXPECT_TRUE(std::isfinite(c));
        prev = c;
    }
    EXPECT_GT(prev, 1e11);
}

TEST(StageCost, DivergesThroughRecursion) {
    double prev = -1.0;
    for (int k = 1; k <= 12; ++k) {
        const double e1 = std::sqrt(1.0 - std::pow(10.0, -k));
        const auto st = chain_with(1.0, 1e15, e1, 0.0, 0.0, 0.0);
        ASSERT_FALSE(st.saturated());
        const double c = stage_cost(st, Vec1(0.0), StageCostConfig{});
        EXPECT_GT(c, prev) << "k=" << k;
        prev = c;
    }
    EXPECT_GT(prev, 1e11);
}

TEST(StageCost, NonNegativeAndMonotone) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> r01(0.0, 0.999);
    std::uniform_real_distribution<double> uu(-5.0, 5.0);
    for (int n = 0; n < 500; ++n) {
        ErrorChainState<1, 2> st;
        st.ratios = {r01(rng), r01(rng)};
        for (int i = 0; i < 2; ++i) st.k[i] = 1.0 / (1.0 - st.ratios[i]);
        const double u = uu(rng);
        const double c = stage_cost(st, Vec1(u), StageCostConfig{0.01});
        EXPECT_GE(c, 0.0);
        auto bumped = st;
        bumped.ratios[0] = std::min(0.9999, st.ratios[0] + 1e-3);
        bumped.k[0] = 1.0 / (1.0 - bumped.ratios[0]);
        EXPECT_GT(stage_cost(bumped, Vec1(u), StageCostConfig{0.01}), c);
        EXPECT_GT(stage_cost(st, Vec1(std::abs(u) + 0.1), StageCostConfig{0.01}), c - 1e-15);
    }
}

TEST(DerivativeBound, RelativeDegreeOne) {
    const FunnelTrajectory f = solve_funnel(FunnelParams{{1.0}, {0.5}, {}, {3.0}}, 2.0);
    const auto ref = cosine_reference<1>(2.0);
    EXPECT_DOUBLE_EQ(derivative_bound<1>(f, ref, 0.0, {}), 3.0 + 2.0);
}

TEST(DerivativeBound, BenchmarkAtStart) {
    const FunnelTrajectory f = solve_funnel(test::benchmark_funnel(), 1.0);
    const auto ref = cosine_reference<1>();
    const std::array<double, 1> eps{0.94};
    EXPECT_NEAR(derivative_bound<1>(f, ref, 0.0, eps), 38.22336769759448, 1e-12);
    EXPECT_NEAR(derivative_bound<1>(f, ref, 0.0, eps), 2.0 + 4.1 / 0.1164 + 1.0, 1e-12);
}

TEST(DerivativeBound, IncreasesWithEpsilon) {
    const FunnelTrajectory f = solve_funnel(test::benchmark_funnel(), 1.0);
    const auto ref = cosine_reference<1>();
    double prev = 0.0;
    for (double e : {0.1, 0.5, 0.9, 0.94, 0.99, 0.999}) {
        const std::array<double, 1> eps{e};
        const double y = derivative_bound<1>(f, ref, 0.0, eps);
        EXPECT_GT(y, prev);
        prev = y;
    }
    const std::array<double, 1> bad{1.0};
    EXPECT_THROW(derivative_bound<1>(f, ref, 0.0, bad), InvalidArgument);
}

TEST(Reference, CosineDerivativesConsistent) {
    const auto ref = cosine_reference<1>(1.3, 2.0, 0.4);
    const double h = 1e-5;
    for (double t : {0.0, 0.3, 1.1, 5.0}) {
        for (int k = 0; k < 4; ++k) {
            const double fd = (ref.derivative(t + h, k)[0] - ref.derivative(t - h, k)[0]) / (2 * h);
            EXPECT_NEAR(fd, ref.derivative(t, k + 1)[0], h * 10.0 * std::pow(2.0, k + 3));
        }
    }
    EXPECT_NEAR(ref.sup_norm(2), 1.3 * 4.0, 1e-15);
    EXPECT_THROW(ref.derivative(0.0, 9), InvalidArgument);
}

}  // namespace
}  // namespace fmpc
