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
#ifndef FMPC_TESTS_SUPPORT_HPP
#define FMPC_TESTS_SUPPORT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <numbers>

#include <Eigen/Dense>

#include "fmpc/funnel.hpp"
#include "fmpc/mass_on_car.hpp"
#include "fmpc/reference.hpp"

namespace fmpc::test {

inline FunnelParams benchmark_funnel() { return {{1.5, 1.35}, {0.15, 0.675}, {1.1}, {4.1, 2.0}}; }

/// Analytic cascade for the benchmark parameters.
inline double psi2_exact(double t) { return 0.5 + 1.5 * std::exp(-1.35 * t); }
inline double psi1_exact(double t) { return 0.1 + 11.0 * std::exp(-1.35 * t) - 7.0 * std::exp(-1.5 * t); }

/// Mass-on-car written from the Euler-Lagrange equations with a direct 2x2
/// solve per call. Shares no code with MassOnCar.
struct ReferencePlantModel {
    double m1 = 4.0, m2 = 1.0, k = 2.0, d = 1.0, theta = std::numbers::pi / 4.0;

    Eigen::Vector4d rhs(const Eigen::Vector4d& x, double u) const {
        Eigen::Matrix2d mass;
        mass << m1 + m2, m2 * std::cos(theta), m2 * std::cos(theta), m2;
        const Eigen::Vector2d force(u, -k * x[1] - d * x[3]);
        const Eigen::Vector2d acc = mass.fullPivLu().solve(force);
        return {x[2], x[3], acc[0], acc[1]};
    }

    Eigen::Vector4d rk4(Eigen::Vector4d x, double u, double duration, int steps) const {
        const double h = duration / steps;
        for (int n = 0; n < steps; ++n) {
            const Eigen::Vector4d a = rhs(x, u);
            const Eigen::Vector4d b = rhs(x + 0.5 * h * a, u);
            const Eigen::Vector4d c = rhs(x + 0.5 * h * b, u);
            const Eigen::Vector4d e = rhs(x + h * c, u);
            x += h / 6.0 * (a + 2.0 * b + 2.0 * c + e);
        }
        return x;
    }

    double y(const Eigen::Vector4d& x) const { return x[0] + std::cos(theta) * x[1]; }
    double ydot(const Eigen::Vector4d& x) const { return x[2] + std::cos(theta) * x[3]; }
};

/// Cost of the benchmark OCP from rest at t = 0 with horizon 0.08 (two ZOH
/// slots) through an unrelated code path: fine RK4, closed-form funnels,
/// inline error recursion, trapezoid on 4 sub-intervals per slot. Returns
/// +inf when infeasible.
inline double two_slot_oracle_cost(const std::array<double, 2>& u, double lambda_u,
                                   std::array<double, 2>* margins = nullptr) {
    const ReferencePlantModel model;
    const double dt = 0.04, sub = 0.01;
    const int q = 4, fine = 40;
    const double inf = std::numeric_limits<double>::infinity();
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    double cost = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double uk = u[static_cast<std::size_t>(k)];
        for (int j = 0; j <= q; ++j) {
            const double t = k * dt + j * sub;
            if (j > 0) x = model.rk4(x, uk, sub, fine / q);
            const double p1 = psi1_exact(t), p2 = psi2_exact(t);
            const double e1 = model.y(x) - std::cos(t);
            const double q1 = e1 * e1 / (p1 * p1);
            if (q1 >= 1.0) return inf;
            const double k1 = 1.0 / (1.0 - q1);
            const double e2 = model.ydot(x) + std::sin(t) + k1 * e1;
            const double q2 = e2 * e2 / (p2 * p2);
            if (q2 >= 1.0) return inf;
            const double l = k1 + 1.0 / (1.0 - q2) - 2.0 + lambda_u * uk * uk;
            cost += ((j == 0 || j == q) ? 0.5 : 1.0) * sub * l;
            if (k == 0 && j == q) {
                const double m1 = 0.94 * p1 - std::abs(e1);
                const double m2 = 0.99 * p2 - std::abs(e2);
                if (margins) *margins = {m1, m2};
                if (m1 < 0.0 || m2 < 0.0) return inf;
            }
        }
    }
    return cost;
}

/// Coarse grid of step bound/10 over [-bound, bound]^2, then a 100x finer
/// grid around the coarse argmin.
inline std::pair<double, std::array<double, 2>> two_slot_grid_search(double lambda_u, double bound) {
    double best = std::numeric_limits<double>::infinity();
    std::array<double, 2> arg{0.0, 0.0};
    auto scan = [&](std::array<double, 2> centre, double step) {
        for (int i = -10; i <= 10; ++i) {
            for (int j = -10; j <= 10; ++j) {
                const std::array<double, 2> u{std::clamp(centre[0] + step * i, -bound, bound),
                                              std::clamp(centre[1] + step * j, -bound, bound)};
                const double c = two_slot_oracle_cost(u, lambda_u);
                if (c < best) {
                    best = c;
                    arg = u;
                }
            }
        }
    };
    scan({0.0, 0.0}, bound / 10.0);
    scan(arg, bound / 100.0);
    return {best, arg};
}

}  // namespace fmpc::test

#endif  // FMPC_TESTS_SUPPORT_HPP
