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

#include <cmath>
#include <limits>
#include <vector>

#include "fmpc/dormand_prince.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/integrator.hpp"
#include "fmpc/mass_on_car.hpp"
#include "support.hpp"

namespace fmpc {
namespace {

using State = MassOnCar::State;
using Input = MassOnCar::Input;

/// x' = -x + u, y = x.
struct Decay : PlantTypes<1, 1, 1> {
    State drift(const State& x) const { return -x; }
    InputMatrix input_map(const State&) const { return InputMatrix::Ones(); }
    Output output(const State& x) const { return x; }
    Chain output_chain(const State& x) const { return x; }
};

/// x' = x^2, finite escape at t = 1/x0.
struct Escape : PlantTypes<1, 1, 1> {
    State drift(const State& x) const { return x.cwiseProduct(x); }
    InputMatrix input_map(const State&) const { return InputMatrix::Zero(); }
    Output output(const State& x) const { return x; }
    Chain output_chain(const State& x) const { return x; }
};

ControlSequence<1> constant_input(double value, double t_start, double dt, std::size_t n) {
    return {t_start, dt, std::vector<Input>(n, Input(value))};
}

TEST(ControlSequence, RightOpenSlots) {
    const ControlSequence<1> u{1.0, 0.5, {Input(1), Input(2), Input(3)}};
    EXPECT_EQ(u.size(), 3u);
    EXPECT_DOUBLE_EQ(u.t_end(), 2.5);
    EXPECT_EQ(u.slot(1.0), 0u);
    EXPECT_EQ(u.slot(1.49), 0u);
    EXPECT_EQ(u.slot(1.5), 1u);
    EXPECT_EQ(u.slot(2.4999), 2u);
    EXPECT_EQ(u.slot(2.5), 2u);
    EXPECT_EQ(u.at(2.0)[0], 3.0);
    EXPECT_THROW(u.slot(0.9), CoverageError);
    EXPECT_THROW(u.slot(2.6), CoverageError);
    EXPECT_THROW(ControlSequence<1>{}.slot(0.0), CoverageError);
}

TEST(Integrate, ExponentialDecay) {
    const Decay plant;
    const auto traj = integrate(plant, Decay::State(1.0), constant_input(0.0, 0.0, 0.04, 25), 0.0, 1.0);
    EXPECT_NEAR(traj.samples.back().t, 1.0, 1e-15);
    EXPECT_NEAR(traj.samples.back().x[0], std::exp(-1.0), 1e-8);
}

TEST(Integrate, RestStaysAtRest) {
    const MassOnCar plant = mass_on_car({});
    const auto traj = integrate(plant, State::Zero(), constant_input(0.0, 0.0, 0.04, 50), 0.0, 2.0);
    for (const auto& s : traj.samples) EXPECT_EQ(s.x, State::Zero());
}

TEST(Integrate, UnitForceMatchesFineRk4) {
    const MassOnCar plant = mass_on_car({});
    const auto traj = integrate(plant, State::Zero(), constant_input(1.0, 0.0, 0.04, 1), 0.0, 0.04);
    const State oracle(0.00017751212958982816, -0.00012382945585984867, 0.008868910111538147, -0.006144122321101988);
    EXPECT_LT((traj.samples.back().x - oracle).lpNorm<Eigen::Infinity>(), 1e-10);
    // First-order estimate of the car velocity.
    EXPECT_NEAR(traj.samples.back().x[2], 0.04 / 4.5, 1e-4);
}

TEST(Integrate, SubGridLayout) {
    const MassOnCar plant = mass_on_car({});
    IntegratorOptions opts;
    opts.samples_per_interval = 4;
    const auto u = constant_input(0.5, 0.2, 0.04, 15);
    const auto traj = integrate(plant, State::Zero(), u, 0.2, 0.8, opts);
    ASSERT_EQ(traj.samples.size(), 15u * 4u + 1u);
    for (std::size_t n = 0; n < traj.samples.size(); ++n) {
        EXPECT_NEAR(traj.samples[n].t, 0.2 + 0.01 * static_cast<double>(n), 1e-13);
        if (n > 0) {
            EXPECT_GT(traj.samples[n].t, traj.samples[n - 1].t);
        }
        EXPECT_EQ(traj.samples[n].zeta, plant.output_chain(traj.samples[n].x));
    }
}

TEST(Integrate, InputSwitchesAtBreakpoints) {
    const Decay plant;
    const ControlSequence<1> u{0.0, 0.5, {Input(1.0), Input(-1.0)}};
    const auto traj = integrate(plant, Decay::State(0.0), u, 0.0, 1.0);
    // x(t) = 1 - e^-t on [0, .5], then -1 + (x(.5) + 1) e^-(t - .5).
    const double xh = 1.0 - std::exp(-0.5);
    EXPECT_NEAR(traj.samples.back().x[0], -1.0 + (xh + 1.0) * std::exp(-0.5), 1e-8);
    for (const auto& s : traj.samples) {
        const double expected = s.t < 0.5 ? 1.0 - std::exp(-s.t) : -1.0 + (xh + 1.0) * std::exp(-(s.t - 0.5));
        EXPECT_NEAR(s.x[0], expected, 1e-8) << "t=" << s.t;
    }
}

TEST(Integrate, ConvergenceOrderFixedStep) {
    const MassOnCar plant = mass_on_car({});
    const test::ReferencePlantModel oracle_model;
    const State x0(0.1, 0.3, -0.2, 0.0);
    const State oracle = oracle_model.rk4(x0, 1.0, 4.0, 40000);
    std::vector<double> errors;
    IntegratorOptions opts;
    opts.fixed_step = true;
    opts.samples_per_interval = 1;
    for (double h : {0.4, 0.2, 0.1}) {
        opts.max_step = h;
        const auto traj = integrate(plant, x0, constant_input(1.0, 0.0, 4.0, 1), 0.0, 4.0, opts);
        errors.push_back((traj.samples.back().x - oracle).norm());
    }
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double order = std::log2(errors[i] / errors[i + 1]);
        EXPECT_GE(order, 4.0) << "errors " << errors[i] << " -> " << errors[i + 1];
    }
}

TEST(Integrate, TighterToleranceReducesError) {
    const MassOnCar plant = mass_on_car({});
    const test::ReferencePlantModel oracle_model;
    const State x0(0.1, 0.3, -0.2, 0.0);
    const State oracle = oracle_model.rk4(x0, 1.0, 4.0, 40000);
    double prev = std::numeric_limits<double>::infinity();
    for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
        IntegratorOptions opts;
        opts.abs_tol = opts.rel_tol = tol;
        const auto traj = integrate(plant, x0, constant_input(1.0, 0.0, 4.0, 1), 0.0, 4.0, opts);
        const double err = (traj.samples.back().x - oracle).norm();
        EXPECT_LT(err, prev) << "tol=" << tol;
        EXPECT_LT(err, 100.0 * tol) << "tol=" << tol;
        prev = err;
    }
}

TEST(Integrate, SplitAtBreakpointMatchesSingleCall) {
    const MassOnCar plant = mass_on_car({});
    ControlSequence<1> u{0.0, 0.04, {}};
    for (int k = 0; k < 20; ++k) u.values.push_back(Input(3.0 * std::sin(0.7 * k)));
    const State x0(0.0, 0.1, 0.2, -0.1);
    const IntegratorOptions opts;
    const auto whole = integrate(plant, x0, u, 0.0, 0.8, opts);
    for (int c : {1, 7, 13}) {
        const double tc = u.breakpoint(static_cast<std::size_t>(c));
        const auto left = integrate(plant, x0, u, 0.0, tc, opts);
        const auto right = integrate(plant, left.samples.back().x, u, tc, 0.8, opts);
        EXPECT_LE((right.samples.back().x - whole.samples.back().x).lpNorm<Eigen::Infinity>(), 10.0 * opts.abs_tol)
            << "c=" << c;
    }
}

TEST(Integrate, Deterministic) {
    const MassOnCar plant = mass_on_car({});
    ControlSequence<1> u{0.0, 0.04, {}};
    for (int k = 0; k < 30; ++k) u.values.push_back(Input(std::cos(1.3 * k)));
    const auto a = integrate(plant, State(0.1, 0.0, 0.0, 0.2), u, 0.0, 1.2);
    const auto b = integrate(plant, State(0.1, 0.0, 0.0, 0.2), u, 0.0, 1.2);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t n = 0; n < a.samples.size(); ++n) {
        EXPECT_EQ(a.samples[n].t, b.samples[n].t);
        EXPECT_EQ(a.samples[n].x, b.samples[n].x);
    }
    EXPECT_EQ(a.stats.accepted, b.stats.accepted);
    EXPECT_EQ(a.stats.rhs_evals, b.stats.rhs_evals);
}

TEST(Integrate, CoverageChecked) {
    const MassOnCar plant = mass_on_car({});
    const auto u = constant_input(0.0, 0.0, 0.04, 5);
    EXPECT_THROW(integrate(plant, State::Zero(), u, 0.0, 0.3), CoverageError);
    EXPECT_THROW(integrate(plant, State::Zero(), u, -0.1, 0.1), CoverageError);
    EXPECT_THROW(integrate(plant, State::Zero(), ControlSequence<1>{0.0, 0.04, {}}, 0.0, 0.0), CoverageError);
    const auto single = integrate(plant, State::Zero(), u, 0.08, 0.08);
    EXPECT_EQ(single.samples.size(), 1u);
}

TEST(Integrate, BlowUpReportsStepSizeUnderflow) {
    const Escape plant;
    EXPECT_THROW(integrate(plant, Escape::State(1.0), constant_input(0.0, 0.0, 1.0, 2), 0.0, 2.0),
                 StepSizeUnderflow);
}

TEST(DormandPrince, FixedStepNeedsFiniteStep) {
    StepperOptions opts;
    opts.fixed_step = true;
    EXPECT_THROW((DormandPrince<Eigen::VectorXd>(0.0, Eigen::VectorXd::Ones(1), opts)), InvalidArgument);
}

TEST(DormandPrince, DenseOutputInterpolates) {
    DormandPrince<Eigen::VectorXd> stepper(0.0, Eigen::VectorXd::Ones(1), StepperOptions{1e-10, 1e-10});
    std::vector<DenseSegment<Eigen::VectorXd>> segs;
    auto f = [](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; };
    stepper.advance_to(f, 2.0, [&](const DenseSegment<Eigen::VectorXd>& s) { segs.push_back(s); });
    ASSERT_FALSE(segs.empty());
    for (const auto& s : segs) {
        const double tm = s.t0 + 0.37 * s.h;
        EXPECT_NEAR(s(tm)[0], std::exp(-tm), 1e-9);
    }
    EXPECT_NEAR(stepper.state()[0], std::exp(-2.0), 1e-9);
    EXPECT_GT(stepper.stats().accepted, 0u);
}

}  // namespace
}  // namespace fmpc
