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
#ifndef FMPC_DORMAND_PRINCE_HPP
#define FMPC_DORMAND_PRINCE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>

#include <Eigen/Core>

#include "fmpc/errors.hpp"

namespace fmpc {

struct StepperOptions {
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    double max_step = std::numeric_limits<double>::infinity();
    /// Take steps of exactly `max_step` (clamped to targets) with no error control.
    bool fixed_step = false;
    std::size_t max_steps = 2'000'000;
};

struct StepperStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;

    StepperStats& operator+=(const StepperStats& o) {
        accepted += o.accepted;
        rejected += o.rejected;
        rhs_evals += o.rhs_evals;
        return *this;
    }
};

/// Quartic continuous extension of one accepted Dormand-Prince step.
template <class Vec>
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    std::array<Vec, 5> coeff;

    double t1() const { return t0 + h; }

    Vec operator()(double t) const {
        const double theta = (t - t0) / h;
        const double theta1 = 1.0 - theta;
        return coeff[0] + theta * (coeff[1] + theta1 * (coeff[2] + theta * (coeff[3] + theta1 * coeff[4])));
    }
};

struct NoDenseOutput {};

/// Embedded Runge-Kutta 5(4) pair of Dormand and Prince with FSAL, PI step
/// size control and optional dense output. `Vec` is any Eigen column vector.
///
/// The right-hand side may return non-finite values to signal "undefined
/// here"; such trial steps are rejected and retried with a smaller step.
template <class Vec>
class DormandPrince {
public:
    DormandPrince(double t, Vec x, StepperOptions opts = {}) : t_(t), x_(std::move(x)), opts_(opts) {
        if (opts_.fixed_step && !(std::isfinite(opts_.max_step) && opts_.max_step > 0.0)) {
            throw InvalidArgument("fixed-step integration needs a finite positive max_step");
        }
        if (!(opts_.abs_tol > 0.0 && opts_.rel_tol >= 0.0)) throw InvalidArgument("stepper tolerances must be positive");
    }

    double time() const { return t_; }
    const Vec& state() const { return x_; }
    const StepperStats& stats() const { return stats_; }
    const StepperOptions& options() const { return opts_; }

    /// Forget the cached derivative. Required whenever the right-hand side
    /// changes discontinuously at the current time (input breakpoints).
    void reset_derivative() { have_k1_ = false; }

    /// Seed the next trial step size (adaptive mode only).
    void set_step(double h) {
        h_ = h;
        facold_ = 1e-4;
    }

    /// Integrate to exactly `t_target`. `on_step` receives a DenseSegment for
    /// every accepted step when it is not NoDenseOutput.
    template <class Rhs, class OnStep = NoDenseOutput>
    void advance_to(Rhs&& f, double t_target, OnStep&& on_step = {}) {
        if (!(t_target >= t_)) {
            if (t_target == t_) return;
            throw IntegrationFailure("cannot integrate backwards to t=" + std::to_string(t_target));
        }
        if (!have_k1_) {
            k1_ = f(t_, x_);
            ++stats_.rhs_evals;
            have_k1_ = true;
            if (!k1_.allFinite()) throw IntegrationFailure("right-hand side undefined at t=" + std::to_string(t_));
        }
        if (opts_.fixed_step) {
            h_ = opts_.max_step;
        } else if (h_ <= 0.0) {
            h_ = initial_step(f, t_target);
        }

        bool last_rejected = false;
        std::size_t steps = 0;
        while (t_ < t_target) {
            if (++steps > opts_.max_steps) throw IntegrationFailure("maximum number of steps exceeded");
            const double remaining = t_target - t_;
            double h = std::min(h_, opts_.max_step);
            bool lands = false;
            if (h >= remaining * (1.0 - 1e-12)) {
                h = remaining;
                lands = true;
            }
            if (h <= 1e-13 * std::max(1.0, std::abs(t_))) {
                throw StepSizeUnderflow("step size underflow at t=" + std::to_string(t_));
            }

            step(f, h);

            double err = 0.0;
            if (!opts_.fixed_step) err = error_norm();
            if (!opts_.fixed_step && !std::isfinite(err)) {
                ++stats_.rejected;
                h_ = 0.25 * h;
                last_rejected = true;
                continue;
            }
            if (opts_.fixed_step && !(x_new_.allFinite() && k7_.allFinite())) {
                throw IntegrationFailure("non-finite state in fixed-step integration at t=" + std::to_string(t_));
            }

            double h_next = opts_.fixed_step ? opts_.max_step : h;
            if (!opts_.fixed_step) {
                const double fac11 = std::pow(err, kExpo1);
                double fac = fac11 / std::pow(facold_, kBeta);
                fac = std::max(kFacMin, std::min(kFacMax, fac / kSafety));
                h_next = h / fac;
                if (err > 1.0) {
                    ++stats_.rejected;
                    h_ = h / std::min(kFacMax, fac11 / kSafety);
                    last_rejected = true;
                    continue;
                }
                facold_ = std::max(err, 1e-4);
                if (last_rejected) h_next = std::min(h_next, h);
            }

            ++stats_.accepted;
            const double t_new = lands ? t_target : t_ + h;
            if constexpr (!std::is_same_v<std::decay_t<OnStep>, NoDenseOutput>) {
                on_step(dense_segment(h));
            }
            t_ = t_new;
            x_ = x_new_;
            k1_ = k7_;
            last_rejected = false;
            if (!opts_.fixed_step) {
                // A step shortened to hit the target says nothing about the
                // scale of the next one.
                h_ = lands ? std::max(h_next, h_) : h_next;
            }
        }
    }

private:
    static constexpr double kBeta = 0.04;
    static constexpr double kExpo1 = 0.2 - kBeta * 0.75;
    static constexpr double kFacMin = 0.1;
    static constexpr double kFacMax = 5.0;
    static constexpr double kSafety = 0.9;

    template <class Rhs>
    void step(Rhs& f, double h) {
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                         a76 = 11.0 / 84;

        k2_ = f(t_ + c2 * h, Vec(x_ + h * (a21 * k1_)));
        k3_ = f(t_ + c3 * h, Vec(x_ + h * (a31 * k1_ + a32 * k2_)));
        k4_ = f(t_ + c4 * h, Vec(x_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_)));
        k5_ = f(t_ + c5 * h, Vec(x_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_)));
        k6_ = f(t_ + h, Vec(x_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_)));
        x_new_ = x_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
        k7_ = f(t_ + h, x_new_);
        stats_.rhs_evals += 6;
        h_last_ = h;
    }

    double error_norm() const {
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;
        const Vec err = h_last_ * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        const auto scale = opts_.abs_tol + opts_.rel_tol * x_.array().abs().max(x_new_.array().abs());
        const double sum = (err.array() / scale).square().sum();
        return std::sqrt(sum / static_cast<double>(x_.size()));
    }

    DenseSegment<Vec> dense_segment(double h) const {
        constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                         d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                         d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
        DenseSegment<Vec> seg;
        seg.t0 = t_;
        seg.h = h;
        const Vec diff = x_new_ - x_;
        const Vec bspl = h * k1_ - diff;
        seg.coeff[0] = x_;
        seg.coeff[1] = diff;
        seg.coeff[2] = bspl;
        seg.coeff[3] = diff - h * k7_ - bspl;
        seg.coeff[4] = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
        return seg;
    }

    template <class Rhs>
    double initial_step(Rhs& f, double t_target) {
        const auto scale = opts_.abs_tol + opts_.rel_tol * x_.array().abs();
        const double n = static_cast<double>(x_.size());
        const double d0 = std::sqrt((x_.array() / scale).square().sum() / n);
        const double d1 = std::sqrt((k1_.array() / scale).square().sum() / n);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_target - t_);
        const Vec k = f(t_ + h0, Vec(x_ + h0 * k1_));
        ++stats_.rhs_evals;
        double d2 = std::sqrt(((k - k1_).array() / scale).square().sum() / n) / h0;
        if (!std::isfinite(d2)) return h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, opts_.max_step});
    }

    double t_;
    Vec x_;
    StepperOptions opts_;
    StepperStats stats_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, x_new_;
    bool have_k1_ = false;
    double h_ = 0.0;
    double h_last_ = 0.0;
    double facold_ = 1e-4;
};

}  // namespace fmpc

#endif  // FMPC_DORMAND_PRINCE_HPP
