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
#ifndef FMPC_FUNNEL_HPP
#define FMPC_FUNNEL_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fmpc/dormand_prince.hpp"
#include "fmpc/errors.hpp"

namespace fmpc {

/// Design parameters of the funnel cascade for relative degree r:
/// alpha, beta, psi0 have r entries, p has r - 1.
struct FunnelParams {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> p;
    std::vector<double> psi0;

    std::size_t relative_degree() const { return alpha.size(); }
    bool operator==(const FunnelParams&) const = default;
};

/// Returns `candidate` unchanged if every design inequality holds, otherwise
/// throws ParamViolation naming the first violated one.
inline FunnelParams validate_params(FunnelParams candidate) {
    const std::size_t r = candidate.alpha.size();
    if (r == 0) throw ParamViolation(0, "relative degree must be positive");
    if (candidate.beta.size() != r) throw ParamViolation(0, "beta must have r entries");
    if (candidate.psi0.size() != r) throw ParamViolation(0, "psi0 must have r entries");
    if (candidate.p.size() != r - 1) throw ParamViolation(0, "p must have r-1 entries");
    for (std::size_t i = 0; i + 1 < r; ++i) {
        if (!(candidate.alpha[i] > candidate.alpha[i + 1])) {
            throw ParamViolation(i, "alpha_" + std::to_string(i + 1) + " > alpha_" + std::to_string(i + 2));
        }
    }
    if (!(candidate.alpha[r - 1] > 0.0)) throw ParamViolation(r - 1, "alpha_r > 0");
    for (std::size_t i = 0; i + 1 < r; ++i) {
        if (!(candidate.p[i] > 1.0)) throw ParamViolation(i, "p_" + std::to_string(i + 1) + " > 1");
    }
    for (std::size_t i = 0; i < r; ++i) {
        if (!(candidate.beta[i] > 0.0)) throw ParamViolation(i, "beta_" + std::to_string(i + 1) + " > 0");
        if (!(candidate.psi0[i] > candidate.beta[i] / candidate.alpha[i])) {
            throw ParamViolation(i, "psi0_" + std::to_string(i + 1) + " > beta/alpha");
        }
    }
    return candidate;
}

struct FunnelValue {
    double psi = 0.0;
    double dpsi = 0.0;
};

/// Dense numerical solution of the funnel cascade
///
///   psi_i' = -alpha_i psi_i + beta_i + p_i (psi_{i+1} - beta_{i+1}/alpha_{i+1}),
///   psi_r' = -alpha_r psi_r + beta_r,
///
/// solved from t = 0. Internally the offsets phi_i = psi_i - beta_i/alpha_i
/// are integrated; they obey a homogeneous cascade with positive solutions,
/// so the floor psi_i > beta_i/alpha_i survives relative error control.
///
/// Reading is thread-safe; extend() is not.
class FunnelTrajectory {
public:
    static constexpr double kTolerance = 1e-10;

    FunnelTrajectory(const FunnelParams& params, double horizon)
        : params_(validate_params(params)),
          stepper_(0.0, initial_offsets(params_), StepperOptions{kTolerance, kTolerance, kMaxStep, false}) {
        if (!(horizon > 0.0)) throw InvalidArgument("funnel horizon must be positive");
        const std::size_t r = params_.relative_degree();
        floors_.resize(r);
        for (std::size_t i = 0; i < r; ++i) floors_[i] = params_.beta[i] / params_.alpha[i];
        extend(horizon);
    }

    const FunnelParams& params() const { return params_; }
    std::size_t relative_degree() const { return params_.relative_degree(); }
    double horizon() const { return horizon_; }
    /// beta_i / alpha_i, the asymptotic value of psi_i.
    double floor(std::size_t i) const { return floors_.at(i); }

    /// Solve further out. No-op when `horizon` is already covered.
    void extend(double horizon) {
        if (horizon <= horizon_) return;
        const Eigen::VectorXd alpha = Eigen::Map<const Eigen::VectorXd>(params_.alpha.data(), params_.alpha.size());
        const std::vector<double>& p = params_.p;
        auto rhs = [&alpha, &p](double, const Eigen::VectorXd& phi) {
            Eigen::VectorXd d = -alpha.cwiseProduct(phi);
            for (std::size_t i = 0; i < p.size(); ++i) d[i] += p[i] * phi[i + 1];
            return d;
        };
        try {
            stepper_.advance_to(rhs, horizon, [this](const DenseSegment<Eigen::VectorXd>& s) { segments_.push_back(s); });
        } catch (const Error& e) {
            throw IntegrationFailure(std::string("funnel integration failed: ") + e.what());
        }
        horizon_ = horizon;
    }

    /// Writes (psi_i(t), psi_i'(t)) for i = 1..r into `out`.
    void eval_into(double t, std::span<FunnelValue> out) const {
        const std::size_t r = relative_degree();
        if (out.size() != r) throw DimensionMismatch("funnel output span must have r entries");
        if (!(t >= 0.0) || t > horizon_ * (1.0 + 1e-14)) {
            throw OutOfHorizon("funnel evaluated at t=" + std::to_string(t) + " outside [0, " +
                               std::to_string(horizon_) + "]");
        }
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const DenseSegment<Eigen::VectorXd>& s) { return v < s.t1(); });
        if (it == segments_.end()) --it;
        if (t == 0.0) {
            for (std::size_t i = 0; i < r; ++i) out[i].psi = params_.psi0[i];
        } else {
            const Eigen::VectorXd phi = (*it)(t);
            // Far out, floor + phi rounds onto the floor; the exact value lies strictly above it.
            for (std::size_t i = 0; i < r; ++i) {
                out[i].psi = std::max(floors_[i] + phi[i], std::nextafter(floors_[i], kInfiniteFloor));
            }
        }
        for (std::size_t i = 0; i < r; ++i) {
            double d = -params_.alpha[i] * out[i].psi + params_.beta[i];
            if (i + 1 < r) d += params_.p[i] * (out[i + 1].psi - floors_[i + 1]);
            out[i].dpsi = d;
        }
    }

    std::vector<FunnelValue> eval(double t) const {
        std::vector<FunnelValue> out(relative_degree());
        eval_into(t, out);
        return out;
    }

    double psi(std::size_t i, double t) const { return eval(t).at(i).psi; }

    std::size_t segment_count() const { return segments_.size(); }

private:
    static constexpr double kMaxStep = 0.02;
    static constexpr double kInfiniteFloor = std::numeric_limits<double>::infinity();

    static Eigen::VectorXd initial_offsets(const FunnelParams& params) {
        Eigen::VectorXd phi(params.relative_degree());
        for (std::size_t i = 0; i < params.relative_degree(); ++i) {
            phi[i] = params.psi0[i] - params.beta[i] / params.alpha[i];
        }
        return phi;
    }

    FunnelParams params_;
    std::vector<double> floors_;
    DormandPrince<Eigen::VectorXd> stepper_;
    std::vector<DenseSegment<Eigen::VectorXd>> segments_;
    double horizon_ = 0.0;
};

inline FunnelTrajectory solve_funnel(const FunnelParams& params, double horizon) {
    return FunnelTrajectory(params, horizon);
}

}  // namespace fmpc

#endif  // FMPC_FUNNEL_HPP
