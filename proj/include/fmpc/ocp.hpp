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
#ifndef FMPC_OCP_HPP
#define FMPC_OCP_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fmpc/baseline.hpp"
#include "fmpc/error_chain.hpp"
#include "fmpc/errors.hpp"
#include "fmpc/funnel.hpp"
#include "fmpc/integrator.hpp"
#include "fmpc/plant.hpp"
#include "fmpc/reference.hpp"

namespace fmpc {

struct OcpSolverOptions {
    /// Forward-difference step, relative to max(1, |u|).
    double fd_step = 1e-6;
    /// Stop when the projected gradient is below this (inf-norm).
    double gradient_tol = 1e-8;
    std::size_t max_iterations = 500;
    /// Quadratic penalty weights for the terminal constraint, tried in order.
    std::vector<double> penalty_weights = {1e2, 1e4, 1e6};
    /// Accepted terminal constraint violation.
    double terminal_tol = 1e-9;
    /// The penalty acts on the constraint tightened by this amount, so that
    /// penalized minimizers land inside the original constraint.
    double terminal_backoff = 1e-6;
    double armijo_c1 = 1e-4;
    int max_backtracks = 40;

    bool operator==(const OcpSolverOptions&) const = default;
};

/// One instance of the finite-horizon problem
///
///   minimize  int_{t_hat}^{t_hat+T} l(t, chi(x(t)), u(t)) dt
///   s.t.      x' = f(x) + g(x) u,  x(t_hat) = x_hat,
///             |u(t)| <= M,
///             |e_i(t_hat + delta)| <= eps_i psi_i(t_hat + delta),  i = 1..r,
///
/// over ZOH inputs with step control_dt.
template <ControlAffinePlant P>
struct OcpSpec {
    std::reference_wrapper<const P> plant;
    std::reference_wrapper<const FunnelTrajectory> funnel;
    std::reference_wrapper<const ReferenceSignal<P::kIoDim>> reference;
    typename P::State x_hat;
    double t_hat = 0.0;
    double horizon = 0.6;
    double delta = 0.04;
    double input_bound = 15.0;
    std::vector<double> eps{};
    double control_dt = 0.04;
    StageCostConfig cost{};
    IntegratorOptions integrator{};
    OcpSolverOptions solver{};
};

struct OcpSolverStats {
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    std::size_t cost_evaluations = 0;
    double gradient_norm = 0.0;
};

template <int M>
struct OcpSolution {
    ControlSequence<M> u_star;
    double cost = 0.0;
    std::vector<double> terminal_margins;
    OcpSolverStats stats;
};

namespace detail {

inline std::size_t checked_ratio(double a, double b, const char* what) {
    const double q = a / b;
    const double n = std::round(q);
    if (!(n >= 1.0) || std::abs(q - n) > 1e-9 * std::max(1.0, n)) {
        throw InvalidArgument(std::string(what) + " must be a positive integer multiple of control_dt");
    }
    return static_cast<std::size_t>(n);
}

template <ControlAffinePlant P>
void validate(const OcpSpec<P>& spec) {
    if (!(spec.control_dt > 0.0)) throw InvalidArgument("control_dt must be positive");
    if (!(spec.delta > 0.0 && spec.delta <= spec.horizon * (1.0 + 1e-12))) {
        throw InvalidArgument("need 0 < delta <= T");
    }
    checked_ratio(spec.horizon, spec.control_dt, "T");
    checked_ratio(spec.delta, spec.control_dt, "delta");
    if (!(spec.input_bound >= 0.0)) throw InvalidArgument("input bound M must be non-negative");
    if (spec.eps.size() != static_cast<std::size_t>(P::kRelativeDegree)) {
        throw InvalidArgument("eps must have r entries");
    }
    for (double e : spec.eps) {
        if (!(e > 0.0 && e < 1.0)) throw InvalidArgument("eps_i must lie in (0, 1)");
    }
    if (!(spec.cost.lambda_u >= 0.0)) throw InvalidArgument("lambda_u must be non-negative");
    if (spec.funnel.get().relative_degree() != static_cast<std::size_t>(P::kRelativeDegree)) {
        throw DimensionMismatch("funnel relative degree does not match the plant");
    }
    if (spec.reference.get().max_order() < P::kRelativeDegree) {
        throw InvalidArgument("reference must provide derivatives up to order r");
    }
}

/// |e_i| - eps_i psi_i at one instant, r entries; +inf where saturated.
template <int M, int R>
std::array<double, R> eps_margins(const ErrorChainState<M, R>& st, std::span<const FunnelValue> psi,
                                  const std::vector<double>& eps) {
    std::array<double, R> out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(R); ++i) {
        out[i] = st.saturated() ? -kInfiniteCost : eps[i] * psi[i].psi - st.e[i].norm();
    }
    return out;
}

/// Single-shooting transcription of an OcpSpec with the funnel and reference
/// tabulated on the sample grid.
template <ControlAffinePlant P>
class ShootingProblem {
public:
    static constexpr int M = P::kIoDim;
    static constexpr int R = P::kRelativeDegree;
    using State = typename P::State;
    using Input = typename P::Input;

    struct Evaluation {
        double cost = kInfiniteCost;
        std::array<double, R> margins{};
    };

    explicit ShootingProblem(const OcpSpec<P>& spec) : spec_(spec) {
        validate(spec);
        n_slots_ = checked_ratio(spec.horizon, spec.control_dt, "T");
        terminal_slot_ = checked_ratio(spec.delta, spec.control_dt, "delta");
        q_ = static_cast<std::size_t>(spec.integrator.samples_per_interval);
        seq_.t_start = spec.t_hat;
        seq_.dt = spec.control_dt;
        seq_.values.assign(n_slots_, Input::Zero());
        const double sub = spec.control_dt / static_cast<double>(q_);
        const std::size_t n_samples = n_slots_ * q_ + 1;
        psi_.resize(n_samples);
        ref_.resize(n_samples);
        for (std::size_t idx = 0; idx < n_samples; ++idx) {
            const std::size_t k = idx / q_, j = idx % q_;
            const double t = seq_.breakpoint(k) + static_cast<double>(j) * sub;
            spec.funnel.get().eval_into(t, psi_[idx]);
            for (int o = 0; o < R; ++o) ref_[idx][static_cast<std::size_t>(o)] = spec.reference.get().derivative(t, o);
        }
        breakpoint_state_.resize(n_slots_ + 1);
        breakpoint_cost_.resize(n_slots_ + 1);
    }

    std::size_t slots() const { return n_slots_; }
    std::size_t dimension() const { return n_slots_ * M; }
    std::size_t evaluations() const { return evaluations_; }
    const OcpSpec<P>& spec() const { return spec_; }

    Eigen::VectorXd project(const Eigen::VectorXd& w) const {
        Eigen::VectorXd out = w;
        for (std::size_t k = 0; k < n_slots_; ++k) {
            out.segment<M>(static_cast<Eigen::Index>(k * M)) =
                project_to_ball<M>(Input(w.segment<M>(static_cast<Eigen::Index>(k * M))), spec_.input_bound);
        }
        return out;
    }

    bool admissible(const Eigen::VectorXd& w) const {
        for (std::size_t k = 0; k < n_slots_; ++k) {
            if (w.segment<M>(static_cast<Eigen::Index>(k * M)).norm() > spec_.input_bound) return false;
        }
        return true;
    }

    /// Full evaluation; caches breakpoint states for partial re-evaluation.
    Evaluation evaluate(const Eigen::VectorXd& w) {
        base_ = run(w, 0, spec_.x_hat, 0.0, {}, true);
        return base_;
    }

    /// Evaluation of w, which must agree with the last evaluate() argument on
    /// every slot before `first_changed`.
    Evaluation evaluate_from(const Eigen::VectorXd& w, std::size_t first_changed) {
        if (first_changed == 0 || !std::isfinite(base_.cost) || first_changed > base_valid_until_) {
            return run(w, 0, spec_.x_hat, 0.0, {}, false);
        }
        std::optional<std::array<double, R>> margins;
        if (terminal_slot_ <= first_changed) margins = base_.margins;
        return run(w, first_changed, breakpoint_state_[first_changed], breakpoint_cost_[first_changed], margins,
                   false);
    }

    /// Cost plus weight * sum_i max(0, backoff - margin_i)^2.
    double penalized(const Evaluation& ev, double weight) const {
        if (!std::isfinite(ev.cost)) return kInfiniteCost;
        double v = 0.0;
        for (double m : ev.margins) {
            const double viol = std::max(0.0, spec_.solver.terminal_backoff - m);
            v += viol * viol;
        }
        return ev.cost + weight * v;
    }

    static bool terminal_ok(const Evaluation& ev, double tol) {
        return std::isfinite(ev.cost) && std::all_of(ev.margins.begin(), ev.margins.end(), [tol](double m) { return m >= -tol; });
    }

    /// Best admissible, terminal-feasible point seen by any evaluation.
    const std::optional<Eigen::VectorXd>& best() const { return best_w_; }
    double best_cost() const { return best_cost_; }

    ControlSequence<M> to_sequence(const Eigen::VectorXd& w) const {
        ControlSequence<M> s = seq_;
        for (std::size_t k = 0; k < n_slots_; ++k) s.values[k] = w.segment<M>(static_cast<Eigen::Index>(k * M));
        return s;
    }

    Eigen::VectorXd to_vector(const ControlSequence<M>& s) const {
        Eigen::VectorXd w(static_cast<Eigen::Index>(dimension()));
        for (std::size_t k = 0; k < n_slots_; ++k) w.segment<M>(static_cast<Eigen::Index>(k * M)) = s.values[k];
        return w;
    }

private:
    Evaluation run(const Eigen::VectorXd& w, std::size_t first_slot, const State& x_start, double cost_prefix,
                   std::optional<std::array<double, R>> margins, bool cache) {
        ++evaluations_;
        for (std::size_t k = 0; k < n_slots_; ++k) seq_.values[k] = w.segment<M>(static_cast<Eigen::Index>(k * M));
        const P& plant = spec_.plant.get();
        const double sub = spec_.control_dt / static_cast<double>(q_);
        const std::size_t terminal_idx = terminal_slot_ * q_;
        Evaluation ev;
        double cost = cost_prefix;
        bool ok = true;
        StepperStats stats;
        if (cache) base_valid_until_ = 0;
        try {
            integrate_zoh(plant, x_start, seq_, seq_.breakpoint(first_slot), seq_.t_end(), spec_.integrator, stats,
                          [&](double t, const State& x, std::size_t slot, SamplePoint where) {
                              const std::size_t j =
                                  (where == SamplePoint::kIntervalEnd)
                                      ? q_
                                      : static_cast<std::size_t>(std::llround((t - seq_.breakpoint(slot)) / sub));
                              const std::size_t idx = slot * q_ + j;
                              if (where == SamplePoint::kInterior && j == 0 && cache) {
                                  breakpoint_state_[slot] = x;
                                  breakpoint_cost_[slot] = cost;
                                  base_valid_until_ = slot;
                              }
                              const auto st = chain_from_values<M, R>(0.0, plant.output_chain(x), psi_[idx], ref_[idx]);
                              const double l = stage_cost(st, seq_.values[slot], spec_.cost);
                              if (!std::isfinite(l)) {
                                  ok = false;
                                  return false;
                              }
                              const double weight = (j == 0 || j == q_) ? 0.5 * sub : sub;
                              cost += weight * l;
                              if (idx == terminal_idx && where == SamplePoint::kIntervalEnd) {
                                  margins = eps_margins<M, R>(st, psi_[idx], spec_.eps);
                              }
                              return true;
                          });
        } catch (const IntegrationFailure&) {
            ok = false;
        }
        if (!ok || !margins || !std::isfinite(cost)) return ev;
        ev.cost = cost;
        ev.margins = *margins;
        if (terminal_ok(ev, 0.0) && admissible(w) && ev.cost < best_cost_) {
            best_cost_ = ev.cost;
            best_w_ = w;
        }
        return ev;
    }

    OcpSpec<P> spec_;
    std::size_t n_slots_ = 0;
    std::size_t terminal_slot_ = 0;
    std::size_t q_ = 4;
    ControlSequence<M> seq_;
    std::vector<std::array<FunnelValue, R>> psi_;
    std::vector<std::array<Input, R>> ref_;

    std::vector<State> breakpoint_state_;
    std::vector<double> breakpoint_cost_;
    std::size_t base_valid_until_ = 0;
    Evaluation base_;

    std::size_t evaluations_ = 0;

    std::optional<Eigen::VectorXd> best_w_;
    double best_cost_ = kInfiniteCost;
};

}  // namespace detail

/// Integral of the stage cost under `u` (composite trapezoid on the
/// integrator sub-grid); +inf when the error chain leaves the funnel or the
/// integration fails.
template <ControlAffinePlant P>
double total_cost(const OcpSpec<P>& spec, const ControlSequence<P::kIoDim>& u) {
    detail::ShootingProblem<P> problem(spec);
    if (u.size() != problem.slots() || std::abs(u.t_start - spec.t_hat) > 1e-12 * std::max(1.0, spec.t_hat) ||
        std::abs(u.dt - spec.control_dt) > 1e-15) {
        throw CoverageError("control sequence does not cover the OCP horizon");
    }
    return problem.evaluate(problem.to_vector(u)).cost;
}

struct PostHocCheck {
    double cost = kInfiniteCost;
    std::vector<double> terminal_margins;
};

/// Re-derives cost and terminal margins of `u` through integrate() and the
/// error chain, without the solver's tables or caches.
template <ControlAffinePlant P>
PostHocCheck verify_solution(const OcpSpec<P>& spec, const ControlSequence<P::kIoDim>& u) {
    constexpr int M = P::kIoDim;
    constexpr int R = P::kRelativeDegree;
    PostHocCheck out;
    Trajectory<P> traj;
    try {
        traj = integrate(spec.plant.get(), spec.x_hat, u, spec.t_hat, spec.t_hat + spec.horizon, spec.integrator);
    } catch (const IntegrationFailure&) {
        return out;
    }
    annotate(traj, spec.plant.get(), spec.funnel.get(), spec.reference.get(), spec.cost);
    const auto q = static_cast<std::size_t>(spec.integrator.samples_per_interval);
    const double sub = spec.control_dt / static_cast<double>(q);
    auto ell = [&](const TrajectorySample<P>& s, const typename P::Input& uk) {
        double sum = 0.0;
        for (double r : s.ratios) {
            if (!(r < 1.0)) return kInfiniteCost;
            sum += 1.0 / (1.0 - r);
        }
        return sum - R + spec.cost.lambda_u * uk.squaredNorm();
    };
    double cost = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        for (std::size_t j = 0; j <= q; ++j) {
            const double l = ell(traj.samples.at(k * q + j), u.values[k]);
            if (!std::isfinite(l)) return out;
            cost += ((j == 0 || j == q) ? 0.5 * sub : sub) * l;
        }
    }
    const std::size_t tidx = static_cast<std::size_t>(std::llround(spec.delta / spec.control_dt)) * q;
    const auto& s = traj.samples.at(tidx);
    const auto st = chain<M, R>(s.t, s.zeta, spec.funnel.get(), spec.reference.get());
    const auto psi = spec.funnel.get().eval(s.t);
    for (std::size_t i = 0; i < static_cast<std::size_t>(R); ++i) {
        out.terminal_margins.push_back(spec.eps[i] * psi[i].psi - st.e[i].norm());
    }
    out.cost = cost;
    return out;
}

namespace detail {

/// Projected quasi-Newton descent (BFGS inverse update, Armijo backtracking
/// along the projection arc, forward-difference gradients).
template <ControlAffinePlant P>
class ProjectedQuasiNewton {
public:
    static constexpr int M = P::kIoDim;

    ProjectedQuasiNewton(ShootingProblem<P>& problem, const OcpSolverOptions& opts) : problem_(problem), opts_(opts) {}

    std::size_t iterations() const { return iterations_; }
    double gradient_norm() const { return gradient_norm_; }

    Eigen::VectorXd minimize(Eigen::VectorXd w, double weight) {
        const auto n = static_cast<Eigen::Index>(problem_.dimension());
        auto ev = problem_.evaluate(w);
        double f = problem_.penalized(ev, weight);
        if (!std::isfinite(f)) return w;
        Eigen::VectorXd g = gradient(w, f, weight);
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
        bool identity = true;
        {
            const double ginf = g.lpNorm<Eigen::Infinity>();
            if (ginf > 0.0) H /= ginf;
        }
        int stalls = 0;
        for (std::size_t it = 0; it < opts_.max_iterations; ++it) {
            ++iterations_;
            gradient_norm_ = (problem_.project(w - g) - w).template lpNorm<Eigen::Infinity>();
            if (gradient_norm_ < opts_.gradient_tol) break;

            const Eigen::VectorXd mask = free_mask(w, g);
            const Eigen::VectorXd gf = g.cwiseProduct(mask);
            Eigen::VectorXd d = -(H * gf).cwiseProduct(mask);
            if (!(d.dot(gf) < 0.0)) {
                // Steepest descent along the projection arc.
                H = Eigen::MatrixXd::Identity(n, n) / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300);
                identity = true;
                d = -(H * g);
            }

            double alpha = 1.0;
            bool accepted = false;
            Eigen::VectorXd w_trial;
            double f_trial = kInfiniteCost;
            for (int b = 0; b < opts_.max_backtracks; ++b, alpha *= 0.5) {
                w_trial = problem_.project(w + alpha * d);
                ev = problem_.evaluate(w_trial);
                f_trial = problem_.penalized(ev, weight);
                if (std::isfinite(f_trial) && f_trial <= f + opts_.armijo_c1 * g.dot(w_trial - w)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (identity) break;
                H = Eigen::MatrixXd::Identity(n, n) / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300);
                identity = true;
                continue;
            }
            const Eigen::VectorXd s = w_trial - w;
            if (s.lpNorm<Eigen::Infinity>() == 0.0) break;
            const Eigen::VectorXd g_new = gradient(w_trial, f_trial, weight);
            const Eigen::VectorXd y = g_new - g;
            const double sy = s.dot(y);
            if (sy > 1e-12 * s.norm() * y.norm()) {
                if (identity) H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                const double rho = 1.0 / sy;
                const Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n) - rho * y * s.transpose();
                H = V.transpose() * H * V + rho * s * s.transpose();
                identity = false;
            }
            stalls = (f - f_trial <= 1e-14 * (1.0 + std::abs(f))) ? stalls + 1 : 0;
            w = w_trial;
            f = f_trial;
            g = g_new;
            if (stalls >= 3) break;
        }
        return w;
    }

private:
    /// Zero for slots sitting on the input bound with the descent direction pointing outward.
    Eigen::VectorXd free_mask(const Eigen::VectorXd& w, const Eigen::VectorXd& g) const {
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(w.size());
        const double bound = problem_.spec().input_bound;
        for (std::size_t k = 0; k < problem_.slots(); ++k) {
            const auto i = static_cast<Eigen::Index>(k * M);
            const auto uk = w.segment<M>(i);
            if (uk.norm() >= bound * (1.0 - 1e-12) && g.segment<M>(i).dot(uk) < 0.0) mask.segment<M>(i).setZero();
        }
        return mask;
    }

    /// Forward differences; perturbations stay inside the input ball when
    /// possible and fall back to backward differences at infinite cost.
    Eigen::VectorXd gradient(const Eigen::VectorXd& w, double f, double weight) {
        // Re-evaluate the base point so the breakpoint cache belongs to w.
        problem_.evaluate(w);
        Eigen::VectorXd g(w.size());
        const double bound = problem_.spec().input_bound;
        Eigen::VectorXd wp = w;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const std::size_t slot = static_cast<std::size_t>(i) / M;
            double h = opts_.fd_step * std::max(1.0, std::abs(w[i]));
            wp[i] = w[i] + h;
            const auto si = static_cast<Eigen::Index>(slot * M);
            if (wp.segment<M>(si).norm() > bound) {
                h = -h;
                wp[i] = w[i] + h;
            }
            double fp = problem_.penalized(problem_.evaluate_from(wp, slot), weight);
            if (!std::isfinite(fp)) {
                h = -h;
                wp[i] = w[i] + h;
                fp = problem_.penalized(problem_.evaluate_from(wp, slot), weight);
            }
            g[i] = std::isfinite(fp) ? (fp - f) / h : 0.0;
            wp[i] = w[i];
        }
        return g;
    }

    ShootingProblem<P>& problem_;
    const OcpSolverOptions& opts_;
    std::size_t iterations_ = 0;
    double gradient_norm_ = 0.0;
};

}  // namespace detail

/// Solves the OCP from the warm start (if any), then from zero control, then
/// (for plants with normal-form data) from the sampled funnel controller,
/// stopping at the first start that yields a terminal-feasible point.
template <ControlAffinePlant P>
OcpSolution<P::kIoDim> solve(const OcpSpec<P>& spec, const std::optional<ControlSequence<P::kIoDim>>& warm_start = {}) {
    constexpr int M = P::kIoDim;
    constexpr int R = P::kRelativeDegree;
    detail::ShootingProblem<P> problem(spec);

    {
        const auto st = chain<M, R>(spec.t_hat, spec.plant.get().output_chain(spec.x_hat), spec.funnel.get(),
                                    spec.reference.get());
        const auto psi = spec.funnel.get().eval(spec.t_hat);
        for (std::size_t i = 0; i < static_cast<std::size_t>(R); ++i) {
            if (st.saturated() || st.e[i].norm() > spec.eps[i] * psi[i].psi + spec.solver.terminal_tol) {
                throw InfeasibleStart(spec.t_hat, "measured state outside the eps-funnel at t=" + std::to_string(spec.t_hat));
            }
        }
    }

    std::vector<Eigen::VectorXd> starts;
    if (warm_start) {
        if (warm_start->size() != problem.slots() || std::abs(warm_start->dt - spec.control_dt) > 1e-15) {
            throw InvalidArgument("warm start does not match the OCP grid");
        }
        starts.push_back(problem.to_vector(*warm_start));
    }
    starts.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.dimension())));

    OcpSolverStats stats;
    detail::ProjectedQuasiNewton<P> optimizer(problem, spec.solver);
    auto attempt = [&](const Eigen::VectorXd& start) {
        Eigen::VectorXd w = problem.project(start);
        for (double weight : spec.solver.penalty_weights) {
            w = optimizer.minimize(w, weight);
            const auto ev = problem.evaluate(w);
            if (!std::isfinite(ev.cost)) break;
            // Penalty already inactive: heavier weights give the same minimizer.
            if (std::all_of(ev.margins.begin(), ev.margins.end(),
                            [&](double m) { return m >= spec.solver.terminal_backoff; })) {
                break;
            }
        }
        return problem.best().has_value();
    };

    bool found = false;
    for (std::size_t s = 0; s < starts.size() && !found; ++s) {
        if (s > 0) ++stats.restarts;
        found = attempt(starts[s]);
    }
    if constexpr (NormalFormPlant<P>) {
        if (!found) {
            ++stats.restarts;
            FunnelControllerConfig<P> fc{spec.plant, spec.funnel, spec.reference, std::nullopt, spec.cost};
            found = attempt(problem.to_vector(zoh_feedback_sequence(fc, spec.x_hat, spec.t_hat, spec.control_dt,
                                                                    problem.slots(), spec.input_bound,
                                                                    spec.integrator)));
        }
    }
    stats.iterations = optimizer.iterations();
    stats.gradient_norm = optimizer.gradient_norm();
    stats.cost_evaluations = problem.evaluations();

    if (!problem.best()) {
        throw NoFeasiblePoint(spec.t_hat, "no finite-cost terminal-feasible control found at t_hat=" +
                                              std::to_string(spec.t_hat));
    }
    OcpSolution<M> sol;
    sol.u_star = problem.to_sequence(problem.project(*problem.best()));
    const PostHocCheck check = verify_solution(spec, sol.u_star);
    if (!std::isfinite(check.cost) ||
        std::any_of(check.terminal_margins.begin(), check.terminal_margins.end(),
                    [&](double m) { return m < -spec.solver.terminal_tol; })) {
        throw NoFeasiblePoint(spec.t_hat, "solver candidate failed independent re-verification at t_hat=" +
                                              std::to_string(spec.t_hat));
    }
    sol.cost = check.cost;
    sol.terminal_margins = check.terminal_margins;
    sol.stats = stats;
    return sol;
}

}  // namespace fmpc

#endif  // FMPC_OCP_HPP
