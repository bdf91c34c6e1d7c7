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
#ifndef FMPC_MASS_ON_CAR_HPP
#define FMPC_MASS_ON_CAR_HPP

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "fmpc/errors.hpp"
#include "fmpc/plant.hpp"

namespace fmpc {

struct MassOnCarParams {
    double m1 = 4.0;        // car [kg]
    double m2 = 1.0;        // mass on the ramp [kg]
    double k_spring = 2.0;  // [N/m]
    double d_damp = 1.0;    // [Ns/m]
    double theta = std::numbers::pi / 4.0;  // ramp angle [rad]

    bool operator==(const MassOnCarParams&) const = default;
};

/// Car of mass m1 carrying a ramp on which m2 slides, tied to the car by a
/// spring-damper. State (z, s, z', s'): car position, position of m2 along
/// the ramp, and their rates. Input is the force on the car, output is the
/// horizontal position z + cos(theta) s of m2. Relative degree two.
class MassOnCar : public PlantTypes<4, 1, 2> {
public:
    explicit MassOnCar(const MassOnCarParams& params) : params_(params) {
        if (!(params.m1 > 0.0 && params.m2 > 0.0 && params.k_spring > 0.0 && params.d_damp > 0.0)) {
            throw InvalidArgument("mass-on-car masses, spring and damping must be positive");
        }
        cos_ = std::cos(params.theta);
        const double sin = std::sin(params.theta);
        const double det = params.m2 * (params.m1 + params.m2 * sin * sin);
        if (!(det > 1e-12)) throw SingularMassMatrix("mass-on-car mass matrix is singular");
        // Inverse of [[m1 + m2, m2 cos], [m2 cos, m2]].
        inv_mass_ << params.m2 / det, -params.m2 * cos_ / det, -params.m2 * cos_ / det, (params.m1 + params.m2) / det;
        gain_ = inv_mass_(0, 0) + cos_ * inv_mass_(1, 0);
    }

    const MassOnCarParams& params() const { return params_; }
    const Eigen::Matrix2d& inverse_mass_matrix() const { return inv_mass_; }

    State drift(const State& x) const {
        const Eigen::Vector2d acc = inv_mass_ * Eigen::Vector2d(0.0, -spring_damper(x));
        State dx;
        dx << x[2], x[3], acc[0], acc[1];
        return dx;
    }

    InputMatrix input_map(const State&) const {
        InputMatrix g;
        g << 0.0, 0.0, inv_mass_(0, 0), inv_mass_(1, 0);
        return g;
    }

    Output output(const State& x) const { return Output(x[0] + cos_ * x[1]); }

    Chain output_chain(const State& x) const { return Chain(x[0] + cos_ * x[1], x[2] + cos_ * x[3]); }

    /// sin^2(theta) / (m1 + m2 sin^2(theta)), independent of the state.
    Gain gain(const State&) const { return Gain(gain_); }

    Output normal_drift(const State& x) const {
        return Output(-(inv_mass_(0, 1) + cos_ * inv_mass_(1, 1)) * spring_damper(x));
    }

    /// Kinetic energy of both bodies plus spring energy.
    double energy(const State& x) const {
        const Eigen::Vector2d v(x[2], x[3]);
        Eigen::Matrix2d mass;
        mass << params_.m1 + params_.m2, params_.m2 * cos_, params_.m2 * cos_, params_.m2;
        return 0.5 * v.dot(mass * v) + 0.5 * params_.k_spring * x[1] * x[1];
    }

private:
    double spring_damper(const State& x) const { return params_.k_spring * x[1] + params_.d_damp * x[3]; }

    MassOnCarParams params_;
    double cos_ = 0.0;
    double gain_ = 0.0;
    Eigen::Matrix2d inv_mass_;
};

inline MassOnCar mass_on_car(const MassOnCarParams& params) { return MassOnCar(params); }

static_assert(NormalFormPlant<MassOnCar>);

}  // namespace fmpc

#endif  // FMPC_MASS_ON_CAR_HPP
