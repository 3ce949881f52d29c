#pragma once

#include "costa/plant.hpp"
#include "costa/types.hpp"

#include <cmath>
#include <string>

namespace costa {

/// Fixed-step sampled trajectory; row k of each series is time k*dt.
struct Trajectory {
    double dt = 10.0;
    StateSeries states;
    InputSeries inputs;
    Eigen::VectorXd g1;  ///< true liquidus at each visited state

    [[nodiscard]] Eigen::Index steps() const { return states.rows() - 1; }
};

/// Classical four-stage Runge-Kutta step with the input held over the step.
template <typename F, typename DerivedX, typename DerivedU>
[[nodiscard]] CellState<typename DerivedX::Scalar> rk4_step(F&& f, const Eigen::MatrixBase<DerivedX>& x,
                                                            const Eigen::MatrixBase<DerivedU>& u,
                                                            typename DerivedX::Scalar dt) {
    using Scalar = typename DerivedX::Scalar;
    using State = CellState<Scalar>;
    const Scalar half = dt / Scalar(2);
    const State k1 = f(x, u);
    const State k2 = f((x + half * k1).eval(), u);
    const State k3 = f((x + half * k2).eval(), u);
    const State k4 = f((x + dt * k3).eval(), u);
    return x + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
}

/// Scalar-field variant used for convergence checks on test problems.
template <typename F, typename Scalar>
[[nodiscard]] Scalar rk4_step_scalar(F&& f, Scalar x, Scalar dt) {
    const Scalar half = dt / Scalar(2);
    const Scalar k1 = f(x);
    const Scalar k2 = f(x + half * k1);
    const Scalar k3 = f(x + half * k2);
    const Scalar k4 = f(x + dt * k3);
    return x + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
}

template <typename DerivedD, typename DerivedX>
[[nodiscard]] auto euler_step(const Eigen::MatrixBase<DerivedD>& deriv, const Eigen::MatrixBase<DerivedX>& x,
                              typename DerivedX::Scalar dt) {
    return (x + dt * deriv).eval();
}

/// Plant dynamics bound to constants and a liquidus mode.
template <typename Scalar>
struct PlantField {
    PlantConstants<Scalar> consts;
    LiquidusMode mode = LiquidusMode::True;

    template <typename DerivedX, typename DerivedU>
    StateDerivative<Scalar> operator()(const Eigen::MatrixBase<DerivedX>& x,
                                       const Eigen::MatrixBase<DerivedU>& u) const {
        return derivative(x, u, consts, mode);
    }
};

/// RK4 rollout. The controller is called as controller(k, x_k) and returns the
/// input applied over [k dt, (k+1) dt]; the last row also records the input the
/// controller emits at the final state.
template <typename Controller>
[[nodiscard]] Trajectory simulate(const CellState<double>& x0, Controller&& controller, Eigen::Index steps,
                                  double dt, const PlantConstants<double>& consts,
                                  LiquidusMode mode = LiquidusMode::True) {
    if (steps < 0) throw ConfigError("steps must be non-negative");
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    const PlantField<double> field{consts, mode};

    Trajectory traj;
    traj.dt = dt;
    traj.states.resize(steps + 1, kStateDim);
    traj.inputs.resize(steps + 1, kInputDim);
    traj.g1.resize(steps + 1);

    CellState<double> x = x0;
    for (Eigen::Index k = 0;; ++k) {
        const ControlInput<double> u = controller(k, x);
        traj.states.row(k) = x.transpose();
        traj.inputs.row(k) = u.transpose();
        const auto r = mass_ratios(x);
        traj.g1(k) = liquidus(r.c_x2, r.c_x3);
        if (k == steps) break;
        try {
            x = rk4_step(field, x, u, dt);
        } catch (const NumericError& e) {
            throw SimulationError("simulation failed at step " + std::to_string(k) + ": " + e.what(), k,
                                  e.component());
        }
        for (int i = 0; i < kStateDim; ++i) {
            if (!std::isfinite(x(i))) {
                throw SimulationError("non-finite state x" + std::to_string(i + 1) + " after step " +
                                          std::to_string(k),
                                      k, i);
            }
        }
    }
    return traj;
}

}  // namespace costa
