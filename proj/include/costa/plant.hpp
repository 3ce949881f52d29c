#pragma once

#include "costa/types.hpp"

#include <cmath>
#include <string>

namespace costa {

// ============================================================================
// Constants
// ============================================================================

template <typename Scalar>
struct PlantConstants {
    Scalar k0 = 2e-5;
    Scalar k1 = 7.5e-4;
    Scalar k2 = 0.18;
    Scalar k3 = 1.7e-7;
    Scalar k4 = 0.036;
    Scalar k5 = 0.03;
    Scalar k6 = 4.43e-8;
    Scalar k7 = 338;
    Scalar k8 = 1.41;
    Scalar k9 = 17.92;
    Scalar k10 = 0.00083;
    Scalar k11 = 0.2;
    Scalar k12 = 237.5;
    Scalar k13 = 0.99;
    Scalar k14 = 0.0077;
    Scalar k15 = 0.2;
    Scalar k16 = 35;
    Scalar k17 = 5.8e-7;
    Scalar k18 = 0.04;
    Scalar alpha = 5.66e-4;
    Scalar beta = 7.58e-4;
    Scalar c_x2_crit = 0.022;
    /// Constant liquidus temperature of the ablated model (degC).
    Scalar g1_ablated = 968;
    /// Multiplies the ledge-to-wall heat flux in dx7. The default is the ledge
    /// area k9, matching the flux that enters the wall in dx8; 1 reproduces the
    /// unscaled printed form.
    Scalar ledge_wall_area = 17.92;

    template <typename Other>
    [[nodiscard]] PlantConstants<Other> cast() const {
        PlantConstants<Other> c;
        c.k0 = Other(k0); c.k1 = Other(k1); c.k2 = Other(k2); c.k3 = Other(k3);
        c.k4 = Other(k4); c.k5 = Other(k5); c.k6 = Other(k6); c.k7 = Other(k7);
        c.k8 = Other(k8); c.k9 = Other(k9); c.k10 = Other(k10); c.k11 = Other(k11);
        c.k12 = Other(k12); c.k13 = Other(k13); c.k14 = Other(k14); c.k15 = Other(k15);
        c.k16 = Other(k16); c.k17 = Other(k17); c.k18 = Other(k18);
        c.alpha = Other(alpha); c.beta = Other(beta); c.c_x2_crit = Other(c_x2_crit);
        c.g1_ablated = Other(g1_ablated); c.ledge_wall_area = Other(ledge_wall_area);
        return c;
    }
};

template <typename Scalar>
struct AuxQuantities {
    Scalar c_x2;
    Scalar c_x3;
    Scalar g1;  ///< liquidus temperature
    Scalar g2;  ///< electrical conductivity
    Scalar g3;  ///< bubble coverage
    Scalar g4;  ///< bubble thickness
    Scalar g5;  ///< bubble voltage drop
};

template <typename Scalar>
struct MassRatios {
    Scalar c_x2;
    Scalar c_x3;
};

// ============================================================================
// Auxiliary quantities
// ============================================================================

namespace detail {

template <typename Scalar>
void require_finite(const Scalar& v, const char* name) {
    using std::isfinite;
    if (!isfinite(v)) throw NumericError(std::string("non-finite ") + name, name);
}

}  // namespace detail

template <typename Derived>
[[nodiscard]] MassRatios<typename Derived::Scalar> mass_ratios(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Scalar total = x(1) + x(2) + x(3);
    if (!(total > Scalar(0))) throw NumericError("x2 + x3 + x4 must be positive", "mass_ratios");
    return {x(1) / total, x(2) / total};
}

/// Composition-dependent liquidus temperature.
template <typename Scalar>
[[nodiscard]] Scalar liquidus(Scalar c_x2, Scalar c_x3) {
    using std::pow;
    const Scalar denom = Scalar(-23) * c_x2 * c_x3 - Scalar(17) * c_x3 * c_x3 + Scalar(9.36) * c_x3 + Scalar(1);
    if (denom == Scalar(0)) throw NumericError("liquidus denominator vanished", "g1");
    return Scalar(991.2) + Scalar(112) * c_x3 + Scalar(61) * pow(c_x3, Scalar(1.5))
           - Scalar(3265.5) * pow(c_x3, Scalar(2.2)) - Scalar(793) * c_x2 / denom;
}

template <typename DerivedX, typename DerivedU>
[[nodiscard]] AuxQuantities<typename DerivedX::Scalar> aux_quantities(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& u,
    const PlantConstants<typename DerivedX::Scalar>& k, LiquidusMode mode) {
    using Scalar = typename DerivedX::Scalar;
    using std::exp;
    const auto [c2, c3] = mass_ratios(x);
    const Scalar u1 = u(0);
    const Scalar u2 = u(1);

    AuxQuantities<Scalar> a{c2, c3, Scalar(0), Scalar(0), Scalar(0), Scalar(0), Scalar(0)};
    a.g1 = mode == LiquidusMode::True ? liquidus(c2, c3) : k.g1_ablated;
    detail::require_finite(a.g1, "g1");

    a.g2 = exp(Scalar(2.496) - Scalar(2068.4) / (Scalar(273) + x(5)) - Scalar(2.07) * c2);
    detail::require_finite(a.g2, "g2");

    const Scalar dc = c2 - k.c_x2_crit;
    const Scalar anode_denom = Scalar(735.3) * dc + Scalar(1);
    if (anode_denom == Scalar(0)) throw NumericError("bubble coverage denominator vanished", "g3");
    a.g3 = Scalar(0.531) + Scalar(3.06e-18) * u1 * u1 * u1 - Scalar(2.51e-12) * u1 * u1
           + Scalar(6.96e-7) * u1 - (Scalar(14.37) * dc - Scalar(0.431)) / anode_denom;
    detail::require_finite(a.g3, "g3");

    a.g4 = (Scalar(0.5517) + Scalar(3.8168e-6) * u2) / (Scalar(1) + Scalar(8.271e-6) * u2);
    detail::require_finite(a.g4, "g4");

    const Scalar bubble_denom = a.g2 * (Scalar(1) - a.g3);
    if (bubble_denom == Scalar(0)) throw NumericError("bubble voltage denominator vanished", "g5");
    a.g5 = Scalar(3.8168e-6) * a.g3 * a.g4 * u2 / bubble_denom;
    detail::require_finite(a.g5, "g5");
    return a;
}

// ============================================================================
// Dynamics
// ============================================================================

template <typename DerivedX, typename DerivedU>
[[nodiscard]] StateDerivative<typename DerivedX::Scalar> derivative(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& u,
    const PlantConstants<typename DerivedX::Scalar>& k, LiquidusMode mode) {
    using Scalar = typename DerivedX::Scalar;
    using std::isfinite;
    if (!(x(0) > Scalar(0))) throw NumericError("ledge mass x1 must be positive", "x1", 0);
    if (!(x(3) > Scalar(0))) throw NumericError("cryolite mass x4 must be positive", "x4", 3);

    const auto a = aux_quantities(x, u, k, mode);
    const Scalar g1 = a.g1;
    const Scalar ledge = k.k0 * x(0);
    const Scalar freeze = k.k1 * (g1 - x(6)) / ledge;
    const Scalar melt = k.k2 * (x(5) - g1);
    const Scalar ledge_to_wall = (x(6) - x(7)) / (k.k14 + k.k15 * ledge);

    StateDerivative<Scalar> dx;
    dx(0) = freeze - melt;
    dx(1) = u(0) - k.k3 * u(1);
    dx(2) = u(2) - k.k4 * u(0);
    dx(3) = -freeze + melt + k.k5 * u(0);
    dx(4) = k.k6 * u(1) - u(3);
    dx(5) = k.alpha / (x(1) + x(2) + x(3))
            * (u(1) * a.g5 + u(1) * u(1) * u(4) / (Scalar(2620) * a.g2)
               - k.k7 * (x(5) - g1) * (x(5) - g1)
               + k.k8 * (x(5) - g1) * (g1 - x(6)) / ledge
               - k.k9 * (x(5) - x(6)) / (k.k10 + k.k11 * ledge));
    dx(6) = k.beta / x(0)
            * (k.k9 * (g1 - x(6)) / (k.k15 * ledge) - k.k12 * (x(5) - g1) * (g1 - x(6))
               + k.k13 * (g1 - x(6)) * (g1 - x(6)) / ledge - k.ledge_wall_area * ledge_to_wall);
    dx(7) = k.k17 * k.k9 * (ledge_to_wall - (x(7) - k.k16) / (k.k14 + k.k18));

    for (int i = 0; i < kStateDim; ++i) {
        if (!isfinite(dx(i))) {
            throw NumericError("non-finite derivative component dx" + std::to_string(i + 1),
                               "dx" + std::to_string(i + 1), i);
        }
    }
    return dx;
}

/// True-minus-ablated derivative: the corrective source term a perfect
/// corrector would supply.
template <typename DerivedX, typename DerivedU>
[[nodiscard]] StateDerivative<typename DerivedX::Scalar> residual_oracle(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& u,
    const PlantConstants<typename DerivedX::Scalar>& k) {
    return derivative(x, u, k, LiquidusMode::True) - derivative(x, u, k, LiquidusMode::Ablated);
}

}  // namespace costa
