#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace costa {

inline constexpr int kStateDim = 8;
inline constexpr int kInputDim = 5;
inline constexpr int kFeatureDim = kStateDim + kInputDim;

/// x1 ledge mass, x2 alumina, x3 AlF3, x4 cryolite, x5 metal (kg);
/// x6 bath, x7 ledge, x8 wall temperature (degC).
template <typename Scalar>
using CellState = Eigen::Matrix<Scalar, kStateDim, 1>;

/// u1 alumina feed, u3 AlF3 feed, u4 tapping (kg/s); u2 line current (kA);
/// u5 anode-cathode distance (cm).
template <typename Scalar>
using ControlInput = Eigen::Matrix<Scalar, kInputDim, 1>;

template <typename Scalar>
using StateDerivative = Eigen::Matrix<Scalar, kStateDim, 1>;

template <typename Scalar>
using Feature = Eigen::Matrix<Scalar, kFeatureDim, 1>;

/// Rows are time steps.
using StateSeries = Eigen::Matrix<double, Eigen::Dynamic, kStateDim, Eigen::RowMajor>;
using InputSeries = Eigen::Matrix<double, Eigen::Dynamic, kInputDim, Eigen::RowMajor>;

enum class LiquidusMode { True, Ablated };

// ============================================================================
// Errors
// ============================================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A denominator vanished or a value left the finite range.
class NumericError : public Error {
public:
    NumericError(std::string what, std::string quantity, int component = -1)
        : Error(std::move(what)), quantity_(std::move(quantity)), component_(component) {}

    [[nodiscard]] const std::string& quantity() const noexcept { return quantity_; }
    /// Zero-based state component, or -1 for auxiliary quantities.
    [[nodiscard]] int component() const noexcept { return component_; }

private:
    std::string quantity_;
    int component_;
};

/// Ground-truth simulation left the finite range.
class SimulationError : public Error {
public:
    SimulationError(std::string what, std::ptrdiff_t step, int component)
        : Error(std::move(what)), step_(step), component_(component) {}

    [[nodiscard]] std::ptrdiff_t step() const noexcept { return step_; }
    [[nodiscard]] int component() const noexcept { return component_; }

private:
    std::ptrdiff_t step_;
    int component_;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace costa
