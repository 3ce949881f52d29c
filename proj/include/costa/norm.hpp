#pragma once

#include "costa/types.hpp"

#include <string>

namespace costa {

enum class TargetKind { StateDerivative, Residual };

[[nodiscard]] std::string to_string(TargetKind kind);
[[nodiscard]] TargetKind target_kind_from_string(const std::string& name);

/// Column statistics of a regression dataset plus raw-state spread for scoring.
struct NormStats {
    Eigen::Matrix<double, kFeatureDim, 1> feature_mean = Eigen::Matrix<double, kFeatureDim, 1>::Zero();
    Eigen::Matrix<double, kFeatureDim, 1> feature_std = Eigen::Matrix<double, kFeatureDim, 1>::Ones();
    Eigen::Matrix<double, kStateDim, 1> target_mean = Eigen::Matrix<double, kStateDim, 1>::Zero();
    Eigen::Matrix<double, kStateDim, 1> target_std = Eigen::Matrix<double, kStateDim, 1>::Ones();
    Eigen::Matrix<double, kStateDim, 1> state_std = Eigen::Matrix<double, kStateDim, 1>::Ones();
    TargetKind target_kind = TargetKind::StateDerivative;
};

}  // namespace costa
