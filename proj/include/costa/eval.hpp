#pragma once

#include "costa/integrate.hpp"
#include "costa/predictor.hpp"
#include "costa/types.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace costa {

inline constexpr double kBlowupThreshold = 3.0;

using StateScale = Eigen::Matrix<double, kStateDim, 1>;

struct ForecastResult {
    StateSeries states;  ///< row j is the estimate at step j; NaN after divergence
    std::optional<Eigen::Index> first_nonfinite;
};

/// Explicit-Euler rollout of `f(x, u)` from the truth's initial state using the
/// truth's recorded inputs. A throwing or non-finite step marks the remaining
/// rows diverged.
template <typename F>
[[nodiscard]] ForecastResult rolling_forecast_with(F&& f, const Trajectory& truth, Eigen::Index steps) {
    if (steps < 0 || steps > truth.steps()) throw ConfigError("forecast length exceeds the trajectory");
    ForecastResult r;
    r.states.setConstant(steps + 1, kStateDim, std::numeric_limits<double>::quiet_NaN());
    CellState<double> x = truth.states.row(0).transpose();
    r.states.row(0) = x.transpose();
    for (Eigen::Index j = 0; j < steps; ++j) {
        const ControlInput<double> u = truth.inputs.row(j).transpose();
        try {
            x = euler_step(f(x, u), x, truth.dt);
        } catch (const NumericError&) {
            r.first_nonfinite = j + 1;
            break;
        }
        if (!x.allFinite()) {
            r.first_nonfinite = j + 1;
            break;
        }
        r.states.row(j + 1) = x.transpose();
    }
    return r;
}

[[nodiscard]] ForecastResult rolling_forecast(const Predictor& p, const Trajectory& truth, Eigen::Index steps);

/// Mean over states of the per-state mean squared error, normalized by the
/// training-set state spread, over steps 1..n. NaN when a prediction in that
/// window is non-finite.
[[nodiscard]] double an_rfmse(const StateSeries& pred, const StateSeries& truth, const StateScale& state_std,
                              Eigen::Index n);

/// Normalized squared error of the single state at `step`.
[[nodiscard]] double normalized_state_error(const StateSeries& pred, const StateSeries& truth,
                                            const StateScale& state_std, Eigen::Index step);

/// True when the normalized error at the horizon exceeds the threshold or any
/// prediction at or before it is non-finite.
[[nodiscard]] bool detect_blowup(const StateSeries& pred, const StateSeries& truth, const StateScale& state_std,
                                 Eigen::Index horizon);

// ============================================================================
// Aggregation
// ============================================================================

struct ModelEntry {
    std::string type;  ///< report row label, e.g. "costa_sparse"
    int instance = 0;
    Predictor predictor;
};

struct RunRecord {
    std::string type;
    int instance;
    int trajectory;
    Eigen::Index horizon;
    double an_rfmse;  ///< NaN when the forecast diverged inside the window
    bool blowup;
};

struct SummaryStats {
    std::size_t count = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
};

/// Quantile of sorted values by linear interpolation between order statistics.
[[nodiscard]] double quantile_sorted(const std::vector<double>& sorted, double q);
[[nodiscard]] SummaryStats summarize(std::vector<double> values);

struct HorizonStats {
    Eigen::Index horizon = 0;
    std::size_t n = 0;  ///< runs evaluated: instances x trajectories
    std::size_t blowup_count = 0;
    SummaryStats stats;          ///< over runs without blow-up
    std::vector<double> values;  ///< sorted AN-RFMSE of runs without blow-up
};

struct TypeReport {
    std::string type;
    int instances = 0;
    std::vector<HorizonStats> horizons;
};

struct ForecastReport {
    std::vector<Eigen::Index> horizons;
    std::size_t trajectories = 0;
    std::vector<TypeReport> types;
    std::vector<RunRecord> runs;  ///< ordered by type, instance, trajectory, horizon

    [[nodiscard]] const TypeReport& type(const std::string& name) const;
};

/// Every model against every test trajectory. A run flagged at one horizon
/// stays flagged at all later horizons.
[[nodiscard]] ForecastReport evaluate_experiment(const std::vector<ModelEntry>& models,
                                                 const std::vector<Trajectory>& testset,
                                                 std::vector<Eigen::Index> horizons, const StateScale& state_std,
                                                 std::size_t workers = 1);

}  // namespace costa
