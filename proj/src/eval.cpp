#include "costa/eval.hpp"

#include "costa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace costa {

ForecastResult rolling_forecast(const Predictor& p, const Trajectory& truth, Eigen::Index steps) {
    return rolling_forecast_with(
        [&p](const CellState<double>& x, const ControlInput<double>& u) { return predict_derivative(p, x, u); },
        truth, steps);
}

namespace {

void check_window(const StateSeries& pred, const StateSeries& truth, Eigen::Index last) {
    if (last < 0 || last >= pred.rows() || last >= truth.rows()) throw ConfigError("step outside the forecast");
}

}  // namespace

double an_rfmse(const StateSeries& pred, const StateSeries& truth, const StateScale& state_std, Eigen::Index n) {
    if (n < 1) throw ConfigError("an_rfmse needs at least one step");
    check_window(pred, truth, n);
    const auto window = pred.middleRows(1, n);
    if (!window.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    const auto scaled = ((window - truth.middleRows(1, n)).array().rowwise() / state_std.transpose().array());
    return scaled.square().colwise().mean().mean();
}

double normalized_state_error(const StateSeries& pred, const StateSeries& truth, const StateScale& state_std,
                              Eigen::Index step) {
    check_window(pred, truth, step);
    return ((pred.row(step) - truth.row(step)).array() / state_std.transpose().array()).square().mean();
}

bool detect_blowup(const StateSeries& pred, const StateSeries& truth, const StateScale& state_std,
                   Eigen::Index horizon) {
    check_window(pred, truth, horizon);
    if (!pred.topRows(horizon + 1).allFinite()) return true;
    return normalized_state_error(pred, truth, state_std, horizon) > kBlowupThreshold;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::vector<double> values) {
    SummaryStats s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.median = quantile_sorted(values, 0.5);
    s.q1 = quantile_sorted(values, 0.25);
    s.q3 = quantile_sorted(values, 0.75);
    s.min = values.front();
    s.max = values.back();
    return s;
}

const TypeReport& ForecastReport::type(const std::string& name) const {
    for (const auto& t : types) {
        if (t.type == name) return t;
    }
    throw ConfigError("report has no model type '" + name + "'");
}

ForecastReport evaluate_experiment(const std::vector<ModelEntry>& models, const std::vector<Trajectory>& testset,
                                   std::vector<Eigen::Index> horizons, const StateScale& state_std,
                                   std::size_t workers) {
    if (models.empty() || testset.empty() || horizons.empty()) throw ConfigError("evaluation inputs must be nonempty");
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    const Eigen::Index longest = horizons.back();
    for (const auto& t : testset) {
        if (t.steps() < longest) throw ConfigError("test trajectory shorter than the longest horizon");
    }
    if (horizons.front() < 1) throw ConfigError("horizons must be at least 1 step");

    const std::size_t n_traj = testset.size();
    const std::size_t n_h = horizons.size();
    std::vector<RunRecord> grid(models.size() * n_traj * n_h);
    parallel_for(models.size() * n_traj, workers, [&](std::size_t cell) {
        const std::size_t m = cell / n_traj;
        const std::size_t j = cell % n_traj;
        const auto forecast = rolling_forecast(models[m].predictor, testset[j], longest);
        bool flagged = false;
        for (std::size_t h = 0; h < n_h; ++h) {
            const Eigen::Index step = horizons[h];
            flagged = flagged || detect_blowup(forecast.states, testset[j].states, state_std, step);
            grid[cell * n_h + h] = RunRecord{models[m].type,
                                             models[m].instance,
                                             static_cast<int>(j),
                                             step,
                                             an_rfmse(forecast.states, testset[j].states, state_std, step),
                                             flagged};
        }
    });

    ForecastReport report;
    report.horizons = horizons;
    report.trajectories = n_traj;
    std::vector<std::string> order;
    for (const auto& m : models) {
        if (std::find(order.begin(), order.end(), m.type) == order.end()) order.push_back(m.type);
    }
    for (const auto& type : order) {
        TypeReport tr;
        tr.type = type;
        std::vector<std::size_t> members;
        for (std::size_t m = 0; m < models.size(); ++m) {
            if (models[m].type == type) members.push_back(m);
        }
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return models[a].instance < models[b].instance; });
        tr.instances = static_cast<int>(members.size());
        for (std::size_t h = 0; h < n_h; ++h) {
            HorizonStats hs;
            hs.horizon = horizons[h];
            for (const auto m : members) {
                for (std::size_t j = 0; j < n_traj; ++j) {
                    const auto& run = grid[(m * n_traj + j) * n_h + h];
                    ++hs.n;
                    if (run.blowup) {
                        ++hs.blowup_count;
                    } else {
                        hs.values.push_back(run.an_rfmse);
                    }
                }
            }
            std::sort(hs.values.begin(), hs.values.end());
            hs.stats = summarize(hs.values);
            tr.horizons.push_back(std::move(hs));
        }
        for (const auto m : members) {
            for (std::size_t j = 0; j < n_traj; ++j) {
                for (std::size_t h = 0; h < n_h; ++h) report.runs.push_back(grid[(m * n_traj + j) * n_h + h]);
            }
        }
        report.types.push_back(std::move(tr));
    }
    return report;
}

}  // namespace costa
