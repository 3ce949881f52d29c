#pragma once

#include "costa/datagen.hpp"
#include "costa/io.hpp"
#include "costa/rng.hpp"
#include "costa/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>

namespace support {

struct Point {
    costa::CellState<double> x;
    costa::ControlInput<double> u;
};

/// State from the initial-condition ranges and an input from the excitation
/// ranges, without the superheat filter.
inline Point random_point(costa::Rng& rng) {
    costa::InitRanges r;
    r.superheat_only = false;
    Point p;
    p.x = costa::sample_initial_state(rng, r);
    p.u(0) = costa::uniform(rng, 0.0, 60.0);
    p.u(1) = costa::uniform(rng, 1.4e5 - 7e3, 1.4e5 + 7e3);
    p.u(2) = costa::uniform(rng, 0.0, 5.0);
    p.u(3) = costa::uniform(rng, 0.0, 1200.0);
    p.u(4) = costa::uniform(rng, 0.05 - 0.015, 0.05 + 0.015);
    return p;
}

inline std::array<double, 8> arr(const costa::CellState<double>& x) {
    std::array<double, 8> a{};
    for (int i = 0; i < 8; ++i) a[static_cast<std::size_t>(i)] = x(i);
    return a;
}

inline std::array<double, 5> arr(const costa::ControlInput<double>& u) {
    std::array<double, 5> a{};
    for (int i = 0; i < 5; ++i) a[static_cast<std::size_t>(i)] = u(i);
    return a;
}

inline double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Short ground-truth trajectory with default policy.
inline costa::Trajectory short_trajectory(std::uint64_t seed, Eigen::Index steps, std::uint64_t index = 0) {
    costa::CorpusConfig cfg;
    cfg.seed = seed;
    cfg.steps = steps;
    return costa::generate_trajectory(cfg, costa::kTrainGroup, index);
}

/// Re-simulates `coarse` at half the step with each recorded input held over
/// two sub-steps, and returns the fine states at the coarse sample times.
inline costa::StateSeries halved_step_replay(const costa::Trajectory& coarse) {
    const auto fine = costa::simulate(
        coarse.states.row(0).transpose().eval(),
        [&](Eigen::Index k, const costa::CellState<double>&) {
            return costa::ControlInput<double>(coarse.inputs.row(k / 2).transpose());
        },
        2 * coarse.steps(), coarse.dt / 2, costa::PlantConstants<double>{});
    costa::StateSeries out(coarse.states.rows(), costa::kStateDim);
    for (Eigen::Index k = 0; k < out.rows(); ++k) out.row(k) = fine.states.row(2 * k);
    return out;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("costa_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Contents of every regular file under `root`, keyed by relative path.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = costa::read_text(e.path());
    }
    return out;
}

}  // namespace support
