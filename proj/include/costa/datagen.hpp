#pragma once

#include "costa/integrate.hpp"
#include "costa/norm.hpp"
#include "costa/plant.hpp"
#include "costa/rng.hpp"
#include "costa/types.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace costa {

struct Interval {
    double lo;
    double hi;
};

/// Sampling intervals for initial conditions; alumina and AlF3 are given as
/// mass ratios and converted to masses through x4.
struct InitRanges {
    Interval x1{2060, 4460};
    Interval c_x2{0.02, 0.05};
    Interval c_x3{0.09, 0.13};
    Interval x4{11500, 16000};
    Interval x5{9550, 10600};
    Interval x6{940, 990};
    Interval x7{790, 850};
    Interval x8{555, 610};
    /// x6 is redrawn until it exceeds both the liquidus of the sampled
    /// composition and this floor. Set to -inf with superheat_only off to
    /// sample x6 unconditionally.
    double x6_floor = 968;
    bool superheat_only = true;
};

/// One proportional feed/tapping channel fired as impulses:
/// u = clamp(gain * error + noise, 0, max_rate) every `period` steps, else 0.
struct FeedChannel {
    double gain;
    double setpoint;
    Interval noise;
    int period;
    double max_rate = std::numeric_limits<double>::infinity();
};

struct InputPolicyConfig {
    FeedChannel u1{3e4, 0.023, {-2, 2}, 30};           ///< error = setpoint - c_x2
    FeedChannel u3{1.3e4, 0.105, {-0.5, 0.5}, 60, 5};  ///< error = setpoint - c_x3
    FeedChannel u4{2, 1e4, {-2, 2}, 180};              ///< error = x5 - setpoint
    double u2_nominal = 1.4e5;
    Interval u2_amplitude{-7e3, 7e3};
    double u5_nominal = 0.05;
    Interval u5_amplitude{-0.015, 0.015};
    /// Hold length of each APRBS segment, in steps, inclusive.
    std::int64_t hold_min = 10;
    std::int64_t hold_max = 100;
};

void validate(const InitRanges& r);
void validate(const InputPolicyConfig& p);

[[nodiscard]] CellState<double> sample_initial_state(Rng& rng, const InitRanges& ranges);

/// Piecewise-constant signal of `length` samples with uniform amplitudes and
/// uniform-integer hold lengths.
[[nodiscard]] Eigen::VectorXd aprbs(Rng& rng, Interval amplitude, std::int64_t hold_min, std::int64_t hold_max,
                                    Eigen::Index length);

struct FeedNoise {
    Rng u1;
    Rng u3;
    Rng u4;
};

/// Input at step k given the APRBS offsets for that step. Noise streams are
/// consumed only on impulse steps.
[[nodiscard]] ControlInput<double> control_input_at(Eigen::Index k, const CellState<double>& x,
                                                    const InputPolicyConfig& policy, double u2_offset,
                                                    double u5_offset, FeedNoise& noise);

/// Stateful controller for one trajectory, owning its rng streams.
class InputPolicy {
public:
    InputPolicy(const InputPolicyConfig& config, std::uint64_t master_seed, std::uint64_t group,
                std::uint64_t index, Eigen::Index steps);

    ControlInput<double> operator()(Eigen::Index k, const CellState<double>& x);

private:
    InputPolicyConfig config_;
    Eigen::VectorXd u2_offsets_;
    Eigen::VectorXd u5_offsets_;
    FeedNoise noise_;
};

struct CorpusConfig {
    std::uint64_t seed = 0;
    int n_train = 40;
    int n_test = 100;
    Eigen::Index steps = 5000;
    double dt = 10;
    InitRanges init;
    InputPolicyConfig policy;
    PlantConstants<double> consts;
};

struct Corpus {
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
};

inline constexpr std::uint64_t kTrainGroup = 0;
inline constexpr std::uint64_t kTestGroup = 1;

/// One ground-truth trajectory from its (group, index) rng streams.
[[nodiscard]] Trajectory generate_trajectory(const CorpusConfig& cfg, std::uint64_t group, std::uint64_t index);

[[nodiscard]] Corpus generate_corpus(const CorpusConfig& cfg, std::size_t workers = 1);

// ============================================================================
// Regression pairs
// ============================================================================

/// Columns are samples.
struct RegressionDataset {
    Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic> features;
    Eigen::Matrix<double, kStateDim, Eigen::Dynamic> targets;
    NormStats norm;

    [[nodiscard]] TargetKind target_kind() const { return norm.target_kind; }
    [[nodiscard]] Eigen::Index size() const { return features.cols(); }
    [[nodiscard]] Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic> standardized_features() const;
    [[nodiscard]] Eigen::Matrix<double, kStateDim, Eigen::Dynamic> standardized_targets() const;
};

/// Forward-difference targets, optionally minus the ablated derivative.
[[nodiscard]] RegressionDataset build_dataset(const std::vector<Trajectory>& trajectories, TargetKind kind,
                                              const PlantConstants<double>& consts);

/// Per-state standard deviation over every row of every trajectory.
[[nodiscard]] Eigen::Matrix<double, kStateDim, 1> state_std(const std::vector<Trajectory>& trajectories);

}  // namespace costa
