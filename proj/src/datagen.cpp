#include "costa/datagen.hpp"

#include "costa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace costa {

std::string to_string(TargetKind kind) {
    return kind == TargetKind::StateDerivative ? "state_derivative" : "residual";
}

TargetKind target_kind_from_string(const std::string& name) {
    if (name == "state_derivative") return TargetKind::StateDerivative;
    if (name == "residual") return TargetKind::Residual;
    throw ConfigError("unknown target kind '" + name + "'");
}

namespace {

void check_interval(const Interval& i, const char* name) {
    if (!(i.lo <= i.hi)) throw ConfigError(std::string("empty interval for ") + name);
}

double draw(Rng& rng, const Interval& i) { return uniform(rng, i.lo, i.hi); }

double impulse(Eigen::Index k, const FeedChannel& ch, double error, Rng& rng) {
    if (k % ch.period != 0) return 0.0;
    const double u = ch.gain * error + draw(rng, ch.noise);
    return std::clamp(u, 0.0, ch.max_rate);
}

template <typename Mat>
Eigen::VectorXd row_std(const Mat& m, const Eigen::VectorXd& mean) {
    const double n = static_cast<double>(m.cols());
    Eigen::VectorXd s = ((m.colwise() - mean).array().square().rowwise().sum() / n).sqrt().matrix();
    // A constant column carries no scale; unit spread keeps standardization finite.
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!(s(i) > 0)) s(i) = 1.0;
    }
    return s;
}

}  // namespace

void validate(const InitRanges& r) {
    check_interval(r.x1, "x1");
    check_interval(r.c_x2, "c_x2");
    check_interval(r.c_x3, "c_x3");
    check_interval(r.x4, "x4");
    check_interval(r.x5, "x5");
    check_interval(r.x6, "x6");
    check_interval(r.x7, "x7");
    check_interval(r.x8, "x8");
}

void validate(const InputPolicyConfig& p) {
    for (const auto* ch : {&p.u1, &p.u3, &p.u4}) {
        if (ch->period < 1) throw ConfigError("impulse period must be at least 1");
        check_interval(ch->noise, "impulse noise");
        if (!(ch->max_rate >= 0)) throw ConfigError("impulse max_rate must be non-negative");
    }
    check_interval(p.u2_amplitude, "u2 amplitude");
    check_interval(p.u5_amplitude, "u5 amplitude");
    if (p.hold_min < 1 || p.hold_max < p.hold_min) throw ConfigError("invalid APRBS hold range");
    if (!(p.u2_nominal + p.u2_amplitude.lo > 0)) throw ConfigError("u2 must stay positive");
    if (!(p.u5_nominal + p.u5_amplitude.lo > 0)) throw ConfigError("u5 must stay positive");
}

CellState<double> sample_initial_state(Rng& rng, const InitRanges& ranges) {
    CellState<double> x;
    x(0) = draw(rng, ranges.x1);
    const double c2 = draw(rng, ranges.c_x2);
    const double c3 = draw(rng, ranges.c_x3);
    x(3) = draw(rng, ranges.x4);
    x(4) = draw(rng, ranges.x5);
    x(5) = draw(rng, ranges.x6);
    x(6) = draw(rng, ranges.x7);
    x(7) = draw(rng, ranges.x8);

    const double solvent = 1.0 - c2 - c3;
    if (!(solvent > 0)) throw ConfigError("mass ratios leave no cryolite fraction");
    const double total = x(3) / solvent;
    x(1) = c2 * total;
    x(2) = c3 * total;

    if (ranges.superheat_only) {
        const double floor = std::max(liquidus(c2, c3), ranges.x6_floor);
        if (!(ranges.x6.hi > floor)) throw ConfigError("x6 range lies entirely below the superheat floor");
        while (!(x(5) > floor)) x(5) = draw(rng, ranges.x6);
    }
    return x;
}

Eigen::VectorXd aprbs(Rng& rng, Interval amplitude, std::int64_t hold_min, std::int64_t hold_max,
                      Eigen::Index length) {
    Eigen::VectorXd out(length);
    Eigen::Index i = 0;
    while (i < length) {
        const double a = draw(rng, amplitude);
        const auto hold = static_cast<Eigen::Index>(uniform_int(rng, hold_min, hold_max));
        const Eigen::Index end = std::min(length, i + hold);
        out.segment(i, end - i).setConstant(a);
        i = end;
    }
    return out;
}

ControlInput<double> control_input_at(Eigen::Index k, const CellState<double>& x, const InputPolicyConfig& policy,
                                      double u2_offset, double u5_offset, FeedNoise& noise) {
    const auto r = mass_ratios(x);
    ControlInput<double> u;
    u(0) = impulse(k, policy.u1, policy.u1.setpoint - r.c_x2, noise.u1);
    u(1) = policy.u2_nominal + u2_offset;
    u(2) = impulse(k, policy.u3, policy.u3.setpoint - r.c_x3, noise.u3);
    u(3) = impulse(k, policy.u4, x(4) - policy.u4.setpoint, noise.u4);
    u(4) = policy.u5_nominal + u5_offset;
    return u;
}

InputPolicy::InputPolicy(const InputPolicyConfig& config, std::uint64_t master_seed, std::uint64_t group,
                         std::uint64_t index, Eigen::Index steps)
    : config_(config),
      noise_{make_stream(master_seed, group, index, StreamRole::NoiseU1),
             make_stream(master_seed, group, index, StreamRole::NoiseU3),
             make_stream(master_seed, group, index, StreamRole::NoiseU4)} {
    validate(config_);
    Rng r2 = make_stream(master_seed, group, index, StreamRole::AprbsU2);
    Rng r5 = make_stream(master_seed, group, index, StreamRole::AprbsU5);
    u2_offsets_ = aprbs(r2, config_.u2_amplitude, config_.hold_min, config_.hold_max, steps + 1);
    u5_offsets_ = aprbs(r5, config_.u5_amplitude, config_.hold_min, config_.hold_max, steps + 1);
}

ControlInput<double> InputPolicy::operator()(Eigen::Index k, const CellState<double>& x) {
    return control_input_at(k, x, config_, u2_offsets_(k), u5_offsets_(k), noise_);
}

Trajectory generate_trajectory(const CorpusConfig& cfg, std::uint64_t group, std::uint64_t index) {
    Rng init = make_stream(cfg.seed, group, index, StreamRole::InitialState);
    const CellState<double> x0 = sample_initial_state(init, cfg.init);
    InputPolicy policy(cfg.policy, cfg.seed, group, index, cfg.steps);
    return simulate(x0, policy, cfg.steps, cfg.dt, cfg.consts, LiquidusMode::True);
}

Corpus generate_corpus(const CorpusConfig& cfg, std::size_t workers) {
    if (cfg.n_train < 1 || cfg.n_test < 1) throw ConfigError("corpus sizes must be at least 1");
    validate(cfg.init);
    validate(cfg.policy);
    Corpus corpus;
    corpus.train.resize(static_cast<std::size_t>(cfg.n_train));
    corpus.test.resize(static_cast<std::size_t>(cfg.n_test));
    const std::size_t total = corpus.train.size() + corpus.test.size();
    parallel_for(total, workers, [&](std::size_t i) {
        const bool is_train = i < corpus.train.size();
        const std::uint64_t group = is_train ? kTrainGroup : kTestGroup;
        const std::size_t index = is_train ? i : i - corpus.train.size();
        try {
            auto& slot = is_train ? corpus.train[index] : corpus.test[index];
            slot = generate_trajectory(cfg, group, index);
        } catch (const SimulationError& e) {
            throw SimulationError(std::string(is_train ? "train" : "test") + " trajectory " +
                                      std::to_string(index) + ": " + e.what(),
                                  e.step(), e.component());
        }
    });
    return corpus;
}

Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic> RegressionDataset::standardized_features() const {
    return ((features.colwise() - norm.feature_mean).array().colwise() / norm.feature_std.array()).matrix();
}

Eigen::Matrix<double, kStateDim, Eigen::Dynamic> RegressionDataset::standardized_targets() const {
    return ((targets.colwise() - norm.target_mean).array().colwise() / norm.target_std.array()).matrix();
}

RegressionDataset build_dataset(const std::vector<Trajectory>& trajectories, TargetKind kind,
                                const PlantConstants<double>& consts) {
    if (trajectories.empty()) throw ConfigError("build_dataset needs at least one trajectory");
    const double dt = trajectories.front().dt;
    Eigen::Index pairs = 0;
    for (const auto& t : trajectories) {
        if (t.dt != dt) throw ConfigError("trajectories must share dt");
        pairs += t.steps();
    }

    RegressionDataset ds;
    ds.features.resize(kFeatureDim, pairs);
    ds.targets.resize(kStateDim, pairs);
    Eigen::Index col = 0;
    for (const auto& t : trajectories) {
        for (Eigen::Index k = 0; k < t.steps(); ++k, ++col) {
            const CellState<double> x = t.states.row(k).transpose();
            const ControlInput<double> u = t.inputs.row(k).transpose();
            ds.features.col(col) << x, u;
            ds.targets.col(col) = (t.states.row(k + 1) - t.states.row(k)).transpose() / dt;
            if (kind == TargetKind::Residual) {
                ds.targets.col(col) -= derivative(x, u, consts, LiquidusMode::Ablated);
            }
        }
    }

    ds.norm.target_kind = kind;
    ds.norm.feature_mean = ds.features.rowwise().mean();
    ds.norm.feature_std = row_std(ds.features, ds.norm.feature_mean);
    ds.norm.target_mean = ds.targets.rowwise().mean();
    ds.norm.target_std = row_std(ds.targets, ds.norm.target_mean);
    ds.norm.state_std = state_std(trajectories);
    return ds;
}

Eigen::Matrix<double, kStateDim, 1> state_std(const std::vector<Trajectory>& trajectories) {
    Eigen::Index rows = 0;
    for (const auto& t : trajectories) rows += t.states.rows();
    Eigen::Matrix<double, kStateDim, Eigen::Dynamic> all(kStateDim, rows);
    Eigen::Index col = 0;
    for (const auto& t : trajectories) {
        all.middleCols(col, t.states.rows()) = t.states.transpose();
        col += t.states.rows();
    }
    const Eigen::VectorXd mean = all.rowwise().mean();
    return row_std(all, mean);
}

}  // namespace costa
