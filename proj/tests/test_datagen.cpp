#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "costa/datagen.hpp"
#include "support.hpp"

#include <cmath>
#include <map>

using namespace costa;

namespace {

InitRanges point_ranges(double c2, double c3, double x4) {
    InitRanges r;
    r.c_x2 = {c2, c2};
    r.c_x3 = {c3, c3};
    r.x4 = {x4, x4};
    r.superheat_only = false;
    return r;
}

FeedNoise noise_streams(std::uint64_t seed) {
    return {make_stream(seed, 0, 0, StreamRole::NoiseU1), make_stream(seed, 0, 0, StreamRole::NoiseU3),
            make_stream(seed, 0, 0, StreamRole::NoiseU4)};
}

CellState<double> state_from_ratios(double c2, double c3, double x4, double x5) {
    const double m = x4 / (1 - c2 - c3);
    CellState<double> x;
    x << 3000, c2 * m, c3 * m, x4, x5, 975, 820, 580;
    return x;
}

}  // namespace

TEST_CASE("initial state conversion") {
    Rng rng = make_stream(1, 0, 0, StreamRole::InitialState);
    const auto x = sample_initial_state(rng, point_ranges(0.02, 0.09, 11500));
    CHECK(x(1) == doctest::Approx(258.427).epsilon(1e-6));
    CHECK(x(2) == doctest::Approx(1162.921).epsilon(1e-6));
    CHECK(x(1) == doctest::Approx(0.02 * 11500 / 0.89).epsilon(1e-14));

    const auto r = mass_ratios(x);
    CHECK(std::abs(r.c_x2 - 0.02) <= 1e-9);
    CHECK(std::abs(r.c_x3 - 0.09) <= 1e-9);
}

TEST_CASE("initial states respect the ranges") {
    Rng rng = make_stream(2, 0, 0, StreamRole::InitialState);
    const InitRanges ranges;
    for (int n = 0; n < 10000; ++n) {
        const auto x = sample_initial_state(rng, ranges);
        const auto r = mass_ratios(x);
        REQUIRE(x(0) >= 2060);
        REQUIRE(x(0) <= 4460);
        REQUIRE(r.c_x2 >= 0.02 - 1e-12);
        REQUIRE(r.c_x2 <= 0.05 + 1e-12);
        REQUIRE(r.c_x3 >= 0.09 - 1e-12);
        REQUIRE(r.c_x3 <= 0.13 + 1e-12);
        REQUIRE(x(3) >= 11500);
        REQUIRE(x(3) <= 16000);
        REQUIRE(x(4) >= 9550);
        REQUIRE(x(4) <= 10600);
        REQUIRE(x(5) <= 990);
        REQUIRE(x(5) > liquidus(r.c_x2, r.c_x3));
        REQUIRE(x(5) > ranges.x6_floor);
        REQUIRE(x(6) >= 790);
        REQUIRE(x(6) <= 850);
        REQUIRE(x(7) >= 555);
        REQUIRE(x(7) <= 610);
    }
}

TEST_CASE("aprbs") {
    Rng rng = make_stream(3, 0, 0, StreamRole::AprbsU2);
    CHECK(aprbs(rng, {0, 0}, 10, 100, 500).isZero(0.0));

    const InputPolicyConfig p;
    const auto s = aprbs(rng, p.u2_amplitude, p.hold_min, p.hold_max, 20000);
    CHECK(s.minCoeff() >= -7e3);
    CHECK(s.maxCoeff() <= 7e3);

    SUBCASE("hold lengths are uniform over the configured range") {
        const Eigen::Index length = 1000000;
        const auto sig = aprbs(rng, {-1, 1}, 10, 100, length);
        std::map<Eigen::Index, double> hist;
        Eigen::Index start = 0;
        std::size_t segments = 0;
        for (Eigen::Index i = 1; i <= length; ++i) {
            if (i == length) break;  // the last segment is truncated
            if (sig(i) != sig(i - 1)) {
                hist[i - start] += 1;
                ++segments;
                start = i;
            }
        }
        const double bins = 91.0;
        const double p_bin = 1.0 / bins;
        const double expected = static_cast<double>(segments) * p_bin;
        const double sigma = std::sqrt(static_cast<double>(segments) * p_bin * (1 - p_bin));
        CHECK(hist.size() == 91);
        for (const auto& [len, count] : hist) {
            CHECK(len >= 10);
            CHECK(len <= 100);
            CHECK(std::abs(count - expected) <= 3 * sigma);
        }
    }
}

TEST_CASE("control inputs") {
    const InputPolicyConfig p;
    auto noise = noise_streams(4);
    SUBCASE("feeds are silent between impulses") {
        const auto u = control_input_at(7, state_from_ratios(0.02, 0.09, 12000, 10500), p, 100, 0.01, noise);
        CHECK(u(0) == 0.0);
        CHECK(u(2) == 0.0);
        CHECK(u(3) == 0.0);
        CHECK(u(1) == p.u2_nominal + 100);
        CHECK(u(4) == 0.05 + 0.01);
    }
    SUBCASE("alumina feed at its setpoint is the clamped noise term") {
        for (int n = 0; n < 200; ++n) {
            const auto u = control_input_at(0, state_from_ratios(0.023, 0.1, 12000, 10000), p, 0, 0, noise);
            CHECK(u(0) >= 0.0);
            CHECK(u(0) <= 2.0 + 1e-9);
        }
    }
    SUBCASE("tapping proportional term") {
        InputPolicyConfig quiet = p;
        quiet.u4.noise = {0, 0};
        const auto u = control_input_at(0, state_from_ratios(0.03, 0.1, 12000, 10600), quiet, 0, 0, noise);
        CHECK(u(3) == doctest::Approx(1200.0).epsilon(1e-12));
        const auto v = control_input_at(0, state_from_ratios(0.03, 0.1, 12000, 10600), p, 0, 0, noise);
        CHECK(v(3) >= 1198.0);
        CHECK(v(3) <= 1202.0);
    }
    SUBCASE("fluoride feed saturates") {
        const auto u = control_input_at(0, state_from_ratios(0.03, 0.09, 12000, 10000), p, 0, 0, noise);
        CHECK(u(2) == p.u3.max_rate);
    }
    SUBCASE("impulse periods") {
        for (Eigen::Index k = 0; k < 400; ++k) {
            const auto u = control_input_at(k, state_from_ratios(0.021, 0.09, 12000, 10500), p, 0, 0, noise);
            CHECK((u(0) > 0) == (k % 30 == 0));
            CHECK((u(3) > 0) == (k % 180 == 0));
        }
    }
}

TEST_CASE("corpus generation") {
    CorpusConfig cfg;
    cfg.seed = 9;
    cfg.n_train = 3;
    cfg.n_test = 2;
    cfg.steps = 300;
    const auto a = generate_corpus(cfg, 1);
    REQUIRE(a.train.size() == 3);
    REQUIRE(a.test.size() == 2);
    CHECK(a.train[0].states.rows() == 301);
    CHECK(a.train[0].inputs.rows() == 301);
    CHECK(a.train[0].g1.size() == 301);

    const auto b = generate_corpus(cfg, 4);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.train[i].states == b.train[i].states);
        CHECK(a.train[i].inputs == b.train[i].inputs);
    }
    for (std::size_t i = 0; i < 2; ++i) CHECK(a.test[i].states == b.test[i].states);
    CHECK(a.train[0].states != a.train[1].states);
    CHECK(a.train[0].states.row(0) != a.test[0].states.row(0));
}

TEST_CASE("default corpus shape") {
    const auto c = generate_corpus(CorpusConfig{}, 2);
    CHECK(c.train.size() == 40);
    CHECK(c.test.size() == 100);
    CHECK(c.train[0].states.rows() == 5001);
    CHECK(c.test[99].states.rows() == 5001);
    CHECK(c.test[99].states.allFinite());
}

// Independent draws put both pooled extremes of a state in the 40-trajectory
// training set with probability 40*39/(140*139) ~ 0.08, so the envelope check
// is reported but not gating.
TEST_CASE("training envelope covers the test envelope" * doctest::may_fail()) {
    const auto c = generate_corpus(CorpusConfig{}, 2);

    auto envelope = [](const std::vector<Trajectory>& set) {
        Eigen::Matrix<double, 2, kStateDim> e;
        e.row(0).setConstant(std::numeric_limits<double>::infinity());
        e.row(1).setConstant(-std::numeric_limits<double>::infinity());
        for (const auto& t : set) {
            e.row(0) = e.row(0).cwiseMin(t.states.colwise().minCoeff());
            e.row(1) = e.row(1).cwiseMax(t.states.colwise().maxCoeff());
        }
        return e;
    };
    const auto tr = envelope(c.train);
    const auto te = envelope(c.test);
    int contained = 0;
    for (int i = 0; i < kStateDim; ++i) {
        if (tr(0, i) <= te(0, i) && te(1, i) <= tr(1, i)) ++contained;
    }
    CHECK(contained >= 7);
}

TEST_CASE("regression dataset") {
    const PlantConstants<double> k;
    SUBCASE("constant trajectory has zero derivative targets") {
        Trajectory t;
        t.dt = 10;
        t.states = support::short_trajectory(1, 0).states.replicate(20, 1);
        t.inputs = InputSeries::Constant(20, kInputDim, 1.0);
        t.g1 = Eigen::VectorXd::Zero(20);
        const auto ds = build_dataset({t}, TargetKind::StateDerivative, k);
        CHECK(ds.size() == 19);
        CHECK(ds.targets.isZero(0.0));
        CHECK((ds.norm.target_std.array() > 0).all());
    }

    const auto traj = support::short_trajectory(2, 2000);
    SUBCASE("residual targets vanish on the liquidus-free states") {
        const auto ds = build_dataset({traj}, TargetKind::Residual, k);
        const auto raw = build_dataset({traj}, TargetKind::StateDerivative, k);
        CHECK(ds.target_kind() == TargetKind::Residual);
        for (const int i : {1, 2, 4}) {
            const double scale = raw.targets.row(i).cwiseAbs().maxCoeff();
            CHECK(ds.targets.row(i).cwiseAbs().maxCoeff() <= 1e-9 * scale);
        }
    }
    SUBCASE("standardized columns") {
        const auto ds = build_dataset({traj, support::short_trajectory(3, 2000)}, TargetKind::StateDerivative, k);
        const auto f = ds.standardized_features();
        const auto t = ds.standardized_targets();
        CHECK(f.rowwise().mean().cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(t.rowwise().mean().cwiseAbs().maxCoeff() <= 1e-9);
        const Eigen::VectorXd fstd = (f.array().square().rowwise().mean()).sqrt();
        const Eigen::VectorXd tstd = (t.array().square().rowwise().mean()).sqrt();
        CHECK((fstd.array() - 1).abs().maxCoeff() <= 1e-9);
        CHECK((tstd.array() - 1).abs().maxCoeff() <= 1e-9);
        CHECK((ds.norm.state_std.array() > 0).all());
    }
    SUBCASE("residual targets approach the analytic residual at first order") {
        auto max_gap = [&](const Trajectory& t) {
            const auto ds = build_dataset({t}, TargetKind::Residual, k);
            double gap = 0.0;
            for (Eigen::Index c = 0; c < ds.size(); ++c) {
                const CellState<double> x = t.states.row(c).transpose();
                const ControlInput<double> u = t.inputs.row(c).transpose();
                gap = std::max(gap, (ds.targets.col(c) - residual_oracle(x, u, k)).cwiseAbs().maxCoeff());
            }
            return gap;
        };
        const auto coarse = support::short_trajectory(4, 1000);
        // Same inputs held over two half steps.
        const auto fine_full = simulate(
            coarse.states.row(0).transpose().eval(),
            [&](Eigen::Index i, const CellState<double>&) {
                return ControlInput<double>(coarse.inputs.row(i / 2).transpose());
            },
            2 * coarse.steps(), coarse.dt / 2, k);
        const double g10 = max_gap(coarse);
        const double g5 = max_gap(fine_full);
        CHECK(g10 > 0);
        const double ratio = g5 / g10;
        CHECK(ratio >= 0.35);
        CHECK(ratio <= 0.65);
    }
}

TEST_CASE("invalid configuration is rejected") {
    InputPolicyConfig p;
    p.u1.period = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    InitRanges r;
    r.x1 = {5, 1};
    CHECK_THROWS_AS(validate(r), ConfigError);
    CorpusConfig cfg;
    cfg.n_train = 0;
    CHECK_THROWS_AS((void)generate_corpus(cfg), ConfigError);
}
