#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "costa/nn.hpp"
#include "oracles/fd_gradient.hpp"

#include <cmath>
#include <limits>

using namespace costa;

namespace {

Mat<double> random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1, double hi = 1) {
    Mat<double> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(rng, lo, hi);
    }
    return m;
}

/// Naive per-sample evaluation with explicit loops.
Mat<double> naive_forward(const MlpParameters<double>& p, const Mat<double>& x) {
    Mat<double> out(p.layer_sizes.back(), x.cols());
    for (Eigen::Index s = 0; s < x.cols(); ++s) {
        std::vector<double> z(x.col(s).data(), x.col(s).data() + x.rows());
        for (std::size_t l = 0; l < p.layers(); ++l) {
            const auto& w = p.weights[l];
            std::vector<double> next(static_cast<std::size_t>(w.rows()));
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                double acc = p.biases[l](i);
                for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * z[static_cast<std::size_t>(j)];
                if (l + 1 < p.layers()) acc = acc > 0 ? acc : 0;
                next[static_cast<std::size_t>(i)] = acc;
            }
            z = std::move(next);
        }
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, s) = z[static_cast<std::size_t>(i)];
    }
    return out;
}

/// Synthetic regression set with targets affine in the features.
struct AffineSet {
    Mat<double> x, t, a;
    Vec<double> b;
};

AffineSet affine_set(Eigen::Index n, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0, 0, StreamRole::InitialState);
    AffineSet s;
    s.x = random_matrix(kFeatureDim, n, rng, -1.7, 1.7);
    s.a = random_matrix(kStateDim, kFeatureDim, rng, -0.3, 0.3);
    s.b = random_matrix(kStateDim, 1, rng, -0.5, 0.5);
    s.t = (s.a * s.x).colwise() + s.b;
    return s;
}

}  // namespace

TEST_CASE("forward pass") {
    SUBCASE("zero network gives zero output") {
        const auto p = zero_mlp<double>(default_layer_sizes());
        Rng rng = make_stream(1, 0, 0, StreamRole::Training);
        CHECK(forward(p, random_matrix(kFeatureDim, 5, rng)).isZero(0.0));
    }
    SUBCASE("single positive path passes its input through") {
        auto p = zero_mlp<double>(default_layer_sizes());
        p.weights[0](3, 6) = 1;
        p.weights[1](0, 3) = 1;
        p.weights[2](7, 0) = 1;
        p.weights[3](2, 7) = 1;
        p.weights[4](5, 2) = 1;
        Vec<double> x = Vec<double>::Zero(kFeatureDim);
        x(6) = 0.75;
        const auto y = forward(p, x);
        CHECK(y(5, 0) == 0.75);
        CHECK(y.cwiseAbs().sum() == 0.75);
        x(6) = -0.75;
        CHECK(forward(p, x).isZero(0.0));
    }
    SUBCASE("batched pass matches the loop reference") {
        Rng rng = make_stream(2, 0, 0, StreamRole::Training);
        for (int trial = 0; trial < 10; ++trial) {
            const auto p = init_mlp<double>(default_layer_sizes(), rng);
            const auto x = random_matrix(kFeatureDim, 17, rng, -3, 3);
            CHECK((forward(p, x) - naive_forward(p, x)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("shape mismatch is rejected") {
        const auto p = zero_mlp<double>(default_layer_sizes());
        CHECK_THROWS_AS((void)forward(p, Mat<double>::Zero(12, 1)), ConfigError);
        auto bad = p;
        bad.weights[2] = Mat<double>::Zero(20, 19);
        CHECK_THROWS_AS(check_shapes(bad), ConfigError);
        CHECK_NOTHROW(check_shapes(p));
    }
    SUBCASE("finite weights give finite outputs") {
        Rng rng = make_stream(3, 0, 0, StreamRole::Training);
        const auto p = init_mlp<double>(default_layer_sizes(), rng);
        CHECK(forward(p, random_matrix(kFeatureDim, 50, rng, -1e6, 1e6)).allFinite());
    }
}

TEST_CASE("loss and gradients") {
    Rng rng = make_stream(4, 0, 0, StreamRole::Training);
    const std::vector<int> sizes{kFeatureDim, 6, 5, kStateDim};

    SUBCASE("without penalty the loss is the mean squared error") {
        const auto p = init_mlp<double>(sizes, rng);
        const auto x = random_matrix(kFeatureDim, 4, rng);
        const auto t = random_matrix(kStateDim, 4, rng);
        const auto r = loss_and_gradients(p, x, t, 0.0);
        const double mse = (forward(p, x) - t).squaredNorm() / 32.0;
        CHECK(r.total == doctest::Approx(mse).epsilon(1e-14));
        CHECK(r.mse == r.total);
        const auto s = loss_and_gradients(p, x, t, 0.5);
        CHECK(s.total == doctest::Approx(mse + 0.5 * sparsity_metrics(p).l1).epsilon(1e-14));
    }

    SUBCASE("gradients match central differences") {
        for (const double lambda : {0.0, 1e-2}) {
            for (int trial = 0; trial < 5; ++trial) {
                const auto p = init_mlp<double>(sizes, rng);
                const auto x = random_matrix(kFeatureDim, 3, rng, -2, 2);
                const auto t = random_matrix(kStateDim, 3, rng, -2, 2);
                CHECK(oracle::max_gradient_error(p, x, t, lambda) <= 1e-5);
            }
        }
    }

    SUBCASE("perfect fit has zero loss and gradients") {
        const auto p = init_mlp<double>(sizes, rng);
        const auto x = random_matrix(kFeatureDim, 9, rng);
        const auto r = loss_and_gradients(p, x, forward(p, x), 0.0);
        CHECK(r.total == 0.0);
        for (std::size_t l = 0; l < p.layers(); ++l) {
            CHECK(r.grads.weights[l].isZero(0.0));
            CHECK(r.grads.biases[l].isZero(0.0));
        }
    }

    SUBCASE("penalty subgradient is zero at zero and skips biases") {
        auto p = zero_mlp<double>(sizes);
        p.biases[0].setConstant(1.0);
        const auto x = Mat<double>::Zero(kFeatureDim, 2);
        const auto r = loss_and_gradients(p, x, Mat<double>::Zero(kStateDim, 2), 1.0);
        CHECK(r.total == 0.0);
        for (const auto& w : r.grads.weights) CHECK(w.isZero(0.0));
    }

    SUBCASE("errors") {
        const auto p = init_mlp<double>(sizes, rng);
        CHECK_THROWS_AS((void)loss_and_gradients(p, Mat<double>(kFeatureDim, 0), Mat<double>(kStateDim, 0), 0.0),
                        ConfigError);
        Mat<double> t = Mat<double>::Zero(kStateDim, 1);
        t(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS((void)loss_and_gradients(p, Mat<double>::Zero(kFeatureDim, 1), t, 0.0), DivergenceError);
    }
}

TEST_CASE("adam") {
    Rng rng = make_stream(5, 0, 0, StreamRole::Training);
    const std::vector<int> sizes{kFeatureDim, 7, kStateDim};
    const TrainConfig cfg;
    CHECK(cfg.learning_rate == 1e-3);
    CHECK(cfg.beta1 == 0.9);
    CHECK(cfg.beta2 == 0.999);
    CHECK(cfg.epochs == 100);

    SUBCASE("zero gradient leaves parameters unchanged") {
        auto p = init_mlp<double>(sizes, rng);
        const auto before = p;
        auto s = AdamState<double>::zeros_like(p);
        auto g = loss_and_gradients(p, Mat<double>::Zero(kFeatureDim, 1), forward(p, Mat<double>::Zero(kFeatureDim, 1)),
                                    0.0)
                     .grads;
        for (int k = 0; k < 3; ++k) adam_step(p, g, s, cfg);
        for (std::size_t l = 0; l < p.layers(); ++l) {
            CHECK(p.weights[l] == before.weights[l]);
            CHECK(p.biases[l] == before.biases[l]);
        }
        CHECK(s.t == 3);
    }

    SUBCASE("first step moves each parameter by about the learning rate") {
        auto p = init_mlp<double>(sizes, rng);
        const auto before = p;
        auto s = AdamState<double>::zeros_like(p);
        const auto g = loss_and_gradients(p, random_matrix(kFeatureDim, 4, rng), random_matrix(kStateDim, 4, rng), 0.0)
                           .grads;
        adam_step(p, g, s, cfg);
        for (std::size_t l = 0; l < p.layers(); ++l) {
            for (Eigen::Index i = 0; i < g.weights[l].size(); ++i) {
                const double gi = g.weights[l].data()[i];
                const double step = std::abs(p.weights[l].data()[i] - before.weights[l].data()[i]);
                // m_hat = g and v_hat = g^2 after one step.
                const double expected = cfg.learning_rate * std::abs(gi) / (std::abs(gi) + cfg.epsilon);
                CHECK(step == doctest::Approx(expected).epsilon(1e-9));
                if (std::abs(gi) > 1e-4) CHECK(step == doctest::Approx(cfg.learning_rate).epsilon(1e-3));
            }
        }
        for (const auto& v : s.v_w) CHECK((v.array() >= 0).all());
    }

    SUBCASE("identical inputs give identical updates") {
        auto p = init_mlp<double>(sizes, rng);
        auto q = p;
        auto sp = AdamState<double>::zeros_like(p);
        auto sq = sp;
        const auto x = random_matrix(kFeatureDim, 4, rng);
        const auto t = random_matrix(kStateDim, 4, rng);
        for (int k = 0; k < 5; ++k) {
            adam_step(p, loss_and_gradients(p, x, t, 1e-4).grads, sp, cfg);
            adam_step(q, loss_and_gradients(q, x, t, 1e-4).grads, sq, cfg);
        }
        for (std::size_t l = 0; l < p.layers(); ++l) CHECK(p.weights[l] == q.weights[l]);
    }
}

TEST_CASE("training") {
    const auto data = affine_set(4000, 6);
    TrainConfig cfg;
    cfg.seed = 17;

    SUBCASE("recovers an affine map") {
        const auto r = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        REQUIRE(r.history.size() == 100);
        CHECK(r.history.back().validation < 1e-4);
        CHECK(r.history.back().train < r.history.front().train);
    }

    SUBCASE("penalty shrinks the weight norm from the same initialization") {
        cfg.epochs = 20;
        const auto dense = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        cfg.lambda = 1e-4;
        const auto sparse = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        CHECK(sparsity_metrics(sparse.params).l1 < sparsity_metrics(dense.params).l1);
    }

    SUBCASE("seeded and deterministic") {
        cfg.epochs = 3;
        const auto a = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        const auto b = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        cfg.seed = 18;
        const auto c = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        for (std::size_t l = 0; l < a.params.layers(); ++l) {
            CHECK(a.params.weights[l] == b.params.weights[l]);
            CHECK(a.params.biases[l] == b.params.biases[l]);
        }
        CHECK(a.params.weights[0] != c.params.weights[0]);
        CHECK(a.history.back().train == b.history.back().train);
    }

    SUBCASE("different seeds give different initializations") {
        Rng r1 = make_stream(1, 0, 0, StreamRole::Training);
        Rng r2 = make_stream(2, 0, 0, StreamRole::Training);
        const auto p1 = init_mlp<double>(default_layer_sizes(), r1);
        const auto p2 = init_mlp<double>(default_layer_sizes(), r2);
        CHECK(p1.weights[0] != p2.weights[0]);
        for (std::size_t l = 0; l < p1.layers(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(p1.layer_sizes[l]));
            CHECK(p1.weights[l].cwiseAbs().maxCoeff() <= bound);
            CHECK(p1.biases[l].cwiseAbs().maxCoeff() <= bound);
        }
    }

    SUBCASE("divergence is reported") {
        cfg.learning_rate = 1e30;
        cfg.epochs = 5;
        CHECK_THROWS_AS((void)train<double>(data.x, data.t * 1e300, default_layer_sizes(), cfg), DivergenceError);
    }

    SUBCASE("optional pruning") {
        cfg.epochs = 2;
        cfg.prune = true;
        cfg.prune_threshold = 0.05;
        const auto r = train<double>(data.x, data.t, default_layer_sizes(), cfg);
        CHECK(r.pruned_fraction > 0);
        for (const auto& w : r.params.weights) CHECK(((w.array().abs() >= 0.05) || (w.array() == 0)).all());
    }
}

TEST_CASE("pruning and sparsity metrics") {
    Rng rng = make_stream(7, 0, 0, StreamRole::Training);
    SUBCASE("metric examples") {
        auto p = zero_mlp<double>(default_layer_sizes());
        auto m = sparsity_metrics(p);
        CHECK(m.l0 == 0);
        CHECK(m.l1 == 0.0);
        p.weights[1](4, 2) = -2;
        m = sparsity_metrics(p);
        CHECK(m.l0 == 1);
        CHECK(m.l1 == 2.0);
    }
    SUBCASE("metrics and pruning match a count") {
        const auto p = init_mlp<double>(default_layer_sizes(), rng);
        std::int64_t nonzero = 0;
        double abs_sum = 0.0;
        std::int64_t below = 0;
        const double threshold = 0.1;
        for (const auto& w : p.weights) {
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                const double v = w.data()[i];
                if (v != 0) ++nonzero;
                if (v != 0 && std::abs(v) < threshold) ++below;
                abs_sum += std::abs(v);
            }
        }
        const auto m = sparsity_metrics(p);
        CHECK(m.l0 == nonzero);
        CHECK(m.l1 == doctest::Approx(abs_sum).epsilon(1e-13));

        auto q = p;
        const double fraction = magnitude_prune(q, threshold);
        CHECK(fraction == static_cast<double>(below) / static_cast<double>(nonzero));
        for (std::size_t l = 0; l < q.layers(); ++l) CHECK(q.biases[l] == p.biases[l]);
    }
    SUBCASE("limits") {
        const auto p = init_mlp<double>(default_layer_sizes(), rng);
        auto q = p;
        CHECK(magnitude_prune(q, 0.0) == 0.0);
        for (std::size_t l = 0; l < q.layers(); ++l) CHECK(q.weights[l] == p.weights[l]);
        CHECK(magnitude_prune(q, std::numeric_limits<double>::infinity()) == 1.0);
        CHECK(sparsity_metrics(q).l0 == 0);
        CHECK_THROWS_AS((void)magnitude_prune(q, -1.0), ConfigError);
    }
    SUBCASE("fraction is nondecreasing in the threshold") {
        const auto p = init_mlp<double>(default_layer_sizes(), rng);
        double last = 0.0;
        for (double threshold = 0.0; threshold <= 0.6; threshold += 0.01) {
            auto q = p;
            const double f = magnitude_prune(q, threshold);
            CHECK(f >= last);
            last = f;
        }
        CHECK(last == 1.0);
    }
}

TEST_CASE("templated on scalar") {
    Rng rng = make_stream(8, 0, 0, StreamRole::Training);
    const auto p = init_mlp<float>(default_layer_sizes(), rng);
    const Mat<float> x = Mat<float>::Ones(kFeatureDim, 2);
    const auto r = loss_and_gradients(p, x, Mat<float>::Zero(kStateDim, 2), 1e-4f);
    CHECK(std::isfinite(r.total));
}
