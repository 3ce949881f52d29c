#pragma once

#include "costa/norm.hpp"
#include "costa/rng.hpp"
#include "costa/types.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace costa {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// ReLU hidden layers, affine output. weights[l] is out x in.
template <typename Scalar>
struct MlpParameters {
    std::vector<int> layer_sizes;
    std::vector<Mat<Scalar>> weights;
    std::vector<Vec<Scalar>> biases;
    NormStats norm;

    [[nodiscard]] std::size_t layers() const { return weights.size(); }
    [[nodiscard]] TargetKind target_kind() const { return norm.target_kind; }
};

inline const std::vector<int>& default_layer_sizes() {
    static const std::vector<int> sizes{kFeatureDim, 20, 20, 20, 20, kStateDim};
    return sizes;
}

template <typename Scalar>
[[nodiscard]] MlpParameters<Scalar> zero_mlp(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
    MlpParameters<Scalar> p;
    p.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        p.weights.push_back(Mat<Scalar>::Zero(sizes[l + 1], sizes[l]));
        p.biases.push_back(Vec<Scalar>::Zero(sizes[l + 1]));
    }
    return p;
}

/// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename Scalar>
[[nodiscard]] MlpParameters<Scalar> init_mlp(const std::vector<int>& sizes, Rng& rng) {
    auto p = zero_mlp<Scalar>(sizes);
    for (std::size_t l = 0; l < p.layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) {
            for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) {
                p.weights[l](i, j) = Scalar(uniform(rng, -bound, bound));
            }
        }
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = Scalar(uniform(rng, -bound, bound));
    }
    return p;
}

template <typename Scalar>
void check_shapes(const MlpParameters<Scalar>& p) {
    if (p.layer_sizes.size() != p.layers() + 1 || p.biases.size() != p.layers()) {
        throw ConfigError("layer count mismatch");
    }
    for (std::size_t l = 0; l < p.layers(); ++l) {
        if (p.weights[l].rows() != p.layer_sizes[l + 1] || p.weights[l].cols() != p.layer_sizes[l] ||
            p.biases[l].size() != p.layer_sizes[l + 1]) {
            throw ConfigError("layer " + std::to_string(l) + " shape does not chain");
        }
    }
}

/// Batched forward pass; columns of `input` are samples.
template <typename Scalar, typename Derived>
[[nodiscard]] Mat<Scalar> forward(const MlpParameters<Scalar>& p, const Eigen::MatrixBase<Derived>& input) {
    if (p.layers() == 0 || input.rows() != p.weights.front().cols()) {
        throw ConfigError("input width does not match the first layer");
    }
    Mat<Scalar> z = input;
    for (std::size_t l = 0; l < p.layers(); ++l) {
        Mat<Scalar> a = (p.weights[l] * z).colwise() + p.biases[l];
        if (l + 1 < p.layers()) a = a.cwiseMax(Scalar(0));
        z.swap(a);
    }
    return z;
}

template <typename Scalar>
struct Gradients {
    std::vector<Mat<Scalar>> weights;
    std::vector<Vec<Scalar>> biases;
};

template <typename Scalar>
struct LossResult {
    Scalar total;
    Scalar mse;
    Gradients<Scalar> grads;
};

template <typename Scalar>
[[nodiscard]] Scalar l1_norm(const MlpParameters<Scalar>& p) {
    Scalar s(0);
    for (const auto& w : p.weights) s += w.cwiseAbs().sum();
    return s;
}

/// Mean squared error over samples and outputs plus lambda * sum |w| over
/// weights. Columns of x and t are samples.
template <typename Scalar, typename DX, typename DT>
[[nodiscard]] LossResult<Scalar> loss_and_gradients(const MlpParameters<Scalar>& p, const Eigen::MatrixBase<DX>& x,
                                                    const Eigen::MatrixBase<DT>& t, Scalar lambda) {
    using std::isfinite;
    const Eigen::Index batch = x.cols();
    if (batch == 0) throw ConfigError("empty batch");
    if (t.cols() != batch) throw ConfigError("feature and target batch sizes differ");

    std::vector<Mat<Scalar>> acts;  // acts[l] is the input to layer l
    acts.reserve(p.layers() + 1);
    acts.emplace_back(x);
    for (std::size_t l = 0; l < p.layers(); ++l) {
        Mat<Scalar> a = (p.weights[l] * acts.back()).colwise() + p.biases[l];
        if (l + 1 < p.layers()) a = a.cwiseMax(Scalar(0));
        acts.push_back(std::move(a));
    }
    const Mat<Scalar> err = acts.back() - t;
    const Scalar count = Scalar(batch) * Scalar(err.rows());
    const Scalar mse = err.squaredNorm() / count;
    const Scalar total = mse + lambda * l1_norm(p);
    if (!isfinite(total)) throw DivergenceError("non-finite loss");

    LossResult<Scalar> r{total, mse, {}};
    r.grads.weights.resize(p.layers());
    r.grads.biases.resize(p.layers());
    Mat<Scalar> delta = (Scalar(2) / count) * err;
    for (std::size_t l = p.layers(); l-- > 0;) {
        r.grads.weights[l] = delta * acts[l].transpose();
        r.grads.biases[l] = delta.rowwise().sum();
        if (lambda != Scalar(0)) {
            r.grads.weights[l] += lambda * p.weights[l].unaryExpr([](Scalar w) {
                return w > Scalar(0) ? Scalar(1) : (w < Scalar(0) ? Scalar(-1) : Scalar(0));
            });
        }
        if (l > 0) {
            delta = (p.weights[l].transpose() * delta).cwiseProduct(
                acts[l].unaryExpr([](Scalar a) { return a > Scalar(0) ? Scalar(1) : Scalar(0); }));
        }
    }
    return r;
}

// ============================================================================
// Optimizer
// ============================================================================

struct TrainConfig {
    double lambda = 0.0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 100;
    int batch_size = 128;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
    /// Magnitude pruning after training, on standardized-scale weights.
    bool prune = false;
    double prune_threshold = 1e-3;
};

template <typename Scalar>
struct AdamState {
    std::vector<Mat<Scalar>> m_w, v_w;
    std::vector<Vec<Scalar>> m_b, v_b;
    std::int64_t t = 0;

    static AdamState zeros_like(const MlpParameters<Scalar>& p) {
        AdamState s;
        for (std::size_t l = 0; l < p.layers(); ++l) {
            s.m_w.push_back(Mat<Scalar>::Zero(p.weights[l].rows(), p.weights[l].cols()));
            s.v_w.push_back(s.m_w.back());
            s.m_b.push_back(Vec<Scalar>::Zero(p.biases[l].size()));
            s.v_b.push_back(s.m_b.back());
        }
        return s;
    }
};

namespace detail {

template <typename P, typename G, typename M>
void adam_update(P& param, const G& grad, M& m, M& v, double b1, double b2, double lr, double c1, double c2,
                 double eps) {
    using Scalar = typename P::Scalar;
    m = Scalar(b1) * m + Scalar(1 - b1) * grad;
    v = Scalar(b2) * v + Scalar(1 - b2) * grad.cwiseAbs2();
    param.array() -= Scalar(lr) * (m.array() / Scalar(c1)) / ((v.array() / Scalar(c2)).sqrt() + Scalar(eps));
}

}  // namespace detail

/// Bias-corrected Adam update in place.
template <typename Scalar>
void adam_step(MlpParameters<Scalar>& p, const Gradients<Scalar>& g, AdamState<Scalar>& s, const TrainConfig& cfg) {
    ++s.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
    for (std::size_t l = 0; l < p.layers(); ++l) {
        detail::adam_update(p.weights[l], g.weights[l], s.m_w[l], s.v_w[l], cfg.beta1, cfg.beta2,
                            cfg.learning_rate, c1, c2, cfg.epsilon);
        detail::adam_update(p.biases[l], g.biases[l], s.m_b[l], s.v_b[l], cfg.beta1, cfg.beta2,
                            cfg.learning_rate, c1, c2, cfg.epsilon);
    }
}

// ============================================================================
// Sparsity
// ============================================================================

struct SparsityMetrics {
    std::int64_t l0;
    double l1;
};

template <typename Scalar>
[[nodiscard]] SparsityMetrics sparsity_metrics(const MlpParameters<Scalar>& p) {
    SparsityMetrics s{0, 0.0};
    for (const auto& w : p.weights) {
        s.l0 += static_cast<std::int64_t>((w.array() != Scalar(0)).count());
        s.l1 += static_cast<double>(w.cwiseAbs().sum());
    }
    return s;
}

/// Zeroes weights with |w| < threshold; returns the fraction of nonzero
/// weights removed.
template <typename Scalar>
double magnitude_prune(MlpParameters<Scalar>& p, Scalar threshold) {
    if (threshold < Scalar(0)) throw ConfigError("prune threshold must be non-negative");
    const auto before = sparsity_metrics(p).l0;
    for (auto& w : p.weights) w = (w.array().abs() < threshold).select(Scalar(0), w);
    const auto after = sparsity_metrics(p).l0;
    return before == 0 ? 0.0 : static_cast<double>(before - after) / static_cast<double>(before);
}

// ============================================================================
// Training
// ============================================================================

struct EpochLoss {
    double train;
    double validation;
};

template <typename Scalar>
struct TrainResult {
    MlpParameters<Scalar> params;
    std::vector<EpochLoss> history;
    double pruned_fraction = 0.0;
};

/// Mini-batch Adam on standardized data. Columns of x and t are samples; the
/// last validation_fraction of a seeded shuffle is held out for monitoring.
template <typename Scalar>
[[nodiscard]] TrainResult<Scalar> train(const Mat<Scalar>& x, const Mat<Scalar>& t, const std::vector<int>& sizes,
                                        const TrainConfig& cfg) {
    if (x.cols() != t.cols() || x.cols() < 2) throw ConfigError("training needs at least two paired samples");
    if (cfg.batch_size < 1 || cfg.epochs < 0) throw ConfigError("invalid batch size or epoch count");
    if (!(cfg.validation_fraction >= 0 && cfg.validation_fraction < 1)) {
        throw ConfigError("validation fraction must lie in [0, 1)");
    }
    Rng rng = make_stream(cfg.seed, 0, 0, StreamRole::Training);
    TrainResult<Scalar> out{init_mlp<Scalar>(sizes, rng), {}, 0.0};
    auto& p = out.params;
    auto state = AdamState<Scalar>::zeros_like(p);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    shuffle(order, rng);
    auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
    n_val = std::min(n_val, order.size() - 1);
    std::vector<Eigen::Index> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    const std::vector<Eigen::Index> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    const Mat<Scalar> x_val = x(Eigen::all, val_idx);
    const Mat<Scalar> t_val = t(Eigen::all, val_idx);

    const auto lambda = Scalar(cfg.lambda);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(train_idx, rng);
        double sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += batch) {
            const std::size_t end = std::min(train_idx.size(), start + batch);
            const std::vector<Eigen::Index> idx(train_idx.begin() + static_cast<std::ptrdiff_t>(start),
                                                train_idx.begin() + static_cast<std::ptrdiff_t>(end));
            const Mat<Scalar> xb = x(Eigen::all, idx);
            const Mat<Scalar> tb = t(Eigen::all, idx);
            const auto r = loss_and_gradients(p, xb, tb, lambda);
            adam_step(p, r.grads, state, cfg);
            sum += static_cast<double>(r.mse) * static_cast<double>(end - start);
            seen += end - start;
        }
        double val = 0.0;
        if (n_val > 0) val = static_cast<double>((forward(p, x_val) - t_val).squaredNorm()) /
                             static_cast<double>(t_val.size());
        if (!std::isfinite(val)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
        out.history.push_back({sum / static_cast<double>(seen), val});
    }
    if (cfg.prune) out.pruned_fraction = magnitude_prune(p, Scalar(cfg.prune_threshold));
    return out;
}

}  // namespace costa
