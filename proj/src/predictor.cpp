#include "costa/predictor.hpp"

#include <cmath>

namespace costa {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::PBM: return "pbm";
        case ModelKind::DDM: return "ddm";
        case ModelKind::CoSTA: return "costa";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "pbm") return ModelKind::PBM;
    if (name == "ddm") return ModelKind::DDM;
    if (name == "costa") return ModelKind::CoSTA;
    throw ConfigError("unknown model kind '" + name + "'");
}

Predictor make_pbm(const PlantConstants<double>& consts) { return {ModelKind::PBM, consts, std::monostate{}}; }

Predictor make_ddm(MlpParameters<double> net) {
    if (net.target_kind() != TargetKind::StateDerivative) {
        throw ConfigError("a DDM network must be trained on state-derivative targets");
    }
    check_shapes(net);
    return {ModelKind::DDM, {}, std::move(net)};
}

Predictor make_costa(MlpParameters<double> net, const PlantConstants<double>& consts) {
    if (net.target_kind() != TargetKind::Residual) {
        throw ConfigError("a CoSTA network must be trained on residual targets");
    }
    check_shapes(net);
    return {ModelKind::CoSTA, consts, std::move(net)};
}

Predictor make_costa_oracle(const PlantConstants<double>& consts) {
    return {ModelKind::CoSTA, consts, ResidualOracle{}};
}

StateDerivative<double> network_term(const MlpParameters<double>& net, const CellState<double>& x,
                                     const ControlInput<double>& u) {
    Feature<double> f;
    f << x, u;
    const Feature<double> z = (f - net.norm.feature_mean).cwiseQuotient(net.norm.feature_std);
    const Vec<double> y = forward(net, z);
    if (y.size() != kStateDim) throw ConfigError("network output width must be 8");
    StateDerivative<double> out = y.cwiseProduct(net.norm.target_std) + net.norm.target_mean;
    if (!out.allFinite()) throw NumericError("non-finite network output", "network");
    return out;
}

namespace {

StateDerivative<double> corrector_term(const Predictor& p, const CellState<double>& x, const ControlInput<double>& u) {
    if (const auto* net = std::get_if<MlpParameters<double>>(&p.corrector)) return network_term(*net, x, u);
    if (std::holds_alternative<ResidualOracle>(p.corrector)) return residual_oracle(x, u, p.consts);
    throw ConfigError(to_string(p.kind) + " predictor has no corrector");
}

}  // namespace

StateDerivative<double> predict_derivative(const Predictor& p, const CellState<double>& x,
                                           const ControlInput<double>& u) {
    switch (p.kind) {
        case ModelKind::PBM: return derivative(x, u, p.consts, LiquidusMode::Ablated);
        case ModelKind::DDM: return corrector_term(p, x, u);
        case ModelKind::CoSTA:
            return derivative(x, u, p.consts, LiquidusMode::Ablated) + corrector_term(p, x, u);
    }
    throw ConfigError("unknown predictor kind");
}

TrainResult<double> train_model(const RegressionDataset& ds, const TrainConfig& cfg, const std::vector<int>& sizes) {
    const Mat<double> x = ds.standardized_features();
    const Mat<double> t = ds.standardized_targets();
    auto result = train<double>(x, t, sizes, cfg);
    result.params.norm = ds.norm;
    return result;
}

}  // namespace costa
