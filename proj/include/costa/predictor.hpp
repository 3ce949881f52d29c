#pragma once

#include "costa/datagen.hpp"
#include "costa/nn.hpp"
#include "costa/plant.hpp"
#include "costa/types.hpp"

#include <string>
#include <variant>

namespace costa {

enum class ModelKind { PBM, DDM, CoSTA };

[[nodiscard]] std::string to_string(ModelKind kind);
[[nodiscard]] ModelKind model_kind_from_string(const std::string& name);

/// Analytic corrector: the exact true-minus-ablated residual.
struct ResidualOracle {};

/// Learned or analytic term added to the ablated model (CoSTA) or used alone
/// (DDM).
using Corrector = std::variant<std::monostate, MlpParameters<double>, ResidualOracle>;

struct Predictor {
    ModelKind kind = ModelKind::PBM;
    PlantConstants<double> consts;
    Corrector corrector;
};

[[nodiscard]] Predictor make_pbm(const PlantConstants<double>& consts = {});
[[nodiscard]] Predictor make_ddm(MlpParameters<double> net);
[[nodiscard]] Predictor make_costa(MlpParameters<double> net, const PlantConstants<double>& consts = {});
[[nodiscard]] Predictor make_costa_oracle(const PlantConstants<double>& consts = {});

/// Network output mapped back to physical units.
[[nodiscard]] StateDerivative<double> network_term(const MlpParameters<double>& net, const CellState<double>& x,
                                                   const ControlInput<double>& u);

[[nodiscard]] StateDerivative<double> predict_derivative(const Predictor& p, const CellState<double>& x,
                                                         const ControlInput<double>& u);

/// Trains on standardized dataset columns and attaches the dataset's
/// normalization to the returned network.
[[nodiscard]] TrainResult<double> train_model(const RegressionDataset& ds, const TrainConfig& cfg,
                                              const std::vector<int>& sizes = default_layer_sizes());

}  // namespace costa
