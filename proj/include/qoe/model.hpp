#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qoe/bytes.hpp"
#include "qoe/error.hpp"

namespace qoe {

/// The seven supervised regressor kinds. Tag values are part of the model
/// file format and must not be reordered.
enum class ModelKind : std::uint8_t {
    svr = 1,
    random_forest = 2,
    decision_tree = 3,
    gradient_boosting = 4,
    knn = 5,
    mlp = 6,
    sgd = 7,
};

std::string to_string(ModelKind kind);
std::optional<ModelKind> model_kind_from_string(std::string_view name);

/// All kinds in the summary-table column order.
const std::vector<ModelKind>& all_model_kinds();

using Hyperparams = std::map<std::string, double>;

/// A regressor kind with its hyperparameters and RNG seed.
struct ModelSpec {
    ModelKind kind = ModelKind::decision_tree;
    Hyperparams hyperparams;  // overrides on top of the per-kind defaults
    std::uint64_t seed = 0;
};

/// The per-kind default hyperparameters:
///   svr:  c=10, epsilon=0.1, gamma=0 (0 = 1/(n_features*var(X)) at fit),
///         kkt_tol=1e-3, max_iter=1e6
///   random_forest: n_estimators=500, random_state=0, min_samples_split=2,
///         features_per_split=3, max_depth=-1
///   decision_tree: random_state=0, min_samples_split=9, max_depth=-1
///   gradient_boosting: learning_rate=0.01, n_estimators=500, max_depth=3,
///         min_samples_split=2
///   knn:  k=10 (uniform weights)
///   mlp:  hidden_units=20, learning_rate=0.001, momentum=0.9,
///         batch_size=32, max_epochs=500, tol=1e-6
///   sgd:  max_epochs=1000, tol=1e-3, eta0=0.01, power_t=0.25
ModelSpec default_spec(ModelKind kind, std::uint64_t seed = 0);

/// Hyperparameter lookup with fallback to the kind's default. Throws
/// ConfigError for names unknown to the kind.
double hyperparam(const ModelSpec& spec, const std::string& name);

struct FitMetadata {
    Eigen::Index n_train = 0;
    Eigen::Index feature_count = 0;
    double training_wall_time_s = 0.0;  // runtime info, not serialized
};

/// Learned parameters behind the fit/predict contract.
class Model {
public:
    virtual ~Model() = default;
    virtual Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const = 0;
    virtual void serialize(ByteWriter& w) const = 0;
};

/// A fitted regressor; immutable, safely shareable across threads.
struct TrainedModel {
    ModelSpec spec;
    FitMetadata fit_metadata;
    bool converged = true;
    std::shared_ptr<const Model> impl;
};

/// Fits a model. X must already be standardized and free of missing values.
/// worker_count: 0 = auto, 1 = serial; the result is byte-identical for any
/// worker count (per-estimator RNG streams, fixed merge order).
/// Non-convergence within the caps sets converged=false rather than failing.
TrainedModel fit_model(const ModelSpec& spec,
                       const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       int worker_count = 0);

/// Deterministic prediction; throws DimensionError on column mismatch.
Eigen::VectorXd predict(const TrainedModel& m,
                        const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Versioned binary container: magic "QOEM", format version, kind tag,
/// canonical spec + parameters, trailing CRC-32 (docs/model-format.md).
std::string save_model(const TrainedModel& m);
TrainedModel load_model(std::string_view bytes);

void save_model_file(const TrainedModel& m, const std::string& path);
TrainedModel load_model_file(const std::string& path);

}  // namespace qoe
