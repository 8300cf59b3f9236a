#include "qoe/model.hpp"

#include <array>
#include <chrono>
#include <fstream>

#include "qoe/models/ensemble.hpp"
#include "qoe/models/knn.hpp"
#include "qoe/models/linear.hpp"
#include "qoe/models/mlp.hpp"
#include "qoe/models/svr.hpp"
#include "qoe/models/tree.hpp"

namespace qoe {

std::uint32_t crc32(std::string_view data) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (const char ch : data)
        crc = table[(crc ^ static_cast<unsigned char>(ch)) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::svr: return "svr";
        case ModelKind::random_forest: return "rf";
        case ModelKind::decision_tree: return "dt";
        case ModelKind::gradient_boosting: return "gb";
        case ModelKind::knn: return "knn";
        case ModelKind::mlp: return "mlp";
        case ModelKind::sgd: return "sgd";
    }
    return "unknown";
}

std::optional<ModelKind> model_kind_from_string(std::string_view name) {
    if (name == "svr") return ModelKind::svr;
    if (name == "rf" || name == "random_forest") return ModelKind::random_forest;
    if (name == "dt" || name == "decision_tree") return ModelKind::decision_tree;
    if (name == "gb" || name == "gradient_boosting")
        return ModelKind::gradient_boosting;
    if (name == "knn") return ModelKind::knn;
    if (name == "mlp" || name == "nn") return ModelKind::mlp;
    if (name == "sgd") return ModelKind::sgd;
    return std::nullopt;
}

const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds = {
        ModelKind::svr,  ModelKind::random_forest,     ModelKind::decision_tree,
        ModelKind::gradient_boosting, ModelKind::knn,  ModelKind::mlp,
        ModelKind::sgd};
    return kinds;
}

namespace {

const Hyperparams& defaults_for(ModelKind kind) {
    static const Hyperparams svr = {{"c", 10.0},        {"epsilon", 0.1},
                                    {"gamma", 0.0},     {"kkt_tol", 1e-3},
                                    {"max_iter", 1e6}};
    static const Hyperparams rf = {{"n_estimators", 500.0},
                                   {"random_state", 0.0},
                                   {"min_samples_split", 2.0},
                                   {"features_per_split", 3.0},
                                   {"max_depth", -1.0}};
    static const Hyperparams dt = {{"random_state", 0.0},
                                   {"min_samples_split", 9.0},
                                   {"max_depth", -1.0}};
    static const Hyperparams gb = {{"learning_rate", 0.01},
                                   {"n_estimators", 500.0},
                                   {"max_depth", 3.0},
                                   {"min_samples_split", 2.0}};
    static const Hyperparams knn = {{"k", 10.0}};
    static const Hyperparams mlp = {{"hidden_units", 20.0},
                                    {"learning_rate", 0.001},
                                    {"momentum", 0.9},
                                    {"batch_size", 32.0},
                                    {"max_epochs", 800.0},
                                    {"tol", 1e-7}};
    static const Hyperparams sgd = {{"max_epochs", 1000.0},
                                    {"tol", 1e-3},
                                    {"eta0", 0.01},
                                    {"power_t", 0.25}};
    switch (kind) {
        case ModelKind::svr: return svr;
        case ModelKind::random_forest: return rf;
        case ModelKind::decision_tree: return dt;
        case ModelKind::gradient_boosting: return gb;
        case ModelKind::knn: return knn;
        case ModelKind::mlp: return mlp;
        case ModelKind::sgd: return sgd;
    }
    throw ConfigError("unknown model kind");
}

}  // namespace

ModelSpec default_spec(ModelKind kind, std::uint64_t seed) {
    ModelSpec spec;
    spec.kind = kind;
    spec.hyperparams = defaults_for(kind);
    spec.seed = seed;
    return spec;
}

double hyperparam(const ModelSpec& spec, const std::string& name) {
    const Hyperparams& defaults = defaults_for(spec.kind);
    const auto dit = defaults.find(name);
    if (dit == defaults.end())
        throw ConfigError("unknown hyperparameter '" + name + "' for model " +
                          to_string(spec.kind));
    const auto it = spec.hyperparams.find(name);
    return it != spec.hyperparams.end() ? it->second : dit->second;
}

TrainedModel fit_model(const ModelSpec& spec,
                       const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       int worker_count) {
    if (X.rows() != y.size())
        throw DataError("X rows and y length differ");
    if (X.rows() < 2) throw DataError("fit requires at least 2 samples");
    if (!X.allFinite() || !y.allFinite())
        throw DataError("non-finite value in training data");
    for (const auto& [name, value] : spec.hyperparams)
        hyperparam(spec, name);  // reject unknown names early

    const auto t0 = std::chrono::steady_clock::now();
    TrainedModel out;
    out.spec = spec;

    switch (spec.kind) {
        case ModelKind::decision_tree: {
            RegressionTree::Options opt;
            opt.min_samples_split =
                static_cast<int>(hyperparam(spec, "min_samples_split"));
            opt.max_depth = static_cast<int>(hyperparam(spec, "max_depth"));
            out.impl = std::make_shared<RegressionTree>(
                RegressionTree::fit(X, y, opt));
            break;
        }
        case ModelKind::random_forest: {
            RegressionTree::Options opt;
            opt.min_samples_split =
                static_cast<int>(hyperparam(spec, "min_samples_split"));
            opt.max_depth = static_cast<int>(hyperparam(spec, "max_depth"));
            opt.features_per_split =
                static_cast<int>(hyperparam(spec, "features_per_split"));
            const int n_estimators =
                static_cast<int>(hyperparam(spec, "n_estimators"));
            if (n_estimators < 1)
                throw DataError("random forest requires n_estimators >= 1");
            out.impl = std::make_shared<RandomForest>(RandomForest::fit(
                X, y, n_estimators,
                static_cast<std::uint64_t>(hyperparam(spec, "random_state")),
                opt, worker_count));
            break;
        }
        case ModelKind::gradient_boosting: {
            RegressionTree::Options opt;
            opt.min_samples_split =
                static_cast<int>(hyperparam(spec, "min_samples_split"));
            opt.max_depth = static_cast<int>(hyperparam(spec, "max_depth"));
            out.impl = std::make_shared<GradientBoosting>(GradientBoosting::fit(
                X, y, static_cast<int>(hyperparam(spec, "n_estimators")),
                hyperparam(spec, "learning_rate"), opt));
            break;
        }
        case ModelKind::knn: {
            out.impl = std::make_shared<KnnRegressor>(KnnRegressor::fit(
                X, y, static_cast<int>(hyperparam(spec, "k"))));
            break;
        }
        case ModelKind::sgd: {
            auto res = SgdLinearRegressor::fit(
                X, y, static_cast<int>(hyperparam(spec, "max_epochs")),
                hyperparam(spec, "tol"), hyperparam(spec, "eta0"),
                hyperparam(spec, "power_t"), spec.seed);
            out.converged = res.converged;
            out.impl =
                std::make_shared<SgdLinearRegressor>(std::move(res.model));
            break;
        }
        case ModelKind::mlp: {
            auto res = MlpRegressor::fit(
                X, y, static_cast<int>(hyperparam(spec, "hidden_units")),
                hyperparam(spec, "learning_rate"), hyperparam(spec, "momentum"),
                static_cast<int>(hyperparam(spec, "batch_size")),
                static_cast<int>(hyperparam(spec, "max_epochs")),
                hyperparam(spec, "tol"), spec.seed);
            out.converged = res.converged;
            out.impl = std::make_shared<MlpRegressor>(std::move(res.model));
            break;
        }
        case ModelKind::svr: {
            auto res = SvrRegressor::fit(
                X, y, hyperparam(spec, "c"), hyperparam(spec, "epsilon"),
                hyperparam(spec, "gamma"), hyperparam(spec, "kkt_tol"),
                static_cast<std::uint64_t>(hyperparam(spec, "max_iter")));
            out.converged = res.converged;
            out.impl = std::make_shared<SvrRegressor>(std::move(res.model));
            break;
        }
    }

    out.fit_metadata.n_train = X.rows();
    out.fit_metadata.feature_count = X.cols();
    out.fit_metadata.training_wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

Eigen::VectorXd predict(const TrainedModel& m,
                        const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (!m.impl) throw DataError("model has no fitted parameters");
    if (X.cols() != m.fit_metadata.feature_count)
        throw DimensionError("model expects " +
                             std::to_string(m.fit_metadata.feature_count) +
                             " features, input has " + std::to_string(X.cols()));
    return m.impl->predict(X);
}

namespace {

constexpr char kMagic[4] = {'Q', 'O', 'E', 'M'};
constexpr std::uint16_t kFormatVersion = 1;

}  // namespace

std::string save_model(const TrainedModel& m) {
    ByteWriter w;
    w.raw(std::string_view(kMagic, 4));
    w.u16(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(m.spec.kind));
    w.u64(m.spec.seed);
    w.u32(static_cast<std::uint32_t>(m.spec.hyperparams.size()));
    for (const auto& [name, value] : m.spec.hyperparams) {
        w.str(name);
        w.f64(value);
    }
    w.u64(static_cast<std::uint64_t>(m.fit_metadata.n_train));
    w.u64(static_cast<std::uint64_t>(m.fit_metadata.feature_count));
    w.u8(m.converged ? 1 : 0);
    m.impl->serialize(w);
    std::string bytes = w.take();
    ByteWriter tail;
    tail.u32(crc32(bytes));
    bytes += tail.bytes();
    return bytes;
}

TrainedModel load_model(std::string_view bytes) {
    if (bytes.size() < 10) throw SerializationError("model file too short");
    if (bytes.substr(0, 4) != std::string_view(kMagic, 4))
        throw SerializationError("bad magic: not a model file");

    const std::string_view body = bytes.substr(0, bytes.size() - 4);
    ByteReader crc_reader(bytes.substr(bytes.size() - 4));
    if (crc32(body) != crc_reader.u32())
        throw SerializationError("checksum mismatch: file corrupt or truncated");

    TrainedModel out;
    ByteReader reader(body.substr(4));  // past the checked magic
    const std::uint16_t version = reader.u16();
    if (version > kFormatVersion)
        throw SerializationError("unsupported model format version " +
                                 std::to_string(version));
    const std::uint8_t kind_tag = reader.u8();
    if (kind_tag < 1 || kind_tag > 7)
        throw SerializationError("unknown model kind tag " +
                                 std::to_string(kind_tag));
    out.spec.kind = static_cast<ModelKind>(kind_tag);
    out.spec.seed = reader.u64();
    const std::uint32_t hp_count = reader.u32();
    for (std::uint32_t i = 0; i < hp_count; ++i) {
        std::string name = reader.str();
        out.spec.hyperparams[name] = reader.f64();
    }
    out.fit_metadata.n_train = static_cast<Eigen::Index>(reader.u64());
    out.fit_metadata.feature_count = static_cast<Eigen::Index>(reader.u64());
    out.converged = reader.u8() != 0;

    switch (out.spec.kind) {
        case ModelKind::decision_tree:
            out.impl = std::make_shared<RegressionTree>(
                RegressionTree::deserialize(reader));
            break;
        case ModelKind::random_forest:
            out.impl =
                std::make_shared<RandomForest>(RandomForest::deserialize(reader));
            break;
        case ModelKind::gradient_boosting:
            out.impl = std::make_shared<GradientBoosting>(
                GradientBoosting::deserialize(reader));
            break;
        case ModelKind::knn:
            out.impl =
                std::make_shared<KnnRegressor>(KnnRegressor::deserialize(reader));
            break;
        case ModelKind::sgd:
            out.impl = std::make_shared<SgdLinearRegressor>(
                SgdLinearRegressor::deserialize(reader));
            break;
        case ModelKind::mlp:
            out.impl =
                std::make_shared<MlpRegressor>(MlpRegressor::deserialize(reader));
            break;
        case ModelKind::svr:
            out.impl =
                std::make_shared<SvrRegressor>(SvrRegressor::deserialize(reader));
            break;
    }
    if (!reader.done())
        throw SerializationError("trailing bytes after model parameters");
    return out;
}

void save_model_file(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::string bytes = save_model(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

TrainedModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return load_model(bytes);
}

}  // namespace qoe
