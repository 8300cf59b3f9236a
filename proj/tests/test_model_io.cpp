#include <doctest.h>

#include "qoe/model.hpp"
#include "qoe/rng.hpp"

using namespace qoe;

namespace {

void fixed_data(Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    Rng rng(1001);
    X.resize(20, 10);
    y.resize(20);
    for (Eigen::Index r = 0; r < 20; ++r) {
        for (Eigen::Index c = 0; c < 10; ++c) X(r, c) = rng.normal();
        y[r] = 0.5 + 0.2 * X(r, 0) - 0.1 * X(r, 3) + 0.05 * rng.normal();
    }
}

}  // namespace

TEST_CASE("save/load round trip preserves predictions for all seven kinds") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    fixed_data(X, y);
    Eigen::MatrixXd probe(6, 10);
    probe.setRandom();

    for (const ModelKind kind : all_model_kinds()) {
        CAPTURE(to_string(kind));
        ModelSpec spec = default_spec(kind, 77);
        if (kind == ModelKind::random_forest)
            spec.hyperparams["n_estimators"] = 25.0;
        if (kind == ModelKind::gradient_boosting)
            spec.hyperparams["n_estimators"] = 25.0;
        if (kind == ModelKind::mlp) spec.hyperparams["max_epochs"] = 30.0;
        const TrainedModel m = fit_model(spec, X, y);
        const std::string bytes = save_model(m);
        const TrainedModel loaded = load_model(bytes);

        CHECK(loaded.spec.kind == kind);
        CHECK(loaded.spec.seed == 77);
        CHECK(loaded.converged == m.converged);
        CHECK(loaded.fit_metadata.n_train == 20);
        CHECK(loaded.fit_metadata.feature_count == 10);

        const Eigen::VectorXd before = predict(m, probe);
        const Eigen::VectorXd after = predict(loaded, probe);
        for (Eigen::Index i = 0; i < before.size(); ++i)
            CHECK(before[i] == after[i]);  // bitwise

        // Serialization is canonical: re-saving reproduces the bytes.
        CHECK(save_model(loaded) == bytes);
    }
}

TEST_CASE("truncated file fails the checksum") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    fixed_data(X, y);
    const std::string bytes =
        save_model(fit_model(default_spec(ModelKind::knn), X, y));
    const std::string truncated = bytes.substr(0, bytes.size() - 9);
    try {
        load_model(truncated);
        FAIL("expected SerializationError");
    } catch (const SerializationError& e) {
        CHECK(std::string(e.what()).find("checksum") != std::string::npos);
    }
}

TEST_CASE("flipped byte fails the checksum") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    fixed_data(X, y);
    std::string bytes =
        save_model(fit_model(default_spec(ModelKind::sgd), X, y));
    bytes[bytes.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(load_model(bytes), SerializationError);
}

TEST_CASE("future format version is rejected by name") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    fixed_data(X, y);
    std::string bytes =
        save_model(fit_model(default_spec(ModelKind::sgd), X, y));
    // Bump the version field (bytes 4..5) and fix up the trailing CRC.
    bytes[4] = 99;
    const std::string body = bytes.substr(0, bytes.size() - 4);
    ByteWriter crc_writer;
    crc_writer.u32(crc32(body));
    bytes = body + crc_writer.bytes();
    try {
        load_model(bytes);
        FAIL("expected SerializationError");
    } catch (const SerializationError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
}

TEST_CASE("unknown kind tag is rejected") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    fixed_data(X, y);
    std::string bytes =
        save_model(fit_model(default_spec(ModelKind::sgd), X, y));
    bytes[6] = 0x2A;  // kind tag lives after magic+version
    const std::string body = bytes.substr(0, bytes.size() - 4);
    ByteWriter crc_writer;
    crc_writer.u32(crc32(body));
    bytes = body + crc_writer.bytes();
    try {
        load_model(bytes);
        FAIL("expected SerializationError");
    } catch (const SerializationError& e) {
        CHECK(std::string(e.what()).find("kind") != std::string::npos);
    }
}

TEST_CASE("bad magic is not a model file") {
    CHECK_THROWS_AS(load_model("XXXXsomething longer than ten"),
                    SerializationError);
    CHECK_THROWS_AS(load_model("short"), SerializationError);
}

TEST_CASE("file round trip through disk") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    fixed_data(X, y);
    const TrainedModel m = fit_model(default_spec(ModelKind::decision_tree), X, y);
    const std::string path = "/tmp/qoe_test_model.qoem";
    save_model_file(m, path);
    const TrainedModel loaded = load_model_file(path);
    Eigen::MatrixXd probe(3, 10);
    probe.setRandom();
    CHECK(predict(m, probe) == predict(loaded, probe));
    CHECK_THROWS_AS(load_model_file("/nonexistent/path.qoem"), IoError);
}

TEST_CASE("crc32 matches the standard test vector") {
    CHECK(crc32("123456789") == 0xCBF43926u);
    CHECK(crc32("") == 0x00000000u);
}
