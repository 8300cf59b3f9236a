#include <doctest.h>

#include <cmath>

#include "qoe/experiments.hpp"
#include "qoe/features.hpp"
#include "qoe/rng.hpp"
#include "qoe/synth.hpp"

using namespace qoe;

namespace {

/// Small synthetic dataset shared across the suite.
struct Data {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

const Data& data() {
    static const Data d = [] {
        DatasetConfig cfg;
        cfg.per_cell = 2;
        const auto sessions =
            generate_dataset({default_manifest()}, builtin_traces(),
                             builtin_policies(), cfg, 21);
        return Data{feature_matrix(sessions), label_vector(sessions)};
    }();
    return d;
}

ExperimentConfig fast_config() {
    ExperimentConfig cfg;
    cfg.seed = 5;
    cfg.overrides[ModelKind::random_forest] = {{"n_estimators", 30.0}};
    cfg.overrides[ModelKind::gradient_boosting] = {{"n_estimators", 30.0}};
    cfg.overrides[ModelKind::mlp] = {{"max_epochs", 60.0}};
    return cfg;
}

}  // namespace

TEST_CASE("learning curve produces 10 fractions x 7 models") {
    const auto points = run_learning_curve(data().X, data().y, fast_config());
    CHECK(points.size() == 70);
    for (const auto& p : points) {
        CHECK(p.train_fraction >= 0.1 - 1e-12);
        CHECK(p.train_fraction <= 1.0 + 1e-12);
        CHECK(std::isfinite(p.mse));
    }
    const std::string csv = learning_curve_csv(points);
    CHECK(csv.rfind("model,train_fraction,mse\n", 0) == 0);
}

TEST_CASE("learning-curve f=1.0 equals the comparison MSE for the same config") {
    const ExperimentConfig cfg = fast_config();
    const auto points = run_learning_curve(data().X, data().y, cfg);
    const ComparisonResult table = run_comparison(data().X, data().y, cfg);
    for (const auto& cell : table.cells) {
        REQUIRE(cell.metrics);
        double full_fraction_mse = -1.0;
        for (const auto& p : points)
            if (p.kind == cell.kind && p.train_fraction == 1.0)
                full_fraction_mse = p.mse;
        CHECK(full_fraction_mse == cell.metrics->mse);  // same fit, bitwise
    }
}

TEST_CASE("learning curve rejects fractions leaving fewer than 2 samples") {
    Eigen::MatrixXd X(12, 10);
    X.setRandom();
    Eigen::VectorXd y = X.col(0);
    ExperimentConfig cfg;
    cfg.split_ratio = 0.8;  // 10 train rows -> f=0.1 leaves a single sample
    CHECK_THROWS_AS(run_learning_curve(X, y, cfg), DataError);
}

TEST_CASE("comparison table keeps its 7-column shape despite per-cell errors") {
    // Constant labels: fits succeed but every metric column degenerates,
    // and CV fails per fold; the table must still carry all seven kinds.
    Eigen::MatrixXd X(40, 10);
    Rng rng(3);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = rng.normal();
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(40, 0.5);
    const ComparisonResult result = run_comparison(X, y, fast_config());
    REQUIRE(result.cells.size() == 7);
    const std::string csv = comparison_csv(result);
    std::size_t lines = 0;
    for (const char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 6);  // header + 5 metric rows
    CHECK(csv.find("ERR") != std::string::npos);
    const std::string md = comparison_markdown(result);
    CHECK(md.find("| RMSE |") != std::string::npos);
}

TEST_CASE("comparison flags the best cell per metric row") {
    const ComparisonResult result =
        run_comparison(data().X, data().y, fast_config());
    const std::string md = comparison_markdown(result);
    CHECK(md.find("**") != std::string::npos);
    for (const auto& cell : result.cells) {
        REQUIRE(cell.metrics);
        CHECK(cell.metrics->rmse >= cell.metrics->mae);
        CHECK(cell.cv_mean_r2);
    }
}

TEST_CASE("timing benchmark aggregates exactly the requested runs") {
    ExperimentConfig cfg = fast_config();
    cfg.kinds = {ModelKind::decision_tree, ModelKind::knn};
    const auto cells =
        run_timing_benchmark(data().X, data().y, cfg, 7, {5, 10});
    REQUIRE(cells.size() == 4);
    for (const auto& cell : cells) {
        CHECK(cell.runs == 7);
        CHECK(cell.mean_s >= 0.0);
        CHECK(cell.stddev_s >= 0.0);
    }
    CHECK(timing_order(cells).size() == 2);
    CHECK_THROWS_AS(
        run_timing_benchmark(data().X, data().y, cfg, 7, {100000}), DataError);
}

TEST_CASE("experiments are reproducible from (config, seed)") {
    const ExperimentConfig cfg = fast_config();
    const auto a = run_learning_curve(data().X, data().y, cfg);
    const auto b = run_learning_curve(data().X, data().y, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].mse == b[i].mse);
}
