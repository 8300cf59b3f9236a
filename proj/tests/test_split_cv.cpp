#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "qoe/cv.hpp"
#include "qoe/rng.hpp"
#include "qoe/split.hpp"

using namespace qoe;

TEST_CASE("80/20 split of 450 gives 360/90") {
    const SplitPlan plan = train_test_split(450, 0.8, 0);
    CHECK(plan.train_indices.size() == 360);
    CHECK(plan.test_indices.size() == 90);
}

TEST_CASE("same seed, same plan; different seed, different plan") {
    const SplitPlan a = train_test_split(10, 0.8, 7);
    const SplitPlan b = train_test_split(10, 0.8, 7);
    const SplitPlan c = train_test_split(10, 0.8, 8);
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.test_indices == b.test_indices);
    CHECK(a.train_indices != c.train_indices);
}

TEST_CASE("split sides are disjoint and cover everything") {
    const SplitPlan plan = train_test_split(5, 0.5, 3);
    CHECK(plan.train_indices.size() + plan.test_indices.size() == 5);
    const bool ok_sizes = (plan.train_indices.size() == 2 ||
                           plan.train_indices.size() == 3);
    CHECK(ok_sizes);
    std::set<std::size_t> all(plan.train_indices.begin(),
                              plan.train_indices.end());
    all.insert(plan.test_indices.begin(), plan.test_indices.end());
    CHECK(all.size() == 5);
}

TEST_CASE("split rejects bad arguments") {
    CHECK_THROWS_AS(train_test_split(1, 0.5, 0), DataError);
    CHECK_THROWS_AS(train_test_split(10, 0.0, 0), DataError);
    CHECK_THROWS_AS(train_test_split(10, 1.0, 0), DataError);
    CHECK_THROWS_AS(train_test_split(10, 0.01, 0), DataError);  // empty train
}

TEST_CASE("kfold: 10 indices into five folds of 2") {
    std::vector<std::size_t> idx(10);
    std::iota(idx.begin(), idx.end(), 0);
    const auto folds = kfold_split(idx, 5, 1);
    REQUIRE(folds.size() == 5);
    for (const auto& fold : folds) CHECK(fold.size() == 2);
}

TEST_CASE("kfold: 11 indices give sizes {3,2,2,2,2}") {
    std::vector<std::size_t> idx(11);
    std::iota(idx.begin(), idx.end(), 0);
    const auto folds = kfold_split(idx, 5, 1);
    CHECK(folds[0].size() == 3);
    for (std::size_t f = 1; f < 5; ++f) CHECK(folds[f].size() == 2);
}

TEST_CASE("property: folds partition the input for random inputs") {
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 5 + rng.below(200);
        const std::size_t k = 2 + rng.below(std::min<std::uint64_t>(n - 1, 9));
        std::vector<std::size_t> idx(n);
        for (auto& v : idx) v = rng.below(100000);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        if (idx.size() < k) continue;
        const auto folds = kfold_split(idx, k, trial);
        std::vector<std::size_t> merged;
        std::size_t max_size = 0, min_size = idx.size();
        for (const auto& fold : folds) {
            merged.insert(merged.end(), fold.begin(), fold.end());
            max_size = std::max(max_size, fold.size());
            min_size = std::min(min_size, fold.size());
        }
        CHECK(max_size - min_size <= 1);
        std::sort(merged.begin(), merged.end());
        CHECK(merged == idx);
    }
}

TEST_CASE("kfold rejects fewer samples than folds") {
    std::vector<std::size_t> idx = {0, 1, 2};
    CHECK_THROWS_AS(kfold_split(idx, 5, 0), DataError);
}

namespace {

// Smooth linear target; easy for every model kind.
void linear_data(Eigen::MatrixXd& X, Eigen::VectorXd& y, std::size_t n,
                 std::uint64_t seed) {
    Rng rng(seed);
    X.resize(static_cast<Eigen::Index>(n), 10);
    y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c)
            X(r, c) = rng.uniform(-1.0, 1.0);
        y[r] = 0.5 + 0.3 * X(r, 0) - 0.2 * X(r, 1);
    }
}

std::vector<std::size_t> iota_idx(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

TEST_CASE("cross_validate: mean equals the arithmetic mean of fold scores") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_data(X, y, 60, 3);
    const auto folds = kfold_split(iota_idx(60), 5, 9);
    const CvResult cv =
        cross_validate(default_spec(ModelKind::knn), X, y, folds);
    REQUIRE(cv.mean_r2);
    double sum = 0.0;
    for (const auto& fs : cv.fold_scores) {
        REQUIRE(fs.r2);
        sum += *fs.r2;
    }
    CHECK(*cv.mean_r2 == doctest::Approx(sum / 5.0).epsilon(1e-15));
}

TEST_CASE("cross_validate: degenerate folds report errors, not crashes") {
    // Constant labels make R2 undefined in every fold.
    Eigen::MatrixXd X(12, 10);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 0.5);
    Rng rng(4);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = rng.uniform();
    const auto folds = kfold_split(iota_idx(12), 4, 0);
    const CvResult cv =
        cross_validate(default_spec(ModelKind::decision_tree), X, y, folds);
    CHECK(!cv.mean_r2);
    for (const auto& fs : cv.fold_scores) {
        CHECK(!fs.r2);
        CHECK(!fs.error.empty());
    }
}

TEST_CASE("cross_validate: no leakage into per-fold scalers") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_data(X, y, 40, 8);
    const auto folds = kfold_split(iota_idx(40), 4, 2);
    const ModelSpec spec = default_spec(ModelKind::knn);
    const CvResult before = cross_validate(spec, X, y, folds);

    // Garbage in fold 0's rows (features and labels) must leave fold 0's
    // scaler untouched: it is fitted on the other folds only.
    Eigen::MatrixXd mutated = X;
    Eigen::VectorXd ymut = y;
    for (const std::size_t row : folds[0]) {
        mutated.row(static_cast<Eigen::Index>(row)).setConstant(1e6);
        ymut[static_cast<Eigen::Index>(row)] = -1e6;
    }
    const CvResult after = cross_validate(spec, mutated, ymut, folds);
    CHECK(before.fold_scores[0].scaler.mu == after.fold_scores[0].scaler.mu);
    CHECK(before.fold_scores[0].scaler.sigma ==
          after.fold_scores[0].scaler.sigma);
}

TEST_CASE("grid_search: singleton grid returns that spec") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_data(X, y, 50, 5);
    const auto folds = kfold_split(iota_idx(50), 5, 1);
    const auto result = grid_search(ModelKind::knn, {{"k", {3.0}}}, X, y, folds);
    CHECK(result.table.size() == 1);
    CHECK(result.best_index == 0);
    CHECK(hyperparam(result.best, "k") == 3.0);
}

TEST_CASE("grid_search: empty value list is a config error") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_data(X, y, 30, 5);
    const auto folds = kfold_split(iota_idx(30), 5, 1);
    CHECK_THROWS_AS(grid_search(ModelKind::knn, {{"k", {}}}, X, y, folds),
                    ConfigError);
    CHECK_THROWS_AS(grid_search(ModelKind::knn, {}, X, y, folds), ConfigError);
}

TEST_CASE("grid_search: product size and deterministic order") {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    linear_data(X, y, 50, 6);
    const auto folds = kfold_split(iota_idx(50), 5, 1);
    const auto result = grid_search(
        ModelKind::sgd, {{"eta0", {0.01, 0.1}}, {"max_epochs", {50.0, 100.0}}},
        X, y, folds);
    REQUIRE(result.table.size() == 4);
    // Keys iterate in map order (eta0 outer), last key fastest.
    CHECK(result.table[0].overrides.at("eta0") == 0.01);
    CHECK(result.table[0].overrides.at("max_epochs") == 50.0);
    CHECK(result.table[1].overrides.at("eta0") == 0.01);
    CHECK(result.table[1].overrides.at("max_epochs") == 100.0);
    CHECK(result.table[2].overrides.at("eta0") == 0.1);
    const std::string csv = grid_search_csv(result);
    CHECK(csv.find("fold_5") != std::string::npos);
    CHECK(csv.find("mean") != std::string::npos);
}

TEST_CASE("grid_search: all candidates failing raises with reasons") {
    // Constant labels: every fold's R2 is undefined for every candidate.
    Eigen::MatrixXd X(20, 10);
    Rng rng(1);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = rng.uniform();
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 1.0);
    const auto folds = kfold_split(iota_idx(20), 4, 0);
    try {
        grid_search(ModelKind::knn, {{"k", {1.0, 2.0}}}, X, y, folds);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("candidate 0") != std::string::npos);
        CHECK(std::string(e.what()).find("candidate 1") != std::string::npos);
    }
}
