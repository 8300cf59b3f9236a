#include "qoe/models/ensemble.hpp"

#include <algorithm>
#include <thread>

namespace qoe {

RandomForest RandomForest::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               int n_estimators, std::uint64_t random_state,
                               const RegressionTree::Options& tree_options,
                               int worker_count) {
    RandomForest forest;
    forest.trees_.resize(static_cast<std::size_t>(n_estimators));
    const auto n = static_cast<std::uint64_t>(X.rows());

    auto build_range = [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            Rng rng(derive_seed(random_state, static_cast<std::uint64_t>(t)));
            std::vector<Eigen::Index> bootstrap(static_cast<std::size_t>(n));
            for (auto& idx : bootstrap)
                idx = static_cast<Eigen::Index>(rng.below(n));
            forest.trees_[static_cast<std::size_t>(t)] =
                RegressionTree::fit(X, y, tree_options, &rng, &bootstrap);
        }
    };

    int workers = worker_count > 0
                      ? worker_count
                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, n_estimators));

    if (workers == 1) {
        build_range(0, n_estimators);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_estimators + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n_estimators, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(build_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return forest;
}

Eigen::VectorXd RandomForest::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(X.rows());
    for (const auto& tree : trees_) sum += tree.predict(X);
    return sum / static_cast<double>(trees_.size());
}

void RandomForest::serialize(ByteWriter& w) const {
    w.u32(static_cast<std::uint32_t>(trees_.size()));
    for (const auto& tree : trees_) tree.serialize(w);
}

RandomForest RandomForest::deserialize(ByteReader& r) {
    RandomForest forest;
    const std::uint32_t count = r.u32();
    forest.trees_.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
        forest.trees_.push_back(RegressionTree::deserialize(r));
    if (forest.trees_.empty()) throw SerializationError("forest with no trees");
    return forest;
}

GradientBoosting GradientBoosting::fit(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, int n_estimators,
    double learning_rate, const RegressionTree::Options& tree_options) {
    GradientBoosting gb;
    gb.init_ = y.mean();
    gb.learning_rate_ = learning_rate;
    gb.trees_.reserve(static_cast<std::size_t>(n_estimators));

    Eigen::VectorXd residual = y.array() - gb.init_;
    for (int m = 0; m < n_estimators; ++m) {
        RegressionTree tree = RegressionTree::fit(X, residual, tree_options);
        residual -= learning_rate * tree.predict(X);
        gb.trees_.push_back(std::move(tree));
    }
    return gb;
}

Eigen::VectorXd GradientBoosting::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), init_);
    for (const auto& tree : trees_) out += learning_rate_ * tree.predict(X);
    return out;
}

void GradientBoosting::serialize(ByteWriter& w) const {
    w.f64(init_);
    w.f64(learning_rate_);
    w.u32(static_cast<std::uint32_t>(trees_.size()));
    for (const auto& tree : trees_) tree.serialize(w);
}

GradientBoosting GradientBoosting::deserialize(ByteReader& r) {
    GradientBoosting gb;
    gb.init_ = r.f64();
    gb.learning_rate_ = r.f64();
    const std::uint32_t count = r.u32();
    gb.trees_.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
        gb.trees_.push_back(RegressionTree::deserialize(r));
    return gb;
}

}  // namespace qoe
