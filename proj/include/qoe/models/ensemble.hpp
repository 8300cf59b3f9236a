#pragma once

#include <vector>

#include "qoe/models/tree.hpp"

namespace qoe {

/// Bagged CART trees: bootstrap of size n per tree, a fixed-size feature
/// subset sampled per split, per-tree RNG streams derived from
/// (random_state, tree_index). Prediction is the mean over trees in index
/// order, so results do not depend on the worker count used to fit.
class RandomForest final : public Model {
public:
    static RandomForest fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            int n_estimators, std::uint64_t random_state,
                            const RegressionTree::Options& tree_options,
                            int worker_count);

    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;
    void serialize(ByteWriter& w) const override;
    static RandomForest deserialize(ByteReader& r);

    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    std::vector<RegressionTree> trees_;
};

/// Stagewise boosting of shallow regression trees on residuals; the initial
/// prediction is mean(y) and each stage is shrunk by the learning rate.
class GradientBoosting final : public Model {
public:
    static GradientBoosting fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                int n_estimators, double learning_rate,
                                const RegressionTree::Options& tree_options);

    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;
    void serialize(ByteWriter& w) const override;
    static GradientBoosting deserialize(ByteReader& r);

    double initial_prediction() const { return init_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    double init_ = 0.0;
    double learning_rate_ = 0.0;
    std::vector<RegressionTree> trees_;
};

}  // namespace qoe
