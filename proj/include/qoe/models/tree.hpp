#pragma once

#include <cstdint>
#include <vector>

#include "qoe/model.hpp"
#include "qoe/rng.hpp"

namespace qoe {

/// CART regression tree with variance-reduction (MSE) splits.
///
/// Thresholds sit at midpoints of sorted unique feature values; equal-gain
/// ties resolve to the lowest feature index, then the lowest threshold.
/// The split test is x[feature] <= threshold.
class RegressionTree final : public Model {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        double value = 0.0;
    };

    struct Options {
        int min_samples_split = 2;
        int max_depth = -1;          // -1 = unlimited
        int features_per_split = -1; // -1 = all features
    };

    /// Fits on X rows selected by `samples` (nullptr = all rows, in order).
    /// `feature_rng` drives per-split feature sampling when
    /// features_per_split is set; splits are otherwise deterministic.
    static RegressionTree fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Options& options, Rng* feature_rng = nullptr,
                              const std::vector<Eigen::Index>* samples = nullptr);

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;

    void serialize(ByteWriter& w) const override;
    static RegressionTree deserialize(ByteReader& r);

    std::size_t node_count() const { return nodes_.size(); }
    bool is_single_leaf() const { return nodes_.size() == 1; }
    Eigen::Index feature_count() const { return feature_count_; }

private:
    std::vector<Node> nodes_;
    Eigen::Index feature_count_ = 0;
};

}  // namespace qoe
