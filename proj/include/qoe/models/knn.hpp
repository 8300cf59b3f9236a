#pragma once

#include "qoe/model.hpp"

namespace qoe {

/// k-nearest-neighbour regression with uniform weights. Stores the training
/// set; queries average the labels of the k closest rows by Euclidean
/// distance, distance ties broken by the lower training index.
class KnnRegressor final : public Model {
public:
    static KnnRegressor fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y, int k);

    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;
    void serialize(ByteWriter& w) const override;
    static KnnRegressor deserialize(ByteReader& r);

    int k() const { return k_; }

private:
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_y_;
    int k_ = 0;
};

}  // namespace qoe
