#include "qoe/models/knn.hpp"

#include <algorithm>
#include <numeric>

namespace qoe {

KnnRegressor KnnRegressor::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               int k) {
    if (k < 1) throw DataError("knn requires k >= 1");
    if (X.rows() < k) throw DataError("knn requires at least k training samples");
    KnnRegressor model;
    model.train_x_ = X;
    model.train_y_ = y;
    model.k_ = k;
    return model;
}

Eigen::VectorXd KnnRegressor::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    const Eigen::Index n = train_x_.rows();
    Eigen::VectorXd out(X.rows());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index q = 0; q < X.rows(); ++q) {
        const Eigen::VectorXd dist =
            (train_x_.rowwise() - X.row(q)).rowwise().squaredNorm();
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::partial_sort(order.begin(), order.begin() + k_, order.end(),
                          [&dist](Eigen::Index a, Eigen::Index b) {
                              return dist[a] < dist[b] ||
                                     (dist[a] == dist[b] && a < b);
                          });
        double sum = 0.0;
        for (int i = 0; i < k_; ++i)
            sum += train_y_[order[static_cast<std::size_t>(i)]];
        out[q] = sum / k_;
    }
    return out;
}

void KnnRegressor::serialize(ByteWriter& w) const {
    w.u32(static_cast<std::uint32_t>(k_));
    w.u64(static_cast<std::uint64_t>(train_x_.rows()));
    w.u64(static_cast<std::uint64_t>(train_x_.cols()));
    for (Eigen::Index r = 0; r < train_x_.rows(); ++r)
        for (Eigen::Index c = 0; c < train_x_.cols(); ++c) w.f64(train_x_(r, c));
    for (Eigen::Index i = 0; i < train_y_.size(); ++i) w.f64(train_y_[i]);
}

KnnRegressor KnnRegressor::deserialize(ByteReader& r) {
    KnnRegressor model;
    model.k_ = static_cast<int>(r.u32());
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    model.train_x_.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) model.train_x_(i, c) = r.f64();
    model.train_y_.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) model.train_y_[i] = r.f64();
    return model;
}

}  // namespace qoe
