#include "qoe/models/linear.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace qoe {

SgdFitResult SgdLinearRegressor::fit(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, int max_epochs, double tol,
    double eta0, double power_t, std::uint64_t seed) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();

    SgdFitResult result;
    Eigen::VectorXd& w = result.model.weights_;
    double& b = result.model.intercept_;
    w = Eigen::VectorXd::Zero(d);
    b = 0.0;

    Rng rng(seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    double prev_loss = std::numeric_limits<double>::infinity();
    std::uint64_t step = 0;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        rng.shuffle(order);
        for (const Eigen::Index i : order) {
            ++step;
            const double eta =
                eta0 / std::pow(static_cast<double>(step), power_t);
            const double err = w.dot(X.row(i)) + b - y[i];
            w -= eta * err * X.row(i).transpose();
            b -= eta * err;
        }
        const double loss =
            (X * w + Eigen::VectorXd::Constant(n, b) - y).squaredNorm() /
            static_cast<double>(n);
        result.epochs_run = epoch;
        if (prev_loss - loss < tol) {
            result.converged = true;
            break;
        }
        prev_loss = loss;
    }
    return result;
}

Eigen::VectorXd SgdLinearRegressor::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    return (X * weights_).array() + intercept_;
}

void SgdLinearRegressor::serialize(ByteWriter& w) const {
    w.u64(static_cast<std::uint64_t>(weights_.size()));
    for (Eigen::Index i = 0; i < weights_.size(); ++i) w.f64(weights_[i]);
    w.f64(intercept_);
}

SgdLinearRegressor SgdLinearRegressor::deserialize(ByteReader& r) {
    SgdLinearRegressor model;
    const auto d = static_cast<Eigen::Index>(r.u64());
    model.weights_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) model.weights_[i] = r.f64();
    model.intercept_ = r.f64();
    return model;
}

}  // namespace qoe
