#include "qoe/models/mlp.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace qoe {

MlpRegressor::Params MlpRegressor::glorot_init(Eigen::Index inputs,
                                               Eigen::Index hidden, Rng& rng) {
    Params p;
    const double limit1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    p.w1.resize(hidden, inputs);
    for (Eigen::Index r = 0; r < hidden; ++r)
        for (Eigen::Index c = 0; c < inputs; ++c)
            p.w1(r, c) = rng.uniform(-limit1, limit1);
    p.b1 = Eigen::VectorXd::Zero(hidden);
    const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    p.w2.resize(hidden);
    for (Eigen::Index r = 0; r < hidden; ++r)
        p.w2[r] = rng.uniform(-limit2, limit2);
    p.b2 = 0.0;
    return p;
}

double MlpRegressor::loss_and_gradients(
    const Params& p, const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, Params* grad) {
    const auto n = static_cast<double>(X.rows());
    const Eigen::MatrixXd z1 =
        (X * p.w1.transpose()).rowwise() + p.b1.transpose();
    const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
    const Eigen::VectorXd pred = (a1 * p.w2).array() + p.b2;
    const Eigen::VectorXd err = pred - y;
    const double loss = err.squaredNorm() / (2.0 * n);
    if (!grad) return loss;

    const Eigen::VectorXd delta = err / n;
    grad->b2 = delta.sum();
    grad->w2 = a1.transpose() * delta;
    Eigen::MatrixXd dz1 = delta * p.w2.transpose();  // n x hidden
    dz1 = (z1.array() > 0.0).select(dz1, 0.0);
    grad->w1 = dz1.transpose() * X;
    grad->b1 = dz1.colwise().sum();
    return loss;
}

MlpFitResult MlpRegressor::fit(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, int hidden_units,
    double learning_rate, double momentum, int batch_size, int max_epochs,
    double tol, std::uint64_t seed) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    batch_size = std::min<int>(batch_size, static_cast<int>(n));

    Rng rng(seed);
    MlpFitResult result;
    Params& p = result.model.params_;
    p = glorot_init(d, hidden_units, rng);

    Params vel;
    vel.w1 = Eigen::MatrixXd::Zero(hidden_units, d);
    vel.b1 = Eigen::VectorXd::Zero(hidden_units);
    vel.w2 = Eigen::VectorXd::Zero(hidden_units);
    vel.b2 = 0.0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Params grad;
    Eigen::MatrixXd bx;
    Eigen::VectorXd by;
    double prev_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        rng.shuffle(order);
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const Eigen::Index len = std::min<Eigen::Index>(batch_size, n - start);
            bx.resize(len, d);
            by.resize(len);
            for (Eigen::Index i = 0; i < len; ++i) {
                bx.row(i) = X.row(order[static_cast<std::size_t>(start + i)]);
                by[i] = y[order[static_cast<std::size_t>(start + i)]];
            }
            loss_and_gradients(p, bx, by, &grad);
            vel.w1 = momentum * vel.w1 - learning_rate * grad.w1;
            vel.b1 = momentum * vel.b1 - learning_rate * grad.b1;
            vel.w2 = momentum * vel.w2 - learning_rate * grad.w2;
            vel.b2 = momentum * vel.b2 - learning_rate * grad.b2;
            p.w1 += vel.w1;
            p.b1 += vel.b1;
            p.w2 += vel.w2;
            p.b2 += vel.b2;
        }
        const double loss = loss_and_gradients(p, X, y, nullptr);
        result.epochs_run = epoch;
        if (prev_loss - loss < tol) {
            result.converged = true;
            break;
        }
        prev_loss = loss;
    }
    return result;
}

Eigen::VectorXd MlpRegressor::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    const Eigen::MatrixXd a1 =
        ((X * params_.w1.transpose()).rowwise() + params_.b1.transpose())
            .cwiseMax(0.0);
    return ((a1 * params_.w2).array() + params_.b2).matrix();
}

void MlpRegressor::serialize(ByteWriter& w) const {
    w.u64(static_cast<std::uint64_t>(params_.w1.rows()));
    w.u64(static_cast<std::uint64_t>(params_.w1.cols()));
    for (Eigen::Index r = 0; r < params_.w1.rows(); ++r)
        for (Eigen::Index c = 0; c < params_.w1.cols(); ++c)
            w.f64(params_.w1(r, c));
    for (Eigen::Index i = 0; i < params_.b1.size(); ++i) w.f64(params_.b1[i]);
    for (Eigen::Index i = 0; i < params_.w2.size(); ++i) w.f64(params_.w2[i]);
    w.f64(params_.b2);
}

MlpRegressor MlpRegressor::deserialize(ByteReader& r) {
    MlpRegressor model;
    const auto hidden = static_cast<Eigen::Index>(r.u64());
    const auto inputs = static_cast<Eigen::Index>(r.u64());
    model.params_.w1.resize(hidden, inputs);
    for (Eigen::Index i = 0; i < hidden; ++i)
        for (Eigen::Index c = 0; c < inputs; ++c) model.params_.w1(i, c) = r.f64();
    model.params_.b1.resize(hidden);
    for (Eigen::Index i = 0; i < hidden; ++i) model.params_.b1[i] = r.f64();
    model.params_.w2.resize(hidden);
    for (Eigen::Index i = 0; i < hidden; ++i) model.params_.w2[i] = r.f64();
    model.params_.b2 = r.f64();
    return model;
}

}  // namespace qoe
