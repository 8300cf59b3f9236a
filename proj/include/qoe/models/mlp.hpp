#pragma once

#include "qoe/model.hpp"
#include "qoe/rng.hpp"

namespace qoe {

struct MlpFitResult;

/// Single-hidden-layer perceptron: ReLU hidden units, identity output,
/// squared loss, trained by seeded mini-batch gradient descent with
/// classical momentum. Weights initialize from the symmetric uniform
/// (Glorot) scheme drawn in a fixed order from the seed.
class MlpRegressor final : public Model {
public:
    struct Params {
        Eigen::MatrixXd w1;  // hidden x input
        Eigen::VectorXd b1;  // hidden
        Eigen::VectorXd w2;  // hidden
        double b2 = 0.0;
    };

    static MlpFitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            int hidden_units, double learning_rate,
                            double momentum, int batch_size, int max_epochs,
                            double tol, std::uint64_t seed);

    /// Half mean squared error of the forward pass and, when `grad` is
    /// non-null, its analytic gradients. Exposed so finite-difference
    /// checks can probe arbitrary parameter points.
    static double loss_and_gradients(const Params& p,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::VectorXd>& y,
                                     Params* grad);

    static Params glorot_init(Eigen::Index inputs, Eigen::Index hidden,
                              Rng& rng);

    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;
    void serialize(ByteWriter& w) const override;
    static MlpRegressor deserialize(ByteReader& r);

    const Params& params() const { return params_; }

private:
    Params params_;
};

struct MlpFitResult {
    MlpRegressor model;
    bool converged = false;
    int epochs_run = 0;
};

}  // namespace qoe
