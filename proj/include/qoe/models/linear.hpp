#pragma once

#include "qoe/model.hpp"
#include "qoe/rng.hpp"

namespace qoe {

struct SgdFitResult;

/// Linear model trained by stochastic gradient descent on squared loss with
/// inverse-scaling step decay eta0 / t^power_t. Sample order reshuffles each
/// epoch from the seed; training stops once the epoch-loss improvement drops
/// below tol or the epoch cap is reached (the latter clears `converged`).
class SgdLinearRegressor final : public Model {
public:
    static SgdFitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            int max_epochs, double tol, double eta0,
                            double power_t, std::uint64_t seed);

    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;
    void serialize(ByteWriter& w) const override;
    static SgdLinearRegressor deserialize(ByteReader& r);

    const Eigen::VectorXd& coefficients() const { return weights_; }
    double intercept() const { return intercept_; }

private:
    Eigen::VectorXd weights_;
    double intercept_ = 0.0;
};

struct SgdFitResult {
    SgdLinearRegressor model;
    bool converged = false;
    int epochs_run = 0;
};

}  // namespace qoe
