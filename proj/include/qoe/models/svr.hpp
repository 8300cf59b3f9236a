#pragma once

#include "qoe/model.hpp"

namespace qoe {

struct SvrFitResult;

/// Epsilon-insensitive support vector regression with an RBF kernel, solved
/// by sequential minimal optimization (maximal-violating-pair selection) on
/// the expanded 2n-variable dual to the given KKT gap tolerance.
class SvrRegressor final : public Model {
public:
    /// gamma <= 0 selects the scale heuristic 1 / (n_features * var(X)).
    static SvrFitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            double c, double epsilon, double gamma,
                            double kkt_tol, std::uint64_t max_iter);

    Eigen::VectorXd predict(
        const Eigen::Ref<const Eigen::MatrixXd>& X) const override;
    void serialize(ByteWriter& w) const override;
    static SvrRegressor deserialize(ByteReader& r);

    double bias() const { return bias_; }
    double gamma() const { return gamma_; }
    Eigen::Index support_count() const { return coefficients_.size(); }

    /// Worst KKT residual of the epsilon-tube optimality conditions over a
    /// training set; diagnostics for tests.
    double kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, double c,
                        double epsilon,
                        const Eigen::Ref<const Eigen::VectorXd>& beta) const;

private:
    Eigen::MatrixXd support_x_;      // one row per support vector
    Eigen::VectorXd coefficients_;   // beta = alpha - alpha*
    double bias_ = 0.0;
    double gamma_ = 0.0;
};

struct SvrFitResult {
    SvrRegressor model;
    bool converged = false;
    std::uint64_t iterations = 0;
    Eigen::VectorXd beta;  // per training point, alpha - alpha*
};

}  // namespace qoe
