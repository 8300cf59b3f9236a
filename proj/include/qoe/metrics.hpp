#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qoe/error.hpp"

namespace qoe {

/// The six evaluation metrics for a prediction vector against ground truth.
///
/// mse/rmse/mae are always defined for valid input. r2 is undefined when the
/// truth is constant; plcc/srcc are undefined when either side is constant.
/// Undefined entries stay empty and `degeneracies` names the offending side.
struct MetricsReport {
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> r2;
    std::optional<double> plcc;
    std::optional<double> srcc;
    std::vector<std::string> degeneracies;

    bool complete() const { return r2 && plcc && srcc; }
};

/// Computes all six metrics. Throws DataError unless both vectors have the
/// same length >= 2 and only finite entries.
MetricsReport compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Eigen::Ref<const Eigen::VectorXd>& yhat);

/// Average ranks (1-based) with ties sharing the mean rank.
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace qoe
