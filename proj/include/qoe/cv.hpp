#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qoe/features.hpp"
#include "qoe/model.hpp"
#include "qoe/split.hpp"

namespace qoe {

/// Outcome of one cross-validation fold. `error` is non-empty when fitting
/// or scoring failed; the fold's scaler is kept for leakage checks.
struct FoldScore {
    std::optional<double> r2;
    std::string error;
    Scaler scaler;
    bool converged = true;
};

struct CvResult {
    std::vector<FoldScore> fold_scores;
    std::optional<double> mean_r2;  // present iff every fold scored
    bool all_converged = true;
};

/// k-fold cross-validation of a model spec on raw (unstandardized) features.
/// Each fold fits its own scaler on the k-1 training folds only, so no
/// validation data leaks into scaling or fitting. Fold errors are recorded,
/// not thrown.
CvResult cross_validate(const ModelSpec& spec,
                        const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y,
                        const std::vector<std::vector<std::size_t>>& folds);

using HyperparamGrid = std::map<std::string, std::vector<double>>;

struct GridCandidate {
    Hyperparams overrides;
    CvResult cv;
};

struct GridSearchResult {
    ModelSpec best;
    std::size_t best_index = 0;
    std::vector<GridCandidate> table;  // exhaustive, in grid order
};

/// Exhaustive search over the Cartesian product of the grid (keys in map
/// order, last key cycling fastest), scored by mean CV R^2; ties keep the
/// earliest candidate. Throws DataError when every candidate fails.
GridSearchResult grid_search(ModelKind kind, const HyperparamGrid& grid,
                             const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             const std::vector<std::vector<std::size_t>>& folds,
                             std::uint64_t seed = 0);

/// Score table as CSV: candidate params, fold_1..fold_k, mean.
std::string grid_search_csv(const GridSearchResult& result);

}  // namespace qoe
