#pragma once

#include <cstdint>
#include <vector>

namespace qoe {

/// Train/test partition plus optional CV folds over the training set.
struct SplitPlan {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::vector<std::vector<std::size_t>> folds;  // partition of train_indices
    std::uint64_t seed = 0;
};

/// Seeded random split; |train| = round(ratio * n). Folds left empty.
SplitPlan train_test_split(std::size_t n, double ratio, std::uint64_t seed);

/// Splits indices into k disjoint folds covering the input, sizes differing
/// by at most 1 (earlier folds take the remainder). Seeded shuffle.
std::vector<std::vector<std::size_t>> kfold_split(
    const std::vector<std::size_t>& train_indices, std::size_t k,
    std::uint64_t seed);

}  // namespace qoe
