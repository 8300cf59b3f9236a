#include "qoe/split.hpp"

#include <cmath>
#include <numeric>

#include "qoe/error.hpp"
#include "qoe/rng.hpp"

namespace qoe {

SplitPlan train_test_split(std::size_t n, double ratio, std::uint64_t seed) {
    if (n < 2) throw DataError("train_test_split requires n >= 2");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw DataError("split ratio must lie strictly between 0 and 1");

    const auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw DataError("split ratio produces an empty side");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    SplitPlan plan;
    plan.seed = seed;
    plan.train_indices.assign(perm.begin(), perm.begin() + static_cast<long>(n_train));
    plan.test_indices.assign(perm.begin() + static_cast<long>(n_train), perm.end());
    return plan;
}

std::vector<std::vector<std::size_t>> kfold_split(
    const std::vector<std::size_t>& train_indices, std::size_t k,
    std::uint64_t seed) {
    if (k < 2) throw DataError("k-fold requires k >= 2");
    if (train_indices.size() < k)
        throw DataError("k-fold requires at least k training samples");

    std::vector<std::size_t> shuffled = train_indices;
    Rng rng(seed);
    rng.shuffle(shuffled);

    const std::size_t n = shuffled.size();
    const std::size_t base = n / k;
    const std::size_t extra = n % k;  // first folds take one more

    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds[f].assign(shuffled.begin() + static_cast<long>(pos),
                        shuffled.begin() + static_cast<long>(pos + size));
        pos += size;
    }
    return folds;
}

}  // namespace qoe
