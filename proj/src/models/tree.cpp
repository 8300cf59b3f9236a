#include "qoe/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qoe {

namespace {

struct BestSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;
};

struct Builder {
    const Eigen::Ref<const Eigen::MatrixXd>& X;
    const Eigen::Ref<const Eigen::VectorXd>& y;
    const RegressionTree::Options& opt;
    Rng* rng;
    std::vector<RegressionTree::Node>& nodes;

    // Scratch reused across nodes.
    std::vector<Eigen::Index> order;
    std::vector<int> candidates;

    std::uint32_t build(std::vector<Eigen::Index>& idx, int depth) {
        const std::size_t n = idx.size();
        // Node statistics accumulate in value order so the fitted tree does
        // not depend on the training-row order (equal values commute).
        order = idx;
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index a, Eigen::Index b) { return y[a] < y[b]; });
        double sum = 0.0, sumsq = 0.0;
        for (const Eigen::Index i : order) {
            sum += y[i];
            sumsq += y[i] * y[i];
        }
        const double mean = sum / static_cast<double>(n);
        const double parent_sse = sumsq - sum * mean;

        const auto node_id = static_cast<std::uint32_t>(nodes.size());
        nodes.push_back({});
        nodes[node_id].value = mean;

        const bool depth_ok = opt.max_depth < 0 || depth < opt.max_depth;
        if (n < static_cast<std::size_t>(opt.min_samples_split) || !depth_ok ||
            parent_sse <= 0.0)
            return node_id;

        const BestSplit best = find_split(idx);
        if (best.feature < 0) return node_id;

        std::vector<Eigen::Index> left, right;
        left.reserve(best.left_count);
        right.reserve(n - best.left_count);
        for (const Eigen::Index i : idx) {
            if (X(i, best.feature) <= best.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();

        nodes[node_id].feature = best.feature;
        nodes[node_id].threshold = best.threshold;
        const std::uint32_t l = build(left, depth + 1);
        nodes[node_id].left = l;
        const std::uint32_t r = build(right, depth + 1);
        nodes[node_id].right = r;
        return node_id;
    }

    BestSplit find_split(const std::vector<Eigen::Index>& idx) {
        const auto d = static_cast<int>(X.cols());
        candidates.clear();
        if (opt.features_per_split < 0 || opt.features_per_split >= d) {
            for (int f = 0; f < d; ++f) candidates.push_back(f);
        } else {
            // Sample without replacement, then evaluate in ascending order
            // so tie-breaking stays deterministic.
            std::vector<int> pool(static_cast<std::size_t>(d));
            std::iota(pool.begin(), pool.end(), 0);
            for (int t = 0; t < opt.features_per_split; ++t) {
                const auto j = static_cast<std::size_t>(
                    rng->below(static_cast<std::uint64_t>(d - t)));
                candidates.push_back(pool[j]);
                std::swap(pool[j], pool[static_cast<std::size_t>(d - t) - 1]);
            }
            std::sort(candidates.begin(), candidates.end());
        }

        const std::size_t n = idx.size();

        BestSplit best;
        for (const int f : candidates) {
            order = idx;
            std::sort(order.begin(), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                          const double xa = X(a, f), xb = X(b, f);
                          return xa < xb || (xa == xb && y[a] < y[b]);
                      });
            double total_sum = 0.0;
            for (const Eigen::Index i : order) total_sum += y[i];

            double left_sum = 0.0;
            for (std::size_t p = 1; p < n; ++p) {
                left_sum += y[order[p - 1]];
                const double lo = X(order[p - 1], f);
                const double hi = X(order[p], f);
                if (lo == hi) continue;  // only boundaries between distinct values

                const double nl = static_cast<double>(p);
                const double nr = static_cast<double>(n - p);
                const double right_sum = total_sum - left_sum;
                // SSE_left + SSE_right = sumsq_total - sum_l^2/nl - sum_r^2/nr;
                // sumsq_total is common, so maximize the subtracted part.
                const double score =
                    left_sum * left_sum / nl + right_sum * right_sum / nr;
                const double gain =
                    score - total_sum * total_sum / static_cast<double>(n);
                if (gain <= 0.0) continue;

                double thr = 0.5 * (lo + hi);
                if (!(thr < hi)) thr = lo;  // keep the split test consistent

                const bool better =
                    gain > best.gain ||
                    (gain == best.gain &&
                     (f < best.feature ||
                      (f == best.feature && thr < best.threshold)));
                if (better) best = {gain, f, thr, p};
            }
        }
        return best;
    }
};

}  // namespace

RegressionTree RegressionTree::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Options& options, Rng* feature_rng,
                                   const std::vector<Eigen::Index>* samples) {
    RegressionTree tree;
    tree.feature_count_ = X.cols();

    std::vector<Eigen::Index> idx;
    if (samples) {
        idx = *samples;
    } else {
        idx.resize(static_cast<std::size_t>(X.rows()));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    }
    if (idx.empty()) throw DataError("cannot fit a tree on zero samples");

    Builder builder{X, y, options, feature_rng, tree.nodes_, {}, {}};
    builder.build(idx, 0);
    return tree;
}

double RegressionTree::predict_row(
    const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    std::uint32_t at = 0;
    while (nodes_[at].feature >= 0)
        at = x[nodes_[at].feature] <= nodes_[at].threshold ? nodes_[at].left
                                                           : nodes_[at].right;
    return nodes_[at].value;
}

Eigen::VectorXd RegressionTree::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
    return out;
}

void RegressionTree::serialize(ByteWriter& w) const {
    w.u64(static_cast<std::uint64_t>(feature_count_));
    w.u32(static_cast<std::uint32_t>(nodes_.size()));
    for (const Node& n : nodes_) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.u32(n.left);
        w.u32(n.right);
        w.f64(n.value);
    }
}

RegressionTree RegressionTree::deserialize(ByteReader& r) {
    RegressionTree tree;
    tree.feature_count_ = static_cast<Eigen::Index>(r.u64());
    const std::uint32_t count = r.u32();
    tree.nodes_.resize(count);
    for (Node& n : tree.nodes_) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.u32();
        n.right = r.u32();
        n.value = r.f64();
    }
    if (tree.nodes_.empty()) throw SerializationError("empty tree");
    return tree;
}

}  // namespace qoe
