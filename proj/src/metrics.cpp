#include "qoe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qoe {

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&v](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });

    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] ==
                                v[order[static_cast<std::size_t>(i)]])
            ++j;
        // 1-based ranks i+1..j+1 averaged across the tie group.
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index t = i; t <= j; ++t)
            ranks[order[static_cast<std::size_t>(t)]] = rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
                              const Eigen::Ref<const Eigen::VectorXd>& b) {
    const double n = static_cast<double>(a.size());
    const Eigen::VectorXd da = a.array() - a.mean();
    const Eigen::VectorXd db = b.array() - b.mean();
    const double ssa = da.squaredNorm();
    const double ssb = db.squaredNorm();
    if (ssa == 0.0 || ssb == 0.0) return std::nullopt;
    (void)n;
    return da.dot(db) / std::sqrt(ssa * ssb);
}

}  // namespace

MetricsReport compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Eigen::Ref<const Eigen::VectorXd>& yhat) {
    if (y.size() != yhat.size())
        throw DataError("y and yhat must have equal length");
    if (y.size() < 2) throw DataError("at least 2 samples required");
    if (!y.allFinite() || !yhat.allFinite())
        throw DataError("non-finite value in metric input");

    MetricsReport r;
    const Eigen::VectorXd err = y - yhat;
    r.mse = err.squaredNorm() / static_cast<double>(y.size());
    r.rmse = std::sqrt(r.mse);
    r.mae = err.array().abs().mean();

    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    if (ss_tot == 0.0) {
        r.degeneracies.push_back("r2 undefined: y constant");
    } else {
        r.r2 = 1.0 - err.squaredNorm() / ss_tot;
    }

    const bool y_const = (y.array() == y[0]).all();
    const bool yhat_const = (yhat.array() == yhat[0]).all();
    if (y_const || yhat_const) {
        r.degeneracies.push_back(std::string("plcc undefined: ") +
                                 (y_const ? "y" : "yhat") + " constant");
        r.degeneracies.push_back(std::string("srcc undefined: ") +
                                 (y_const ? "y" : "yhat") + " constant");
    } else {
        r.plcc = pearson(y, yhat);
        r.srcc = pearson(average_ranks(y), average_ranks(yhat));
    }
    return r;
}

}  // namespace qoe
