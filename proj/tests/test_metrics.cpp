#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qoe/metrics.hpp"
#include "qoe/rng.hpp"

using namespace qoe;

namespace {

// ---------------------------------------------------------------------------
// Independent brute-force oracle: naive loops, no shared code with the
// library implementation.
// ---------------------------------------------------------------------------

struct OracleMetrics {
    double mse, rmse, mae, r2, plcc, srcc;
};

double oracle_pearson(const std::vector<double>& a,
                      const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(da * db);
}

// O(n^2) average ranks: 1-based, tie groups share the mean rank.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t smaller = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++smaller;
            if (v[j] == v[i]) ++equal;
        }
        // mean of ranks smaller+1 .. smaller+equal
        ranks[i] = smaller + 0.5 * (equal + 1.0);
    }
    return ranks;
}

OracleMetrics oracle_metrics(const std::vector<double>& y,
                             const std::vector<double>& yhat) {
    const std::size_t n = y.size();
    OracleMetrics m{};
    double my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - yhat[i];
        m.mse += e * e;
        m.mae += std::abs(e);
        my += y[i];
    }
    m.mse /= n;
    m.mae /= n;
    m.rmse = std::sqrt(m.mse);
    my /= n;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    m.r2 = 1.0 - ss_res / ss_tot;
    m.plcc = oracle_pearson(y, yhat);
    m.srcc = oracle_pearson(oracle_ranks(y), oracle_ranks(yhat));
    return m;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                             static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("perfect prediction") {
    const auto y = to_vec({0.1, 0.5, 0.9});
    const MetricsReport r = compute_metrics(y, y);
    CHECK(r.mse == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(*r.r2 == 1.0);
    CHECK(*r.plcc == doctest::Approx(1.0));
    CHECK(*r.srcc == doctest::Approx(1.0));
}

TEST_CASE("mean predictor gives R2 = 0 and a degenerate plcc") {
    const auto y = to_vec({1, 2, 3});
    const auto yhat = to_vec({2, 2, 2});
    const MetricsReport r = compute_metrics(y, yhat);
    CHECK(r.mse == doctest::Approx(2.0 / 3.0));
    CHECK(r.mae == doctest::Approx(2.0 / 3.0));
    CHECK(*r.r2 == doctest::Approx(0.0));
    CHECK(!r.plcc);
    CHECK(!r.srcc);
    REQUIRE(r.degeneracies.size() == 2);
    CHECK(r.degeneracies[0].find("yhat") != std::string::npos);
}

TEST_CASE("rank-preserving nonlinear map keeps srcc at 1") {
    const auto y = to_vec({1, 2, 3});
    const auto yhat = to_vec({10, 100, 1000});
    const MetricsReport r = compute_metrics(y, yhat);
    CHECK(*r.srcc == doctest::Approx(1.0));
    CHECK(*r.plcc < 1.0);
}

TEST_CASE("constant truth degenerates r2 with a named side") {
    const auto y = to_vec({1, 1, 1});
    const auto yhat = to_vec({1, 2, 3});
    const MetricsReport r = compute_metrics(y, yhat);
    CHECK(!r.r2);
    bool named = false;
    for (const auto& d : r.degeneracies)
        if (d.find("r2") != std::string::npos &&
            d.find("y constant") != std::string::npos)
            named = true;
    CHECK(named);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(compute_metrics(to_vec({1.0}), to_vec({1.0})), DataError);
    CHECK_THROWS_AS(compute_metrics(to_vec({1, 2}), to_vec({1, 2, 3})),
                    DataError);
    CHECK_THROWS_AS(compute_metrics(to_vec({1, std::nan("")}), to_vec({1, 2})),
                    DataError);
}

TEST_CASE("100 seeded random pairs match the brute-force oracle within 1e-9") {
    Rng rng(20260809);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + rng.below(60);
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(-2.0, 2.0);
            yhat[i] = rng.uniform(-2.0, 2.0);
        }
        // Inject ties now and then to exercise average ranks.
        if (trial % 7 == 0 && n > 3) {
            y[1] = y[0];
            yhat[2] = yhat[3];
        }
        const OracleMetrics expected = oracle_metrics(y, yhat);
        const MetricsReport got = compute_metrics(to_vec(y), to_vec(yhat));
        CHECK(got.mse == doctest::Approx(expected.mse).epsilon(1e-9));
        CHECK(got.rmse == doctest::Approx(expected.rmse).epsilon(1e-9));
        CHECK(got.mae == doctest::Approx(expected.mae).epsilon(1e-9));
        CHECK(*got.r2 == doctest::Approx(expected.r2).epsilon(1e-9));
        CHECK(*got.plcc == doctest::Approx(expected.plcc).epsilon(1e-9));
        CHECK(*got.srcc == doctest::Approx(expected.srcc).epsilon(1e-9));
        CHECK(got.rmse >= got.mae);
        CHECK(got.rmse == std::sqrt(got.mse));
    }
}

TEST_CASE("property: plcc and srcc invariant under positive affine maps") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.below(40);
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(0.0, 1.0);
            yhat[i] = rng.uniform(0.0, 1.0);
        }
        const double a = rng.uniform(0.1, 5.0);
        const double b = rng.uniform(-3.0, 3.0);
        std::vector<double> mapped(n);
        for (std::size_t i = 0; i < n; ++i) mapped[i] = a * yhat[i] + b;
        const auto r1 = compute_metrics(to_vec(y), to_vec(yhat));
        const auto r2 = compute_metrics(to_vec(y), to_vec(mapped));
        CHECK(*r1.plcc == doctest::Approx(*r2.plcc).epsilon(1e-12));
        CHECK(*r1.srcc == doctest::Approx(*r2.srcc).epsilon(1e-12));
    }
}

TEST_CASE("property: srcc invariant under strictly monotone maps of yhat") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.below(40);
        std::vector<double> y(n), yhat(n), mapped(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(0.0, 1.0);
            yhat[i] = rng.uniform(-1.0, 1.0);
            mapped[i] = std::exp(3.0 * yhat[i]) + yhat[i];  // strictly increasing
        }
        const auto r1 = compute_metrics(to_vec(y), to_vec(yhat));
        const auto r2 = compute_metrics(to_vec(y), to_vec(mapped));
        CHECK(*r1.srcc == doctest::Approx(*r2.srcc).epsilon(1e-12));
    }
}

TEST_CASE("property: rmse >= mae on random reports") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.normal(0.5, 0.5);
            yhat[i] = rng.normal(0.5, 0.5);
        }
        const auto r = compute_metrics(to_vec(y), to_vec(yhat));
        CHECK(r.rmse >= r.mae);
    }
}

TEST_CASE("average ranks handle ties like the naive oracle") {
    const auto v = to_vec({3.0, 1.0, 3.0, 2.0, 3.0});
    const Eigen::VectorXd ranks = average_ranks(v);
    CHECK(ranks[1] == 1.0);
    CHECK(ranks[3] == 2.0);
    CHECK(ranks[0] == 4.0);  // three-way tie over ranks 3,4,5
    CHECK(ranks[2] == 4.0);
    CHECK(ranks[4] == 4.0);
}
