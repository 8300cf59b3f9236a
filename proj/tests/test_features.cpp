#include <doctest.h>

#include <cmath>

#include "qoe/features.hpp"
#include "qoe/rng.hpp"

using namespace qoe;

namespace {

StreamingSession hand_session() {
    // 13 x 1 s segments, load 1.0 s, stalls at media 2.0 (1.5 s) and 8.0 (0.5 s)
    StreamingSession s;
    s.session_id = "hand";
    s.initial_loading_time_s = 1.0;
    s.framerate_fps = 30.0;
    s.device_width_px = 1920;
    s.device_height_px = 1080;
    for (int i = 0; i < 13; ++i)
        s.segments.push_back({i, 1.0, 1500.0, 1280, 720, 2});
    s.stalls = {{2.0, 1.5}, {8.0, 0.5}};
    return s;
}

StreamingSession no_stall_session(int segments, double bitrate = 2000.0) {
    StreamingSession s;
    s.session_id = "clean";
    s.initial_loading_time_s = 0.4;
    s.framerate_fps = 24.0;
    s.device_width_px = 1920;
    s.device_height_px = 1080;
    for (int i = 0; i < segments; ++i)
        s.segments.push_back({i, 1.0, bitrate, 1920, 1080, 3});
    return s;
}

}  // namespace

TEST_CASE("no-stall session zeroes the stall features") {
    const FeatureVector f = extract_features(no_stall_session(10));
    CHECK(f.f2_stall_count == 0.0);
    CHECK(f.f3_total_stall_s == 0.0);
    CHECK(f.f4_stall_freq_per_s == 0.0);
    CHECK(f.f5_stall_ratio == 0.0);
    CHECK(f.f6_last_stall_gap_s == 10.0);
}

TEST_CASE("hand-computed features of the two-stall session") {
    const FeatureVector f = extract_features(hand_session());
    CHECK(f.f1_initial_loading_s == 1.0);
    CHECK(f.f2_stall_count == 2.0);
    CHECK(f.f3_total_stall_s == 2.0);
    CHECK(f.f4_stall_freq_per_s == doctest::Approx(2.0 / 13.0).epsilon(1e-12));
    CHECK(f.f5_stall_ratio == doctest::Approx(2.0 / 13.0).epsilon(1e-12));
    CHECK(f.f6_last_stall_gap_s == 5.0);
    CHECK(f.f8_framerate_fps == 30.0);
    CHECK(f.f9_median_quality_layer == 2.0);
}

TEST_CASE("duration-weighted mean bitrate") {
    StreamingSession s = no_stall_session(1, 1000.0);
    s.segments[0].duration_s = 1.0;
    s.segments.push_back({1, 3.0, 3000.0, 1920, 1080, 3});
    const FeatureVector f = extract_features(s);
    CHECK(f.f7_mean_bitrate_kbps == doctest::Approx(2500.0).epsilon(1e-12));
}

TEST_CASE("median quality layer uses the lower middle on even counts") {
    StreamingSession s = no_stall_session(4);
    s.segments[0].quality_layer = 0;
    s.segments[1].quality_layer = 1;
    s.segments[2].quality_layer = 2;
    s.segments[3].quality_layer = 4;
    const FeatureVector f = extract_features(s);
    CHECK(f.f9_median_quality_layer == 1.0);
}

TEST_CASE("vqi: bitrate to zero approaches the lower anchor") {
    StreamingSession s = no_stall_session(5, 1e-9);
    CHECK(visual_quality_index(s) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("vqi: 5000 kbps at full device resolution clears 4.9 with default k") {
    const StreamingSession s = no_stall_session(1, 5000.0);
    // evaluate the stated formula: 1 + 4*(1 - exp(-0.75 * 5000/1000))
    const double expected = 1.0 + 4.0 * (1.0 - std::exp(-0.75 * 5.0));
    const double got = visual_quality_index(s);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got >= 4.9);
}

TEST_CASE("vqi: uniformly higher bitrates never lower the index") {
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        StreamingSession s = no_stall_session(1 + rng.below(12), 0.0);
        for (auto& seg : s.segments) {
            seg.bitrate_kbps = rng.uniform(100.0, 6000.0);
            seg.width_px = 640 + static_cast<int>(rng.below(1920));
            seg.height_px = 360 + static_cast<int>(rng.below(1080));
        }
        StreamingSession boosted = s;
        const double factor = rng.uniform(1.0, 2.5);
        for (auto& seg : boosted.segments) seg.bitrate_kbps *= factor;
        CHECK(visual_quality_index(boosted) >= visual_quality_index(s));
    }
}

TEST_CASE("extract_features is pure: equal sessions, bitwise-equal vectors") {
    const StreamingSession a = hand_session();
    const StreamingSession b = hand_session();
    CHECK(extract_features(a).to_vector() == extract_features(b).to_vector());
}

TEST_CASE("property: f4/f5 scale back to exact counts and durations") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        StreamingSession s = no_stall_session(2 + rng.below(20));
        const double media = s.media_duration_s();
        double t = 0.3;
        while (t < media - 1.0 && rng.uniform() < 0.7) {
            const double d = rng.uniform(0.1, 0.9);
            s.stalls.push_back({t, d});
            t += d + rng.uniform(0.2, 1.5);
        }
        const FeatureVector f = extract_features(s);
        CHECK(f.f5_stall_ratio * media ==
              doctest::Approx(f.f3_total_stall_s).epsilon(1e-12));
        CHECK(f.f4_stall_freq_per_s * media ==
              doctest::Approx(f.f2_stall_count).epsilon(1e-12));
        CHECK(f.f6_last_stall_gap_s <= media);
        if (s.stalls.empty())
            CHECK(f.f6_last_stall_gap_s == media);
        else
            CHECK(f.f6_last_stall_gap_s < media);
    }
}

TEST_CASE("scaler: two-point column") {
    Eigen::MatrixXd x(2, 1);
    x << 0.0, 2.0;
    const Scaler sc = fit_scaler(x);
    CHECK(sc.mu[0] == 1.0);
    CHECK(sc.sigma[0] == 1.0);
    CHECK(!sc.degenerate[0]);
}

TEST_CASE("scaler: population sigma of {1,2,3}") {
    Eigen::MatrixXd x(3, 1);
    x << 1.0, 2.0, 3.0;
    const Scaler sc = fit_scaler(x);
    CHECK(sc.mu[0] == 2.0);
    CHECK(sc.sigma[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("scaler: constant column flags degeneracy and maps to zero") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 7, 2, 7, 3, 7, 4, 7;
    const Scaler sc = fit_scaler(x);
    CHECK(!sc.degenerate[0]);
    CHECK(sc.degenerate[1]);
    const Eigen::MatrixXd out = sc.transform(x);
    CHECK((out.col(1).array() == 0.0).all());
}

TEST_CASE("scaler: fitting on one sample fails") {
    Eigen::MatrixXd x(1, 3);
    x.setZero();
    CHECK_THROWS_AS(fit_scaler(x), DataError);
}

TEST_CASE("scaler: column-count mismatch on transform") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    const Scaler sc = fit_scaler(x);
    Eigen::MatrixXd bad(2, 3);
    bad.setZero();
    CHECK_THROWS_AS(sc.transform(bad), DimensionError);
}

TEST_CASE("standardized training matrix has mean 0 and sigma 1") {
    Rng rng(5);
    Eigen::MatrixXd x(40, 6);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            x(r, c) = rng.uniform(-3.0, 9.0) * (static_cast<double>(c) + 1.0);
    const Scaler sc = fit_scaler(x);
    const Eigen::MatrixXd z = sc.transform(x);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        CHECK(std::abs(z.col(c).mean()) < 1e-9);
        const double sigma = std::sqrt(z.col(c).squaredNorm() /
                                       static_cast<double>(z.rows()) -
                                       z.col(c).mean() * z.col(c).mean());
        CHECK(std::abs(sigma - 1.0) < 1e-9);
    }
    // x == mu maps to the zero vector
    Eigen::MatrixXd mu_row(1, 6);
    mu_row.row(0) = sc.mu.transpose();
    CHECK(sc.transform(mu_row).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("feature csv export carries the fixed header") {
    Eigen::MatrixXd x(1, kFeatureCount);
    for (int c = 0; c < kFeatureCount; ++c) x(0, c) = c;
    const std::string csv = feature_matrix_csv(x);
    CHECK(csv.rfind("f1,f2,f3,f4,f5,f6,f7,f8,f9,f10\n", 0) == 0);
}
