#include "qoe/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qoe/error.hpp"

namespace qoe {

Eigen::Matrix<double, kFeatureCount, 1> FeatureVector::to_vector() const {
    Eigen::Matrix<double, kFeatureCount, 1> v;
    v << f1_initial_loading_s, f2_stall_count, f3_total_stall_s,
        f4_stall_freq_per_s, f5_stall_ratio, f6_last_stall_gap_s,
        f7_mean_bitrate_kbps, f8_framerate_fps, f9_median_quality_layer,
        f10_visual_quality_index;
    return v;
}

FeatureVector FeatureVector::from_vector(
    const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != kFeatureCount)
        throw DimensionError("feature vector must have 10 entries");
    FeatureVector f;
    f.f1_initial_loading_s = v[0];
    f.f2_stall_count = v[1];
    f.f3_total_stall_s = v[2];
    f.f4_stall_freq_per_s = v[3];
    f.f5_stall_ratio = v[4];
    f.f6_last_stall_gap_s = v[5];
    f.f7_mean_bitrate_kbps = v[6];
    f.f8_framerate_fps = v[7];
    f.f9_median_quality_layer = v[8];
    f.f10_visual_quality_index = v[9];
    return f;
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10"};
    return names;
}

double visual_quality_index(const StreamingSession& s, double k) {
    const double device_pixels =
        static_cast<double>(s.device_width_px) * s.device_height_px;
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& seg : s.segments) {
        const double seg_pixels = static_cast<double>(seg.width_px) * seg.height_px;
        const double ratio = std::min(1.0, seg_pixels / device_pixels);
        const double q =
            1.0 + 4.0 * (1.0 - std::exp(-k * seg.bitrate_kbps * ratio / 1000.0));
        weighted += q * seg.duration_s;
        total += seg.duration_s;
    }
    const double index = total > 0.0 ? weighted / total : 1.0;
    return std::clamp(index, 1.0, 5.0);
}

double median_lower(std::vector<double> values) {
    if (values.empty()) throw DataError("median of empty set");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

FeatureVector extract_features(const StreamingSession& s, double vqi_k) {
    FeatureVector f;
    const double media = s.media_duration_s();

    f.f1_initial_loading_s = s.initial_loading_time_s;
    f.f2_stall_count = static_cast<double>(s.stalls.size());

    double total_stall = 0.0;
    for (const auto& st : s.stalls) total_stall += st.duration_s;
    f.f3_total_stall_s = total_stall;
    f.f4_stall_freq_per_s = f.f2_stall_count / media;
    f.f5_stall_ratio = total_stall / media;
    f.f6_last_stall_gap_s =
        s.stalls.empty() ? media : media - s.stalls.back().start_media_time_s;

    double bit_seconds = 0.0;
    std::vector<double> layers;
    layers.reserve(s.segments.size());
    for (const auto& seg : s.segments) {
        bit_seconds += seg.bitrate_kbps * seg.duration_s;
        layers.push_back(static_cast<double>(seg.quality_layer));
    }
    f.f7_mean_bitrate_kbps = bit_seconds / media;
    f.f8_framerate_fps = s.framerate_fps;
    f.f9_median_quality_layer = median_lower(std::move(layers));
    f.f10_visual_quality_index = visual_quality_index(s, vqi_k);
    return f;
}

Eigen::MatrixXd feature_matrix(const std::vector<LabeledSession>& sessions,
                               double vqi_k) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(sessions.size()), kFeatureCount);
    for (std::size_t i = 0; i < sessions.size(); ++i)
        X.row(static_cast<Eigen::Index>(i)) =
            extract_features(sessions[i].session, vqi_k).to_vector().transpose();
    return X;
}

Eigen::VectorXd label_vector(const std::vector<LabeledSession>& sessions) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(sessions.size()));
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        if (!sessions[i].mos_normalized)
            throw DataError("session '" + sessions[i].session.session_id +
                            "' has no label");
        y[static_cast<Eigen::Index>(i)] = *sessions[i].mos_normalized;
    }
    return y;
}

Scaler fit_scaler(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() < 2) throw DataError("fit_scaler requires at least 2 samples");
    Scaler sc;
    sc.mu = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - sc.mu.transpose();
    sc.sigma = (centered.array().square().colwise().sum() /
                static_cast<double>(X.rows()))
                   .sqrt()
                   .matrix()
                   .transpose();
    sc.degenerate.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        sc.degenerate[static_cast<std::size_t>(c)] = (sc.sigma[c] == 0.0);
    return sc;
}

Eigen::MatrixXd Scaler::transform(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != mu.size())
        throw DimensionError("scaler fitted on " + std::to_string(mu.size()) +
                             " columns, input has " + std::to_string(X.cols()));
    Eigen::MatrixXd out = X.rowwise() - mu.transpose();
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        if (degenerate[static_cast<std::size_t>(c)])
            out.col(c).setZero();
        else
            out.col(c) /= sigma[c];
    }
    return out;
}

std::string feature_matrix_csv(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    std::string out;
    const auto& names = feature_names();
    for (int c = 0; c < kFeatureCount; ++c) {
        out += names[static_cast<std::size_t>(c)];
        out += (c + 1 < kFeatureCount) ? ',' : '\n';
    }
    char buf[64];
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", X(r, c));
            out += buf;
            out += (c + 1 < X.cols()) ? ',' : '\n';
        }
    }
    return out;
}

}  // namespace qoe
