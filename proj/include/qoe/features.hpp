#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qoe/session.hpp"

namespace qoe {

inline constexpr int kFeatureCount = 10;

/// Exponent constant of the visual-quality stand-in; the default maps
/// 5000 kbps at full device resolution above 4.9 on the 1-5 scale.
inline constexpr double kDefaultVqiK = 0.75;

/// The ten QoE features of a session, in canonical column order f1..f10.
struct FeatureVector {
    double f1_initial_loading_s = 0.0;
    double f2_stall_count = 0.0;
    double f3_total_stall_s = 0.0;
    double f4_stall_freq_per_s = 0.0;
    double f5_stall_ratio = 0.0;
    double f6_last_stall_gap_s = 0.0;
    double f7_mean_bitrate_kbps = 0.0;
    double f8_framerate_fps = 0.0;
    double f9_median_quality_layer = 0.0;
    double f10_visual_quality_index = 1.0;  // 1-5 scale

    Eigen::Matrix<double, kFeatureCount, 1> to_vector() const;
    static FeatureVector from_vector(
        const Eigen::Ref<const Eigen::VectorXd>& v);
};

/// Column header names "f1".."f10".
const std::array<std::string, kFeatureCount>& feature_names();

/// Median with the lower of the two middle values on even counts; the tie
/// rule pinned for the quality-layer feature.
double median_lower(std::vector<double> values);

/// Visual-quality index on the 1-5 scale: duration-weighted mean over
/// segments of 1 + 4*(1 - exp(-k * bitrate_kbps * min(1, r) / 1000)) where
/// r is the segment-to-device pixel ratio. Monotone non-decreasing in
/// bitrate and resolution ratio, clamped to [1,5].
double visual_quality_index(const StreamingSession& s, double k = kDefaultVqiK);

/// Computes the ten features of a valid session. Pure: equal sessions give
/// bitwise-equal vectors. vqi_k configures the visual-quality constant.
FeatureVector extract_features(const StreamingSession& s,
                               double vqi_k = kDefaultVqiK);

/// Stacks extract_features over sessions into an n x 10 matrix.
Eigen::MatrixXd feature_matrix(const std::vector<LabeledSession>& sessions,
                               double vqi_k = kDefaultVqiK);

/// Labels of a fully labeled batch; throws DataError on an unlabeled row.
Eigen::VectorXd label_vector(const std::vector<LabeledSession>& sessions);

/// Per-column standardization statistics fitted on training data.
struct Scaler {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;                // population standard deviation
    std::vector<bool> degenerate;         // sigma == 0 columns

    /// (x - mu) / sigma columnwise; degenerate columns map to 0.
    Eigen::MatrixXd transform(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

/// Column means and population standard deviations of X; n >= 2 required.
Scaler fit_scaler(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Feature matrix as CSV with the fixed f1..f10 header.
std::string feature_matrix_csv(const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace qoe
