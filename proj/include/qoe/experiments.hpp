#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qoe/cv.hpp"
#include "qoe/metrics.hpp"
#include "qoe/model.hpp"
#include "qoe/split.hpp"

namespace qoe {

/// Shared protocol knobs: 80/20 split, 5-fold CV, all seven kinds.
struct ExperimentConfig {
    double split_ratio = 0.8;
    std::size_t cv_folds = 5;
    std::vector<ModelKind> kinds = all_model_kinds();
    std::uint64_t seed = 42;
    std::map<ModelKind, Hyperparams> overrides;  // per-kind spec overrides

    ModelSpec spec_for(ModelKind kind) const;
};

struct LearningCurvePoint {
    double train_fraction = 0.0;
    ModelKind kind = ModelKind::decision_tree;
    double mse = 0.0;
};

/// For each kind and each fraction in {0.1,...,1.0}: fit on the first
/// floor(f * |train|) rows of the seeded training order and evaluate MSE on
/// the fixed test split. The scaler refits on each subset.
std::vector<LearningCurvePoint> run_learning_curve(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, const ExperimentConfig& cfg);

std::string learning_curve_csv(const std::vector<LearningCurvePoint>& points);

struct TimingCell {
    ModelKind kind = ModelKind::decision_tree;
    Eigen::Index test_rows = 0;
    int runs = 0;
    double mean_s = 0.0;
    double stddev_s = 0.0;
};

inline constexpr int kTimingWarmupRuns = 3;  // excluded from the statistics

/// Wall time of predict() per model per test size: `runs` timed calls per
/// cell after kTimingWarmupRuns warm-ups, on the monotonic clock.
std::vector<TimingCell> run_timing_benchmark(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, const ExperimentConfig& cfg,
    int runs = 100, std::vector<Eigen::Index> test_sizes = {});

std::string timing_csv(const std::vector<TimingCell>& cells);
/// Kinds ordered fastest-to-slowest at the largest test size.
std::vector<ModelKind> timing_order(const std::vector<TimingCell>& cells);

struct ComparisonCell {
    ModelKind kind = ModelKind::decision_tree;
    std::optional<MetricsReport> metrics;
    std::optional<double> cv_mean_r2;
    std::string error;
    bool converged = true;
};

struct ComparisonResult {
    std::vector<ComparisonCell> cells;  // summary-table column order
};

/// Trains every kind on the train split with its spec hyperparameters,
/// evaluates the six metrics on the test split and 5-fold CV R^2 on the
/// train split. Per-cell failures become error markers, not exceptions.
ComparisonResult run_comparison(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const ExperimentConfig& cfg);

/// Summary table (5 metric rows x 7 model columns), best per row flagged.
std::string comparison_csv(const ComparisonResult& result);
std::string comparison_markdown(const ComparisonResult& result);

}  // namespace qoe
