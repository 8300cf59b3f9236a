#include "qoe/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "qoe/features.hpp"

namespace qoe {

ModelSpec ExperimentConfig::spec_for(ModelKind kind) const {
    ModelSpec spec = default_spec(kind, seed);
    const auto it = overrides.find(kind);
    if (it != overrides.end())
        for (const auto& [name, value] : it->second)
            spec.hyperparams[name] = value;
    return spec;
}

namespace {

struct SplitData {
    Eigen::MatrixXd train_x;
    Eigen::VectorXd train_y;
    Eigen::MatrixXd test_x;
    Eigen::VectorXd test_y;
    SplitPlan plan;
};

SplitData make_split(const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ExperimentConfig& cfg) {
    SplitData out;
    out.plan = train_test_split(static_cast<std::size_t>(X.rows()),
                                cfg.split_ratio, cfg.seed);
    const auto gather = [&X, &y](const std::vector<std::size_t>& rows,
                                 Eigen::MatrixXd& gx, Eigen::VectorXd& gy) {
        gx.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
        gy.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            gx.row(static_cast<Eigen::Index>(i)) =
                X.row(static_cast<Eigen::Index>(rows[i]));
            gy[static_cast<Eigen::Index>(i)] =
                y[static_cast<Eigen::Index>(rows[i])];
        }
    };
    gather(out.plan.train_indices, out.train_x, out.train_y);
    gather(out.plan.test_indices, out.test_x, out.test_y);
    return out;
}

const char* kind_label(ModelKind kind) {
    switch (kind) {
        case ModelKind::svr: return "SVR";
        case ModelKind::random_forest: return "RF";
        case ModelKind::decision_tree: return "DT";
        case ModelKind::gradient_boosting: return "GB";
        case ModelKind::knn: return "K-NN";
        case ModelKind::mlp: return "NN";
        case ModelKind::sgd: return "SGD";
    }
    return "?";
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

std::vector<LearningCurvePoint> run_learning_curve(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, const ExperimentConfig& cfg) {
    const SplitData split = make_split(X, y, cfg);

    std::vector<LearningCurvePoint> points;
    for (const ModelKind kind : cfg.kinds) {
        const ModelSpec spec = cfg.spec_for(kind);
        for (int step = 1; step <= 10; ++step) {
            const double fraction = 0.1 * step;
            const auto m = static_cast<Eigen::Index>(std::floor(
                fraction * static_cast<double>(split.train_x.rows())));
            if (m < 2)
                throw DataError("train fraction " + fmt3(fraction) +
                                " leaves fewer than 2 samples");
            const Eigen::MatrixXd subset_x = split.train_x.topRows(m);
            const Eigen::VectorXd subset_y = split.train_y.head(m);
            const Scaler scaler = fit_scaler(subset_x);
            const TrainedModel model =
                fit_model(spec, scaler.transform(subset_x), subset_y);
            const Eigen::VectorXd pred =
                predict(model, scaler.transform(split.test_x));
            const MetricsReport report = compute_metrics(split.test_y, pred);
            points.push_back({fraction, kind, report.mse});
        }
    }
    return points;
}

std::string learning_curve_csv(const std::vector<LearningCurvePoint>& points) {
    std::string out = "model,train_fraction,mse\n";
    for (const auto& p : points)
        out += std::string(to_string(p.kind)) + "," + fmt(p.train_fraction) +
               "," + fmt(p.mse) + "\n";
    return out;
}

std::vector<TimingCell> run_timing_benchmark(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, const ExperimentConfig& cfg,
    int runs, std::vector<Eigen::Index> test_sizes) {
    if (runs < 1) throw DataError("timing benchmark needs runs >= 1");
    const SplitData split = make_split(X, y, cfg);
    if (split.test_x.rows() == 0) throw DataError("empty test set");

    if (test_sizes.empty()) {
        for (const Eigen::Index s : {Eigen::Index{10}, Eigen::Index{20},
                                     Eigen::Index{40}, Eigen::Index{80}})
            if (s < split.test_x.rows()) test_sizes.push_back(s);
        test_sizes.push_back(split.test_x.rows());
    }
    for (const Eigen::Index s : test_sizes)
        if (s < 1 || s > split.test_x.rows())
            throw DataError("timing test size " + std::to_string(s) +
                            " out of range");

    const Scaler scaler = fit_scaler(split.train_x);
    const Eigen::MatrixXd train_std = scaler.transform(split.train_x);
    const Eigen::MatrixXd test_std = scaler.transform(split.test_x);

    std::vector<TimingCell> cells;
    for (const ModelKind kind : cfg.kinds) {
        const TrainedModel model =
            fit_model(cfg.spec_for(kind), train_std, split.train_y);
        for (const Eigen::Index size : test_sizes) {
            const Eigen::MatrixXd probe = test_std.topRows(size);
            for (int w = 0; w < kTimingWarmupRuns; ++w) {
                volatile double sink = predict(model, probe).sum();
                (void)sink;
            }
            std::vector<double> samples;
            samples.reserve(static_cast<std::size_t>(runs));
            for (int r = 0; r < runs; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                volatile double sink = predict(model, probe).sum();
                (void)sink;
                const auto t1 = std::chrono::steady_clock::now();
                samples.push_back(
                    std::chrono::duration<double>(t1 - t0).count());
            }
            double mean = 0.0;
            for (const double s : samples) mean += s;
            mean /= static_cast<double>(runs);
            double var = 0.0;
            for (const double s : samples) var += (s - mean) * (s - mean);
            var /= static_cast<double>(runs);
            cells.push_back({kind, size, runs, mean, std::sqrt(var)});
        }
    }
    return cells;
}

std::string timing_csv(const std::vector<TimingCell>& cells) {
    std::string out = "model,test_rows,runs,mean_s,stddev_s\n";
    for (const auto& c : cells)
        out += std::string(to_string(c.kind)) + "," +
               std::to_string(c.test_rows) + "," + std::to_string(c.runs) +
               "," + fmt(c.mean_s) + "," + fmt(c.stddev_s) + "\n";
    return out;
}

std::vector<ModelKind> timing_order(const std::vector<TimingCell>& cells) {
    Eigen::Index largest = 0;
    for (const auto& c : cells) largest = std::max(largest, c.test_rows);
    std::vector<std::pair<double, ModelKind>> at_largest;
    for (const auto& c : cells)
        if (c.test_rows == largest) at_largest.emplace_back(c.mean_s, c.kind);
    std::sort(at_largest.begin(), at_largest.end());
    std::vector<ModelKind> order;
    for (const auto& [mean, kind] : at_largest) order.push_back(kind);
    return order;
}

ComparisonResult run_comparison(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                const ExperimentConfig& cfg) {
    const SplitData split = make_split(X, y, cfg);
    const Scaler scaler = fit_scaler(split.train_x);
    const Eigen::MatrixXd train_std = scaler.transform(split.train_x);
    const Eigen::MatrixXd test_std = scaler.transform(split.test_x);

    std::vector<std::vector<std::size_t>> folds;
    {
        std::vector<std::size_t> train_rows(split.plan.train_indices.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) train_rows[i] = i;
        folds = kfold_split(train_rows, cfg.cv_folds, cfg.seed);
    }

    ComparisonResult result;
    for (const ModelKind kind : cfg.kinds) {
        ComparisonCell cell;
        cell.kind = kind;
        try {
            const ModelSpec spec = cfg.spec_for(kind);
            const TrainedModel model = fit_model(spec, train_std, split.train_y);
            cell.converged = model.converged;
            const Eigen::VectorXd pred = predict(model, test_std);
            cell.metrics = compute_metrics(split.test_y, pred);
            const CvResult cv =
                cross_validate(spec, split.train_x, split.train_y, folds);
            cell.cv_mean_r2 = cv.mean_r2;
        } catch (const Error& e) {
            cell.error = e.what();
        }
        result.cells.push_back(std::move(cell));
    }
    return result;
}

namespace {

struct MetricRow {
    const char* name;
    bool lower_is_better;
    std::optional<double> (*get)(const MetricsReport&);
};

const MetricRow kRows[] = {
    {"RMSE", true, [](const MetricsReport& m) { return std::optional(m.rmse); }},
    {"MAE", true, [](const MetricsReport& m) { return std::optional(m.mae); }},
    {"R2", false, [](const MetricsReport& m) { return m.r2; }},
    {"PLCC", false, [](const MetricsReport& m) { return m.plcc; }},
    {"SRCC", false, [](const MetricsReport& m) { return m.srcc; }},
};

std::optional<std::size_t> best_column(const ComparisonResult& result,
                                       const MetricRow& row) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        if (!result.cells[c].metrics) continue;
        const auto v = row.get(*result.cells[c].metrics);
        if (!v) continue;
        if (!best) {
            best = c;
            continue;
        }
        const auto bv = row.get(*result.cells[*best].metrics);
        if (row.lower_is_better ? *v < *bv : *v > *bv) best = c;
    }
    return best;
}

}  // namespace

std::string comparison_csv(const ComparisonResult& result) {
    std::string out = "metric";
    for (const auto& cell : result.cells)
        out += std::string(",") + kind_label(cell.kind);
    out += ",best\n";
    for (const auto& row : kRows) {
        out += row.name;
        for (const auto& cell : result.cells) {
            out += ',';
            if (!cell.metrics) {
                out += "ERR";
                continue;
            }
            const auto v = row.get(*cell.metrics);
            out += v ? fmt(*v) : "ERR";
        }
        const auto best = best_column(result, row);
        out += ',';
        out += best ? kind_label(result.cells[*best].kind) : "none";
        out += '\n';
    }
    return out;
}

std::string comparison_markdown(const ComparisonResult& result) {
    std::string out = "| Metrics |";
    for (const auto& cell : result.cells)
        out += std::string(" ") + kind_label(cell.kind) + " |";
    out += "\n|---|";
    for (std::size_t c = 0; c < result.cells.size(); ++c) out += "---|";
    out += "\n";
    for (const auto& row : kRows) {
        const auto best = best_column(result, row);
        out += std::string("| ") + row.name + " |";
        for (std::size_t c = 0; c < result.cells.size(); ++c) {
            const auto& cell = result.cells[c];
            std::string text = "ERR";
            if (cell.metrics) {
                const auto v = row.get(*cell.metrics);
                if (v) text = fmt3(*v);
            }
            if (best && *best == c) text = "**" + text + "**";
            out += " " + text + " |";
        }
        out += "\n";
    }
    return out;
}

}  // namespace qoe
