#include "qoe/cv.hpp"

#include <cstdio>

#include "qoe/metrics.hpp"

namespace qoe {

CvResult cross_validate(const ModelSpec& spec,
                        const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y,
                        const std::vector<std::vector<std::size_t>>& folds) {
    if (folds.empty()) throw DataError("cross_validate requires folds");

    CvResult result;
    result.fold_scores.resize(folds.size());

    for (std::size_t f = 0; f < folds.size(); ++f) {
        FoldScore& score = result.fold_scores[f];
        try {
            std::vector<std::size_t> train_rows;
            for (std::size_t g = 0; g < folds.size(); ++g)
                if (g != f)
                    train_rows.insert(train_rows.end(), folds[g].begin(),
                                      folds[g].end());
            const auto& val_rows = folds[f];

            Eigen::MatrixXd train_x(static_cast<Eigen::Index>(train_rows.size()),
                                    X.cols());
            Eigen::VectorXd train_y(static_cast<Eigen::Index>(train_rows.size()));
            for (std::size_t i = 0; i < train_rows.size(); ++i) {
                train_x.row(static_cast<Eigen::Index>(i)) =
                    X.row(static_cast<Eigen::Index>(train_rows[i]));
                train_y[static_cast<Eigen::Index>(i)] =
                    y[static_cast<Eigen::Index>(train_rows[i])];
            }
            Eigen::MatrixXd val_x(static_cast<Eigen::Index>(val_rows.size()),
                                  X.cols());
            Eigen::VectorXd val_y(static_cast<Eigen::Index>(val_rows.size()));
            for (std::size_t i = 0; i < val_rows.size(); ++i) {
                val_x.row(static_cast<Eigen::Index>(i)) =
                    X.row(static_cast<Eigen::Index>(val_rows[i]));
                val_y[static_cast<Eigen::Index>(i)] =
                    y[static_cast<Eigen::Index>(val_rows[i])];
            }

            score.scaler = fit_scaler(train_x);
            const TrainedModel model =
                fit_model(spec, score.scaler.transform(train_x), train_y);
            score.converged = model.converged;
            if (!model.converged) result.all_converged = false;

            const Eigen::VectorXd pred =
                predict(model, score.scaler.transform(val_x));
            const MetricsReport report = compute_metrics(val_y, pred);
            if (report.r2) {
                score.r2 = report.r2;
            } else {
                score.error = "fold " + std::to_string(f) + ": " +
                              report.degeneracies.front();
            }
        } catch (const Error& e) {
            score.error = "fold " + std::to_string(f) + ": " + e.what();
        }
    }

    double sum = 0.0;
    bool complete = true;
    for (const auto& s : result.fold_scores) {
        if (!s.r2) {
            complete = false;
            break;
        }
        sum += *s.r2;
    }
    if (complete)
        result.mean_r2 = sum / static_cast<double>(result.fold_scores.size());
    return result;
}

namespace {

std::vector<Hyperparams> expand_grid(const HyperparamGrid& grid) {
    std::vector<std::string> keys;
    for (const auto& [key, values] : grid) {
        if (values.empty())
            throw ConfigError("grid entry '" + key + "' has no values");
        keys.push_back(key);
    }
    std::vector<Hyperparams> out;
    std::vector<std::size_t> at(keys.size(), 0);
    while (true) {
        Hyperparams hp;
        for (std::size_t k = 0; k < keys.size(); ++k)
            hp[keys[k]] = grid.at(keys[k])[at[k]];
        out.push_back(std::move(hp));
        // Odometer: last key cycles fastest.
        std::size_t k = keys.size();
        while (k > 0) {
            --k;
            if (++at[k] < grid.at(keys[k]).size()) break;
            at[k] = 0;
            if (k == 0) return out;
        }
        if (keys.empty()) return out;
    }
}

}  // namespace

GridSearchResult grid_search(ModelKind kind, const HyperparamGrid& grid,
                             const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             const std::vector<std::vector<std::size_t>>& folds,
                             std::uint64_t seed) {
    if (grid.empty()) throw ConfigError("grid_search requires a non-empty grid");

    GridSearchResult result;
    const std::vector<Hyperparams> candidates = expand_grid(grid);

    std::optional<double> best_score;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        ModelSpec spec = default_spec(kind, seed);
        for (const auto& [name, value] : candidates[c])
            spec.hyperparams[name] = value;

        GridCandidate entry;
        entry.overrides = candidates[c];
        entry.cv = cross_validate(spec, X, y, folds);
        if (entry.cv.mean_r2 &&
            (!best_score || *entry.cv.mean_r2 > *best_score)) {
            best_score = entry.cv.mean_r2;
            result.best = spec;
            result.best_index = c;
        }
        result.table.push_back(std::move(entry));
    }

    if (!best_score) {
        std::string msg = "all grid candidates failed:";
        for (std::size_t c = 0; c < result.table.size(); ++c)
            for (const auto& fs : result.table[c].cv.fold_scores)
                if (!fs.error.empty())
                    msg += "\n  candidate " + std::to_string(c) + ": " + fs.error;
        throw DataError(msg);
    }
    return result;
}

std::string grid_search_csv(const GridSearchResult& result) {
    if (result.table.empty()) return "";
    std::string out;
    for (const auto& [name, value] : result.table.front().overrides)
        out += name + ",";
    const std::size_t k = result.table.front().cv.fold_scores.size();
    for (std::size_t f = 1; f <= k; ++f)
        out += "fold_" + std::to_string(f) + ",";
    out += "mean\n";

    char buf[64];
    auto append_num = [&out, &buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += buf;
    };
    for (const auto& entry : result.table) {
        for (const auto& [name, value] : entry.overrides) {
            append_num(value);
            out += ',';
        }
        for (const auto& fs : entry.cv.fold_scores) {
            if (fs.r2)
                append_num(*fs.r2);
            else
                out += "ERR";
            out += ',';
        }
        if (entry.cv.mean_r2)
            append_num(*entry.cv.mean_r2);
        else
            out += "ERR";
        out += '\n';
    }
    return out;
}

}  // namespace qoe
