// Command-line front end for the QoE toolkit: ingestion, feature
// extraction, training, evaluation, experiments, synthetic data generation
// and the closed-loop network-management simulation.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 convergence-flagged results.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qoe/config.hpp"
#include "qoe/cv.hpp"
#include "qoe/experiments.hpp"
#include "qoe/features.hpp"
#include "qoe/metrics.hpp"
#include "qoe/model.hpp"
#include "qoe/pipeline.hpp"
#include "qoe/session.hpp"
#include "qoe/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qoe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConvergence = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
}

json scaler_to_json(const Scaler& scaler) {
    json obj;
    obj["mu"] = std::vector<double>(scaler.mu.data(),
                                    scaler.mu.data() + scaler.mu.size());
    obj["sigma"] = std::vector<double>(
        scaler.sigma.data(), scaler.sigma.data() + scaler.sigma.size());
    obj["degenerate"] = scaler.degenerate;
    return obj;
}

Scaler scaler_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("bad scaler file: ") + e.what());
    }
    Scaler scaler;
    const auto mu = obj.at("mu").get<std::vector<double>>();
    const auto sigma = obj.at("sigma").get<std::vector<double>>();
    scaler.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(),
                                                  static_cast<long>(mu.size()));
    scaler.sigma = Eigen::Map<const Eigen::VectorXd>(
        sigma.data(), static_cast<long>(sigma.size()));
    scaler.degenerate = obj.at("degenerate").get<std::vector<bool>>();
    return scaler;
}

struct Dataset {
    std::vector<LabeledSession> sessions;
    Eigen::MatrixXd features;
};

Dataset load_dataset(const std::string& path, double vqi_k) {
    Dataset d;
    d.sessions = parse_session_log(read_file(path));
    if (d.sessions.empty()) throw DataError("no sessions in '" + path + "'");
    d.features = feature_matrix(d.sessions, vqi_k);
    return d;
}

ModelKind parse_kind(const std::string& name) {
    const auto kind = model_kind_from_string(name);
    if (!kind)
        throw DataError("unknown model kind '" + name +
                        "' (svr, rf, dt, gb, knn, mlp, sgd)");
    return *kind;
}

Hyperparams parse_hyper_overrides(const std::vector<std::string>& pairs) {
    Hyperparams hp;
    for (const auto& pair : pairs) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw DataError("hyperparameter override '" + pair +
                            "' is not name=value");
        hp[pair.substr(0, eq)] = std::stod(pair.substr(eq + 1));
    }
    return hp;
}

std::string metrics_json(const MetricsReport& m) {
    json obj;
    obj["mse"] = m.mse;
    obj["rmse"] = m.rmse;
    obj["mae"] = m.mae;
    if (m.r2) obj["r2"] = *m.r2;
    if (m.plcc) obj["plcc"] = *m.plcc;
    if (m.srcc) obj["srcc"] = *m.srcc;
    if (!m.degeneracies.empty()) obj["degeneracies"] = m.degeneracies;
    return obj.dump(2);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QoE prediction toolkit for HTTP adaptive streaming"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string config_path;
    std::string out_dir = "out";
    app.add_option("--seed", seed, "global RNG seed");
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");

    auto* ingest = app.add_subcommand("ingest", "validate a session log");
    std::string ingest_path;
    ingest->add_option("log", ingest_path, "JSON-lines session log")->required();

    auto* import_csv =
        app.add_subcommand("import-csv", "import a subjective-database CSV");
    std::string csv_path, mapping_path;
    double scale_max = 100.0;
    import_csv->add_option("csv", csv_path, "CSV export")->required();
    import_csv
        ->add_option("--mapping", mapping_path,
                     "JSON object {field: column_name}")
        ->required();
    import_csv->add_option("--scale-max", scale_max, "raw MOS scale maximum");

    auto* extract =
        app.add_subcommand("extract-features", "session log to feature CSV");
    std::string extract_path;
    extract->add_option("log", extract_path, "JSON-lines session log")
        ->required();

    auto* train = app.add_subcommand("train", "fit one model on a labeled log");
    std::string train_model_name, train_data;
    std::vector<std::string> train_hyper;
    train->add_option("--model", train_model_name, "svr|rf|dt|gb|knn|mlp|sgd")
        ->required();
    train->add_option("--data", train_data, "labeled JSON-lines log")
        ->required();
    train->add_option("--hyper", train_hyper,
                      "hyperparameter override name=value (repeatable)");

    auto* predict_cmd = app.add_subcommand("predict", "predict QoE for a log");
    std::string predict_model, predict_scaler, predict_data;
    predict_cmd->add_option("--model", predict_model, "model file")->required();
    predict_cmd->add_option("--scaler", predict_scaler, "scaler file")
        ->required();
    predict_cmd->add_option("--data", predict_data, "JSON-lines log")
        ->required();

    auto* evaluate = app.add_subcommand("evaluate", "metrics on a labeled log");
    std::string eval_model, eval_scaler, eval_data;
    evaluate->add_option("--model", eval_model, "model file")->required();
    evaluate->add_option("--scaler", eval_scaler, "scaler file")->required();
    evaluate->add_option("--data", eval_data, "labeled JSON-lines log")
        ->required();

    auto* grid_cmd =
        app.add_subcommand("grid-search", "exhaustive CV search over a grid");
    std::string grid_model, grid_file, grid_data;
    std::size_t grid_folds = 5;
    grid_cmd->add_option("--model", grid_model, "model kind")->required();
    grid_cmd
        ->add_option("--grid", grid_file,
                     "JSON object {hyperparam: [values...]}")
        ->required();
    grid_cmd->add_option("--data", grid_data, "labeled JSON-lines log")
        ->required();
    grid_cmd->add_option("--folds", grid_folds, "CV folds");

    auto* curve_cmd =
        app.add_subcommand("learning-curve", "MSE vs training-set size");
    std::string curve_data;
    curve_cmd->add_option("--data", curve_data, "labeled JSON-lines log")
        ->required();

    auto* bench_cmd =
        app.add_subcommand("bench-time", "predict wall-time benchmark");
    std::string bench_data;
    int bench_runs = 100;
    bench_cmd->add_option("--data", bench_data, "labeled JSON-lines log")
        ->required();
    bench_cmd->add_option("--runs", bench_runs, "timed runs per cell");

    auto* compare_cmd =
        app.add_subcommand("compare", "summary table over all seven models");
    std::string compare_data;
    compare_cmd->add_option("--data", compare_data, "labeled JSON-lines log")
        ->required();

    auto* simulate_cmd =
        app.add_subcommand("simulate", "generate a labeled synthetic dataset");
    int per_cell = -1;
    bool emit_traces = false;
    simulate_cmd->add_option("--per-cell", per_cell,
                             "sessions per (policy, trace) cell");
    simulate_cmd->add_flag("--emit-traces", emit_traces,
                           "also write the trace library as JSON files");

    auto* pipeline_cmd = app.add_subcommand(
        "pipeline", "closed-loop monitoring/prediction/allocation run");
    std::string pl_model, pl_scaler, pl_scenario, pl_policy = "qoe";
    int pl_ifo = 1, pl_epochs = 8;
    double pl_freq = 0.0;
    pipeline_cmd->add_option("--model", pl_model, "model file")->required();
    pipeline_cmd->add_option("--scaler", pl_scaler, "scaler file")->required();
    pipeline_cmd->add_option("--scenario", pl_scenario, "scenario JSON file")
        ->required();
    pipeline_cmd->add_option("--ifo", pl_ifo, "information flow option (1|2)")
        ->check(CLI::IsMember({1, 2}));
    pipeline_cmd->add_option("--freq-hz", pl_freq, "monitoring frequency");
    pipeline_cmd->add_option("--epochs", pl_epochs, "allocation epochs");
    pipeline_cmd->add_option("--policy", pl_policy, "qoe|equal")
        ->check(CLI::IsMember({"qoe", "equal"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        ToolkitConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        cfg.experiments.seed = seed;
        const fs::path out(out_dir);
        fs::create_directories(out);

        if (*ingest) {
            const auto sessions = parse_session_log(read_file(ingest_path));
            std::size_t labeled = 0;
            for (const auto& s : sessions)
                if (s.mos_normalized) ++labeled;
            write_file(out / "sessions.jsonl", serialize_session_log(sessions));
            std::cout << "ingested " << sessions.size() << " sessions ("
                      << labeled << " labeled) -> "
                      << (out / "sessions.jsonl").string() << "\n";
            return kExitOk;
        }

        if (*import_csv) {
            CsvColumnMap mapping;
            const json mapping_obj = json::parse(read_file(mapping_path));
            for (const auto& [field, column] : mapping_obj.items())
                mapping[field] = column.get<std::string>();
            const auto sessions =
                import_subjective_csv(read_file(csv_path), mapping, scale_max);
            write_file(out / "sessions.jsonl", serialize_session_log(sessions));
            std::cout << "imported " << sessions.size() << " sessions -> "
                      << (out / "sessions.jsonl").string() << "\n";
            return kExitOk;
        }

        if (*extract) {
            const Dataset d = load_dataset(extract_path, cfg.vqi_k);
            write_file(out / "features.csv", feature_matrix_csv(d.features));
            std::string labels = "mos_normalized\n";
            for (const auto& s : d.sessions) {
                if (s.mos_normalized) {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.17g\n",
                                  *s.mos_normalized);
                    labels += buf;
                } else {
                    labels += "NA\n";
                }
            }
            write_file(out / "labels.csv", labels);
            std::cout << "wrote " << d.features.rows() << " x "
                      << d.features.cols() << " feature matrix -> "
                      << (out / "features.csv").string() << "\n";
            return kExitOk;
        }

        if (*train) {
            const Dataset d = load_dataset(train_data, cfg.vqi_k);
            const Eigen::VectorXd y = label_vector(d.sessions);
            const Scaler scaler = fit_scaler(d.features);
            ModelSpec spec = default_spec(parse_kind(train_model_name), seed);
            const auto r = cfg.experiments.overrides.find(spec.kind);
            if (r != cfg.experiments.overrides.end())
                for (const auto& [name, value] : r->second)
                    spec.hyperparams[name] = value;
            for (const auto& [name, value] : parse_hyper_overrides(train_hyper))
                spec.hyperparams[name] = value;
            const TrainedModel model =
                fit_model(spec, scaler.transform(d.features), y);
            save_model_file(model, (out / "model.qoem").string());
            write_file(out / "scaler.json", scaler_to_json(scaler).dump(2));
            std::cout << "trained " << to_string(spec.kind) << " on "
                      << d.features.rows() << " sessions in "
                      << model.fit_metadata.training_wall_time_s << " s -> "
                      << (out / "model.qoem").string() << "\n";
            if (!model.converged) {
                std::cout << "warning: convergence flag set\n";
                return kExitConvergence;
            }
            return kExitOk;
        }

        if (*predict_cmd) {
            const TrainedModel model = load_model_file(predict_model);
            const Scaler scaler = scaler_from_json(read_file(predict_scaler));
            const Dataset d = load_dataset(predict_data, cfg.vqi_k);
            const Eigen::VectorXd pred =
                qoe::predict(model, scaler.transform(d.features));
            std::string csv = "session_id,predicted_qoe\n";
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g\n", pred[i]);
                csv +=
                    d.sessions[static_cast<std::size_t>(i)].session.session_id +
                    "," + buf;
            }
            write_file(out / "predictions.csv", csv);
            std::cout << "predicted " << pred.size() << " sessions -> "
                      << (out / "predictions.csv").string() << "\n";
            return kExitOk;
        }

        if (*evaluate) {
            const TrainedModel model = load_model_file(eval_model);
            const Scaler scaler = scaler_from_json(read_file(eval_scaler));
            const Dataset d = load_dataset(eval_data, cfg.vqi_k);
            const Eigen::VectorXd y = label_vector(d.sessions);
            const Eigen::VectorXd pred =
                qoe::predict(model, scaler.transform(d.features));
            const MetricsReport report = compute_metrics(y, pred);
            write_file(out / "metrics.json", metrics_json(report));
            std::cout << metrics_json(report) << "\n";
            return kExitOk;
        }

        if (*grid_cmd) {
            const Dataset d = load_dataset(grid_data, cfg.vqi_k);
            const Eigen::VectorXd y = label_vector(d.sessions);
            HyperparamGrid grid;
            const json grid_obj = json::parse(read_file(grid_file));
            for (const auto& [name, values] : grid_obj.items())
                grid[name] = values.get<std::vector<double>>();
            std::vector<std::size_t> rows(d.sessions.size());
            std::iota(rows.begin(), rows.end(), 0);
            const auto folds = kfold_split(rows, grid_folds, seed);
            const auto result = grid_search(parse_kind(grid_model), grid,
                                            d.features, y, folds, seed);
            write_file(out / "grid.csv", grid_search_csv(result));
            std::cout << "best candidate #" << result.best_index << ":";
            for (const auto& [name, value] :
                 result.table[result.best_index].overrides)
                std::cout << " " << name << "=" << value;
            std::cout << " (mean R2 "
                      << *result.table[result.best_index].cv.mean_r2 << ") -> "
                      << (out / "grid.csv").string() << "\n";
            return kExitOk;
        }

        if (*curve_cmd) {
            const Dataset d = load_dataset(curve_data, cfg.vqi_k);
            const Eigen::VectorXd y = label_vector(d.sessions);
            const auto points =
                run_learning_curve(d.features, y, cfg.experiments);
            write_file(out / "learning_curve.csv", learning_curve_csv(points));
            std::cout << "wrote " << points.size() << " points -> "
                      << (out / "learning_curve.csv").string() << "\n";
            return kExitOk;
        }

        if (*bench_cmd) {
            const Dataset d = load_dataset(bench_data, cfg.vqi_k);
            const Eigen::VectorXd y = label_vector(d.sessions);
            const auto cells = run_timing_benchmark(
                d.features, y, cfg.experiments, bench_runs, cfg.timing_sizes);
            write_file(out / "timing.csv", timing_csv(cells));
            std::cout << "predict-time order (fastest first):";
            for (const ModelKind kind : timing_order(cells))
                std::cout << " " << to_string(kind);
            std::cout << "\nwrote " << cells.size() << " cells -> "
                      << (out / "timing.csv").string() << "\n";
            return kExitOk;
        }

        if (*compare_cmd) {
            const Dataset d = load_dataset(compare_data, cfg.vqi_k);
            const Eigen::VectorXd y = label_vector(d.sessions);
            const ComparisonResult result =
                run_comparison(d.features, y, cfg.experiments);
            write_file(out / "comparison.csv", comparison_csv(result));
            write_file(out / "comparison.md", comparison_markdown(result));
            std::cout << comparison_markdown(result);
            bool flagged = false;
            for (const auto& cell : result.cells)
                if (!cell.converged || !cell.error.empty()) flagged = true;
            if (flagged) {
                std::cout << "warning: convergence-flagged cells present\n";
                return kExitConvergence;
            }
            return kExitOk;
        }

        if (*simulate_cmd) {
            DatasetConfig scfg = cfg.synth;
            if (per_cell > 0) scfg.per_cell = per_cell;
            const auto data =
                generate_dataset({default_manifest()}, builtin_traces(),
                                 builtin_policies(), scfg, seed);
            write_file(out / "dataset.jsonl", serialize_session_log(data));
            if (emit_traces)
                for (const auto& t : builtin_traces())
                    write_file(out / "traces" / (t.trace_id + ".json"),
                               trace_to_json(t) + "\n");
            std::cout << "generated " << data.size() << " labeled sessions -> "
                      << (out / "dataset.jsonl").string() << "\n";
            return kExitOk;
        }

        if (*pipeline_cmd) {
            const TrainedModel model = load_model_file(pl_model);
            const Scaler scaler = scaler_from_json(read_file(pl_scaler));
            const Scenario scenario = scenario_from_json(read_file(pl_scenario));
            MonitoringConfig mcfg = cfg.monitoring;
            mcfg.flow_option =
                pl_ifo == 2 ? FlowOption::ifo2 : FlowOption::ifo1;
            if (pl_freq > 0.0) mcfg.frequency_hz = pl_freq;
            const AllocationPolicy policy = pl_policy == "equal"
                                                ? AllocationPolicy::equal_split
                                                : AllocationPolicy::qoe_aware;
            const RunReport report =
                run_closed_loop(scenario, model, scaler, mcfg, policy,
                                pl_epochs, cfg.synth.oracle, cfg.vqi_k);
            write_file(out / "report.json", run_report_to_json(report));
            write_file(out / "epochs.csv", epoch_records_csv(report));
            write_file(out / "kqi_log.jsonl",
                       kqi_log_to_jsonl(report.message_log));
            std::cout << "closed loop finished: " << report.outcomes.size()
                      << " sessions, mean final predicted QoE "
                      << report.mean_final_predicted_qoe << " -> "
                      << (out / "report.json").string() << "\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
