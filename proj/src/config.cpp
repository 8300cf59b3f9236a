#include "qoe/config.hpp"

#include <fstream>

#include <json.hpp>

namespace qoe {

using nlohmann::json;

namespace {

double get_or(const json& obj, const char* key, double fallback) {
    return obj.contains(key) ? obj[key].get<double>() : fallback;
}

int get_or(const json& obj, const char* key, int fallback) {
    return obj.contains(key) ? obj[key].get<int>() : fallback;
}

}  // namespace

ToolkitConfig config_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ToolkitConfig cfg;

    if (obj.contains("vqi")) cfg.vqi_k = get_or(obj["vqi"], "k", cfg.vqi_k);
    cfg.synth.oracle.vqi_k = cfg.vqi_k;

    if (obj.contains("synth")) {
        const auto& s = obj["synth"];
        cfg.synth.per_cell = get_or(s, "per_cell", cfg.synth.per_cell);
        cfg.synth.noise_sigma = get_or(s, "noise_sigma", cfg.synth.noise_sigma);
        cfg.synth.replicate_jitter =
            get_or(s, "replicate_jitter", cfg.synth.replicate_jitter);
        cfg.synth.buffer.startup_threshold_segments =
            get_or(s, "startup_threshold_segments",
                   cfg.synth.buffer.startup_threshold_segments);
        cfg.synth.buffer.resume_threshold_segments =
            get_or(s, "resume_threshold_segments",
                   cfg.synth.buffer.resume_threshold_segments);
        cfg.synth.buffer.max_wall_time_s =
            get_or(s, "max_wall_time_s", cfg.synth.buffer.max_wall_time_s);
        cfg.synth.buffer.device_width_px =
            get_or(s, "device_width_px", cfg.synth.buffer.device_width_px);
        cfg.synth.buffer.device_height_px =
            get_or(s, "device_height_px", cfg.synth.buffer.device_height_px);
        if (s.contains("oracle")) {
            const auto& o = s["oracle"];
            cfg.synth.oracle.w0 = get_or(o, "w0", cfg.synth.oracle.w0);
            cfg.synth.oracle.w1 = get_or(o, "w1", cfg.synth.oracle.w1);
            cfg.synth.oracle.w2 = get_or(o, "w2", cfg.synth.oracle.w2);
            cfg.synth.oracle.w3 = get_or(o, "w3", cfg.synth.oracle.w3);
            cfg.synth.oracle.w4 = get_or(o, "w4", cfg.synth.oracle.w4);
            cfg.synth.oracle.f1_cap_s =
                get_or(o, "f1_cap_s", cfg.synth.oracle.f1_cap_s);
            cfg.synth.oracle.vqi_k = cfg.vqi_k;
            validate_oracle_config(cfg.synth.oracle);
        }
    }

    if (obj.contains("pipeline")) {
        const auto& p = obj["pipeline"];
        cfg.monitoring.frequency_hz =
            get_or(p, "freq_hz", cfg.monitoring.frequency_hz);
        cfg.monitoring.ifo1_latency_s =
            get_or(p, "ifo1_latency_s", cfg.monitoring.ifo1_latency_s);
        cfg.monitoring.ifo2_latency_s =
            get_or(p, "ifo2_latency_s", cfg.monitoring.ifo2_latency_s);
        if (p.contains("ifo"))
            cfg.monitoring.flow_option =
                p["ifo"].get<int>() == 2 ? FlowOption::ifo2 : FlowOption::ifo1;
        cfg.allocation_quanta = get_or(p, "quanta", cfg.allocation_quanta);
        validate_monitoring_config(cfg.monitoring);
    }

    if (obj.contains("experiments")) {
        const auto& e = obj["experiments"];
        cfg.experiments.split_ratio =
            get_or(e, "split_ratio", cfg.experiments.split_ratio);
        cfg.experiments.cv_folds = static_cast<std::size_t>(
            get_or(e, "cv_folds", static_cast<int>(cfg.experiments.cv_folds)));
        cfg.timing_runs = get_or(e, "timing_runs", cfg.timing_runs);
        if (e.contains("timing_sizes"))
            for (const auto& v : e["timing_sizes"])
                cfg.timing_sizes.push_back(v.get<Eigen::Index>());
        if (e.contains("kinds")) {
            cfg.experiments.kinds.clear();
            for (const auto& name : e["kinds"]) {
                const auto kind =
                    model_kind_from_string(name.get<std::string>());
                if (!kind)
                    throw ConfigError("unknown model kind '" +
                                      name.get<std::string>() + "'");
                cfg.experiments.kinds.push_back(*kind);
            }
        }
    }

    if (obj.contains("models")) {
        for (const auto& [name, params] : obj["models"].items()) {
            const auto kind = model_kind_from_string(name);
            if (!kind) throw ConfigError("unknown model kind '" + name + "'");
            Hyperparams hp;
            for (const auto& [pname, pvalue] : params.items())
                hp[pname] = pvalue.get<double>();
            cfg.experiments.overrides[*kind] = std::move(hp);
        }
    }
    return cfg;
}

ToolkitConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return config_from_json(text);
}

}  // namespace qoe
