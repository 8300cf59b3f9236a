#include "qoe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace qoe {

using nlohmann::json;

double MonitoringConfig::period_s() const { return 1.0 / frequency_hz; }

double MonitoringConfig::collector_latency_s() const {
    return flow_option == FlowOption::ifo1 ? ifo1_latency_s : ifo2_latency_s;
}

void validate_monitoring_config(const MonitoringConfig& cfg) {
    if (!(cfg.frequency_hz > 0.0))
        throw ConfigError("monitoring frequency must be > 0");
    if (cfg.ifo1_latency_s < 0.0 || cfg.ifo2_latency_s < 0.0)
        throw ConfigError("collector latency must be >= 0");
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

std::string kqi_to_json(const KqiMessage& msg) {
    json obj;
    obj["session_id"] = msg.session_id;
    obj["emit_time_s"] = msg.emit_time_s;
    obj["stalls"] = msg.stalls;
    obj["total_stall_s"] = msg.total_stall_s;
    obj["layer"] = msg.layer;
    obj["mean_bitrate_kbps"] = msg.mean_bitrate_kbps;
    obj["initial_loading_s"] = msg.initial_loading_s;
    obj["segments_played"] = msg.segments_played;
    obj["eos"] = msg.eos;
    obj["vqi_weighted_sum"] = msg.vqi_weighted_sum;
    obj["last_stall_start_media_s"] = msg.last_stall_start_media_s;
    return obj.dump();
}

KqiMessage kqi_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(1, e.what());
    }
    KqiMessage msg;
    try {
        msg.session_id = obj.at("session_id").get<std::string>();
        msg.emit_time_s = obj.at("emit_time_s").get<double>();
        msg.stalls = obj.at("stalls").get<int>();
        msg.total_stall_s = obj.at("total_stall_s").get<double>();
        msg.layer = obj.at("layer").get<double>();
        msg.mean_bitrate_kbps = obj.at("mean_bitrate_kbps").get<double>();
        msg.initial_loading_s = obj.at("initial_loading_s").get<double>();
        msg.segments_played = obj.at("segments_played").get<int>();
        msg.eos = obj.at("eos").get<bool>();
        msg.vqi_weighted_sum = obj.at("vqi_weighted_sum").get<double>();
        msg.last_stall_start_media_s =
            obj.at("last_stall_start_media_s").get<double>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad KQI message: ") + e.what());
    }
    return msg;
}

std::string kqi_log_to_jsonl(const std::vector<KqiMessage>& log) {
    std::string out;
    for (const auto& msg : log) {
        out += kqi_to_json(msg);
        out += '\n';
    }
    return out;
}

std::vector<KqiMessage> kqi_log_from_jsonl(const std::string& text) {
    std::vector<KqiMessage> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(kqi_from_json(line));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Probe
// ---------------------------------------------------------------------------

namespace {

/// Cumulative playback state of a completed session at wall time t.
struct PlaybackSnapshot {
    double loading_so_far = 0.0;
    bool started = false;
    double position = 0.0;  // media seconds played
    int stall_count = 0;
    double total_stall_s = 0.0;
    double last_stall_start_media = -1.0;
};

PlaybackSnapshot snapshot_at(const StreamingSession& s, double t) {
    PlaybackSnapshot snap;
    const double loading = s.initial_loading_time_s;
    if (t < loading) {
        snap.loading_so_far = t;
        return snap;
    }
    snap.loading_so_far = loading;
    snap.started = true;

    double wall = loading;
    double media = 0.0;
    for (const auto& st : s.stalls) {
        const double play = st.start_media_time_s - media;
        if (t < wall + play) {
            snap.position = media + (t - wall);
            return snap;
        }
        wall += play;
        media = st.start_media_time_s;
        ++snap.stall_count;
        snap.last_stall_start_media = media;
        if (t < wall + st.duration_s) {
            snap.total_stall_s += t - wall;
            snap.position = media;
            return snap;
        }
        snap.total_stall_s += st.duration_s;
        wall += st.duration_s;
    }
    const double media_total = s.media_duration_s();
    snap.position = std::min(media_total, media + (t - wall));
    return snap;
}

KqiMessage message_from_snapshot(const StreamingSession& s,
                                 const PlaybackSnapshot& snap, double emit_time,
                                 bool eos, double vqi_k) {
    KqiMessage msg;
    msg.session_id = s.session_id;
    msg.emit_time_s = emit_time;
    msg.stalls = snap.stall_count;
    msg.total_stall_s = snap.total_stall_s;
    msg.initial_loading_s = snap.loading_so_far;
    msg.eos = eos;
    msg.last_stall_start_media_s = snap.last_stall_start_media;

    const double device_pixels =
        static_cast<double>(s.device_width_px) * s.device_height_px;
    double played = snap.position;
    double bit_seconds = 0.0;
    double vqi_sum = 0.0;
    int full_count = 0;
    std::vector<double> layers;
    for (const auto& seg : s.segments) {
        if (played <= 0.0) break;
        const double d = std::min(played, seg.duration_s);
        layers.push_back(static_cast<double>(seg.quality_layer));
        bit_seconds += seg.bitrate_kbps * d;
        const double ratio = std::min(
            1.0,
            static_cast<double>(seg.width_px) * seg.height_px / device_pixels);
        const double q =
            1.0 +
            4.0 * (1.0 - std::exp(-vqi_k * seg.bitrate_kbps * ratio / 1000.0));
        vqi_sum += q * d;
        if (d >= seg.duration_s - 1e-9) ++full_count;
        played -= d;
    }
    msg.segments_played = full_count;
    msg.mean_bitrate_kbps =
        snap.position > 0.0 ? bit_seconds / snap.position : 0.0;
    msg.vqi_weighted_sum = vqi_sum;
    msg.layer = layers.empty() ? 0.0 : median_lower(std::move(layers));
    return msg;
}

}  // namespace

std::vector<KqiMessage> probe_emit(const StreamingSession& s,
                                   const MonitoringConfig& cfg, double vqi_k) {
    validate_monitoring_config(cfg);
    const double period = cfg.period_s();
    const double wall_end = s.wall_clock_duration_s();

    std::vector<KqiMessage> out;
    std::uint64_t k = 1;
    for (;; ++k) {
        const double t = static_cast<double>(k) * period;
        if (t > wall_end) break;
        out.push_back(
            message_from_snapshot(s, snapshot_at(s, t), t, false, vqi_k));
    }
    // The probe notices the finished session at the first tick past its end.
    const double eos_tick = static_cast<double>(k) * period;
    out.push_back(message_from_snapshot(s, snapshot_at(s, wall_end), eos_tick,
                                        true, vqi_k));
    return out;
}

// ---------------------------------------------------------------------------
// Monitor
// ---------------------------------------------------------------------------

FeatureVector aggregate_window(const std::vector<KqiMessage>& messages,
                               const SessionContext& ctx) {
    if (messages.empty())
        throw DataError("aggregate_window requires at least one message");
    const KqiMessage& last = messages.back();

    const double elapsed_media =
        std::clamp(last.emit_time_s - last.initial_loading_s - last.total_stall_s,
                   0.0, ctx.media_duration_s);

    FeatureVector f;
    f.f1_initial_loading_s = last.initial_loading_s;
    f.f2_stall_count = static_cast<double>(last.stalls);
    f.f3_total_stall_s = last.total_stall_s;
    if (elapsed_media > 0.0) {
        f.f4_stall_freq_per_s = f.f2_stall_count / elapsed_media;
        f.f5_stall_ratio = last.total_stall_s / elapsed_media;
    }
    f.f6_last_stall_gap_s = last.last_stall_start_media_s < 0.0
                                ? elapsed_media
                                : elapsed_media - last.last_stall_start_media_s;
    f.f7_mean_bitrate_kbps = last.mean_bitrate_kbps;
    f.f8_framerate_fps = ctx.framerate_fps;
    f.f9_median_quality_layer = last.layer;
    f.f10_visual_quality_index =
        elapsed_media > 0.0
            ? std::clamp(last.vqi_weighted_sum / elapsed_media, 1.0, 5.0)
            : 1.0;
    return f;
}

double predict_live(const TrainedModel& model, const Scaler& scaler,
                    const FeatureVector& features) {
    Eigen::MatrixXd row(1, kFeatureCount);
    row.row(0) = features.to_vector().transpose();
    const Eigen::VectorXd pred = predict(model, scaler.transform(row));
    return std::clamp(pred[0], 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Resource allocation
// ---------------------------------------------------------------------------

namespace {

FeatureVector features_at_bandwidth(const AllocationInput& input,
                                    double bandwidth_kbps, double vqi_k) {
    const auto& reps = input.manifest.representations;
    FeatureVector f = input.features;
    const double lo = reps.front().bitrate_kbps;
    const double hi = reps.back().bitrate_kbps;
    const double sustained = std::clamp(bandwidth_kbps, lo, hi);
    const Representation* rep = &reps.front();
    for (const auto& r : reps)
        if (r.bitrate_kbps <= sustained) rep = &r;
    const double device_pixels =
        static_cast<double>(input.device_width_px) * input.device_height_px;
    const double ratio = std::min(
        1.0, static_cast<double>(rep->width_px) * rep->height_px / device_pixels);
    f.f7_mean_bitrate_kbps = sustained;
    f.f10_visual_quality_index = std::clamp(
        1.0 + 4.0 * (1.0 - std::exp(-vqi_k * sustained * ratio / 1000.0)), 1.0,
        5.0);
    return f;
}

}  // namespace

AllocationDecision allocate_resources(const std::vector<AllocationInput>& sessions,
                                      double capacity_kbps,
                                      AllocationPolicy policy,
                                      const TrainedModel& model,
                                      const Scaler& scaler, double epoch_time_s,
                                      int quanta, double vqi_k) {
    if (!(capacity_kbps > 0.0)) throw DataError("capacity must be > 0");
    AllocationDecision decision;
    decision.epoch_time_s = epoch_time_s;
    if (sessions.empty()) return decision;

    const std::size_t n = sessions.size();
    std::vector<double> shares(n, 0.0);

    if (policy == AllocationPolicy::equal_split) {
        const double share = capacity_kbps / static_cast<double>(n);
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            shares[i] = share;
            objective += predict_live(
                model, scaler, features_at_bandwidth(sessions[i], share, vqi_k));
        }
        decision.objective = objective;
    } else {
        // Baseline floor: every session keeps enough for the layer it has
        // demonstrably been playing (its running median, capped by the fair
        // share), so the marginal-gain rounds redistribute genuine surplus
        // rather than starve sessions the f7/f10 probe cannot see stalling.
        const double fair = capacity_kbps / static_cast<double>(n);
        double remaining = capacity_kbps;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& reps = sessions[i].manifest.representations;
            const int top = static_cast<int>(reps.size()) - 1;
            const int layer = std::clamp(
                static_cast<int>(std::llround(
                    sessions[i].features.f9_median_quality_layer)),
                0, top);
            shares[i] = std::min(
                fair, 1.05 * reps[static_cast<std::size_t>(layer)].bitrate_kbps);
            remaining -= shares[i];
        }
        const double quantum = remaining / static_cast<double>(quanta);
        std::vector<double> current(n), candidate(n);
        for (std::size_t i = 0; i < n; ++i) {
            current[i] = predict_live(
                model, scaler,
                features_at_bandwidth(sessions[i], shares[i], vqi_k));
            candidate[i] = predict_live(
                model, scaler,
                features_at_bandwidth(sessions[i], shares[i] + quantum, vqi_k));
        }
        for (int q = 0; q < quanta; ++q) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < n; ++i) {
                const double gi = candidate[i] - current[i];
                const double gb = candidate[best] - current[best];
                // Ties: smaller current share first, then session id.
                if (gi > gb ||
                    (gi == gb &&
                     (shares[i] < shares[best] ||
                      (shares[i] == shares[best] &&
                       sessions[i].session_id < sessions[best].session_id))))
                    best = i;
            }
            shares[best] += quantum;
            current[best] = candidate[best];
            candidate[best] = predict_live(
                model, scaler,
                features_at_bandwidth(sessions[best], shares[best] + quantum,
                                      vqi_k));
        }
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) objective += current[i];
        decision.objective = objective;
    }

    for (std::size_t i = 0; i < n; ++i)
        decision.shares_kbps.emplace_back(sessions[i].session_id, shares[i]);
    return decision;
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

namespace {

VideoManifest manifest_from_json(const json& obj) {
    VideoManifest m;
    m.segment_count = obj.at("segment_count").get<int>();
    m.segment_duration_s = obj.at("segment_duration_s").get<double>();
    m.framerate_fps = obj.at("framerate_fps").get<double>();
    for (const auto& rep : obj.at("representations")) {
        m.representations.push_back({rep.at("quality_layer").get<int>(),
                                     rep.at("bitrate_kbps").get<double>(),
                                     rep.at("width_px").get<int>(),
                                     rep.at("height_px").get<int>()});
    }
    validate_manifest(m);
    return m;
}

json manifest_to_json(const VideoManifest& m) {
    json obj;
    obj["segment_count"] = m.segment_count;
    obj["segment_duration_s"] = m.segment_duration_s;
    obj["framerate_fps"] = m.framerate_fps;
    obj["representations"] = json::array();
    for (const auto& rep : m.representations)
        obj["representations"].push_back({{"quality_layer", rep.quality_layer},
                                          {"bitrate_kbps", rep.bitrate_kbps},
                                          {"width_px", rep.width_px},
                                          {"height_px", rep.height_px}});
    return obj;
}

const BandwidthTrace& builtin_trace_by_id(const std::string& id) {
    for (const auto& t : builtin_traces())
        if (t.trace_id == id) return t;
    throw ConfigError("unknown builtin trace '" + id + "'");
}

const AbrPolicy& builtin_policy_by_id(const std::string& id) {
    for (const auto& p : builtin_policies())
        if (p.policy_id == id) return p;
    throw ConfigError("unknown builtin policy '" + id + "'");
}

}  // namespace

namespace {

void parse_scenario_fields(const json& obj, Scenario& scenario) {
    scenario.capacity_kbps = obj.at("capacity_kbps").get<double>();
    if (obj.contains("buffer")) {
        const auto& b = obj["buffer"];
        if (b.contains("startup_threshold_segments"))
            scenario.buffer.startup_threshold_segments =
                b["startup_threshold_segments"].get<double>();
        if (b.contains("resume_threshold_segments"))
            scenario.buffer.resume_threshold_segments =
                b["resume_threshold_segments"].get<double>();
        if (b.contains("max_wall_time_s"))
            scenario.buffer.max_wall_time_s = b["max_wall_time_s"].get<double>();
        if (b.contains("bandwidth_jitter"))
            scenario.buffer.bandwidth_jitter = b["bandwidth_jitter"].get<double>();
        if (b.contains("device_width_px"))
            scenario.buffer.device_width_px = b["device_width_px"].get<int>();
        if (b.contains("device_height_px"))
            scenario.buffer.device_height_px = b["device_height_px"].get<int>();
    }
    for (const auto& s : obj.at("sessions")) {
        ScenarioSession sess;
        sess.session_id = s.at("session_id").get<std::string>();
        sess.seed = s.contains("seed") ? s["seed"].get<std::uint64_t>() : 0;
        if (s.at("trace").is_string())
            sess.trace = builtin_trace_by_id(s["trace"].get<std::string>());
        else
            sess.trace = trace_from_json(s["trace"].dump());
        sess.policy = builtin_policy_by_id(s.at("policy").get<std::string>());
        sess.manifest = s.contains("manifest")
                            ? manifest_from_json(s["manifest"])
                            : default_manifest();
        scenario.sessions.push_back(std::move(sess));
    }
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(1, e.what());
    }
    Scenario scenario;
    try {
        parse_scenario_fields(obj, scenario);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad scenario: ") + e.what());
    }
    if (scenario.sessions.empty())
        throw ConfigError("scenario has no sessions");
    if (!(scenario.capacity_kbps > 0.0))
        throw ConfigError("scenario capacity must be > 0");
    return scenario;
}

std::string scenario_to_json(const Scenario& scenario) {
    json obj;
    obj["capacity_kbps"] = scenario.capacity_kbps;
    obj["buffer"] = {
        {"startup_threshold_segments", scenario.buffer.startup_threshold_segments},
        {"resume_threshold_segments", scenario.buffer.resume_threshold_segments},
        {"max_wall_time_s", scenario.buffer.max_wall_time_s},
        {"bandwidth_jitter", scenario.buffer.bandwidth_jitter},
        {"device_width_px", scenario.buffer.device_width_px},
        {"device_height_px", scenario.buffer.device_height_px}};
    obj["sessions"] = json::array();
    for (const auto& s : scenario.sessions) {
        json sess;
        sess["session_id"] = s.session_id;
        sess["seed"] = s.seed;
        sess["trace"] = s.trace.trace_id;
        sess["policy"] = s.policy.policy_id;
        sess["manifest"] = manifest_to_json(s.manifest);
        obj["sessions"].push_back(std::move(sess));
    }
    return obj.dump(2);
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

namespace {

KqiMessage message_from_sim(const SessionSim& sim, const ScenarioSession& cfg,
                            double emit_time, bool eos, double vqi_k) {
    KqiMessage msg;
    msg.session_id = cfg.session_id;
    msg.emit_time_s = emit_time;
    const auto stalls = sim.stalls_so_far();
    msg.stalls = static_cast<int>(stalls.size());
    double total = 0.0;
    for (const auto& st : stalls) total += st.duration_s;
    msg.total_stall_s = total;
    msg.last_stall_start_media_s =
        stalls.empty() ? -1.0 : stalls.back().start_media_time_s;
    msg.initial_loading_s = sim.initial_loading_time_s();
    msg.mean_bitrate_kbps = sim.mean_bitrate_so_far_kbps();
    msg.vqi_weighted_sum = sim.vqi_weighted_sum(vqi_k);
    msg.eos = eos;

    const auto started = sim.segments_started();
    if (started.empty()) {
        msg.layer = 0.0;
        msg.segments_played = 0;
    } else {
        std::vector<double> layers;
        layers.reserve(started.size());
        for (const auto& seg : started)
            layers.push_back(static_cast<double>(seg.quality_layer));
        msg.layer = median_lower(std::move(layers));
        const double dur = cfg.manifest.segment_duration_s;
        int full = static_cast<int>(sim.media_position_s() / dur);
        msg.segments_played = std::min(full, cfg.manifest.segment_count);
    }
    return msg;
}

}  // namespace

RunReport run_closed_loop(const Scenario& scenario, const TrainedModel& model,
                          const Scaler& scaler, const MonitoringConfig& cfg,
                          AllocationPolicy policy, int epochs,
                          const OracleConfig& oracle, double vqi_k) {
    validate_monitoring_config(cfg);
    if (scenario.sessions.empty()) throw DataError("scenario has no sessions");
    if (!(scenario.capacity_kbps > 0.0))
        throw DataError("scenario capacity must be > 0");

    RunReport report;
    report.policy = policy;
    report.monitoring = cfg;
    report.epochs = epochs;

    const std::size_t n = scenario.sessions.size();
    const double period = cfg.period_s();
    const double latency = cfg.collector_latency_s();

    std::vector<SessionSim> sims;
    sims.reserve(n);
    std::map<std::string, SessionContext> contexts;
    for (const auto& s : scenario.sessions) {
        sims.emplace_back(s.manifest, s.trace, s.policy, scenario.buffer, s.seed,
                          s.session_id);
        contexts[s.session_id] = {
            s.session_id, s.manifest.framerate_fps,
            s.manifest.segment_count * s.manifest.segment_duration_s};
    }

    const double equal_share = scenario.capacity_kbps / static_cast<double>(n);
    for (auto& sim : sims) sim.set_bandwidth_cap(equal_share);

    struct Delivery {
        double deliver_time = 0.0;
        KqiMessage msg;
    };
    std::vector<std::vector<Delivery>> inbox(n);  // per session, emit order
    std::vector<bool> eos_emitted(n, false);
    std::vector<std::optional<double>> last_prediction(n);

    for (std::uint64_t k = 1;; ++k) {
        const double t = static_cast<double>(k) * period;
        if (t > scenario.buffer.max_wall_time_s) {
            std::string stuck;
            for (std::size_t i = 0; i < n; ++i)
                if (!sims[i].finished())
                    stuck += (stuck.empty() ? "" : ", ") +
                             scenario.sessions[i].session_id;
            throw SimulationAbort("closed loop exceeded max wall time; unfinished: " +
                                  stuck);
        }

        for (auto& sim : sims) sim.advance_to(t);

        // Probe: in-session samples up to and including the session's end
        // tick, then one eos message at the first tick past the end.
        for (std::size_t i = 0; i < n; ++i) {
            if (eos_emitted[i]) continue;
            const bool ended = sims[i].finished() && sims[i].wall_time_s() < t;
            const KqiMessage msg = message_from_sim(
                sims[i], scenario.sessions[i], t, ended, vqi_k);
            inbox[i].push_back({t + latency, msg});
            report.message_log.push_back(msg);
            if (ended) eos_emitted[i] = true;
        }

        if (static_cast<int>(k) <= epochs) {
            EpochRecord record;
            record.time_s = t;

            std::vector<AllocationInput> monitored;
            std::vector<std::size_t> monitored_idx;
            std::vector<std::size_t> unmonitored_idx;
            for (std::size_t i = 0; i < n; ++i) {
                if (sims[i].finished()) continue;  // inactive, no share needed
                // Latest message already delivered to the collector.
                const Delivery* latest = nullptr;
                for (const auto& d : inbox[i])
                    if (d.deliver_time <= t) latest = &d;
                if (!latest) {
                    unmonitored_idx.push_back(i);
                    continue;
                }
                std::vector<KqiMessage> window;
                for (const auto& d : inbox[i])
                    if (d.deliver_time <= t) window.push_back(d.msg);
                const FeatureVector fv = aggregate_window(
                    window, contexts.at(scenario.sessions[i].session_id));
                AllocationInput input;
                input.session_id = scenario.sessions[i].session_id;
                input.features = fv;
                input.manifest = scenario.sessions[i].manifest;
                input.device_width_px = scenario.buffer.device_width_px;
                input.device_height_px = scenario.buffer.device_height_px;
                monitored.push_back(std::move(input));
                monitored_idx.push_back(i);

                const double qoe = predict_live(model, scaler, fv);
                last_prediction[i] = qoe;
                LivePrediction lp{t, scenario.sessions[i].session_id, qoe};
                record.predictions.push_back(lp);
                report.prediction_log.push_back(lp);
            }

            // Sessions without a delivered sample keep an equal share; the
            // rest of the capacity is allocated over the monitored ones.
            double remaining = scenario.capacity_kbps;
            for (const std::size_t i : unmonitored_idx) {
                sims[i].set_bandwidth_cap(equal_share);
                remaining -= equal_share;
                record.decision.shares_kbps.emplace_back(
                    scenario.sessions[i].session_id, equal_share);
            }
            if (!monitored.empty() && remaining > 0.0) {
                AllocationDecision d = allocate_resources(
                    monitored, remaining, policy, model, scaler, t, 100, vqi_k);
                for (std::size_t m = 0; m < monitored.size(); ++m)
                    sims[monitored_idx[m]].set_bandwidth_cap(
                        d.shares_kbps[m].second);
                record.decision.objective = d.objective;
                for (auto& share : d.shares_kbps)
                    record.decision.shares_kbps.push_back(std::move(share));
            }
            record.decision.epoch_time_s = t;

            double stall_total = 0.0;
            for (const auto& sim : sims)
                for (const auto& st : sim.stalls_so_far())
                    stall_total += st.duration_s;
            record.total_stall_s = stall_total;
            report.epoch_records.push_back(std::move(record));
        }

        bool all_done = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!eos_emitted[i]) all_done = false;
        if (all_done) break;
    }

    double qoe_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        SessionOutcome outcome;
        SimResult sim_result = sims[i].result();
        outcome.session = std::move(sim_result.session);
        outcome.wall_duration_s = sim_result.wall_duration_s;
        outcome.offline_features = extract_features(outcome.session, vqi_k);

        std::vector<KqiMessage> window;
        for (const auto& d : inbox[i]) window.push_back(d.msg);
        outcome.pipeline_features = aggregate_window(
            window, contexts.at(scenario.sessions[i].session_id));

        outcome.oracle_label = oracle_qoe(outcome.session, oracle, 0.0, 0);
        outcome.final_predicted_qoe =
            predict_live(model, scaler, outcome.pipeline_features);
        qoe_sum += outcome.final_predicted_qoe;
        report.outcomes.push_back(std::move(outcome));
    }
    report.mean_final_predicted_qoe = qoe_sum / static_cast<double>(n);
    return report;
}

std::vector<LivePrediction> replay_predictions(
    const std::vector<KqiMessage>& log,
    const std::map<std::string, SessionContext>& contexts,
    const TrainedModel& model, const Scaler& scaler) {
    std::map<std::string, std::vector<KqiMessage>> windows;
    std::vector<LivePrediction> out;
    for (const auto& msg : log) {
        auto ctx = contexts.find(msg.session_id);
        if (ctx == contexts.end())
            throw DataError("no session context for '" + msg.session_id + "'");
        auto& window = windows[msg.session_id];
        window.push_back(msg);
        const FeatureVector fv = aggregate_window(window, ctx->second);
        out.push_back(
            {msg.emit_time_s, msg.session_id, predict_live(model, scaler, fv)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string run_report_to_json(const RunReport& report) {
    json obj;
    obj["policy"] =
        report.policy == AllocationPolicy::qoe_aware ? "qoe" : "equal";
    obj["epochs"] = report.epochs;
    obj["monitoring"] = {
        {"frequency_hz", report.monitoring.frequency_hz},
        {"flow_option",
         report.monitoring.flow_option == FlowOption::ifo1 ? 1 : 2},
        {"collector_latency_s", report.monitoring.collector_latency_s()}};
    obj["mean_final_predicted_qoe"] = report.mean_final_predicted_qoe;
    obj["epochs_recorded"] = json::array();
    for (const auto& e : report.epoch_records) {
        json epoch;
        epoch["time_s"] = e.time_s;
        epoch["objective"] = e.decision.objective;
        epoch["total_stall_s"] = e.total_stall_s;
        epoch["shares_kbps"] = json::object();
        for (const auto& [id, share] : e.decision.shares_kbps)
            epoch["shares_kbps"][id] = share;
        epoch["predictions"] = json::object();
        for (const auto& p : e.predictions)
            epoch["predictions"][p.session_id] = p.qoe;
        obj["epochs_recorded"].push_back(std::move(epoch));
    }
    obj["sessions"] = json::array();
    for (const auto& o : report.outcomes) {
        json sess;
        sess["session_id"] = o.session.session_id;
        sess["wall_duration_s"] = o.wall_duration_s;
        sess["oracle_label"] = o.oracle_label;
        sess["final_predicted_qoe"] = o.final_predicted_qoe;
        sess["stall_count"] = o.session.stalls.size();
        sess["features"] = json::array();
        const auto fv = o.pipeline_features.to_vector();
        for (int i = 0; i < kFeatureCount; ++i) sess["features"].push_back(fv[i]);
        obj["sessions"].push_back(std::move(sess));
    }
    return obj.dump(2);
}

std::string epoch_records_csv(const RunReport& report) {
    std::string out = "epoch_time_s,objective,total_stall_s,session_id,share_kbps,predicted_qoe\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& e : report.epoch_records) {
        std::map<std::string, double> predictions;
        for (const auto& p : e.predictions) predictions[p.session_id] = p.qoe;
        for (const auto& [id, share] : e.decision.shares_kbps) {
            out += num(e.time_s) + "," + num(e.decision.objective) + "," +
                   num(e.total_stall_s) + "," + id + "," + num(share) + ",";
            const auto it = predictions.find(id);
            out += it != predictions.end() ? num(it->second) : std::string("NA");
            out += '\n';
        }
    }
    return out;
}

}  // namespace qoe
