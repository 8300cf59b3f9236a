#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qoe/features.hpp"
#include "qoe/model.hpp"
#include "qoe/session.hpp"
#include "qoe/synth.hpp"

namespace qoe {

/// Timestamped cumulative KQI sample on the probe-to-collector wire.
///
/// `layer` carries the running median quality layer over segments whose
/// playback started, `vqi_weighted_sum` the running sum of per-segment
/// visual quality times played duration, and `last_stall_start_media_s` the
/// media-time start of the most recent stall (-1 before any stall); the
/// last two let the monitor reproduce the offline features exactly at end
/// of session.
struct KqiMessage {
    std::string session_id;
    double emit_time_s = 0.0;
    int stalls = 0;
    double total_stall_s = 0.0;
    double layer = 0.0;
    double mean_bitrate_kbps = 0.0;
    double initial_loading_s = 0.0;
    int segments_played = 0;
    bool eos = false;
    double vqi_weighted_sum = 0.0;
    double last_stall_start_media_s = -1.0;
};

std::string kqi_to_json(const KqiMessage& msg);
KqiMessage kqi_from_json(const std::string& text);
std::string kqi_log_to_jsonl(const std::vector<KqiMessage>& log);
std::vector<KqiMessage> kqi_log_from_jsonl(const std::string& text);

/// IFO1 routes probe samples through the OTT database, IFO2 through the MEC
/// server at the RAN; at this abstraction they differ in delivery latency.
enum class FlowOption { ifo1 = 1, ifo2 = 2 };

struct MonitoringConfig {
    double frequency_hz = 0.25;
    FlowOption flow_option = FlowOption::ifo1;
    double ifo1_latency_s = 0.5;
    double ifo2_latency_s = 0.05;

    double period_s() const;
    double collector_latency_s() const;
};

void validate_monitoring_config(const MonitoringConfig& cfg);

/// Static per-session metadata the monitor obtains out-of-band (the MPD
/// information path), as opposed to the runtime KQIs on the wire.
struct SessionContext {
    std::string session_id;
    double framerate_fps = 0.0;
    double media_duration_s = 0.0;
};

/// Periodic probe over a completed session's playback timeline: one message
/// per tick k/frequency while the session is live (boundary inclusive) and
/// one end-of-session message at the first tick past the end.
std::vector<KqiMessage> probe_emit(const StreamingSession& s,
                                   const MonitoringConfig& cfg,
                                   double vqi_k = kDefaultVqiK);

/// Partial-session features from the cumulative KQIs of a message stream,
/// with elapsed media time as the duration denominator. The aggregation of
/// a final message equals extract_features of the completed session.
FeatureVector aggregate_window(const std::vector<KqiMessage>& messages,
                               const SessionContext& ctx);

/// Scale, predict, clamp to [0,1].
double predict_live(const TrainedModel& model, const Scaler& scaler,
                    const FeatureVector& features);

enum class AllocationPolicy { qoe_aware, equal_split };

struct AllocationDecision {
    double epoch_time_s = 0.0;
    std::vector<std::pair<std::string, double>> shares_kbps;  // by session id
    double objective = 0.0;  // sum of predicted QoE at the final shares
};

/// Per-session state handed to the allocator: the latest monitored features
/// plus the static content metadata its sensitivity probe needs.
struct AllocationInput {
    std::string session_id;
    FeatureVector features;
    VideoManifest manifest;
    int device_width_px = 1920;
    int device_height_px = 1080;
};

/// Greedy marginal-gain water-filling. Every session first keeps a floor of
/// min(fair share, 1.05 x the bitrate of its running median layer), then
/// the surplus is granted one quantum at a time to the session whose
/// predicted QoE gains most under a local sensitivity probe on the
/// bandwidth-dependent features (f7, f10); ties resolve to the smaller
/// current share, then the smaller session_id. equal_split divides capacity
/// evenly instead.
AllocationDecision allocate_resources(const std::vector<AllocationInput>& sessions,
                                      double capacity_kbps,
                                      AllocationPolicy policy,
                                      const TrainedModel& model,
                                      const Scaler& scaler,
                                      double epoch_time_s = 0.0,
                                      int quanta = 100,
                                      double vqi_k = kDefaultVqiK);

struct ScenarioSession {
    std::string session_id;
    VideoManifest manifest;
    BandwidthTrace trace;
    AbrPolicy policy;
    std::uint64_t seed = 0;
};

struct Scenario {
    double capacity_kbps = 0.0;
    BufferConfig buffer;
    std::vector<ScenarioSession> sessions;
};

Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);

struct LivePrediction {
    double time_s = 0.0;
    std::string session_id;
    double qoe = 0.0;
};

struct EpochRecord {
    double time_s = 0.0;
    AllocationDecision decision;
    std::vector<LivePrediction> predictions;
    double total_stall_s = 0.0;  // cumulative over all sessions
};

struct SessionOutcome {
    StreamingSession session;
    FeatureVector offline_features;
    FeatureVector pipeline_features;  // aggregated from the message log
    double oracle_label = 0.0;        // noise-free synthetic ground truth
    double final_predicted_qoe = 0.0;
    double wall_duration_s = 0.0;
};

struct RunReport {
    AllocationPolicy policy = AllocationPolicy::qoe_aware;
    MonitoringConfig monitoring;
    int epochs = 0;
    std::vector<EpochRecord> epoch_records;
    std::vector<KqiMessage> message_log;       // delivery-ordered wire log
    std::vector<LivePrediction> prediction_log;
    std::vector<SessionOutcome> outcomes;
    double mean_final_predicted_qoe = 0.0;
};

/// Steps the whole reference loop on one simulated clock: probes emit KQIs
/// each monitoring tick, the collector delivers them after the flow
/// option's latency, features and predictions refresh at each allocation
/// epoch (the first `epochs` monitoring ticks), and the allocator rewrites
/// the sessions' bandwidth shares. Deterministic per (scenario, seed, cfg).
RunReport run_closed_loop(const Scenario& scenario, const TrainedModel& model,
                          const Scaler& scaler, const MonitoringConfig& cfg,
                          AllocationPolicy policy, int epochs,
                          const OracleConfig& oracle = {},
                          double vqi_k = kDefaultVqiK);

/// Re-runs monitor + predictor over a recorded message log; identical logs
/// yield identical predictions.
std::vector<LivePrediction> replay_predictions(
    const std::vector<KqiMessage>& log,
    const std::map<std::string, SessionContext>& contexts,
    const TrainedModel& model, const Scaler& scaler);

std::string run_report_to_json(const RunReport& report);
std::string epoch_records_csv(const RunReport& report);

}  // namespace qoe
