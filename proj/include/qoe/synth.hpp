#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qoe/error.hpp"
#include "qoe/features.hpp"
#include "qoe/session.hpp"

namespace qoe {

/// The simulated clock exceeded the configured wall-time budget (for
/// example a trace that stays at zero bandwidth forever).
class SimulationAbort : public Error {
public:
    using Error::Error;
};

struct TraceSample {
    double time_s = 0.0;
    double kbps = 0.0;
};

/// Step-constant bandwidth profile; the last sample extends forever.
struct BandwidthTrace {
    std::string trace_id;
    std::vector<TraceSample> samples;  // times strictly increasing from 0

    double bandwidth_at(double t) const;
    /// Integral of bandwidth over [t0, t1] in kilobits.
    double integral_kbit(double t0, double t1) const;
    /// Earliest time >= t0 by which `kbit` transfers; +inf when starved.
    double time_to_transfer(double t0, double kbit) const;

    BandwidthTrace scaled(double factor) const;
    /// Pointwise min with a cap; used for shared-link bandwidth shares.
    BandwidthTrace clipped(double cap_kbps) const;
};

void validate_trace(const BandwidthTrace& trace);

/// The 13 named bandwidth profiles the generator cycles through.
const std::vector<BandwidthTrace>& builtin_traces();

BandwidthTrace trace_from_json(const std::string& text);
std::string trace_to_json(const BandwidthTrace& trace);

enum class AbrKind {
    rate_based,
    buffer_based,
    hybrid,
    conservative_rate,
    aggressive_rate,
    oracle_capped,
};

/// Client adaptation policy; all six kinds are deterministic functions of
/// observed throughput and/or buffer level.
struct AbrPolicy {
    std::string policy_id;
    AbrKind kind = AbrKind::rate_based;
    double safety = 1.0;        // multiplier on the throughput estimate
    double ewma_alpha = 0.4;    // conservative_rate smoothing
    double reservoir_s = 2.0;   // buffer_based lower knee
    double cushion_s = 8.0;     // buffer_based upper knee
};

/// The six stand-in client adaptation policies.
const std::vector<AbrPolicy>& builtin_policies();

struct Representation {
    int quality_layer = 0;
    double bitrate_kbps = 0.0;
    int width_px = 0;
    int height_px = 0;
};

struct VideoManifest {
    int segment_count = 0;
    double segment_duration_s = 0.0;
    std::vector<Representation> representations;  // bitrate increasing
    double framerate_fps = 0.0;
};

void validate_manifest(const VideoManifest& manifest);

/// 13 x 1 s segments over five representations from 400 to 5000 kbps.
VideoManifest default_manifest();

struct BufferConfig {
    double startup_threshold_segments = 2.0;
    double resume_threshold_segments = 1.0;
    double max_wall_time_s = 3600.0;
    double bandwidth_jitter = 0.0;  // +-fraction applied per sample, seeded
    int device_width_px = 1920;
    int device_height_px = 1080;
};

struct SimResult {
    StreamingSession session;
    double wall_duration_s = 0.0;   // clock when the last media second plays
    double downloaded_kbit = 0.0;
    double capacity_kbit = 0.0;     // trace integral over [0, wall_duration]
};

/// Stepwise fluid buffer simulator driving one session; the closed-loop
/// pipeline advances it epoch by epoch and rewrites its bandwidth cap.
class SessionSim {
public:
    SessionSim(VideoManifest manifest, BandwidthTrace trace, AbrPolicy policy,
               BufferConfig cfg, std::uint64_t seed, std::string session_id);
    ~SessionSim();
    SessionSim(SessionSim&&) noexcept;
    SessionSim& operator=(SessionSim&&) noexcept;

    /// Caps effective bandwidth at min(trace, cap) from the current instant.
    void set_bandwidth_cap(double cap_kbps);

    /// Processes events until the given wall time or session completion.
    void advance_to(double wall_time_s);
    /// Runs to completion; throws SimulationAbort past the wall-time budget.
    void run_to_completion();

    bool finished() const;
    double wall_time_s() const;
    double media_position_s() const;
    double media_duration_s() const;
    bool playback_started() const;
    double initial_loading_time_s() const;  // grows until playback starts
    /// Stall list so far; an ongoing stall's duration grows with the clock.
    std::vector<StallEvent> stalls_so_far() const;
    /// Segments whose playback has started, in order.
    std::vector<Segment> segments_started() const;
    /// Duration-weighted mean bitrate over media played so far.
    double mean_bitrate_so_far_kbps() const;
    /// Sum over played media of the per-segment visual quality q * duration.
    double vqi_weighted_sum(double vqi_k = kDefaultVqiK) const;
    double downloaded_kbit() const;

    /// Completed session; only valid when finished().
    SimResult result() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot simulation of a full session.
SimResult simulate_session(const VideoManifest& manifest,
                           const BandwidthTrace& trace, const AbrPolicy& policy,
                           const BufferConfig& cfg, std::uint64_t seed,
                           const std::string& session_id = "sim");

/// Synthetic ground-truth label weights: base score
/// clamp01(w0 + w1*nVQI - w2*stall_ratio - w3*log1p(stall_count) - w4*nLoad)
/// where nVQI = (VQI-1)/4 and nLoad = min(1, loading/f1_cap_s).
struct OracleConfig {
    double w0 = 0.2;
    double w1 = 0.8;
    double w2 = 1.0;
    double w3 = 0.15;
    double w4 = 0.1;
    double f1_cap_s = 10.0;
    double vqi_k = kDefaultVqiK;
};

void validate_oracle_config(const OracleConfig& cfg);

/// Deterministic synthetic MOS in [0,1] with seeded Gaussian noise.
double oracle_qoe(const StreamingSession& s, const OracleConfig& cfg,
                  double noise_sigma, std::uint64_t seed);

struct DatasetConfig {
    int per_cell = 6;
    OracleConfig oracle;
    double noise_sigma = 0.05;
    BufferConfig buffer;
    double replicate_jitter = 0.15;  // bandwidth jitter for replicates > 0
};

/// policies x traces x per_cell labeled sessions, deterministically ordered
/// by (policy, trace, replicate). Simulation aborts are reported per cell.
std::vector<LabeledSession> generate_dataset(
    const std::vector<VideoManifest>& manifests,
    const std::vector<BandwidthTrace>& traces,
    const std::vector<AbrPolicy>& policies, const DatasetConfig& cfg,
    std::uint64_t seed);

}  // namespace qoe
