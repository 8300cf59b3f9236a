#include "qoe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "qoe/rng.hpp"

namespace qoe {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-12;
constexpr double kKbitEps = 1e-9;
}  // namespace

double BandwidthTrace::bandwidth_at(double t) const {
    double bw = samples.front().kbps;
    for (const auto& s : samples) {
        if (s.time_s > t) break;
        bw = s.kbps;
    }
    return bw;
}

double BandwidthTrace::integral_kbit(double t0, double t1) const {
    if (t1 <= t0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double seg_start = samples[i].time_s;
        const double seg_end =
            i + 1 < samples.size() ? samples[i + 1].time_s : kInf;
        const double lo = std::max(t0, seg_start);
        const double hi = std::min(t1, seg_end);
        if (hi > lo) total += samples[i].kbps * (hi - lo);
        if (seg_end >= t1) break;
    }
    return total;
}

double BandwidthTrace::time_to_transfer(double t0, double kbit) const {
    if (kbit <= 0.0) return t0;
    double need = kbit;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double seg_start = samples[i].time_s;
        const double seg_end =
            i + 1 < samples.size() ? samples[i + 1].time_s : kInf;
        if (seg_end <= t0) continue;
        const double lo = std::max(t0, seg_start);
        const double rate = samples[i].kbps;
        if (seg_end == kInf) {
            if (rate <= 0.0) return kInf;
            return lo + need / rate;
        }
        const double capacity = rate * (seg_end - lo);
        if (capacity >= need) return lo + need / rate;
        need -= capacity;
    }
    return kInf;
}

BandwidthTrace BandwidthTrace::scaled(double factor) const {
    BandwidthTrace out = *this;
    for (auto& s : out.samples) s.kbps *= factor;
    return out;
}

BandwidthTrace BandwidthTrace::clipped(double cap_kbps) const {
    BandwidthTrace out = *this;
    for (auto& s : out.samples) s.kbps = std::min(s.kbps, cap_kbps);
    return out;
}

void validate_trace(const BandwidthTrace& trace) {
    if (trace.samples.empty()) throw DataError("trace has no samples");
    if (trace.samples.front().time_s != 0.0)
        throw DataError("trace must start at time 0");
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        if (trace.samples[i].kbps < 0.0)
            throw DataError("trace bandwidth must be >= 0");
        if (i > 0 && trace.samples[i].time_s <= trace.samples[i - 1].time_s)
            throw DataError("trace times must be strictly increasing");
    }
}

const std::vector<BandwidthTrace>& builtin_traces() {
    static const std::vector<BandwidthTrace> traces = [] {
        std::vector<BandwidthTrace> out;
        auto constant = [](std::string id, double kbps) {
            return BandwidthTrace{std::move(id), {{0.0, kbps}}};
        };
        out.push_back(constant("const_low", 600));
        out.push_back(constant("const_mid", 1800));
        out.push_back(constant("const_high", 6000));
        out.push_back({"step_up", {{0, 800}, {6, 4000}}});
        out.push_back({"step_down", {{0, 4000}, {6, 800}}});
        {
            BandwidthTrace t{"ramp_up", {}};
            for (int k = 0; k < 8; ++k)
                t.samples.push_back({2.0 * k, 600.0 + 450.0 * k});
            out.push_back(std::move(t));
        }
        {
            BandwidthTrace t{"ramp_down", {}};
            for (int k = 0; k < 8; ++k)
                t.samples.push_back({2.0 * k, 3750.0 - 450.0 * k});
            out.push_back(std::move(t));
        }
        out.push_back({"periodic_dip",
                       {{0, 3200}, {5, 400}, {7, 3200}, {12, 400}, {14, 3200},
                        {19, 400}, {21, 3200}}});
        {
            BandwidthTrace t{"spiky", {}};
            for (int k = 0; k < 10; ++k)
                t.samples.push_back({2.0 * k, k % 2 == 0 ? 1200.0 : 4800.0});
            out.push_back(std::move(t));
        }
        out.push_back({"outage", {{0, 2500}, {6, 0}, {9, 2500}}});
        {
            BandwidthTrace t{"gentle_wave", {}};
            for (int k = 0; k < 8; ++k)
                t.samples.push_back({3.0 * k, k % 2 == 0 ? 2000.0 : 2800.0});
            out.push_back(std::move(t));
        }
        out.push_back({"congested", {{0, 700}, {4, 350}, {8, 700}}});
        out.push_back(constant("premium", 8000));
        for (const auto& t : out) validate_trace(t);
        return out;
    }();
    return traces;
}

BandwidthTrace trace_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(1, e.what());
    }
    BandwidthTrace trace;
    if (!obj.contains("trace_id") || !obj["trace_id"].is_string())
        throw DataError("trace JSON missing 'trace_id'");
    trace.trace_id = obj["trace_id"].get<std::string>();
    if (!obj.contains("samples") || !obj["samples"].is_array())
        throw DataError("trace JSON missing 'samples'");
    for (const auto& s : obj["samples"]) {
        if (!s.contains("time_s") || !s.contains("kbps"))
            throw DataError("trace sample needs time_s and kbps");
        trace.samples.push_back(
            {s["time_s"].get<double>(), s["kbps"].get<double>()});
    }
    validate_trace(trace);
    return trace;
}

std::string trace_to_json(const BandwidthTrace& trace) {
    json obj;
    obj["trace_id"] = trace.trace_id;
    obj["samples"] = json::array();
    for (const auto& s : trace.samples)
        obj["samples"].push_back({{"time_s", s.time_s}, {"kbps", s.kbps}});
    return obj.dump(2);
}

const std::vector<AbrPolicy>& builtin_policies() {
    static const std::vector<AbrPolicy> policies = {
        {"rate", AbrKind::rate_based, 1.0, 0.4, 2.0, 8.0},
        {"buffer", AbrKind::buffer_based, 1.0, 0.4, 2.0, 8.0},
        {"hybrid", AbrKind::hybrid, 0.9, 0.4, 2.0, 8.0},
        {"conservative", AbrKind::conservative_rate, 0.7, 0.4, 2.0, 8.0},
        {"aggressive", AbrKind::aggressive_rate, 1.15, 0.4, 2.0, 8.0},
        {"oracle", AbrKind::oracle_capped, 1.0, 0.4, 2.0, 8.0},
    };
    return policies;
}

void validate_manifest(const VideoManifest& manifest) {
    if (manifest.segment_count < 1) throw DataError("manifest needs segments");
    if (!(manifest.segment_duration_s > 0.0))
        throw DataError("segment duration must be > 0");
    if (!(manifest.framerate_fps > 0.0))
        throw DataError("framerate must be > 0");
    if (manifest.representations.empty())
        throw DataError("manifest needs representations");
    for (std::size_t i = 0; i < manifest.representations.size(); ++i) {
        const auto& rep = manifest.representations[i];
        if (rep.quality_layer != static_cast<int>(i))
            throw DataError("representation layers must be 0..n-1 in order");
        if (i > 0 && rep.bitrate_kbps <=
                         manifest.representations[i - 1].bitrate_kbps)
            throw DataError("representation bitrates must increase with layer");
    }
}

VideoManifest default_manifest() {
    VideoManifest m;
    m.segment_count = 13;
    m.segment_duration_s = 1.0;
    m.framerate_fps = 30.0;
    m.representations = {{0, 400, 640, 360},
                         {1, 800, 854, 480},
                         {2, 1500, 1280, 720},
                         {3, 3000, 1920, 1080},
                         {4, 5000, 1920, 1080}};
    validate_manifest(m);
    return m;
}

// ---------------------------------------------------------------------------
// SessionSim
// ---------------------------------------------------------------------------

struct SessionSim::Impl {
    VideoManifest manifest;
    BandwidthTrace trace;  // jitter already applied
    AbrPolicy policy;
    BufferConfig cfg;
    std::string session_id;
    std::uint64_t seed = 0;

    double media_total = 0.0;
    double cap_kbps = kInf;

    double now = 0.0;
    int next_segment = 0;           // index currently downloading
    double remaining_kbit = 0.0;
    double current_kbit = 0.0;
    double down_start = 0.0;
    bool downloading = false;
    double downloaded_kbit = 0.0;
    std::vector<Segment> segments;  // chosen descriptors, filled as downloads start

    double last_throughput = 0.0;
    double ewma_throughput = 0.0;
    bool have_throughput = false;
    double oracle_cap = 0.0;

    bool started = false;
    double initial_loading = 0.0;
    double buffer_s = 0.0;
    double position = 0.0;

    bool stalled = false;
    double stall_start_wall = 0.0;
    double pending_stall_media = 0.0;
    bool pending_merges = false;
    std::vector<StallEvent> stalls;

    bool done = false;
    double wall_end = 0.0;

    double effective_bw(double t) const {
        return std::min(trace.bandwidth_at(t), cap_kbps);
    }

    double next_trace_breakpoint(double t) const {
        for (const auto& s : trace.samples)
            if (s.time_s > t + kTimeEps) return s.time_s;
        return kInf;
    }

    int top_layer() const {
        return static_cast<int>(manifest.representations.size()) - 1;
    }

    int highest_layer_within(double budget_kbps) const {
        // Relative slack so a throughput measured one ulp under a tier
        // boundary still clears it.
        const double budget = budget_kbps * (1.0 + 1e-9);
        int layer = 0;
        for (const auto& rep : manifest.representations)
            if (rep.bitrate_kbps <= budget) layer = rep.quality_layer;
        return layer;
    }

    int buffer_layer() const {
        if (buffer_s <= policy.reservoir_s) return 0;
        if (buffer_s >= policy.cushion_s) return top_layer();
        const double frac = (buffer_s - policy.reservoir_s) /
                            (policy.cushion_s - policy.reservoir_s);
        return static_cast<int>(frac * top_layer());
    }

    int choose_layer() const {
        switch (policy.kind) {
            case AbrKind::rate_based:
                return have_throughput
                           ? highest_layer_within(policy.safety * last_throughput)
                           : 0;
            case AbrKind::conservative_rate:
                return have_throughput
                           ? highest_layer_within(policy.safety * ewma_throughput)
                           : 0;
            case AbrKind::aggressive_rate:
                return have_throughput
                           ? highest_layer_within(policy.safety * last_throughput)
                           : 0;
            case AbrKind::buffer_based:
                return buffer_layer();
            case AbrKind::hybrid: {
                const int rate =
                    have_throughput
                        ? highest_layer_within(policy.safety * last_throughput)
                        : 0;
                return std::min(rate, buffer_layer());
            }
            case AbrKind::oracle_capped:
                return highest_layer_within(oracle_cap);
        }
        return 0;
    }

    void start_next_download() {
        if (next_segment >= manifest.segment_count) {
            downloading = false;
            return;
        }
        const int layer = choose_layer();
        const Representation& rep =
            manifest.representations[static_cast<std::size_t>(layer)];
        Segment seg;
        seg.index = next_segment;
        seg.duration_s = manifest.segment_duration_s;
        seg.bitrate_kbps = rep.bitrate_kbps;
        seg.width_px = rep.width_px;
        seg.height_px = rep.height_px;
        seg.quality_layer = rep.quality_layer;
        segments.push_back(seg);

        current_kbit = rep.bitrate_kbps * manifest.segment_duration_s;
        remaining_kbit = current_kbit;
        down_start = now;
        downloading = true;
    }

    void complete_segment() {
        const double elapsed = now - down_start;
        if (elapsed > 0.0) {
            const double observed = current_kbit / elapsed;
            ewma_throughput = have_throughput
                                  ? policy.ewma_alpha * observed +
                                        (1.0 - policy.ewma_alpha) * ewma_throughput
                                  : observed;
            last_throughput = observed;
            have_throughput = true;
        }
        remaining_kbit = 0.0;
        buffer_s += manifest.segment_duration_s;
        ++next_segment;
        const bool all_fetched = next_segment >= manifest.segment_count;

        const double startup_s =
            cfg.startup_threshold_segments * manifest.segment_duration_s;
        const double resume_s =
            cfg.resume_threshold_segments * manifest.segment_duration_s;
        if (!started) {
            if (buffer_s >= startup_s - kTimeEps || all_fetched) {
                started = true;
                initial_loading = now;
            }
        } else if (stalled) {
            if (buffer_s >= resume_s - kTimeEps || all_fetched) end_stall();
        }
        start_next_download();
    }

    void begin_stall() {
        stalled = true;
        stall_start_wall = now;
        pending_stall_media = position;
        // A stall whose start would fall inside the previous event's
        // interval on the media axis extends that event instead.
        pending_merges =
            !stalls.empty() &&
            stalls.back().start_media_time_s + stalls.back().duration_s >
                pending_stall_media;
    }

    void end_stall() {
        const double duration = now - stall_start_wall;
        stalled = false;
        if (duration <= 0.0) return;
        if (pending_merges)
            stalls.back().duration_s += duration;
        else
            stalls.push_back({pending_stall_media, duration});
    }

    void finish() {
        done = true;
        wall_end = now;
        position = media_total;
        buffer_s = 0.0;
    }

    void advance(double limit) {
        while (!done && now < limit - kTimeEps) {
            if (now > cfg.max_wall_time_s)
                throw SimulationAbort("session '" + session_id +
                                      "' exceeded max wall time (" +
                                      std::to_string(cfg.max_wall_time_s) + " s)");

            const double bw = effective_bw(now);
            const double span_end = std::min(limit, next_trace_breakpoint(now));

            double t_down = kInf;
            if (downloading)
                t_down = bw > 0.0 ? now + remaining_kbit / bw : kInf;

            double t_empty = kInf;
            const bool playing = started && !stalled;
            if (playing) t_empty = now + buffer_s;

            double next = std::min({span_end, t_down, t_empty});
            if (next == kInf) {
                // No pending event: idle until the wall-time budget trips.
                now = cfg.max_wall_time_s + 1.0;
                continue;
            }

            const double dt = next - now;
            if (dt > 0.0) {
                if (downloading) {
                    const double moved = std::min(remaining_kbit, bw * dt);
                    remaining_kbit -= moved;
                    downloaded_kbit += moved;
                }
                if (playing) {
                    buffer_s -= dt;
                    position += dt;
                }
            }
            now = next;

            // Deterministic processing order at equal timestamps: segment
            // completion first so a just-in-time arrival does not stall.
            if (downloading && remaining_kbit <= kKbitEps) complete_segment();

            if (started && !stalled && buffer_s <= kTimeEps) {
                buffer_s = 0.0;
                if (next_segment >= manifest.segment_count &&
                    !downloading) {
                    finish();
                } else if (position >= media_total - kTimeEps) {
                    finish();
                } else {
                    begin_stall();
                }
            }
        }
    }
};

SessionSim::SessionSim(VideoManifest manifest, BandwidthTrace trace,
                       AbrPolicy policy, BufferConfig cfg, std::uint64_t seed,
                       std::string session_id)
    : impl_(std::make_unique<Impl>()) {
    validate_manifest(manifest);
    validate_trace(trace);
    Impl& s = *impl_;
    s.manifest = std::move(manifest);
    s.trace = std::move(trace);
    s.policy = policy;
    s.cfg = cfg;
    s.session_id = std::move(session_id);
    s.seed = seed;
    s.media_total = s.manifest.segment_count * s.manifest.segment_duration_s;

    if (cfg.bandwidth_jitter > 0.0) {
        Rng rng(seed);
        for (auto& sample : s.trace.samples) {
            const double factor =
                1.0 + cfg.bandwidth_jitter * (2.0 * rng.uniform() - 1.0);
            sample.kbps = std::max(0.0, sample.kbps * factor);
        }
    }

    s.oracle_cap = s.trace.integral_kbit(0.0, s.media_total) / s.media_total;
    s.start_next_download();
}

SessionSim::~SessionSim() = default;
SessionSim::SessionSim(SessionSim&&) noexcept = default;
SessionSim& SessionSim::operator=(SessionSim&&) noexcept = default;

void SessionSim::set_bandwidth_cap(double cap_kbps) {
    impl_->cap_kbps = cap_kbps < 0.0 ? 0.0 : cap_kbps;
}

void SessionSim::advance_to(double wall_time_s) { impl_->advance(wall_time_s); }

void SessionSim::run_to_completion() {
    impl_->advance(kInf);
    if (!impl_->done)
        throw SimulationAbort("session '" + impl_->session_id +
                              "' did not finish within max wall time");
}

bool SessionSim::finished() const { return impl_->done; }
double SessionSim::wall_time_s() const {
    return impl_->done ? impl_->wall_end : impl_->now;
}
double SessionSim::media_position_s() const { return impl_->position; }
double SessionSim::media_duration_s() const { return impl_->media_total; }
bool SessionSim::playback_started() const { return impl_->started; }

double SessionSim::initial_loading_time_s() const {
    return impl_->started ? impl_->initial_loading : impl_->now;
}

std::vector<StallEvent> SessionSim::stalls_so_far() const {
    std::vector<StallEvent> out = impl_->stalls;
    if (impl_->stalled) {
        const double duration = impl_->now - impl_->stall_start_wall;
        if (duration > 0.0) {
            if (impl_->pending_merges)
                out.back().duration_s += duration;
            else
                out.push_back({impl_->pending_stall_media, duration});
        }
    }
    return out;
}

std::vector<Segment> SessionSim::segments_started() const {
    const Impl& s = *impl_;
    if (!s.started) return {};
    int count = static_cast<int>(s.position / s.manifest.segment_duration_s) + 1;
    count = std::min(count, s.manifest.segment_count);
    count = std::min(count, static_cast<int>(s.segments.size()));
    return std::vector<Segment>(s.segments.begin(), s.segments.begin() + count);
}

double SessionSim::mean_bitrate_so_far_kbps() const {
    const Impl& s = *impl_;
    if (s.position <= 0.0) return 0.0;
    double bit_seconds = 0.0;
    double played = s.position;
    for (const auto& seg : s.segments) {
        if (played <= 0.0) break;
        const double d = std::min(played, seg.duration_s);
        bit_seconds += seg.bitrate_kbps * d;
        played -= d;
    }
    return bit_seconds / s.position;
}

double SessionSim::vqi_weighted_sum(double vqi_k) const {
    const Impl& s = *impl_;
    const double device_pixels =
        static_cast<double>(s.cfg.device_width_px) * s.cfg.device_height_px;
    double sum = 0.0;
    double played = s.position;
    for (const auto& seg : s.segments) {
        if (played <= 0.0) break;
        const double d = std::min(played, seg.duration_s);
        const double ratio = std::min(
            1.0, static_cast<double>(seg.width_px) * seg.height_px / device_pixels);
        const double q =
            1.0 +
            4.0 * (1.0 - std::exp(-vqi_k * seg.bitrate_kbps * ratio / 1000.0));
        sum += q * d;
        played -= d;
    }
    return sum;
}

double SessionSim::downloaded_kbit() const { return impl_->downloaded_kbit; }

SimResult SessionSim::result() const {
    const Impl& s = *impl_;
    if (!s.done) throw DataError("session simulation still running");
    SimResult out;
    StreamingSession& sess = out.session;
    sess.session_id = s.session_id;
    sess.initial_loading_time_s = s.initial_loading;
    sess.segments = s.segments;
    sess.stalls = s.stalls;
    sess.framerate_fps = s.manifest.framerate_fps;
    sess.device_width_px = s.cfg.device_width_px;
    sess.device_height_px = s.cfg.device_height_px;
    sess.abr_id = s.policy.policy_id;
    sess.trace_id = s.trace.trace_id;
    out.wall_duration_s = s.wall_end;
    out.downloaded_kbit = s.downloaded_kbit;
    out.capacity_kbit = s.trace.integral_kbit(0.0, s.wall_end);
    return out;
}

SimResult simulate_session(const VideoManifest& manifest,
                           const BandwidthTrace& trace, const AbrPolicy& policy,
                           const BufferConfig& cfg, std::uint64_t seed,
                           const std::string& session_id) {
    SessionSim sim(manifest, trace, policy, cfg, seed, session_id);
    sim.run_to_completion();
    SimResult result = sim.result();
    const auto violations = validate_session(result.session);
    if (!violations.empty()) throw ValidationError(violations);
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic labels and dataset generation
// ---------------------------------------------------------------------------

void validate_oracle_config(const OracleConfig& cfg) {
    if (cfg.w0 + cfg.w1 <= 0.0)
        throw ConfigError("oracle weights force every label to 0");
    const double plausible_min =
        cfg.w0 - cfg.w2 - cfg.w3 * std::log1p(20.0) - cfg.w4;
    if (plausible_min >= 1.0)
        throw ConfigError("oracle weights force every label to 1");
    if (!(cfg.f1_cap_s > 0.0)) throw ConfigError("f1_cap_s must be > 0");
}

double oracle_qoe(const StreamingSession& s, const OracleConfig& cfg,
                  double noise_sigma, std::uint64_t seed) {
    validate_oracle_config(cfg);
    const FeatureVector f = extract_features(s, cfg.vqi_k);
    const double nvqi = (f.f10_visual_quality_index - 1.0) / 4.0;
    const double nload = std::min(1.0, f.f1_initial_loading_s / cfg.f1_cap_s);
    double base = cfg.w0 + cfg.w1 * nvqi - cfg.w2 * f.f5_stall_ratio -
                  cfg.w3 * std::log1p(f.f2_stall_count) - cfg.w4 * nload;
    base = std::clamp(base, 0.0, 1.0);
    if (noise_sigma > 0.0) {
        Rng rng(seed);
        base = std::clamp(base + noise_sigma * rng.normal(), 0.0, 1.0);
    }
    return base;
}

std::vector<LabeledSession> generate_dataset(
    const std::vector<VideoManifest>& manifests,
    const std::vector<BandwidthTrace>& traces,
    const std::vector<AbrPolicy>& policies, const DatasetConfig& cfg,
    std::uint64_t seed) {
    if (cfg.per_cell < 1) throw ConfigError("per_cell must be >= 1");
    if (manifests.empty() || traces.empty() || policies.empty())
        throw ConfigError("generate_dataset needs manifests, traces, policies");
    validate_oracle_config(cfg.oracle);

    std::vector<LabeledSession> out;
    out.reserve(policies.size() * traces.size() *
                static_cast<std::size_t>(cfg.per_cell));
    std::string failures;

    std::uint64_t cell_index = 0;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        for (std::size_t t = 0; t < traces.size(); ++t) {
            for (int r = 0; r < cfg.per_cell; ++r, ++cell_index) {
                const VideoManifest& manifest =
                    manifests[cell_index % manifests.size()];
                const std::uint64_t cell_seed = derive_seed(seed, cell_index);
                BufferConfig buffer = cfg.buffer;
                // Replicate 0 runs the pristine trace; later replicates add
                // seeded bandwidth jitter so cells are not exact copies.
                buffer.bandwidth_jitter = r == 0 ? 0.0 : cfg.replicate_jitter;
                const std::string id = policies[p].policy_id + "-" +
                                       traces[t].trace_id + "-r" +
                                       std::to_string(r);
                try {
                    SimResult sim = simulate_session(manifest, traces[t],
                                                     policies[p], buffer,
                                                     cell_seed, id);
                    LabeledSession ls;
                    ls.mos_normalized =
                        oracle_qoe(sim.session, cfg.oracle, cfg.noise_sigma,
                                   derive_seed(cell_seed, 1));
                    ls.session = std::move(sim.session);
                    out.push_back(std::move(ls));
                } catch (const Error& e) {
                    failures += "\n  cell " + id + ": " + e.what();
                }
            }
        }
    }
    if (!failures.empty())
        throw DataError("generate_dataset failures:" + failures);
    return out;
}

}  // namespace qoe
