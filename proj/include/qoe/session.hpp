#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qoe/error.hpp"

namespace qoe {

/// One downloaded media segment of a HAS playback session.
struct Segment {
    int index = 0;
    double duration_s = 0.0;
    double bitrate_kbps = 0.0;
    int width_px = 0;
    int height_px = 0;
    int quality_layer = 0;  // 0 = lowest representation
};

/// A playback interruption. start_media_time_s sits on the media timeline
/// (stall-free playback clock); duration_s is the wall-clock length of the
/// interruption.
struct StallEvent {
    double start_media_time_s = 0.0;
    double duration_s = 0.0;
};

/// One HAS playback session: the unit of ingestion, feature extraction and
/// simulation. Immutable by convention once constructed.
struct StreamingSession {
    std::string session_id;
    double initial_loading_time_s = 0.0;
    std::vector<Segment> segments;
    std::vector<StallEvent> stalls;
    double framerate_fps = 0.0;
    int device_width_px = 0;
    int device_height_px = 0;
    std::string abr_id;
    std::string trace_id;

    /// Sum of segment durations (stall-free playback length).
    double media_duration_s() const;

    /// media + initial loading + stall time.
    double wall_clock_duration_s() const;
};

/// Session plus its subjective label. Sessions ingested without a label keep
/// mos_normalized empty, distinguishable from a genuine 0 score.
struct LabeledSession {
    StreamingSession session;
    std::optional<double> mos_normalized;
};

/// Checks every typed invariant and returns all violations (empty = ok).
std::vector<Violation> validate_session(const StreamingSession& s);

/// Parses the JSON-lines session log format. Throws ParseError with the
/// offending line number on malformed input and ValidationError when a
/// schema-valid session breaks an invariant. Order preserved.
std::vector<LabeledSession> parse_session_log(const std::string& bytes);

/// Inverse of parse_session_log; emits one JSON object per line.
std::string serialize_session_log(const std::vector<LabeledSession>& sessions);

/// Column-name mapping for the subjective-database CSV adapter.
/// Required fields: mos, duration_s, initial_loading_s, stall_count,
/// total_stall_s, mean_bitrate_kbps, framerate_fps.
/// Optional: session_id, last_stall_start_s, width_px, height_px,
/// device_width_px, device_height_px, quality_layer.
using CsvColumnMap = std::map<std::string, std::string>;

/// Imports a subjective-study CSV export. Raw MOS values are divided by
/// scale_max into [0,1]. Rows become single-segment sessions whose stalls
/// are synthesized from the aggregate columns (count, total duration,
/// optional last-stall start); see the README for the placement rule.
std::vector<LabeledSession> import_subjective_csv(const std::string& bytes,
                                                  const CsvColumnMap& mapping,
                                                  double scale_max);

}  // namespace qoe
