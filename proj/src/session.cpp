#include "qoe/session.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace qoe {

using nlohmann::json;

double StreamingSession::media_duration_s() const {
    double total = 0.0;
    for (const auto& seg : segments) total += seg.duration_s;
    return total;
}

double StreamingSession::wall_clock_duration_s() const {
    double stall_total = 0.0;
    for (const auto& st : stalls) stall_total += st.duration_s;
    return initial_loading_time_s + media_duration_s() + stall_total;
}

std::vector<Violation> validate_session(const StreamingSession& s) {
    std::vector<Violation> out;
    auto bad = [&out](std::string field, std::string msg) {
        out.push_back({std::move(field), std::move(msg)});
    };

    if (s.segments.empty()) bad("segments", "at least one segment required");
    for (std::size_t i = 0; i < s.segments.size(); ++i) {
        const Segment& seg = s.segments[i];
        const std::string at = "segments[" + std::to_string(i) + "].";
        if (!(seg.duration_s > 0.0)) bad(at + "duration_s", "must be > 0");
        if (!(seg.bitrate_kbps > 0.0)) bad(at + "bitrate_kbps", "must be > 0");
        if (seg.width_px <= 0) bad(at + "width_px", "must be > 0");
        if (seg.height_px <= 0) bad(at + "height_px", "must be > 0");
        if (seg.quality_layer < 0) bad(at + "quality_layer", "must be >= 0");
    }

    if (s.initial_loading_time_s < 0.0)
        bad("initial_loading_time_s", "must be >= 0");
    if (!(s.framerate_fps > 0.0)) bad("framerate_fps", "must be > 0");
    if (s.device_width_px <= 0) bad("device_width_px", "must be > 0");
    if (s.device_height_px <= 0) bad("device_height_px", "must be > 0");

    const double media = s.media_duration_s();
    for (std::size_t i = 0; i < s.stalls.size(); ++i) {
        const StallEvent& st = s.stalls[i];
        const std::string at = "stalls[" + std::to_string(i) + "].";
        if (st.start_media_time_s < 0.0) bad(at + "start_media_time_s", "must be >= 0");
        if (!(st.duration_s > 0.0)) bad(at + "duration_s", "must be > 0");
        if (st.start_media_time_s > media)
            bad(at + "start_media_time_s", "beyond media duration");
        if (i + 1 < s.stalls.size()) {
            const StallEvent& next = s.stalls[i + 1];
            if (next.start_media_time_s < st.start_media_time_s)
                bad("stalls", "events not sorted by start_media_time_s");
            else if (st.start_media_time_s + st.duration_s > next.start_media_time_s)
                bad("stalls", "non-overlapping invariant violated at index " +
                                  std::to_string(i));
        }
    }
    return out;
}

namespace {

double require_number(const json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw ParseError(line, std::string("missing or non-numeric key '") + key + "'");
    return obj[key].get<double>();
}

int require_int(const json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key) || !obj[key].is_number_integer())
        throw ParseError(line, std::string("missing or non-integer key '") + key + "'");
    return obj[key].get<int>();
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key) || !obj[key].is_string())
        throw ParseError(line, std::string("missing or non-string key '") + key + "'");
    return obj[key].get<std::string>();
}

LabeledSession session_from_json(const json& obj, std::size_t line) {
    LabeledSession ls;
    StreamingSession& s = ls.session;
    s.session_id = require_string(obj, "session_id", line);
    s.initial_loading_time_s = require_number(obj, "initial_loading_time_s", line);
    s.framerate_fps = require_number(obj, "framerate_fps", line);
    s.device_width_px = require_int(obj, "device_width_px", line);
    s.device_height_px = require_int(obj, "device_height_px", line);

    if (!obj.contains("segments") || !obj["segments"].is_array())
        throw ParseError(line, "missing or non-array key 'segments'");
    for (const auto& seg_json : obj["segments"]) {
        Segment seg;
        seg.index = require_int(seg_json, "index", line);
        seg.duration_s = require_number(seg_json, "duration_s", line);
        seg.bitrate_kbps = require_number(seg_json, "bitrate_kbps", line);
        seg.width_px = require_int(seg_json, "width_px", line);
        seg.height_px = require_int(seg_json, "height_px", line);
        seg.quality_layer = require_int(seg_json, "quality_layer", line);
        s.segments.push_back(seg);
    }

    if (!obj.contains("stalls") || !obj["stalls"].is_array())
        throw ParseError(line, "missing or non-array key 'stalls'");
    for (const auto& st_json : obj["stalls"]) {
        StallEvent st;
        st.start_media_time_s = require_number(st_json, "start_media_time_s", line);
        st.duration_s = require_number(st_json, "duration_s", line);
        s.stalls.push_back(st);
    }

    if (obj.contains("abr_id") && obj["abr_id"].is_string())
        s.abr_id = obj["abr_id"].get<std::string>();
    if (obj.contains("trace_id") && obj["trace_id"].is_string())
        s.trace_id = obj["trace_id"].get<std::string>();

    if (obj.contains("mos_normalized")) {
        if (!obj["mos_normalized"].is_number())
            throw ParseError(line, "non-numeric key 'mos_normalized'");
        ls.mos_normalized = obj["mos_normalized"].get<double>();
    }

    auto violations = validate_session(s);
    if (ls.mos_normalized &&
        (*ls.mos_normalized < 0.0 || *ls.mos_normalized > 1.0))
        violations.push_back({"mos_normalized", "outside [0,1]"});
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return ls;
}

json session_to_json(const LabeledSession& ls) {
    const StreamingSession& s = ls.session;
    json obj;
    obj["session_id"] = s.session_id;
    obj["initial_loading_time_s"] = s.initial_loading_time_s;
    obj["framerate_fps"] = s.framerate_fps;
    obj["device_width_px"] = s.device_width_px;
    obj["device_height_px"] = s.device_height_px;
    obj["segments"] = json::array();
    for (const auto& seg : s.segments) {
        obj["segments"].push_back({{"index", seg.index},
                                   {"duration_s", seg.duration_s},
                                   {"bitrate_kbps", seg.bitrate_kbps},
                                   {"width_px", seg.width_px},
                                   {"height_px", seg.height_px},
                                   {"quality_layer", seg.quality_layer}});
    }
    obj["stalls"] = json::array();
    for (const auto& st : s.stalls) {
        obj["stalls"].push_back({{"start_media_time_s", st.start_media_time_s},
                                 {"duration_s", st.duration_s}});
    }
    if (!s.abr_id.empty()) obj["abr_id"] = s.abr_id;
    if (!s.trace_id.empty()) obj["trace_id"] = s.trace_id;
    if (ls.mos_normalized) obj["mos_normalized"] = *ls.mos_normalized;
    return obj;
}

}  // namespace

std::vector<LabeledSession> parse_session_log(const std::string& bytes) {
    std::vector<LabeledSession> out;
    std::istringstream in(bytes);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(lineno, e.what());
        }
        if (!obj.is_object()) throw ParseError(lineno, "expected a JSON object");
        out.push_back(session_from_json(obj, lineno));
    }
    return out;
}

std::string serialize_session_log(const std::vector<LabeledSession>& sessions) {
    std::string out;
    for (const auto& ls : sessions) {
        out += session_to_json(ls).dump();
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::vector<LabeledSession> import_subjective_csv(const std::string& bytes,
                                                  const CsvColumnMap& mapping,
                                                  double scale_max) {
    if (!(scale_max > 0.0)) throw ConfigError("scale_max must be > 0");

    static const char* kRequired[] = {"mos",           "duration_s",
                                      "initial_loading_s", "stall_count",
                                      "total_stall_s", "mean_bitrate_kbps",
                                      "framerate_fps"};

    std::istringstream in(bytes);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw ParseError(1, "empty CSV: header row required");
    const auto header = split_csv_line(header_line);

    auto column_of = [&](const std::string& field) -> std::optional<std::size_t> {
        auto it = mapping.find(field);
        if (it == mapping.end()) return std::nullopt;
        auto pos = std::find(header.begin(), header.end(), it->second);
        if (pos == header.end())
            throw ConfigError("mapped column '" + it->second + "' for field '" +
                              field + "' not found in CSV header");
        return static_cast<std::size_t>(pos - header.begin());
    };

    std::map<std::string, std::size_t> col;
    for (const char* field : kRequired) {
        auto c = column_of(field);
        if (!c) throw ConfigError(std::string("mapping missing required field '") +
                                  field + "'");
        col[field] = *c;
    }
    const auto id_col = column_of("session_id");
    const auto last_stall_col = column_of("last_stall_start_s");
    const auto width_col = column_of("width_px");
    const auto height_col = column_of("height_px");
    const auto dev_w_col = column_of("device_width_px");
    const auto dev_h_col = column_of("device_height_px");
    const auto layer_col = column_of("quality_layer");

    std::vector<LabeledSession> out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto fields = split_csv_line(line);
        auto cell = [&](std::size_t c) -> const std::string& {
            if (c >= fields.size())
                throw ParseError(lineno, "row has fewer columns than header");
            return fields[c];
        };
        auto num = [&](std::size_t c) -> double {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell(c), &pos);
                if (pos != cell(c).size())
                    throw std::invalid_argument("trailing characters");
                return v;
            } catch (const std::exception&) {
                throw ParseError(lineno, "non-numeric value '" + cell(c) +
                                             "' in column " + std::to_string(c + 1));
            }
        };

        const double mos_raw = num(col["mos"]);
        if (mos_raw < 0.0 || mos_raw > scale_max)
            throw DataError("line " + std::to_string(lineno) + ": MOS " +
                            std::to_string(mos_raw) + " outside [0, " +
                            std::to_string(scale_max) + "]");

        LabeledSession ls;
        StreamingSession& s = ls.session;
        ls.mos_normalized = mos_raw / scale_max;
        s.session_id = id_col ? cell(*id_col)
                              : "csv-row-" + std::to_string(lineno - 1);
        const double duration = num(col["duration_s"]);
        s.initial_loading_time_s = num(col["initial_loading_s"]);
        s.framerate_fps = num(col["framerate_fps"]);
        s.device_width_px = dev_w_col ? static_cast<int>(num(*dev_w_col)) : 1920;
        s.device_height_px = dev_h_col ? static_cast<int>(num(*dev_h_col)) : 1080;

        Segment seg;
        seg.index = 0;
        seg.duration_s = duration;
        seg.bitrate_kbps = num(col["mean_bitrate_kbps"]);
        seg.width_px = width_col ? static_cast<int>(num(*width_col)) : 1920;
        seg.height_px = height_col ? static_cast<int>(num(*height_col)) : 1080;
        seg.quality_layer = layer_col ? static_cast<int>(num(*layer_col)) : 0;
        s.segments.push_back(seg);

        const double stall_count_raw = num(col["stall_count"]);
        const int stall_count = static_cast<int>(std::llround(stall_count_raw));
        const double total_stall = num(col["total_stall_s"]);
        if (stall_count > 0 && total_stall > 0.0) {
            // Aggregate columns carry no per-event timing, so events are
            // spread evenly; an explicit last-stall column anchors the tail.
            const double each = total_stall / stall_count;
            const double last_start =
                last_stall_col ? num(*last_stall_col)
                               : duration * stall_count / (stall_count + 1.0);
            for (int i = 0; i < stall_count; ++i) {
                StallEvent st;
                st.start_media_time_s = last_start * (i + 1) / stall_count;
                st.duration_s = each;
                s.stalls.push_back(st);
            }
        }

        auto violations = validate_session(s);
        if (!violations.empty()) {
            for (auto& v : violations)
                v.message += " (CSV line " + std::to_string(lineno) + ")";
            throw ValidationError(std::move(violations));
        }
        out.push_back(std::move(ls));
    }
    return out;
}

}  // namespace qoe
