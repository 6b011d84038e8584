#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "decomcam/attributes.hpp"
#include "decomcam/error.hpp"
#include "decomcam/localization.hpp"

namespace decomcam {

/// One CSV line: method, metric, stratum (or rank), value.
struct ReportRow {
    std::string method;
    std::string metric;
    std::string stratum;
    std::string value;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Fixed six decimals so reports compare byte-for-byte.
inline std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline const char* csv_header = "method,metric,stratum,value";

inline std::string render_csv(const std::vector<ReportRow>& rows) {
    std::string out = std::string(csv_header) + "\n";
    for (const auto& r : rows)
        out += csv_field(r.method) + "," + csv_field(r.metric) + "," + csv_field(r.stratum) + "," +
               csv_field(r.value) + "\n";
    return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw io_error("failed writing '" + path + "'");
}

inline std::string render_jsonl(const std::vector<nlohmann::json>& lines) {
    std::string out;
    for (const auto& j : lines) out += j.dump() + "\n";
    return out;
}

/// Headline numbers of the original evaluation (percent scale), attached to
/// reports for comparison only.
inline std::vector<ReportRow> paper_reference_rows(const std::string& suite) {
    const std::string m = "paper_reference";
    if (suite == "loc")
        return {{m, "MaxBoxAccV2", "ImageNetV2/RN50x4", "57.01"},
                {m, "PointingGame", "PascalVOC", "86.86"}};
    if (suite == "causal")
        return {{m, "KAM", "all", "52.67"},
                {m, "RAM", "all", "12.87"},
                {m, "Overall", "all", "39.80"},
                {m, "RuntimeSeconds", "all", "0.182"}};
    if (suite == "attr")
        return {{m, "HitRate_strict", "1", "67.17"},
                {m, "HitRate_pointing", "1", "100.00"},
                {m, "AttributeHitFrequency", "aeroplane/body", "0.60"},
                {m, "AttributeHitFrequency", "aeroplane/ster", "0.22"}};
    return {};
}

/// One line of an annotation file.
struct Annotation {
    std::size_t line = 0;
    std::string id;
    std::string image;      // PNG path, or "planted:<seed>" for the synthetic suite
    std::string class_name;
    std::string concept_id; // defaults to class_name
    std::vector<AttributeBox> boxes;
    std::string stratum = "all";
    std::optional<std::string> saliency; // precomputed saliency PNG
    std::optional<std::string> dump;     // DCAM dump for this sample

    std::vector<BBox> plain_boxes() const {
        std::vector<BBox> out;
        for (const auto& b : boxes) out.push_back(b.box);
        return out;
    }
};

namespace detail {

inline BBox parse_box(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4)
        throw schema_error("box must be an array [x1, y1, x2, y2]");
    for (const auto& v : j)
        if (!v.is_number()) throw schema_error("box coordinates must be numbers");
    BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) throw schema_error("box must satisfy x1 < x2 and y1 < y2");
    return b;
}

inline std::string required_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
        throw schema_error(std::string("missing or empty string field '") + key + "'");
    return j[key].get<std::string>();
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw schema_error(std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

inline Annotation parse_annotation_line(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw schema_error(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw schema_error("line must be a JSON object");
    Annotation a;
    a.id = required_string(j, "id");
    a.image = required_string(j, "image");
    a.class_name = required_string(j, "class");
    a.concept_id = optional_string(j, "concept").value_or(a.class_name);
    a.stratum = optional_string(j, "stratum").value_or("all");
    a.saliency = optional_string(j, "saliency");
    a.dump = optional_string(j, "dump");
    if (!j.contains("boxes") || !j["boxes"].is_array() || j["boxes"].empty())
        throw schema_error("'boxes' must be a nonempty array");
    for (const auto& b : j["boxes"]) {
        if (b.is_object()) {
            if (!b.contains("box")) throw schema_error("box object lacks 'box'");
            a.boxes.push_back({parse_box(b["box"]), optional_string(b, "attribute").value_or("")});
        } else {
            a.boxes.push_back({parse_box(b), ""});
        }
    }
    return a;
}

} // namespace detail

/// JSON-lines annotations. Blank lines are skipped. Every offending line is
/// listed in the thrown schema_error.
inline std::vector<Annotation> parse_annotations(std::istream& in, const std::string& source = "annotations") {
    std::vector<Annotation> out;
    std::vector<std::string> problems;
    std::set<std::string> ids;
    std::string text;
    for (std::size_t line = 1; std::getline(in, text); ++line) {
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            Annotation a = detail::parse_annotation_line(text);
            a.line = line;
            if (!ids.insert(a.id).second) throw schema_error("duplicate id '" + a.id + "'");
            out.push_back(std::move(a));
        } catch (const schema_error& e) {
            problems.push_back(source + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " invalid annotation line(s)";
        for (const auto& p : problems) msg += "\n  " + p;
        throw schema_error(msg);
    }
    if (out.empty()) throw schema_error(source + ": no samples");
    return out;
}

inline std::vector<Annotation> load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open annotation file '" + path + "'");
    return parse_annotations(in, path);
}

} // namespace decomcam
