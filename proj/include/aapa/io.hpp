#pragma once

#include <aapa/anchoring.hpp>
#include <aapa/evaluation.hpp>
#include <aapa/simulator.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Plain-text record formats (one record per line, whitespace-separated,
// blank lines and #-comments ignored):
//
//   detections   frame class x y w h
//   actions      frame verb child parent
//   annotations  frame class x y w h id label
//   predictions  frame symbol class x y w h status
//   registry     attach_verb detach_verb
//
// The class token is shape[:size[:material]] with empty trailing fields
// omitted; an empty middle field is kept (cube::rubber). Numbers use the
// shortest representation that round-trips exactly, so serialize/parse is
// lossless and byte-deterministic. Scripts and reports use JSON.

namespace aapa {

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw std::invalid_argument("malformed " + what + ": '" + std::string(tok) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view tok, const std::string& what) {
    std::int64_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw std::invalid_argument("malformed " + what + ": '" + std::string(tok) + "'");
    return v;
}

inline int parse_frame(std::string_view tok, const std::string& where) {
    const std::int64_t v = parse_int(tok, where + " frame");
    if (v < 0 || v > std::numeric_limits<int>::max())
        throw std::invalid_argument(where + ": frame out of range: " + std::string(tok));
    return static_cast<int>(v);
}

/// Calls fn(line_no, tokens) for every non-blank, non-comment line.
template <typename Fn>
void for_each_record(const std::string& text, Fn&& fn) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream fields(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (fields >> tok) tokens.push_back(tok);
        if (tokens.empty() || tokens.front().front() == '#') continue;
        fn(line_no, tokens);
    }
}

inline void require_fields(const std::vector<std::string>& tokens, std::size_t expected,
                           std::size_t line_no, const std::string& what) {
    if (tokens.size() != expected)
        throw std::invalid_argument(what + " line " + std::to_string(line_no) + ": expected " +
                                    std::to_string(expected) + " fields, found " +
                                    std::to_string(tokens.size()));
}

inline void require_token_field(const std::string& value, const std::string& what) {
    if (value.find(':') != std::string::npos ||
        value.find_first_of(" \t\r\n") != std::string::npos)
        throw std::invalid_argument(what + " may not contain ':' or whitespace: '" + value + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Class and status tokens

inline std::string size_token(SizeClass s) {
    switch (s) {
        case SizeClass::unspecified: return "";
        case SizeClass::small: return "small";
        case SizeClass::medium: return "medium";
        case SizeClass::large: return "large";
    }
    throw std::logic_error("unhandled size class");
}

inline SizeClass size_from_token(std::string_view tok) {
    if (tok.empty()) return SizeClass::unspecified;
    if (tok == "small") return SizeClass::small;
    if (tok == "medium") return SizeClass::medium;
    if (tok == "large") return SizeClass::large;
    throw std::invalid_argument("unknown size class: '" + std::string(tok) + "'");
}

inline std::string class_token(const ObjectClass& c) {
    if (c.shape.empty()) throw std::invalid_argument("object class needs a shape tag");
    detail::require_token_field(c.shape, "shape tag");
    if (!c.material.empty()) detail::require_token_field(c.material, "material tag");
    std::string out = c.shape;
    const std::string size = size_token(c.size_class);
    if (!c.material.empty())
        out += ":" + size + ":" + c.material;
    else if (!size.empty())
        out += ":" + size;
    return out;
}

inline ObjectClass parse_class_token(std::string_view tok) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t sep = tok.find(':', start);
        fields.emplace_back(tok.substr(start, sep - start));
        if (sep == std::string_view::npos) break;
        start = sep + 1;
    }
    if (fields.size() > 3 || fields.front().empty())
        throw std::invalid_argument("malformed class token: '" + std::string(tok) + "'");
    ObjectClass c;
    c.shape = fields[0];
    if (fields.size() > 1) c.size_class = size_from_token(fields[1]);
    if (fields.size() > 2) c.material = fields[2];
    return c;
}

inline std::string status_token(AnchorStatus s) {
    switch (s) {
        case AnchorStatus::visible: return "visible";
        case AnchorStatus::occluded: return "occluded";
        case AnchorStatus::attached_follow: return "attached-follow";
        case AnchorStatus::missing: return "missing";
    }
    throw std::logic_error("unhandled anchor status");
}

inline AnchorStatus status_from_token(std::string_view tok) {
    if (tok == "visible") return AnchorStatus::visible;
    if (tok == "occluded") return AnchorStatus::occluded;
    if (tok == "attached-follow") return AnchorStatus::attached_follow;
    if (tok == "missing") return AnchorStatus::missing;
    throw std::invalid_argument("unknown anchor status: '" + std::string(tok) + "'");
}

// ---------------------------------------------------------------------------
// Detection streams

inline std::string serialize_detections(const std::vector<Detection>& detections) {
    std::string out;
    for (const Detection& d : detections) {
        out += std::to_string(d.frame) + " " + class_token(d.object_class) + " " +
               detail::format_double(d.box.x) + " " + detail::format_double(d.box.y) + " " +
               detail::format_double(d.box.w) + " " + detail::format_double(d.box.h) + "\n";
    }
    return out;
}

inline std::vector<Detection> parse_detections(const std::string& text) {
    std::vector<Detection> out;
    detail::for_each_record(text, [&](std::size_t line_no, const std::vector<std::string>& t) {
        detail::require_fields(t, 6, line_no, "detections");
        Detection d;
        d.frame = detail::parse_frame(t[0], "detections line " + std::to_string(line_no));
        d.object_class = parse_class_token(t[1]);
        d.box = BoundingBox{detail::parse_double(t[2], "x"), detail::parse_double(t[3], "y"),
                            detail::parse_double(t[4], "w"), detail::parse_double(t[5], "h")};
        if (d.box.w <= 0.0 || d.box.h <= 0.0)
            throw std::invalid_argument("detections line " + std::to_string(line_no) +
                                        ": box extents must be positive");
        out.push_back(std::move(d));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Action streams

inline std::string serialize_actions(const std::vector<ActionEvent>& actions) {
    std::string out;
    for (const ActionEvent& a : actions) {
        detail::require_token_field(a.verb, "action verb");
        out += std::to_string(a.frame) + " " + a.verb + " " + std::to_string(a.child) + " " +
               std::to_string(a.parent) + "\n";
    }
    return out;
}

inline std::vector<ActionEvent> parse_actions(const std::string& text) {
    std::vector<ActionEvent> out;
    detail::for_each_record(text, [&](std::size_t line_no, const std::vector<std::string>& t) {
        detail::require_fields(t, 4, line_no, "actions");
        ActionEvent a;
        a.frame = detail::parse_frame(t[0], "actions line " + std::to_string(line_no));
        a.verb = t[1];
        a.child = detail::parse_int(t[2], "child symbol");
        a.parent = detail::parse_int(t[3], "parent symbol");
        out.push_back(std::move(a));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Ground-truth annotation streams

/// Parsed annotation file: dense per-frame boxes plus the per-object classes.
/// Every row of a frame repeats that frame's task label (the target's regime),
/// and the target is the unique snitch-shaped object.
struct AnnotationFile {
    std::vector<FrameAnnotation> frames;
    std::map<SymbolId, ObjectClass> classes;
    SymbolId target = -1;
};

inline AnnotationFile annotation_file_from_script(const ScenarioScript& script,
                                                  std::vector<FrameAnnotation> frames) {
    AnnotationFile file;
    file.frames = std::move(frames);
    for (const ScenarioObject& o : script.objects) file.classes[o.id] = o.object_class;
    file.target = script.target;
    return file;
}

inline std::string serialize_annotations(const AnnotationFile& file) {
    std::string out;
    for (std::size_t i = 0; i < file.frames.size(); ++i) {
        const FrameAnnotation& fr = file.frames[i];
        if (fr.frame != static_cast<int>(i))
            throw std::invalid_argument("annotation frames must be dense and ordered");
        const std::string label = to_string(fr.target_label);
        for (const auto& [id, box] : fr.boxes) {
            const auto cls = file.classes.find(id);
            if (cls == file.classes.end())
                throw std::invalid_argument("no class for annotated object " + std::to_string(id));
            out += std::to_string(fr.frame) + " " + class_token(cls->second) + " " +
                   detail::format_double(box.x) + " " + detail::format_double(box.y) + " " +
                   detail::format_double(box.w) + " " + detail::format_double(box.h) + " " +
                   std::to_string(id) + " " + label + "\n";
        }
    }
    return out;
}

inline AnnotationFile parse_annotations(const std::string& text) {
    AnnotationFile file;
    std::map<int, TaskLabel> labels;
    int max_frame = -1;
    struct Row {
        int frame;
        SymbolId id;
        BoundingBox box;
    };
    std::vector<Row> rows;

    detail::for_each_record(text, [&](std::size_t line_no, const std::vector<std::string>& t) {
        detail::require_fields(t, 8, line_no, "annotations");
        const std::string where = "annotations line " + std::to_string(line_no);
        const int frame = detail::parse_frame(t[0], where);
        const ObjectClass cls = parse_class_token(t[1]);
        const BoundingBox box{detail::parse_double(t[2], "x"), detail::parse_double(t[3], "y"),
                              detail::parse_double(t[4], "w"), detail::parse_double(t[5], "h")};
        if (box.w <= 0.0 || box.h <= 0.0)
            throw std::invalid_argument(where + ": box extents must be positive");
        const SymbolId id = detail::parse_int(t[6], "object id");
        const TaskLabel label = task_label_from_string(t[7]);

        const auto known = file.classes.find(id);
        if (known == file.classes.end())
            file.classes[id] = cls;
        else if (!(known->second == cls))
            throw std::invalid_argument(where + ": object " + std::to_string(id) +
                                        " changes class mid-stream");
        const auto seen = labels.find(frame);
        if (seen == labels.end())
            labels[frame] = label;
        else if (seen->second != label)
            throw std::invalid_argument(where + ": conflicting task labels for frame " +
                                        std::to_string(frame));
        rows.push_back({frame, id, box});
        max_frame = std::max(max_frame, frame);
    });

    file.frames.resize(static_cast<std::size_t>(max_frame + 1));
    for (int f = 0; f <= max_frame; ++f) {
        file.frames[static_cast<std::size_t>(f)].frame = f;
        const auto label = labels.find(f);
        if (label != labels.end())
            file.frames[static_cast<std::size_t>(f)].target_label = label->second;
    }
    for (const Row& row : rows) {
        auto& boxes = file.frames[static_cast<std::size_t>(row.frame)].boxes;
        if (!boxes.emplace(row.id, row.box).second)
            throw std::invalid_argument("object " + std::to_string(row.id) +
                                        " annotated twice in frame " + std::to_string(row.frame));
    }

    for (const auto& [id, cls] : file.classes) {
        if (cls.shape != "snitch") continue;
        if (file.target >= 0)
            throw std::invalid_argument("annotation stream has more than one snitch");
        file.target = id;
    }
    if (file.target < 0)
        throw std::invalid_argument("annotation stream has no snitch-shaped target");
    return file;
}

// ---------------------------------------------------------------------------
// Prediction streams

struct PredictionRecord {
    int frame = 0;
    SymbolId symbol = 0;
    ObjectClass object_class;
    BoundingBox box;
    AnchorStatus status = AnchorStatus::visible;
};

inline bool operator==(const PredictionRecord& a, const PredictionRecord& b) {
    return a.frame == b.frame && a.symbol == b.symbol && a.object_class == b.object_class &&
           a.box == b.box && a.status == b.status;
}

inline std::string serialize_predictions(const std::vector<PredictionRecord>& records) {
    std::string out;
    for (const PredictionRecord& r : records) {
        out += std::to_string(r.frame) + " " + std::to_string(r.symbol) + " " +
               class_token(r.object_class) + " " + detail::format_double(r.box.x) + " " +
               detail::format_double(r.box.y) + " " + detail::format_double(r.box.w) + " " +
               detail::format_double(r.box.h) + " " + status_token(r.status) + "\n";
    }
    return out;
}

inline std::vector<PredictionRecord> parse_predictions(const std::string& text) {
    std::vector<PredictionRecord> out;
    detail::for_each_record(text, [&](std::size_t line_no, const std::vector<std::string>& t) {
        detail::require_fields(t, 8, line_no, "predictions");
        PredictionRecord r;
        r.frame = detail::parse_frame(t[0], "predictions line " + std::to_string(line_no));
        r.symbol = detail::parse_int(t[1], "symbol");
        r.object_class = parse_class_token(t[2]);
        r.box = BoundingBox{detail::parse_double(t[3], "x"), detail::parse_double(t[4], "y"),
                            detail::parse_double(t[5], "w"), detail::parse_double(t[6], "h")};
        r.status = status_from_token(t[7]);
        out.push_back(std::move(r));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Attach/detach registry files

inline AttachDetachRegistry parse_registry(const std::string& text) {
    AttachDetachRegistry reg;
    detail::for_each_record(text, [&](std::size_t line_no, const std::vector<std::string>& t) {
        detail::require_fields(t, 2, line_no, "registry");
        reg.add_pair(t[0], t[1]);
    });
    return reg;
}

inline std::string default_registry_text() { return "contain pick&place\n"; }

// ---------------------------------------------------------------------------
// Scenario scripts (JSON)

inline nlohmann::json script_to_json(const ScenarioScript& script) {
    validate_script(script);
    nlohmann::json j;
    j["n_frames"] = script.n_frames;
    j["frame_width"] = script.frame_width;
    j["frame_height"] = script.frame_height;
    j["target"] = script.target;
    j["objects"] = nlohmann::json::array();
    for (const ScenarioObject& o : script.objects) {
        nlohmann::json jo;
        jo["id"] = o.id;
        jo["class"] = class_token(o.object_class);
        jo["width"] = o.width;
        jo["height"] = o.height;
        jo["depth"] = o.depth;
        jo["waypoints"] = nlohmann::json::array();
        for (const Waypoint& w : o.waypoints)
            jo["waypoints"].push_back({w.frame, w.center.x, w.center.y});
        j["objects"].push_back(std::move(jo));
    }
    j["actions"] = nlohmann::json::array();
    for (const ActionEvent& a : script.actions)
        j["actions"].push_back({a.frame, a.verb, a.child, a.parent});
    return j;
}

inline ScenarioScript script_from_json(const nlohmann::json& j) {
    ScenarioScript script;
    try {
        script.n_frames = j.at("n_frames").get<int>();
        script.frame_width = j.at("frame_width").get<double>();
        script.frame_height = j.at("frame_height").get<double>();
        script.target = j.at("target").get<SymbolId>();
        for (const nlohmann::json& jo : j.at("objects")) {
            ScenarioObject o;
            o.id = jo.at("id").get<SymbolId>();
            o.object_class = parse_class_token(jo.at("class").get<std::string>());
            o.width = jo.at("width").get<double>();
            o.height = jo.at("height").get<double>();
            o.depth = jo.at("depth").get<int>();
            for (const nlohmann::json& jw : jo.at("waypoints")) {
                if (!jw.is_array() || jw.size() != 3)
                    throw std::invalid_argument("waypoints must be [frame, cx, cy] triples");
                o.waypoints.push_back(
                    {jw[0].get<int>(), Vec2{jw[1].get<double>(), jw[2].get<double>()}});
            }
            script.objects.push_back(std::move(o));
        }
        for (const nlohmann::json& ja : j.at("actions")) {
            if (!ja.is_array() || ja.size() != 4)
                throw std::invalid_argument("actions must be [frame, verb, child, parent]");
            script.actions.push_back({ja[0].get<int>(), ja[1].get<std::string>(),
                                      ja[2].get<SymbolId>(), ja[3].get<SymbolId>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed script JSON: ") + e.what());
    }
    validate_script(script);
    return script;
}

inline std::string serialize_script(const ScenarioScript& script) {
    return script_to_json(script).dump(2) + "\n";
}

inline ScenarioScript parse_script(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed script JSON: ") + e.what());
    }
    return script_from_json(j);
}

// ---------------------------------------------------------------------------
// Evaluation reports (JSON)

namespace detail {

inline nlohmann::json accumulator_to_json(const MetricAccumulator& acc) {
    return {{"n", acc.n},       {"sum", acc.sum},  {"sumsq", acc.sumsq},
            {"mean", acc.mean()}, {"sem", acc.sem()}};
}

inline MetricAccumulator accumulator_from_json(const nlohmann::json& j) {
    MetricAccumulator acc;
    acc.n = j.at("n").get<std::size_t>();
    acc.sum = j.at("sum").get<double>();
    acc.sumsq = j.at("sumsq").get<double>();
    return acc;
}

inline nlohmann::json category_to_json(const CategoryScore& s) {
    return {{"iou", accumulator_to_json(s.iou)},
            {"l2", accumulator_to_json(s.l2)},
            {"missing", s.missing}};
}

inline CategoryScore category_from_json(const nlohmann::json& j) {
    CategoryScore s;
    s.iou = accumulator_from_json(j.at("iou"));
    s.l2 = accumulator_from_json(j.at("l2"));
    s.missing = j.at("missing").get<std::size_t>();
    return s;
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["model"] = r.model;
    j["tau"] = r.tau;
    j["noise"] = r.noise;
    j["seed"] = r.seed;
    j["first_scored_frame"] = r.first_scored_frame;
    j["scored_frames"] = r.scored_frames;
    j["overall"] = detail::category_to_json(r.overall);
    for (const TaskLabel label : all_task_labels())
        j["categories"][to_string(label)] = detail::category_to_json(r.categories.at(label));
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.model = j.at("model").get<std::string>();
        r.tau = j.at("tau").get<double>();
        r.noise = j.at("noise").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.first_scored_frame = j.at("first_scored_frame").get<int>();
        r.scored_frames = j.at("scored_frames").get<std::size_t>();
        r.overall = detail::category_from_json(j.at("overall"));
        for (const TaskLabel label : all_task_labels())
            r.categories[label] = detail::category_from_json(j.at("categories").at(to_string(label)));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed report JSON: ") + e.what());
    }
    return r;
}

inline std::string serialize_report(const EvalReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline EvalReport parse_report(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed report JSON: ") + e.what());
    }
    return report_from_json(j);
}

// ---------------------------------------------------------------------------
// Key=value configuration files

inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    const auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        return begin == std::string::npos ? std::string{} : s.substr(begin, end - begin + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, value).second)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files and corpus layout

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw std::runtime_error("error while reading file: " + path.string());
    return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("error while writing file: " + path.string());
}

inline constexpr const char* kScriptFile = "script.json";
inline constexpr const char* kTruthFile = "truth.txt";
inline constexpr const char* kActionsFile = "actions.txt";
inline constexpr const char* kRegistryFile = "registry.txt";
inline constexpr const char* kManifestFile = "manifest.json";

inline std::string scenario_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scenario_%04d", index);
    return buf;
}

inline std::string detections_filename(const std::string& profile) {
    detail::require_token_field(profile, "noise profile name");
    return "detections_" + profile + ".txt";
}

/// Scenario directories under a corpus root, sorted by name.
inline std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& corpus) {
    if (!std::filesystem::is_directory(corpus))
        throw std::runtime_error("corpus directory not found: " + corpus.string());
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(corpus)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("scenario_", 0) == 0)
            dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

// ---------------------------------------------------------------------------
// LA-CATER import
//
// Accepted JSON schema (one scene per file):
//   {
//     "num_frames": 300,
//     "width": 320.0,            // optional, defaults 320x240
//     "height": 240.0,
//     "target": 0,
//     "objects": [
//       {"id": 0, "class": "snitch:small:gold",
//        "boxes": [[x1,y1,x2,y2] | null, ...]}   // length num_frames, corners
//     ],
//     "actions": [[frame, "contain", child, parent], ...],
//     "task_labels": ["visible" | "occluded" | "contained" | "carried", ...]
//   }
// Boxes use corner coordinates and are converted to x/y/width/height. The
// derived detection stream carries every annotated box except the target's
// on contained and carried frames, where it is physically hidden.

struct ImportedScenario {
    int n_frames = 0;
    double frame_width = 320.0;
    double frame_height = 240.0;
    SymbolId target = -1;
    std::map<SymbolId, ObjectClass> classes;
    std::vector<FrameAnnotation> frames;
    std::vector<ActionEvent> actions;
};

inline ImportedScenario import_lacater(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed import JSON: ") + e.what());
    }

    ImportedScenario scene;
    try {
        scene.n_frames = j.at("num_frames").get<int>();
        if (scene.n_frames < 1) throw std::invalid_argument("num_frames must be positive");
        scene.frame_width = j.value("width", 320.0);
        scene.frame_height = j.value("height", 240.0);
        scene.target = j.at("target").get<SymbolId>();

        scene.frames.resize(static_cast<std::size_t>(scene.n_frames));
        for (int f = 0; f < scene.n_frames; ++f) scene.frames[static_cast<std::size_t>(f)].frame = f;

        for (const nlohmann::json& jo : j.at("objects")) {
            const SymbolId id = jo.at("id").get<SymbolId>();
            if (!scene.classes.emplace(id, parse_class_token(jo.at("class").get<std::string>()))
                     .second)
                throw std::invalid_argument("duplicate object id " + std::to_string(id));
            const nlohmann::json& boxes = jo.at("boxes");
            if (static_cast<int>(boxes.size()) != scene.n_frames)
                throw std::invalid_argument("object " + std::to_string(id) + " has " +
                                            std::to_string(boxes.size()) + " boxes, expected " +
                                            std::to_string(scene.n_frames));
            for (int f = 0; f < scene.n_frames; ++f) {
                const nlohmann::json& jb = boxes[static_cast<std::size_t>(f)];
                if (jb.is_null()) continue;
                if (!jb.is_array() || jb.size() != 4)
                    throw std::invalid_argument("boxes must be [x1,y1,x2,y2] or null");
                const double x1 = jb[0].get<double>(), y1 = jb[1].get<double>();
                const double x2 = jb[2].get<double>(), y2 = jb[3].get<double>();
                if (x2 <= x1 || y2 <= y1)
                    throw std::invalid_argument("degenerate box for object " + std::to_string(id) +
                                                " at frame " + std::to_string(f));
                scene.frames[static_cast<std::size_t>(f)].boxes[id] =
                    BoundingBox{x1, y1, x2 - x1, y2 - y1};
            }
        }

        const nlohmann::json& labels = j.at("task_labels");
        if (static_cast<int>(labels.size()) != scene.n_frames)
            throw std::invalid_argument("task_labels must have one entry per frame");
        for (int f = 0; f < scene.n_frames; ++f)
            scene.frames[static_cast<std::size_t>(f)].target_label =
                task_label_from_string(labels[static_cast<std::size_t>(f)].get<std::string>());

        if (j.contains("actions")) {
            for (const nlohmann::json& ja : j.at("actions")) {
                if (!ja.is_array() || ja.size() != 4)
                    throw std::invalid_argument("actions must be [frame, verb, child, parent]");
                ActionEvent a{ja[0].get<int>(), ja[1].get<std::string>(), ja[2].get<SymbolId>(),
                              ja[3].get<SymbolId>()};
                if (a.frame < 0 || a.frame >= scene.n_frames)
                    throw std::invalid_argument("action frame " + std::to_string(a.frame) +
                                                " outside the scene");
                if (!scene.classes.count(a.child) || !scene.classes.count(a.parent))
                    throw std::invalid_argument("action references unknown object id");
                scene.actions.push_back(std::move(a));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed import JSON: ") + e.what());
    }

    if (!scene.classes.count(scene.target))
        throw std::invalid_argument("target id is not among the objects");
    if (scene.classes.at(scene.target).shape != "snitch")
        throw std::invalid_argument("target object must be snitch-shaped");
    std::stable_sort(scene.actions.begin(), scene.actions.end(),
                     [](const ActionEvent& a, const ActionEvent& b) { return a.frame < b.frame; });
    return scene;
}

/// Zero-noise detection stream for an imported scene: every annotated box,
/// except the target's while it is contained or carried.
inline std::vector<Detection> detections_from_imported(const ImportedScenario& scene) {
    std::vector<Detection> out;
    for (const FrameAnnotation& fr : scene.frames) {
        const bool hidden = fr.target_label == TaskLabel::contained ||
                            fr.target_label == TaskLabel::carried;
        for (const auto& [id, box] : fr.boxes) {
            if (hidden && id == scene.target) continue;
            out.push_back(Detection{scene.classes.at(id), box, fr.frame});
        }
    }
    return out;
}

}  // namespace aapa
