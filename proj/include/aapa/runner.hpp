#pragma once

#include <aapa/guidance.hpp>
#include <aapa/io.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

// Command implementations behind the CLI. Everything here is a library
// function so tests can drive full corpus runs in-process; the CLI binary
// only parses flags and forwards.

namespace aapa {

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::string model = "aapa";  // "pa" ignores the action stream entirely
    double tau = 6500.0;
    int appear_threshold = 3;
    int disappear_threshold = 5;
    double occlusion_overlap = 0.4;
    std::string noise = "none";  // selects detections_<noise>.txt per scenario
    std::uint64_t seed = 0;
    std::filesystem::path corpus;
    std::filesystem::path out;       // empty: keep results in memory only
    std::filesystem::path registry;  // empty: corpus/registry.txt, else the built-in pair
    int jobs = 1;
};

/// Applies key=value entries from a config file. Flags are applied by the
/// CLI after this, so flags win.
inline void apply_config_entries(RunConfig& config, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "model") {
            config.model = value;
        } else if (key == "tau") {
            config.tau = detail::parse_double(value, "tau");
        } else if (key == "appear") {
            config.appear_threshold = static_cast<int>(detail::parse_int(value, "appear"));
        } else if (key == "disappear") {
            config.disappear_threshold = static_cast<int>(detail::parse_int(value, "disappear"));
        } else if (key == "occlusion-overlap") {
            config.occlusion_overlap = detail::parse_double(value, "occlusion-overlap");
        } else if (key == "noise") {
            config.noise = value;
        } else if (key == "seed") {
            const std::int64_t seed = detail::parse_int(value, "seed");
            if (seed < 0) throw std::invalid_argument("seed must be non-negative");
            config.seed = static_cast<std::uint64_t>(seed);
        } else if (key == "corpus") {
            config.corpus = value;
        } else if (key == "out") {
            config.out = value;
        } else if (key == "registry") {
            config.registry = value;
        } else if (key == "jobs") {
            config.jobs = static_cast<int>(detail::parse_int(value, "jobs"));
        } else {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
}

inline void validate_run_config(const RunConfig& config) {
    if (config.model != "pa" && config.model != "aapa")
        throw std::invalid_argument("model must be 'pa' or 'aapa'");
    if (config.tau <= 0.0) throw std::invalid_argument("tau must be positive");
    if (config.appear_threshold < 1) throw std::invalid_argument("appear threshold must be >= 1");
    if (config.disappear_threshold < 1)
        throw std::invalid_argument("disappear threshold must be >= 1");
    if (config.occlusion_overlap < 0.0 || config.occlusion_overlap > 1.0)
        throw std::invalid_argument("occlusion overlap must be within [0, 1]");
    if (config.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    if (config.corpus.empty()) throw std::invalid_argument("corpus path is required");
    detail::require_token_field(config.noise, "noise profile name");
}

inline AnchoringConfig anchoring_config_for(const RunConfig& config) {
    AnchoringConfig cfg(config.tau);
    cfg.appear_threshold = config.appear_threshold;
    cfg.disappear_threshold = config.disappear_threshold;
    cfg.occlusion_overlap = config.occlusion_overlap;
    cfg.action_aware = config.model == "aapa";
    return cfg;
}

inline AttachDetachRegistry load_registry(const std::filesystem::path& registry_path,
                                          const std::filesystem::path& corpus) {
    if (!registry_path.empty()) return parse_registry(read_text_file(registry_path));
    const std::filesystem::path bundled = corpus / kRegistryFile;
    if (std::filesystem::exists(bundled)) return parse_registry(read_text_file(bundled));
    return parse_registry(default_registry_text());
}

// ---------------------------------------------------------------------------
// Action grounding
//
// Scripted actions name scene objects; the tracker only knows its own anchor
// symbols. Each action is translated by locating the named object's ground
// truth box at the action frame (falling back to its last annotated box) and
// picking the nearest anchor of the same class, or the nearest anchor of any
// class when none matches. Actions that cannot be grounded, ground both ends
// to the same anchor, or would corrupt the hierarchy are dropped rather than
// failing the run.

namespace detail {

inline const BoundingBox* truth_box_at(const AnnotationFile& truth, SymbolId id, int frame) {
    for (int f = frame; f >= 0; --f) {
        const auto& boxes = truth.frames[static_cast<std::size_t>(f)].boxes;
        const auto it = boxes.find(id);
        if (it != boxes.end()) return &it->second;
    }
    return nullptr;
}

inline SymbolId nearest_anchor(const WorldState& state, const ObjectClass& object_class, Vec2 at) {
    SymbolId best = -1;
    double best_distance = std::numeric_limits<double>::infinity();
    bool best_same_class = false;
    for (const Anchor& a : state.anchors) {
        const Vec2 c = a.box.center();
        const double distance = (c.x - at.x) * (c.x - at.x) + (c.y - at.y) * (c.y - at.y);
        const bool same_class = a.object_class == object_class;
        const bool better = same_class != best_same_class ? same_class : distance < best_distance;
        if (better) {
            best = a.id;
            best_distance = distance;
            best_same_class = same_class;
        }
    }
    return best;
}

}  // namespace detail

inline std::vector<ActionEvent> ground_actions(const std::vector<ActionEvent>& actions,
                                               const AnnotationFile& truth,
                                               const WorldState& state,
                                               const AttachDetachRegistry& registry) {
    std::vector<ActionEvent> grounded;
    AttachmentHierarchy trial = state.hierarchy;
    for (const ActionEvent& action : actions) {
        const BoundingBox* child_box = detail::truth_box_at(truth, action.child, action.frame);
        const BoundingBox* parent_box = detail::truth_box_at(truth, action.parent, action.frame);
        if (child_box == nullptr || parent_box == nullptr) continue;
        const auto child_class = truth.classes.find(action.child);
        const auto parent_class = truth.classes.find(action.parent);
        if (child_class == truth.classes.end() || parent_class == truth.classes.end()) continue;

        ActionEvent e = action;
        e.child = detail::nearest_anchor(state, child_class->second, child_box->center());
        e.parent = detail::nearest_anchor(state, parent_class->second, parent_box->center());
        if (e.child < 0 || e.parent < 0 || e.child == e.parent) continue;
        try {
            trial = apply_action(trial, e, registry);
        } catch (const std::exception&) {
            continue;  // conflicting attach or cycle under noisy grounding
        }
        grounded.push_back(std::move(e));
    }
    return grounded;
}

// ---------------------------------------------------------------------------
// Single-scenario tracker run

struct TrackerRun {
    std::vector<PredictionRecord> predictions;  // frame-major, ascending symbol
    std::vector<BoundingBox> target_boxes;      // per frame: oldest live snitch anchor's box
    SymbolId tracked_symbol = -1;               // first snitch-shaped anchor id
    int first_scored_frame = -1;                // first snitch detection in the input
    EvalReport report;                          // metadata left for the caller
};

inline TrackerRun run_tracker(const AnnotationFile& truth,
                              const std::vector<Detection>& detections,
                              const std::vector<ActionEvent>& actions,
                              const AttachDetachRegistry& registry, const AnchoringConfig& cfg) {
    const int n_frames = static_cast<int>(truth.frames.size());
    if (n_frames == 0) throw std::invalid_argument("empty annotation stream");

    std::vector<std::vector<Detection>> detections_by_frame(truth.frames.size());
    for (const Detection& d : detections) {
        if (d.frame < 0 || d.frame >= n_frames)
            throw std::invalid_argument("detection at frame " + std::to_string(d.frame) +
                                        " is outside the annotated range");
        detections_by_frame[static_cast<std::size_t>(d.frame)].push_back(d);
    }
    std::vector<std::vector<ActionEvent>> actions_by_frame(truth.frames.size());
    for (const ActionEvent& a : actions) {
        if (a.frame < 0 || a.frame >= n_frames)
            throw std::invalid_argument("action at frame " + std::to_string(a.frame) +
                                        " is outside the annotated range");
        actions_by_frame[static_cast<std::size_t>(a.frame)].push_back(a);
    }

    TrackerRun run;
    run.target_boxes.assign(truth.frames.size(), BoundingBox{});
    for (int t = 0; t < n_frames && run.first_scored_frame < 0; ++t)
        for (const Detection& d : detections_by_frame[static_cast<std::size_t>(t)])
            if (d.object_class.shape == "snitch") {
                run.first_scored_frame = t;
                break;
            }

    WorldState state;
    for (int t = 0; t < n_frames; ++t) {
        std::vector<ActionEvent> grounded;
        if (cfg.action_aware)
            grounded = ground_actions(actions_by_frame[static_cast<std::size_t>(t)], truth, state,
                                      registry);
        state = step(state, detections_by_frame[static_cast<std::size_t>(t)], grounded, registry,
                     cfg);
        for (const Anchor& a : state.anchors)
            run.predictions.push_back({t, a.id, a.object_class, a.box, a.status});

        // The model's answer to "where is the target" is its oldest live
        // snitch-shaped anchor; after a drop, the next acquisition takes over.
        for (const Anchor& a : state.anchors)
            if (a.object_class.shape == "snitch") {
                run.target_boxes[static_cast<std::size_t>(t)] = a.box;
                if (run.tracked_symbol < 0) run.tracked_symbol = a.id;
                break;
            }
    }

    std::vector<BoundingBox> target_truth(truth.frames.size());
    std::vector<TaskLabel> labels(truth.frames.size());
    for (std::size_t t = 0; t < truth.frames.size(); ++t) {
        labels[t] = truth.frames[t].target_label;
        const auto it = truth.frames[t].boxes.find(truth.target);
        if (it != truth.frames[t].boxes.end()) target_truth[t] = it->second;
    }
    run.report = evaluate(run.target_boxes, target_truth, labels, run.first_scored_frame);
    return run;
}

// ---------------------------------------------------------------------------
// Corpus run

struct ScenarioRunResult {
    std::string name;
    TrackerRun run;
};

struct RunResult {
    std::vector<ScenarioRunResult> scenarios;  // corpus order
    EvalReport merged;
};

inline TrackerRun run_scenario_dir(const std::filesystem::path& dir, const RunConfig& config,
                                   const AttachDetachRegistry& registry) {
    try {
        const AnnotationFile truth = parse_annotations(read_text_file(dir / kTruthFile));
        const std::vector<ActionEvent> actions = parse_actions(read_text_file(dir / kActionsFile));
        const std::vector<Detection> detections =
            parse_detections(read_text_file(dir / detections_filename(config.noise)));
        return run_tracker(truth, detections, actions, registry, anchoring_config_for(config));
    } catch (const std::exception& e) {
        throw std::runtime_error(dir.filename().string() + ": " + e.what());
    }
}

inline RunResult cmd_run(const RunConfig& config) {
    validate_run_config(config);
    const AttachDetachRegistry registry = load_registry(config.registry, config.corpus);
    const std::vector<std::filesystem::path> dirs = list_scenarios(config.corpus);
    if (dirs.empty())
        throw std::runtime_error("no scenarios under corpus: " + config.corpus.string());

    RunResult result;
    result.scenarios.resize(dirs.size());
    std::vector<std::string> errors(dirs.size());

    const auto run_one = [&](std::size_t i) {
        try {
            result.scenarios[i].name = dirs[i].filename().string();
            result.scenarios[i].run = run_scenario_dir(dirs[i], config, registry);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    const int jobs = std::min<int>(config.jobs, static_cast<int>(dirs.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < dirs.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t i = cursor.fetch_add(1); i < dirs.size();
                     i = cursor.fetch_add(1))
                    run_one(i);
            });
        for (std::thread& worker : pool) worker.join();
    }
    for (const std::string& error : errors)
        if (!error.empty()) throw std::runtime_error(error);

    result.merged.model = config.model;
    result.merged.tau = config.tau;
    result.merged.noise = config.noise;
    result.merged.seed = config.seed;
    for (ScenarioRunResult& s : result.scenarios) {
        s.run.report.model = config.model;
        s.run.report.tau = config.tau;
        s.run.report.noise = config.noise;
        s.run.report.seed = config.seed;
        result.merged.merge(s.run.report);
    }

    if (!config.out.empty()) {
        for (const ScenarioRunResult& s : result.scenarios)
            write_text_file(config.out / s.name / "predictions.txt",
                            serialize_predictions(s.run.predictions));
        write_text_file(config.out / "report.json", serialize_report(result.merged));
        write_text_file(config.out / "report.txt", render_text_table({result.merged}));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Corpus generation

struct GenerateParams {
    std::filesystem::path out;
    int count = 20;
    std::string kind = "mixed";  // visible|occlusion|containment|carry|mixed
    std::uint64_t seed = 0;
    int n_frames = 300;
    double frame_width = 320.0;
    double frame_height = 240.0;
    int min_objects = 5;
    int max_objects = 15;
};

inline ScenarioTemplate template_from_name(const std::string& name) {
    if (name == "visible") return ScenarioTemplate::visible_only;
    if (name == "occlusion") return ScenarioTemplate::occlusion;
    if (name == "containment") return ScenarioTemplate::containment;
    if (name == "carry") return ScenarioTemplate::carry;
    throw std::invalid_argument("unknown scenario template: '" + name + "'");
}

/// The bundled degradation profiles. Seeds are stamped per scenario at
/// generation time so every file stays reproducible from the corpus seed.
inline std::vector<std::pair<std::string, NoiseProfile>> standard_noise_profiles() {
    NoiseProfile none;
    NoiseProfile flicker;
    flicker.flicker_probability = 0.05;
    NoiseProfile jitter;
    jitter.jitter_sigma = 1.0;
    NoiseProfile full;
    full.flicker_probability = 0.05;
    full.jitter_sigma = 1.0;
    full.misclassification_probability = 0.02;
    return {{"none", none}, {"flicker", flicker}, {"jitter", jitter}, {"full", full}};
}

namespace detail {

inline nlohmann::json profile_to_json(const NoiseProfile& p) {
    return {{"flicker_probability", p.flicker_probability},
            {"flicker_min_burst", p.flicker_min_burst},
            {"flicker_max_burst", p.flicker_max_burst},
            {"flicker_start_frame", p.flicker_start_frame},
            {"jitter_sigma", p.jitter_sigma},
            {"misclassification_probability", p.misclassification_probability}};
}

}  // namespace detail

inline void cmd_generate(const GenerateParams& params) {
    if (params.count < 1) throw std::invalid_argument("scenario count must be >= 1");
    if (params.out.empty()) throw std::invalid_argument("output path is required");
    const std::vector<ScenarioTemplate> cycle{
        ScenarioTemplate::visible_only, ScenarioTemplate::occlusion, ScenarioTemplate::containment,
        ScenarioTemplate::carry};
    const bool mixed = params.kind == "mixed";
    const ScenarioTemplate fixed = mixed ? ScenarioTemplate::carry
                                         : template_from_name(params.kind);
    const AttachDetachRegistry registry = parse_registry(default_registry_text());
    const auto profiles = standard_noise_profiles();

    for (int i = 0; i < params.count; ++i) {
        ScenarioParams sp;
        sp.n_frames = params.n_frames;
        sp.frame_width = params.frame_width;
        sp.frame_height = params.frame_height;
        sp.min_objects = params.min_objects;
        sp.max_objects = params.max_objects;
        sp.kind = mixed ? cycle[static_cast<std::size_t>(i) % cycle.size()] : fixed;

        const std::uint64_t scenario_seed = mix_seed(params.seed, static_cast<std::uint64_t>(i));
        const ScenarioScript script = generate_scenario(sp, scenario_seed);
        const std::vector<FrameAnnotation> truth = render_ground_truth(script, registry);

        const std::filesystem::path dir = params.out / scenario_dir_name(i);
        write_text_file(dir / kScriptFile, serialize_script(script));
        write_text_file(dir / kTruthFile,
                        serialize_annotations(annotation_file_from_script(script, truth)));
        write_text_file(dir / kActionsFile, serialize_actions(script.actions));
        for (std::size_t p = 0; p < profiles.size(); ++p) {
            NoiseProfile profile = profiles[p].second;
            profile.seed = mix_seed(scenario_seed, 0xA0 + static_cast<std::uint64_t>(p));
            write_text_file(dir / detections_filename(profiles[p].first),
                            serialize_detections(degrade(script, truth, profile)));
        }
    }

    write_text_file(params.out / kRegistryFile, default_registry_text());
    nlohmann::json manifest;
    manifest["count"] = params.count;
    manifest["seed"] = params.seed;
    manifest["template"] = params.kind;
    manifest["n_frames"] = params.n_frames;
    manifest["frame_width"] = params.frame_width;
    manifest["frame_height"] = params.frame_height;
    manifest["min_objects"] = params.min_objects;
    manifest["max_objects"] = params.max_objects;
    for (const auto& [name, profile] : standard_noise_profiles())
        manifest["profiles"][name] = detail::profile_to_json(profile);
    write_text_file(params.out / kManifestFile, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Guidance artifacts

struct GuidanceParams {
    std::filesystem::path corpus;
    std::filesystem::path out;
    double w = 100.0;
    bool normalize = false;
    int k = 0;  // 0: use the widest object count in the corpus
    std::filesystem::path registry;
};

inline void cmd_guidance(const GuidanceParams& params) {
    if (params.corpus.empty() || params.out.empty())
        throw std::invalid_argument("corpus and output paths are required");
    if (params.w <= 0.0) throw std::invalid_argument("guidance weight must be positive");
    if (params.k < 0) throw std::invalid_argument("column count must be >= 0");
    const AttachDetachRegistry registry = load_registry(params.registry, params.corpus);
    const std::vector<std::filesystem::path> dirs = list_scenarios(params.corpus);
    if (dirs.empty())
        throw std::runtime_error("no scenarios under corpus: " + params.corpus.string());

    std::vector<AnnotationFile> truths;
    std::vector<std::vector<ActionEvent>> action_sets;
    std::size_t widest = 0;
    for (const auto& dir : dirs) {
        truths.push_back(parse_annotations(read_text_file(dir / kTruthFile)));
        action_sets.push_back(parse_actions(read_text_file(dir / kActionsFile)));
        widest = std::max(widest, truths.back().classes.size());
    }
    const std::size_t width = params.k > 0 ? static_cast<std::size_t>(params.k) : widest;

    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const AnnotationFile& truth = truths[i];
        const int n_frames = static_cast<int>(truth.frames.size());
        const auto timeline = hierarchy_timeline(action_sets[i], registry, n_frames);
        const TrackingVector v = build_tracking_vector(truth.frames, timeline, truth.target);
        const ColumnMap map = column_map_from_first_appearance(truth.frames, width);
        const GuidanceMatrix m = build_weight_matrix(v, map, params.w, params.normalize);

        const std::filesystem::path out_dir = params.out / dirs[i].filename();
        std::string tracking;
        for (std::size_t t = 0; t < v.entries.size(); ++t)
            tracking += std::to_string(t) + " " + std::to_string(v.entries[t]) + "\n";
        write_text_file(out_dir / "tracking.txt", tracking);

        std::string columns;
        for (const auto& [symbol, column] : map.columns)
            columns += std::to_string(symbol) + " " + std::to_string(column) + "\n";
        write_text_file(out_dir / "columns.txt", columns);

        std::string weights;
        for (std::size_t t = 0; t < m.values.size(); ++t) {
            weights += std::to_string(t);
            for (const double x : m.values[t]) weights += " " + detail::format_double(x);
            weights += "\n";
        }
        write_text_file(out_dir / "weights.txt", weights);
    }
}

// ---------------------------------------------------------------------------
// Report comparison

inline std::string cmd_compare(const std::vector<std::filesystem::path>& report_paths,
                               const std::filesystem::path& out) {
    if (report_paths.empty()) throw std::invalid_argument("no report files given");
    std::vector<EvalReport> reports;
    reports.reserve(report_paths.size());
    for (const auto& path : report_paths) reports.push_back(parse_report(read_text_file(path)));
    const std::string table = render_text_table(reports);
    if (!out.empty()) {
        write_text_file(out / "comparison.txt", table);
        nlohmann::json all = nlohmann::json::array();
        for (const EvalReport& r : reports) all.push_back(report_to_json(r));
        write_text_file(out / "comparison.json", all.dump(2) + "\n");
    }
    return table;
}

// ---------------------------------------------------------------------------
// LA-CATER corpus import

struct ImportParams {
    std::filesystem::path input;  // directory of scene JSON files
    std::filesystem::path out;
};

inline int cmd_import(const ImportParams& params) {
    if (params.input.empty() || params.out.empty())
        throw std::invalid_argument("input and output paths are required");
    if (!std::filesystem::is_directory(params.input))
        throw std::runtime_error("import directory not found: " + params.input.string());

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(params.input))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error("no .json scenes under: " + params.input.string());

    for (std::size_t i = 0; i < files.size(); ++i) {
        ImportedScenario scene;
        try {
            scene = import_lacater(read_text_file(files[i]));
        } catch (const std::exception& e) {
            throw std::runtime_error(files[i].filename().string() + ": " + e.what());
        }
        const std::vector<Detection> detections = detections_from_imported(scene);
        AnnotationFile truth;
        truth.frames = std::move(scene.frames);
        truth.classes = std::move(scene.classes);
        truth.target = scene.target;

        const std::filesystem::path dir = params.out / scenario_dir_name(static_cast<int>(i));
        write_text_file(dir / kTruthFile, serialize_annotations(truth));
        write_text_file(dir / kActionsFile, serialize_actions(scene.actions));
        write_text_file(dir / detections_filename("import"), serialize_detections(detections));
    }

    write_text_file(params.out / kRegistryFile, default_registry_text());
    nlohmann::json manifest;
    manifest["count"] = files.size();
    manifest["imported_from"] = params.input.string();
    manifest["profiles"]["import"] = {{"source", "annotation boxes"}};
    write_text_file(params.out / kManifestFile, manifest.dump(2) + "\n");
    return static_cast<int>(files.size());
}

}  // namespace aapa
