#pragma once

#include <aapa/attachment.hpp>
#include <aapa/geometry.hpp>
#include <aapa/rng.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aapa {

/// One keyframe of a scripted trajectory. Frames between keyframes are
/// linearly interpolated; frames outside the keyframe range clamp to the
/// nearest end.
struct Waypoint {
    int frame = 0;
    Vec2 center;
};

struct ScenarioObject {
    SymbolId id = 0;
    ObjectClass object_class;
    double width = 0.0;
    double height = 0.0;
    int depth = 0;  // lower values are nearer the camera
    std::vector<Waypoint> waypoints;

    Vec2 center_at(int frame) const {
        if (waypoints.empty()) throw std::invalid_argument("object has no waypoints");
        if (frame <= waypoints.front().frame) return waypoints.front().center;
        if (frame >= waypoints.back().frame) return waypoints.back().center;
        for (std::size_t i = 1; i < waypoints.size(); ++i) {
            const Waypoint& a = waypoints[i - 1];
            const Waypoint& b = waypoints[i];
            if (frame > b.frame) continue;
            if (frame == b.frame) return b.center;
            const double s = double(frame - a.frame) / double(b.frame - a.frame);
            return {a.center.x + (b.center.x - a.center.x) * s,
                    a.center.y + (b.center.y - a.center.y) * s};
        }
        return waypoints.back().center;
    }

    BoundingBox box_at(int frame) const {
        return BoundingBox::from_center(center_at(frame), width, height);
    }
};

struct ScenarioScript {
    int n_frames = 300;
    double frame_width = 320.0;
    double frame_height = 240.0;
    std::vector<ScenarioObject> objects;
    std::vector<ActionEvent> actions;  // symbols refer to object ids
    SymbolId target = -1;

    const ScenarioObject* find_object(SymbolId id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
};

/// Task category of the target on one frame.
enum class TaskLabel { visible, occluded, contained, carried };

inline std::string to_string(TaskLabel label) {
    switch (label) {
        case TaskLabel::visible: return "visible";
        case TaskLabel::occluded: return "occluded";
        case TaskLabel::contained: return "contained";
        case TaskLabel::carried: return "carried";
    }
    return "visible";
}

inline TaskLabel task_label_from_string(const std::string& s) {
    if (s == "visible") return TaskLabel::visible;
    if (s == "occluded") return TaskLabel::occluded;
    if (s == "contained") return TaskLabel::contained;
    if (s == "carried") return TaskLabel::carried;
    throw std::invalid_argument("unknown task label: " + s);
}

/// Ground truth for one frame: every object's box plus the target's label.
struct FrameAnnotation {
    int frame = 0;
    std::map<SymbolId, BoundingBox> boxes;
    TaskLabel target_label = TaskLabel::visible;
};

// Cover thresholds used by the labeling rules. An object is treated as
// fully covered when the covered fraction reaches kFullCover (the slack
// absorbs interpolation rounding); kOccludedCover is the partial-cover bar
// for the occluded label.
inline constexpr double kFullCover = 1.0 - 1e-9;
inline constexpr double kOccludedCover = 0.7;

inline const ScenarioObject& require_object(const ScenarioScript& script, SymbolId id) {
    const ScenarioObject* o = script.find_object(id);
    if (o == nullptr)
        throw std::invalid_argument("script references unknown object " + std::to_string(id));
    return *o;
}

inline void validate_script(const ScenarioScript& script) {
    if (script.n_frames < 1) throw std::invalid_argument("script needs at least one frame");
    if (script.objects.empty()) throw std::invalid_argument("script has no objects");
    if (script.objects.size() > 15) throw std::invalid_argument("script exceeds 15 objects");
    int snitches = 0;
    std::map<SymbolId, int> seen;
    for (const auto& o : script.objects) {
        if (seen.count(o.id)) throw std::invalid_argument("duplicate object id");
        seen[o.id] = 1;
        if (o.object_class.shape == "snitch") ++snitches;
        if (o.width <= 0.0 || o.height <= 0.0)
            throw std::invalid_argument("object has empty extent");
        if (o.waypoints.empty()) throw std::invalid_argument("object has no waypoints");
        for (std::size_t i = 1; i < o.waypoints.size(); ++i)
            if (o.waypoints[i].frame <= o.waypoints[i - 1].frame)
                throw std::invalid_argument("waypoints not strictly increasing");
        for (const auto& w : o.waypoints) {
            if (w.center.x - o.width / 2 < 0.0 || w.center.x + o.width / 2 > script.frame_width ||
                w.center.y - o.height / 2 < 0.0 || w.center.y + o.height / 2 > script.frame_height)
                throw std::invalid_argument("trajectory leaves the frame");
        }
    }
    if (snitches != 1) throw std::invalid_argument("script needs exactly one snitch");
    require_object(script, script.target);
    if (require_object(script, script.target).object_class.shape != "snitch")
        throw std::invalid_argument("target is not the snitch");
    for (std::size_t i = 0; i < script.actions.size(); ++i) {
        const auto& e = script.actions[i];
        if (i > 0 && e.frame < script.actions[i - 1].frame)
            throw std::invalid_argument("actions not sorted by frame");
        require_object(script, e.child);
        require_object(script, e.parent);
    }
}

/// Task label per frame, derived entirely from the script:
///  - contained: an active attachment edge whose parent fully covers the
///    target, parent static on this frame;
///  - carried: same, but the parent's center moved since the last frame;
///  - occluded: no such edge, but some object nearer the camera covers at
///    least kOccludedCover of the target;
///  - visible: everything else.
inline std::vector<TaskLabel> label_frames(const ScenarioScript& script,
                                           const AttachDetachRegistry& registry) {
    validate_script(script);
    const auto timeline = hierarchy_timeline(script.actions, registry, script.n_frames);
    const ScenarioObject& target = require_object(script, script.target);

    std::vector<TaskLabel> labels;
    labels.reserve(script.n_frames);
    for (int t = 0; t < script.n_frames; ++t) {
        const BoundingBox tb = target.box_at(t);
        TaskLabel label = TaskLabel::visible;

        const auto parent = timeline[t].parent_of(script.target);
        bool held = false;
        if (parent) {
            const ScenarioObject& po = require_object(script, *parent);
            if (covered_fraction(tb, po.box_at(t)) >= kFullCover) {
                held = true;
                const bool moved = t > 0 && !(po.center_at(t) == po.center_at(t - 1));
                label = moved ? TaskLabel::carried : TaskLabel::contained;
            }
        }
        if (!held) {
            for (const auto& o : script.objects) {
                if (o.id == script.target || o.depth >= target.depth) continue;
                if (covered_fraction(tb, o.box_at(t)) >= kOccludedCover) {
                    label = TaskLabel::occluded;
                    break;
                }
            }
        }
        labels.push_back(label);
    }
    return labels;
}

inline std::vector<FrameAnnotation> render_ground_truth(const ScenarioScript& script,
                                                        const AttachDetachRegistry& registry) {
    const std::vector<TaskLabel> labels = label_frames(script, registry);
    std::vector<FrameAnnotation> annotations;
    annotations.reserve(script.n_frames);
    for (int t = 0; t < script.n_frames; ++t) {
        FrameAnnotation fa;
        fa.frame = t;
        for (const auto& o : script.objects) fa.boxes[o.id] = o.box_at(t);
        fa.target_label = labels[t];
        annotations.push_back(std::move(fa));
    }
    return annotations;
}

/// Detector degradation knobs. Everything is deterministic given the seed;
/// zero probabilities and zero jitter reproduce the ground truth exactly
/// (minus target frames a real detector could never see).
struct NoiseProfile {
    std::uint64_t seed = 0;
    double flicker_probability = 0.0;
    // Dropout arrives in bursts of [min, max] consecutive frames. Consecutive
    // bursts are separated by at least one reported frame, so flicker_max_burst
    // also bounds the longest gap an anchor has to survive.
    int flicker_min_burst = 3;
    int flicker_max_burst = 8;
    int flicker_start_frame = 10;  // bursts may begin only at or after this frame
    double jitter_sigma = 0.0;
    double misclassification_probability = 0.0;
};

inline void validate_profile(const NoiseProfile& p) {
    if (p.flicker_probability < 0.0 || p.flicker_probability > 1.0 ||
        p.misclassification_probability < 0.0 || p.misclassification_probability > 1.0)
        throw std::invalid_argument("probabilities must lie in [0, 1]");
    if (p.flicker_min_burst < 1 || p.flicker_max_burst < p.flicker_min_burst)
        throw std::invalid_argument("burst length bounds are invalid");
    if (p.jitter_sigma < 0.0) throw std::invalid_argument("jitter sigma must be nonnegative");
    if (p.flicker_start_frame < 0)
        throw std::invalid_argument("flicker start frame must be nonnegative");
}

/// Turns ground truth into a detection stream. The target is withheld on
/// frames where it is contained or carried, and on occluded frames where
/// the cover is total; every other object-frame passes through the noise
/// model (flicker bursts, center jitter, class flips).
inline std::vector<Detection> degrade(const ScenarioScript& script,
                                      const std::vector<FrameAnnotation>& annotations,
                                      const NoiseProfile& profile) {
    validate_profile(profile);
    if (annotations.size() != static_cast<std::size_t>(script.n_frames))
        throw std::invalid_argument("annotation count does not match the script");

    const ScenarioObject& target = require_object(script, script.target);

    // Frames on which no detector could report the target.
    std::vector<bool> hidden(script.n_frames, false);
    for (int t = 0; t < script.n_frames; ++t) {
        const TaskLabel label = annotations[t].target_label;
        if (label == TaskLabel::contained || label == TaskLabel::carried) {
            hidden[t] = true;
            continue;
        }
        if (label == TaskLabel::occluded) {
            const BoundingBox tb = annotations[t].boxes.at(script.target);
            for (const auto& o : script.objects) {
                if (o.id == script.target || o.depth >= target.depth) continue;
                if (covered_fraction(tb, annotations[t].boxes.at(o.id)) >= kFullCover) {
                    hidden[t] = true;
                    break;
                }
            }
        }
    }

    // Classes another object can be mistaken for: anything present in the
    // scene except the object's own class, and never the target's class.
    const auto flip_pool = [&](const ObjectClass& own) {
        std::vector<ObjectClass> pool;
        for (const auto& o : script.objects) {
            if (o.object_class == own || o.object_class == target.object_class) continue;
            bool dup = false;
            for (const auto& c : pool) dup = dup || c == o.object_class;
            if (!dup) pool.push_back(o.object_class);
        }
        return pool;
    };

    struct Emission {
        bool present = false;
        BoundingBox box;
        ObjectClass object_class;
    };
    std::vector<std::vector<Emission>> emitted(script.objects.size());

    for (std::size_t oi = 0; oi < script.objects.size(); ++oi) {
        const ScenarioObject& o = script.objects[oi];
        const std::vector<ObjectClass> pool = flip_pool(o.object_class);
        Rng rng(mix_seed(profile.seed, static_cast<std::uint64_t>(o.id)));
        emitted[oi].resize(script.n_frames);
        // A burst is one bounded outage: it must be preceded by a reported
        // frame, so flicker_max_burst caps the longest consecutive gap.
        int burst = 0;
        bool refractory = false;
        for (int t = 0; t < script.n_frames; ++t) {
            bool drop = false;
            if (burst > 0) {
                --burst;
                drop = true;
            } else if (!refractory && profile.flicker_probability > 0.0 &&
                       t >= profile.flicker_start_frame &&
                       rng.uniform() < profile.flicker_probability) {
                burst = rng.uniform_int(profile.flicker_min_burst, profile.flicker_max_burst) - 1;
                drop = true;
            }
            refractory = drop;
            if (drop) continue;

            Emission& e = emitted[oi][t];
            e.present = true;
            e.box = annotations[t].boxes.at(o.id);
            e.object_class = o.object_class;
            if (profile.jitter_sigma > 0.0) {
                e.box.x += rng.normal(0.0, profile.jitter_sigma);
                e.box.y += rng.normal(0.0, profile.jitter_sigma);
            }
            if (profile.misclassification_probability > 0.0 &&
                rng.uniform() < profile.misclassification_probability && !pool.empty())
                e.object_class = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
        }
    }

    std::vector<Detection> stream;
    for (int t = 0; t < script.n_frames; ++t) {
        for (std::size_t oi = 0; oi < script.objects.size(); ++oi) {
            const ScenarioObject& o = script.objects[oi];
            if (o.id == script.target && hidden[t]) continue;
            const Emission& e = emitted[oi][t];
            if (!e.present) continue;
            Detection d;
            d.object_class = e.object_class;
            d.box = e.box;
            d.frame = t;
            stream.push_back(std::move(d));
        }
    }
    return stream;
}

enum class ScenarioTemplate { visible_only, occlusion, containment, carry };

struct ScenarioParams {
    int n_frames = 300;
    double frame_width = 320.0;
    double frame_height = 240.0;
    int min_objects = 5;
    int max_objects = 15;
    ScenarioTemplate kind = ScenarioTemplate::carry;
};

namespace detail {

inline double clamp_axis(double v, double half, double limit) {
    return std::min(std::max(v, half + 2.0), limit - half - 2.0);
}

inline Vec2 clamp_center(Vec2 c, const ScenarioObject& o, const ScenarioParams& p) {
    return {clamp_axis(c.x, o.width / 2, p.frame_width),
            clamp_axis(c.y, o.height / 2, p.frame_height)};
}

/// Slow random walk: a waypoint every 20 frames, hops small enough that
/// per-frame motion stays a few pixels.
inline void wander(ScenarioObject& o, const ScenarioParams& p, Rng& rng) {
    Vec2 pos{rng.uniform(0.0, p.frame_width), rng.uniform(0.0, p.frame_height)};
    pos = clamp_center(pos, o, p);
    for (int f = 0;; f += 20) {
        if (f >= p.n_frames - 1) {
            o.waypoints.push_back({p.n_frames - 1, pos});
            break;
        }
        o.waypoints.push_back({f, pos});
        pos = clamp_center({pos.x + rng.uniform(-60.0, 60.0), pos.y + rng.uniform(-60.0, 60.0)},
                           o, p);
    }
}

inline ObjectClass random_distractor_class(Rng& rng) {
    static const char* shapes[] = {"cube", "sphere", "cylinder", "pyramid", "torus"};
    static const char* materials[] = {"rubber", "metal", "glass"};
    static const SizeClass sizes[] = {SizeClass::small, SizeClass::medium, SizeClass::large};
    ObjectClass c;
    c.shape = shapes[rng.uniform_int(0, 4)];
    c.material = materials[rng.uniform_int(0, 2)];
    c.size_class = sizes[rng.uniform_int(0, 2)];
    return c;
}

inline double size_for(SizeClass s, Rng& rng) {
    switch (s) {
        case SizeClass::small: return rng.uniform(14.0, 18.0);
        case SizeClass::medium: return rng.uniform(20.0, 28.0);
        case SizeClass::large: return rng.uniform(32.0, 44.0);
        default: return rng.uniform(20.0, 28.0);
    }
}

inline ScenarioObject make_snitch(Vec2 p0, int n_frames, int depth) {
    ScenarioObject s;
    s.id = 0;
    s.object_class = {"snitch", SizeClass::small, "gold"};
    s.width = 16.0;
    s.height = 16.0;
    s.depth = depth;
    s.waypoints = {{0, p0}, {n_frames - 1, p0}};
    return s;
}

/// Start position for an approaching actor: offset from the target far
/// enough that their boxes start disjoint, clamped into the frame.
inline Vec2 actor_start(Vec2 p0, const ScenarioObject& actor, const ScenarioParams& p,
                        Rng& rng) {
    const double dx = (rng.uniform_int(0, 1) ? 1.0 : -1.0) * rng.uniform(48.0, 90.0);
    const double dy = (rng.uniform_int(0, 1) ? 1.0 : -1.0) * rng.uniform(24.0, 60.0);
    return clamp_center({p0.x + dx, p0.y + dy}, actor, p);
}

}  // namespace detail

/// Deterministically builds one scripted scenario for the requested task
/// template. The target is always object 0; a containment or occlusion
/// actor, when present, is object 1 and sits nearer the camera than the
/// target, while distractors stay behind it so they can never hide it.
inline ScenarioScript generate_scenario(const ScenarioParams& params, std::uint64_t seed) {
    if (params.n_frames < 220) throw std::invalid_argument("templates need at least 220 frames");
    if (params.min_objects < 1 || params.max_objects > 15 ||
        params.min_objects > params.max_objects)
        throw std::invalid_argument("object count bounds are invalid");
    if (params.frame_width < 320.0 || params.frame_height < 240.0)
        throw std::invalid_argument("frame is too small for the templates");

    Rng rng(seed);
    ScenarioScript script;
    script.n_frames = params.n_frames;
    script.frame_width = params.frame_width;
    script.frame_height = params.frame_height;
    script.target = 0;

    const int n_objects = rng.uniform_int(params.min_objects, params.max_objects);
    const Vec2 p0{rng.uniform(80.0, params.frame_width - 80.0),
                  rng.uniform(70.0, params.frame_height - 70.0)};

    const bool has_actor = params.kind != ScenarioTemplate::visible_only;
    script.objects.push_back(detail::make_snitch(p0, params.n_frames, has_actor ? 1 : 0));

    if (params.kind == ScenarioTemplate::occlusion) {
        ScenarioObject occ;
        occ.id = 1;
        occ.object_class = {"cube", SizeClass::large, "rubber"};
        occ.width = 64.0;
        occ.height = 48.0;
        occ.depth = 0;
        const Vec2 a0 = detail::actor_start(p0, occ, params, rng);
        const int ta = 30 + rng.uniform_int(0, 40);
        const int t_on = ta + 24;
        const int t_off = t_on + 30;
        occ.waypoints = {{0, a0},        {ta, a0},          {t_on, p0}, {t_off, p0},
                         {t_off + 24, a0}, {params.n_frames - 1, a0}};
        script.objects.push_back(occ);
    } else if (params.kind == ScenarioTemplate::containment ||
               params.kind == ScenarioTemplate::carry) {
        ScenarioObject cone;
        cone.id = 1;
        cone.object_class = {"cone", SizeClass::medium, "rubber"};
        cone.width = 40.0;
        cone.height = 40.0;
        cone.depth = 0;
        const Vec2 a0 = detail::actor_start(p0, cone, params, rng);
        const int ta = 20 + rng.uniform_int(0, 30);
        const int tc = ta + 24;

        if (params.kind == ScenarioTemplate::containment) {
            const int td = tc + 40 + rng.uniform_int(0, 30);
            cone.waypoints = {{0, a0},        {ta, a0},          {tc, p0}, {td, p0},
                              {td + 24, a0},  {params.n_frames - 1, a0}};
            script.actions.push_back({tc, "contain", 0, 1});
            script.actions.push_back({td, "pick&place", 0, 1});
        } else {
            const int s1 = 10 + rng.uniform_int(0, 10);
            const int carry_frames = 30 + rng.uniform_int(0, 20);
            const int s2 = 10 + rng.uniform_int(0, 10);
            const int tm = tc + s1 + carry_frames;
            const int td = tm + s2;
            const Vec2 p1 = detail::clamp_center(
                {p0.x + (rng.uniform_int(0, 1) ? 1.0 : -1.0) * rng.uniform(40.0, 90.0),
                 p0.y + (rng.uniform_int(0, 1) ? 1.0 : -1.0) * rng.uniform(30.0, 60.0)},
                cone, params);
            const Vec2 exit = detail::actor_start(p1, cone, params, rng);
            cone.waypoints = {{0, a0},      {ta, a0},      {tc, p0},
                              {tc + s1, p0}, {tm, p1},      {td, p1},
                              {td + 24, exit}, {params.n_frames - 1, exit}};
            // While attached the target rides the cone: identical waypoints
            // over the shared span keep the two trajectories bit-equal.
            ScenarioObject& snitch = script.objects[0];
            snitch.waypoints = {{0, p0},      {tc, p0}, {tc + s1, p0},
                                {tm, p1},     {td, p1}, {params.n_frames - 1, p1}};
            script.actions.push_back({tc, "contain", 0, 1});
            script.actions.push_back({td, "pick&place", 0, 1});
        }
        script.objects.push_back(cone);
    }

    const int n_distractors = n_objects - static_cast<int>(script.objects.size());
    for (int i = 0; i < n_distractors; ++i) {
        ScenarioObject d;
        d.id = static_cast<SymbolId>(script.objects.size());
        d.object_class = detail::random_distractor_class(rng);
        d.width = detail::size_for(d.object_class.size_class, rng);
        d.height = detail::size_for(d.object_class.size_class, rng);
        d.depth = 2 + i;
        detail::wander(d, params, rng);
        script.objects.push_back(d);
    }

    validate_script(script);
    return script;
}

}  // namespace aapa
