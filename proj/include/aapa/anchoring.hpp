// Symbol anchoring with object permanence. Each frame: match detections to
// anchors at optimal cost, then explain every unmatched anchor before giving
// it up, in priority order: it moved with whatever it is attached to, it is
// occluded where it was last seen, or it is missing and on a countdown.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "aapa/assignment.hpp"
#include "aapa/attachment.hpp"
#include "aapa/geometry.hpp"

namespace aapa {

struct AnchoringConfig {
    AlignmentConfig alignment;
    int appear_threshold = 3;      // consecutive detections before a candidate becomes a symbol
    int disappear_threshold = 5;   // consecutive unexplained frames before a symbol is dropped
    double occlusion_overlap = 0.4;
    bool action_aware = true;      // false ignores the action stream entirely

    explicit AnchoringConfig(double tau = 6500.0) : alignment(tau) {}
};

enum class AnchorStatus { visible, occluded, attached_follow, missing };

/// A maintained symbol: identity, class, last known box, and how that box was
/// obtained this frame.
struct Anchor {
    SymbolId id = 0;
    ObjectClass object_class;
    BoundingBox box;
    AnchorStatus status = AnchorStatus::visible;
    int missing_count = 0;  // consecutive unexplained frames
    int seen_count = 0;     // total matched frames
};

/// A detection streak that has not yet earned a symbol id.
struct CandidateTrack {
    ObjectClass object_class;
    BoundingBox box;
    int consecutive = 0;
};

/// Complete tracker state between frames. `step` is a pure transition, so
/// states can be copied, compared, and replayed freely.
struct WorldState {
    int frame = -1;
    std::vector<Anchor> anchors;  // ascending id order
    AttachmentHierarchy hierarchy;
    std::map<SymbolId, Vec2> attach_offsets;  // child center relative to parent center
    std::vector<CandidateTrack> candidates;
    SymbolId next_symbol = 0;

    [[nodiscard]] const Anchor* find(SymbolId id) const {
        for (const auto& a : anchors)
            if (a.id == id) return &a;
        return nullptr;
    }
    [[nodiscard]] Anchor* find(SymbolId id) {
        for (auto& a : anchors)
            if (a.id == id) return &a;
        return nullptr;
    }
};

inline bool operator==(const Anchor& a, const Anchor& b) {
    return a.id == b.id && a.object_class == b.object_class && a.box == b.box &&
           a.status == b.status && a.missing_count == b.missing_count &&
           a.seen_count == b.seen_count;
}

inline bool operator==(const CandidateTrack& a, const CandidateTrack& b) {
    return a.object_class == b.object_class && a.box == b.box && a.consecutive == b.consecutive;
}

inline bool operator==(const WorldState& a, const WorldState& b) {
    const auto offsets_equal = [](const std::map<SymbolId, Vec2>& x,
                                  const std::map<SymbolId, Vec2>& y) {
        if (x.size() != y.size()) return false;
        for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy)
            if (ix->first != iy->first || ix->second.x != iy->second.x ||
                ix->second.y != iy->second.y)
                return false;
        return true;
    };
    return a.frame == b.frame && a.anchors == b.anchors && a.hierarchy == b.hierarchy &&
           offsets_equal(a.attach_offsets, b.attach_offsets) && a.candidates == b.candidates &&
           a.next_symbol == b.next_symbol;
}

/// Child box implied by a localized parent: parent center plus the recorded
/// rigid offset, child size retained.
inline BoundingBox follow_parent(const BoundingBox& child_box, const BoundingBox& parent_box,
                                 Vec2 offset) {
    if (parent_box.absent()) throw std::runtime_error("parent not localizable");
    return BoundingBox::from_center(parent_box.center() + offset, child_box.w, child_box.h);
}

/// Disposition of every anchor that alignment failed to match this frame.
struct HypothesisOutcome {
    std::map<SymbolId, AnchorStatus> status;
    std::map<SymbolId, BoundingBox> box;  // only for attached_follow entries
};

/// Explains lost anchors against the working state for the current frame
/// (matched anchors already refreshed, hierarchy already updated).
///
/// Attachment-follow cascades from every localized ancestor: a lost child
/// whose parent is visible, following, or occluded inherits the parent's
/// motion through the recorded offset, and its own children follow in turn.
/// Remaining anchors whose last box is covered at least `occlusion_overlap`
/// by a currently visible anchor freeze in place as occluded, and may then
/// localize their own children. Anything left is missing.
inline HypothesisOutcome hypothesis_reason(const std::vector<Anchor>& anchors,
                                           const AttachmentHierarchy& hierarchy,
                                           const std::map<SymbolId, Vec2>& offsets,
                                           const std::set<SymbolId>& matched,
                                           const AnchoringConfig& cfg) {
    HypothesisOutcome out;
    std::map<SymbolId, BoundingBox> working_box;
    std::map<SymbolId, AnchorStatus> working_status;
    for (const auto& a : anchors) {
        working_box[a.id] = a.box;
        working_status[a.id] = matched.count(a.id) ? AnchorStatus::visible : AnchorStatus::missing;
    }
    const auto localized = [&](SymbolId id) {
        const auto it = working_status.find(id);
        return it != working_status.end() && it->second != AnchorStatus::missing;
    };

    // Re-evaluates follow boxes until the chain settles, so a parent that
    // moves (or upgrades from occluded to following) drags its descendants
    // along within the same frame.
    const auto follow_fixpoint = [&]() {
        bool progress = true;
        while (progress) {
            progress = false;
            for (const auto& a : anchors) {
                if (matched.count(a.id)) continue;
                const auto parent = hierarchy.parent_of(a.id);
                if (!parent || !localized(*parent)) continue;
                const auto off = offsets.find(a.id);
                if (off == offsets.end()) continue;
                const BoundingBox followed =
                    follow_parent(working_box[a.id], working_box[*parent], off->second);
                if (working_status[a.id] == AnchorStatus::attached_follow &&
                    working_box[a.id] == followed)
                    continue;
                out.status[a.id] = AnchorStatus::attached_follow;
                out.box[a.id] = followed;
                working_box[a.id] = followed;
                working_status[a.id] = AnchorStatus::attached_follow;
                progress = true;
            }
        }
    };

    follow_fixpoint();

    // Occlusion: frozen last box covered by something currently visible.
    for (const auto& a : anchors) {
        if (matched.count(a.id) || out.status.count(a.id)) continue;
        for (const auto& v : anchors) {
            if (v.id == a.id || !matched.count(v.id)) continue;
            if (covered_fraction(a.box, working_box[v.id]) >= cfg.occlusion_overlap) {
                out.status[a.id] = AnchorStatus::occluded;
                working_status[a.id] = AnchorStatus::occluded;
                break;
            }
        }
    }

    follow_fixpoint();  // occluded parents localize their children too

    for (const auto& a : anchors)
        if (!matched.count(a.id) && !out.status.count(a.id))
            out.status[a.id] = AnchorStatus::missing;
    return out;
}

/// One perception cycle: returns the successor state for the next frame's
/// detections and the action events reported for that frame.
///
/// Order of business: action events update the attachment hierarchy (skipped
/// entirely when action_aware is off); detections are assigned to anchors at
/// optimal capped cost; offsets are recorded for edges created this frame;
/// unmatched anchors are explained or age toward dropping; unmatched
/// detections extend candidate streaks that promote to fresh symbols after
/// appear_threshold consecutive frames.
inline WorldState step(const WorldState& state, const std::vector<Detection>& detections,
                       const std::vector<ActionEvent>& actions, const AttachDetachRegistry& reg,
                       const AnchoringConfig& cfg) {
    WorldState next = state;
    next.frame = state.frame + 1;
    const int t = next.frame;
    const std::string frame_tag = "frame " + std::to_string(t) + ": ";

    for (const auto& d : detections)
        if (d.frame != t)
            throw std::runtime_error(frame_tag + "detection carries frame " +
                                     std::to_string(d.frame));
    for (const auto& e : actions)
        if (e.frame != t)
            throw std::runtime_error(frame_tag + "action carries frame " +
                                     std::to_string(e.frame));

    // 1. Action stream drives the hierarchy.
    std::vector<SymbolId> new_edge_children;
    if (cfg.action_aware) {
        for (const auto& e : actions) {
            if (!reg.known(e.verb)) continue;
            if (next.find(e.child) == nullptr || next.find(e.parent) == nullptr)
                throw std::runtime_error(frame_tag + "action names unknown symbol");
            AttachmentHierarchy updated;
            try {
                updated = apply_action(next.hierarchy, e, reg);
            } catch (const std::invalid_argument& err) {
                throw std::runtime_error(frame_tag + err.what());
            }
            const bool had = next.hierarchy.has_edge(e.child, e.parent);
            const bool has = updated.has_edge(e.child, e.parent);
            if (has && !had) new_edge_children.push_back(e.child);
            if (had && !has) next.attach_offsets.erase(e.child);
            next.hierarchy = updated;
        }
    }

    // 2. Optimal detection-to-anchor assignment; matches win over any other
    // explanation and refresh box and class.
    std::vector<TrackedBox> anchor_boxes;
    anchor_boxes.reserve(next.anchors.size());
    for (const auto& a : next.anchors) anchor_boxes.push_back({a.object_class, a.box});
    const AlignmentResult aligned = align(anchor_boxes, detections, cfg.alignment);

    std::set<SymbolId> matched_ids;
    for (const auto& [ai, dj] : aligned.matched) {
        Anchor& a = next.anchors[ai];
        a.box = detections[dj].box;
        a.object_class = detections[dj].object_class;
        a.status = AnchorStatus::visible;
        a.missing_count = 0;
        a.seen_count += 1;
        matched_ids.insert(a.id);
    }

    // 3. Rigid offsets for edges created this frame, from the freshest boxes
    // available on both ends.
    for (const SymbolId child : new_edge_children) {
        const auto parent = next.hierarchy.parent_of(child);
        if (!parent) continue;  // attached and detached within one frame
        const Anchor* c = next.find(child);
        const Anchor* p = next.find(*parent);
        next.attach_offsets[child] = c->box.center() - p->box.center();
    }

    // 4. Explain everything alignment left behind.
    const HypothesisOutcome outcome =
        hypothesis_reason(next.anchors, next.hierarchy, next.attach_offsets, matched_ids, cfg);
    for (auto& a : next.anchors) {
        if (matched_ids.count(a.id)) continue;
        const AnchorStatus status = outcome.status.at(a.id);
        a.status = status;
        if (status == AnchorStatus::attached_follow) {
            a.box = outcome.box.at(a.id);
            a.missing_count = 0;
        } else if (status == AnchorStatus::occluded) {
            a.missing_count = 0;  // box stays frozen
        } else {
            a.missing_count += 1;
        }
    }

    // 5. Drop anchors that stayed unexplained too long, with their edges.
    std::vector<Anchor> kept;
    kept.reserve(next.anchors.size());
    for (const auto& a : next.anchors) {
        if (a.status == AnchorStatus::missing && a.missing_count >= cfg.disappear_threshold) {
            for (const auto& [child, parent] : next.hierarchy.edges())
                if (parent == a.id) next.attach_offsets.erase(child);
            next.attach_offsets.erase(a.id);
            next.hierarchy = next.hierarchy.without_symbol(a.id);
        } else {
            kept.push_back(a);
        }
    }
    next.anchors = std::move(kept);

    // 6. Leftover detections feed candidate streaks; streaks that broke die,
    // streaks that reached the threshold become symbols.
    std::vector<Detection> leftover;
    for (const std::size_t dj : aligned.unmatched_detections) leftover.push_back(detections[dj]);
    std::vector<TrackedBox> candidate_boxes;
    for (const auto& c : next.candidates) candidate_boxes.push_back({c.object_class, c.box});
    const AlignmentResult cand_aligned = align(candidate_boxes, leftover, cfg.alignment);

    std::vector<CandidateTrack> continued;
    for (const auto& [ci, dj] : cand_aligned.matched) {
        CandidateTrack c = next.candidates[ci];
        c.box = leftover[dj].box;
        c.object_class = leftover[dj].object_class;
        c.consecutive += 1;
        continued.push_back(c);
    }
    for (const std::size_t dj : cand_aligned.unmatched_detections)
        continued.push_back({leftover[dj].object_class, leftover[dj].box, 1});

    next.candidates.clear();
    for (const auto& c : continued) {
        if (c.consecutive >= cfg.appear_threshold) {
            Anchor a;
            a.id = next.next_symbol++;
            a.object_class = c.object_class;
            a.box = c.box;
            a.status = AnchorStatus::visible;
            a.seen_count = c.consecutive;
            next.anchors.push_back(a);
        } else {
            next.candidates.push_back(c);
        }
    }

    // 7. Refresh offsets wherever child and parent are both visible, so the
    // rigid-link estimate always reflects the last co-visibility.
    for (const auto& [child, parent] : next.hierarchy.edges()) {
        const Anchor* c = next.find(child);
        const Anchor* p = next.find(parent);
        if (c && p && c->status == AnchorStatus::visible && p->status == AnchorStatus::visible)
            next.attach_offsets[child] = c->box.center() - p->box.center();
    }

    return next;
}

}  // namespace aapa
