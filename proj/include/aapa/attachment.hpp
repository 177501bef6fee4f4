// Attachment hierarchy: a forest of (child, parent) edges driven by an
// attach/detach verb registry. Attaching an object to a carrier means the
// child moves with the parent until the matching detach verb fires.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace aapa {

using SymbolId = std::int64_t;

/// A timestamped verb over a (child, parent) pair of symbols, e.g.
/// pick-up(case, hand) reported as {frame, "pick-up", case, hand}.
struct ActionEvent {
    int frame = 0;
    std::string verb;
    SymbolId child = 0;
    SymbolId parent = 0;
};

/// Pairs each attach verb with its counteracting detach verb. A verb may
/// appear in at most one role across the whole registry.
class AttachDetachRegistry {
  public:
    AttachDetachRegistry() = default;

    AttachDetachRegistry(std::initializer_list<std::pair<std::string, std::string>> pairs) {
        for (const auto& [attach, detach] : pairs) add_pair(attach, detach);
    }

    void add_pair(const std::string& attach_verb, const std::string& detach_verb) {
        if (known(attach_verb) || known(detach_verb) || attach_verb == detach_verb)
            throw std::invalid_argument("verb registered in more than one role: " + attach_verb +
                                        "/" + detach_verb);
        attach_.insert(attach_verb);
        detach_.insert(detach_verb);
    }

    [[nodiscard]] bool is_attach(const std::string& verb) const { return attach_.count(verb) > 0; }
    [[nodiscard]] bool is_detach(const std::string& verb) const { return detach_.count(verb) > 0; }
    [[nodiscard]] bool known(const std::string& verb) const {
        return is_attach(verb) || is_detach(verb);
    }

  private:
    std::set<std::string> attach_;
    std::set<std::string> detach_;
};

/// Forest over symbols: every node has at most one parent and no chain loops
/// back on itself. Mutating operations return new values.
class AttachmentHierarchy {
  public:
    [[nodiscard]] std::optional<SymbolId> parent_of(SymbolId child) const {
        const auto it = parent_.find(child);
        if (it == parent_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] bool has_edge(SymbolId child, SymbolId parent) const {
        const auto it = parent_.find(child);
        return it != parent_.end() && it->second == parent;
    }

    [[nodiscard]] bool empty() const { return parent_.empty(); }
    [[nodiscard]] const std::map<SymbolId, SymbolId>& edges() const { return parent_; }

    /// True when `node` appears on the ancestor chain of `obj`.
    [[nodiscard]] bool is_ancestor(SymbolId node, SymbolId obj) const {
        auto cur = parent_of(obj);
        while (cur) {
            if (*cur == node) return true;
            cur = parent_of(*cur);
        }
        return false;
    }

    /// Topmost ancestor of `obj`; `obj` itself when unattached.
    [[nodiscard]] SymbolId root_of(SymbolId obj) const {
        SymbolId cur = obj;
        auto up = parent_of(cur);
        while (up) {
            cur = *up;
            up = parent_of(cur);
        }
        return cur;
    }

    [[nodiscard]] AttachmentHierarchy with_edge(SymbolId child, SymbolId parent) const {
        AttachmentHierarchy next = *this;
        next.parent_[child] = parent;
        return next;
    }

    [[nodiscard]] AttachmentHierarchy without_edge(SymbolId child) const {
        AttachmentHierarchy next = *this;
        next.parent_.erase(child);
        return next;
    }

    /// Removes every edge in which `symbol` takes part, as child or parent.
    [[nodiscard]] AttachmentHierarchy without_symbol(SymbolId symbol) const {
        AttachmentHierarchy next;
        for (const auto& [child, parent] : parent_)
            if (child != symbol && parent != symbol) next.parent_[child] = parent;
        return next;
    }

  private:
    std::map<SymbolId, SymbolId> parent_;
};

inline bool operator==(const AttachmentHierarchy& a, const AttachmentHierarchy& b) {
    return a.edges() == b.edges();
}

/// Applies one action event. Attach verbs insert the (child, parent) edge,
/// rejecting a second parent ("child already attached") and any loop
/// ("cycle rejected"); re-attaching an existing edge is a no-op. Detach verbs
/// remove exactly the named edge and ignore absent ones. Verbs outside the
/// registry leave the hierarchy unchanged.
inline AttachmentHierarchy apply_action(const AttachmentHierarchy& h, const ActionEvent& e,
                                        const AttachDetachRegistry& reg) {
    if (reg.is_attach(e.verb)) {
        if (e.child == e.parent) throw std::invalid_argument("cycle rejected");
        const auto existing = h.parent_of(e.child);
        if (existing) {
            if (*existing == e.parent) return h;
            throw std::invalid_argument("child already attached");
        }
        if (h.is_ancestor(e.child, e.parent)) throw std::invalid_argument("cycle rejected");
        return h.with_edge(e.child, e.parent);
    }
    if (reg.is_detach(e.verb)) {
        if (h.has_edge(e.child, e.parent)) return h.without_edge(e.child);
        return h;
    }
    return h;
}

/// Folds a frame-sorted action list into one hierarchy per frame. The entry
/// for frame t reflects every action with frame <= t, so an attach at t and
/// its detach at T hold the edge on frames t..T-1. Errors are reported with
/// the offending frame index.
inline std::vector<AttachmentHierarchy> hierarchy_timeline(const std::vector<ActionEvent>& actions,
                                                           const AttachDetachRegistry& reg,
                                                           int n_frames) {
    if (n_frames < 0) throw std::invalid_argument("negative frame count");
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i].frame < 0 || actions[i].frame >= n_frames)
            throw std::invalid_argument("frame " + std::to_string(actions[i].frame) +
                                        ": action outside [0, n_frames)");
        if (i > 0 && actions[i].frame < actions[i - 1].frame)
            throw std::invalid_argument("actions not sorted by frame");
    }
    std::vector<AttachmentHierarchy> timeline(static_cast<std::size_t>(n_frames));
    AttachmentHierarchy current;
    std::size_t next = 0;
    for (int t = 0; t < n_frames; ++t) {
        while (next < actions.size() && actions[next].frame == t) {
            try {
                current = apply_action(current, actions[next], reg);
            } catch (const std::invalid_argument& err) {
                throw std::invalid_argument("frame " + std::to_string(t) + ": " + err.what());
            }
            ++next;
        }
        timeline[static_cast<std::size_t>(t)] = current;
    }
    return timeline;
}

/// Walks the ancestor chain of `obj` and returns the first symbol found in
/// `anchored`; empty when no ancestor qualifies. `obj` itself is not a
/// candidate.
inline std::optional<SymbolId> nearest_anchored_ancestor(const AttachmentHierarchy& h,
                                                         SymbolId obj,
                                                         const std::set<SymbolId>& anchored) {
    auto cur = h.parent_of(obj);
    while (cur) {
        if (anchored.count(*cur) > 0) return cur;
        cur = h.parent_of(*cur);
    }
    return std::nullopt;
}

}  // namespace aapa
