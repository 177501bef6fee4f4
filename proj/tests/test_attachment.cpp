#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "aapa/attachment.hpp"
#include "support/rng.hpp"

using namespace aapa;

namespace {

AttachDetachRegistry cater_registry() {
    return AttachDetachRegistry{{"contain", "pick&place"}};
}

AttachDetachRegistry assembly_registry() {
    return AttachDetachRegistry{
        {"pick-up", "put-down"}, {"screw-in", "unscrew"}, {"insert", "take-out"}};
}

// Reference fold: rebuilds the hierarchy for frame t from scratch by applying
// every action with frame <= t. Quadratic, used to cross-check the
// incremental timeline.
AttachmentHierarchy fold_from_scratch(const std::vector<ActionEvent>& actions,
                                      const AttachDetachRegistry& reg, int t) {
    AttachmentHierarchy h;
    for (const auto& e : actions)
        if (e.frame <= t) h = apply_action(h, e, reg);
    return h;
}

bool is_acyclic(const AttachmentHierarchy& h) {
    for (const auto& [child, parent] : h.edges()) {
        (void)parent;
        std::set<SymbolId> seen;
        SymbolId cur = child;
        while (auto up = h.parent_of(cur)) {
            if (!seen.insert(cur).second) return false;
            cur = *up;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("attach verb inserts a child-to-parent edge") {
    const SymbolId snitch = 1, cone = 2;
    const auto reg = cater_registry();
    const auto h = apply_action(AttachmentHierarchy{}, {10, "contain", snitch, cone}, reg);
    REQUIRE(h.has_edge(snitch, cone));
    REQUIRE(h.edges().size() == 1);
}

TEST_CASE("attach followed by detach restores the empty hierarchy") {
    const SymbolId obj = 1, hand = 2;
    const auto reg = assembly_registry();
    auto h = apply_action(AttachmentHierarchy{}, {0, "pick-up", obj, hand}, reg);
    h = apply_action(h, {9, "put-down", obj, hand}, reg);
    REQUIRE(h.empty());
}

TEST_CASE("second parent is rejected") {
    const auto reg = assembly_registry();
    auto h = apply_action(AttachmentHierarchy{}, {0, "pick-up", 1, 2}, reg);
    REQUIRE_THROWS_WITH(apply_action(h, {1, "pick-up", 1, 3}, reg), "child already attached");
    // Re-attaching the same edge is a no-op, not an error.
    REQUIRE(apply_action(h, {1, "pick-up", 1, 2}, reg) == h);
}

TEST_CASE("cycles are rejected") {
    const auto reg = assembly_registry();
    auto h = apply_action(AttachmentHierarchy{}, {0, "pick-up", 1, 2}, reg);
    REQUIRE_THROWS_WITH(apply_action(h, {1, "pick-up", 2, 1}, reg), "cycle rejected");
    h = apply_action(h, {1, "pick-up", 2, 3}, reg);
    REQUIRE_THROWS_WITH(apply_action(h, {2, "pick-up", 3, 1}, reg), "cycle rejected");
    REQUIRE_THROWS_WITH(apply_action(h, {2, "pick-up", 4, 4}, reg), "cycle rejected");
}

TEST_CASE("detaching an absent edge is a no-op") {
    const auto reg = assembly_registry();
    const AttachmentHierarchy empty;
    REQUIRE(apply_action(empty, {0, "put-down", 1, 2}, reg).empty());
    const auto h = apply_action(empty, {0, "pick-up", 1, 2}, reg);
    // Wrong parent named: the edge stays.
    REQUIRE(apply_action(h, {1, "put-down", 1, 3}, reg) == h);
}

TEST_CASE("verbs outside the registry leave the hierarchy unchanged") {
    const auto reg = cater_registry();
    const auto h = apply_action(AttachmentHierarchy{}, {0, "contain", 1, 2}, reg);
    REQUIRE(apply_action(h, {1, "slide", 3, 4}, reg) == h);
    REQUIRE(apply_action(h, {1, "rotate", 1, 2}, reg) == h);
}

TEST_CASE("registry rejects verbs used in more than one role") {
    REQUIRE_THROWS_AS(AttachDetachRegistry({{"grab", "grab"}}), std::invalid_argument);
    REQUIRE_THROWS_AS(AttachDetachRegistry({{"grab", "drop"}, {"grab", "release"}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(AttachDetachRegistry({{"grab", "drop"}, {"drop", "release"}}),
                      std::invalid_argument);
}

TEST_CASE("assembly sequence builds the expected tree") {
    const SymbolId hubcover = 1, subassembly = 2, plug = 3, kase = 4, hand = 5;
    const auto reg = assembly_registry();
    AttachmentHierarchy h;
    h = apply_action(h, {0, "screw-in", hubcover, kase}, reg);
    h = apply_action(h, {1, "insert", subassembly, kase}, reg);
    h = apply_action(h, {2, "screw-in", plug, kase}, reg);
    h = apply_action(h, {3, "pick-up", kase, hand}, reg);

    REQUIRE(h.edges().size() == 4);
    REQUIRE(h.has_edge(hubcover, kase));
    REQUIRE(h.has_edge(subassembly, kase));
    REQUIRE(h.has_edge(plug, kase));
    REQUIRE(h.has_edge(kase, hand));
    REQUIRE(h.root_of(plug) == hand);
    REQUIRE(h.root_of(hand) == hand);
}

TEST_CASE("timeline holds an edge from attach frame to the frame before detach") {
    const SymbolId obj = 1, hand = 2;
    const auto reg = assembly_registry();
    const std::vector<ActionEvent> actions{{0, "pick-up", obj, hand}, {9, "put-down", obj, hand}};
    const auto timeline = hierarchy_timeline(actions, reg, 12);
    REQUIRE(timeline.size() == 12);
    for (int t = 0; t <= 8; ++t) REQUIRE(timeline[t].has_edge(obj, hand));
    for (int t = 9; t < 12; ++t) REQUIRE(timeline[t].empty());
}

TEST_CASE("timeline without a detach persists to the last frame") {
    const auto reg = cater_registry();
    const auto timeline = hierarchy_timeline({{5, "contain", 1, 2}}, reg, 10);
    for (int t = 0; t < 5; ++t) REQUIRE(timeline[t].empty());
    for (int t = 5; t < 10; ++t) REQUIRE(timeline[t].has_edge(1, 2));
}

TEST_CASE("timeline of an empty action list is all-empty") {
    const auto timeline = hierarchy_timeline({}, cater_registry(), 4);
    REQUIRE(timeline.size() == 4);
    for (const auto& h : timeline) REQUIRE(h.empty());
}

TEST_CASE("timeline validates ordering and range, and reports the frame on errors") {
    const auto reg = assembly_registry();
    REQUIRE_THROWS_WITH(
        hierarchy_timeline({{3, "pick-up", 1, 2}, {1, "pick-up", 3, 4}}, reg, 10),
        "actions not sorted by frame");
    REQUIRE_THROWS_WITH(hierarchy_timeline({{12, "pick-up", 1, 2}}, reg, 10),
                        "frame 12: action outside [0, n_frames)");
    REQUIRE_THROWS_WITH(
        hierarchy_timeline({{2, "pick-up", 1, 2}, {7, "pick-up", 1, 3}}, reg, 10),
        "frame 7: child already attached");
}

TEST_CASE("timeline matches the from-scratch fold on random sequences") {
    test_support::Rng rng(0x70F0u);
    const auto reg = assembly_registry();
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ActionEvent> actions;
        int frame = 0;
        AttachmentHierarchy probe;
        while (actions.size() < 12 && frame < 19) {
            frame += rng.uniform_int(0, 2);
            if (frame >= 20) break;
            const char* verbs[] = {"pick-up", "put-down", "insert", "take-out"};
            ActionEvent e{frame, verbs[rng.uniform_int(0, 3)],
                          rng.uniform_int(1, 6), rng.uniform_int(1, 6)};
            try {
                probe = apply_action(probe, e, reg);
            } catch (const std::invalid_argument&) {
                continue;  // keep the sequence valid so the timeline folds cleanly
            }
            if (e.child == e.parent) continue;
            actions.push_back(e);
        }
        const auto timeline = hierarchy_timeline(actions, reg, 20);
        for (int t = 0; t < 20; ++t)
            REQUIRE(timeline[t] == fold_from_scratch(actions, reg, t));
    }
}

TEST_CASE("accepted actions always preserve single-parent and acyclicity") {
    test_support::Rng rng(0xFA57u);
    const auto reg = cater_registry();
    for (int trial = 0; trial < 500; ++trial) {
        AttachmentHierarchy h;
        for (int step = 0; step < 30; ++step) {
            const ActionEvent e{step, rng.chance(0.6) ? "contain" : "pick&place",
                                rng.uniform_int(1, 5), rng.uniform_int(1, 5)};
            try {
                h = apply_action(h, e, reg);
            } catch (const std::invalid_argument&) {
                continue;
            }
            REQUIRE(is_acyclic(h));
        }
    }
}

TEST_CASE("nearest anchored ancestor walks past unanchored links") {
    const SymbolId plug = 1, kase = 2, hand = 3;
    AttachmentHierarchy h;
    h = h.with_edge(plug, kase);
    h = h.with_edge(kase, hand);

    REQUIRE(nearest_anchored_ancestor(h, plug, {hand}) == hand);
    REQUIRE(nearest_anchored_ancestor(h, plug, {kase, hand}) == kase);
    REQUIRE(nearest_anchored_ancestor(h, plug, {}) == std::nullopt);
    REQUIRE(nearest_anchored_ancestor(h, hand, {hand}) == std::nullopt);  // self never counts
    REQUIRE(nearest_anchored_ancestor(AttachmentHierarchy{}, plug, {hand}) == std::nullopt);
}

TEST_CASE("without_symbol drops every touching edge") {
    AttachmentHierarchy h;
    h = h.with_edge(1, 2);
    h = h.with_edge(2, 3);
    h = h.with_edge(4, 3);
    const auto pruned = h.without_symbol(3);
    REQUIRE(pruned.edges().size() == 1);
    REQUIRE(pruned.has_edge(1, 2));
}
