#include <catch2/catch_amalgamated.hpp>

#include <aapa/io.hpp>

#include "support/rng.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

namespace {

using namespace aapa;
namespace fs = std::filesystem;

AttachDetachRegistry cater_registry() {
    return AttachDetachRegistry{{"contain", "pick&place"}};
}

fs::path make_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("aapa_io_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool scripts_equal(const ScenarioScript& a, const ScenarioScript& b) {
    if (a.n_frames != b.n_frames || a.frame_width != b.frame_width ||
        a.frame_height != b.frame_height || a.target != b.target ||
        a.objects.size() != b.objects.size() || a.actions.size() != b.actions.size())
        return false;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        const ScenarioObject& x = a.objects[i];
        const ScenarioObject& y = b.objects[i];
        if (x.id != y.id || !(x.object_class == y.object_class) || x.width != y.width ||
            x.height != y.height || x.depth != y.depth ||
            x.waypoints.size() != y.waypoints.size())
            return false;
        for (std::size_t k = 0; k < x.waypoints.size(); ++k)
            if (x.waypoints[k].frame != y.waypoints[k].frame ||
                !(x.waypoints[k].center == y.waypoints[k].center))
                return false;
    }
    for (std::size_t i = 0; i < a.actions.size(); ++i) {
        const ActionEvent& x = a.actions[i];
        const ActionEvent& y = b.actions[i];
        if (x.frame != y.frame || x.verb != y.verb || x.child != y.child || x.parent != y.parent)
            return false;
    }
    return true;
}

const char* kImportFixture = R"({
  "num_frames": 6,
  "width": 320, "height": 240,
  "target": 0,
  "objects": [
    {"id": 0, "class": "snitch:small:gold",
     "boxes": [[100,100,116,116], [104,100,120,116], [120,96,136,112],
               [120,96,136,112], [130,96,146,112], [140,96,156,112]]},
    {"id": 1, "class": "cone:medium:rubber",
     "boxes": [[96,88,136,128], [100,88,140,128], [108,88,148,128],
               [108,88,148,128], [118,88,158,128], [128,88,168,128]]},
    {"id": 2, "class": "cube:large:metal",
     "boxes": [[10,10,42,42], [12,10,44,42], [14,10,46,42],
               [16,10,48,42], [18,10,50,42], null]}
  ],
  "actions": [[5, "pick&place", 0, 1], [2, "contain", 0, 1]],
  "task_labels": ["visible", "visible", "contained", "contained", "carried", "visible"]
})";

}  // namespace

TEST_CASE("class tokens round-trip every field combination") {
    const std::vector<ObjectClass> cases{
        ObjectClass{"snitch", SizeClass::small, "gold"},
        ObjectClass{"cube", SizeClass::unspecified, ""},
        ObjectClass{"cone", SizeClass::large, ""},
        ObjectClass{"cylinder", SizeClass::unspecified, "rubber"},
    };
    CHECK(class_token(cases[0]) == "snitch:small:gold");
    CHECK(class_token(cases[1]) == "cube");
    CHECK(class_token(cases[2]) == "cone:large");
    CHECK(class_token(cases[3]) == "cylinder::rubber");
    for (const ObjectClass& c : cases) CHECK(parse_class_token(class_token(c)) == c);
}

TEST_CASE("malformed class tokens are rejected") {
    CHECK_THROWS_AS(parse_class_token(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_class_token(":small"), std::invalid_argument);
    CHECK_THROWS_AS(parse_class_token("cube:tiny"), std::invalid_argument);
    CHECK_THROWS_AS(parse_class_token("a:small:b:c"), std::invalid_argument);
    CHECK_THROWS_AS(class_token(ObjectClass{"", SizeClass::small, ""}), std::invalid_argument);
    CHECK_THROWS_AS(class_token(ObjectClass{"cu be", SizeClass::small, ""}),
                    std::invalid_argument);
    CHECK_THROWS_AS(class_token(ObjectClass{"cube", SizeClass::small, "a:b"}),
                    std::invalid_argument);
}

TEST_CASE("detection streams round-trip exactly") {
    test_support::Rng rng(7);
    std::vector<Detection> detections;
    for (int i = 0; i < 200; ++i) {
        Detection d;
        d.frame = i / 4;
        d.object_class = ObjectClass{"cube", SizeClass::medium, "rubber"};
        d.box = BoundingBox{rng.uniform(-5, 300), rng.uniform(0, 220), rng.uniform(0.5, 40),
                            rng.uniform(0.5, 40)};
        detections.push_back(d);
    }
    detections.push_back(
        Detection{ObjectClass{"snitch", SizeClass::small, "gold"}, {0.1, 1.0 / 3.0, 16, 16}, 50});

    const std::string text = serialize_detections(detections);
    const std::vector<Detection> back = parse_detections(text);
    REQUIRE(back.size() == detections.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].frame == detections[i].frame);
        CHECK(back[i].object_class == detections[i].object_class);
        CHECK(back[i].box == detections[i].box);
    }
    CHECK(serialize_detections(back) == text);
}

TEST_CASE("detection parsing skips comments and rejects bad records") {
    const std::string good = "# header comment\n\n0 cube 1 2 3 4\n  # indented comment\n1 cone 5 6 7 8\n";
    CHECK(parse_detections(good).size() == 2);

    CHECK_THROWS_WITH(parse_detections("0 cube 1 2 3\n"),
                      Catch::Matchers::ContainsSubstring("expected 6 fields"));
    CHECK_THROWS_WITH(parse_detections("0 cube 1 2 3 x\n"),
                      Catch::Matchers::ContainsSubstring("malformed"));
    CHECK_THROWS_WITH(parse_detections("-1 cube 1 2 3 4\n"),
                      Catch::Matchers::ContainsSubstring("frame out of range"));
    CHECK_THROWS_WITH(parse_detections("0 cube 1 2 0 4\n"),
                      Catch::Matchers::ContainsSubstring("positive"));
}

TEST_CASE("action streams round-trip and validate") {
    const std::vector<ActionEvent> actions{{3, "contain", 0, 1}, {40, "pick&place", 0, 1}};
    const std::string text = serialize_actions(actions);
    CHECK(text == "3 contain 0 1\n40 pick&place 0 1\n");
    const std::vector<ActionEvent> back = parse_actions(text);
    REQUIRE(back.size() == 2);
    CHECK(back[1].verb == "pick&place");
    CHECK(back[1].frame == 40);
    CHECK(back[1].child == 0);
    CHECK(back[1].parent == 1);

    CHECK_THROWS_AS(parse_actions("3 contain 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_actions("3 contain a 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(serialize_actions({{0, "pick up", 0, 1}}), std::invalid_argument);
}

TEST_CASE("annotation files round-trip a generated scenario") {
    ScenarioParams params;
    params.kind = ScenarioTemplate::containment;
    const ScenarioScript script = generate_scenario(params, 2026);
    const auto truth = render_ground_truth(script, cater_registry());
    const AnnotationFile file = annotation_file_from_script(script, truth);

    const std::string text = serialize_annotations(file);
    const AnnotationFile back = parse_annotations(text);

    CHECK(back.target == script.target);
    CHECK(back.classes == file.classes);
    REQUIRE(back.frames.size() == file.frames.size());
    for (std::size_t t = 0; t < file.frames.size(); ++t) {
        CHECK(back.frames[t].frame == file.frames[t].frame);
        CHECK(back.frames[t].target_label == file.frames[t].target_label);
        CHECK(back.frames[t].boxes == file.frames[t].boxes);
    }
    CHECK(serialize_annotations(back) == text);
}

TEST_CASE("annotation parsing enforces stream consistency") {
    const std::string base = "0 snitch:small:gold 1 2 3 4 0 visible\n";
    CHECK(parse_annotations(base).target == 0);

    CHECK_THROWS_WITH(parse_annotations(base + "0 cube 9 9 4 4 1 occluded\n"),
                      Catch::Matchers::ContainsSubstring("conflicting task labels"));
    CHECK_THROWS_WITH(parse_annotations(base + "1 cube:large 1 2 3 4 0 visible\n"),
                      Catch::Matchers::ContainsSubstring("changes class"));
    CHECK_THROWS_WITH(parse_annotations(base + "0 snitch:small:gold 5 6 3 4 0 visible\n"),
                      Catch::Matchers::ContainsSubstring("annotated twice"));
    CHECK_THROWS_WITH(parse_annotations("0 cube 1 2 3 4 0 visible\n"),
                      Catch::Matchers::ContainsSubstring("no snitch"));
    CHECK_THROWS_WITH(
        parse_annotations(base + "0 snitch:small:gold 9 9 3 4 1 visible\n"),
        Catch::Matchers::ContainsSubstring("more than one snitch"));
    CHECK_THROWS_WITH(parse_annotations("0 snitch 1 2 3 4 0 hidden\n"),
                      Catch::Matchers::ContainsSubstring("unknown task label"));
}

TEST_CASE("prediction streams round-trip every status") {
    std::vector<PredictionRecord> records;
    int frame = 0;
    for (const AnchorStatus status : {AnchorStatus::visible, AnchorStatus::occluded,
                                      AnchorStatus::attached_follow, AnchorStatus::missing}) {
        PredictionRecord r;
        r.frame = frame++;
        r.symbol = frame;
        r.object_class = ObjectClass{"cone", SizeClass::medium, "rubber"};
        r.box = BoundingBox{10.25, 20.5, 30.125, 40.0625};
        r.status = status;
        records.push_back(r);
    }

    const std::string text = serialize_predictions(records);
    CHECK(text.find("attached-follow") != std::string::npos);
    const std::vector<PredictionRecord> back = parse_predictions(text);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == records[i]);
    CHECK(serialize_predictions(back) == text);

    CHECK_THROWS_WITH(parse_predictions("0 1 cone 1 2 3 4 gone\n"),
                      Catch::Matchers::ContainsSubstring("unknown anchor status"));
}

TEST_CASE("registry files parse into verb roles") {
    const AttachDetachRegistry reg = parse_registry("contain pick&place\npick-up put-down\n");
    CHECK(reg.is_attach("contain"));
    CHECK(reg.is_detach("pick&place"));
    CHECK(reg.is_attach("pick-up"));
    CHECK(reg.is_detach("put-down"));
    CHECK_FALSE(reg.known("screw-in"));

    CHECK_THROWS_AS(parse_registry("contain pick&place\ncontain drop\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_registry("contain\n"), std::invalid_argument);
    CHECK(parse_registry(default_registry_text()).is_attach("contain"));
}

TEST_CASE("scenario scripts survive a JSON round-trip") {
    for (const ScenarioTemplate kind :
         {ScenarioTemplate::visible_only, ScenarioTemplate::occlusion,
          ScenarioTemplate::containment, ScenarioTemplate::carry}) {
        ScenarioParams params;
        params.kind = kind;
        const ScenarioScript script = generate_scenario(params, 99);
        const std::string text = serialize_script(script);
        const ScenarioScript back = parse_script(text);
        CHECK(scripts_equal(script, back));
        CHECK(serialize_script(back) == text);
    }
}

TEST_CASE("script parsing rejects malformed documents") {
    CHECK_THROWS_WITH(parse_script("{not json"),
                      Catch::Matchers::ContainsSubstring("malformed script JSON"));
    CHECK_THROWS_WITH(parse_script("{}"),
                      Catch::Matchers::ContainsSubstring("malformed script JSON"));

    ScenarioParams params;
    const ScenarioScript script = generate_scenario(params, 5);
    nlohmann::json j = script_to_json(script);
    j["objects"][0]["class"] = "cube";  // demote the target: no snitch remains
    CHECK_THROWS_AS(script_from_json(j), std::invalid_argument);

    nlohmann::json bad_waypoint = script_to_json(script);
    bad_waypoint["objects"][0]["waypoints"][0] = {1, 2};
    CHECK_THROWS_WITH(script_from_json(bad_waypoint),
                      Catch::Matchers::ContainsSubstring("frame, cx, cy"));
}

TEST_CASE("evaluation reports survive a JSON round-trip") {
    test_support::Rng rng(4);
    std::vector<BoundingBox> truth, pred;
    std::vector<TaskLabel> labels;
    for (int i = 0; i < 120; ++i) {
        const BoundingBox gt{rng.uniform(0, 300), rng.uniform(0, 200), 20, 16};
        truth.push_back(gt);
        labels.push_back(all_task_labels()[static_cast<std::size_t>(i % 4)]);
        if (i % 9 == 0)
            pred.push_back(BoundingBox{});
        else
            pred.push_back(BoundingBox{gt.x + rng.uniform(-3, 3), gt.y, gt.w, gt.h});
    }
    EvalReport report = evaluate(pred, truth, labels, 3);
    report.model = "aapa";
    report.tau = 6500;
    report.noise = "none";
    report.seed = 31337;

    const std::string text = serialize_report(report);
    const EvalReport back = parse_report(text);
    CHECK(back.model == report.model);
    CHECK(back.tau == report.tau);
    CHECK(back.noise == report.noise);
    CHECK(back.seed == report.seed);
    CHECK(back.first_scored_frame == report.first_scored_frame);
    CHECK(back.scored_frames == report.scored_frames);
    CHECK(back.overall.iou.n == report.overall.iou.n);
    CHECK(back.overall.iou.sum == report.overall.iou.sum);
    CHECK(back.overall.iou.sumsq == report.overall.iou.sumsq);
    CHECK(back.overall.missing == report.overall.missing);
    for (const TaskLabel label : all_task_labels()) {
        CHECK(back.categories.at(label).l2.sum == report.categories.at(label).l2.sum);
        CHECK(back.categories.at(label).iou.n == report.categories.at(label).iou.n);
    }
    CHECK(serialize_report(back) == text);
    CHECK_THROWS_AS(parse_report("{\"model\": \"aapa\"}"), std::invalid_argument);
}

TEST_CASE("key=value configuration parsing") {
    const std::string text =
        "# run settings\n"
        "model = aapa\n"
        "tau=6500\n"
        "\n"
        "noise = flicker \n";
    const auto config = parse_config_text(text);
    REQUIRE(config.size() == 3);
    CHECK(config.at("model") == "aapa");
    CHECK(config.at("tau") == "6500");
    CHECK(config.at("noise") == "flicker");

    CHECK_THROWS_WITH(parse_config_text("model aapa\n"),
                      Catch::Matchers::ContainsSubstring("expected key=value"));
    CHECK_THROWS_WITH(parse_config_text("model=a\nmodel=b\n"),
                      Catch::Matchers::ContainsSubstring("duplicate key"));
    CHECK_THROWS_WITH(parse_config_text("=value\n"),
                      Catch::Matchers::ContainsSubstring("empty key"));
}

TEST_CASE("corpus layout helpers") {
    CHECK(scenario_dir_name(0) == "scenario_0000");
    CHECK(scenario_dir_name(42) == "scenario_0042");
    CHECK(scenario_dir_name(1234) == "scenario_1234");
    CHECK(detections_filename("none") == "detections_none.txt");
    CHECK_THROWS_AS(detections_filename("has space"), std::invalid_argument);

    const fs::path dir = make_temp_dir("corpus");
    fs::create_directories(dir / "scenario_0002");
    fs::create_directories(dir / "scenario_0000");
    fs::create_directories(dir / "notes");
    write_text_file(dir / "stray.txt", "x");
    const auto scenarios = list_scenarios(dir);
    REQUIRE(scenarios.size() == 2);
    CHECK(scenarios[0].filename() == "scenario_0000");
    CHECK(scenarios[1].filename() == "scenario_0002");
    CHECK_THROWS_AS(list_scenarios(dir / "missing"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("text files round-trip through nested directories") {
    const fs::path dir = make_temp_dir("files");
    const fs::path nested = dir / "a" / "b" / "data.txt";
    const std::string payload = "line one\nline two\n";
    write_text_file(nested, payload);
    CHECK(read_text_file(nested) == payload);
    CHECK_THROWS_AS(read_text_file(dir / "absent.txt"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("the import adapter converts corner boxes and actions") {
    const ImportedScenario scene = import_lacater(kImportFixture);
    CHECK(scene.n_frames == 6);
    CHECK(scene.target == 0);
    REQUIRE(scene.classes.size() == 3);
    CHECK(scene.classes.at(2) == ObjectClass{"cube", SizeClass::large, "metal"});

    REQUIRE(scene.frames.size() == 6);
    CHECK(scene.frames[0].boxes.at(0) == BoundingBox{100, 100, 16, 16});
    CHECK(scene.frames[0].boxes.at(1) == BoundingBox{96, 88, 40, 40});
    CHECK(scene.frames[5].boxes.count(2) == 0);  // null box at the last frame
    CHECK(scene.frames[2].target_label == TaskLabel::contained);
    CHECK(scene.frames[4].target_label == TaskLabel::carried);

    // Actions come back sorted by frame even when written out of order.
    REQUIRE(scene.actions.size() == 2);
    CHECK(scene.actions[0].frame == 2);
    CHECK(scene.actions[0].verb == "contain");
    CHECK(scene.actions[1].frame == 5);

    const std::vector<Detection> detections = detections_from_imported(scene);
    // 18 annotated boxes minus one null minus the hidden target on frames 2-4.
    CHECK(detections.size() == 14);
    for (const Detection& d : detections) {
        const bool target_hidden_frame = d.frame >= 2 && d.frame <= 4;
        if (target_hidden_frame) CHECK(d.object_class.shape != "snitch");
    }
}

TEST_CASE("the import adapter rejects inconsistent scenes") {
    nlohmann::json j = nlohmann::json::parse(kImportFixture);

    nlohmann::json bad = j;
    bad["objects"][0]["boxes"].erase(5);
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("expected 6"));

    bad = j;
    bad["objects"][0]["boxes"][0] = {100, 100, 90, 116};
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("degenerate box"));

    bad = j;
    bad["task_labels"][0] = "lost";
    CHECK_THROWS_AS(import_lacater(bad.dump()), std::invalid_argument);

    bad = j;
    bad["task_labels"].erase(5);
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("one entry per frame"));

    bad = j;
    bad["target"] = 9;
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("not among the objects"));

    bad = j;
    bad["target"] = 1;
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("snitch-shaped"));

    bad = j;
    bad["actions"][0] = {99, "pick&place", 0, 1};
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("outside the scene"));

    bad = j;
    bad["actions"][0] = {2, "contain", 0, 7};
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("unknown object id"));

    bad = j;
    bad["objects"][1]["id"] = 0;
    CHECK_THROWS_WITH(import_lacater(bad.dump()),
                      Catch::Matchers::ContainsSubstring("duplicate object id"));

    CHECK_THROWS_WITH(import_lacater("[1,2"),
                      Catch::Matchers::ContainsSubstring("malformed import JSON"));
}
