#include <aapa/runner.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

int run_cli(int argc, char** argv) {
    CLI::App app{"Symbolic object tracking on synthetic scenario corpora"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic scenario corpus");
    aapa::GenerateParams gen;
    std::string gen_out;
    gen_cmd->add_option("--out", gen_out, "corpus directory to create")->required();
    gen_cmd->add_option("--count", gen.count, "number of scenarios");
    gen_cmd->add_option("--template", gen.kind,
                        "visible | occlusion | containment | carry | mixed");
    gen_cmd->add_option("--seed", gen.seed, "corpus seed");
    gen_cmd->add_option("--frames", gen.n_frames, "frames per scenario");
    gen_cmd->add_option("--min-objects", gen.min_objects, "minimum objects per scene");
    gen_cmd->add_option("--max-objects", gen.max_objects, "maximum objects per scene");

    // run --------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Run a tracking model over a corpus");
    aapa::RunConfig flags;
    std::string run_corpus, run_out, run_registry, config_path, lacater_dir;
    run_cmd->add_option("--model", flags.model, "pa | aapa");
    run_cmd->add_option("--tau", flags.tau, "assignment cost cap");
    run_cmd->add_option("--appear", flags.appear_threshold, "frames before a track is anchored");
    run_cmd->add_option("--disappear", flags.disappear_threshold,
                        "unexplained frames before an anchor is dropped");
    run_cmd->add_option("--occlusion-overlap", flags.occlusion_overlap,
                        "cover fraction treated as occlusion");
    run_cmd->add_option("--noise", flags.noise, "detection stream profile name");
    run_cmd->add_option("--seed", flags.seed, "seed stamped into reports");
    run_cmd->add_option("--corpus", run_corpus, "corpus directory");
    run_cmd->add_option("--out", run_out, "output directory for predictions and reports");
    run_cmd->add_option("--registry", run_registry, "attach/detach verb registry file");
    run_cmd->add_option("--config", config_path, "key=value settings file (flags win)");
    run_cmd->add_option("--jobs", flags.jobs, "parallel scenario workers");
    run_cmd->add_option("--lacater-import", lacater_dir,
                        "directory of scene JSON files to import into --corpus first");

    // guidance ---------------------------------------------------------
    auto* guide_cmd = app.add_subcommand("guidance", "Write tracking vectors and weight matrices");
    aapa::GuidanceParams guide;
    std::string guide_corpus, guide_out, guide_registry;
    guide_cmd->add_option("--corpus", guide_corpus, "corpus directory")->required();
    guide_cmd->add_option("--out", guide_out, "output directory")->required();
    guide_cmd->add_option("--w", guide.w, "guidance weight");
    guide_cmd->add_flag("--normalize", guide.normalize, "apply row-wise softmax");
    guide_cmd->add_option("--k", guide.k, "matrix width (default: widest scene)");
    guide_cmd->add_option("--registry", guide_registry, "attach/detach verb registry file");

    // compare ----------------------------------------------------------
    auto* compare_cmd = app.add_subcommand("compare", "Tabulate evaluation reports side by side");
    std::vector<std::string> report_paths;
    std::string compare_out;
    compare_cmd->add_option("reports", report_paths, "report.json files")->required();
    compare_cmd->add_option("--out", compare_out, "directory for comparison.{txt,json}");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*gen_cmd) {
        gen.out = gen_out;
        aapa::cmd_generate(gen);
        std::printf("generated %d scenarios at %s\n", gen.count, gen_out.c_str());
        return 0;
    }

    if (*run_cmd) {
        aapa::RunConfig config;
        std::map<std::string, std::string> file_entries;
        if (!config_path.empty())
            file_entries = aapa::parse_config_text(aapa::read_text_file(config_path));
        aapa::apply_config_entries(config, file_entries);

        if (run_cmd->count("--model")) config.model = flags.model;
        if (run_cmd->count("--tau")) config.tau = flags.tau;
        if (run_cmd->count("--appear")) config.appear_threshold = flags.appear_threshold;
        if (run_cmd->count("--disappear")) config.disappear_threshold = flags.disappear_threshold;
        if (run_cmd->count("--occlusion-overlap"))
            config.occlusion_overlap = flags.occlusion_overlap;
        if (run_cmd->count("--noise")) config.noise = flags.noise;
        if (run_cmd->count("--seed")) config.seed = flags.seed;
        if (run_cmd->count("--corpus")) config.corpus = run_corpus;
        if (run_cmd->count("--out")) config.out = run_out;
        if (run_cmd->count("--registry")) config.registry = run_registry;
        if (run_cmd->count("--jobs")) config.jobs = flags.jobs;

        if (!lacater_dir.empty()) {
            if (config.corpus.empty())
                throw std::invalid_argument("--lacater-import needs --corpus as the destination");
            aapa::ImportParams import;
            import.input = lacater_dir;
            import.out = config.corpus;
            const int imported = aapa::cmd_import(import);
            std::printf("imported %d scenes into %s\n", imported, config.corpus.string().c_str());
            const bool noise_chosen = run_cmd->count("--noise") > 0 ||
                                      file_entries.count("noise") > 0;
            if (!noise_chosen) config.noise = "import";
        }

        const aapa::RunResult result = aapa::cmd_run(config);
        std::fputs(aapa::render_text_table({result.merged}).c_str(), stdout);
        if (!config.out.empty())
            std::printf("wrote %zu prediction streams and report.{json,txt} to %s\n",
                        result.scenarios.size(), config.out.string().c_str());
        return 0;
    }

    if (*guide_cmd) {
        guide.corpus = guide_corpus;
        guide.out = guide_out;
        guide.registry = guide_registry;
        aapa::cmd_guidance(guide);
        std::printf("wrote guidance artifacts to %s\n", guide_out.c_str());
        return 0;
    }

    if (*compare_cmd) {
        std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
        const std::string table = aapa::cmd_compare(paths, compare_out);
        std::fputs(table.c_str(), stdout);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
