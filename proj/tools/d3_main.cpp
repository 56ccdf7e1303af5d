// d3: deep dual descriptor pipeline for dynamic-scene video classification.
//
// Subcommands: extract, select, codebook, describe, evaluate, compare-selection.
// Exit codes: 0 success, 2 config error, 3 data error, 4 pipeline error.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "d3/cli.hpp"

namespace {

using KvList = std::vector<std::pair<std::string, std::string>>;

// Every tuning flag funnels through the same key=value path as config files,
// so validation and precedence live in one place.
void add_pipeline_flags(CLI::App* cmd, KvList& overrides) {
    const auto kv = [cmd, &overrides](const std::string& flag, const char* key, const char* desc) {
        cmd->add_option_function<std::string>(
            flag, [key, &overrides](const std::string& v) { overrides.emplace_back(key, v); }, desc);
    };
    kv("--manifest", "manifest", "dataset manifest (video_id<TAB>class<TAB>feature_path)");
    kv("--strategy", "strategy",
       "selection strategy: medoid, random, chc, ghd, consecutive, thumbnail, uniform");
    kv("--frames", "frames", "number of key frames R");
    kv("--tau", "tau", "key segment size (even; segments span tau+1 frames)");
    kv("--subset", "subset", "medoid search subset size (0 = auto)");
    kv("--repeats", "repeats", "medoid search repeats");
    kv("--ghd-level", "ghd_level", "GHD threshold level: -1, 0 or +1");
    kv("--fraction", "fraction", "consecutive: fraction of frames to keep");
    kv("--period", "period_s", "thumbnail: block period in seconds");
    kv("--encoding", "encoding", "feature aggregation: bof, vlad or fv");
    kv("--codebook-size", "codebook_size", "number of visual words / mixture components");
    kv("--seed", "seed", "master seed");
    kv("--threads", "threads", "worker threads for per-video and per-fold work");
    kv("--svm-c", "svm_c", "SVM regularization parameter C");
    kv("--out", "out", "output directory or file");
    kv("--models", "models", "trained models directory (describe)");
    kv("--strategies", "strategies", "compare-selection: comma-separated strategy list");
    kv("--frame-counts", "frame_counts", "compare-selection: comma-separated frame counts");
    cmd->add_flag_callback(
        "--shared-models", [&overrides]() { overrides.emplace_back("shared_models", "1"); },
        "train codebooks/GMMs once on all videos (leaky; labeled in reports)");
}

d3::RunConfig build_config(const std::string& config_path, const KvList& overrides) {
    d3::RunConfig cfg;
    if (!config_path.empty()) cfg = d3::load_run_config(config_path);
    for (const auto& [key, value] : overrides) d3::set_config_value(cfg, key, value);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep dual descriptor (D3) pipeline for dynamic-scene video classification"};
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "extract toy features from a directory of PGM frames");
    std::string frames_dir, extract_out;
    size_t grid = 7;
    float fps = 25.0f;
    extract->add_option("--frames-dir", frames_dir, "directory of P5 PGM frames (lexicographic = temporal order)")
        ->required();
    extract->add_option("--grid", grid, "grid cells per side (L = grid*grid)");
    extract->add_option("--fps", fps, "frames per second stored in the header");
    extract->add_option("--out", extract_out, "output .d3ft feature file")->required();

    // select
    auto* select = app.add_subcommand("select", "run key-frame selection on one feature file");
    std::string select_input, select_config;
    KvList select_overrides;
    select->add_option("--input", select_input, "input .d3ft feature file")->required();
    select->add_option("--config", select_config, "key=value config file");
    add_pipeline_flags(select, select_overrides);

    // codebook
    auto* codebook = app.add_subcommand("codebook", "train static and dynamic aggregation models");
    std::string codebook_config;
    KvList codebook_overrides;
    codebook->add_option("--config", codebook_config, "key=value config file");
    add_pipeline_flags(codebook, codebook_overrides);

    // describe
    auto* describe = app.add_subcommand("describe", "encode per-video descriptors with trained models");
    std::string describe_config;
    KvList describe_overrides;
    describe->add_option("--config", describe_config, "key=value config file");
    add_pipeline_flags(describe, describe_overrides);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "leave-one-out evaluation of d3s, d3d and fused d3");
    std::string evaluate_config;
    KvList evaluate_overrides;
    evaluate->add_option("--config", evaluate_config, "key=value config file");
    add_pipeline_flags(evaluate, evaluate_overrides);

    // compare-selection
    auto* compare = app.add_subcommand("compare-selection",
                                       "accuracy grid over selection strategies and frame counts");
    std::string compare_config;
    KvList compare_overrides;
    compare->add_option("--config", compare_config, "key=value config file");
    add_pipeline_flags(compare, compare_overrides);

    try {
        app.parse(argc, argv);

        if (extract->parsed()) return d3::run_extract(frames_dir, grid, fps, extract_out);
        if (select->parsed()) {
            const d3::RunConfig cfg = build_config(select_config, select_overrides);
            const std::filesystem::path out =
                cfg.out_dir.empty() ? std::filesystem::path("selection.csv")
                                    : (std::filesystem::is_directory(cfg.out_dir)
                                           ? cfg.out_dir / "selection.csv"
                                           : cfg.out_dir);
            return d3::run_select(select_input, cfg.pipeline.selection, cfg.pipeline.seed, out);
        }
        if (codebook->parsed()) return d3::run_codebook(build_config(codebook_config, codebook_overrides));
        if (describe->parsed()) return d3::run_describe(build_config(describe_config, describe_overrides));
        if (evaluate->parsed()) return d3::run_evaluate(build_config(evaluate_config, evaluate_overrides));
        if (compare->parsed())
            return d3::run_compare_selection(build_config(compare_config, compare_overrides));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return d3::exit_code_for(e);
    }
    return 0;
}
